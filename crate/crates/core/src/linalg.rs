//! Dense complex matrix helpers.

use nalgebra::DMatrix;
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `i^k` computed exactly.
pub fn i_pow(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Frobenius norm.
pub fn fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn block_diag(blocks: &[&CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r, c0), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Principal submatrix on the given index set (rows and columns).
pub fn submatrix(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn is_exact_identity(m: &CMat) -> bool {
    m.is_square()
        && m.iter()
            .enumerate()
            .all(|(k, z)| {
                let (i, j) = (k % m.nrows(), k / m.nrows());
                if i == j {
                    *z == ONE
                } else {
                    *z == ZERO
                }
            })
}

/// Hermitian residual `‖A − A*‖_F`.
pub fn hermitian_residual(a: &CMat) -> f64 {
    fro(&(a - a.adjoint()))
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() == 0 {
        return Some(zeros(0, 0));
    }
    m.clone().try_inverse()
}

pub fn from_real_rows(rows: &[Vec<f64>]) -> CMat {
    let r = rows.len();
    let cols = rows.first().map_or(0, |x| x.len());
    CMat::from_fn(r, cols, |i, j| re(rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_pow_cycles() {
        assert_eq!(i_pow(0), ONE);
        assert_eq!(i_pow(1), I);
        assert_eq!(i_pow(2), -ONE);
        assert_eq!(i_pow(-1), -I);
        assert_eq!(i_pow(7), -I);
    }

    #[test]
    fn block_diag_places_blocks() {
        let a = identity(2);
        let b = CMat::from_element(1, 1, re(3.0));
        let m = block_diag(&[&a, &b]);
        assert_eq!(m.nrows(), 3);
        assert_eq!(m[(2, 2)], re(3.0));
        assert_eq!(m[(0, 2)], ZERO);
    }
}
