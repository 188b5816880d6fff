use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by every module.
///
/// `sym`, `inv`, `id` and `chain` are relative: a residual passes when it is
/// at most `tol * max(scale, 1)` where `scale` is the Frobenius norm of the
/// operator under test. `inv` is compared against the spectral norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub sym: f64,
    pub inv: f64,
    pub pd: f64,
    pub chain: f64,
    pub id: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sym: 1e-10,
            inv: 1e-8,
            pd: 1e-12,
            chain: 1e-12,
            id: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn sym_bound(&self, scale: f64) -> f64 {
        self.sym * scale.max(1.0)
    }

    pub fn chain_bound(&self, scale: f64) -> f64 {
        self.chain * scale.max(1.0)
    }

    pub fn id_bound(&self, scale: f64) -> f64 {
        self.id * scale.max(1.0)
    }
}
