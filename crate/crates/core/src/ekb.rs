//! Quantum maximum of the `(2,k,2)` Epping-type functional from the singular
//! values of its correlation matrix `β`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functional::closed_form::ekb_beta;

/// `β_{m_1,m_2} = f(1) ω^{(m_1+m_2)/k} + c.c.`
#[derive(Debug, Clone)]
pub struct BetaMatrix {
    pub k: usize,
    pub f1: Complex64,
    pub matrix: DMatrix<f64>,
}

impl BetaMatrix {
    pub fn new(k: usize, f1: Complex64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidScenario("EKB needs k ≥ 2".into()));
        }
        let rows = ekb_beta(k, f1);
        let matrix = DMatrix::from_fn(k, k, |r, c| rows[r][c]);
        Ok(Self { k, f1, matrix })
    }

    pub fn magnitude(&self) -> f64 {
        self.f1.norm()
    }

    /// Phase `θ_f` of `f(1)`.
    pub fn theta(&self) -> f64 {
        if self.f1.norm() == 0.0 {
            0.0
        } else {
            self.f1.arg()
        }
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self
            .matrix
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    pub fn is_symmetric(&self) -> bool {
        self.matrix == self.matrix.transpose()
    }
}

/// `k · σ_max(β)`; equals `k² |f(1)|`.
pub fn ekb_quantum_max(k: usize, f1: Complex64) -> Result<f64> {
    let beta = BetaMatrix::new(k, f1)?;
    Ok(k as f64 * beta.singular_values()[0])
}
