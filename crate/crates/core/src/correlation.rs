//! Fourier bijection between probability tables and complex correlation
//! tensors `E_{n⃗_c}(m⃗) = Σ_α⃗ ω^{n⃗_c·α⃗} p(α⃗|m⃗)`.
//!
//! The moment grid keeps `n_j ∈ 1..=d`, so the all-`d` entry (identically 1)
//! is stored and the inverse sums over the full grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{complex_pair, from_pair};
use crate::probability::ProbabilityTable;
use crate::scenario::{decode_digits, Scenario, SignVector};

/// Reconstructed entries below this are reported as an inconsistent tensor.
pub const INVERSE_NEGATIVE_TOL: f64 = 1e-9;

/// `E_{n⃗_c}(m⃗)` for `n⃗ ∈ {1..d}^N` and all setting tuples.
///
/// Storage is setting-major: `setting_index(m⃗) · d^N + moment_index(n⃗)`,
/// where `moment_index` is the lexicographic index of `n⃗ - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTensor {
    scenario: Scenario,
    sign: SignVector,
    values: Vec<Complex64>,
}

impl CorrelationTensor {
    pub fn new(scenario: Scenario, sign: SignVector, values: Vec<Complex64>) -> Result<Self> {
        if sign.len() != scenario.n_parties {
            return Err(Error::ScenarioMismatch(format!(
                "sign vector {sign} for {} parties",
                scenario.n_parties
            )));
        }
        let expected = scenario.n_outcome_tuples()? * scenario.n_setting_tuples()?;
        if values.len() != expected {
            return Err(Error::Validation(format!(
                "tensor has {} entries, expected {expected}",
                values.len()
            )));
        }
        Ok(Self {
            scenario,
            sign,
            values,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn sign(&self) -> &SignVector {
        &self.sign
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn n_moments(&self) -> usize {
        self.scenario.outcome_tuple_count() as usize
    }

    /// Flat index of a 1-based moment vector.
    pub fn moment_index(&self, moments: &[usize]) -> Result<usize> {
        // same digit layout as outcome tuples
        self.scenario.outcome_index(moments)
    }

    /// `E_{n⃗_c}(m⃗)` with `n_j ∈ 1..=d`, `m_j ∈ 0..k`.
    pub fn get(&self, moments: &[usize], settings: &[usize]) -> Result<Complex64> {
        let n = self.moment_index(moments)?;
        let m = self.scenario.setting_index(settings)?;
        Ok(self.values[m * self.n_moments() + n])
    }

    pub fn get_flat(&self, setting: usize, moment: usize) -> Complex64 {
        self.values[setting * self.n_moments() + moment]
    }

    /// Largest `|E| - 1` (positive means the bound `|E| ≤ 1` is broken) and the
    /// largest deviation of the all-`d` moment from 1.
    pub fn invariant_residuals(&self) -> (f64, f64) {
        let n_mom = self.n_moments();
        let excess = self
            .values
            .iter()
            .map(|z| z.norm() - 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        let dc = self
            .values
            .chunks(n_mom)
            .map(|block| (block[n_mom - 1] - Complex64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max);
        (excess, dc)
    }

    pub fn max_abs_diff(&self, other: &CorrelationTensor) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> TensorJson {
        let sc = self.scenario;
        let n_mom = self.n_moments();
        let entries = self
            .values
            .iter()
            .enumerate()
            .map(|(i, z)| TensorEntry {
                settings: decode_digits(i / n_mom, sc.n_settings, sc.n_parties),
                moments: decode_digits(i % n_mom, sc.n_outcomes, sc.n_parties)
                    .into_iter()
                    .map(|x| x + 1)
                    .collect(),
                value: complex_pair(*z),
            })
            .collect();
        TensorJson {
            scenario: sc,
            sign: self.sign.clone(),
            entries,
        }
    }

    pub fn from_json(json: &TensorJson) -> Result<Self> {
        let sc = json.scenario;
        Scenario::new(sc.n_parties, sc.n_settings, sc.n_outcomes)?;
        let n_mom = sc.n_outcome_tuples()?;
        let total = n_mom * sc.n_setting_tuples()?;
        if json.entries.len() != total {
            return Err(Error::Parse(format!(
                "tensor has {} entries, expected {total}",
                json.entries.len()
            )));
        }
        let mut values = vec![Complex64::new(f64::NAN, 0.0); total];
        for e in &json.entries {
            let i = sc.setting_index(&e.settings)? * n_mom + sc.outcome_index(&e.moments)?;
            values[i] = from_pair(e.value);
        }
        if values.iter().any(|z| z.re.is_nan()) {
            return Err(Error::Parse("tensor JSON has duplicate or missing entries".into()));
        }
        Self::new(sc, json.sign.clone(), values)
    }
}

/// JSON layout of a correlation tensor; complex values as `[re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorJson {
    pub scenario: Scenario,
    pub sign: SignVector,
    pub entries: Vec<TensorEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorEntry {
    pub settings: Vec<usize>,
    pub moments: Vec<usize>,
    pub value: [f64; 2],
}

/// `Σ_j c_j n_j α_j` with 1-based digits recovered from 0-based flat indices.
fn phase_exponent(
    moment_digits: &[usize],
    outcome_digits: &[usize],
    sign: &SignVector,
) -> i64 {
    moment_digits
        .iter()
        .zip(outcome_digits)
        .enumerate()
        .map(|(j, (n, a))| sign.get(j) * (*n as i64 + 1) * (*a as i64 + 1))
        .sum()
}

/// Forward transform.
pub fn correlations_from_probabilities(
    p: &ProbabilityTable,
    sign: &SignVector,
) -> Result<CorrelationTensor> {
    let sc = *p.scenario();
    if sign.len() != sc.n_parties {
        return Err(Error::ScenarioMismatch(format!(
            "sign vector {sign} for {} parties",
            sc.n_parties
        )));
    }
    let roots = sc.roots();
    let d = sc.n_outcomes;
    let n_out = p.n_outcome_tuples();
    let digits: Vec<Vec<usize>> = (0..n_out)
        .map(|i| decode_digits(i, d, sc.n_parties))
        .collect();
    // phase[n][a] = ω^{n⃗_c·α⃗}
    let phase: Vec<Vec<Complex64>> = digits
        .iter()
        .map(|n| {
            digits
                .iter()
                .map(|a| roots.omega_pow(phase_exponent(n, a, sign)))
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(n_out * p.n_setting_tuples());
    for mi in 0..p.n_setting_tuples() {
        let block = p.setting_block(mi);
        for row in &phase {
            let e: Complex64 = row.iter().zip(block).map(|(w, pr)| w * pr).sum();
            values.push(e);
        }
    }
    CorrelationTensor::new(sc, sign.clone(), values)
}

/// Inverse transform `p = d^{-N} Σ_n⃗ ω^{-n⃗_c·α⃗} E_{n⃗_c}(m⃗)`.
///
/// Imaginary parts are dropped; entries in `[-1e-9, 0)` are clamped to zero
/// and anything more negative is an error.
pub fn probabilities_from_correlations(e: &CorrelationTensor) -> Result<ProbabilityTable> {
    let sc = *e.scenario();
    let roots = sc.roots();
    let d = sc.n_outcomes;
    let n_out = e.n_moments();
    let scale = 1.0 / n_out as f64;
    let digits: Vec<Vec<usize>> = (0..n_out)
        .map(|i| decode_digits(i, d, sc.n_parties))
        .collect();
    let phase: Vec<Vec<Complex64>> = digits
        .iter()
        .map(|a| {
            digits
                .iter()
                .map(|n| roots.omega_pow(-phase_exponent(n, a, &e.sign)))
                .collect()
        })
        .collect();
    let n_set = sc.setting_tuple_count() as usize;
    let mut values = Vec::with_capacity(n_out * n_set);
    for mi in 0..n_set {
        let block = &e.values[mi * n_out..(mi + 1) * n_out];
        for (ai, row) in phase.iter().enumerate() {
            let s: Complex64 = row.iter().zip(block).map(|(w, z)| w * z).sum();
            let mut v = s.re * scale;
            if v < 0.0 {
                if v < -INVERSE_NEGATIVE_TOL {
                    return Err(Error::InconsistentTensor {
                        value: v,
                        setting: mi,
                        outcome: ai,
                    });
                }
                v = 0.0;
            }
            values.push(v);
        }
    }
    ProbabilityTable::new(sc, values)
}
