//! Generalized Bell functionals.
//!
//! A functional is a complex weight `f(n⃗)` on moment vectors `n⃗ ∈ {1..d-1}^N`
//! together with a sign vector `c⃗`. It induces the real coefficient tensor
//!
//! ```text
//! g_{α⃗,m⃗} = 2 Re Σ_n⃗ f(n⃗) ω^{Σ_j c_j n_j (α_j + m_j/k)}
//! ```
//!
//! and the value `G = Σ g_{α⃗,m⃗} p(α⃗|m⃗)`, which can equally be computed from
//! the correlation tensor of the same sign vector.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correlation::{probabilities_from_correlations, CorrelationTensor};
use crate::error::{Error, Result};
use crate::format::{complex_pair, from_pair};
use crate::probability::ProbabilityTable;
use crate::scenario::{decode_digits, Scenario, SignVector};

/// Tolerance for `g` agreeing with the tensor induced by `f`.
pub const CONSISTENCY_TOL: f64 = 1e-10;

/// Complex weight `f(n⃗_c)` on the grid `{1..d-1}^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    scenario: Scenario,
    sign: SignVector,
    /// Lexicographic over `n⃗ - 1` in base `d - 1`.
    values: Vec<Complex64>,
}

impl WeightFunction {
    pub fn zeros(scenario: Scenario, sign: SignVector) -> Result<Self> {
        if sign.len() != scenario.n_parties {
            return Err(Error::ScenarioMismatch(format!(
                "sign vector {sign} for {} parties",
                scenario.n_parties
            )));
        }
        let len = scenario.check_cap(
            "weight grid",
            ((scenario.n_outcomes - 1) as u128).pow(scenario.n_parties as u32),
        )?;
        Ok(Self {
            scenario,
            sign,
            values: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    pub fn from_entries(
        scenario: Scenario,
        sign: SignVector,
        entries: &[(Vec<usize>, Complex64)],
    ) -> Result<Self> {
        let mut f = Self::zeros(scenario, sign)?;
        for (n, v) in entries {
            f.set(n, *v)?;
        }
        Ok(f)
    }

    fn index(&self, moments: &[usize]) -> Result<usize> {
        let base = self.scenario.n_outcomes - 1;
        if moments.len() != self.scenario.n_parties {
            return Err(Error::OutOfRange(format!(
                "moment vector has {} entries, expected {}",
                moments.len(),
                self.scenario.n_parties
            )));
        }
        moments.iter().try_fold(0usize, |acc, &n| {
            if n < 1 || n > base {
                Err(Error::OutOfRange(format!("moment {n} not in 1..={base}")))
            } else {
                Ok(acc * base + n - 1)
            }
        })
    }

    pub fn set(&mut self, moments: &[usize], value: Complex64) -> Result<()> {
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::Validation(format!("non-finite weight at {moments:?}")));
        }
        let i = self.index(moments)?;
        self.values[i] = value;
        Ok(())
    }

    pub fn get(&self, moments: &[usize]) -> Result<Complex64> {
        Ok(self.values[self.index(moments)?])
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn sign(&self) -> &SignVector {
        &self.sign
    }

    /// Moment vector (1-based) of flat index `i`.
    pub fn moments_of(&self, i: usize) -> Vec<usize> {
        decode_digits(i, self.scenario.n_outcomes - 1, self.scenario.n_parties)
            .into_iter()
            .map(|x| x + 1)
            .collect()
    }

    /// Nonzero entries in grid order.
    pub fn support(&self) -> Vec<(Vec<usize>, Complex64)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(i, v)| (self.moments_of(i), *v))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.norm() == 0.0)
    }

    /// `f(n, …, n)` for `n = 1..d-1` if every nonzero entry sits on a uniform
    /// moment vector.
    pub fn uniform_values(&self) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.scenario.n_outcomes - 1];
        for (n, v) in self.support() {
            if n.iter().any(|x| *x != n[0]) {
                return Err(Error::UnsupportedWeight(format!(
                    "weight has support on non-uniform moment vector {n:?}"
                )));
            }
            out[n[0] - 1] = v;
        }
        Ok(out)
    }
}

/// Real tensor `g_{α⃗,m⃗}`, laid out like [`ProbabilityTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    scenario: Scenario,
    sign: SignVector,
    values: Vec<f64>,
    imag_residue: f64,
}

impl CoefficientTensor {
    pub fn new(scenario: Scenario, sign: SignVector, values: Vec<f64>) -> Result<Self> {
        let expected = scenario.n_outcome_tuples()? * scenario.n_setting_tuples()?;
        if values.len() != expected {
            return Err(Error::Validation(format!(
                "coefficient tensor has {} entries, expected {expected}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite coefficient".into()));
        }
        Ok(Self {
            scenario,
            sign,
            values,
            imag_residue: 0.0,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn sign(&self) -> &SignVector {
        &self.sign
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest imaginary part left over when `g` was built from a weight.
    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }

    pub fn n_outcome_tuples(&self) -> usize {
        self.scenario.outcome_tuple_count() as usize
    }

    pub fn get(&self, outcomes: &[usize], settings: &[usize]) -> Result<f64> {
        let a = self.scenario.outcome_index(outcomes)?;
        let m = self.scenario.setting_index(settings)?;
        Ok(self.values[m * self.n_outcome_tuples() + a])
    }

    pub fn get_flat(&self, setting: usize, outcome: usize) -> f64 {
        self.values[setting * self.n_outcome_tuples() + outcome]
    }

    pub fn max_abs_diff(&self, other: &CoefficientTensor) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Coefficients after relabeling every outcome `α → relabel(α)`.
    pub fn relabel_outcomes(&self, relabel: impl Fn(usize) -> usize) -> Result<Self> {
        let sc = self.scenario;
        let n_out = self.n_outcome_tuples();
        let mut values = vec![0.0; self.values.len()];
        for (i, slot) in values.iter_mut().enumerate() {
            let a: Vec<usize> = decode_digits(i % n_out, sc.n_outcomes, sc.n_parties)
                .into_iter()
                .map(|x| relabel(x + 1))
                .collect();
            *slot = self.values[(i / n_out) * n_out + sc.outcome_index(&a)?];
        }
        Self::new(sc, self.sign.clone(), values)
    }
}

/// `g = 2 Re[Σ_n⃗ f(n⃗_c) ω^{n⃗_c·(α⃗ + m⃗/k)}]`, exponents evaluated exactly as
/// powers of `ζ = exp(i2π/(dk))`.
pub fn coefficients_from_weight(f: &WeightFunction) -> Result<CoefficientTensor> {
    let sc = f.scenario;
    let n_out = sc.n_outcome_tuples()?;
    let n_set = sc.n_setting_tuples()?;
    let roots = sc.roots();
    let k = sc.n_settings as i64;
    let support = f.support();
    let signed: Vec<(Vec<i64>, Complex64)> = support
        .iter()
        .map(|(n, v)| {
            let nc = n
                .iter()
                .enumerate()
                .map(|(j, x)| f.sign.get(j) * *x as i64)
                .collect();
            (nc, *v)
        })
        .collect();
    let mut values = Vec::with_capacity(n_out * n_set);
    let mut residue = 0.0f64;
    for mi in 0..n_set {
        let m = decode_digits(mi, sc.n_settings, sc.n_parties);
        for ai in 0..n_out {
            let a = decode_digits(ai, sc.n_outcomes, sc.n_parties);
            let s: Complex64 = signed
                .iter()
                .map(|(nc, v)| {
                    let x: i64 = nc
                        .iter()
                        .zip(a.iter().zip(&m))
                        .map(|(n, (alpha, setting))| {
                            n * ((*alpha as i64 + 1) * k + *setting as i64)
                        })
                        .sum();
                    v * roots.zeta_pow(x)
                })
                .sum();
            let g = s + s.conj();
            residue = residue.max(g.im.abs());
            values.push(g.re);
        }
    }
    let mut t = CoefficientTensor::new(sc, f.sign.clone(), values)?;
    t.imag_residue = residue;
    Ok(t)
}

/// Named inequalities reproduced as special cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Preset {
    Chsh,
    Cglmp { d: usize },
    Mermin { n: usize },
    Zb { n: usize, sign: SignVector },
    Ekb { k: usize, f1: [f64; 2] },
}

impl Preset {
    pub fn label(&self) -> String {
        match self {
            Preset::Chsh => "chsh".into(),
            Preset::Cglmp { d } => format!("cglmp(d={d})"),
            Preset::Mermin { n } => format!("mermin(N={n})"),
            Preset::Zb { n, sign } => format!("zb(N={n},c={sign})"),
            Preset::Ekb { k, f1 } => format!("ekb(k={k},f1={}{:+}i)", f1[0], f1[1]),
        }
    }

    pub fn build(&self) -> Result<BellFunctional> {
        match self {
            Preset::Chsh => preset_chsh(),
            Preset::Cglmp { d } => preset_cglmp(*d),
            Preset::Mermin { n } => preset_mermin(*n),
            Preset::Zb { n, sign } => preset_zb(*n, sign.clone()),
            Preset::Ekb { k, f1 } => preset_ekb(*k, from_pair(*f1)),
        }
    }
}

/// A Bell functional: coefficients `g`, plus the weight `f` that generated
/// them when known.
#[derive(Debug, Clone)]
pub struct BellFunctional {
    weight: Option<WeightFunction>,
    coefficients: CoefficientTensor,
    preset: Option<Preset>,
}

impl BellFunctional {
    pub fn from_weight(weight: WeightFunction) -> Result<Self> {
        let coefficients = coefficients_from_weight(&weight)?;
        Ok(Self {
            weight: Some(weight),
            coefficients,
            preset: None,
        })
    }

    /// Functional given only by its probability coefficients.
    pub fn from_coefficients(coefficients: CoefficientTensor) -> Self {
        Self {
            weight: None,
            coefficients,
            preset: None,
        }
    }

    /// Checks `g` against the weight-induced tensor before accepting both.
    pub fn from_parts(weight: WeightFunction, coefficients: CoefficientTensor) -> Result<Self> {
        let derived = coefficients_from_weight(&weight)?;
        derived.scenario.ensure_same(&coefficients.scenario)?;
        let diff = derived.max_abs_diff(&coefficients);
        if diff > CONSISTENCY_TOL {
            return Err(Error::Validation(format!(
                "coefficients differ from the weight-induced tensor by {diff:e}"
            )));
        }
        Ok(Self {
            weight: Some(weight),
            coefficients,
            preset: None,
        })
    }

    pub fn with_preset(mut self, preset: Preset) -> Self {
        self.preset = Some(preset);
        self
    }

    /// Same functional with a different enumeration cap.
    pub fn with_cap(mut self, cap: u64) -> Self {
        self.coefficients.scenario = self.coefficients.scenario.with_cap(cap);
        if let Some(w) = self.weight.as_mut() {
            w.scenario = w.scenario.with_cap(cap);
        }
        self
    }

    /// Random coefficients uniform in `[-1, 1]` (no weight).
    pub fn random_coefficients(scenario: Scenario, seed: u64) -> Result<Self> {
        let len = scenario.n_outcome_tuples()? * scenario.n_setting_tuples()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Ok(Self::from_coefficients(CoefficientTensor::new(
            scenario,
            SignVector::plus(scenario.n_parties),
            values,
        )?))
    }

    pub fn zero(scenario: Scenario) -> Result<Self> {
        Self::from_weight(WeightFunction::zeros(
            scenario,
            SignVector::plus(scenario.n_parties),
        )?)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.coefficients.scenario
    }

    pub fn sign(&self) -> &SignVector {
        &self.coefficients.sign
    }

    pub fn weight(&self) -> Option<&WeightFunction> {
        self.weight.as_ref()
    }

    pub fn coefficients(&self) -> &CoefficientTensor {
        &self.coefficients
    }

    pub fn preset(&self) -> Option<&Preset> {
        self.preset.as_ref()
    }

    pub fn name(&self) -> String {
        self.preset
            .as_ref()
            .map(Preset::label)
            .unwrap_or_else(|| "custom".into())
    }

    /// `G = Σ_{α⃗,m⃗} g_{α⃗,m⃗} p(α⃗|m⃗)`.
    pub fn evaluate_on_probabilities(&self, p: &ProbabilityTable) -> Result<f64> {
        self.scenario().ensure_same(p.scenario())?;
        Ok(self
            .coefficients
            .values
            .iter()
            .zip(p.values())
            .map(|(g, pr)| g * pr)
            .sum())
    }

    /// `G = Σ_n⃗ f(n⃗_c) Σ_m⃗ ω^{n⃗_c·m⃗/k} E_{n⃗_c}(m⃗) + c.c.`
    ///
    /// Functionals without a weight fall back to reconstructing the table.
    pub fn evaluate_on_correlations(&self, e: &CorrelationTensor) -> Result<f64> {
        self.scenario().ensure_same(e.scenario())?;
        let Some(f) = &self.weight else {
            let p = probabilities_from_correlations(e)?;
            return self.evaluate_on_probabilities(&p);
        };
        if e.sign() != &f.sign {
            return Err(Error::ScenarioMismatch(format!(
                "tensor sign {} differs from functional sign {}",
                e.sign(),
                f.sign
            )));
        }
        let sc = f.scenario;
        let roots = sc.roots();
        let n_set = sc.setting_tuple_count() as usize;
        let settings: Vec<Vec<usize>> = (0..n_set)
            .map(|mi| decode_digits(mi, sc.n_settings, sc.n_parties))
            .collect();
        let mut total = Complex64::new(0.0, 0.0);
        for (n, v) in f.support() {
            let moment = e.moment_index(&n)?;
            let nc: Vec<i64> = n
                .iter()
                .enumerate()
                .map(|(j, x)| f.sign.get(j) * *x as i64)
                .collect();
            let inner: Complex64 = settings
                .iter()
                .enumerate()
                .map(|(mi, m)| {
                    let x: i64 = nc.iter().zip(m).map(|(a, b)| a * *b as i64).sum();
                    roots.zeta_pow(x) * e.get_flat(mi, moment)
                })
                .sum();
            total += v * inner;
        }
        Ok((total + total.conj()).re)
    }

    pub fn to_json(&self) -> FunctionalJson {
        let sc = *self.scenario();
        let n_out = self.coefficients.n_outcome_tuples();
        let g = (0..sc.setting_tuple_count() as usize)
            .map(|mi| {
                (
                    setting_key(&decode_digits(mi, sc.n_settings, sc.n_parties)),
                    self.coefficients.values[mi * n_out..(mi + 1) * n_out].to_vec(),
                )
            })
            .collect();
        FunctionalJson {
            scenario: sc,
            sign: self.sign().clone(),
            preset: self.preset.clone(),
            f: self.weight.as_ref().map(|w| {
                w.support()
                    .into_iter()
                    .map(|(moments, v)| WeightEntry {
                        moments,
                        value: complex_pair(v),
                    })
                    .collect()
            }),
            g: Some(g),
        }
    }

    /// Accepts `f`, `g`, or both (checked for consistency).
    pub fn from_json(json: &FunctionalJson) -> Result<Self> {
        let sc = json.scenario;
        let sc = Scenario::new(sc.n_parties, sc.n_settings, sc.n_outcomes)?;
        if json.sign.len() != sc.n_parties {
            return Err(Error::Validation(format!(
                "sign vector {} for {} parties",
                json.sign, sc.n_parties
            )));
        }
        let weight = match &json.f {
            Some(entries) => {
                let entries: Vec<(Vec<usize>, Complex64)> = entries
                    .iter()
                    .map(|e| (e.moments.clone(), from_pair(e.value)))
                    .collect();
                Some(WeightFunction::from_entries(sc, json.sign.clone(), &entries)?)
            }
            None => None,
        };
        let coefficients = match &json.g {
            Some(g) => {
                let n_out = sc.n_outcome_tuples()?;
                let n_set = sc.n_setting_tuples()?;
                if g.len() != n_set {
                    return Err(Error::Parse(format!(
                        "g has {} setting tuples, expected {n_set}",
                        g.len()
                    )));
                }
                let mut values = vec![0.0; n_out * n_set];
                for (key, block) in g {
                    let m = parse_setting_key(key)?;
                    let mi = sc.setting_index(&m)?;
                    if block.len() != n_out {
                        return Err(Error::Parse(format!(
                            "g['{key}'] has {} entries, expected {n_out}",
                            block.len()
                        )));
                    }
                    values[mi * n_out..(mi + 1) * n_out].copy_from_slice(block);
                }
                Some(CoefficientTensor::new(sc, json.sign.clone(), values)?)
            }
            None => None,
        };
        let functional = match (weight, coefficients) {
            (Some(w), Some(g)) => Self::from_parts(w, g)?,
            (Some(w), None) => Self::from_weight(w)?,
            (None, Some(g)) => Self::from_coefficients(g),
            (None, None) => {
                return Err(Error::Validation(
                    "functional needs a weight 'f' or coefficients 'g'".into(),
                ))
            }
        };
        Ok(match &json.preset {
            Some(p) => functional.with_preset(p.clone()),
            None => functional,
        })
    }
}

fn setting_key(m: &[usize]) -> String {
    m.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_setting_key(key: &str) -> Result<Vec<usize>> {
    key.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad setting key '{key}'")))
        })
        .collect()
}

/// Serialized functional. `g` is keyed by setting tuple like probability
/// tables; `f` lists nonzero weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalJson {
    pub scenario: Scenario,
    pub sign: SignVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<WeightEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<BTreeMap<String, Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightEntry {
    pub moments: Vec<usize>,
    pub value: [f64; 2],
}

fn build_preset(
    scenario: Scenario,
    sign: SignVector,
    entries: &[(Vec<usize>, Complex64)],
    preset: Preset,
) -> Result<BellFunctional> {
    let f = WeightFunction::from_entries(scenario, sign, entries)?;
    Ok(BellFunctional::from_weight(f)?.with_preset(preset))
}

/// CHSH, `(2,2,2)`: `f(1,1) = (1-i)/2`.
pub fn preset_chsh() -> Result<BellFunctional> {
    build_preset(
        Scenario::new(2, 2, 2)?,
        SignVector::plus(2),
        &[(vec![1, 1], Complex64::new(0.5, -0.5))],
        Preset::Chsh,
    )
}

/// CGLMP weight `f(n, -n) = (1/2)/(d-1) · sec(nπ/2d) · ω^{n/4}`.
pub fn cglmp_weight_value(d: usize, n: usize) -> Complex64 {
    let magnitude = 0.5 / (d as f64 - 1.0) / (n as f64 * PI / (2.0 * d as f64)).cos();
    magnitude * Complex64::cis(2.0 * PI * n as f64 / (4.0 * d as f64))
}

/// CGLMP, `(2,2,d)`.
///
/// The second party's moment `-n` is carried by the sign vector `(+,-)`, so
/// the weight sits on the uniform vectors `(n, n)`.
pub fn preset_cglmp(d: usize) -> Result<BellFunctional> {
    if d < 2 {
        return Err(Error::InvalidScenario("CGLMP needs d ≥ 2".into()));
    }
    let entries: Vec<(Vec<usize>, Complex64)> = (1..d)
        .map(|n| (vec![n, n], cglmp_weight_value(d, n)))
        .collect();
    build_preset(
        Scenario::new(2, 2, d)?,
        SignVector::new(vec![1, -1])?,
        &entries,
        Preset::Cglmp { d },
    )
}

/// Mermin, `(N,2,2)`: `f(1,…,1) = 1/2`.
pub fn preset_mermin(n: usize) -> Result<BellFunctional> {
    if n < 2 {
        return Err(Error::InvalidScenario("Mermin needs N ≥ 2".into()));
    }
    build_preset(
        Scenario::new(n, 2, 2)?,
        SignVector::plus(n),
        &[(vec![1; n], Complex64::new(0.5, 0.0))],
        Preset::Mermin { n },
    )
}

/// Żukowski–Brukner full-correlation functional for sign vector `c⃗`:
/// `f(1,…,1) = (1-i)/2`.
pub fn preset_zb(n: usize, sign: SignVector) -> Result<BellFunctional> {
    if n < 2 {
        return Err(Error::InvalidScenario("ZB needs N ≥ 2".into()));
    }
    if sign.len() != n {
        return Err(Error::Validation(format!(
            "sign vector {sign} for {n} parties"
        )));
    }
    build_preset(
        Scenario::new(n, 2, 2)?,
        sign.clone(),
        &[(vec![1; n], Complex64::new(0.5, -0.5))],
        Preset::Zb { n, sign },
    )
}

/// Epping-type `(2,k,2)` functional with arbitrary complex `f(1)`.
pub fn preset_ekb(k: usize, f1: Complex64) -> Result<BellFunctional> {
    if k < 2 {
        return Err(Error::InvalidScenario("EKB needs k ≥ 2".into()));
    }
    build_preset(
        Scenario::new(2, k, 2)?,
        SignVector::plus(2),
        &[(vec![1, 1], f1)],
        Preset::Ekb {
            k,
            f1: complex_pair(f1),
        },
    )
}

/// Closed-form coefficient formulas for the named inequalities, written
/// directly rather than through the weight transform.
pub mod closed_form {
    use super::*;

    fn fill(
        scenario: Scenario,
        sign: SignVector,
        g: impl Fn(&[usize], &[usize]) -> f64,
    ) -> Result<CoefficientTensor> {
        let n_out = scenario.n_outcome_tuples()?;
        let n_set = scenario.n_setting_tuples()?;
        let mut values = Vec::with_capacity(n_out * n_set);
        for mi in 0..n_set {
            let m = decode_digits(mi, scenario.n_settings, scenario.n_parties);
            for ai in 0..n_out {
                let a: Vec<usize> = decode_digits(ai, scenario.n_outcomes, scenario.n_parties)
                    .into_iter()
                    .map(|x| x + 1)
                    .collect();
                values.push(g(&a, &m));
            }
        }
        CoefficientTensor::new(scenario, sign, values)
    }

    fn parity(x: i64) -> f64 {
        if x.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `Re[i^x]`.
    fn re_i_pow(x: i64) -> f64 {
        match x.rem_euclid(4) {
            0 => 1.0,
            2 => -1.0,
            _ => 0.0,
        }
    }

    /// `(-1)^{α_1+α_2+m_1 m_2}`.
    pub fn chsh() -> Result<CoefficientTensor> {
        fill(Scenario::new(2, 2, 2)?, SignVector::plus(2), |a, m| {
            parity((a[0] + a[1] + m[0] * m[1]) as i64)
        })
    }

    /// `z(0,1) = 1`, zero otherwise.
    pub fn cglmp_z(m1: usize, m2: usize) -> i64 {
        i64::from(m1 == 0 && m2 == 1)
    }

    /// `(-1)^{m_1-m_2} Σ_{j=0}^{d-1} (1 - 2j/(d-1)) δ^d(α_2 - α_1 - j - z(m_1,m_2))`.
    pub fn cglmp(d: usize) -> Result<CoefficientTensor> {
        fill(
            Scenario::new(2, 2, d)?,
            SignVector::new(vec![1, -1])?,
            |a, m| {
                let shift = a[1] as i64 - a[0] as i64 - cglmp_z(m[0], m[1]);
                let j = shift.rem_euclid(d as i64) as f64;
                parity(m[0] as i64 - m[1] as i64) * (1.0 - 2.0 * j / (d as f64 - 1.0))
            },
        )
    }

    /// `(-1)^{Σα_j} Re[i^{Σm_j}]`.
    pub fn mermin(n: usize) -> Result<CoefficientTensor> {
        fill(Scenario::new(n, 2, 2)?, SignVector::plus(n), |a, m| {
            parity(a.iter().sum::<usize>() as i64) * re_i_pow(m.iter().sum::<usize>() as i64)
        })
    }

    /// `(-1)^{Σ c_j α_j} Re[(1-i) i^{Σ c_j m_j}]`.
    pub fn zb(sign: &SignVector) -> Result<CoefficientTensor> {
        let n = sign.len();
        fill(Scenario::new(n, 2, 2)?, sign.clone(), |a, m| {
            let sa: i64 = (0..n).map(|j| sign.get(j) * a[j] as i64).sum();
            let sm: i64 = (0..n).map(|j| sign.get(j) * m[j] as i64).sum();
            let z = Complex64::new(1.0, -1.0) * Complex64::i().powi(sm.rem_euclid(4) as i32);
            parity(sa) * z.re.round()
        })
    }

    /// Parity `P(m⃗) = +1` if `Σm_j mod 4 ∈ {0,1}`, else `-1`.
    pub fn zb_parity(settings: &[usize]) -> f64 {
        if settings.iter().sum::<usize>() % 4 < 2 {
            1.0
        } else {
            -1.0
        }
    }

    /// `β_{m_1,m_2} = f(1) ω^{(m_1+m_2)/k} + c.c.` with `ω = -1`.
    pub fn ekb_beta(k: usize, f1: Complex64) -> Vec<Vec<f64>> {
        (0..k)
            .map(|m1| {
                (0..k)
                    .map(|m2| {
                        let z = f1 * Complex64::cis(PI * (m1 + m2) as f64 / k as f64);
                        2.0 * z.re
                    })
                    .collect()
            })
            .collect()
    }

    /// `(-1)^{α_1+α_2} β_{m_1,m_2}`.
    pub fn ekb(k: usize, f1: Complex64) -> Result<CoefficientTensor> {
        let beta = ekb_beta(k, f1);
        fill(Scenario::new(2, k, 2)?, SignVector::plus(2), |a, m| {
            parity((a[0] + a[1]) as i64) * beta[m[0]][m[1]]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::correlations_from_probabilities;
    use crate::probability::{random_table, table_from_strategy, DeterministicStrategy};

    #[test]
    fn chsh_weight_gives_closed_form() {
        let b = preset_chsh().unwrap();
        let closed = closed_form::chsh().unwrap();
        assert!(b.coefficients().max_abs_diff(&closed) <= 1e-12);
        assert!(b.coefficients().imag_residue() <= 1e-12);
        // explicit spot check: (α, m) = ((1,2),(1,1)) → (-1)^{1+2+1} = +1
        assert_eq!(closed.get(&[1, 2], &[1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn zero_weight_zero_coefficients() {
        let s = Scenario::new(2, 3, 3).unwrap();
        let b = BellFunctional::zero(s).unwrap();
        assert!(b.coefficients().values().iter().all(|g| *g == 0.0));
        let p = random_table(s, 2).unwrap();
        assert_eq!(b.evaluate_on_probabilities(&p).unwrap(), 0.0);
    }

    #[test]
    fn cglmp_matches_closed_form_up_to_outcome_reflection() {
        for d in 2..=6 {
            let b = preset_cglmp(d).unwrap();
            let closed = closed_form::cglmp(d).unwrap();
            // α → -α (mod d), written in 1..=d
            let reflected = closed
                .relabel_outcomes(|a| if a == d { d } else { d - a })
                .unwrap();
            assert!(
                b.coefficients().max_abs_diff(&reflected) <= 1e-10,
                "d={d}: {}",
                b.coefficients().max_abs_diff(&reflected)
            );
            if d == 2 {
                assert!(b.coefficients().max_abs_diff(&closed) <= 1e-10);
            }
        }
    }

    #[test]
    fn mermin_and_zb_and_ekb_closed_forms() {
        for n in 2..=4 {
            let b = preset_mermin(n).unwrap();
            assert!(b.coefficients().max_abs_diff(&closed_form::mermin(n).unwrap()) <= 1e-12);
            for sign in SignVector::all(n) {
                let b = preset_zb(n, sign.clone()).unwrap();
                assert!(b.coefficients().max_abs_diff(&closed_form::zb(&sign).unwrap()) <= 1e-12);
            }
        }
        for k in 2..=5 {
            for f1 in [Complex64::new(0.5, 0.0), Complex64::new(0.3, -0.7)] {
                let b = preset_ekb(k, f1).unwrap();
                assert!(b.coefficients().max_abs_diff(&closed_form::ekb(k, f1).unwrap()) <= 1e-12);
            }
        }
    }

    #[test]
    fn zb_parity_values() {
        assert_eq!(closed_form::zb_parity(&[0, 0]), 1.0);
        assert_eq!(closed_form::zb_parity(&[0, 1]), 1.0);
        assert_eq!(closed_form::zb_parity(&[1, 1]), -1.0);
        assert_eq!(closed_form::zb_parity(&[1, 1, 1]), -1.0);
        assert_eq!(closed_form::zb_parity(&[1, 1, 1, 1]), 1.0);
    }

    #[test]
    fn ekb_beta_symmetric() {
        let beta = closed_form::ekb_beta(3, Complex64::new(0.5, 0.0));
        for (i, row) in beta.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, beta[j][i]);
            }
        }
        // β_{0,0} = 2 Re f(1) = 1
        assert!((beta[0][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chsh_on_constant_strategy() {
        let b = preset_chsh().unwrap();
        let s = DeterministicStrategy::new(*b.scenario(), vec![1, 1, 1, 1]).unwrap();
        let p = table_from_strategy(&s);
        assert!((b.evaluate_on_probabilities(&p).unwrap() - 2.0).abs() < 1e-12);
        let e = correlations_from_probabilities(&p, b.sign()).unwrap();
        assert!((b.evaluate_on_correlations(&e).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn both_forms_agree() {
        let presets = vec![
            preset_chsh().unwrap(),
            preset_cglmp(3).unwrap(),
            preset_mermin(3).unwrap(),
            preset_zb(3, SignVector::from_index(3, 6).unwrap()).unwrap(),
            preset_ekb(3, Complex64::new(0.2, 0.4)).unwrap(),
        ];
        for b in presets {
            for seed in 0..10 {
                let p = random_table(*b.scenario(), seed).unwrap();
                let e = correlations_from_probabilities(&p, b.sign()).unwrap();
                let a = b.evaluate_on_probabilities(&p).unwrap();
                let c = b.evaluate_on_correlations(&e).unwrap();
                assert!((a - c).abs() <= 1e-10, "{}: {a} vs {c}", b.name());
            }
        }
    }

    #[test]
    fn correlation_form_ignores_unused_moments() {
        let s = Scenario::new(2, 2, 3).unwrap();
        let f = WeightFunction::from_entries(
            s,
            SignVector::plus(2),
            &[(vec![2, 2], Complex64::new(0.3, 0.1))],
        )
        .unwrap();
        let b = BellFunctional::from_weight(f).unwrap();
        let p = random_table(s, 4).unwrap();
        let e = correlations_from_probabilities(&p, b.sign()).unwrap();
        let base = b.evaluate_on_correlations(&e).unwrap();
        let mut values = e.values().to_vec();
        let target = e.moment_index(&[2, 2]).unwrap();
        for (i, v) in values.iter_mut().enumerate() {
            if i % 9 != target {
                *v = Complex64::new(7.0, -3.0);
            }
        }
        let tampered = CorrelationTensor::new(s, b.sign().clone(), values).unwrap();
        assert!((b.evaluate_on_correlations(&tampered).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn zb_matches_parity_sum() {
        for sign in SignVector::all(2) {
            let b = preset_zb(2, sign.clone()).unwrap();
            for seed in 0..5 {
                let p = random_table(*b.scenario(), seed).unwrap();
                let e = correlations_from_probabilities(&p, &SignVector::plus(2)).unwrap();
                let mut expected = 0.0;
                for m in b.scenario().enumerate_setting_tuples().unwrap() {
                    let cm: f64 = (0..2)
                        .map(|j| if m[j] == 1 { sign.get(j) as f64 } else { 1.0 })
                        .product();
                    // d = 2: E_{(1,1)} is real
                    expected += closed_form::zb_parity(&m) * cm * e.get(&[1, 1], &m).unwrap().re;
                }
                let got = b.evaluate_on_probabilities(&p).unwrap();
                assert!((got - expected).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn sign_mismatch_rejected() {
        let b = preset_chsh().unwrap();
        let p = random_table(*b.scenario(), 0).unwrap();
        let e = correlations_from_probabilities(&p, &SignVector::new(vec![1, -1]).unwrap())
            .unwrap();
        assert!(b.evaluate_on_correlations(&e).is_err());
        let other = random_table(Scenario::new(2, 2, 3).unwrap(), 0).unwrap();
        assert!(matches!(
            b.evaluate_on_probabilities(&other),
            Err(Error::ScenarioMismatch(_))
        ));
    }

    #[test]
    fn invalid_preset_parameters() {
        assert!(preset_cglmp(1).is_err());
        assert!(preset_mermin(1).is_err());
        assert!(preset_ekb(1, Complex64::new(0.5, 0.0)).is_err());
        assert!(preset_zb(3, SignVector::plus(2)).is_err());
    }

    #[test]
    fn json_round_trip_and_consistency_check() {
        let b = preset_cglmp(3).unwrap();
        let json = b.to_json();
        let text = serde_json::to_string(&json).unwrap();
        let back = BellFunctional::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.preset(), b.preset());
        assert!(back.coefficients().max_abs_diff(b.coefficients()) == 0.0);

        let mut bad = json.clone();
        if let Some(g) = bad.g.as_mut() {
            g.get_mut("0,0").unwrap()[0] += 0.5;
        }
        assert!(BellFunctional::from_json(&bad).is_err());

        let mut g_only = json;
        g_only.f = None;
        let b2 = BellFunctional::from_json(&g_only).unwrap();
        assert!(b2.weight().is_none());
    }

    #[test]
    fn uniform_support_detection() {
        let b = preset_cglmp(4).unwrap();
        let u = b.weight().unwrap().uniform_values().unwrap();
        assert_eq!(u.len(), 3);
        let s = Scenario::new(2, 2, 3).unwrap();
        let f = WeightFunction::from_entries(
            s,
            SignVector::plus(2),
            &[(vec![1, 2], Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        assert!(matches!(f.uniform_values(), Err(Error::UnsupportedWeight(_))));
    }
}
