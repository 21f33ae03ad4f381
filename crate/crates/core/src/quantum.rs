//! Quantum side: Fourier-type measurement bases, the truncated ladder
//! operator, phase-shift conjugation, and Bell values on maximally entangled
//! states.
//!
//! Conventions. Computational basis states are `|1⟩..|d⟩`. The phase shift is
//! `P_ν = diag(ω^{να})`, for which `P_ν† J^n P_ν = ω^{νn} J^n`; the sign is
//! re-derived numerically by [`conjugation_sign`]. Phase indices `ν` are
//! real: the value only depends on `Φ = Σ_j c_j ν_j`, and integer `Φ` alone
//! cannot reach the maximum for weights such as CHSH's `(1-i)/2`.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::complex_pair;
use crate::functional::BellFunctional;
use crate::lhv::{exact_lhv_bound, BoundMethod};
use crate::probability::ProbabilityTable;
use crate::scenario::{decode_digits, RootOfUnity, Scenario, SignVector};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Pure state on `(C^d)^{⊗N}`, amplitudes in lexicographic basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    scenario: Scenario,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(scenario: Scenario, amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = scenario.n_outcome_tuples()?;
        if amplitudes.len() != dim {
            return Err(Error::Validation(format!(
                "state has {} amplitudes, expected {dim}",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("state norm is {norm}")));
        }
        Ok(Self {
            scenario,
            amplitudes,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &[Complex64]) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `⟨ψ| ⊗_j O_j |ψ⟩` with one `d×d` operator per site.
    pub fn expectation(&self, ops: &[CMatrix]) -> Complex64 {
        let mut phi = self.amplitudes.clone();
        for (site, op) in ops.iter().enumerate() {
            phi = apply_local(&phi, op, site, &self.scenario);
        }
        self.inner(&phi)
    }
}

/// Applies `op` to one tensor factor without forming the full operator.
pub fn apply_local(
    state: &[Complex64],
    op: &CMatrix,
    site: usize,
    scenario: &Scenario,
) -> Vec<Complex64> {
    let d = scenario.n_outcomes;
    let stride = d.pow((scenario.n_parties - 1 - site) as u32);
    let mut out = vec![ZERO; state.len()];
    for (idx, amp) in state.iter().enumerate() {
        if *amp == ZERO {
            continue;
        }
        let b = (idx / stride) % d;
        let base = idx - b * stride;
        for a in 0..d {
            let entry = op[(a, b)];
            if entry != ZERO {
                out[base + a * stride] += entry * amp;
            }
        }
    }
    out
}

/// `|ψ⟩ = d^{-1/2} Σ_α |α⟩^{⊗N}`.
pub fn maximally_entangled_state(scenario: Scenario) -> Result<StateVector> {
    maximally_entangled_state_for_sign(scenario, &SignVector::plus(scenario.n_parties))
}

/// Maximally entangled state matched to a sign vector: parties with
/// `c_j = -1` hold the reflected level `d + 1 - α`. For uniform moment
/// vectors this gives `⟨⊗_j L_j⟩ = 1 - n/d`, where `L_j` is `J^n` or its
/// adjoint according to `c_j`.
pub fn maximally_entangled_state_for_sign(
    scenario: Scenario,
    sign: &SignVector,
) -> Result<StateVector> {
    if sign.len() != scenario.n_parties {
        return Err(Error::ScenarioMismatch(format!(
            "sign vector {sign} for {} parties",
            scenario.n_parties
        )));
    }
    let d = scenario.n_outcomes;
    let mut amplitudes = vec![ZERO; scenario.n_outcome_tuples()?];
    let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    for alpha in 0..d {
        let idx = (0..scenario.n_parties).fold(0, |acc, j| {
            let level = if sign.get(j) > 0 { alpha } else { d - 1 - alpha };
            acc * d + level
        });
        amplitudes[idx] = amp;
    }
    StateVector::new(scenario, amplitudes)
}

/// `|A_α(m)⟩ = d^{-1/2} Σ_β ω^{β(α + m/k)} |β⟩`.
pub fn measurement_basis(scenario: &Scenario, setting: usize, outcome: usize) -> Result<Vec<Complex64>> {
    measurement_basis_shifted(scenario, setting, outcome, 0.0)
}

/// `P_ν† |A_α(m)⟩`: the basis vector after a local phase shift.
pub fn measurement_basis_shifted(
    scenario: &Scenario,
    setting: usize,
    outcome: usize,
    nu: f64,
) -> Result<Vec<Complex64>> {
    let (d, k) = (scenario.n_outcomes, scenario.n_settings);
    if setting >= k {
        return Err(Error::OutOfRange(format!("setting {setting} not in 0..{k}")));
    }
    if outcome < 1 || outcome > d {
        return Err(Error::OutOfRange(format!("outcome {outcome} not in 1..={d}")));
    }
    let roots = scenario.roots();
    let norm = 1.0 / (d as f64).sqrt();
    Ok((1..=d)
        .map(|beta| {
            let x = (beta * (outcome * k + setting)) as i64;
            norm * roots.zeta_pow(x) * roots.omega_real(-nu * beta as f64)
        })
        .collect())
}

/// `Â(m) = Σ_α ω^α |A_α(m)⟩⟨A_α(m)|` for one site and setting.
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    pub site: usize,
    pub setting: usize,
    pub nu: f64,
    basis: Vec<Vec<Complex64>>,
    pub matrix: CMatrix,
}

impl MeasurementOperator {
    pub fn new(scenario: &Scenario, site: usize, setting: usize, nu: f64) -> Result<Self> {
        if site >= scenario.n_parties {
            return Err(Error::OutOfRange(format!("site {site} not in 0..{}", scenario.n_parties)));
        }
        let basis = (1..=scenario.n_outcomes)
            .map(|a| measurement_basis_shifted(scenario, setting, a, nu))
            .collect::<Result<Vec<_>>>()?;
        let mut op = Self {
            site,
            setting,
            nu,
            basis,
            matrix: CMatrix::zeros(scenario.n_outcomes, scenario.n_outcomes),
        };
        op.matrix = op.power(1, &scenario.roots());
        Ok(op)
    }

    /// `Â^n = Σ_α ω^{nα} |A_α⟩⟨A_α|`, exact for negative `n` too.
    pub fn power(&self, n: i64, roots: &RootOfUnity) -> CMatrix {
        let d = self.basis.len();
        let mut m = CMatrix::zeros(d, d);
        for (a, v) in self.basis.iter().enumerate() {
            let w = roots.omega_pow(n * (a as i64 + 1));
            for r in 0..d {
                for c in 0..d {
                    m[(r, c)] += w * v[r] * v[c].conj();
                }
            }
        }
        m
    }

    pub fn basis(&self) -> &[Vec<Complex64>] {
        &self.basis
    }
}

/// Truncated lowering operator `J^n = Σ_β |β⟩⟨β+n|` (no wraparound).
pub fn ladder(d: usize, n: usize) -> CMatrix {
    let mut j = CMatrix::zeros(d, d);
    for beta in 0..d.saturating_sub(n) {
        j[(beta, beta + n)] = ONE;
    }
    j
}

/// `P_ν = diag(ω^{να})`, `α = 1..d`.
#[derive(Debug, Clone)]
pub struct PhaseShift {
    pub d: usize,
    pub nu: f64,
}

impl PhaseShift {
    pub fn new(d: usize, nu: f64) -> Self {
        Self { d, nu }
    }

    pub fn matrix(&self) -> CMatrix {
        let roots = RootOfUnity::new(self.d, 1);
        CMatrix::from_fn(self.d, self.d, |r, c| {
            if r == c {
                roots.omega_real(self.nu * (r + 1) as f64)
            } else {
                ZERO
            }
        })
    }
}

fn max_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Sign `σ` with `P_ν† J^n P_ν = ω^{σνn} J^n`, found by direct matrix check.
/// Returns the sign and the residual of the better fit.
pub fn conjugation_sign(d: usize, n: usize, nu: f64) -> (i8, f64) {
    let p = PhaseShift::new(d, nu).matrix();
    let j = ladder(d, n);
    let lhs = p.adjoint() * &j * &p;
    let roots = RootOfUnity::new(d, 1);
    let fit = |s: f64| max_entry(&(&lhs - &j * roots.omega_real(s * nu * n as f64)));
    let (plus, minus) = (fit(1.0), fit(-1.0));
    if plus <= minus {
        (1, plus)
    } else {
        (-1, minus)
    }
}

/// `Σ_m ω^{c·n·m/k} (P_ν† Â(m) P_ν)^{c·n}`; equals `k J^n` for `c = +1` and
/// `k (J^n)†` for `c = -1`, times the phase `ω^{c ν n}`.
pub fn site_operator(scenario: &Scenario, sign: i64, n: usize, nu: f64) -> Result<CMatrix> {
    let roots = scenario.roots();
    let d = scenario.n_outcomes;
    let mut acc = CMatrix::zeros(d, d);
    for m in 0..scenario.n_settings {
        let a = MeasurementOperator::new(scenario, 0, m, nu)?;
        let power = a.power(sign * n as i64, &roots);
        acc += power * roots.zeta_pow(sign * (n * m) as i64);
    }
    Ok(acc)
}

/// `‖Σ_m ω^{nm/k} Â^n(m) − k J^n‖_max` for `1 ≤ n ≤ d−1`.
///
/// The wraparound terms carry `Σ_m e^{i2πm/k}`, which vanishes for `k ≥ 2`;
/// with a single setting the sum is the cyclic shift and the deviation is 1.
pub fn ladder_identity_check(scenario: &Scenario, n: usize) -> Result<f64> {
    let d = scenario.n_outcomes;
    if n < 1 || n >= d {
        return Err(Error::OutOfRange(format!("ladder power {n} not in 1..{d}")));
    }
    let lhs = site_operator(scenario, 1, n, 0.0)?;
    let rhs = ladder(d, n) * Complex64::new(scenario.n_settings as f64, 0.0);
    Ok(max_entry(&(lhs - rhs)))
}

fn check_state(b: &BellFunctional, psi: &StateVector, nu: &[f64]) -> Result<()> {
    b.scenario().ensure_same(psi.scenario())?;
    if nu.len() != b.scenario().n_parties {
        return Err(Error::ScenarioMismatch(format!(
            "{} phase indices for {} parties",
            nu.len(),
            b.scenario().n_parties
        )));
    }
    Ok(())
}

fn weight_of(b: &BellFunctional) -> Result<&crate::functional::WeightFunction> {
    b.weight().ok_or_else(|| {
        Error::UnsupportedWeight("functional has coefficients only; quantum value needs f".into())
    })
}

/// `G^Q = k^N Σ_n⃗ f(n⃗) ω^{Σ_j c_j ν_j n_j} ⟨⊗_j L_j^{n_j}⟩ + c.c.`, with
/// `L_j = J` for `c_j = +1` and `J†` for `c_j = -1`.
pub fn quantum_value_ladder(b: &BellFunctional, psi: &StateVector, nu: &[f64]) -> Result<f64> {
    check_state(b, psi, nu)?;
    let f = weight_of(b)?;
    let sc = b.scenario();
    let roots = sc.roots();
    let kn = (sc.n_settings as f64).powi(sc.n_parties as i32);
    let mut total = ZERO;
    for (n, v) in f.support() {
        let ops: Vec<CMatrix> = n
            .iter()
            .enumerate()
            .map(|(j, &nj)| {
                let l = ladder(sc.n_outcomes, nj);
                if f.sign().get(j) > 0 {
                    l
                } else {
                    l.adjoint()
                }
            })
            .collect();
        let phase: f64 = n
            .iter()
            .enumerate()
            .map(|(j, &nj)| f.sign().get(j) as f64 * nu[j] * nj as f64)
            .sum();
        total += v * roots.omega_real(phase) * psi.expectation(&ops);
    }
    Ok(kn * (total + total.conj()).re)
}

/// Operator-route value and its imaginary residue.
#[derive(Debug, Clone, Copy)]
pub struct OperatorValue {
    pub value: f64,
    pub imag_residue: f64,
}

/// `⟨Σ_n⃗ f(n⃗) ⊗_j Σ_m ω^{c_j n_j m/k} Â_j^{c_j n_j}(m) + h.c.⟩` with the
/// phase-shifted measurement operators built explicitly. The Hermitian
/// conjugate part is computed from its own operators, so the imaginary
/// residue measures how Hermitian the assembled Bell operator is.
pub fn quantum_value_operators(
    b: &BellFunctional,
    psi: &StateVector,
    nu: &[f64],
) -> Result<OperatorValue> {
    check_state(b, psi, nu)?;
    let f = weight_of(b)?;
    let sc = b.scenario();
    let mut total = ZERO;
    for (n, v) in f.support() {
        let mut ops = Vec::with_capacity(n.len());
        let mut adj = Vec::with_capacity(n.len());
        for (j, &nj) in n.iter().enumerate() {
            let c = f.sign().get(j);
            ops.push(site_operator(sc, c, nj, nu[j])?);
            adj.push(site_operator(sc, -c, nj, nu[j])?);
        }
        total += v * psi.expectation(&ops) + v.conj() * psi.expectation(&adj);
    }
    Ok(OperatorValue {
        value: total.re,
        imag_residue: total.im.abs(),
    })
}

/// Outcome statistics `p(α⃗|m⃗) = |⟨⊗_j P_{ν_j}† A_{α_j}(m_j)|ψ⟩|²`.
pub fn quantum_probability_table(psi: &StateVector, nu: &[f64]) -> Result<ProbabilityTable> {
    let sc = *psi.scenario();
    let n = sc.n_parties;
    let d = sc.n_outcomes;
    let n_out = sc.n_outcome_tuples()?;
    let n_set = sc.n_setting_tuples()?;
    // projectors onto each basis vector, one change of basis per site
    let mut bases = Vec::with_capacity(n);
    for (j, &nu_j) in nu.iter().enumerate().take(n) {
        let per_setting = (0..sc.n_settings)
            .map(|m| {
                let op = MeasurementOperator::new(&sc, j, m, nu_j)?;
                let u = CMatrix::from_fn(d, d, |r, c| op.basis()[r][c].conj());
                Ok(u)
            })
            .collect::<Result<Vec<_>>>()?;
        bases.push(per_setting);
    }
    let mut values = Vec::with_capacity(n_out * n_set);
    for mi in 0..n_set {
        let m = decode_digits(mi, sc.n_settings, n);
        let mut phi = psi.amplitudes().to_vec();
        for (j, &mj) in m.iter().enumerate() {
            phi = apply_local(&phi, &bases[j][mj], j, &sc);
        }
        values.extend(phi.iter().map(|a| a.norm_sqr()));
    }
    ProbabilityTable::new(sc, values)
}

/// Both routes of the quantum value.
#[derive(Debug, Clone, Copy)]
pub struct QuantumValue {
    pub ladder: f64,
    pub operators: f64,
    pub imag_residue: f64,
}

impl QuantumValue {
    pub fn value(&self) -> f64 {
        self.ladder
    }

    pub fn route_gap(&self) -> f64 {
        (self.ladder - self.operators).abs()
    }
}

pub fn quantum_value(b: &BellFunctional, psi: &StateVector, nu: &[f64]) -> Result<QuantumValue> {
    let ladder = quantum_value_ladder(b, psi, nu)?;
    let op = quantum_value_operators(b, psi, nu)?;
    Ok(QuantumValue {
        ladder,
        operators: op.value,
        imag_residue: op.imag_residue,
    })
}

/// `f(n)` for uniform-support weights, `n = 1..d-1`.
fn uniform_weight(b: &BellFunctional) -> Result<Vec<Complex64>> {
    weight_of(b)?.uniform_values()
}

/// `Q_M = 2 k^N Σ_n (1 − n/d) |f(n)|`.
pub fn me_bound(b: &BellFunctional) -> Result<f64> {
    let f = uniform_weight(b)?;
    let sc = b.scenario();
    let d = sc.n_outcomes as f64;
    let kn = (sc.n_settings as f64).powi(sc.n_parties as i32);
    Ok(2.0
        * kn
        * f.iter()
            .enumerate()
            .map(|(i, v)| (1.0 - (i + 1) as f64 / d) * v.norm())
            .sum::<f64>())
}

/// ME-state value as a function of the aggregate phase `Φ = Σ_j c_j ν_j`.
fn me_value_at(f: &[Complex64], d: usize, kn: f64, phi: f64) -> f64 {
    let roots = RootOfUnity::new(d, 1);
    2.0 * kn
        * f.iter()
            .enumerate()
            .map(|(i, v)| {
                let n = (i + 1) as f64;
                (1.0 - n / d as f64) * (v * roots.omega_real(n * phi)).re
            })
            .sum::<f64>()
}

/// Result of the phase search on the matched ME state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeQuantum {
    /// `Q_M`.
    pub bound: f64,
    /// Best value found; verified through both operator routes.
    pub attained: f64,
    /// Best value with integer phase indices only.
    pub integer_grid_value: f64,
    /// `Φ` of the best value.
    pub phase: f64,
    /// Per-site phase indices realizing `phase`.
    pub nu: Vec<f64>,
    pub gap: f64,
}

/// Maximizes the ME-state value over the aggregate phase and compares it to
/// `Q_M`.
///
/// Candidates: every integer `Φ ∈ 0..d`, every `Φ` solving
/// `n Φ ≡ −(d/2π) Arg f(n)` for some `n`, and a dense grid refined by
/// golden-section search.
pub fn me_quantum_max(b: &BellFunctional) -> Result<MeQuantum> {
    let f = uniform_weight(b)?;
    let bound = me_bound(b)?;
    let sc = *b.scenario();
    let d = sc.n_outcomes;
    let kn = (sc.n_settings as f64).powi(sc.n_parties as i32);
    let value = |phi: f64| me_value_at(&f, d, kn, phi);

    let mut best_int = (f64::NEG_INFINITY, 0.0);
    for phi in 0..d {
        let v = value(phi as f64);
        if v > best_int.0 {
            best_int = (v, phi as f64);
        }
    }
    let mut best = best_int;
    let consider = |phi: f64, best: &mut (f64, f64)| {
        let phi = phi.rem_euclid(d as f64);
        let v = value(phi);
        if v > best.0 + 1e-15 {
            *best = (v, phi);
        }
    };
    for (i, v) in f.iter().enumerate() {
        if v.norm() == 0.0 {
            continue;
        }
        let n = (i + 1) as f64;
        let target = -v.arg() * d as f64 / TAU;
        for j in 0..=i {
            consider((target + (j * d) as f64) / n, &mut best);
        }
    }
    let samples = 256 * d;
    let step = d as f64 / samples as f64;
    let mut grid_best = (f64::NEG_INFINITY, 0.0);
    for s in 0..samples {
        let phi = s as f64 * step;
        let v = value(phi);
        if v > grid_best.0 {
            grid_best = (v, phi);
        }
    }
    consider(golden_max(&value, grid_best.1 - step, grid_best.1 + step), &mut best);

    let phase = best.1;
    let mut nu = vec![0.0; sc.n_parties];
    nu[0] = b.sign().get(0) as f64 * phase;
    let psi = maximally_entangled_state_for_sign(sc, b.sign())?;
    let attained = quantum_value(b, &psi, &nu)?.value();
    Ok(MeQuantum {
        bound,
        attained,
        integer_grid_value: best_int.0,
        phase,
        nu,
        gap: bound - attained,
    })
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (hi - lo).abs() < 1e-15 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    (lo + hi) / 2.0
}

/// `(4/(d−1)) Σ_{n=1}^{d−1} (1 − n/d) sec(nπ/2d)`.
pub fn cglmp_me_closed_form(d: usize) -> f64 {
    let df = d as f64;
    4.0 / (df - 1.0)
        * (1..d)
            .map(|n| (1.0 - n as f64 / df) / (n as f64 * PI / (2.0 * df)).cos())
            .sum::<f64>()
}

/// LHV bound against the ME quantum bound for one functional.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViolationReport {
    pub functional: String,
    pub b_lr: f64,
    pub b_lr_method: BoundMethod,
    pub q_m: f64,
    pub attained: f64,
    pub integer_grid_value: f64,
    pub gap: f64,
    pub nu: Vec<f64>,
    pub violated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svd_quantum_max: Option<f64>,
}

pub const VIOLATION_MARGIN: f64 = 1e-9;

pub fn violation_report(b: &BellFunctional) -> Result<ViolationReport> {
    let q = me_quantum_max(b)?;
    let bound = exact_lhv_bound(b)?;
    let svd_quantum_max = match b.preset() {
        Some(crate::functional::Preset::Ekb { k, f1 }) => Some(crate::ekb::ekb_quantum_max(
            *k,
            Complex64::new(f1[0], f1[1]),
        )?),
        _ => None,
    };
    Ok(ViolationReport {
        functional: b.name(),
        b_lr: bound.value,
        b_lr_method: bound.method,
        q_m: q.bound,
        attained: q.attained,
        integer_grid_value: q.integer_grid_value,
        gap: q.gap,
        nu: q.nu,
        violated: q.bound > bound.value + VIOLATION_MARGIN,
        svd_quantum_max,
    })
}

/// Measurement operator matrices for external verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorDump {
    pub scenario: Scenario,
    pub nu: Vec<f64>,
    pub operators: Vec<OperatorEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorEntry {
    pub site: usize,
    pub setting: usize,
    /// Row-major `[re, im]` entries.
    pub matrix: Vec<Vec<[f64; 2]>>,
}

pub fn operator_dump(scenario: &Scenario, nu: &[f64]) -> Result<OperatorDump> {
    let mut operators = Vec::new();
    for (site, &nu_j) in nu.iter().enumerate().take(scenario.n_parties) {
        for setting in 0..scenario.n_settings {
            let op = MeasurementOperator::new(scenario, site, setting, nu_j)?;
            let d = scenario.n_outcomes;
            let matrix = (0..d)
                .map(|r| (0..d).map(|c| complex_pair(op.matrix[(r, c)])).collect())
                .collect();
            operators.push(OperatorEntry {
                site,
                setting,
                matrix,
            });
        }
    }
    Ok(OperatorDump {
        scenario: *scenario,
        nu: nu.to_vec(),
        operators,
    })
}
