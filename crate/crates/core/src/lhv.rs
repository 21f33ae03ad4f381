//! Local-realistic bounds.
//!
//! Ground truth is exhaustive maximization over deterministic strategies
//! (`d^{N·k}` of them); every LHV mixture is a convex combination of these,
//! so the maximum bounds all local tables. The setting-independent
//! `max_α⃗ Σ_m⃗ g_{α⃗,m⃗}` is offered separately and is never reported as exact.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{preset_zb, BellFunctional, Preset};
use crate::probability::{DeterministicStrategy, ProbabilityTable};
use crate::scenario::{decode_digits, Scenario, SignVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    ExactEnumeration,
    FixedAlpha,
    ClosedForm,
}

impl std::fmt::Display for BoundMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundMethod::ExactEnumeration => "exact-enumeration",
            BoundMethod::FixedAlpha => "fixed-alpha",
            BoundMethod::ClosedForm => "closed-form",
        })
    }
}

#[derive(Debug, Clone)]
pub struct BoundResult {
    pub value: f64,
    pub argmax_strategy: DeterministicStrategy,
    pub method: BoundMethod,
    /// Number of candidate strategies visited.
    pub evaluated: u64,
}

/// Strategies per parallel work unit.
const CHUNK: usize = 4096;

/// `Σ_m⃗ g_{α⃗(m⃗), m⃗}` for one deterministic strategy, given per-setting
/// outcome digits in party-major layout (0-based).
fn strategy_value(
    g: &[f64],
    digits: &[usize],
    settings: &[Vec<usize>],
    n_out: usize,
    k: usize,
    d: usize,
) -> f64 {
    settings
        .iter()
        .enumerate()
        .map(|(mi, m)| {
            let ai = m
                .iter()
                .enumerate()
                .fold(0, |acc, (j, &mj)| acc * d + digits[j * k + mj]);
            g[mi * n_out + ai]
        })
        .sum()
}

/// Keeps the larger value; on exact ties the lower index wins.
fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Exact LHV bound: maximum over all `d^{N·k}` deterministic strategies.
pub fn exact_lhv_bound(b: &BellFunctional) -> Result<BoundResult> {
    let sc = *b.scenario();
    let n_strat = sc.n_strategies()?;
    let n_out = sc.n_outcome_tuples()?;
    let settings = sc.enumerate_setting_tuples()?;
    let (k, d) = (sc.n_settings, sc.n_outcomes);
    let len = sc.n_parties * k;
    let g = b.coefficients().values();

    let n_chunks = n_strat.div_ceil(CHUNK);
    let (value, index) = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(n_strat);
            let mut digits = decode_digits(start, d, len);
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for idx in start..end {
                let v = strategy_value(g, &digits, &settings, n_out, k, d);
                if v > best.0 {
                    best = (v, idx);
                }
                increment(&mut digits, d);
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), better);

    Ok(BoundResult {
        value,
        argmax_strategy: DeterministicStrategy::from_index(sc, index),
        method: BoundMethod::ExactEnumeration,
        evaluated: n_strat as u64,
    })
}

fn increment(digits: &mut [usize], base: usize) {
    for x in digits.iter_mut().rev() {
        *x += 1;
        if *x < base {
            return;
        }
        *x = 0;
    }
}

/// `max_α⃗ Σ_m⃗ g_{α⃗,m⃗}` with `α⃗` held fixed across settings.
pub fn fixed_alpha_bound(b: &BellFunctional) -> Result<BoundResult> {
    let sc = *b.scenario();
    let n_out = sc.n_outcome_tuples()?;
    let n_set = sc.n_setting_tuples()?;
    let g = b.coefficients().values();
    let (value, ai) = (0..n_out)
        .map(|ai| ((0..n_set).map(|mi| g[mi * n_out + ai]).sum::<f64>(), ai))
        .fold((f64::NEG_INFINITY, usize::MAX), better);
    let alpha = decode_digits(ai, sc.n_outcomes, sc.n_parties);
    let assignment = alpha
        .iter()
        .flat_map(|a| std::iter::repeat_n(a + 1, sc.n_settings))
        .collect();
    Ok(BoundResult {
        value,
        argmax_strategy: DeterministicStrategy::new(sc, assignment)?,
        method: BoundMethod::FixedAlpha,
        evaluated: n_out as u64,
    })
}

/// `Σ_c |G^{c,ZB}(p)|` over all `2^N` sign vectors.
pub fn zb_combined_value(functionals: &[BellFunctional], p: &ProbabilityTable) -> Result<f64> {
    functionals
        .iter()
        .map(|b| b.evaluate_on_probabilities(p).map(f64::abs))
        .sum()
}

/// The `2^N` ZB functionals, ordered by sign index.
pub fn zb_family(n: usize) -> Result<Vec<BellFunctional>> {
    SignVector::all(n)
        .into_iter()
        .map(|c| preset_zb(n, c))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZbReport {
    pub n_parties: usize,
    pub bound: f64,
    pub n_tables: usize,
    pub max_attained: f64,
    pub argmax_table: usize,
    pub within_bound: bool,
}

/// Checks `Σ_c |G^{c,ZB}| ≤ 2^N` on the given (local) tables.
pub fn zb_combined_bound_check(n: usize, tables: &[ProbabilityTable]) -> Result<ZbReport> {
    if !(2..=4).contains(&n) {
        return Err(Error::InvalidScenario(format!(
            "ZB combined check supports 2 ≤ N ≤ 4, got {n}"
        )));
    }
    let family = zb_family(n)?;
    let bound = (1u64 << n) as f64;
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for (i, t) in tables.iter().enumerate() {
        best = better(best, (zb_combined_value(&family, t)?, i));
    }
    Ok(ZbReport {
        n_parties: n,
        bound,
        n_tables: tables.len(),
        max_attained: best.0,
        argmax_table: best.1,
        within_bound: best.0 <= bound + 1e-9,
    })
}

/// Exact maximum of `Σ_c |G^{c,ZB}|` over deterministic strategies.
pub fn zb_combined_exact(n: usize) -> Result<BoundResult> {
    let family = zb_family(n)?;
    let sc = *family[0].scenario();
    let n_strat = sc.n_strategies()?;
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for idx in 0..n_strat {
        let t = DeterministicStrategy::from_index(sc, idx).to_table();
        best = better(best, (zb_combined_value(&family, &t)?, idx));
    }
    Ok(BoundResult {
        value: best.0,
        argmax_strategy: DeterministicStrategy::from_index(sc, best.1),
        method: BoundMethod::ExactEnumeration,
        evaluated: n_strat as u64,
    })
}

/// `2|f(1)| cos θ_f / sin²(π/2k)` for `0 ≤ θ_f ≤ π/2k`.
pub fn ekb_closed_form_bound(k: usize, f1: Complex64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidScenario("EKB needs k ≥ 2".into()));
    }
    let limit = PI / (2.0 * k as f64);
    let theta = if f1.norm() == 0.0 { 0.0 } else { f1.arg() };
    if !(-1e-12..=limit + 1e-12).contains(&theta) {
        return Err(Error::PhaseOutOfRange { theta, limit });
    }
    let s = (PI / (2.0 * k as f64)).sin();
    Ok(2.0 * f1.norm() * theta.cos() / (s * s))
}

/// How a reference bound relates to the true LHV maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// Claimed to equal the maximum.
    Tight,
    /// Claimed only as an upper bound.
    Upper,
}

/// Literature bound for a named inequality, when a closed form exists.
pub fn reference_bound(preset: &Preset) -> Result<Option<(f64, BoundKind)>> {
    Ok(match preset {
        Preset::Chsh => Some((2.0, BoundKind::Tight)),
        Preset::Cglmp { .. } => Some((2.0, BoundKind::Tight)),
        Preset::Mermin { n } => {
            let e = if n % 2 == 1 { (n - 1) / 2 } else { n / 2 };
            Some(((1u64 << e) as f64, BoundKind::Tight))
        }
        Preset::Zb { n, .. } => Some(((1u64 << n) as f64, BoundKind::Upper)),
        Preset::Ekb { k, f1 } => {
            match ekb_closed_form_bound(*k, Complex64::new(f1[0], f1[1])) {
                Ok(v) => Some((v, BoundKind::Tight)),
                Err(Error::PhaseOutOfRange { .. }) => None,
                Err(e) => return Err(e),
            }
        }
    })
}

/// Closed-form bound for a preset as a [`BoundResult`]; the argmax is
/// recovered by enumeration since the formulas do not name a strategy.
pub fn closed_form_bound(b: &BellFunctional) -> Result<Option<BoundResult>> {
    let Some(preset) = b.preset() else {
        return Ok(None);
    };
    let Some((value, BoundKind::Tight)) = reference_bound(preset)? else {
        return Ok(None);
    };
    let exact = exact_lhv_bound(b)?;
    Ok(Some(BoundResult {
        value,
        argmax_strategy: exact.argmax_strategy,
        method: BoundMethod::ClosedForm,
        evaluated: 0,
    }))
}

/// Scenario sizes for which [`exact_lhv_bound`] is within the cap.
pub fn exact_is_feasible(sc: &Scenario) -> bool {
    sc.n_strategies().is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{preset_cglmp, preset_chsh, preset_ekb, preset_mermin};
    use crate::probability::LhvMixture;

    #[test]
    fn chsh_bound() {
        let r = exact_lhv_bound(&preset_chsh().unwrap()).unwrap();
        assert_eq!(r.method, BoundMethod::ExactEnumeration);
        assert!((r.value - 2.0).abs() < 1e-12);
        assert_eq!(r.evaluated, 16);
        let f = fixed_alpha_bound(&preset_chsh().unwrap()).unwrap();
        assert!((f.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cglmp3_and_mermin3() {
        let r = exact_lhv_bound(&preset_cglmp(3).unwrap()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
        let m = preset_mermin(3).unwrap();
        let r = exact_lhv_bound(&m).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        let f = fixed_alpha_bound(&m).unwrap();
        assert!((f.value - r.value).abs() < 1e-12);
    }

    #[test]
    fn zero_functional_bound() {
        let b = BellFunctional::zero(Scenario::new(2, 2, 3).unwrap()).unwrap();
        assert_eq!(exact_lhv_bound(&b).unwrap().value, 0.0);
        // all strategies tie at 0 → first strategy wins
        assert_eq!(exact_lhv_bound(&b).unwrap().argmax_strategy.index(), 0);
    }

    #[test]
    fn random_coefficients_fixed_alpha_below_exact() {
        let b = BellFunctional::random_coefficients(Scenario::new(2, 2, 2).unwrap(), 7).unwrap();
        let exact = exact_lhv_bound(&b).unwrap();
        let fixed = fixed_alpha_bound(&b).unwrap();
        assert!(fixed.value <= exact.value + 1e-10);
    }

    #[test]
    fn argmax_witnesses_value() {
        for b in [
            preset_chsh().unwrap(),
            preset_cglmp(4).unwrap(),
            preset_mermin(4).unwrap(),
            BellFunctional::random_coefficients(Scenario::new(3, 2, 2).unwrap(), 1).unwrap(),
        ] {
            let r = exact_lhv_bound(&b).unwrap();
            let v = b
                .evaluate_on_probabilities(&r.argmax_strategy.to_table())
                .unwrap();
            assert!((v - r.value).abs() < 1e-10);
        }
    }

    #[test]
    fn parallel_reduction_matches_sequential() {
        // enough strategies for several chunks
        let b = BellFunctional::random_coefficients(Scenario::new(3, 2, 3).unwrap(), 3).unwrap();
        let r = exact_lhv_bound(&b).unwrap();
        let sc = *b.scenario();
        let mut best = (f64::NEG_INFINITY, 0usize);
        for idx in 0..sc.n_strategies().unwrap() {
            let v = b
                .evaluate_on_probabilities(&DeterministicStrategy::from_index(sc, idx).to_table())
                .unwrap();
            if v > best.0 + 1e-12 {
                best = (v, idx);
            }
        }
        assert!((r.value - best.0).abs() < 1e-10);
        assert_eq!(r.argmax_strategy.index(), best.1);
    }

    #[test]
    fn cap_exceeded() {
        let b = preset_mermin(4).unwrap();
        let sc = b.scenario().with_cap(100);
        let limited = BellFunctional::from_coefficients(
            crate::functional::CoefficientTensor::new(
                sc,
                b.sign().clone(),
                b.coefficients().values().to_vec(),
            )
            .unwrap(),
        );
        assert!(matches!(
            exact_lhv_bound(&limited),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn zb_combined_n2() {
        // the full family sums to 2^{N+1}: all four |G^c| hit 2 together
        let r = zb_combined_exact(2).unwrap();
        assert!((r.value - 8.0).abs() < 1e-12);
        let sc = Scenario::new(2, 2, 2).unwrap();
        let tables: Vec<_> = (0..16)
            .map(|i| DeterministicStrategy::from_index(sc, i).to_table())
            .collect();
        let rep = zb_combined_bound_check(2, &tables).unwrap();
        assert!(!rep.within_bound);
        assert!((rep.max_attained - 8.0).abs() < 1e-12);
        // each individual |G^c| ≤ 4
        for b in zb_family(2).unwrap() {
            for t in &tables {
                assert!(b.evaluate_on_probabilities(t).unwrap().abs() <= 4.0 + 1e-12);
            }
        }
    }

    #[test]
    fn zb_check_rejects_large_n() {
        assert!(zb_combined_bound_check(5, &[]).is_err());
    }

    #[test]
    fn ekb_closed_form_values() {
        assert!((ekb_closed_form_bound(2, Complex64::new(0.5, 0.0)).unwrap() - 2.0).abs() < 1e-12);
        assert!((ekb_closed_form_bound(3, Complex64::new(0.5, 0.0)).unwrap() - 4.0).abs() < 1e-12);
        let f1 = Complex64::from_polar(0.5, PI / 16.0);
        let cf = ekb_closed_form_bound(4, f1).unwrap();
        let exact = exact_lhv_bound(&preset_ekb(4, f1).unwrap()).unwrap().value;
        assert!((cf - exact).abs() < 1e-9);
        assert!(matches!(
            ekb_closed_form_bound(2, Complex64::new(0.5, -0.5)),
            Err(Error::PhaseOutOfRange { .. })
        ));
    }

    #[test]
    fn mixtures_never_exceed_exact() {
        let b = preset_cglmp(3).unwrap();
        let bound = exact_lhv_bound(&b).unwrap().value;
        for seed in 0..50 {
            let t = LhvMixture::random(*b.scenario(), 6, seed).unwrap().to_table();
            assert!(b.evaluate_on_probabilities(&t).unwrap() <= bound + 1e-9);
        }
    }
}
