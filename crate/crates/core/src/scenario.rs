//! The `(N, k, d)` scenario descriptor, tuple enumeration and root-of-unity
//! arithmetic shared by every other module.
//!
//! Interface conventions: outcomes are 1-based (`α ∈ 1..=d`) and settings are
//! 0-based (`m ∈ 0..k`). Tuples are ordered lexicographically with party 1 as
//! the most significant digit, and flat indices follow the same order.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default limit on the number of items any enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 100_000_000;

/// Homogeneous Bell scenario: `N` parties, `k` settings each, `d` outcomes each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub n_parties: usize,
    pub n_settings: usize,
    pub n_outcomes: usize,
    #[serde(skip, default = "default_cap")]
    cap: u64,
}

fn default_cap() -> u64 {
    DEFAULT_ENUMERATION_CAP
}

impl Scenario {
    pub fn new(n_parties: usize, n_settings: usize, n_outcomes: usize) -> Result<Self> {
        if n_parties < 1 {
            return Err(Error::InvalidScenario("need at least one party".into()));
        }
        if n_settings < 1 {
            return Err(Error::InvalidScenario("need at least one setting".into()));
        }
        if n_outcomes < 2 {
            return Err(Error::InvalidScenario("need at least two outcomes".into()));
        }
        Ok(Self {
            n_parties,
            n_settings,
            n_outcomes,
            cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// Two scenarios are compatible when `(N, k, d)` agree; the cap is ignored.
    pub fn same_shape(&self, other: &Scenario) -> bool {
        self.n_parties == other.n_parties
            && self.n_settings == other.n_settings
            && self.n_outcomes == other.n_outcomes
    }

    pub fn ensure_same(&self, other: &Scenario) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ScenarioMismatch(format!("{self} vs {other}")))
        }
    }

    /// `d^N`, exact.
    pub fn outcome_tuple_count(&self) -> u128 {
        pow_u128(self.n_outcomes, self.n_parties)
    }

    /// `k^N`, exact.
    pub fn setting_tuple_count(&self) -> u128 {
        pow_u128(self.n_settings, self.n_parties)
    }

    /// `d^(N·k)`, exact (saturating at `u128::MAX`).
    pub fn strategy_count(&self) -> u128 {
        pow_u128(self.n_outcomes, self.n_parties * self.n_settings)
    }

    /// Number of `d^N × k^N` table entries.
    pub fn table_len(&self) -> u128 {
        self.outcome_tuple_count()
            .saturating_mul(self.setting_tuple_count())
    }

    /// Returns `size` as `usize` if it fits under the enumeration cap.
    pub fn check_cap(&self, what: &'static str, size: u128) -> Result<usize> {
        if size > self.cap as u128 || size > usize::MAX as u128 {
            return Err(Error::EnumerationTooLarge {
                what,
                size,
                cap: self.cap,
            });
        }
        Ok(size as usize)
    }

    pub fn n_outcome_tuples(&self) -> Result<usize> {
        self.check_cap("outcome tuples", self.outcome_tuple_count())
    }

    pub fn n_setting_tuples(&self) -> Result<usize> {
        self.check_cap("setting tuples", self.setting_tuple_count())
    }

    pub fn n_strategies(&self) -> Result<usize> {
        self.check_cap("deterministic strategies", self.strategy_count())
    }

    pub fn roots(&self) -> RootOfUnity {
        RootOfUnity::new(self.n_outcomes, self.n_settings)
    }

    /// `ω^{x/k} = ζ^x` with `ζ = exp(i2π/(d·k))`.
    pub fn omega_pow(&self, exponent_numerator: i64) -> Complex64 {
        self.roots().zeta_pow(exponent_numerator)
    }

    /// All setting tuples `m ∈ {0..k-1}^N` in lexicographic order.
    pub fn enumerate_setting_tuples(&self) -> Result<Vec<Vec<usize>>> {
        let count = self.n_setting_tuples()?;
        Ok((0..count)
            .map(|i| decode_digits(i, self.n_settings, self.n_parties))
            .collect())
    }

    /// All outcome tuples `α ∈ {1..d}^N` in lexicographic order.
    pub fn enumerate_outcome_tuples(&self) -> Result<Vec<Vec<usize>>> {
        let count = self.n_outcome_tuples()?;
        Ok((0..count)
            .map(|i| {
                let mut t = decode_digits(i, self.n_outcomes, self.n_parties);
                t.iter_mut().for_each(|a| *a += 1);
                t
            })
            .collect())
    }

    /// Flat index of a 1-based outcome tuple.
    pub fn outcome_index(&self, outcomes: &[usize]) -> Result<usize> {
        if outcomes.len() != self.n_parties {
            return Err(Error::OutOfRange(format!(
                "outcome tuple has {} entries, expected {}",
                outcomes.len(),
                self.n_parties
            )));
        }
        let mut idx = 0usize;
        for &a in outcomes {
            if a < 1 || a > self.n_outcomes {
                return Err(Error::OutOfRange(format!(
                    "outcome {a} not in 1..={}",
                    self.n_outcomes
                )));
            }
            idx = idx * self.n_outcomes + (a - 1);
        }
        Ok(idx)
    }

    /// Flat index of a 0-based setting tuple.
    pub fn setting_index(&self, settings: &[usize]) -> Result<usize> {
        if settings.len() != self.n_parties {
            return Err(Error::OutOfRange(format!(
                "setting tuple has {} entries, expected {}",
                settings.len(),
                self.n_parties
            )));
        }
        let mut idx = 0usize;
        for &m in settings {
            if m >= self.n_settings {
                return Err(Error::OutOfRange(format!(
                    "setting {m} not in 0..{}",
                    self.n_settings
                )));
            }
            idx = idx * self.n_settings + m;
        }
        Ok(idx)
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "(N={}, k={}, d={})",
            self.n_parties, self.n_settings, self.n_outcomes
        )
    }
}

fn pow_u128(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

/// Base-`base` digits of `index`, most significant first, `len` digits.
pub fn decode_digits(mut index: usize, base: usize, len: usize) -> Vec<usize> {
    let mut digits = vec![0; len];
    for slot in digits.iter_mut().rev() {
        *slot = index % base;
        index /= base;
    }
    digits
}

/// Per-party sign pattern `c⃗ ∈ {+1,-1}^N`.
///
/// The canonical index `c ∈ 1..=2^N` has bit `j` of `c-1` set exactly when
/// party `j+1` carries `-1`. Flipping every sign conjugates the correlation
/// tensor, so only half of the `2^N` patterns are independent; all of them
/// are exposed anyway.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignVector {
    signs: Vec<i8>,
}

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::Validation("sign vector is empty".into()));
        }
        if let Some(bad) = signs.iter().find(|s| **s != 1 && **s != -1) {
            return Err(Error::Validation(format!("sign {bad} is not ±1")));
        }
        Ok(Self { signs })
    }

    /// All `+1`.
    pub fn plus(n_parties: usize) -> Self {
        Self {
            signs: vec![1; n_parties],
        }
    }

    pub fn from_index(n_parties: usize, c: usize) -> Result<Self> {
        let total = 1usize
            .checked_shl(n_parties as u32)
            .ok_or_else(|| Error::OutOfRange("too many parties for sign index".into()))?;
        if c < 1 || c > total {
            return Err(Error::OutOfRange(format!("sign index {c} not in 1..={total}")));
        }
        let bits = c - 1;
        let signs = (0..n_parties)
            .map(|j| if bits >> j & 1 == 1 { -1 } else { 1 })
            .collect();
        Ok(Self { signs })
    }

    pub fn index(&self) -> usize {
        self.signs
            .iter()
            .enumerate()
            .filter(|(_, s)| **s < 0)
            .fold(0usize, |acc, (j, _)| acc | 1 << j)
            + 1
    }

    /// Every sign pattern for `n_parties`, ordered by canonical index.
    pub fn all(n_parties: usize) -> Vec<SignVector> {
        (1..=1usize << n_parties)
            .map(|c| Self::from_index(n_parties, c).expect("index in range"))
            .collect()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn get(&self, j: usize) -> i64 {
        self.signs[j] as i64
    }

    /// Parse `"+-+"`, `"1,-1,1"` or a canonical index like `"3"` (needs `n_parties`).
    pub fn parse(text: &str, n_parties: usize) -> Result<Self> {
        let t = text.trim();
        if !t.is_empty() && t.chars().all(|ch| ch == '+' || ch == '-') {
            let signs = t.chars().map(|ch| if ch == '+' { 1 } else { -1 }).collect();
            return Self::new(signs).and_then(|s| s.expect_len(n_parties));
        }
        if t.contains(',') {
            let signs = t
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<i8>()
                        .map_err(|e| Error::Parse(format!("sign '{p}': {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            return Self::new(signs).and_then(|s| s.expect_len(n_parties));
        }
        let c = t
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("sign '{t}': {e}")))?;
        Self::from_index(n_parties, c)
    }

    fn expect_len(self, n_parties: usize) -> Result<Self> {
        if self.len() != n_parties {
            return Err(Error::Validation(format!(
                "sign vector has {} entries, expected {n_parties}",
                self.len()
            )));
        }
        Ok(self)
    }

    pub fn negated(&self) -> Self {
        Self {
            signs: self.signs.iter().map(|s| -s).collect(),
        }
    }
}

impl std::fmt::Display for SignVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in &self.signs {
            f.write_str(if *s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// Precomputed powers of `ζ = exp(i2π/(d·k))`; `ω = ζ^k`.
#[derive(Debug, Clone)]
pub struct RootOfUnity {
    d: usize,
    k: usize,
    table: Vec<Complex64>,
}

impl RootOfUnity {
    pub fn new(d: usize, k: usize) -> Self {
        let period = d * k;
        let table = (0..period)
            .map(|r| Complex64::cis(TAU * r as f64 / period as f64))
            .collect();
        Self { d, k, table }
    }

    pub fn period(&self) -> usize {
        self.d * self.k
    }

    /// `ζ^x`, exponent reduced modulo `d·k`.
    pub fn zeta_pow(&self, x: i64) -> Complex64 {
        let p = self.period() as i64;
        self.table[x.rem_euclid(p) as usize]
    }

    /// `ω^x` for integer `x`.
    pub fn omega_pow(&self, x: i64) -> Complex64 {
        self.zeta_pow(x * self.k as i64)
    }

    pub fn omega(&self) -> Complex64 {
        self.omega_pow(1)
    }

    pub fn zeta(&self) -> Complex64 {
        self.zeta_pow(1)
    }

    /// `ω^t` for real `t`, principal branch.
    pub fn omega_real(&self, t: f64) -> Complex64 {
        Complex64::cis(TAU * t / self.d as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn omega_pow_examples() {
        let s22 = Scenario::new(2, 2, 2).unwrap();
        assert!(close(s22.omega_pow(0), Complex64::new(1.0, 0.0), 1e-15));
        assert!(close(s22.omega_pow(2), Complex64::new(-1.0, 0.0), 1e-15));
        let s32 = Scenario::new(2, 2, 3).unwrap();
        assert!(close(s32.omega_pow(3), Complex64::new(-1.0, 0.0), 1e-15));
        // negative exponents reduce to the same residue
        assert!(close(s32.omega_pow(-3), s32.omega_pow(3), 1e-15));
        for x in -20..20 {
            assert!((s32.omega_pow(x).norm() - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn root_identities() {
        for d in 2..=16 {
            for k in 1..=8 {
                let r = RootOfUnity::new(d, k);
                assert!(close(r.omega_pow(d as i64), Complex64::new(1.0, 0.0), 1e-14));
                assert!(close(r.zeta_pow((d * k) as i64), Complex64::new(1.0, 0.0), 1e-14));
                let zk = (0..k).fold(Complex64::new(1.0, 0.0), |acc, _| acc * r.zeta());
                assert!(close(zk, r.omega(), 1e-14), "d={d} k={k}");
            }
        }
    }

    #[test]
    fn setting_tuples_lexicographic() {
        let s = Scenario::new(2, 2, 2).unwrap();
        assert_eq!(
            s.enumerate_setting_tuples().unwrap(),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        let s = Scenario::new(1, 3, 2).unwrap();
        assert_eq!(
            s.enumerate_setting_tuples().unwrap(),
            vec![vec![0], vec![1], vec![2]]
        );
        let s = Scenario::new(3, 2, 2).unwrap();
        let t = s.enumerate_setting_tuples().unwrap();
        assert_eq!(t.len(), 8);
        assert_eq!(t[0], vec![0, 0, 0]);
        assert_eq!(t[7], vec![1, 1, 1]);
    }

    #[test]
    fn outcome_tuples_lexicographic() {
        let s = Scenario::new(1, 1, 2).unwrap();
        assert_eq!(s.enumerate_outcome_tuples().unwrap(), vec![vec![1], vec![2]]);
        let s = Scenario::new(2, 1, 2).unwrap();
        assert_eq!(
            s.enumerate_outcome_tuples().unwrap(),
            vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]
        );
        let s = Scenario::new(2, 1, 3).unwrap();
        let t = s.enumerate_outcome_tuples().unwrap();
        assert_eq!(t.len(), 9);
        assert_eq!(t[8], vec![3, 3]);
        for (i, tuple) in t.iter().enumerate() {
            assert_eq!(s.outcome_index(tuple).unwrap(), i);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let s = Scenario::new(4, 2, 2).unwrap().with_cap(10);
        assert!(matches!(
            s.enumerate_setting_tuples(),
            Err(Error::EnumerationTooLarge { size: 16, .. })
        ));
        assert!(s.n_strategies().is_err());
        let huge = Scenario::new(40, 8, 16).unwrap();
        assert!(huge.n_strategies().is_err());
    }

    #[test]
    fn invalid_scenarios() {
        assert!(Scenario::new(0, 2, 2).is_err());
        assert!(Scenario::new(2, 0, 2).is_err());
        assert!(Scenario::new(2, 2, 1).is_err());
    }

    #[test]
    fn sign_index_bijection() {
        for n in 1..=4 {
            let all = SignVector::all(n);
            assert_eq!(all.len(), 1 << n);
            for (i, s) in all.iter().enumerate() {
                assert_eq!(s.index(), i + 1);
            }
        }
        let c = SignVector::from_index(3, 2).unwrap();
        assert_eq!(c.signs(), &[-1, 1, 1]);
        assert!(SignVector::from_index(2, 5).is_err());
        assert!(SignVector::from_index(2, 0).is_err());
    }

    #[test]
    fn sign_parsing() {
        assert_eq!(SignVector::parse("+-", 2).unwrap().signs(), &[1, -1]);
        assert_eq!(SignVector::parse("1,-1,1", 3).unwrap().signs(), &[1, -1, 1]);
        assert_eq!(SignVector::parse("4", 2).unwrap().signs(), &[-1, -1]);
        assert!(SignVector::parse("+-", 3).is_err());
        assert!(SignVector::parse("2,1", 2).is_err());
    }
}
