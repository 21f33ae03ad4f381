//! Conditional probability tables `p(α⃗|m⃗)`, deterministic local strategies
//! and their convex mixtures.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_real;
use crate::scenario::{decode_digits, Scenario};

/// Entries in `[-CLAMP_TOL, 0)` are treated as rounding noise and set to zero.
pub const CLAMP_TOL: f64 = 1e-12;
/// Allowed deviation of each per-setting sum from one.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Full table `p(α⃗|m⃗)` with `d^N · k^N` entries.
///
/// Storage is setting-major: entry `(α⃗, m⃗)` lives at
/// `setting_index(m⃗) · d^N + outcome_index(α⃗)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    scenario: Scenario,
    values: Vec<f64>,
}

impl ProbabilityTable {
    /// Validates positivity and per-setting normalization.
    pub fn new(scenario: Scenario, mut values: Vec<f64>) -> Result<Self> {
        let n_out = scenario.n_outcome_tuples()?;
        let n_set = scenario.n_setting_tuples()?;
        if values.len() != n_out * n_set {
            return Err(Error::Validation(format!(
                "table has {} entries, expected {}",
                values.len(),
                n_out * n_set
            )));
        }
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "non-finite probability at setting {}, outcome {}",
                    i / n_out,
                    i % n_out
                )));
            }
            if *v < 0.0 {
                if *v >= -CLAMP_TOL {
                    *v = 0.0;
                } else {
                    return Err(Error::Validation(format!(
                        "negative probability {:e} at setting {}, outcome {}",
                        v,
                        i / n_out,
                        i % n_out
                    )));
                }
            }
        }
        for (m, block) in values.chunks(n_out).enumerate() {
            let total: f64 = block.iter().sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::Validation(format!(
                    "probabilities for setting {m} sum to {total}"
                )));
            }
        }
        Ok(Self { scenario, values })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_outcome_tuples(&self) -> usize {
        self.values.len() / self.n_setting_tuples()
    }

    pub fn n_setting_tuples(&self) -> usize {
        self.scenario.setting_tuple_count() as usize
    }

    /// Distribution over outcome tuples for one setting tuple index.
    pub fn setting_block(&self, setting: usize) -> &[f64] {
        let n = self.n_outcome_tuples();
        &self.values[setting * n..(setting + 1) * n]
    }

    /// `p(α⃗|m⃗)` with 1-based outcomes and 0-based settings.
    pub fn get(&self, outcomes: &[usize], settings: &[usize]) -> Result<f64> {
        let a = self.scenario.outcome_index(outcomes)?;
        let m = self.scenario.setting_index(settings)?;
        Ok(self.values[m * self.n_outcome_tuples() + a])
    }

    pub fn max_abs_diff(&self, other: &ProbabilityTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Convex combination `Σ w_i t_i`.
    pub fn mix(parts: &[(f64, &ProbabilityTable)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::Validation("empty mixture".into()))?;
        check_weights(parts.iter().map(|(w, _)| *w))?;
        let mut values = vec![0.0; first.values.len()];
        for (w, t) in parts {
            first.scenario.ensure_same(&t.scenario)?;
            for (acc, v) in values.iter_mut().zip(&t.values) {
                *acc += w * v;
            }
        }
        Self::new(first.scenario, values)
    }

    /// Largest violation of marginal consistency (no-signalling) over all
    /// proper, nonempty party subsets. Zero for every local table; the table
    /// type itself does not require it.
    pub fn no_signalling_violation(&self) -> f64 {
        let sc = &self.scenario;
        let n = sc.n_parties;
        let d = sc.n_outcomes;
        let k = sc.n_settings;
        let n_out = self.n_outcome_tuples();
        let mut worst = 0.0f64;
        for subset in 1..(1usize << n) - 1 {
            let parties: Vec<usize> = (0..n).filter(|j| subset >> j & 1 == 1).collect();
            let mut seen: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
            for m_idx in 0..self.n_setting_tuples() {
                let m = decode_digits(m_idx, k, n);
                let key: Vec<usize> = parties.iter().map(|&j| m[j]).collect();
                let mut marginal = vec![0.0; d.pow(parties.len() as u32)];
                for (a_idx, p) in self.setting_block(m_idx).iter().enumerate() {
                    let a = decode_digits(a_idx, d, n);
                    let sub = parties.iter().fold(0, |acc, &j| acc * d + a[j]);
                    marginal[sub] += p;
                }
                debug_assert_eq!(n_out, d.pow(n as u32));
                match seen.get(&key) {
                    Some(reference) => {
                        for (x, y) in reference.iter().zip(&marginal) {
                            worst = worst.max((x - y).abs());
                        }
                    }
                    None => {
                        seen.insert(key, marginal);
                    }
                }
            }
        }
        worst
    }

    /// CSV with header `m_1..m_N, alpha_1..alpha_N, p`, one row per entry,
    /// settings outermost.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let sc = &self.scenario;
        let n = sc.n_parties;
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=n).map(|j| format!("m_{j}")).collect();
        header.extend((1..=n).map(|j| format!("alpha_{j}")));
        header.push("p".into());
        w.write_record(&header)?;
        let n_out = self.n_outcome_tuples();
        for (i, p) in self.values.iter().enumerate() {
            let m = decode_digits(i / n_out, sc.n_settings, n);
            let a = decode_digits(i % n_out, sc.n_outcomes, n);
            let mut row: Vec<String> = m.iter().map(|x| x.to_string()).collect();
            row.extend(a.iter().map(|x| (x + 1).to_string()));
            row.push(fmt_real(*p));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV layout produced by [`write_csv`](Self::write_csv). Rows
    /// may come in any order but every entry must appear exactly once.
    pub fn read_csv<R: Read>(scenario: Scenario, input: R) -> Result<Self> {
        let n = scenario.n_parties;
        let n_out = scenario.n_outcome_tuples()?;
        let total = n_out * scenario.n_setting_tuples()?;
        let mut values = vec![f64::NAN; total];
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = rdr.headers()?.clone();
        if header.len() != 2 * n + 1 {
            return Err(Error::Parse(format!(
                "header has {} columns, expected {} (m_1..m_{n}, alpha_1..alpha_{n}, p)",
                header.len(),
                2 * n + 1
            )));
        }
        for (row_no, record) in rdr.records().enumerate() {
            let line = row_no + 2;
            let record = record?;
            if record.len() != 2 * n + 1 {
                return Err(Error::Parse(format!(
                    "row {line}: {} columns, expected {}",
                    record.len(),
                    2 * n + 1
                )));
            }
            let field = |col: usize| -> Result<&str> { Ok(record.get(col).unwrap_or("").trim()) };
            let mut m = Vec::with_capacity(n);
            let mut a = Vec::with_capacity(n);
            for col in 0..2 * n {
                let raw = field(col)?;
                let v: usize = raw.parse().map_err(|_| {
                    Error::Parse(format!("row {line}, column {}: bad index '{raw}'", col + 1))
                })?;
                if col < n {
                    m.push(v);
                } else {
                    a.push(v);
                }
            }
            let raw = field(2 * n)?;
            let p: f64 = raw.parse().map_err(|_| {
                Error::Parse(format!("row {line}, column {}: bad probability '{raw}'", 2 * n + 1))
            })?;
            let mi = scenario
                .setting_index(&m)
                .map_err(|e| Error::Parse(format!("row {line}: {e}")))?;
            let ai = scenario
                .outcome_index(&a)
                .map_err(|e| Error::Parse(format!("row {line}: {e}")))?;
            let slot = &mut values[mi * n_out + ai];
            if !slot.is_nan() {
                return Err(Error::Parse(format!("row {line}: duplicate entry")));
            }
            *slot = p;
        }
        if let Some(missing) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Parse(format!(
                "missing entry for setting {}, outcome {}",
                missing / n_out,
                missing % n_out
            )));
        }
        Self::new(scenario, values)
    }

    pub fn to_json(&self) -> TableJson {
        let sc = self.scenario;
        let n_out = self.n_outcome_tuples();
        let probabilities = (0..self.n_setting_tuples())
            .map(|mi| {
                let key = decode_digits(mi, sc.n_settings, sc.n_parties)
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                (key, self.values[mi * n_out..(mi + 1) * n_out].to_vec())
            })
            .collect();
        TableJson {
            scenario: sc,
            probabilities,
        }
    }

    pub fn from_json(json: &TableJson) -> Result<Self> {
        let sc = json.scenario;
        Scenario::new(sc.n_parties, sc.n_settings, sc.n_outcomes)?;
        let n_out = sc.n_outcome_tuples()?;
        let n_set = sc.n_setting_tuples()?;
        if json.probabilities.len() != n_set {
            return Err(Error::Parse(format!(
                "{} setting tuples, expected {n_set}",
                json.probabilities.len()
            )));
        }
        let mut values = vec![0.0; n_out * n_set];
        for (key, block) in &json.probabilities {
            let m = key
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad setting key '{key}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            let mi = sc.setting_index(&m)?;
            if block.len() != n_out {
                return Err(Error::Parse(format!(
                    "setting '{key}' has {} outcomes, expected {n_out}",
                    block.len()
                )));
            }
            values[mi * n_out..(mi + 1) * n_out].copy_from_slice(block);
        }
        Self::new(sc, values)
    }
}

/// JSON layout: `{"scenario": {...}, "probabilities": {"m_1,..,m_N": [p over α⃗]}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableJson {
    pub scenario: Scenario,
    pub probabilities: BTreeMap<String, Vec<f64>>,
}

/// Draws a table whose per-setting distributions are uniform on the simplex.
///
/// Generator contract: a `ChaCha8Rng` seeded with `seed` via `seed_from_u64`;
/// for each setting tuple in lexicographic order and each outcome tuple in
/// lexicographic order, draw `u` in `[0, 1)` and take `-ln(1 - u)`; each
/// block is then divided by its sum.
pub fn random_table(scenario: Scenario, seed: u64) -> Result<ProbabilityTable> {
    let n_out = scenario.n_outcome_tuples()?;
    let n_set = scenario.n_setting_tuples()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n_out * n_set);
    for _ in 0..n_set {
        let block: Vec<f64> = (0..n_out)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = block.iter().sum();
        values.extend(block.iter().map(|x| x / total));
    }
    ProbabilityTable::new(scenario, values)
}

/// One realization of the hidden variable: outcome `α_j(m_j) ∈ 1..=d` for
/// every party `j` and setting `m_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    scenario: Scenario,
    /// Party-major: `assignment[j·k + m] = α_{j+1}(m)`.
    assignment: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn new(scenario: Scenario, assignment: Vec<usize>) -> Result<Self> {
        let expected = scenario.n_parties * scenario.n_settings;
        if assignment.len() != expected {
            return Err(Error::Validation(format!(
                "strategy has {} values, expected {expected}",
                assignment.len()
            )));
        }
        if let Some(bad) = assignment
            .iter()
            .find(|a| **a < 1 || **a > scenario.n_outcomes)
        {
            return Err(Error::Validation(format!(
                "outcome {bad} not in 1..={}",
                scenario.n_outcomes
            )));
        }
        Ok(Self {
            scenario,
            assignment,
        })
    }

    /// Strategy number `index` in lexicographic order over the `N·k` digits.
    pub fn from_index(scenario: Scenario, index: usize) -> Self {
        let len = scenario.n_parties * scenario.n_settings;
        let assignment = decode_digits(index, scenario.n_outcomes, len)
            .into_iter()
            .map(|a| a + 1)
            .collect();
        Self {
            scenario,
            assignment,
        }
    }

    pub fn index(&self) -> usize {
        self.assignment
            .iter()
            .fold(0, |acc, a| acc * self.scenario.n_outcomes + (a - 1))
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// `α_j(m)` for 0-based party `j`.
    pub fn outcome(&self, party: usize, setting: usize) -> usize {
        self.assignment[party * self.scenario.n_settings + setting]
    }

    /// Flat outcome-tuple index produced under setting tuple `settings`.
    pub fn outcome_index_for(&self, settings: &[usize]) -> usize {
        settings
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &m)| {
                acc * self.scenario.n_outcomes + self.outcome(j, m) - 1
            })
    }

    pub fn to_table(&self) -> ProbabilityTable {
        table_from_strategy(self)
    }

    /// Assignment digits as a compact string, e.g. `"1212"`.
    pub fn digits(&self) -> String {
        self.assignment
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(if self.scenario.n_outcomes > 9 { "," } else { "" })
    }
}

/// Point-mass table: `p(α⃗|m⃗) = 1` iff `α_j = α_j(m_j)` for all `j`.
pub fn table_from_strategy(s: &DeterministicStrategy) -> ProbabilityTable {
    let sc = s.scenario;
    let n_out = sc.outcome_tuple_count() as usize;
    let n_set = sc.setting_tuple_count() as usize;
    let mut values = vec![0.0; n_out * n_set];
    for mi in 0..n_set {
        let m = decode_digits(mi, sc.n_settings, sc.n_parties);
        values[mi * n_out + s.outcome_index_for(&m)] = 1.0;
    }
    ProbabilityTable {
        scenario: sc,
        values,
    }
}

/// Convex mixture of deterministic strategies, weights `ρ(λ)`.
#[derive(Debug, Clone)]
pub struct LhvMixture {
    components: Vec<(f64, DeterministicStrategy)>,
}

impl LhvMixture {
    pub fn new(components: Vec<(f64, DeterministicStrategy)>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Validation("mixture has no components".into()))?;
        let sc = first.1.scenario;
        for (_, s) in &components {
            sc.ensure_same(&s.scenario)?;
        }
        check_weights(components.iter().map(|(w, _)| *w))?;
        Ok(Self { components })
    }

    /// `n_components` strategies drawn uniformly with Dirichlet(1) weights.
    pub fn random(scenario: Scenario, n_components: usize, seed: u64) -> Result<Self> {
        let n_strat = scenario.n_strategies()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<(f64, DeterministicStrategy)> = (0..n_components.max(1))
            .map(|_| {
                let w = -(1.0 - rng.random::<f64>()).ln();
                let idx = rng.random_range(0..n_strat);
                (w, DeterministicStrategy::from_index(scenario, idx))
            })
            .collect();
        let total: f64 = raw.iter().map(|(w, _)| w).sum();
        Self::new(raw.into_iter().map(|(w, s)| (w / total, s)).collect())
    }

    pub fn components(&self) -> &[(f64, DeterministicStrategy)] {
        &self.components
    }

    pub fn to_table(&self) -> ProbabilityTable {
        table_from_mixture(self)
    }
}

/// `p(α⃗|m⃗) = Σ_λ ρ(λ) [α⃗ = α⃗_λ(m⃗)]`.
pub fn table_from_mixture(mix: &LhvMixture) -> ProbabilityTable {
    let sc = mix.components[0].1.scenario;
    let n_out = sc.outcome_tuple_count() as usize;
    let n_set = sc.setting_tuple_count() as usize;
    let mut values = vec![0.0; n_out * n_set];
    for (w, s) in &mix.components {
        for mi in 0..n_set {
            let m = decode_digits(mi, sc.n_settings, sc.n_parties);
            values[mi * n_out + s.outcome_index_for(&m)] += w;
        }
    }
    ProbabilityTable {
        scenario: sc,
        values,
    }
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    for w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::Validation(format!("mixture weight {w} is not ≥ 0")));
        }
        total += w;
    }
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Validation(format!("mixture weights sum to {total}")));
    }
    Ok(())
}
