//! Regression table comparing computed bounds and quantum values with the
//! closed forms known for the named inequalities.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ekb::ekb_quantum_max;
use crate::error::Result;
use crate::format::fmt_real;
use crate::functional::{preset_cglmp, preset_chsh, preset_ekb, preset_mermin, preset_zb, BellFunctional};
use crate::lhv::{exact_lhv_bound, fixed_alpha_bound, reference_bound, zb_combined_exact, BoundKind};
use crate::quantum::{
    cglmp_me_closed_form, maximally_entangled_state_for_sign, me_quantum_max, quantum_value,
    VIOLATION_MARGIN,
};
use crate::scenario::SignVector;

/// Agreement required between a computed value and its closed form.
pub const VALUE_TOL: f64 = 1e-9;
/// Agreement required between the ladder and operator routes.
pub const ROUTE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReproRow {
    pub inequality: String,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub b_lr_exact: f64,
    pub b_lr_reference: f64,
    pub reference_kind: BoundKind,
    pub b_lr_fixed_alpha: Option<f64>,
    pub argmax: String,
    pub q_m: Option<f64>,
    pub q_reference: Option<f64>,
    pub q_attained: Option<f64>,
    pub violated: Option<bool>,
    pub discrepancies: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReproTable {
    pub rows: Vec<ReproRow>,
}

impl ReproTable {
    pub fn discrepancy_count(&self) -> usize {
        self.rows.iter().map(|r| r.discrepancies.len()).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "inequality",
            "N",
            "k",
            "d",
            "B_LR_exact",
            "B_LR_reference",
            "reference_kind",
            "B_LR_fixed_alpha",
            "argmax",
            "Q_M",
            "Q_reference",
            "Q_attained",
            "violated",
            "discrepancies",
        ])?;
        let opt = |x: Option<f64>| x.map(fmt_real).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.inequality.clone(),
                r.n.to_string(),
                r.k.to_string(),
                r.d.to_string(),
                fmt_real(r.b_lr_exact),
                fmt_real(r.b_lr_reference),
                match r.reference_kind {
                    BoundKind::Tight => "tight".into(),
                    BoundKind::Upper => "upper".into(),
                },
                opt(r.b_lr_fixed_alpha),
                r.argmax.clone(),
                opt(r.q_m),
                opt(r.q_reference),
                opt(r.q_attained),
                r.violated.map(|v| v.to_string()).unwrap_or_default(),
                r.discrepancies.join("; "),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Fixed-width text rendering for terminals.
    pub fn render(&self) -> String {
        let mut s = format!(
            "{:<14} {:>2} {:>2} {:>2} {:>12} {:>12} {:>12} {:>9}  {}\n",
            "inequality", "N", "k", "d", "B_LR exact", "B_LR ref", "Q_M", "violated", "status"
        );
        for r in &self.rows {
            let q = r.q_m.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
            let v = r.violated.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
            let status = if r.discrepancies.is_empty() {
                "ok".to_string()
            } else {
                format!("FLAGGED: {}", r.discrepancies.join("; "))
            };
            s.push_str(&format!(
                "{:<14} {:>2} {:>2} {:>2} {:>12.6} {:>12.6} {:>12} {:>9}  {}\n",
                r.inequality, r.n, r.k, r.d, r.b_lr_exact, r.b_lr_reference, q, v, status
            ));
        }
        s
    }
}

fn functional_row(label: &str, b: &BellFunctional, q_reference: f64) -> Result<ReproRow> {
    let sc = *b.scenario();
    let mut discrepancies = Vec::new();
    let exact = exact_lhv_bound(b)?;
    let fixed = fixed_alpha_bound(b)?;
    let (reference, kind) = reference_bound(b.preset().expect("preset row"))?
        .expect("preset rows have a reference bound");
    match kind {
        BoundKind::Tight if (exact.value - reference).abs() > VALUE_TOL => discrepancies.push(
            format!("exact bound {} != reference {}", exact.value, reference),
        ),
        BoundKind::Upper if exact.value > reference + VALUE_TOL => discrepancies.push(format!(
            "exact bound {} exceeds reference {}",
            exact.value, reference
        )),
        _ => {}
    }
    if fixed.value > exact.value + VALUE_TOL {
        discrepancies.push("fixed-alpha bound above exact bound".into());
    }
    let witness = b.evaluate_on_probabilities(&exact.argmax_strategy.to_table())?;
    if (witness - exact.value).abs() > 1e-10 {
        discrepancies.push("argmax strategy does not reproduce the bound".into());
    }

    let q = me_quantum_max(b)?;
    if (q.bound - q_reference).abs() > VALUE_TOL {
        discrepancies.push(format!("Q_M {} != closed form {}", q.bound, q_reference));
    }
    if q.gap.abs() > VALUE_TOL {
        discrepancies.push(format!("Q_M not attained (gap {:e})", q.gap));
    }
    let psi = maximally_entangled_state_for_sign(sc, b.sign())?;
    let routes = quantum_value(b, &psi, &q.nu)?;
    if routes.route_gap() > ROUTE_TOL {
        discrepancies.push(format!("operator routes differ by {:e}", routes.route_gap()));
    }

    Ok(ReproRow {
        inequality: label.into(),
        n: sc.n_parties,
        k: sc.n_settings,
        d: sc.n_outcomes,
        b_lr_exact: exact.value,
        b_lr_reference: reference,
        reference_kind: kind,
        b_lr_fixed_alpha: Some(fixed.value),
        argmax: exact.argmax_strategy.digits(),
        q_m: Some(q.bound),
        q_reference: Some(q_reference),
        q_attained: Some(q.attained),
        violated: Some(q.bound > exact.value + VIOLATION_MARGIN),
        discrepancies,
    })
}

fn zb_combined_row(n: usize) -> Result<ReproRow> {
    let exact = zb_combined_exact(n)?;
    let reference = (1u64 << n) as f64;
    let mut discrepancies = Vec::new();
    if (exact.value - reference).abs() > VALUE_TOL {
        discrepancies.push(format!(
            "combined maximum {:.6} != stated bound {}",
            exact.value, reference
        ));
    }
    Ok(ReproRow {
        inequality: "zb-combined".into(),
        n,
        k: 2,
        d: 2,
        b_lr_exact: exact.value,
        b_lr_reference: reference,
        reference_kind: BoundKind::Tight,
        b_lr_fixed_alpha: None,
        argmax: exact.argmax_strategy.digits(),
        q_m: None,
        q_reference: None,
        q_attained: None,
        violated: None,
        discrepancies,
    })
}

/// Builds the full regression table.
pub fn reproduce() -> Result<ReproTable> {
    let sqrt2 = 2f64.sqrt();
    let mut rows = vec![functional_row("chsh", &preset_chsh()?, 2.0 * sqrt2)?];
    for d in 2..=4 {
        rows.push(functional_row("cglmp", &preset_cglmp(d)?, cglmp_me_closed_form(d))?);
    }
    for n in 2..=5 {
        rows.push(functional_row(
            "mermin",
            &preset_mermin(n)?,
            (1u64 << (n - 1)) as f64,
        )?);
    }
    for n in 2..=3 {
        rows.push(functional_row(
            "zb",
            &preset_zb(n, SignVector::plus(n))?,
            (1u64 << n) as f64 / sqrt2,
        )?);
        rows.push(zb_combined_row(n)?);
    }
    for k in 2..=4 {
        let f1 = Complex64::new(0.5, 0.0);
        rows.push(functional_row("ekb", &preset_ekb(k, f1)?, ekb_quantum_max(k, f1)?)?);
    }
    Ok(ReproTable { rows })
}
