//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria that cannot be met as stated are listed in `KNOWN_FAILURES`;
//! they still print FAIL. The run fails if any other criterion fails, or if
//! a known failure starts passing (so the list stays honest).

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gbell_core::correlation::{correlations_from_probabilities, probabilities_from_correlations};
use gbell_core::lhv::{zb_combined_value, zb_family};
use gbell_core::quantum::{cglmp_me_closed_form, ladder_identity_check};
use gbell_core::report::reproduce;
use gbell_core::*;

const KNOWN_FAILURES: &[(u32, &str)] = &[
    (4, "Σ over all 2^N sign vectors reaches 2^(N+1) on a deterministic strategy"),
    (5, "at k=2, θ=0 the functional is E00 − E11: quantum and LR values are both 4|f(1)|"),
    (10, "the regression gate flags the two ZB combined rows (see criterion 4)"),
];

struct Check {
    pass: bool,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            pass: true,
            notes: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, note: impl Into<String>) {
        if !ok {
            self.pass = false;
            self.notes.push(note.into());
        }
    }

    fn info(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    fn runtime(&mut self, start: Instant, limit: Duration) {
        let t = start.elapsed();
        self.require(t < limit, format!("runtime {t:?} ≥ {limit:?}"));
    }
}

fn scenario(n: usize, k: usize, d: usize) -> Scenario {
    Scenario::new(n, k, d).unwrap()
}

fn c1_chsh() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let b = preset_chsh().unwrap();
    let lhv = exact_lhv_bound(&b).unwrap();
    c.require(lhv.value == 2.0, format!("B_LR = {}", lhv.value));
    c.require(lhv.evaluated == 16, format!("{} strategies", lhv.evaluated));
    let q = me_quantum_max(&b).unwrap();
    let target = 2.0 * 2f64.sqrt();
    c.require((q.bound - target).abs() <= 1e-10, format!("Q_M = {}", q.bound));
    c.require((q.attained - target).abs() <= 1e-10, format!("attained {}", q.attained));
    c.runtime(start, Duration::from_secs(1));
    c
}

fn c2_cglmp() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let b = preset_cglmp(3).unwrap();
    let lhv = exact_lhv_bound(&b).unwrap();
    c.require((lhv.value - 2.0).abs() <= 1e-9, format!("B_LR = {}", lhv.value));
    let target = 8.0 / (3.0 * 3f64.sqrt()) + 4.0 / 3.0;
    let q = me_quantum_max(&b).unwrap();
    c.require((q.bound - target).abs() <= 1e-9, format!("Q_M = {}", q.bound));
    c.require(
        (cglmp_me_closed_form(3) - target).abs() <= 1e-9,
        "closed form disagrees",
    );
    let psi = maximally_entangled_state_for_sign(*b.scenario(), b.sign()).unwrap();
    let routes = quantum_value(&b, &psi, &q.nu).unwrap();
    c.require(
        (routes.operators - target).abs() <= 1e-9,
        format!("operator route {}", routes.operators),
    );
    c.require(
        (routes.ladder - target).abs() <= 1e-9,
        format!("ladder route {}", routes.ladder),
    );
    for d in 2..=10 {
        let r = violation_report(&preset_cglmp(d).unwrap()).unwrap();
        c.require(r.violated, format!("d={d} not violated ({} vs {})", r.q_m, r.b_lr));
    }
    c.runtime(start, Duration::from_secs(10));
    c
}

fn c3_mermin() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    for n in 2..=5usize {
        let expected = if n % 2 == 1 {
            2f64.powi((n as i32 - 1) / 2)
        } else {
            2f64.powi(n as i32 / 2)
        };
        let r = exact_lhv_bound(&preset_mermin(n).unwrap()).unwrap();
        c.require(r.evaluated <= 1 << 10, format!("N={n}: {} strategies", r.evaluated));
        c.require(
            (r.value - expected).abs() <= 1e-12,
            format!("N={n}: {} != {expected}", r.value),
        );
    }
    c.runtime(start, Duration::from_secs(5));
    c
}

fn c4_zb_combined() -> Check {
    let mut c = Check::new();
    for n in 2..=3usize {
        let family = zb_family(n).unwrap();
        let sc = *family[0].scenario();
        let bound = (1u64 << n) as f64;
        let mut best: f64 = 0.0;
        for i in 0..sc.n_strategies().unwrap() {
            let t = DeterministicStrategy::from_index(sc, i).to_table();
            best = best.max(zb_combined_value(&family, &t).unwrap());
        }
        c.require(
            best <= bound + 1e-9,
            format!("N={n}: deterministic max {best:.6} > {bound}"),
        );
        c.require(
            (best - bound).abs() <= 1e-9 || best > bound,
            format!("N={n}: bound {bound} not attained (max {best:.6})"),
        );
        let mut worst: f64 = 0.0;
        for seed in 0..1000 {
            let t = LhvMixture::random(sc, 4, seed).unwrap().to_table();
            worst = worst.max(zb_combined_value(&family, &t).unwrap());
        }
        c.require(
            worst <= bound + 1e-9,
            format!("N={n}: mixture max {worst:.6} > {bound}"),
        );
    }
    c
}

fn c5_ekb() -> Check {
    let mut c = Check::new();
    let magnitude = 0.5;
    for k in 2..=5usize {
        let limit = PI / (2.0 * k as f64);
        for j in 0..5 {
            let theta = limit * j as f64 / 4.0;
            let f1 = Complex64::from_polar(magnitude, theta);
            let b = preset_ekb(k, f1).unwrap();
            let exact = exact_lhv_bound(&b).unwrap().value;
            let closed = ekb_closed_form_bound(k, f1).unwrap();
            c.require(
                (exact - closed).abs() <= 1e-9,
                format!("k={k} θ={theta:.4}: closed {closed} vs exact {exact}"),
            );
            let q = ekb_quantum_max(k, f1).unwrap();
            let target = (k * k) as f64 * magnitude;
            c.require(
                (q - target).abs() <= 1e-9 * target,
                format!("k={k} θ={theta:.4}: k·σ_max {q} vs {target}"),
            );
        }
        let f1 = Complex64::new(magnitude, 0.0);
        let q = ekb_quantum_max(k, f1).unwrap();
        let lr = exact_lhv_bound(&preset_ekb(k, f1).unwrap()).unwrap().value;
        c.require(q > lr + 1e-9, format!("k={k} θ=0: quantum {q} not above LR {lr}"));
    }
    c
}

fn c6_duality() -> Check {
    let mut c = Check::new();
    let mut worst: f64 = 0.0;
    let mut tables = 0;
    for n in 1..=3 {
        for d in 2..=4 {
            for k in 1..=3 {
                let sc = scenario(n, k, d);
                for sign in SignVector::all(n) {
                    for seed in 0..100 {
                        let p = random_table(sc, seed).unwrap();
                        let e = correlations_from_probabilities(&p, &sign).unwrap();
                        let back = probabilities_from_correlations(&e).unwrap();
                        worst = worst.max(back.max_abs_diff(&p));
                        tables += 1;
                    }
                }
            }
        }
    }
    c.require(worst <= 1e-12, format!("max round-trip error {worst:e}"));
    c.info(format!("{tables} tables, max error {worst:.1e}"));
    c
}

fn c7_ladder() -> Check {
    let mut c = Check::new();
    let mut worst: f64 = 0.0;
    for d in 2..=6 {
        for k in 2..=5 {
            for n in 1..d {
                worst = worst.max(ladder_identity_check(&scenario(1, k, d), n).unwrap());
            }
        }
    }
    c.require(worst <= 1e-12, format!("max deviation {worst:e}"));
    let single = ladder_identity_check(&scenario(1, 1, 3), 1).unwrap();
    c.info(format!(
        "k=2..5 max deviation {worst:.1e}; k=1 excluded (single setting gives the cyclic shift, deviation {single})"
    ));
    c
}

fn presets() -> Vec<BellFunctional> {
    let mut v = vec![preset_chsh().unwrap()];
    v.extend((2..=4).map(|d| preset_cglmp(d).unwrap()));
    v.extend((2..=5).map(|n| preset_mermin(n).unwrap()));
    for n in 2..=3 {
        v.extend(SignVector::all(n).into_iter().map(|s| preset_zb(n, s).unwrap()));
    }
    v.extend((2..=4).map(|k| preset_ekb(k, Complex64::new(0.5, 0.2)).unwrap()));
    v
}

fn c8_two_forms() -> Check {
    let mut c = Check::new();
    let mut worst: f64 = 0.0;
    for b in presets() {
        for seed in 0..200 {
            let p = random_table(*b.scenario(), seed).unwrap();
            let e = correlations_from_probabilities(&p, b.sign()).unwrap();
            let via_p = b.evaluate_on_probabilities(&p).unwrap();
            let via_e = b.evaluate_on_correlations(&e).unwrap();
            worst = worst.max((via_p - via_e).abs());
        }
    }
    c.require(worst <= 1e-9, format!("max disagreement {worst:e}"));
    c
}

fn c9_convexity() -> Check {
    let mut c = Check::new();
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=3 {
        for k in 1..=3 {
            for d in 2..=3 {
                let sc = scenario(n, k, d);
                let seed = (n * 100 + k * 10 + d) as u64;
                let mut functionals = vec![BellFunctional::random_coefficients(sc, seed).unwrap()];
                functionals.extend(presets().into_iter().filter(|b| b.scenario().same_shape(&sc)));
                for b in functionals {
                    let bound = exact_lhv_bound(&b).unwrap().value;
                    for s in 0..500 {
                        let t = LhvMixture::random(sc, 1 + (s as usize % 6), seed * 1000 + s)
                            .unwrap()
                            .to_table();
                        let excess = b.evaluate_on_probabilities(&t).unwrap() - bound;
                        worst = worst.max(excess);
                        c.require(
                            excess <= 1e-9,
                            format!("{} on {sc:?}: exceeds bound by {excess:e}", b.name()),
                        );
                    }
                }
            }
        }
    }
    c.info(format!("largest value − bound {worst:.1e}"));
    c
}

fn c10_reproduce() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let render = |t: &gbell_core::report::ReproTable| {
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        let json = serde_json::to_vec_pretty(t).unwrap();
        (csv, json, t.render())
    };
    let first = reproduce().unwrap();
    let second = reproduce().unwrap();
    c.runtime(start, Duration::from_secs(60));
    c.require(render(&first) == render(&second), "reruns differ");
    let flagged: Vec<_> = first
        .rows
        .iter()
        .filter(|r| !r.discrepancies.is_empty())
        .map(|r| format!("{} N={}", r.inequality, r.n))
        .collect();
    c.require(flagged.is_empty(), format!("flagged: {}", flagged.join(", ")));
    c
}

type Criterion = (u32, &'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "CHSH bound and quantum value", c1_chsh),
        (2, "CGLMP d=3 and violation for d=2..10", c2_cglmp),
        (3, "Mermin bounds N=2..5", c3_mermin),
        (4, "ZB combined bound", c4_zb_combined),
        (5, "EKB closed forms, SVD maximum, violation", c5_ekb),
        (6, "Fourier round trip", c6_duality),
        (7, "ladder identity", c7_ladder),
        (8, "probability and correlation forms agree", c8_two_forms),
        (9, "LHV mixtures stay below the exact bound", c9_convexity),
        (10, "reproduce: runtime, determinism, no flags", c10_reproduce),
    ];
    let mut unexpected = Vec::new();
    for (id, title, run) in criteria {
        let check = run();
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == id);
        let verdict = if check.pass { "PASS" } else { "FAIL" };
        let mut line = format!("criterion {id:>2}: {verdict}  {title}");
        if !check.notes.is_empty() {
            line.push_str(&format!(" — {}", check.notes.join("; ")));
        }
        if let (false, Some((_, why))) = (check.pass, known) {
            line.push_str(&format!(" [known: {why}]"));
        }
        println!("{line}");
        match (check.pass, known) {
            (false, None) => unexpected.push(format!("criterion {id} failed")),
            (true, Some(_)) => unexpected.push(format!(
                "criterion {id} passes but is listed as a known failure"
            )),
            _ => {}
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: only the {} known failures", KNOWN_FAILURES.len());
        ExitCode::SUCCESS
    } else {
        for u in &unexpected {
            println!("acceptance: {u}");
        }
        ExitCode::FAILURE
    }
}
