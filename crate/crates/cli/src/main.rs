use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gbell_core::correlation::TensorJson;
use gbell_core::format::fmt_real;
use gbell_core::lhv::{closed_form_bound, BoundResult};
use gbell_core::probability::TableJson;
use gbell_core::quantum::operator_dump;
use gbell_core::report::reproduce;
use gbell_core::{
    correlations_from_probabilities, exact_lhv_bound, fixed_alpha_bound,
    probabilities_from_correlations, random_table, violation_report, CorrelationTensor, Error,
    ProbabilityTable,
};
use serde::Serialize;

mod config;
mod output;

use config::RunConfig;
use output::Outputs;

#[derive(Parser)]
#[command(name = "gbell", version, about = "Generalized Bell functionals: LHV bounds and quantum values")]
struct Cli {
    /// JSON config file; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact and fixed-α local-realistic bounds
    Bound(BoundArgs),
    /// Maximally-entangled quantum value and violation report
    Quantum(QuantumArgs),
    /// Probability table <-> correlation tensor
    Transform(TransformArgs),
    /// Regression table for the named inequalities
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    run: RunConfig,
    /// Report wall time on stderr
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct QuantumArgs {
    #[command(flatten)]
    run: RunConfig,
    /// Also write the measurement operators at the optimal phases
    #[arg(long)]
    dump_operators: bool,
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    run: RunConfig,
    /// Probability table (CSV, or JSON) or correlation tensor (JSON)
    #[arg(long, conflicts_with = "random")]
    input: Option<PathBuf>,
    /// Use a seeded random table instead of an input file
    #[arg(long)]
    random: bool,
}

#[derive(Args)]
struct ReproduceArgs {
    #[command(flatten)]
    run: RunConfig,
    #[arg(long)]
    timing: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::EnumerationTooLarge { .. } => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn merged(config: &Option<PathBuf>, run: RunConfig) -> gbell_core::Result<RunConfig> {
    Ok(match config {
        Some(path) => run.over(RunConfig::load(path)?),
        None => run,
    })
}

fn run(cli: Cli) -> gbell_core::Result<u8> {
    let started = Instant::now();
    let (timing, code) = match cli.command {
        Command::Bound(a) => (a.timing, cmd_bound(&merged(&cli.config, a.run)?)?),
        Command::Quantum(a) => (
            a.timing,
            cmd_quantum(&merged(&cli.config, a.run)?, a.dump_operators)?,
        ),
        Command::Transform(a) => (
            false,
            cmd_transform(&merged(&cli.config, a.run)?, a.input.as_deref(), a.random)?,
        ),
        Command::Reproduce(a) => (a.timing, cmd_reproduce(&merged(&cli.config, a.run)?)?),
    };
    if timing {
        eprintln!("wall time: {:.3} s", started.elapsed().as_secs_f64());
    }
    Ok(code)
}

#[derive(Serialize)]
struct BoundEntry {
    method: String,
    value: f64,
    argmax: String,
    argmax_index: usize,
    evaluated: u64,
}

impl From<&BoundResult> for BoundEntry {
    fn from(r: &BoundResult) -> Self {
        BoundEntry {
            method: r.method.to_string(),
            value: r.value,
            argmax: r.argmax_strategy.digits(),
            argmax_index: r.argmax_strategy.index(),
            evaluated: r.evaluated,
        }
    }
}

#[derive(Serialize)]
struct BoundReport {
    functional: String,
    scenario: gbell_core::Scenario,
    sign: String,
    bounds: Vec<BoundEntry>,
}

fn cmd_bound(cfg: &RunConfig) -> gbell_core::Result<u8> {
    let b = cfg.functional()?;
    let mut results = vec![exact_lhv_bound(&b)?, fixed_alpha_bound(&b)?];
    if let Some(c) = closed_form_bound(&b)? {
        results.push(c);
    }
    let report = BoundReport {
        functional: b.name(),
        scenario: *b.scenario(),
        sign: b.sign().to_string(),
        bounds: results.iter().map(BoundEntry::from).collect(),
    };

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["functional", "method", "value", "argmax", "argmax_index", "evaluated"])?;
    for e in &report.bounds {
        csv.write_record([
            report.functional.clone(),
            e.method.clone(),
            fmt_real(e.value),
            e.argmax.clone(),
            e.argmax_index.to_string(),
            e.evaluated.to_string(),
        ])?;
    }
    let mut out = Outputs::new(cfg.out_dir());
    out.json("bound.json", &report)?;
    out.add("bound.csv", csv_bytes(csv)?);
    out.commit()?;

    for e in &report.bounds {
        println!("{:<18} {:>22}  argmax {}", e.method, fmt_real(e.value), e.argmax);
    }
    Ok(0)
}

fn cmd_quantum(cfg: &RunConfig, dump: bool) -> gbell_core::Result<u8> {
    let b = cfg.functional()?;
    let r = violation_report(&b)?;

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record([
        "functional",
        "B_LR",
        "B_LR_method",
        "Q_M",
        "attained",
        "integer_grid_value",
        "gap",
        "violated",
        "svd_quantum_max",
    ])?;
    csv.write_record([
        r.functional.clone(),
        fmt_real(r.b_lr),
        r.b_lr_method.to_string(),
        fmt_real(r.q_m),
        fmt_real(r.attained),
        fmt_real(r.integer_grid_value),
        fmt_real(r.gap),
        r.violated.to_string(),
        r.svd_quantum_max.map(fmt_real).unwrap_or_default(),
    ])?;
    let mut out = Outputs::new(cfg.out_dir());
    out.json("quantum.json", &r)?;
    out.add("quantum.csv", csv_bytes(csv)?);
    if dump {
        out.json("operators.json", &operator_dump(b.scenario(), &r.nu)?)?;
    }
    out.commit()?;

    println!("B_LR  {}", fmt_real(r.b_lr));
    println!("Q_M   {}", fmt_real(r.q_m));
    println!("violated {}", r.violated);
    Ok(0)
}

#[derive(Serialize)]
struct TransformSummary {
    direction: &'static str,
    scenario: gbell_core::Scenario,
    sign: String,
    round_trip_max_error: f64,
}

fn cmd_transform(cfg: &RunConfig, input: Option<&Path>, random: bool) -> gbell_core::Result<u8> {
    let mut out = Outputs::new(cfg.out_dir());
    let summary = match (input, random) {
        (None, false) => {
            return Err(Error::Validation("transform needs --input or --random".into()))
        }
        (None, true) => {
            let table = random_table(cfg.scenario()?, cfg.seed())?;
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            out.add("table.csv", buf);
            forward(cfg, &table, &mut out)?
        }
        (Some(path), _) => match read_input(cfg, path)? {
            Input::Table(table) => forward(cfg, &table, &mut out)?,
            Input::Tensor(tensor) => {
                let table = probabilities_from_correlations(&tensor)?;
                let back = correlations_from_probabilities(&table, tensor.sign())?;
                let mut buf = Vec::new();
                table.write_csv(&mut buf)?;
                out.add("table.csv", buf);
                TransformSummary {
                    direction: "inverse",
                    scenario: *table.scenario(),
                    sign: tensor.sign().to_string(),
                    round_trip_max_error: back.max_abs_diff(&tensor),
                }
            }
        },
    };
    out.json("transform.json", &summary)?;
    out.commit()?;
    println!(
        "{} round-trip max error {:e}",
        summary.direction, summary.round_trip_max_error
    );
    Ok(0)
}

fn forward(
    cfg: &RunConfig,
    table: &ProbabilityTable,
    out: &mut Outputs,
) -> gbell_core::Result<TransformSummary> {
    let sign = cfg.sign_for(table.scenario().n_parties)?;
    let tensor = correlations_from_probabilities(table, &sign)?;
    let back = probabilities_from_correlations(&tensor)?;
    out.json("tensor.json", &tensor.to_json())?;
    let mut buf = Vec::new();
    back.write_csv(&mut buf)?;
    out.add("roundtrip.csv", buf);
    Ok(TransformSummary {
        direction: "forward",
        scenario: *table.scenario(),
        sign: sign.to_string(),
        round_trip_max_error: back.max_abs_diff(table),
    })
}

enum Input {
    Table(ProbabilityTable),
    Tensor(CorrelationTensor),
}

fn read_input(cfg: &RunConfig, path: &Path) -> gbell_core::Result<Input> {
    if !path.exists() {
        return Err(Error::Validation(format!(
            "input file {} does not exist",
            path.display()
        )));
    }
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if !is_json {
        let file = std::fs::File::open(path)?;
        return Ok(Input::Table(ProbabilityTable::read_csv(cfg.scenario()?, file)?));
    }
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("entries").is_some() {
        let json: TensorJson = serde_json::from_value(value)?;
        Ok(Input::Tensor(CorrelationTensor::from_json(&json)?))
    } else {
        let json: TableJson = serde_json::from_value(value)?;
        Ok(Input::Table(ProbabilityTable::from_json(&json)?))
    }
}

fn cmd_reproduce(cfg: &RunConfig) -> gbell_core::Result<u8> {
    let table = reproduce()?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    let mut out = Outputs::new(cfg.out_dir());
    out.add("reproduce.csv", buf);
    out.json("reproduce.json", &table)?;
    out.commit()?;

    print!("{}", table.render());
    let flagged = table.discrepancy_count();
    if flagged > 0 {
        eprintln!("{flagged} discrepancies flagged");
        return Ok(4);
    }
    Ok(0)
}

fn csv_bytes(w: csv::Writer<Vec<u8>>) -> gbell_core::Result<Vec<u8>> {
    w.into_inner()
        .map_err(|e| Error::Io(e.into_error()))
}
