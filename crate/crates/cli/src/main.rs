//! `scplan`: command-line runner for multi-tenant small-cell planning
//! experiments.
//!
//! Exit codes: 0 ok, 1 invariant violation, 2 I/O or parse error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use scplan::experiment::{plan_once, translate_only, ScSpecMode};
use scplan::planner::Step4Threshold;
use scplan::report::emit_specs;
use scplan::scenario_file::{LayoutFragment, Overrides};
use scplan::{bundled_scenario, emit_report, run_experiment, Error, Execution, ExperimentConfig, Method, ScenarioFile};

#[derive(Parser)]
#[command(
    name = "scplan",
    version,
    about = "Capacity self-planning for multi-tenant small-cell networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every scenario invariant and list the violated ones.
    Validate(Common),
    /// Translate the new tenant's SLA into planning specs (specs.csv).
    Translate(Common),
    /// One planner invocation at the new tenant's arrival, no monitoring.
    Plan(Common),
    /// Full experiment: monitoring, planning on trigger, final evaluation.
    Run(Common),
    /// Run every method and write a side-by-side comparison.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON; the bundled new-tenant scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_parser = parse_method, default_value = "corr-px")]
    method: Method,
    #[arg(long)]
    horizon: Option<usize>,
    /// Candidate-site draw seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    nmax: Option<usize>,
    /// Consecutive violations before the planner fires.
    #[arg(long = "L")]
    l: Option<usize>,
    /// Monitoring window length in steps.
    #[arg(long = "T")]
    t: Option<usize>,
    #[arg(long, value_enum)]
    step4_threshold: Option<Step4Arg>,
    /// Replace the initial cells with a layout fragment (e.g. a previous layout.json).
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Disable data parallelism.
    #[arg(long)]
    sequential: bool,
    #[arg(long, value_enum, default_value = "spread")]
    sc_specs: ScSpecsArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Step4Arg {
    Printed,
    Kmax,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScSpecsArg {
    /// Spread each SC-level spec over the pixels the cell serves.
    Spread,
    /// Re-translate SC-level specs over every new layout.
    Retranslate,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Common {
    fn overrides(&self) -> Result<Overrides, Error> {
        Ok(Overrides {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            k_max: self.kmax,
            n_max_sc: self.nmax,
            consecutive_l: self.l,
            window_t: self.t,
            step4_threshold: self.step4_threshold.map(|s| match s {
                Step4Arg::Printed => Step4Threshold::Printed,
                Step4Arg::Kmax => Step4Threshold::Kmax,
            }),
            horizon: self.horizon,
            seed: self.seed,
            layout: self.layout.as_deref().map(LayoutFragment::load).transpose()?,
        })
    }

    fn scenario_file(&self) -> Result<ScenarioFile, Error> {
        let mut file = match &self.scenario {
            Some(p) => ScenarioFile::load(p)?,
            None => bundled_scenario(),
        };
        file.apply(&self.overrides()?);
        Ok(file)
    }

    fn config(&self, method: Method) -> ExperimentConfig {
        ExperimentConfig {
            method,
            sc_specs: match self.sc_specs {
                ScSpecsArg::Spread => ScSpecMode::Spread,
                ScSpecsArg::Retranslate => ScSpecMode::Retranslate,
            },
            execution: if self.sequential {
                Execution::Sequential
            } else {
                Execution::default()
            },
        }
    }
}

enum Failure {
    Invariant(String),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Invariant(e.to_string())
        }
    }
}

fn validate(args: &Common) -> Result<(), Failure> {
    let file = args.scenario_file()?;
    let problems = file.violations();
    for p in &problems {
        println!("{p}");
    }
    println!("{} violations", problems.len());
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("{} violations", problems.len())))
    }
}

fn translate(args: &Common) -> Result<(), Failure> {
    let s = args.scenario_file()?.resolve()?;
    let tr = translate_only(&s, &args.config(args.method))?;
    emit_specs(&tr, &args.out)?;
    let total: f64 = tr.specs.cells.iter().map(|c| c.1).sum();
    println!(
        "{}: {} specs for {} cells at busy hour {}, total {} Mbps -> {}",
        args.method,
        tr.tenant_id,
        tr.specs.cells.len(),
        tr.busy_hour,
        total,
        args.out.join("specs.csv").display()
    );
    Ok(())
}

fn summary_line(r: &scplan::Report) -> String {
    format!(
        "{}: {} -> {} cells, {} planner runs, total required {:.2} MHz at step {}",
        r.method,
        r.initial.len(),
        r.cell_count(),
        r.plans.len(),
        r.total_required_mhz(),
        r.eval_step
    )
}

fn plan(args: &Common, full: bool) -> Result<(), Failure> {
    let s = args.scenario_file()?.resolve()?;
    let cfg = args.config(args.method);
    let report = if full {
        run_experiment(&s, &cfg)?
    } else {
        plan_once(&s, &cfg)?
    };
    emit_report(&report, &args.out)?;
    println!("{} -> {}", summary_line(&report), args.out.display());
    Ok(())
}

fn write_text(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, body).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn report(args: &Common) -> Result<(), Failure> {
    let s = args.scenario_file()?.resolve()?;
    let mut rows = Vec::new();
    for method in Method::ALL {
        let r = run_experiment(&s, &args.config(method))?;
        emit_report(&r, &args.out.join(method.as_str()))?;
        println!("{}", summary_line(&r));
        rows.push((method, r.cell_count(), r.total_required_mhz(), r.plans.len()));
    }
    let oracle = rows.iter().find(|r| r.0 == Method::Oracle).map(|r| r.2);
    let mut csv = String::from("method,cells,total_required_mhz,planner_runs,below_oracle_total\n");
    for (m, cells, total, plans) in &rows {
        let below = oracle.is_some_and(|o| *m != Method::Oracle && *total < o);
        if below {
            println!("note: {m} needs less bandwidth than the oracle ({total:.2} MHz) with {cells} cells");
        }
        let _ = writeln!(csv, "{m},{cells},{total},{plans},{below}");
    }
    write_text(&args.out.join("comparison.csv"), &csv)?;
    println!("-> {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(a) => validate(a),
        Command::Translate(a) => translate(a),
        Command::Plan(a) => plan(a, false),
        Command::Run(a) => plan(a, true),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
