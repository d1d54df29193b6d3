use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use migsim_core::metrics::MetricsReport;
use migsim_core::netgraph::SharingPolicy;
use migsim_core::scenario::{parse_scenario, run_simulation, Algorithm, RunOutput, Scenario};

const EXIT_VALIDATION: u8 = 2;
const EXIT_SIMULATION: u8 = 3;

/// Deterministic planner and simulator for concurrent live migrations.
#[derive(Parser)]
#[command(name = "migsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on a scenario and emit a report.
    Run(RunArgs),
    /// Run several algorithms on the same scenario and tabulate the results.
    Compare(CompareArgs),
    /// Parse and validate a scenario, printing it with all defaults filled.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (YAML or JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// slamig | onebyone | cqncr | fptas | oracle
    #[arg(long)]
    algo: String,
    /// ratio | free | reserved (defaults to the scenario's policy)
    #[arg(long)]
    policy: Option<String>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.json, tasks.csv and optional trace.
    #[arg(long)]
    out: PathBuf,
    /// Also write the full event trace as line-delimited JSON.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated algorithm list.
    #[arg(long, value_delimiter = ',')]
    algos: Vec<String>,
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run_cmd(args),
        Command::Compare(args) => compare_cmd(args),
        Command::Validate(args) => validate_cmd(args),
    }
}

fn load(path: &Path) -> Result<Scenario, ExitCode> {
    parse_scenario(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_VALIDATION)
    })
}

fn parse_policy(p: &Option<String>) -> Result<Option<SharingPolicy>, ExitCode> {
    match p {
        None => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|e: String| {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }),
    }
}

fn parse_algo(a: &str) -> Result<Algorithm, ExitCode> {
    a.parse().map_err(|e: String| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_VALIDATION)
    })
}

fn run_cmd(args: RunArgs) -> ExitCode {
    let scenario = match load(&args.scenario) {
        Ok(s) => s,
        Err(c) => return c,
    };
    let algo = match parse_algo(&args.algo) {
        Ok(a) => a,
        Err(c) => return c,
    };
    let policy = match parse_policy(&args.policy) {
        Ok(p) => p,
        Err(c) => return c,
    };
    let out = match run_simulation(&scenario, algo, policy, args.seed, args.trace) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SIMULATION);
        }
    };
    if let Err(e) = emit_run(&args.out, &out, args.trace) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_SIMULATION);
    }
    println!(
        "{}: total migration time {:.3} s, {} completed, {} failed, {} deadline misses (planned in {:.4} s)",
        out.report.algo,
        out.report.total_migration_time,
        out.report.completed,
        out.report.failed,
        out.report.deadline_misses,
        out.report.planner_runtime_s
    );
    ExitCode::SUCCESS
}

fn compare_cmd(args: CompareArgs) -> ExitCode {
    let scenario = match load(&args.scenario) {
        Ok(s) => s,
        Err(c) => return c,
    };
    let policy = match parse_policy(&args.policy) {
        Ok(p) => p,
        Err(c) => return c,
    };
    if args.algos.is_empty() {
        eprintln!("error: --algos requires at least one algorithm");
        return ExitCode::from(EXIT_VALIDATION);
    }
    let mut reports = Vec::new();
    for name in &args.algos {
        let algo = match parse_algo(name) {
            Ok(a) => a,
            Err(c) => return c,
        };
        match run_simulation(&scenario, algo, policy, args.seed, false) {
            Ok(o) => {
                if let Err(e) = emit_run(&args.out.join(algo.as_str()), &o, false) {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(EXIT_SIMULATION);
                }
                reports.push(o.report);
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_SIMULATION);
            }
        }
    }
    if let Err(e) = emit_compare(&args.out, &reports) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_SIMULATION);
    }
    for r in &reports {
        println!(
            "{:<10} total {:>10.3} s  misses {:>3}  avg downtime {:>8.4} s",
            r.algo, r.total_migration_time, r.deadline_misses, r.avg_downtime
        );
    }
    ExitCode::SUCCESS
}

fn validate_cmd(args: ValidateArgs) -> ExitCode {
    match load(&args.scenario) {
        Ok(s) => {
            match echo_string(&s) {
                Ok(text) => print!("{text}"),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_SIMULATION);
                }
            }
            ExitCode::SUCCESS
        }
        Err(c) => c,
    }
}

/// The scenario with every default made explicit, as pretty JSON.
fn echo_string(s: &Scenario) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(&s.doc)?)
}

fn emit_run(dir: &Path, out: &RunOutput, trace: bool) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let report_path = dir.join("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&out.report)?)
        .with_context(|| format!("writing {}", report_path.display()))?;
    write_tasks_csv(&dir.join("tasks.csv"), &out.report)?;
    if trace {
        let mut lines = String::new();
        for ev in &out.trace {
            lines.push_str(&serde_json::to_string(ev)?);
            lines.push('\n');
        }
        std::fs::write(dir.join("trace.jsonl"), lines)?;
    }
    Ok(())
}

fn write_tasks_csv(path: &Path, report: &MetricsReport) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "task",
        "completed",
        "completion_s",
        "exec_time_s",
        "downtime_s",
        "transferred_bits",
        "converged",
        "deadline_s",
        "slack_s",
        "missed",
    ])?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for t in &report.tasks {
        w.write_record([
            t.task.to_string(),
            t.completed.to_string(),
            fmt(t.completion),
            fmt(t.exec_time),
            fmt(t.downtime),
            t.transferred_bits.to_string(),
            t.converged.to_string(),
            fmt(t.deadline),
            fmt(t.slack),
            t.missed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn emit_compare(dir: &Path, reports: &[MetricsReport]) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("compare.csv"))?;
    w.write_record([
        "algo",
        "policy",
        "seed",
        "total_migration_time_s",
        "completed",
        "failed",
        "avg_exec_time_s",
        "avg_downtime_s",
        "total_transferred_bits",
        "deadline_misses",
        "total_slack_violation_s",
        "packets_delivered",
        "avg_transmission_time_s",
        "host_energy_j",
        "switch_energy_j",
    ])?;
    for r in reports {
        w.write_record([
            r.algo.clone(),
            r.policy.clone(),
            r.seed.to_string(),
            r.total_migration_time.to_string(),
            r.completed.to_string(),
            r.failed.to_string(),
            r.avg_exec_time.to_string(),
            r.avg_downtime.to_string(),
            r.total_transferred_bits.to_string(),
            r.deadline_misses.to_string(),
            r.total_slack_violation.to_string(),
            r.packets_delivered.to_string(),
            r.avg_transmission_time.to_string(),
            r.host_energy_j.to_string(),
            r.switch_energy_j.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
