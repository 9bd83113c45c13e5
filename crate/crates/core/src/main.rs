use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use blockrg::checks::{bounds_check, criteria_of, run_criterion, Context, CRITERIA};
use blockrg::config::RunConfig;
use blockrg::report::Report;
use blockrg::{Error, Result};

#[derive(Parser)]
#[command(name = "blockrg", version, about = "Block-averaging RG oracles for lattice QED on small tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for report.json and the CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiplies every tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Gauge covariance, minimizers, fermion mass gap, scaling laws (criteria 2, 3, 4, 8).
    LatticeReport,
    /// Partition function preservation across block steps (criterion 7).
    RgStepVerify,
    /// Berezin, cluster and determinant expansion oracles (criteria 1, 5, 6).
    ClusterVerify,
    /// Partition of unity, region sums and large field suppression (criterion 9).
    LargefieldAudit,
    /// Counterterm boundary value problem and bound ladder (criterion 10).
    FlowSolve,
    /// Per-polymer bounds of the lattice response table.
    BoundsCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::LatticeReport => "lattice-report",
            Command::RgStepVerify => "rg-step-verify",
            Command::ClusterVerify => "cluster-verify",
            Command::LargefieldAudit => "largefield-audit",
            Command::FlowSolve => "flow-solve",
            Command::BoundsCheck => "bounds-check",
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if !(cli.tolerance_scale > 0.0) {
        return Err(Error::Config("tolerance scale must be positive".into()));
    }
    cfg.tolerances = cfg.tolerances.scaled(cli.tolerance_scale);
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cmd: Command, cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let ctx = Context {
        config: cfg,
        tol: cfg.tolerances,
    };
    if let Command::LatticeReport = cmd {
        let spec = cfg.lattice()?;
        report.put("sites", spec.site_count())?;
        report.put("bonds", spec.bond_count())?;
        report.put("plaquettes", spec.plaquette_count())?;
        report.put("spacing", spec.spacing())?;
    }
    if let Command::BoundsCheck = cmd {
        return bounds_check(&ctx, report);
    }
    for &n in criteria_of(cmd.name()) {
        let before = report.checks.len();
        let start = Instant::now();
        run_criterion(n, &ctx, report)?;
        eprintln!("criterion {n}: {:.1} s", start.elapsed().as_secs_f64());
        let ok = report.checks[before..].iter().all(|c| c.passed);
        report.put(&format!("criterion_{n}"), ok)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = cli.command;
    let (cfg, loaded) = match load(&cli) {
        Ok(cfg) => (cfg, Ok(())),
        Err(e) => (RunConfig::default(), Err(e)),
    };
    let config_json = serde_json::to_value(&cfg).unwrap_or(serde_json::Value::Null);
    let mut report = Report::new(cmd.name(), cfg.seed, config_json);
    if let Err(e) = loaded.and_then(|_| execute(cmd, &cfg, &mut report)) {
        report.fail(e.to_string());
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("blockrg-out").join(cmd.name()));
    print!("{}", report.summary());
    for &n in criteria_of(cmd.name()) {
        let name = CRITERIA.iter().find(|c| c.0 == n).map_or("", |c| c.1);
        let ok = report.data.get(&format!("criterion_{n}")).and_then(|v| v.as_bool()) == Some(true);
        println!("criterion {n:>2} {name}: {}", if ok { "pass" } else { "FAIL" });
    }
    if let Err(e) = report.write_to(&out) {
        eprintln!("could not write {}: {e}", out.display());
        return ExitCode::from(2);
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
