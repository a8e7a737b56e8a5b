//! Command-line front end for the experiment drivers.
//!
//! Exit codes: 0 success, 1 I/O error, 2 config error, 3 no feasible solve
//! anywhere, 4 solver failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bdnoma::cccp;
use bdnoma::dc::build_coeff_tables;
use bdnoma::experiments::{self, config, ExperimentConfig, Outcome, OutputFormat};
use bdnoma::montecarlo::sample_instance;
use bdnoma::subproblem::{assemble, ProblemShape};
use bdnoma::SecrecyTargets;

#[derive(Parser, Debug)]
#[command(name = "bdnoma", version, about = "Secure beamforming for NOMA backscatter networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Also write an SVG line plot per table.
    #[arg(long, global = true)]
    emit_svg: bool,
    /// Write the first convex subproblem of trial 0 as text to this path.
    #[arg(long, global = true, value_name = "PATH")]
    dump_subproblem: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Solve trial 0 at every configured target pair.
    Solve,
    /// Per-iteration CCCP traces.
    Converge,
    /// NOMA and OMA rate region over the target grid.
    Region,
    /// Mean rate against the reflection coefficient.
    AlphaSweep,
    /// Monte Carlo check of the outage guarantee.
    Validate,
    /// Paired NOMA and OMA rates per trial.
    OmaCompare,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Format {
    Csv,
    Json,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, config::ConfigError> {
    let base = match &cli.config {
        Some(p) => config::parse_file(p)?,
        None => ExperimentConfig::default(),
    };
    let mut raw = base.to_raw();
    if let Some(s) = cli.seed {
        raw.seed = Some(s);
    }
    if let Some(o) = &cli.out {
        raw.out = Some(o.clone());
    }
    if let Some(f) = cli.format {
        raw.format = Some(match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        });
    }
    if cli.emit_svg {
        raw.emit_svg = Some(true);
    }
    config::resolve(raw)
}

fn dump_subproblem(cfg: &ExperimentConfig, path: &Path) -> Result<(), String> {
    let inst = sample_instance(&cfg.profile, experiments::trial_seed(cfg.seed, 0)).map_err(|e| e.to_string())?;
    let [r_c, r_e] = cfg.targets[0];
    let t = SecrecyTargets::new(r_c, r_e, cfg.profile.epsilon).map_err(|e| e.to_string())?;
    let anchor = match cccp::initialize(&inst, &t, &cfg.cccp).map_err(|e| e.to_string())? {
        Some(a) => a,
        None => cccp::split_anchor(&inst, &ProblemShape::noma(&t), cfg.cccp.splits[0]),
    };
    let spec = assemble(&inst, &t, &anchor, &build_coeff_tables(&inst)).map_err(|e| e.to_string())?;
    let mut file = std::fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
    spec.write_text(&mut file).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cmd: Command, cfg: &ExperimentConfig) -> bdnoma::Result<Outcome> {
    let progress = |msg: &str| eprintln!("{msg}");
    let p: experiments::Progress = Some(&progress);
    match cmd {
        Command::Solve => experiments::run_solve(cfg, p).map(|(o, _)| o),
        Command::Converge => experiments::run_converge(cfg, p),
        Command::Region => experiments::run_region(cfg, p),
        Command::AlphaSweep => experiments::run_alpha_sweep(cfg, p),
        Command::Validate => experiments::run_validate(cfg, p),
        Command::OmaCompare => experiments::run_oma_compare(cfg, p),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.out).and_then(|()| std::fs::write(cfg.out.join("config.toml"), cfg.to_toml())) {
        eprintln!("error: cannot write to {}: {e}", cfg.out.display());
        return ExitCode::from(1);
    }
    if let Some(path) = &cli.dump_subproblem {
        match dump_subproblem(&cfg, path) {
            Ok(()) => eprintln!("subproblem written to {}", path.display()),
            Err(e) => eprintln!("warning: no subproblem dump: {e}"),
        }
    }
    let outcome = match run(cli.command, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    };
    for table in &outcome.tables {
        match experiments::emit(table, &cfg.out, cfg.format, cfg.emit_svg) {
            Ok(paths) => paths.iter().for_each(|p| eprintln!("wrote {}", p.display())),
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", table.name);
                return ExitCode::from(1);
            }
        }
    }
    let t = outcome.tally;
    eprintln!("{} solves: {} feasible, {} infeasible, {} failed", t.solves, t.feasible, t.infeasible, t.failures);
    if t.failures > 0 {
        ExitCode::from(4)
    } else if t.solves > 0 && t.feasible == 0 {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}
