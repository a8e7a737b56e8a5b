//! Experiment drivers behind the command-line tool. Each runner returns a
//! [`Table`] with a fixed header plus a tally of solver outcomes.
//!
//! Trial `k` always uses the instance drawn from `trial_seed(seed, k)`, so
//! schemes, grid points and alpha values are compared on paired channels.

pub mod config;
pub mod output;

use rayon::prelude::*;

use crate::cccp::{self, SolveReport, SolveStatus};
use crate::error::Result;
use crate::model::{NetworkInstance, SecrecyTargets};
use crate::montecarlo::{estimate_outage, sample_instance, ChannelProfile};
use crate::oma::solve_oma;

pub use config::{ConfigError, ExperimentConfig, Grid, OutputFormat, RegionMode};
pub use output::{emit, Cell, Table};

pub const SOLVE_HEADERS: &[&str] = &[
    "r_c",
    "r_e",
    "status",
    "r_b",
    "iterations",
    "omega",
    "zeta",
    "rank_ratio_c",
    "rank_ratio_e",
    "max_residual",
];
pub const BEAM_HEADERS: &[&str] = &["r_c", "r_e", "beam", "antenna", "re", "im"];
pub const CONVERGE_HEADERS: &[&str] = &["iter", "r_c", "r_e", "omega", "r_b"];
pub const REGION_HEADERS: &[&str] = &[
    "r_target",
    "r_b_noma_mean",
    "r_b_oma_mean",
    "feasible_frac_noma",
    "feasible_frac_oma",
];
pub const ALPHA_HEADERS: &[&str] = &["alpha", "r_b_mean", "r_b_ci95", "feasible_frac"];
pub const VALIDATE_HEADERS: &[&str] = &["trial", "r_b", "closedform_success", "empirical_success", "pass"];
pub const COMPARE_HEADERS: &[&str] = &["trial", "r_b_noma", "r_b_oma", "feasible_noma", "feasible_oma"];

/// Solver outcomes seen by one experiment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub solves: usize,
    pub feasible: usize,
    pub infeasible: usize,
    /// Solver failures and unverifiable recoveries.
    pub failures: usize,
}

impl Tally {
    fn add(&mut self, status: SolveStatus) {
        self.solves += 1;
        match status {
            SolveStatus::Converged | SolveStatus::MaxIterations => self.feasible += 1,
            SolveStatus::Infeasible => self.infeasible += 1,
            SolveStatus::SolverFailure | SolveStatus::RecoveryFailed => self.failures += 1,
        }
    }

    fn merge(&mut self, o: Tally) {
        self.solves += o.solves;
        self.feasible += o.feasible;
        self.infeasible += o.infeasible;
        self.failures += o.failures;
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub tally: Tally,
}

/// Optional textual progress sink.
pub type Progress<'a> = Option<&'a (dyn Fn(&str) + Sync)>;

fn note(p: Progress, msg: &str) {
    if let Some(f) = p {
        f(msg);
    }
}

/// Instance seed of trial `k` (a splitmix64 step, so nearby seeds decorrelate).
pub fn trial_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn instance(profile: &ChannelProfile, seed: u64, k: usize) -> Result<NetworkInstance> {
    sample_instance(profile, trial_seed(seed, k as u64))
}

fn targets(cfg: &ExperimentConfig, pair: [f64; 2]) -> Result<SecrecyTargets> {
    SecrecyTargets::new(pair[0], pair[1], cfg.profile.epsilon)
}

fn status_code(s: SolveStatus) -> Cell {
    // Numeric so tables stay numeric: 0 converged, 1 max iterations,
    // 2 infeasible, 3 solver failure, 4 recovery failed.
    Cell::Int(match s {
        SolveStatus::Converged => 0,
        SolveStatus::MaxIterations => 1,
        SolveStatus::Infeasible => 2,
        SolveStatus::SolverFailure => 3,
        SolveStatus::RecoveryFailed => 4,
    })
}

/// Solves trial 0 for every configured target pair.
pub fn run_solve(cfg: &ExperimentConfig, progress: Progress) -> Result<(Outcome, Vec<SolveReport>)> {
    let inst = instance(&cfg.profile, cfg.seed, 0)?;
    let mut table = Table::new("solve", SOLVE_HEADERS);
    let mut beams = Table::new("beams", BEAM_HEADERS);
    let mut tally = Tally::default();
    let mut reports = Vec::new();
    for &pair in &cfg.targets {
        let r = cccp::run(&inst, &targets(cfg, pair)?, &cfg.cccp)?;
        note(progress, &format!("solve r_c={} r_e={}: {} in {:.3}s", pair[0], pair[1], r.status.as_str(), r.duration.as_secs_f64()));
        tally.add(r.status);
        table.push(vec![
            Cell::Num(pair[0]),
            Cell::Num(pair[1]),
            status_code(r.status),
            Cell::Num(r.r_b),
            Cell::Int(r.iterations as u64),
            Cell::Num(r.omega_trace.last().copied().unwrap_or(1.0)),
            Cell::Num(r.zeta),
            Cell::Num(r.rank.ratio_c),
            Cell::Num(r.rank.ratio_e),
            Cell::Num(r.residuals.worst()),
        ]);
        for (b, w) in [(0, &r.beams.w_c), (1, &r.beams.w_e)] {
            for (i, z) in w.iter().enumerate() {
                beams.push(vec![
                    Cell::Num(pair[0]),
                    Cell::Num(pair[1]),
                    Cell::Int(b),
                    Cell::Int(i as u64),
                    Cell::Num(z.re),
                    Cell::Num(z.im),
                ]);
            }
        }
        reports.push(r);
    }
    Ok((Outcome { tables: vec![table, beams], tally }, reports))
}

/// Per-iteration traces on trial 0 for every target pair.
pub fn run_converge(cfg: &ExperimentConfig, progress: Progress) -> Result<Outcome> {
    let inst = instance(&cfg.profile, cfg.seed, 0)?;
    let mut table = Table::new("converge", CONVERGE_HEADERS);
    let mut tally = Tally::default();
    for &pair in &cfg.targets {
        let r = cccp::run(&inst, &targets(cfg, pair)?, &cfg.cccp)?;
        note(progress, &format!("converge r_c={} r_e={}: {} after {} iterations", pair[0], pair[1], r.status.as_str(), r.iterations));
        tally.add(r.status);
        for (i, &omega) in r.omega_trace.iter().enumerate() {
            table.push(vec![
                Cell::Int(i as u64 + 1),
                Cell::Num(pair[0]),
                Cell::Num(pair[1]),
                Cell::Num(omega),
                Cell::Num(omega.log2()),
            ]);
        }
    }
    Ok(Outcome { tables: vec![table], tally })
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// `(r_c, r_e)` at a region grid point.
pub fn region_pair(cfg: &ExperimentConfig, r: f64) -> [f64; 2] {
    match cfg.region_mode {
        RegionMode::Equal => [r, r],
        RegionMode::SweepC => [r, cfg.region_fixed],
        RegionMode::SweepE => [cfg.region_fixed, r],
    }
}

/// NOMA and OMA over the target grid. Infeasible draws are left out of the
/// means (NaN when no draw is feasible) and counted in the fractions.
pub fn run_region(cfg: &ExperimentConfig, progress: Progress) -> Result<Outcome> {
    let insts: Vec<NetworkInstance> = (0..cfg.trials).map(|k| instance(&cfg.profile, cfg.seed, k)).collect::<Result<_>>()?;
    let mut table = Table::new("region", REGION_HEADERS);
    let mut tally = Tally::default();
    let grid = cfg.target_grid.points();
    for (gi, &r) in grid.iter().enumerate() {
        let t = targets(cfg, region_pair(cfg, r))?;
        let results: Vec<(SolveStatus, f64, SolveStatus, f64)> = insts
            .par_iter()
            .map(|inst| {
                let n = cccp::run(inst, &t, &cfg.cccp)?;
                let o = solve_oma(inst, &t, &cfg.cccp)?;
                Ok((n.status, n.r_b, o.status, o.r_b))
            })
            .collect::<Result<_>>()?;
        let mut noma = Vec::new();
        let mut oma = Vec::new();
        for &(sn, rn, so, ro) in &results {
            tally.add(sn);
            tally.add(so);
            if sn.is_success() {
                noma.push(rn);
            }
            if so.is_success() {
                oma.push(ro);
            }
        }
        let n = results.len() as f64;
        table.push(vec![
            Cell::Num(r),
            Cell::Num(mean(&noma)),
            Cell::Num(mean(&oma)),
            Cell::Num(noma.len() as f64 / n),
            Cell::Num(oma.len() as f64 / n),
        ]);
        note(progress, &format!("region {}/{}", gi + 1, grid.len()));
    }
    Ok(Outcome { tables: vec![table], tally })
}

/// Mean NOMA rate over the alpha grid at the sweep targets, with a
/// normal-approximation 95% interval over the feasible draws.
pub fn run_alpha_sweep(cfg: &ExperimentConfig, progress: Progress) -> Result<Outcome> {
    let t = targets(cfg, cfg.sweep_targets)?;
    let mut table = Table::new("alpha_sweep", ALPHA_HEADERS);
    let mut tally = Tally::default();
    let grid = cfg.alpha_grid.points();
    for (gi, &alpha) in grid.iter().enumerate() {
        let profile = ChannelProfile { alpha, ..cfg.profile };
        let results: Vec<SolveReport> = (0..cfg.trials)
            .into_par_iter()
            .map(|k| cccp::run(&instance(&profile, cfg.seed, k)?, &t, &cfg.cccp))
            .collect::<Result<_>>()?;
        let rates: Vec<f64> = results.iter().filter(|r| r.status.is_success()).map(|r| r.r_b).collect();
        results.iter().for_each(|r| tally.add(r.status));
        let m = mean(&rates);
        let ci = if rates.len() > 1 {
            let var = rates.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (rates.len() - 1) as f64;
            1.96 * (var / rates.len() as f64).sqrt()
        } else {
            f64::NAN
        };
        table.push(vec![
            Cell::Num(alpha),
            Cell::Num(m),
            Cell::Num(ci),
            Cell::Num(rates.len() as f64 / results.len() as f64),
        ]);
        note(progress, &format!("alpha-sweep {}/{}", gi + 1, grid.len()));
    }
    Ok(Outcome { tables: vec![table], tally })
}

/// Solves each trial at the first target pair and checks the reported rate
/// by Monte Carlo. Trials without a verified solution produce no row.
pub fn run_validate(cfg: &ExperimentConfig, progress: Progress) -> Result<Outcome> {
    let t = targets(cfg, cfg.targets[0])?;
    let rows: Vec<(SolveStatus, Option<Vec<Cell>>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let inst = instance(&cfg.profile, cfg.seed, k)?;
            let r = cccp::run(&inst, &t, &cfg.cccp)?;
            if !r.status.is_success() {
                return Ok((r.status, None));
            }
            let mc = estimate_outage(&inst, &r.beams, r.r_b, cfg.validate_samples, trial_seed(!cfg.seed, k as u64))?;
            let row = vec![
                Cell::Int(k as u64),
                Cell::Num(r.r_b),
                Cell::Num(mc.closed_form),
                Cell::Num(mc.empirical),
                Cell::Bool(mc.pass),
            ];
            Ok((r.status, Some(row)))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new("validate", VALIDATE_HEADERS);
    let mut tally = Tally::default();
    for (s, row) in rows {
        tally.add(s);
        if let Some(row) = row {
            table.push(row);
        }
    }
    note(progress, &format!("validate: {} of {} trials verified", table.rows.len(), cfg.trials));
    Ok(Outcome { tables: vec![table], tally })
}

/// Paired NOMA and OMA rates per trial at the sweep targets.
pub fn run_oma_compare(cfg: &ExperimentConfig, progress: Progress) -> Result<Outcome> {
    let t = targets(cfg, cfg.sweep_targets)?;
    let rows: Vec<(SolveStatus, SolveStatus, Vec<Cell>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let inst = instance(&cfg.profile, cfg.seed, k)?;
            let n = cccp::run(&inst, &t, &cfg.cccp)?;
            let o = solve_oma(&inst, &t, &cfg.cccp)?;
            let row = vec![
                Cell::Int(k as u64),
                Cell::Num(if n.status.is_success() { n.r_b } else { f64::NAN }),
                Cell::Num(if o.status.is_success() { o.r_b } else { f64::NAN }),
                Cell::Bool(n.status.is_success()),
                Cell::Bool(o.status.is_success()),
            ];
            Ok((n.status, o.status, row))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new("oma_compare", COMPARE_HEADERS);
    let mut tally = Tally::default();
    for (a, b, row) in rows {
        tally.add(a);
        tally.add(b);
        table.push(row);
    }
    note(progress, &format!("oma-compare: {} trials", cfg.trials));
    Ok(Outcome { tables: vec![table], tally })
}

impl Outcome {
    pub fn merge(mut self, other: Outcome) -> Outcome {
        self.tables.extend(other.tables);
        self.tally.merge(other.tally);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            trials: 3,
            target_grid: Grid::new(0.0, 1.0, 0.5),
            alpha_grid: Grid::new(0.0, 0.2, 0.1),
            targets: vec![[1.0, 0.1]],
            validate_samples: 20_000,
            ..Default::default()
        }
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let s: std::collections::BTreeSet<u64> = (0..1000).map(|k| trial_seed(5, k)).collect();
        assert_eq!(s.len(), 1000);
        assert_ne!(trial_seed(0, 0), trial_seed(1, 0));
    }

    #[test]
    fn converge_trace_is_monotone() {
        let out = run_converge(&small(), None).unwrap();
        let t = &out.tables[0];
        assert!(!t.rows.is_empty() && t.rows.len() <= 50);
        let rb = t.column("r_b").unwrap();
        assert!(rb.windows(2).all(|w| w[1] >= w[0] - 1e-6));
    }

    #[test]
    fn region_rows_follow_grid() {
        let out = run_region(&small(), None).unwrap();
        let t = &out.tables[0];
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.column("feasible_frac_noma").unwrap()[0], 1.0);
        assert_eq!(out.tally.solves, 18);
    }

    #[test]
    fn alpha_zero_gives_zero_mean() {
        let out = run_alpha_sweep(&small(), None).unwrap();
        let m = out.tables[0].column("r_b_mean").unwrap();
        assert_eq!(m[0], 0.0);
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn validate_rows_are_sound() {
        let out = run_validate(&small(), None).unwrap();
        for r in &out.tables[0].rows {
            assert!(r[3].as_f64() >= 0.9 - 0.01 - 0.01);
        }
    }

    #[test]
    fn same_seed_same_csv() {
        let a = run_oma_compare(&small(), None).unwrap();
        let b = run_oma_compare(&small(), None).unwrap();
        assert_eq!(a.tables[0].to_csv(), b.tables[0].to_csv());
    }
}
