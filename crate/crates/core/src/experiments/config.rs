//! Experiment configuration: a TOML file whose keys are all optional.
//!
//! ```toml
//! seed = 7
//! trials = 20
//! [profile]
//! alpha = 0.3
//! snr_db = 25.0
//! [grids]
//! alpha = { start = 0.0, stop = 1.0, step = 0.1 }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cccp::CccpOptions;
use crate::montecarlo::ChannelProfile;
use crate::subproblem::SolverOptions;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config syntax error: {0}")]
    Parse(String),
    #[error("unknown key `{path}`")]
    UnknownKey { path: String },
    #[error("bad value for `{path}`: {message}")]
    Invalid { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Which axis the region sweep moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionMode {
    /// `r_c = r_e = r_target`.
    Equal,
    /// Sweep `r_c`, hold `r_e` at `region_fixed`.
    SweepC,
    /// Sweep `r_e`, hold `r_c` at `region_fixed`.
    SweepE,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub const fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    /// Inclusive points; the count is rounded so float steps land on `stop`.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }

    fn check(&self, path: &str) -> Result<(), ConfigError> {
        let ok = [self.start, self.stop, self.step].iter().all(|v| v.is_finite()) && self.step > 0.0 && self.stop >= self.start;
        if !ok {
            return Err(invalid(path, "need finite start <= stop and step > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileOverrides {
    pub m: Option<usize>,
    pub var_h_c: Option<f64>,
    pub var_h_e: Option<f64>,
    pub var_h_b: Option<f64>,
    pub var_h_v: Option<f64>,
    pub var_g_c: Option<f64>,
    pub var_g_e: Option<f64>,
    pub var_g_v: Option<f64>,
    pub alpha: Option<f64>,
    pub snr_db: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    pub alpha: Option<Grid>,
    pub target: Option<Grid>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CccpOverrides {
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub splits: Option<Vec<f64>>,
    pub candidates: Option<usize>,
    pub rank_threshold: Option<f64>,
    pub slack_iterations: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    pub feas_tol: Option<f64>,
    pub gap_tol: Option<f64>,
    pub max_iterations: Option<usize>,
}

/// The file as written; every key optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub emit_svg: Option<bool>,
    pub targets: Option<Vec<[f64; 2]>>,
    pub sweep_targets: Option<[f64; 2]>,
    pub region_mode: Option<RegionMode>,
    pub region_fixed: Option<f64>,
    pub validate_samples: Option<u64>,
    pub profile: Option<ProfileOverrides>,
    pub grids: Option<GridOverrides>,
    pub cccp: Option<CccpOverrides>,
    pub solver: Option<SolverOverrides>,
}

/// Effective configuration with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub emit_svg: bool,
    /// `(r_c, r_e)` pairs for `solve`, `converge` and `validate`.
    pub targets: Vec<[f64; 2]>,
    /// Targets held fixed in the alpha sweep and the OMA comparison.
    pub sweep_targets: [f64; 2],
    pub region_mode: RegionMode,
    pub region_fixed: f64,
    pub validate_samples: u64,
    pub profile: ChannelProfile,
    pub alpha_grid: Grid,
    pub target_grid: Grid,
    pub cccp: CccpOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 50,
            out: PathBuf::from("out"),
            format: OutputFormat::Csv,
            emit_svg: false,
            targets: vec![[1.0, 0.1], [2.0, 0.2]],
            sweep_targets: [1.0, 0.1],
            region_mode: RegionMode::Equal,
            region_fixed: 0.1,
            validate_samples: 100_000,
            profile: ChannelProfile::default(),
            alpha_grid: Grid::new(0.0, 1.0, 0.05),
            target_grid: Grid::new(0.0, 3.0, 0.1),
            cccp: CccpOptions::default(),
        }
    }
}

fn invalid(path: &str, message: &str) -> ConfigError {
    ConfigError::Invalid { path: path.to_string(), message: message.to_string() }
}

fn check(cond: bool, path: &str, message: &str) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(invalid(path, message))
    }
}

/// Parses TOML text; unknown keys and syntax errors are reported with the
/// offending key path.
pub fn parse_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let msg = e.inner().to_string();
        if msg.contains("unknown field") {
            let key = msg.split('`').nth(1).unwrap_or("?");
            let full = if path == "." || path.is_empty() { key.to_string() } else { format!("{path}.{key}") };
            // serde_path_to_error already appends the key for some formats.
            let full = if path.ends_with(key) { path } else { full };
            ConfigError::UnknownKey { path: full }
        } else {
            ConfigError::Invalid { path, message: msg.lines().last().unwrap_or("").trim().to_string() }
        }
    })?;
    resolve(raw)
}

pub fn parse_file(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_str(&text)
}

/// Fills defaults and range-checks every value.
pub fn resolve(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(v) = raw.seed {
        cfg.seed = v;
    }
    if let Some(v) = raw.trials {
        check(v >= 1, "trials", "must be at least 1")?;
        cfg.trials = v;
    }
    if let Some(v) = raw.out {
        cfg.out = v;
    }
    if let Some(v) = raw.format {
        cfg.format = v;
    }
    if let Some(v) = raw.emit_svg {
        cfg.emit_svg = v;
    }
    if let Some(v) = raw.targets {
        check(!v.is_empty(), "targets", "need at least one pair")?;
        for (i, t) in v.iter().enumerate() {
            check(t.iter().all(|x| x.is_finite() && *x >= 0.0), &format!("targets[{i}]"), "rates must be >= 0")?;
        }
        cfg.targets = v;
    }
    if let Some(v) = raw.sweep_targets {
        check(v.iter().all(|x| x.is_finite() && *x >= 0.0), "sweep_targets", "rates must be >= 0")?;
        cfg.sweep_targets = v;
    }
    if let Some(v) = raw.region_mode {
        cfg.region_mode = v;
    }
    if let Some(v) = raw.region_fixed {
        check(v.is_finite() && v >= 0.0, "region_fixed", "must be >= 0")?;
        cfg.region_fixed = v;
    }
    if let Some(v) = raw.validate_samples {
        check(v >= 1, "validate_samples", "must be at least 1")?;
        cfg.validate_samples = v;
    }

    if let Some(p) = raw.profile {
        let q = &mut cfg.profile;
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = p.$f { q.$f = v; } )* };
        }
        set!(m, var_h_c, var_h_e, var_h_b, var_h_v, var_g_c, var_g_e, var_g_v, alpha, snr_db, epsilon);
        check(q.m >= 1, "profile.m", "must be at least 1")?;
        for (name, v) in [
            ("var_h_c", q.var_h_c),
            ("var_h_e", q.var_h_e),
            ("var_h_b", q.var_h_b),
            ("var_h_v", q.var_h_v),
            ("var_g_c", q.var_g_c),
            ("var_g_e", q.var_g_e),
            ("var_g_v", q.var_g_v),
        ] {
            check(v > 0.0 && v.is_finite(), &format!("profile.{name}"), "variance must be > 0")?;
        }
        check((0.0..=1.0).contains(&q.alpha), "profile.alpha", "must lie in [0, 1]")?;
        check(q.snr_db.is_finite(), "profile.snr_db", "must be finite")?;
        check(q.epsilon > 0.0 && q.epsilon < 1.0, "profile.epsilon", "must lie in (0, 1)")?;
    }

    if let Some(g) = raw.grids {
        if let Some(a) = g.alpha {
            a.check("grids.alpha")?;
            check(a.start >= 0.0 && a.stop <= 1.0, "grids.alpha", "must lie in [0, 1]")?;
            cfg.alpha_grid = a;
        }
        if let Some(t) = g.target {
            t.check("grids.target")?;
            check(t.start >= 0.0, "grids.target", "rates must be >= 0")?;
            cfg.target_grid = t;
        }
    }

    if let Some(c) = raw.cccp {
        let o = &mut cfg.cccp;
        if let Some(v) = c.max_iterations {
            check(v >= 1, "cccp.max_iterations", "must be at least 1")?;
            o.max_iterations = v;
        }
        if let Some(v) = c.tolerance {
            check(v > 0.0, "cccp.tolerance", "must be > 0")?;
            o.tolerance = v;
        }
        if let Some(v) = c.splits {
            check(!v.is_empty() && v.iter().all(|b| *b > 0.0 && *b < 1.0), "cccp.splits", "need values in (0, 1)")?;
            o.splits = v;
        }
        if let Some(v) = c.candidates {
            check(v >= 1, "cccp.candidates", "must be at least 1")?;
            o.candidates = v;
        }
        if let Some(v) = c.rank_threshold {
            check(v > 0.0, "cccp.rank_threshold", "must be > 0")?;
            o.rank_threshold = v;
        }
        if let Some(v) = c.slack_iterations {
            check(v >= 1, "cccp.slack_iterations", "must be at least 1")?;
            o.slack_iterations = v;
        }
    }
    if let Some(s) = raw.solver {
        let o: &mut SolverOptions = &mut cfg.cccp.solver;
        if let Some(v) = s.feas_tol {
            check(v > 0.0, "solver.feas_tol", "must be > 0")?;
            o.feas_tol = v;
        }
        if let Some(v) = s.gap_tol {
            check(v > 0.0, "solver.gap_tol", "must be > 0")?;
            o.gap_tol = v;
        }
        if let Some(v) = s.max_iterations {
            check(v >= 1, "solver.max_iterations", "must be at least 1")?;
            o.max_iterations = v;
        }
    }
    cfg.cccp.seed = cfg.seed;
    Ok(cfg)
}

impl ExperimentConfig {
    /// Every effective value, in the file schema.
    pub fn to_raw(&self) -> RawConfig {
        let p = &self.profile;
        let o = &self.cccp;
        RawConfig {
            seed: Some(self.seed),
            trials: Some(self.trials),
            out: Some(self.out.clone()),
            format: Some(self.format),
            emit_svg: Some(self.emit_svg),
            targets: Some(self.targets.clone()),
            sweep_targets: Some(self.sweep_targets),
            region_mode: Some(self.region_mode),
            region_fixed: Some(self.region_fixed),
            validate_samples: Some(self.validate_samples),
            profile: Some(ProfileOverrides {
                m: Some(p.m),
                var_h_c: Some(p.var_h_c),
                var_h_e: Some(p.var_h_e),
                var_h_b: Some(p.var_h_b),
                var_h_v: Some(p.var_h_v),
                var_g_c: Some(p.var_g_c),
                var_g_e: Some(p.var_g_e),
                var_g_v: Some(p.var_g_v),
                alpha: Some(p.alpha),
                snr_db: Some(p.snr_db),
                epsilon: Some(p.epsilon),
            }),
            grids: Some(GridOverrides { alpha: Some(self.alpha_grid), target: Some(self.target_grid) }),
            cccp: Some(CccpOverrides {
                max_iterations: Some(o.max_iterations),
                tolerance: Some(o.tolerance),
                splits: Some(o.splits.clone()),
                candidates: Some(o.candidates),
                rank_threshold: Some(o.rank_threshold),
                slack_iterations: Some(o.slack_iterations),
            }),
            solver: Some(SolverOverrides {
                feas_tol: Some(o.solver.feas_tol),
                gap_tol: Some(o.solver.gap_tol),
                max_iterations: Some(o.solver.max_iterations),
            }),
        }
    }

    /// The effective configuration as TOML; feeding it back reproduces `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).unwrap_or_default()
    }
}
