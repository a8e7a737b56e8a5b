//! Convex-concave outer loop: initialize, linearize and solve until the
//! outage rate stops improving, then recover beams and verify them against
//! the exact model.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dc::{build_coeff_tables, CccpIterate, CoefficientTable};
use crate::error::Result;
use crate::linalg::{eigh_desc, norm_sqr, outer, sqrt_psd, trace_re, CMat, CVec};
use crate::model::{
    direct_sinrs, max_outage_rate, rb_outage_success, secrecy_rates, BeamPair, NetworkInstance, SecrecyTargets,
};
use crate::montecarlo::complex_gaussian_vec;
use crate::subproblem::{
    assemble_shape, solve_subproblem, Objective, ProblemShape, SolverOptions, SubproblemSolution, SubproblemStatus,
};

/// Tolerance of the final verification against the exact model.
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CccpOptions {
    pub max_iterations: usize,
    /// Stop once `|omega_next - omega| <= tolerance * max(1, omega)`.
    pub tolerance: f64,
    /// Fractions of the power budget given to `W_c` at initialization.
    pub splits: Vec<f64>,
    /// Gaussian-randomization candidates for rank-one recovery.
    pub candidates: usize,
    /// Second-to-first eigenvalue ratio below which a covariance counts as
    /// rank one.
    pub rank_threshold: f64,
    pub seed: u64,
    /// Iteration cap of the slack-maximization feasibility phase.
    pub slack_iterations: usize,
    pub solver: SolverOptions,
}

impl Default for CccpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-4,
            splits: vec![0.2, 0.5, 0.8],
            candidates: 200,
            rank_threshold: 1e-6,
            seed: 0,
            slack_iterations: 20,
            solver: SolverOptions::default(),
        }
    }
}

impl CccpOptions {
    pub fn validate(&self) -> Result<()> {
        use crate::error::Error;
        if self.max_iterations == 0 || !(self.tolerance > 0.0) || self.candidates == 0 || !(self.rank_threshold > 0.0) {
            return Err(Error::InvalidArgument("CCCP options must be positive".into()));
        }
        if self.splits.is_empty() || self.splits.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
            return Err(Error::InvalidArgument("power splits must lie in (0, 1)".into()));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Infeasible,
    SolverFailure,
    /// The relaxed covariances could not be turned into beams that pass
    /// verification; `r_b` is not certified.
    RecoveryFailed,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::SolverFailure => "solver_failure",
            SolveStatus::RecoveryFailed => "recovery_failed",
        }
    }

    /// A verified solution is available.
    pub fn is_success(&self) -> bool {
        matches!(self, SolveStatus::Converged | SolveStatus::MaxIterations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RankDiagnostics {
    /// `lambda_2 / lambda_1` of `W_c` (0 when `W_c` vanishes).
    pub ratio_c: f64,
    pub ratio_e: f64,
    /// Beams came from Gaussian randomization.
    pub randomized: bool,
    /// No rank-one candidate passed verification.
    pub rank_relaxed: bool,
}

/// Shortfalls against the original constraints at the reported beams and
/// rate; each is `required - achieved`, so values `<= 1e-6` pass. Rows
/// absent from a scheme are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub rate_c: Option<f64>,
    pub rate_e: Option<f64>,
    pub rate_ce: Option<f64>,
    pub outage: Option<f64>,
    /// `(power - P) / P`
    pub power: f64,
}

impl Residuals {
    pub fn worst(&self) -> f64 {
        [self.rate_c, self.rate_e, self.rate_ce, self.outage, Some(self.power)]
            .into_iter()
            .flatten()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn pass(&self) -> bool {
        self.worst() <= VERIFY_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureInfo {
    pub iteration: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Certified epsilon-outage secrecy rate, bits/s/Hz.
    pub r_b: f64,
    pub beams: BeamPair,
    pub zeta: f64,
    /// `omega` after each subproblem of the winning run.
    pub omega_trace: Vec<f64>,
    pub iterations: usize,
    pub rank: RankDiagnostics,
    pub residuals: Residuals,
    /// Power split of the winning initialization; `None` when it came from
    /// the slack phase or the scheme has a single beam.
    pub split: Option<f64>,
    pub failure: Option<FailureInfo>,
    pub duration: Duration,
}

impl SolveReport {
    pub(crate) fn empty(status: SolveStatus, m: usize) -> Self {
        Self {
            status,
            r_b: 0.0,
            beams: BeamPair::zeros(m),
            zeta: 0.0,
            omega_trace: Vec::new(),
            iterations: 0,
            rank: RankDiagnostics::default(),
            residuals: Residuals::default(),
            split: None,
            failure: None,
            duration: Duration::ZERO,
        }
    }
}

fn unit_or_first(h: &CVec) -> CVec {
    let n = norm_sqr(h).sqrt();
    if n > 0.0 {
        h.unscale(n)
    } else {
        let mut e = CVec::zeros(h.len());
        e[0] = crate::linalg::c(1.0, 0.0);
        e
    }
}

/// Starting point for a given power split: matched-filter beams toward each
/// user, `omega = 1` and `zeta` equal to the eavesdropper's BD SINR.
pub fn split_anchor(inst: &NetworkInstance, shape: &ProblemShape, split: f64) -> CccpIterate {
    let p = inst.power;
    let (pc, pe) = match (shape.beam_c, shape.beam_e) {
        (true, true) => (split * p, (1.0 - split) * p),
        (true, false) => (p, 0.0),
        (false, true) => (0.0, p),
        (false, false) => (0.0, 0.0),
    };
    let w_c = unit_or_first(&inst.h_c).scale(pc.sqrt());
    let w_e = unit_or_first(&inst.h_e).scale(pe.sqrt());
    let b = BeamPair::new(w_c, w_e);
    let zeta = if shape.outage { direct_sinrs(inst, &b).map(|g| g.gamma_vb).unwrap_or(0.0) } else { 0.0 };
    CccpIterate::from_beams(&b, 1.0, zeta)
}

struct Problem<'a> {
    inst: &'a NetworkInstance,
    targets: &'a SecrecyTargets,
    shape: ProblemShape,
    tab: CoefficientTable,
    opts: &'a CccpOptions,
}

enum Phase {
    Done(CccpIterate, Vec<f64>, SolveStatus),
    FirstInfeasible,
    Failed(FailureInfo),
}

impl<'a> Problem<'a> {
    fn new(inst: &'a NetworkInstance, targets: &'a SecrecyTargets, shape: ProblemShape, opts: &'a CccpOptions) -> Self {
        Self { inst, targets, tab: build_coeff_tables(inst), shape, opts }
    }

    fn step(&self, anchor: &CccpIterate, objective: Objective) -> Result<SubproblemSolution> {
        let spec = assemble_shape(self.inst, self.targets, &self.shape, objective, anchor, &self.tab)?;
        Ok(solve_subproblem(&spec, &self.opts.solver))
    }

    /// Main ascent on `omega` from `anchor`.
    fn ascend(&self, mut anchor: CccpIterate) -> Phase {
        let mut trace = Vec::new();
        for l in 0..self.opts.max_iterations {
            let sol = match self.step(&anchor, Objective::MaxOmega) {
                Ok(s) => s,
                Err(e) => return Phase::Failed(FailureInfo { iteration: l, reason: e.to_string() }),
            };
            match sol.status {
                SubproblemStatus::Optimal => {}
                SubproblemStatus::Infeasible if l == 0 => return Phase::FirstInfeasible,
                SubproblemStatus::Infeasible => {
                    let reason = "subproblem infeasible at a feasible anchor".to_string();
                    return Phase::Failed(FailureInfo { iteration: l, reason });
                }
                SubproblemStatus::NumericalFailure { reason, max_violation } => {
                    let reason = format!("{reason} (max violation {max_violation:e})");
                    return Phase::Failed(FailureInfo { iteration: l, reason });
                }
            }
            let next = sol.iterate;
            trace.push(next.omega);
            let done = (next.omega - anchor.omega).abs() <= self.opts.tolerance * anchor.omega.max(1.0);
            anchor = next;
            if done {
                return Phase::Done(anchor, trace, SolveStatus::Converged);
            }
        }
        Phase::Done(anchor, trace, SolveStatus::MaxIterations)
    }

    /// Maximizes a common slack on the rate rows. Returns a point meeting
    /// every row when the best slack is nonnegative.
    fn slack_phase(&self, mut anchor: CccpIterate) -> std::result::Result<Option<CccpIterate>, FailureInfo> {
        let mut best: Option<(f64, CccpIterate)> = None;
        for k in 0..self.opts.slack_iterations {
            let sol = self.step(&anchor, Objective::MaxSlack).map_err(|e| FailureInfo { iteration: k, reason: e.to_string() })?;
            match sol.status {
                SubproblemStatus::Optimal => {}
                SubproblemStatus::Infeasible => return Ok(None),
                SubproblemStatus::NumericalFailure { reason, .. } => {
                    return Err(FailureInfo { iteration: k, reason });
                }
            }
            let s = sol.slack.unwrap_or(f64::NEG_INFINITY);
            let prev = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0);
            anchor = sol.iterate;
            if s > prev {
                best = Some((s, anchor.clone()));
            }
            if s >= 1e-6 || (prev.is_finite() && (s - prev).abs() <= self.opts.tolerance * prev.abs().max(1.0)) {
                break;
            }
        }
        Ok(best.filter(|(s, _)| *s >= 0.0).map(|(_, it)| it))
    }

    fn rates_residuals(&self, b: &BeamPair, res: &mut Residuals) {
        let Ok(r) = secrecy_rates(self.inst, b) else { return };
        for row in &self.shape.rates {
            let achieved = match row.first_term {
                1 => r.r_c,
                3 => r.r_e,
                _ => r.r_ce,
            };
            let slot = match row.first_term {
                1 => &mut res.rate_c,
                3 => &mut res.rate_e,
                _ => &mut res.rate_ce,
            };
            *slot = Some(row.target_bits - achieved);
        }
    }

    /// Certified rate (capped at `r_b_cap`) and residuals for `b`.
    fn verify(&self, b: &BeamPair, r_b_cap: f64) -> (Option<f64>, Residuals) {
        let mut res = Residuals { power: (b.power() - self.inst.power) / self.inst.power, ..Default::default() };
        self.rates_residuals(b, &mut res);
        let r_b = if self.shape.outage {
            match max_outage_rate(self.inst, b, self.targets.epsilon) {
                Ok(Some(r)) => Some(r.min(r_b_cap).max(0.0)),
                _ => None,
            }
        } else {
            Some(0.0)
        };
        if self.shape.outage {
            let success = rb_outage_success(self.inst, b, r_b.unwrap_or(0.0)).unwrap_or(0.0);
            res.outage = Some((1.0 - self.targets.epsilon) - success);
        }
        (r_b, res)
    }

    fn recover(&self, it: &CccpIterate, r_b_cap: f64) -> (BeamPair, RankDiagnostics, Option<f64>, Residuals) {
        let (vals_c, vecs_c) = eigh_desc(&it.w_c);
        let (vals_e, vecs_e) = eigh_desc(&it.w_e);
        let ratio = |v: &[f64]| {
            if v.is_empty() || v[0] <= 0.0 {
                0.0
            } else {
                v.get(1).copied().unwrap_or(0.0).max(0.0) / v[0]
            }
        };
        let principal = |v: &[f64], u: &CMat| u.column(0).into_owned().scale(v[0].max(0.0).sqrt());
        let mut diag = RankDiagnostics { ratio_c: ratio(&vals_c), ratio_e: ratio(&vals_e), ..Default::default() };
        let pair = BeamPair::new(principal(&vals_c, &vecs_c), principal(&vals_e, &vecs_e));
        let (r_b, res) = self.verify(&pair, r_b_cap);
        let rank_one = diag.ratio_c <= self.opts.rank_threshold && diag.ratio_e <= self.opts.rank_threshold;
        if rank_one && res.pass() && r_b.is_some() {
            return (pair, diag, r_b, res);
        }

        let mut best: Option<(f64, BeamPair, Option<f64>, Residuals)> = None;
        if res.pass() {
            if let Some(r) = r_b {
                best = Some((r, pair.clone(), r_b, res));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        let root_c = sqrt_psd(&it.w_c);
        let root_e = sqrt_psd(&it.w_e);
        let (tr_c, tr_e) = (trace_re(&it.w_c).max(0.0), trace_re(&it.w_e).max(0.0));
        let m = self.inst.m();
        let draw = |rng: &mut ChaCha8Rng, root: &CMat, tr: f64| {
            let v = root * complex_gaussian_vec(rng, m, 1.0);
            let n = norm_sqr(&v);
            if n > 0.0 {
                v.scale((tr / n).sqrt())
            } else {
                v
            }
        };
        let mut randomized_best = false;
        for _ in 0..self.opts.candidates {
            let cand = BeamPair::new(draw(&mut rng, &root_c, tr_c), draw(&mut rng, &root_e, tr_e));
            let (r, res) = self.verify(&cand, r_b_cap);
            let Some(rv) = r else { continue };
            if res.pass() && best.as_ref().is_none_or(|b| rv > b.0) {
                best = Some((rv, cand, r, res));
                randomized_best = true;
            }
        }
        match best {
            Some((_, b, r, res)) => {
                diag.randomized = randomized_best;
                (b, diag, r, res)
            }
            None => {
                diag.rank_relaxed = true;
                (pair, diag, r_b, res)
            }
        }
    }

    fn finish(&self, it: &CccpIterate, trace: Vec<f64>, status: SolveStatus, split: Option<f64>) -> SolveReport {
        let cap = if self.shape.outage { it.omega.max(1.0).log2() } else { 0.0 };
        let (beams, rank, r_b, residuals) = self.recover(it, cap);
        let ok = r_b.is_some() && residuals.pass() && !rank.rank_relaxed;
        SolveReport {
            status: if ok { status } else { SolveStatus::RecoveryFailed },
            r_b: if ok { r_b.unwrap_or(0.0) } else { 0.0 },
            beams,
            zeta: it.zeta,
            iterations: trace.len(),
            omega_trace: trace,
            rank,
            residuals,
            split,
            failure: None,
            duration: Duration::ZERO,
        }
    }

    /// Feasibility-only schemes: certify the rate rows and report `r_b = 0`.
    fn certify(&self) -> SolveReport {
        let m = self.inst.m();
        let split = self.opts.splits[self.opts.splits.len() / 2];
        match self.slack_phase(split_anchor(self.inst, &self.shape, split)) {
            Ok(Some(it)) => self.finish(&it, vec![1.0], SolveStatus::Converged, None),
            Ok(None) => SolveReport::empty(SolveStatus::Infeasible, m),
            Err(f) => SolveReport { failure: Some(f), ..SolveReport::empty(SolveStatus::SolverFailure, m) },
        }
    }

    fn maximize(&self, splits: &[Option<f64>]) -> SolveReport {
        let m = self.inst.m();
        let mut reports = Vec::new();
        let mut failure = None;
        for &split in splits {
            let anchor = split_anchor(self.inst, &self.shape, split.unwrap_or(1.0));
            match self.ascend(anchor) {
                Phase::Done(it, trace, status) => reports.push(self.finish(&it, trace, status, split)),
                Phase::FirstInfeasible => {}
                Phase::Failed(f) => failure = Some(f),
            }
        }
        if reports.is_empty() && failure.is_none() {
            let split = splits[splits.len() / 2].unwrap_or(1.0);
            match self.slack_phase(split_anchor(self.inst, &self.shape, split)) {
                Ok(Some(start)) => match self.ascend(start) {
                    Phase::Done(it, trace, status) => reports.push(self.finish(&it, trace, status, None)),
                    Phase::FirstInfeasible => {
                        failure = Some(FailureInfo { iteration: 0, reason: "subproblem infeasible at a feasible anchor".into() })
                    }
                    Phase::Failed(f) => failure = Some(f),
                },
                Ok(None) => return SolveReport::empty(SolveStatus::Infeasible, m),
                Err(f) => failure = Some(f),
            }
        }
        let rank = |r: &SolveReport| (r.status.is_success(), r.r_b);
        match reports.into_iter().max_by(|a, b| rank(a).partial_cmp(&rank(b)).unwrap_or(std::cmp::Ordering::Equal)) {
            Some(best) => best,
            None => SolveReport { failure, ..SolveReport::empty(SolveStatus::SolverFailure, m) },
        }
    }
}

/// First usable starting point: the first power split whose subproblem is
/// feasible, else the output of the slack-maximization phase.
pub fn initialize(inst: &NetworkInstance, targets: &SecrecyTargets, opts: &CccpOptions) -> Result<Option<CccpIterate>> {
    inst.validate()?;
    targets.validate()?;
    opts.validate()?;
    let shape = if inst.bd_link_dead() { ProblemShape::noma_rates_only(targets) } else { ProblemShape::noma(targets) };
    let p = Problem::new(inst, targets, shape, opts);
    if p.shape.outage {
        for &split in &opts.splits {
            let anchor = split_anchor(inst, &p.shape, split);
            if let Ok(sol) = p.step(&anchor, Objective::MaxOmega) {
                if sol.status == SubproblemStatus::Optimal {
                    return Ok(Some(anchor));
                }
            }
        }
    }
    let split = opts.splits[opts.splits.len() / 2];
    Ok(p.slack_phase(split_anchor(inst, &p.shape, split)).ok().flatten())
}

/// Orthonormal basis (as columns) of the complement of `h`.
fn complement_basis(h: &CVec) -> CMat {
    let m = h.len();
    let u = unit_or_first(h);
    let proj = CMat::identity(m, m) - outer(&u);
    let (_, vecs) = eigh_desc(&proj);
    vecs.columns(0, m - 1).into_owned()
}

fn dead_link(inst: &NetworkInstance, targets: &SecrecyTargets, opts: &CccpOptions) -> SolveReport {
    let shape = ProblemShape::noma_rates_only(targets);
    if inst.bd_gain_v() == 0.0 || norm_sqr(&inst.h_b) == 0.0 {
        return Problem::new(inst, targets, shape, opts).certify();
    }
    // Any BD power would reach the eavesdropper with none reaching the
    // central user, so r_b = 0 is only achievable with beams orthogonal to
    // h_b. Solve in that subspace.
    let m = inst.m();
    if m == 1 {
        let p = Problem::new(inst, targets, shape, opts);
        let b = BeamPair::zeros(1);
        let (_, residuals) = p.verify(&b, 0.0);
        let status = if residuals.pass() { SolveStatus::Converged } else { SolveStatus::Infeasible };
        return SolveReport { residuals, ..SolveReport::empty(status, 1) };
    }
    let basis = complement_basis(&inst.h_b);
    let project = |h: &CVec| basis.adjoint() * h;
    let reduced = NetworkInstance {
        h_c: project(&inst.h_c),
        h_e: project(&inst.h_e),
        h_b: CVec::zeros(m - 1),
        h_v: project(&inst.h_v),
        ..inst.clone()
    };
    let mut report = Problem::new(&reduced, targets, shape.clone(), opts).certify();
    report.beams = BeamPair::new(&basis * &report.beams.w_c, &basis * &report.beams.w_e);
    if report.status.is_success() {
        let p = Problem::new(inst, targets, shape, opts);
        let (_, residuals) = p.verify(&report.beams, 0.0);
        report.residuals = residuals;
        if !residuals.pass() {
            report.status = SolveStatus::RecoveryFailed;
        }
    }
    report
}

/// Maximizes the epsilon-outage secrecy rate of the BD link under the
/// secrecy-rate floors, keeping the best verified run over all power splits.
pub fn run(inst: &NetworkInstance, targets: &SecrecyTargets, opts: &CccpOptions) -> Result<SolveReport> {
    inst.validate()?;
    targets.validate()?;
    opts.validate()?;
    let started = Instant::now();
    let mut report = if inst.bd_link_dead() {
        dead_link(inst, targets, opts)
    } else {
        let splits: Vec<Option<f64>> = opts.splits.iter().copied().map(Some).collect();
        Problem::new(inst, targets, ProblemShape::noma(targets), opts).maximize(&splits)
    };
    report.duration = started.elapsed();
    Ok(report)
}

/// Runs one scheme shape (used by the OMA baseline). Single-beam shapes use
/// one full-power initialization.
pub(crate) fn run_shape(
    inst: &NetworkInstance,
    targets: &SecrecyTargets,
    shape: ProblemShape,
    opts: &CccpOptions,
) -> SolveReport {
    let started = Instant::now();
    let p = Problem::new(inst, targets, shape, opts);
    let mut report = if !p.shape.outage {
        p.certify()
    } else if inst.bd_link_dead() {
        let certify = ProblemShape { outage: false, ..p.shape.clone() };
        Problem::new(inst, targets, certify, opts).certify()
    } else {
        p.maximize(&[None])
    };
    report.duration = started.elapsed();
    report
}

/// Rank-one beams from relaxed covariances for the NOMA scheme, verified
/// against the exact model with the rate capped at `r_b_candidate`.
pub fn recover_rank_one(
    w_c: &CMat,
    w_e: &CMat,
    inst: &NetworkInstance,
    targets: &SecrecyTargets,
    r_b_candidate: f64,
    opts: &CccpOptions,
) -> (BeamPair, RankDiagnostics) {
    let p = Problem::new(inst, targets, ProblemShape::noma(targets), opts);
    let it = CccpIterate { w_c: w_c.clone(), w_e: w_e.clone(), omega: r_b_candidate.exp2(), zeta: 0.0 };
    let (b, d, _, _) = p.recover(&it, r_b_candidate);
    (b, d)
}

/// Checks beams and a claimed rate against the original NOMA problem.
pub fn verify_noma(inst: &NetworkInstance, targets: &SecrecyTargets, b: &BeamPair, r_b: f64) -> Residuals {
    let opts = CccpOptions::default();
    let p = Problem::new(inst, targets, ProblemShape::noma(targets), &opts);
    let mut res = Residuals { power: (b.power() - inst.power) / inst.power, ..Default::default() };
    p.rates_residuals(b, &mut res);
    let success = rb_outage_success(inst, b, r_b.max(0.0)).unwrap_or(0.0);
    res.outage = Some((1.0 - targets.epsilon) - success);
    res
}
