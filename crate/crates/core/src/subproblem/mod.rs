//! The convex subproblem solved at every CCCP step.
//!
//! [`assemble`] turns an anchor point into a [`SubproblemSpec`]: log rows
//! for the linearized secrecy-rate constraints, two convex quadratic rows
//! for the outage reformulation, the power budget and variable bounds.
//! The spec is expressed with Hermitian coefficient matrices and can be
//! dumped as text; [`solve_subproblem`] lowers it to real coordinates and
//! runs a log-barrier interior-point method.
//!
//! All data are normalized so the noise power is one; the solution is
//! scaled back on output.

mod barrier;
mod dump;

use std::f64::consts::LN_2;

use crate::dc::{anchor_leak, mu_tangent, CccpIterate, CoefficientTable};
use crate::error::{Error, Result};
use crate::linalg::{hermitize, trace_prod, CMat, HermitianBasis};
use crate::model::{NetworkInstance, SecrecyTargets};

use barrier::{Affine, IpmOutcome, IpmSettings, Lowered, Row};

/// Upper bound on the eavesdropper slack `zeta`; keeps the feasible set
/// compact and should never be active.
pub const ZETA_CAP: f64 = 1e6;
/// Lower bound on the feasibility slack variable.
pub const SLACK_FLOOR: f64 = -1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { feas_tol: 1e-8, gap_tol: 1e-8, max_iterations: 200 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.feas_tol > 0.0 && self.gap_tol > 0.0 && self.max_iterations > 0) {
            return Err(Error::InvalidArgument("solver tolerances and iteration cap must be positive".into()));
        }
        Ok(())
    }
}

/// `constant + tr(w_c W_c) + tr(w_e W_e) + omega * w + zeta * z + slack * s`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    pub constant: f64,
    pub w_c: Option<CMat>,
    pub w_e: Option<CMat>,
    pub omega: f64,
    pub zeta: f64,
    pub slack: f64,
}

impl AffineExpr {
    pub fn constant(value: f64) -> Self {
        Self { constant: value, w_c: None, w_e: None, omega: 0.0, zeta: 0.0, slack: 0.0 }
    }

    fn with_cov(mut self, w_c: Option<CMat>, w_e: Option<CMat>) -> Self {
        self.w_c = w_c;
        self.w_e = w_e;
        self
    }

    pub fn eval(&self, point: &Point) -> f64 {
        let mut v = self.constant + self.omega * point.omega + self.zeta * point.zeta + self.slack * point.slack;
        if let Some(a) = &self.w_c {
            v += trace_prod(a, &point.w_c);
        }
        if let Some(a) = &self.w_e {
            v += trace_prod(a, &point.w_e);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `sum_k ln(logs_k) - minus >= 0`
    LogRate { label: String, logs: Vec<AffineExpr>, minus: AffineExpr },
    /// `0.5 sum_k squares_k^2 + linear <= 0`
    Quadratic { label: String, squares: Vec<AffineExpr>, linear: AffineExpr },
    /// `expr <= 0`
    Linear { label: String, expr: AffineExpr },
}

impl Constraint {
    pub fn label(&self) -> &str {
        match self {
            Constraint::LogRate { label, .. } | Constraint::Quadratic { label, .. } | Constraint::Linear { label, .. } => {
                label
            }
        }
    }

    /// Violation in the `g <= 0` sense; positive means violated.
    pub fn violation(&self, point: &Point) -> f64 {
        match self {
            Constraint::LogRate { logs, minus, .. } => {
                let mut s = 0.0;
                for l in logs {
                    let u = l.eval(point);
                    if u <= 0.0 {
                        return f64::INFINITY;
                    }
                    s += u.ln();
                }
                minus.eval(point) - s
            }
            Constraint::Quadratic { squares, linear, .. } => {
                0.5 * squares.iter().map(|q| q.eval(point).powi(2)).sum::<f64>() + linear.eval(point)
            }
            Constraint::Linear { expr, .. } => expr.eval(point),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Omega,
    Zeta,
    Slack,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarBound {
    pub var: Var,
    pub lower: f64,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Maximize `omega = 2^r_b`.
    MaxOmega,
    /// Maximize the common slack added to the rate rows (feasibility phase).
    MaxSlack,
}

/// One secrecy-rate row: log terms `(j, j + 1)` must carry `target_bits`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub label: &'static str,
    pub first_term: usize,
    pub target_bits: f64,
}

/// Which beams, rate rows and outage rows a scheme optimizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemShape {
    pub beam_c: bool,
    pub beam_e: bool,
    pub rates: Vec<RateRow>,
    pub outage: bool,
}

impl ProblemShape {
    /// Both beams, all three secrecy rows and the outage rows.
    pub fn noma(t: &SecrecyTargets) -> Self {
        Self {
            beam_c: true,
            beam_e: true,
            rates: vec![
                RateRow { label: "rate_c", first_term: 1, target_bits: t.r_c },
                RateRow { label: "rate_e", first_term: 3, target_bits: t.r_e },
                RateRow { label: "rate_ce", first_term: 5, target_bits: t.r_e },
            ],
            outage: true,
        }
    }

    /// NOMA rate rows only; used when the BD link is dead and `r_b = 0`.
    pub fn noma_rates_only(t: &SecrecyTargets) -> Self {
        Self { outage: false, ..Self::noma(t) }
    }

    /// OMA slot A: central user alone for half the time, BD decoded.
    pub fn oma_slot_a(t: &SecrecyTargets) -> Self {
        Self {
            beam_c: true,
            beam_e: false,
            rates: vec![RateRow { label: "rate_c", first_term: 1, target_bits: 2.0 * t.r_c }],
            outage: true,
        }
    }

    /// OMA slot B: cell-edge user alone for half the time.
    pub fn oma_slot_b(t: &SecrecyTargets) -> Self {
        Self {
            beam_c: false,
            beam_e: true,
            rates: vec![RateRow { label: "rate_e", first_term: 3, target_bits: 2.0 * t.r_e }],
            outage: false,
        }
    }
}

/// A canonicalized convex subproblem in noise-normalized units.
#[derive(Debug, Clone)]
pub struct SubproblemSpec {
    pub m: usize,
    /// Noise power the data were divided by.
    pub sigma2: f64,
    /// Normalized power budget `P / sigma2`.
    pub power: f64,
    pub shape: ProblemShape,
    pub objective: Objective,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<VarBound>,
    /// The anchor, normalized.
    pub anchor: CccpIterate,
}

/// A candidate point of a subproblem, normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub w_c: CMat,
    pub w_e: CMat,
    pub omega: f64,
    pub zeta: f64,
    pub slack: f64,
}

impl SubproblemSpec {
    pub fn psd_blocks(&self) -> usize {
        usize::from(self.shape.beam_c) + usize::from(self.shape.beam_e)
    }

    pub fn count(&self, kind: fn(&Constraint) -> bool) -> usize {
        self.constraints.iter().filter(|c| kind(c)).count()
    }

    /// Maps a physical iterate into this spec's normalized units.
    pub fn normalize(&self, it: &CccpIterate, slack: f64) -> Point {
        Point {
            w_c: it.w_c.unscale(self.sigma2),
            w_e: it.w_e.unscale(self.sigma2),
            omega: it.omega,
            zeta: it.zeta,
            slack,
        }
    }

    /// Largest violation over rows and bounds (positive means infeasible).
    pub fn max_violation(&self, p: &Point) -> f64 {
        let mut worst = self.constraints.iter().map(|c| c.violation(p)).fold(f64::NEG_INFINITY, f64::max);
        for b in &self.bounds {
            let v = match b.var {
                Var::Omega => p.omega,
                Var::Zeta => p.zeta,
                Var::Slack => p.slack,
            };
            worst = worst.max(b.lower - v);
            if let Some(u) = b.upper {
                worst = worst.max(v - u);
            }
        }
        worst
    }

    pub fn write_text<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        dump::write_spec(self, out)
    }
}

/// Assembles the NOMA subproblem at `anchor`.
pub fn assemble(
    inst: &NetworkInstance,
    targets: &SecrecyTargets,
    anchor: &CccpIterate,
    tab: &CoefficientTable,
) -> Result<SubproblemSpec> {
    if inst.bd_gain_c() == 0.0 {
        return Err(Error::DeadBdLink);
    }
    assemble_shape(inst, targets, &ProblemShape::noma(targets), Objective::MaxOmega, anchor, tab)
}

pub fn assemble_shape(
    inst: &NetworkInstance,
    targets: &SecrecyTargets,
    shape: &ProblemShape,
    objective: Objective,
    anchor: &CccpIterate,
    tab: &CoefficientTable,
) -> Result<SubproblemSpec> {
    inst.validate()?;
    targets.validate()?;
    anchor.validate(inst)?;
    if objective == Objective::MaxOmega && !shape.outage {
        return Err(Error::InvalidArgument("maximizing omega needs the outage rows".into()));
    }
    let m = inst.m();
    let s2 = inst.sigma2;
    let anchor_n = CccpIterate {
        w_c: hermitize(&anchor.w_c).unscale(s2),
        w_e: hermitize(&anchor.w_e).unscale(s2),
        omega: anchor.omega,
        zeta: anchor.zeta,
    };
    let keep = |a: CMat, on: bool| if on { Some(a) } else { None };
    let cov = |a: &CMat, b: &CMat| (keep(a.clone(), shape.beam_c), keep(b.clone(), shape.beam_e));
    let slack_coef = if objective == Objective::MaxSlack { 1.0 } else { 0.0 };

    let mut constraints = Vec::new();
    for row in &shape.rates {
        let j = row.first_term;
        let mut logs = Vec::with_capacity(2);
        let mut minus = AffineExpr::constant(row.target_bits * LN_2);
        minus.slack = slack_coef;
        let mut minus_c = CMat::zeros(m, m);
        let mut minus_e = CMat::zeros(m, m);
        for k in [j, j + 1] {
            let (a, b) = cov(tab.phi(k), tab.psi(k));
            logs.push(AffineExpr::constant(1.0).with_cov(a, b));
            let tan = mu_tangent(k, tab, 1.0, &anchor_n);
            minus.constant += tan.constant;
            minus_c += &tan.w_c_coef;
            minus_e += &tan.w_e_coef;
        }
        let (a, b) = cov(&minus_c, &minus_e);
        minus = minus.with_cov(a, b);
        constraints.push(Constraint::LogRate { label: row.label.to_string(), logs, minus });
    }

    if shape.outage {
        let (wl, zl) = (anchor_n.omega, anchor_n.zeta);
        let rho = targets.rho();

        // 0.5 (omega + zeta + 1)^2 - eta2~ - rho a_c tr(H_b W) - 1 <= 0
        let hb_c = tab.h_b.scale(-rho * tab.a_c);
        let (a, b) = cov(&hb_c, &hb_c);
        let linear = AffineExpr {
            constant: 0.5 * wl * wl + 0.5 * (zl * zl - 1.0) - 1.0,
            w_c: None,
            w_e: None,
            omega: -wl,
            zeta: -(zl + 1.0),
            slack: 0.0,
        }
        .with_cov(a, b);
        let sum = AffineExpr { constant: 1.0, w_c: None, w_e: None, omega: 1.0, zeta: 1.0, slack: 0.0 };
        constraints.push(Constraint::Quadratic { label: "outage".into(), squares: vec![sum], linear });

        // eta4 + a_v tr(H_b W) - eta3~ <= 0
        let varphi = anchor_leak(&normalized(inst), &anchor_n);
        let base = zl + 1.0 + varphi;
        let leak_coef = tab.h_b.scale(tab.a_v) - tab.h_v.scale(base);
        let (a, b) = cov(&leak_coef, &leak_coef);
        let linear = AffineExpr {
            constant: -0.5 * base * base + base * (zl + varphi),
            w_c: None,
            w_e: None,
            omega: 0.0,
            zeta: -base,
            slack: 0.0,
        }
        .with_cov(a, b);
        let zeta_sq = AffineExpr { zeta: 1.0, ..AffineExpr::constant(0.0) };
        let (a, b) = cov(&tab.h_v, &tab.h_v);
        let leak_sq = AffineExpr::constant(1.0).with_cov(a, b);
        constraints.push(Constraint::Quadratic {
            label: "eavesdropper".into(),
            squares: vec![zeta_sq, leak_sq],
            linear,
        });
    }

    let eye = CMat::identity(m, m);
    let (a, b) = cov(&eye, &eye);
    let power = inst.power / s2;
    constraints.push(Constraint::Linear {
        label: "power".into(),
        expr: AffineExpr::constant(-power).with_cov(a, b),
    });

    let mut bounds = Vec::new();
    if shape.outage {
        bounds.push(VarBound { var: Var::Omega, lower: 1.0, upper: None });
        bounds.push(VarBound { var: Var::Zeta, lower: 0.0, upper: Some(ZETA_CAP) });
    }
    if objective == Objective::MaxSlack {
        bounds.push(VarBound { var: Var::Slack, lower: SLACK_FLOOR, upper: None });
    }

    Ok(SubproblemSpec {
        m,
        sigma2: s2,
        power,
        shape: shape.clone(),
        objective,
        constraints,
        bounds,
        anchor: anchor_n,
    })
}

fn normalized(inst: &NetworkInstance) -> NetworkInstance {
    NetworkInstance { sigma2: 1.0, power: inst.power / inst.sigma2, ..inst.clone() }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubproblemStatus {
    Optimal,
    Infeasible,
    NumericalFailure { reason: String, max_violation: f64 },
}

#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub status: SubproblemStatus,
    /// Physical (un-normalized) point; the anchor when not optimal.
    pub iterate: CccpIterate,
    pub slack: Option<f64>,
    /// Largest row/bound violation at the returned point, normalized units.
    pub max_violation: f64,
    pub newton_steps: usize,
    /// The zeta cap is within 1% of being active.
    pub zeta_cap_active: bool,
}

struct Layout {
    off_c: Option<usize>,
    off_e: Option<usize>,
    omega: Option<usize>,
    zeta: Option<usize>,
    slack: Option<usize>,
    n: usize,
}

impl Layout {
    fn new(spec: &SubproblemSpec, bd: usize) -> Self {
        let mut n = 0;
        let mut take = |on: bool, len: usize| {
            on.then(|| {
                n += len;
                n - len
            })
        };
        let off_c = take(spec.shape.beam_c, bd);
        let off_e = take(spec.shape.beam_e, bd);
        let omega = take(spec.shape.outage, 1);
        let zeta = take(spec.shape.outage, 1);
        let slack = take(spec.objective == Objective::MaxSlack, 1);
        Self { off_c, off_e, omega, zeta, slack, n }
    }
}

fn lower_affine(e: &AffineExpr, lay: &Layout, basis: &HermitianBasis) -> Affine {
    let mut a = vec![0.0; lay.n];
    let bd = basis.dim();
    if let (Some(m), Some(off)) = (&e.w_c, lay.off_c) {
        a[off..off + bd].copy_from_slice(&basis.coeffs(m));
    }
    if let (Some(m), Some(off)) = (&e.w_e, lay.off_e) {
        a[off..off + bd].copy_from_slice(&basis.coeffs(m));
    }
    for (coef, idx) in [(e.omega, lay.omega), (e.zeta, lay.zeta), (e.slack, lay.slack)] {
        if let Some(i) = idx {
            a[i] = coef;
        }
    }
    Affine { a, b: e.constant }
}

fn lower(spec: &SubproblemSpec, basis: &HermitianBasis) -> (Lowered, Layout) {
    let lay = Layout::new(spec, basis.dim());
    let mut rows = Vec::new();
    for c in &spec.constraints {
        rows.push(match c {
            Constraint::LogRate { logs, minus, .. } => Row::NegLogs {
                logs: logs.iter().map(|l| lower_affine(l, &lay, basis)).collect(),
                linear: lower_affine(minus, &lay, basis),
            },
            Constraint::Quadratic { squares, linear, .. } => Row::Squares {
                squares: squares.iter().map(|l| lower_affine(l, &lay, basis)).collect(),
                linear: lower_affine(linear, &lay, basis),
            },
            Constraint::Linear { expr, .. } => {
                let mut l = lower_affine(expr, &lay, basis);
                // Same feasible set, better-balanced barrier.
                let s = l.b.abs().max(1.0);
                l.a.iter_mut().for_each(|v| *v /= s);
                l.b /= s;
                Row::Linear(l)
            }
        });
    }
    for b in &spec.bounds {
        let idx = match b.var {
            Var::Omega => lay.omega,
            Var::Zeta => lay.zeta,
            Var::Slack => lay.slack,
        }
        .expect("bounded variable present in layout");
        let scale = b.lower.abs().max(1.0);
        let mut a = vec![0.0; lay.n];
        a[idx] = -1.0 / scale;
        rows.push(Row::Linear(Affine { a, b: b.lower / scale }));
        if let Some(u) = b.upper {
            let scale = u.abs().max(1.0);
            let mut a = vec![0.0; lay.n];
            a[idx] = 1.0 / scale;
            rows.push(Row::Linear(Affine { a, b: -u / scale }));
        }
    }
    let mut objective = vec![0.0; lay.n];
    let target = match spec.objective {
        Objective::MaxOmega => lay.omega,
        Objective::MaxSlack => lay.slack,
    };
    objective[target.expect("objective variable present")] = 1.0;
    let blocks = [lay.off_c, lay.off_e].into_iter().flatten().collect();
    (Lowered { n: lay.n, basis: basis.clone(), blocks, rows, objective }, lay)
}

fn unlower(x: &[f64], lay: &Layout, basis: &HermitianBasis, m: usize) -> Point {
    let bd = basis.dim();
    let block = |off: Option<usize>| off.map_or_else(|| CMat::zeros(m, m), |o| basis.matrix(&x[o..o + bd]));
    Point {
        w_c: block(lay.off_c),
        w_e: block(lay.off_e),
        omega: lay.omega.map_or(1.0, |i| x[i]),
        zeta: lay.zeta.map_or(0.0, |i| x[i]),
        slack: lay.slack.map_or(0.0, |i| x[i]),
    }
}

/// Interior start: the anchor pulled toward a scaled identity so every
/// block is positive definite and strictly inside the power budget.
fn start_point(spec: &SubproblemSpec, lay: &Layout, basis: &HermitianBasis) -> Vec<f64> {
    let m = spec.m;
    let blocks = spec.psd_blocks().max(1) as f64;
    let center = CMat::identity(m, m).scale(spec.power / (2.0 * blocks * m as f64));
    let pull = 0.05;
    let mix = |w: &CMat| w.scale(1.0 - pull) + center.scale(pull);
    let mut x = vec![0.0; lay.n];
    let bd = basis.dim();
    if let Some(o) = lay.off_c {
        x[o..o + bd].copy_from_slice(&basis.coords(&mix(&spec.anchor.w_c)));
    }
    if let Some(o) = lay.off_e {
        x[o..o + bd].copy_from_slice(&basis.coords(&mix(&spec.anchor.w_e)));
    }
    if let Some(i) = lay.omega {
        x[i] = spec.anchor.omega + 1e-4;
    }
    if let Some(i) = lay.zeta {
        x[i] = spec.anchor.zeta.min(0.5 * ZETA_CAP) + 1e-4;
    }
    if let Some(i) = lay.slack {
        // Start with every rate row satisfied.
        let p = unlower(&x, lay, basis, m);
        let worst = spec
            .constraints
            .iter()
            .filter(|c| matches!(c, Constraint::LogRate { .. }))
            .map(|c| c.violation(&p))
            .fold(0.0, f64::max);
        x[i] = (-worst - 1.0).max(0.5 * SLACK_FLOOR);
    }
    x
}

pub fn solve_subproblem(spec: &SubproblemSpec, opts: &SolverOptions) -> SubproblemSolution {
    let basis = HermitianBasis::new(spec.m);
    let (lowered, lay) = lower(spec, &basis);
    let x0 = start_point(spec, &lay, &basis);
    let settings = IpmSettings { feas_tol: opts.feas_tol, gap_tol: opts.gap_tol, max_newton: opts.max_iterations };
    let denorm = |p: &Point| CccpIterate {
        w_c: hermitize(&p.w_c).scale(spec.sigma2),
        w_e: hermitize(&p.w_e).scale(spec.sigma2),
        omega: p.omega,
        zeta: p.zeta,
    };
    let anchor_phys = CccpIterate {
        w_c: spec.anchor.w_c.scale(spec.sigma2),
        w_e: spec.anchor.w_e.scale(spec.sigma2),
        ..spec.anchor.clone()
    };
    let slack_of = |p: &Point| (spec.objective == Objective::MaxSlack).then_some(p.slack);
    match lowered.solve(x0, settings) {
        IpmOutcome::Optimal { x, newton_steps } => {
            let p = unlower(&x, &lay, &basis, spec.m);
            SubproblemSolution {
                status: SubproblemStatus::Optimal,
                iterate: denorm(&p),
                slack: slack_of(&p),
                max_violation: spec.max_violation(&p),
                newton_steps,
                zeta_cap_active: spec.shape.outage && p.zeta > 0.99 * ZETA_CAP,
            }
        }
        IpmOutcome::Infeasible => SubproblemSolution {
            status: SubproblemStatus::Infeasible,
            iterate: anchor_phys,
            slack: None,
            max_violation: f64::NAN,
            newton_steps: opts.max_iterations,
            zeta_cap_active: false,
        },
        IpmOutcome::Failure { reason, max_violation } => SubproblemSolution {
            status: SubproblemStatus::NumericalFailure { reason, max_violation },
            iterate: anchor_phys,
            slack: None,
            max_violation,
            newton_steps: opts.max_iterations,
            zeta_cap_active: false,
        },
    }
}

#[cfg(test)]
mod tests;
