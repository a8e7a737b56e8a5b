//! Primal log-barrier interior-point method for the lowered subproblem.
//!
//! The lowered problem lives on a real vector `x`; Hermitian blocks are
//! stored in the coordinates of [`HermitianBasis`]. Every scalar row is a
//! convex `g(x) <= 0` of one of three shapes (affine, sum of squares plus
//! affine, affine minus sum of logs) and each block carries
//! `-ln det W`. A phase-one problem with a shared relaxation variable
//! finds a strictly feasible start when the supplied one is not.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{c, cholesky_pd, CMat, HermitianBasis};

/// Affine function `a . x + b` on the lowered variable vector.
#[derive(Debug, Clone)]
pub(crate) struct Affine {
    pub a: Vec<f64>,
    pub b: f64,
}

impl Affine {
    fn eval(&self, x: &[f64]) -> f64 {
        self.b + self.a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>()
    }
}

/// One convex row `g(x) <= 0`.
#[derive(Debug, Clone)]
pub(crate) enum Row {
    Linear(Affine),
    /// `0.5 sum_k s_k(x)^2 + l(x)`
    Squares { squares: Vec<Affine>, linear: Affine },
    /// `l(x) - sum_k ln a_k(x)`
    NegLogs { logs: Vec<Affine>, linear: Affine },
}

impl Row {
    /// Value of `g`, or `None` outside the log domain.
    fn value(&self, x: &[f64]) -> Option<f64> {
        match self {
            Row::Linear(l) => Some(l.eval(x)),
            Row::Squares { squares, linear } => {
                Some(0.5 * squares.iter().map(|s| s.eval(x).powi(2)).sum::<f64>() + linear.eval(x))
            }
            Row::NegLogs { logs, linear } => {
                let mut v = linear.eval(x);
                for l in logs {
                    let u = l.eval(x);
                    if !(u > 0.0) {
                        return None;
                    }
                    v -= u.ln();
                }
                Some(v)
            }
        }
    }

    /// Adds the gradient of `g` into `grad` (length of `x`) and returns the
    /// rank-one factors `(v, weight)` of its Hessian, `sum weight * v v^T`.
    fn derivatives(&self, x: &[f64], grad: &mut [f64]) -> Vec<(&[f64], f64)> {
        match self {
            Row::Linear(l) => {
                axpy(grad, 1.0, &l.a);
                Vec::new()
            }
            Row::Squares { squares, linear } => {
                axpy(grad, 1.0, &linear.a);
                squares
                    .iter()
                    .map(|s| {
                        axpy(grad, s.eval(x), &s.a);
                        (s.a.as_slice(), 1.0)
                    })
                    .collect()
            }
            Row::NegLogs { logs, linear } => {
                axpy(grad, 1.0, &linear.a);
                logs.iter()
                    .map(|l| {
                        let u = l.eval(x);
                        axpy(grad, -1.0 / u, &l.a);
                        (l.a.as_slice(), 1.0 / (u * u))
                    })
                    .collect()
            }
        }
    }
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

#[derive(Debug, Clone)]
pub(crate) struct Lowered {
    pub n: usize,
    pub basis: HermitianBasis,
    /// Offsets of the PSD blocks inside `x`.
    pub blocks: Vec<usize>,
    pub rows: Vec<Row>,
    /// Objective to maximize, `c . x`.
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmSettings {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_newton: usize,
}

#[derive(Debug, Clone)]
pub(crate) enum IpmOutcome {
    Optimal { x: Vec<f64>, newton_steps: usize },
    Infeasible,
    Failure { reason: String, max_violation: f64 },
}

const BARRIER_GROWTH: f64 = 12.0;
const NEWTON_TOL: f64 = 1e-8;
/// Newton steps allowed for one centering before it counts as stalled.
const CENTERING_CAP: usize = 50;
/// Relative gap below which a stalled late centering still yields a usable
/// (slightly suboptimal, strictly feasible) point.
const FALLBACK_GAP: f64 = 1e-6;

/// A barrier objective over `x` (or over `(x, t)` in phase one, where every
/// row is relaxed to `g(x) <= t`).
struct Barrier<'a> {
    p: &'a Lowered,
    relaxed: bool,
}

impl<'a> Barrier<'a> {
    fn dim(&self) -> usize {
        self.p.n + usize::from(self.relaxed)
    }

    fn relax(&self, z: &[f64]) -> f64 {
        if self.relaxed {
            z[self.p.n]
        } else {
            0.0
        }
    }

    fn objective(&self, z: &[f64]) -> f64 {
        if self.relaxed {
            -z[self.p.n]
        } else {
            dot(&self.p.objective, z)
        }
    }

    fn block(&self, z: &[f64], k: usize) -> CMat {
        let off = self.p.blocks[k];
        self.p.basis.matrix(&z[off..off + self.p.basis.dim()])
    }

    /// `-sum ln(-g) - sum ln det`, or `None` outside the domain.
    fn potential(&self, z: &[f64]) -> Option<f64> {
        let t = self.relax(z);
        let mut phi = 0.0;
        for r in &self.p.rows {
            let slack = t - r.value(&z[..self.p.n])?;
            if !(slack > 0.0) {
                return None;
            }
            phi -= slack.ln();
        }
        for k in 0..self.p.blocks.len() {
            let l = cholesky_pd(&self.block(z, k))?;
            let logdet: f64 = (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>() * 2.0;
            if !logdet.is_finite() {
                return None;
            }
            phi -= logdet;
        }
        Some(phi)
    }

    fn value(&self, z: &[f64], weight: f64) -> Option<f64> {
        Some(-weight * self.objective(z) + self.potential(z)?)
    }

    /// Per-block maps `T` with `coords(W + L dV L^H) = coords(W) + T dV`,
    /// `W = L L^H`. Working in `dV` turns the log-det Hessian into a constant
    /// form, so a nearly singular block does not swamp the Newton system.
    fn scalings(&self, z: &[f64]) -> Vec<DMatrix<f64>> {
        let bd = self.p.basis.dim();
        (0..self.p.blocks.len())
            .map(|k| {
                let l = cholesky_pd(&self.block(z, k)).expect("block positive definite inside domain");
                let mut t = DMatrix::zeros(bd, bd);
                for j in 0..bd {
                    let col = self.p.basis.coords(&(&l * self.p.basis.basis_matrix(j) * l.adjoint()));
                    for i in 0..bd {
                        t[(i, j)] = col[i];
                    }
                }
                t
            })
            .collect()
    }

    /// `v <- T^T v` on every block slice.
    fn pull_back(&self, maps: &[DMatrix<f64>], v: &mut [f64]) {
        let bd = self.p.basis.dim();
        for (k, t) in maps.iter().enumerate() {
            let off = self.p.blocks[k];
            let slice = DVector::from_column_slice(&v[off..off + bd]);
            let out = t.tr_mul(&slice);
            v[off..off + bd].copy_from_slice(out.as_slice());
        }
    }

    /// `T dv`, the step in the original coordinates.
    fn push_forward(&self, maps: &[DMatrix<f64>], dv: &DVector<f64>) -> DVector<f64> {
        let bd = self.p.basis.dim();
        let mut out = dv.clone();
        for (k, t) in maps.iter().enumerate() {
            let off = self.p.blocks[k];
            let x = t * dv.rows(off, bd);
            out.rows_mut(off, bd).copy_from(&x);
        }
        out
    }

    /// Gradient and Hessian in the scaled coordinates of [`Self::scalings`].
    fn grad_hess(&self, z: &[f64], weight: f64, maps: &[DMatrix<f64>]) -> (DVector<f64>, DMatrix<f64>) {
        let dim = self.dim();
        let n = self.p.n;
        let mut grad = vec![0.0; dim];
        let mut hess = DMatrix::zeros(dim, dim);
        if self.relaxed {
            grad[n] = weight;
        } else {
            for i in 0..n {
                grad[i] = -weight * self.p.objective[i];
            }
            self.pull_back(maps, &mut grad[..n]);
        }
        let t = self.relax(z);
        let x = &z[..n];
        let mut gi = vec![0.0; dim];
        for r in &self.p.rows {
            let slack = t - r.value(x).expect("row evaluated inside domain");
            gi.iter_mut().for_each(|v| *v = 0.0);
            let factors: Vec<(Vec<f64>, f64)> = r
                .derivatives(x, &mut gi[..n])
                .into_iter()
                .map(|(v, w)| {
                    let mut v = v.to_vec();
                    self.pull_back(maps, &mut v);
                    (v, w)
                })
                .collect();
            self.pull_back(maps, &mut gi[..n]);
            if self.relaxed {
                gi[n] = -1.0;
            }
            // barrier -ln(s), s = t - g: gradient grad(g~)/s, Hessian
            // grad grad^T / s^2 + hess(g)/s, where g~ = g - t.
            for i in 0..dim {
                grad[i] += gi[i] / slack;
            }
            let inv2 = 1.0 / (slack * slack);
            for i in 0..dim {
                if gi[i] == 0.0 {
                    continue;
                }
                for j in 0..dim {
                    hess[(i, j)] += gi[i] * gi[j] * inv2;
                }
            }
            for (v, w) in factors {
                let s = w / slack;
                for i in 0..n {
                    if v[i] == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        hess[(i, j)] += s * v[i] * v[j];
                    }
                }
            }
        }
        // -ln det(L V L^H) at V = I.
        let bd = self.p.basis.dim();
        let m = self.p.basis.order();
        let eye = CMat::identity(m, m);
        let g = self.p.basis.coeffs(&eye);
        for &off in &self.p.blocks {
            for i in 0..bd {
                grad[off + i] -= g[i];
            }
            for a in 0..bd {
                let col = self.p.basis.coeffs(&sandwich(&self.p.basis, &eye, a));
                for b in 0..bd {
                    hess[(off + a, off + b)] += col[b];
                }
            }
        }
        (DVector::from_vec(grad), hess)
    }

    /// Runs damped Newton on `-weight * objective + potential`.
    fn center(&self, z: &mut Vec<f64>, weight: f64, budget: &mut usize, cap: usize) -> Result<(), String> {
        let mut taken = 0;
        loop {
            let maps = self.scalings(z);
            let (grad, hess) = self.grad_hess(z, weight, &maps);
            let scaled = solve_spd(hess, &grad).ok_or("singular Newton system")?;
            let dec = -grad.dot(&scaled);
            let step = self.push_forward(&maps, &scaled);
            if !dec.is_finite() {
                return Err("non-finite Newton decrement".into());
            }
            let f0 = self.value(z, weight).ok_or("left barrier domain")?;
            // Below the second bound the decrease is lost in the rounding of f.
            if dec <= 2.0 * NEWTON_TOL || dec <= 1e-12 * f0.abs() {
                return Ok(());
            }
            if *budget == 0 {
                return Err("interior-point iteration limit reached".into());
            }
            if taken == cap {
                return Err("centering stalled".into());
            }
            *budget -= 1;
            taken += 1;

            let mut s = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + s * b).collect();
                if let Some(f) = self.value(&trial, weight) {
                    if f <= f0 - 0.01 * s * dec {
                        *z = trial;
                        accepted = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            // Phase one only needs a strictly feasible point.
            if accepted && self.relaxed && z[self.p.n] < 0.0 {
                return Ok(());
            }
            if !accepted {
                // Round-off floor: the decrement is tiny relative to the value.
                if dec <= 1e-7 * (1.0 + f0.abs()) {
                    return Ok(());
                }
                return Err(format!("line search failed (decrement {dec:e})"));
            }
        }
    }

    /// Barrier parameter `theta`: number of scalar rows plus block orders.
    fn complexity(&self) -> f64 {
        (self.p.rows.len() + self.p.blocks.len() * self.p.basis.order()) as f64
    }
}

/// `V E_a V` for basis element `a`, without forming `E_a`.
fn sandwich(basis: &HermitianBasis, v: &CMat, a: usize) -> CMat {
    let m = basis.order();
    let mut out = CMat::zeros(m, m);
    if a < m {
        for p in 0..m {
            for q in 0..m {
                out[(p, q)] = v[(p, a)] * v[(a, q)];
            }
        }
        return out;
    }
    let k = (a - m) / 2;
    let imag = (a - m) % 2 == 1;
    let (i, j) = pair_at(m, k);
    for p in 0..m {
        for q in 0..m {
            let x = v[(p, i)] * v[(j, q)];
            let y = v[(p, j)] * v[(i, q)];
            out[(p, q)] = if imag { c(0.0, 1.0) * (x - y) } else { x + y };
        }
    }
    out
}

fn pair_at(m: usize, mut k: usize) -> (usize, usize) {
    for i in 0..m {
        let row = m - i - 1;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
    }
    unreachable!("pair index out of range")
}

fn solve_spd(h: DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let rhs = -grad;
    if let Some(ch) = h.clone().cholesky() {
        return Some(ch.solve(&rhs));
    }
    let scale = (0..h.nrows()).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    for reg in [1e-14, 1e-12, 1e-10, 1e-8] {
        let mut hr = h.clone();
        for i in 0..hr.nrows() {
            hr[(i, i)] += reg * scale;
        }
        if let Some(ch) = hr.cholesky() {
            return Some(ch.solve(&rhs));
        }
    }
    h.lu().solve(&rhs)
}

impl Lowered {
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| r.value(x).unwrap_or(f64::INFINITY))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn strictly_feasible(&self, x: &[f64]) -> bool {
        Barrier { p: self, relaxed: false }.potential(x).is_some()
    }

    /// Maximizes the objective from the start `x0`. `x0` must keep every
    /// block positive definite and every log argument positive; rows may be
    /// violated, in which case phase one runs first.
    pub fn solve(&self, x0: Vec<f64>, s: IpmSettings) -> IpmOutcome {
        let mut budget = s.max_newton;
        let mut x = x0;
        if !self.strictly_feasible(&x) {
            match self.phase_one(x, &mut budget, s) {
                Ok(Some(feasible)) => x = feasible,
                Ok(None) => {
                    return IpmOutcome::Infeasible;
                }
                Err((reason, z)) => {
                    return IpmOutcome::Failure { max_violation: self.max_violation(&z[..self.n]), reason };
                }
            }
        }
        let barrier = Barrier { p: self, relaxed: false };
        let theta = barrier.complexity();
        let mut weight = 1.0;
        let mut last: Option<(Vec<f64>, f64)> = None;
        loop {
            // A warm start sits close to the boundary, so the first centering
            // may need many steps; only later ones are capped.
            let cap = if last.is_none() { usize::MAX } else { CENTERING_CAP };
            if let Err(reason) = barrier.center(&mut x, weight, &mut budget, cap) {
                if let Some((prev, gap)) = last {
                    if gap <= FALLBACK_GAP * barrier.objective(&prev).abs().max(1.0) {
                        return IpmOutcome::Optimal { x: prev, newton_steps: s.max_newton - budget };
                    }
                }
                return IpmOutcome::Failure { max_violation: self.max_violation(&x), reason };
            }
            let obj = barrier.objective(&x);
            if theta / weight <= s.gap_tol * obj.abs().max(1.0) {
                return IpmOutcome::Optimal { x, newton_steps: s.max_newton - budget };
            }
            last = Some((x.clone(), theta / weight));
            weight *= BARRIER_GROWTH;
        }
    }

    /// Minimizes the common relaxation `t` of all rows. Returns a strictly
    /// feasible point, `None` when the rows are certified infeasible, or an
    /// error with the last point.
    #[allow(clippy::type_complexity)]
    fn phase_one(&self, x: Vec<f64>, budget: &mut usize, s: IpmSettings) -> Result<Option<Vec<f64>>, (String, Vec<f64>)> {
        let start = self.max_violation(&x);
        if !start.is_finite() {
            return Err(("start point outside the log domain".into(), x));
        }
        let mut z = x;
        z.push(start.max(0.0) + 1.0);
        let barrier = Barrier { p: self, relaxed: true };
        let theta = barrier.complexity();
        let n = self.n;
        let mut weight = 1.0;
        loop {
            if let Err(reason) = barrier.center(&mut z, weight, budget, usize::MAX) {
                return Err((reason, z));
            }
            let t = z[n];
            if t < 0.0 {
                z.truncate(n);
                return Ok(Some(z));
            }
            // Lower bound on the optimal relaxation from the duality gap.
            if t - theta / weight > s.feas_tol {
                return Ok(None);
            }
            if theta / weight <= s.gap_tol {
                return Ok(None);
            }
            weight *= BARRIER_GROWTH;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cvec, outer, trace_prod};

    fn settings() -> IpmSettings {
        IpmSettings { feas_tol: 1e-8, gap_tol: 1e-9, max_newton: 400 }
    }

    #[test]
    fn pair_indexing_matches_basis_layout() {
        let m = 4;
        let mut k = 0;
        for i in 0..m {
            for j in (i + 1)..m {
                assert_eq!(pair_at(m, k), (i, j));
                k += 1;
            }
        }
    }

    #[test]
    fn sandwich_matches_dense_product() {
        let basis = HermitianBasis::new(3);
        let v = outer(&cvec(&[c(1.0, 0.2), c(0.1, -0.5), c(0.7, 0.0)])) + CMat::identity(3, 3);
        for a in 0..basis.dim() {
            let e = basis.basis_matrix(a);
            let dense = &v * &e * &v;
            assert!((sandwich(&basis, &v, a) - dense).norm() < 1e-12);
        }
    }

    /// max tr(A W) s.t. tr W <= 1, W psd: optimum is the top eigenvalue.
    #[test]
    fn linear_sdp_reaches_top_eigenvalue() {
        let basis = HermitianBasis::new(2);
        let a = outer(&cvec(&[c(1.0, 0.0), c(0.0, 1.0)])) + outer(&cvec(&[c(0.5, 0.0), c(0.0, 0.0)]));
        let p = Lowered {
            n: 4,
            blocks: vec![0],
            rows: vec![Row::Linear(Affine { a: basis.coeffs(&CMat::identity(2, 2)), b: -1.0 })],
            objective: basis.coeffs(&a),
            basis: basis.clone(),
        };
        let x0 = basis.coords(&CMat::identity(2, 2).scale(0.25));
        let IpmOutcome::Optimal { x, .. } = p.solve(x0, settings()) else { panic!("not optimal") };
        let top = crate::linalg::eigh_desc(&a).0[0];
        let w = basis.matrix(&x);
        assert!((trace_prod(&a, &w) - top).abs() < 1e-7);
    }

    /// max t s.t. t <= ln(1 + w), w <= e - 1 (scalar block). Optimum t = 1.
    #[test]
    fn log_row_with_phase_one() {
        let basis = HermitianBasis::new(1);
        let p = Lowered {
            n: 2,
            blocks: vec![0],
            rows: vec![
                Row::NegLogs {
                    logs: vec![Affine { a: vec![1.0, 0.0], b: 1.0 }],
                    linear: Affine { a: vec![0.0, 1.0], b: 0.0 },
                },
                Row::Linear(Affine { a: vec![1.0, 0.0], b: -(1f64.exp() - 1.0) }),
            ],
            objective: vec![0.0, 1.0],
            basis,
        };
        // t = 5 violates the log row, forcing phase one.
        let out = p.solve(vec![0.5, 5.0], settings()); let IpmOutcome::Optimal { x, .. } = out else { panic!("{out:?}") };
        assert!((x[1] - 1.0).abs() < 1e-7, "{x:?}");
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let basis = HermitianBasis::new(1);
        let p = Lowered {
            n: 1,
            blocks: vec![0],
            rows: vec![
                Row::Linear(Affine { a: vec![1.0], b: -1.0 }),
                Row::Linear(Affine { a: vec![-1.0], b: 2.0 }),
            ],
            objective: vec![1.0],
            basis,
        };
        assert!(matches!(p.solve(vec![0.5], settings()), IpmOutcome::Infeasible));
    }

    #[test]
    fn squares_row() {
        // max x s.t. 0.5 (x - 1)^2 - 2 <= 0  ->  x = 3.
        let basis = HermitianBasis::new(1);
        let p = Lowered {
            n: 1,
            blocks: vec![0],
            rows: vec![Row::Squares {
                squares: vec![Affine { a: vec![1.0], b: -1.0 }],
                linear: Affine { a: vec![0.0], b: -2.0 },
            }],
            objective: vec![1.0],
            basis,
        };
        let out = p.solve(vec![1.0], settings()); let IpmOutcome::Optimal { x, .. } = out else { panic!("{out:?}") };
        assert!((x[0] - 3.0).abs() < 1e-7);
    }
}
