use super::*;
use crate::dc::build_coeff_tables;
use crate::linalg::{c, eigh_desc, min_eig, outer};
use crate::model::BeamPair;
use crate::montecarlo::{sample_instance, ChannelProfile};

fn setup(seed: u64, r_c: f64, r_e: f64) -> (NetworkInstance, SecrecyTargets, CccpIterate, CoefficientTable) {
    let inst = sample_instance(&ChannelProfile::default(), seed).unwrap();
    let t = SecrecyTargets::new(r_c, r_e, 0.1).unwrap();
    let half = (inst.power / 2.0).sqrt();
    let b = BeamPair::new(inst.h_c.normalize().scale(half), inst.h_e.normalize().scale(half));
    let anchor = CccpIterate::from_beams(&b, 1.0, 0.0);
    let tab = build_coeff_tables(&inst);
    (inst, t, anchor, tab)
}

fn is_log(c: &Constraint) -> bool {
    matches!(c, Constraint::LogRate { .. })
}
fn is_quad(c: &Constraint) -> bool {
    matches!(c, Constraint::Quadratic { .. })
}
fn is_linear(c: &Constraint) -> bool {
    matches!(c, Constraint::Linear { .. })
}

/// Rates from covariances, written out from the SINR definitions.
fn sdr_rates(inst: &NetworkInstance, wc: &CMat, we: &CMat) -> [f64; 3] {
    let q = |h: &crate::linalg::CVec, w: &CMat| (h.adjoint() * w * h)[(0, 0)].re;
    let s2 = inst.sigma2;
    let f = q(&inst.h_b, wc) + q(&inst.h_b, we);
    let bc = inst.alpha * inst.g_c.norm_sqr() * f;
    let be = inst.alpha * inst.g_e.norm_sqr() * f;
    let bv = inst.alpha * inst.g_v.norm_sqr() * f;
    let ce = q(&inst.h_c, we) / (s2 + q(&inst.h_c, wc) + bc);
    let cc = q(&inst.h_c, wc) / (s2 + bc);
    let vc = q(&inst.h_v, wc) / (s2 + q(&inst.h_v, we) + bv);
    let ee = q(&inst.h_e, we) / (s2 + q(&inst.h_e, wc) + be);
    let ve = q(&inst.h_v, we) / (s2 + q(&inst.h_v, wc) + bv);
    let l = |x: f64| (1.0 + x).log2();
    [l(cc) - l(vc), l(ee) - l(ve), l(ce) - l(ve)]
}

#[test]
fn constraint_census() {
    let (inst, t, anchor, tab) = setup(1, 1.0, 0.1);
    let spec = assemble(&inst, &t, &anchor, &tab).unwrap();
    assert_eq!(spec.count(is_log), 3);
    assert_eq!(spec.count(is_quad), 2);
    assert_eq!(spec.count(is_linear), 1);
    assert_eq!(spec.psd_blocks(), 2);
    assert_eq!(spec.bounds.len(), 2);
    let labels: Vec<&str> = spec.constraints.iter().map(|c| c.label()).collect();
    assert_eq!(labels, ["rate_c", "rate_e", "rate_ce", "outage", "eavesdropper", "power"]);
}

#[test]
fn matrix_data_is_hermitian() {
    let (inst, t, anchor, tab) = setup(2, 1.0, 0.1);
    let spec = assemble(&inst, &t, &anchor, &tab).unwrap();
    let mut all = Vec::new();
    for c in &spec.constraints {
        match c {
            Constraint::LogRate { logs, minus, .. } => all.extend(logs.iter().chain([minus])),
            Constraint::Quadratic { squares, linear, .. } => all.extend(squares.iter().chain([linear])),
            Constraint::Linear { expr, .. } => all.push(expr),
        }
    }
    for e in all {
        for m in [&e.w_c, &e.w_e].into_iter().flatten() {
            assert!(crate::linalg::max_hermitian_defect(m) < 1e-12);
        }
    }
}

#[test]
fn outage_row_scales_with_bd_gain() {
    let (inst, t, anchor, tab) = setup(3, 1.0, 0.1);
    let spec = assemble(&inst, &t, &anchor, &tab).unwrap();
    let Constraint::Quadratic { linear, .. } = &spec.constraints[3] else { panic!() };
    let coef = linear.w_c.as_ref().unwrap();
    // -rho a_c H_b: the right-hand side coefficient is positive.
    let expect = outer(&inst.h_b).scale(-t.rho() * inst.bd_gain_c() / inst.sigma2);
    assert!((coef - &expect).norm() < 1e-12 * expect.norm());
}

#[test]
fn dead_eavesdropper_has_no_leak_coefficient() {
    let (mut inst, t, anchor, _) = setup(4, 1.0, 0.1);
    inst.h_v = crate::linalg::CVec::zeros(4);
    inst.g_v = c(0.0, 0.0);
    let tab = build_coeff_tables(&inst);
    let spec = assemble(&inst, &t, &anchor, &tab).unwrap();
    let Constraint::Quadratic { linear, squares, .. } = &spec.constraints[4] else { panic!() };
    assert_eq!(linear.w_c.as_ref().unwrap().norm(), 0.0);
    assert_eq!(linear.w_e.as_ref().unwrap().norm(), 0.0);
    assert_eq!(squares[1].w_c.as_ref().unwrap().norm(), 0.0);
}

#[test]
fn dead_bd_link_is_rejected() {
    let (mut inst, t, anchor, _) = setup(5, 1.0, 0.1);
    inst.g_c = c(0.0, 0.0);
    let tab = build_coeff_tables(&inst);
    assert_eq!(assemble(&inst, &t, &anchor, &tab).unwrap_err(), Error::DeadBdLink);
}

#[test]
fn feasible_anchor_satisfies_rows_and_is_not_lost() {
    let (inst, t, anchor, tab) = setup(6, 1.0, 0.1);
    let first = solve_subproblem(&assemble(&inst, &t, &anchor, &tab).unwrap(), &SolverOptions::default());
    assert_eq!(first.status, SubproblemStatus::Optimal);
    // The first solution is feasible for the original problem; tangency
    // keeps it feasible for the subproblem built around it.
    let next = first.iterate;
    let spec = assemble(&inst, &t, &next, &tab).unwrap();
    let p = spec.normalize(&next, 0.0);
    assert!(spec.max_violation(&p) <= 1e-7, "{}", spec.max_violation(&p));
    let sol = solve_subproblem(&spec, &SolverOptions::default());
    assert_eq!(sol.status, SubproblemStatus::Optimal);
    assert!(sol.iterate.omega >= next.omega - 1e-6);
}

#[test]
fn huge_central_target_is_infeasible() {
    let (inst, t, anchor, tab) = setup(7, 100.0, 0.1);
    let bound = (1.0 + inst.power * inst.h_c.norm_squared() / inst.sigma2).log2();
    assert!(bound < 100.0);
    let sol = solve_subproblem(&assemble(&inst, &t, &anchor, &tab).unwrap(), &SolverOptions::default());
    assert_eq!(sol.status, SubproblemStatus::Infeasible);
}

#[test]
fn solutions_are_psd_and_inner_feasible() {
    for seed in 10..16 {
        let (inst, t, anchor, tab) = setup(seed, 0.5, 0.1);
        let spec = assemble(&inst, &t, &anchor, &tab).unwrap();
        let sol = solve_subproblem(&spec, &SolverOptions::default());
        if sol.status != SubproblemStatus::Optimal {
            continue;
        }
        let it = &sol.iterate;
        for w in [&it.w_c, &it.w_e] {
            let tr = w.trace().re;
            assert!(min_eig(w) >= -1e-8 * (1.0 + tr));
        }
        let r = sdr_rates(&inst, &it.w_c, &it.w_e);
        assert!(r[0] >= t.r_c - 1e-6 && r[1] >= t.r_e - 1e-6 && r[2] >= t.r_e - 1e-6, "{r:?}");
        let w = &it.w_c + &it.w_e;
        let q = |h: &crate::linalg::CVec| (h.adjoint() * &w * h)[(0, 0)].re;
        let lambda = q(&inst.h_b);
        let xi = inst.sigma2 * (it.omega * (it.zeta + 1.0) - 1.0) / inst.bd_gain_c();
        assert!(lambda >= xi / t.rho() - 1e-6 * lambda.max(1.0));
        let gamma_vb = inst.bd_gain_v() * lambda / (inst.sigma2 + q(&inst.h_v));
        assert!(gamma_vb <= it.zeta + 1e-6);
        assert!(it.total_power() <= inst.power * (1.0 + 1e-6));
        // Tight relaxation in practice.
        let (vals, _) = eigh_desc(&it.w_c);
        assert!(vals[1] <= 1e-6 * vals[0]);
    }
}

#[test]
fn solve_is_deterministic() {
    let (inst, t, anchor, tab) = setup(8, 1.0, 0.1);
    let spec = assemble(&inst, &t, &anchor, &tab).unwrap();
    let a = solve_subproblem(&spec, &SolverOptions::default());
    let b = solve_subproblem(&spec, &SolverOptions::default());
    assert_eq!(a.status, b.status);
    assert_eq!(a.iterate, b.iterate);
}

#[test]
fn slack_objective_certifies_margin() {
    let (inst, t, anchor, tab) = setup(9, 0.5, 0.1);
    let spec = assemble_shape(&inst, &t, &ProblemShape::noma(&t), Objective::MaxSlack, &anchor, &tab).unwrap();
    assert_eq!(spec.bounds.len(), 3);
    let sol = solve_subproblem(&spec, &SolverOptions::default());
    assert_eq!(sol.status, SubproblemStatus::Optimal);
    let s = sol.slack.unwrap();
    let r = sdr_rates(&inst, &sol.iterate.w_c, &sol.iterate.w_e);
    // Every rate row carries the slack in nats on top of its target.
    assert!(r[0] >= t.r_c + s / std::f64::consts::LN_2 - 1e-6);
}

#[test]
fn omega_objective_needs_outage_rows() {
    let (inst, t, anchor, tab) = setup(1, 0.5, 0.1);
    let shape = ProblemShape::oma_slot_b(&t);
    assert!(assemble_shape(&inst, &t, &shape, Objective::MaxOmega, &anchor, &tab).is_err());
}

#[test]
fn dump_has_one_line_per_item() {
    let (inst, t, anchor, tab) = setup(2, 1.0, 0.1);
    let spec = assemble(&inst, &t, &anchor, &tab).unwrap();
    let mut out = Vec::new();
    spec.write_text(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    // header + 2 blocks + 2 bounds + 6 rows
    assert_eq!(lines.len(), 11);
    assert!(lines[0].starts_with("subproblem m=4 sigma2=1.0000000000000000e0 power=1.0000000000000000e3"));
    assert_eq!(lines[1], "block w_c psd 4");
    assert!(lines[3].starts_with("bound omega lower=1.0000000000000000e0 upper=inf"));
    assert!(lines[5].starts_with("lograte rate_c log={const=1.0000000000000000e0 "));
    assert!(lines[10].starts_with("linear power expr={const=-1.0000000000000000e3 "));
    assert_eq!(lines[5].matches("w_c=[").count(), 3);
}
