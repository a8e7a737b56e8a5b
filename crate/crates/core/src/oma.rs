//! Two-slot TDMA baseline. Slot A serves the central user and carries the
//! BD message, slot B serves the cell-edge user; slots have equal length
//! and the full power budget each.

use crate::cccp::{run_shape, CccpOptions, Residuals, SolveReport, SolveStatus};
use crate::error::Result;
use crate::linalg::CVec;
use crate::model::{NetworkInstance, SecrecyTargets};
use crate::subproblem::ProblemShape;

#[derive(Debug, Clone, PartialEq)]
pub struct OmaReport {
    pub status: SolveStatus,
    /// Half of the slot-A outage rate, bits/s/Hz.
    pub r_b: f64,
    pub w_c: CVec,
    pub w_e: CVec,
    pub slot_a: SolveReport,
    pub slot_b: SolveReport,
}

impl OmaReport {
    pub fn residuals(&self) -> [Residuals; 2] {
        [self.slot_a.residuals, self.slot_b.residuals]
    }
}

fn combine(a: SolveStatus, b: SolveStatus) -> SolveStatus {
    use SolveStatus::*;
    // Failures dominate, then infeasibility, then the weaker success.
    for s in [SolverFailure, RecoveryFailed, Infeasible, MaxIterations] {
        if a == s || b == s {
            return s;
        }
    }
    Converged
}

pub fn solve_oma(inst: &NetworkInstance, targets: &SecrecyTargets, opts: &CccpOptions) -> Result<OmaReport> {
    inst.validate()?;
    targets.validate()?;
    opts.validate()?;
    let slot_b = run_shape(inst, targets, ProblemShape::oma_slot_b(targets), opts);
    let slot_a = if slot_b.status.is_success() {
        run_shape(inst, targets, ProblemShape::oma_slot_a(targets), opts)
    } else {
        // Slot A cannot rescue an infeasible slot B; skip the expensive run.
        SolveReport::empty(SolveStatus::Infeasible, inst.m())
    };
    let status = combine(slot_a.status, slot_b.status);
    let r_b = if status.is_success() { 0.5 * slot_a.r_b } else { 0.0 };
    Ok(OmaReport {
        status,
        r_b,
        w_c: slot_a.beams.w_c.clone(),
        w_e: slot_b.beams.w_e.clone(),
        slot_a,
        slot_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{secrecy_rates, BeamPair};
    use crate::montecarlo::{sample_instance, ChannelProfile};

    fn inst(seed: u64) -> NetworkInstance {
        sample_instance(&ChannelProfile::default(), seed).unwrap()
    }

    #[test]
    fn zero_targets_feasible_and_halved() {
        let mut n = inst(3);
        n.h_v = CVec::zeros(4);
        n.g_v = crate::linalg::c(0.0, 0.0);
        let t = SecrecyTargets::new(0.0, 0.0, 0.1).unwrap();
        let r = solve_oma(&n, &t, &CccpOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!((r.r_b - 0.5 * r.slot_a.r_b).abs() < 1e-15);
        assert!(r.r_b > 0.0);
    }

    #[test]
    fn slot_rates_meet_doubled_targets() {
        let n = inst(5);
        let t = SecrecyTargets::new(1.0, 0.1, 0.1).unwrap();
        let r = solve_oma(&n, &t, &CccpOptions::default()).unwrap();
        assert!(r.status.is_success(), "{:?}", r.status);
        let a = secrecy_rates(&n, &BeamPair::new(r.w_c.clone(), CVec::zeros(4))).unwrap();
        let b = secrecy_rates(&n, &BeamPair::new(CVec::zeros(4), r.w_e.clone())).unwrap();
        assert!(0.5 * a.r_c >= 1.0 - 1e-6);
        assert!(0.5 * b.r_e >= 0.1 - 1e-6);
        assert!(r.w_c.norm_squared() <= n.power * (1.0 + 1e-6));
        assert!(r.w_e.norm_squared() <= n.power * (1.0 + 1e-6));
    }

    #[test]
    fn edge_target_above_half_capacity_is_infeasible() {
        let n = inst(7);
        // Even with no leakage, slot B cannot exceed half of log2(1 + P |h_e|^2).
        let cap = 0.5 * (1.0 + n.power * n.h_e.norm_squared()).log2();
        let t = SecrecyTargets::new(0.0, cap + 0.05, 0.1).unwrap();
        let r = solve_oma(&n, &t, &CccpOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn slot_a_ignores_edge_channels() {
        let t = SecrecyTargets::new(0.5, 0.0, 0.1).unwrap();
        let a = inst(11);
        let mut b = a.clone();
        b.h_e = b.h_e.scale(1.7);
        b.g_e *= 0.3;
        let o = CccpOptions::default();
        let ra = solve_oma(&a, &t, &o).unwrap();
        let rb = solve_oma(&b, &t, &o).unwrap();
        assert_eq!(ra.slot_a.r_b, rb.slot_a.r_b);
        assert_eq!(ra.w_c, rb.w_c);
    }
}
