//! Difference-of-convex reformulation of the secrecy problem.
//!
//! Rates become sums of `ln(sigma2 + tr(A W_c + B W_e))` terms, the outage
//! constraint becomes `lambda >= xi / rho`, and the bilinear slack products
//! are split into the convex quadratics `eta1..eta4`. The concave parts
//! (`mu_j`, `eta2`, `eta3`) get first-order tangents for the CCCP loop.

use crate::error::{Error, Result};
use crate::linalg::{hermitize, max_hermitian_defect, min_eig, outer, trace_prod, trace_re, zeros, CMat};
use crate::model::{BeamPair, NetworkInstance};

/// Hermitian coefficient matrices of the log terms, indexed `1..=6`.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    phi: [CMat; 6],
    psi: [CMat; 6],
    sigma: [CMat; 6],
    theta: [CMat; 6],
    pub h_c: CMat,
    pub h_e: CMat,
    pub h_b: CMat,
    pub h_v: CMat,
    pub a_c: f64,
    pub a_e: f64,
    pub a_v: f64,
}

impl CoefficientTable {
    pub fn m(&self) -> usize {
        self.h_c.nrows()
    }

    fn idx(j: usize) -> usize {
        assert!((1..=6).contains(&j), "log-term index {j} outside 1..=6");
        j - 1
    }

    pub fn phi(&self, j: usize) -> &CMat {
        &self.phi[Self::idx(j)]
    }

    pub fn psi(&self, j: usize) -> &CMat {
        &self.psi[Self::idx(j)]
    }

    pub fn sigma(&self, j: usize) -> &CMat {
        &self.sigma[Self::idx(j)]
    }

    pub fn theta(&self, j: usize) -> &CMat {
        &self.theta[Self::idx(j)]
    }
}

pub fn build_coeff_tables(inst: &NetworkInstance) -> CoefficientTable {
    let h_c = outer(&inst.h_c);
    let h_e = outer(&inst.h_e);
    let h_b = outer(&inst.h_b);
    let h_v = outer(&inst.h_v);
    let (a_c, a_e, a_v) = (inst.bd_gain_c(), inst.bd_gain_e(), inst.bd_gain_v());

    let central = &h_c + h_b.scale(a_c); // Phi1 = Phi5 = Psi5 = Sigma5
    let bd_v = h_b.scale(a_v); // Phi2 = Psi4 = Psi6
    let bd_e = h_b.scale(a_e); // Theta3
    let edge = &h_e + h_b.scale(a_e); // Phi3 = Psi3 = Sigma3
    let eve = &h_v + h_b.scale(a_v); // Phi4 = Phi6 = Psi2 = Sigma2 = Sigma4 = Sigma6 = Theta2 = Theta4 = Theta6
    let bd_c = h_b.scale(a_c); // Psi1 = Sigma1 = Theta1 = Theta5

    let phi = [
        central.clone(),
        bd_v.clone(),
        edge.clone(),
        eve.clone(),
        central.clone(),
        eve.clone(),
    ];
    let psi = [
        bd_c.clone(),
        eve.clone(),
        edge.clone(),
        bd_v.clone(),
        central.clone(),
        bd_v,
    ];
    let sigma = [
        bd_c.clone(),
        eve.clone(),
        edge,
        eve.clone(),
        central,
        eve.clone(),
    ];
    let theta = [bd_c.clone(), eve.clone(), bd_e, eve.clone(), bd_c, eve];

    CoefficientTable { phi, psi, sigma, theta, h_c, h_e, h_b, h_v, a_c, a_e, a_v }
}

/// One CCCP point: relaxed beam covariances plus the scalar slacks
/// `omega = 2^r_b` and `zeta >= gamma_vb`.
#[derive(Debug, Clone, PartialEq)]
pub struct CccpIterate {
    pub w_c: CMat,
    pub w_e: CMat,
    pub omega: f64,
    pub zeta: f64,
}

impl CccpIterate {
    pub fn from_beams(b: &BeamPair, omega: f64, zeta: f64) -> Self {
        Self { w_c: outer(&b.w_c), w_e: outer(&b.w_e), omega, zeta }
    }

    pub fn total_power(&self) -> f64 {
        trace_re(&self.w_c) + trace_re(&self.w_e)
    }

    pub fn validate(&self, inst: &NetworkInstance) -> Result<()> {
        let m = inst.m();
        if self.w_c.shape() != (m, m) || self.w_e.shape() != (m, m) {
            return Err(Error::Dimension(format!("iterate matrices must be {m}x{m}")));
        }
        for w in [&self.w_c, &self.w_e] {
            let scale = 1.0 + trace_re(w).abs();
            if max_hermitian_defect(w) > 1e-10 * scale {
                return Err(Error::InvalidArgument("iterate matrix is not Hermitian".into()));
            }
            let e = min_eig(w);
            if e < -1e-8 * scale {
                return Err(Error::NotPsd { min_eig: e });
            }
        }
        if self.total_power() > inst.power * (1.0 + 1e-6) {
            return Err(Error::InvalidArgument(format!(
                "iterate power {} exceeds budget {}",
                self.total_power(),
                inst.power
            )));
        }
        if !(self.omega >= 1.0) || !(self.zeta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need omega >= 1 and zeta >= 0 (omega = {}, zeta = {})",
                self.omega, self.zeta
            )));
        }
        Ok(())
    }
}

/// Symmetrizes `w` and rejects it when its smallest eigenvalue is below
/// `-1e-8 (1 + tr w)`.
pub fn checked_psd(w: &CMat) -> Result<CMat> {
    let h = hermitize(w);
    let e = min_eig(&h);
    if e < -1e-8 * (1.0 + trace_re(&h).abs()) {
        return Err(Error::NotPsd { min_eig: e });
    }
    Ok(h)
}

/// `(tau_j, mu_j)`: logs of the signal-plus-noise and interference-plus-noise
/// powers of rate term `j`.
pub fn tau_mu(j: usize, tab: &CoefficientTable, inst: &NetworkInstance, w_c: &CMat, w_e: &CMat) -> Result<(f64, f64)> {
    let w_c = checked_psd(w_c)?;
    let w_e = checked_psd(w_e)?;
    Ok(tau_mu_unchecked(j, tab, inst.sigma2, &w_c, &w_e))
}

pub(crate) fn tau_mu_unchecked(j: usize, tab: &CoefficientTable, sigma2: f64, w_c: &CMat, w_e: &CMat) -> (f64, f64) {
    let tau = (sigma2 + trace_prod(tab.phi(j), w_c) + trace_prod(tab.psi(j), w_e)).ln();
    let mu = (sigma2 + trace_prod(tab.sigma(j), w_c) + trace_prod(tab.theta(j), w_e)).ln();
    (tau, mu)
}

/// `(R_c, R_e, R_ce)` in bits from the log terms at a covariance pair.
pub fn rates_from_logs(tab: &CoefficientTable, inst: &NetworkInstance, w_c: &CMat, w_e: &CMat) -> Result<[f64; 3]> {
    let w_c = checked_psd(w_c)?;
    let w_e = checked_psd(w_e)?;
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let (t1, m1) = tau_mu_unchecked(2 * k + 1, tab, inst.sigma2, &w_c, &w_e);
        let (t2, m2) = tau_mu_unchecked(2 * k + 2, tab, inst.sigma2, &w_c, &w_e);
        *slot = (t1 + t2 - m1 - m2) / std::f64::consts::LN_2;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageTerms {
    pub lambda: f64,
    pub xi: f64,
    pub rho: f64,
}

pub fn lambda_xi_rho(
    inst: &NetworkInstance,
    w_c: &CMat,
    w_e: &CMat,
    omega: f64,
    zeta: f64,
    epsilon: f64,
) -> Result<OutageTerms> {
    if !(omega >= 1.0) || !(zeta >= 0.0) {
        return Err(Error::InvalidArgument(format!("need omega >= 1, zeta >= 0 (got {omega}, {zeta})")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} outside (0, 1)")));
    }
    let a_c = inst.bd_gain_c();
    if a_c == 0.0 {
        return Err(Error::DeadBdLink);
    }
    let h_b = outer(&inst.h_b);
    let lambda = trace_prod(&h_b, w_c) + trace_prod(&h_b, w_e);
    let xi = inst.sigma2 * (omega * (zeta + 1.0) - 1.0) / a_c;
    let rho = -(-epsilon).ln_1p();
    Ok(OutageTerms { lambda, xi, rho })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Etas {
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub eta4: f64,
}

pub fn eta_values(omega: f64, zeta: f64, inst: &NetworkInstance, w_c: &CMat, w_e: &CMat) -> Etas {
    let h_v = outer(&inst.h_v);
    let leak = inst.sigma2 + trace_prod(&h_v, w_c) + trace_prod(&h_v, w_e);
    Etas {
        eta1: 0.5 * (omega + zeta + 1.0).powi(2),
        eta2: 0.5 * omega * omega + 0.5 * (zeta + 1.0).powi(2),
        eta3: 0.5 * (zeta + leak).powi(2),
        eta4: 0.5 * zeta * zeta + 0.5 * leak * leak,
    }
}

/// Tangent of `mu_j` at an anchor, as the affine map
/// `constant + tr(w_c_coef W_c) + tr(w_e_coef W_e)`.
#[derive(Debug, Clone)]
pub struct MuTangent {
    pub constant: f64,
    pub w_c_coef: CMat,
    pub w_e_coef: CMat,
}

impl MuTangent {
    pub fn eval(&self, w_c: &CMat, w_e: &CMat) -> f64 {
        self.constant + trace_prod(&self.w_c_coef, w_c) + trace_prod(&self.w_e_coef, w_e)
    }
}

pub fn mu_tangent(j: usize, tab: &CoefficientTable, sigma2: f64, anchor: &CccpIterate) -> MuTangent {
    let s = tab.sigma(j);
    let t = tab.theta(j);
    let lin = trace_prod(s, &anchor.w_c) + trace_prod(t, &anchor.w_e);
    let d = sigma2 + lin;
    MuTangent {
        constant: d.ln() - lin / d,
        w_c_coef: s.unscale(d),
        w_e_coef: t.unscale(d),
    }
}

pub fn linearize_mu(
    j: usize,
    tab: &CoefficientTable,
    inst: &NetworkInstance,
    anchor: &CccpIterate,
    w_c: &CMat,
    w_e: &CMat,
) -> f64 {
    mu_tangent(j, tab, inst.sigma2, anchor).eval(w_c, w_e)
}

/// Tangent of `eta2` at the anchor's `(omega, zeta)`.
pub fn linearize_eta2(anchor: &CccpIterate, omega: f64, zeta: f64) -> f64 {
    let (wl, zl) = (anchor.omega, anchor.zeta);
    0.5 * wl * wl + 0.5 * (zl + 1.0).powi(2) + wl * (omega - wl) + (zl + 1.0) * (zeta - zl)
}

/// `varphi` at the anchor: eavesdropper leakage `tr(H_v (W_c + W_e))`.
pub fn anchor_leak(inst: &NetworkInstance, anchor: &CccpIterate) -> f64 {
    let h_v = outer(&inst.h_v);
    trace_prod(&h_v, &anchor.w_c) + trace_prod(&h_v, &anchor.w_e)
}

/// Tangent of `eta3` at the anchor. A first-order expansion of a convex
/// function, so it never exceeds `eta3`.
pub fn linearize_eta3(anchor: &CccpIterate, inst: &NetworkInstance, zeta: f64, w_c: &CMat, w_e: &CMat) -> f64 {
    let varphi = anchor_leak(inst, anchor);
    let h_v = outer(&inst.h_v);
    let leak = trace_prod(&h_v, w_c) + trace_prod(&h_v, w_e);
    let base = anchor.zeta + inst.sigma2 + varphi;
    0.5 * base * base + base * (zeta - anchor.zeta + leak - varphi)
}

/// Zero matrix of the instance's dimension; handy for single-beam schemes.
pub fn zero_cov(inst: &NetworkInstance) -> CMat {
    zeros(inst.m())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cvec, frobenius};
    use crate::model::fixtures::t1;
    use crate::model::secrecy_rates;

    #[test]
    fn toy_table_entry_and_aliases() {
        let (inst, _) = t1();
        let tab = build_coeff_tables(&inst);
        assert!((tab.phi(1)[(0, 0)].re - 1.5).abs() < 1e-15);
        for (a, b) in [
            (tab.phi(1), tab.phi(5)),
            (tab.phi(1), tab.psi(5)),
            (tab.phi(1), tab.sigma(5)),
            (tab.sigma(6), tab.theta(2)),
            (tab.sigma(6), tab.theta(4)),
            (tab.sigma(6), tab.theta(6)),
            (tab.psi(1), tab.theta(5)),
        ] {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_alpha_kills_bd_terms() {
        let (mut inst, _) = t1();
        inst.alpha = 0.0;
        let tab = build_coeff_tables(&inst);
        for m in [tab.psi(1), tab.sigma(1), tab.theta(1), tab.theta(5)] {
            assert_eq!(frobenius(m), 0.0);
        }
    }

    #[test]
    fn toy_logs_reproduce_rate() {
        let (inst, b) = t1();
        let tab = build_coeff_tables(&inst);
        let it = CccpIterate::from_beams(&b, 1.0, 0.0);
        let r = rates_from_logs(&tab, &inst, &it.w_c, &it.w_e).unwrap();
        assert!((r[0] - secrecy_rates(&inst, &b).unwrap().r_c).abs() < 1e-12);
        assert!((r[0] - 1.22239).abs() < 1e-5);
    }

    #[test]
    fn zero_covariances_give_log_noise() {
        let (mut inst, _) = t1();
        inst.sigma2 = 2.5;
        let tab = build_coeff_tables(&inst);
        let z = zero_cov(&inst);
        for j in 1..=6 {
            let (t, m) = tau_mu(j, &tab, &inst, &z, &z).unwrap();
            assert_eq!(t, 2.5f64.ln());
            assert_eq!(m, 2.5f64.ln());
        }
    }

    #[test]
    fn tau1_grows_along_central_channel() {
        let (inst, b) = t1();
        let tab = build_coeff_tables(&inst);
        let it = CccpIterate::from_beams(&b, 1.0, 0.0);
        let (t0, _) = tau_mu(1, &tab, &inst, &it.w_c, &it.w_e).unwrap();
        let bumped = &it.w_c + tab.h_c.scale(0.1);
        let (t1v, _) = tau_mu(1, &tab, &inst, &bumped, &it.w_e).unwrap();
        assert!(t1v > t0);
    }

    #[test]
    fn non_psd_input_rejected() {
        let (inst, _) = t1();
        let tab = build_coeff_tables(&inst);
        let mut w = zero_cov(&inst);
        w[(0, 0)] = c(-1.0, 0.0);
        assert!(matches!(tau_mu(1, &tab, &inst, &w, &w), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn outage_terms() {
        let (inst, b) = t1();
        let it = CccpIterate::from_beams(&b, 1.0, 0.0);
        let o = lambda_xi_rho(&inst, &it.w_c, &it.w_e, 1.0, 0.0, 0.1).unwrap();
        assert_eq!(o.xi, 0.0);
        assert!((o.lambda - 4.0).abs() < 1e-14);
        assert!((o.rho - 0.1053605).abs() < 1e-7);
        let mut dead = inst.clone();
        dead.g_c = c(0.0, 0.0);
        assert_eq!(lambda_xi_rho(&dead, &it.w_c, &it.w_e, 2.0, 0.0, 0.1), Err(Error::DeadBdLink));
    }

    #[test]
    fn eta_hand_values() {
        let (inst, _) = t1();
        let z = zero_cov(&inst);
        let e = eta_values(2.0, 3.0, &inst, &z, &z);
        assert_eq!(e.eta1, 18.0);
        assert_eq!(e.eta2, 10.0);

        let mut eve = inst.clone();
        eve.h_v = cvec(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let mut w = zero_cov(&inst);
        w[(0, 0)] = c(2.0, 0.0);
        let e = eta_values(1.0, 1.0, &eve, &w, &z);
        assert_eq!(e.eta3, 8.0);
        assert_eq!(e.eta4, 5.0);

        let e = eta_values(1.7, 0.0, &eve, &w, &z);
        assert_eq!(e.eta3 - e.eta4, 0.0);
    }

    #[test]
    fn tangents_touch_at_anchor() {
        let (mut inst, b) = t1();
        inst.h_v = cvec(&[c(0.2, 0.1), c(-0.3, 0.0)]);
        inst.g_v = c(0.1, 0.2);
        let tab = build_coeff_tables(&inst);
        let anchor = CccpIterate::from_beams(&b, 1.8, 0.4);
        for j in 1..=6 {
            let (_, mu) = tau_mu(j, &tab, &inst, &anchor.w_c, &anchor.w_e).unwrap();
            let lin = linearize_mu(j, &tab, &inst, &anchor, &anchor.w_c, &anchor.w_e);
            assert!((mu - lin).abs() < 1e-12);
        }
        let e = eta_values(anchor.omega, anchor.zeta, &inst, &anchor.w_c, &anchor.w_e);
        assert!((linearize_eta2(&anchor, anchor.omega, anchor.zeta) - e.eta2).abs() < 1e-12);
        let e3 = linearize_eta3(&anchor, &inst, anchor.zeta, &anchor.w_c, &anchor.w_e);
        assert!((e3 - e.eta3).abs() < 1e-12);
    }

    #[test]
    fn iterate_validation() {
        let (inst, b) = t1();
        let ok = CccpIterate::from_beams(&b, 1.0, 0.0);
        assert!(ok.validate(&inst).is_ok());
        let mut bad = ok.clone();
        bad.omega = 0.5;
        assert!(bad.validate(&inst).is_err());
        let mut bad = ok.clone();
        bad.w_c = bad.w_c.scale(10.0);
        assert!(bad.validate(&inst).is_err());
    }
}
