//! Network data and the exact link-level expressions: SINRs after SIC,
//! secrecy rates, and the closed-form success probability of the
//! backscatter link's outage constraint.
//!
//! These are the ground truth every optimizer output is verified against.

use crate::error::{Error, Result};
use crate::linalg::{gain, inner, norm_sqr, CVec, C64};

/// Problem data of one downlink network realization.
///
/// All powers are linear. `sigma2` is the common receiver noise power and
/// `power` the BS transmit budget.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance {
    pub h_c: CVec,
    pub h_e: CVec,
    pub h_b: CVec,
    pub h_v: CVec,
    pub g_c: C64,
    pub g_e: C64,
    pub g_v: C64,
    pub alpha: f64,
    pub sigma2: f64,
    pub power: f64,
}

impl NetworkInstance {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        h_c: CVec,
        h_e: CVec,
        h_b: CVec,
        h_v: CVec,
        g_c: C64,
        g_e: C64,
        g_v: C64,
        alpha: f64,
        sigma2: f64,
        power: f64,
    ) -> Result<Self> {
        let inst = Self { h_c, h_e, h_b, h_v, g_c, g_e, g_v, alpha, sigma2, power };
        inst.validate()?;
        Ok(inst)
    }

    pub fn m(&self) -> usize {
        self.h_c.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.h_c.len();
        if m == 0 {
            return Err(Error::Dimension("antenna count must be at least 1".into()));
        }
        for (name, v) in [("h_e", &self.h_e), ("h_b", &self.h_b), ("h_v", &self.h_v)] {
            if v.len() != m {
                return Err(Error::Dimension(format!("{name} has length {} but h_c has {m}", v.len())));
            }
        }
        let finite = [&self.h_c, &self.h_e, &self.h_b, &self.h_v]
            .iter()
            .all(|v| v.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
            && [self.g_c, self.g_e, self.g_v].iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("channel entries must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!("alpha = {} outside [0, 1]", self.alpha)));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma2 = {} must be positive", self.sigma2)));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::InvalidArgument(format!("power = {} must be positive", self.power)));
        }
        Ok(())
    }

    /// `alpha |g_c|^2`
    pub fn bd_gain_c(&self) -> f64 {
        self.alpha * self.g_c.norm_sqr()
    }

    /// `alpha |g_e|^2`
    pub fn bd_gain_e(&self) -> f64 {
        self.alpha * self.g_e.norm_sqr()
    }

    /// `alpha |g_v|^2`
    pub fn bd_gain_v(&self) -> f64 {
        self.alpha * self.g_v.norm_sqr()
    }

    /// True when no backscatter power can ever reach the central user, so
    /// the only achievable outage rate is zero.
    pub fn bd_link_dead(&self) -> bool {
        self.bd_gain_c() == 0.0 || norm_sqr(&self.h_b) == 0.0
    }
}

/// Secrecy-rate floors (bits/s/Hz) and the outage target of the
/// backscatter link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecrecyTargets {
    pub r_c: f64,
    pub r_e: f64,
    pub epsilon: f64,
}

impl SecrecyTargets {
    pub fn new(r_c: f64, r_e: f64, epsilon: f64) -> Result<Self> {
        let t = Self { r_c, r_e, epsilon };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_c >= 0.0 && self.r_c.is_finite()) || !(self.r_e >= 0.0 && self.r_e.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rate targets must be finite and nonnegative (r_c = {}, r_e = {})",
                self.r_c, self.r_e
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon = {} outside (0, 1)", self.epsilon)));
        }
        Ok(())
    }

    /// `-ln(1 - epsilon)`
    pub fn rho(&self) -> f64 {
        -(-self.epsilon).ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamPair {
    pub w_c: CVec,
    pub w_e: CVec,
}

impl BeamPair {
    pub fn new(w_c: CVec, w_e: CVec) -> Self {
        Self { w_c, w_e }
    }

    pub fn zeros(m: usize) -> Self {
        Self { w_c: CVec::zeros(m), w_e: CVec::zeros(m) }
    }

    pub fn power(&self) -> f64 {
        norm_sqr(&self.w_c) + norm_sqr(&self.w_e)
    }

    pub fn within_budget(&self, inst: &NetworkInstance) -> bool {
        self.power() <= inst.power * (1.0 + 1e-6)
    }
}

fn check_dims(inst: &NetworkInstance, b: &BeamPair) -> Result<()> {
    let m = inst.m();
    if b.w_c.len() != m || b.w_e.len() != m {
        return Err(Error::Dimension(format!(
            "beam lengths ({}, {}) do not match antenna count {m}",
            b.w_c.len(),
            b.w_e.len()
        )));
    }
    Ok(())
}

/// `f = |h_b^H w_c|^2 + |h_b^H w_e|^2`, the power incident on the BD.
pub fn backscatter_gain(inst: &NetworkInstance, b: &BeamPair) -> Result<f64> {
    check_dims(inst, b)?;
    Ok(gain(&inst.h_b, &b.w_c) + gain(&inst.h_b, &b.w_e))
}

/// The six deterministic SINRs of the SIC decoding chain and the
/// eavesdropper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinrs {
    /// `s_e` at the central user (first SIC stage).
    pub gamma_ce: f64,
    /// `s_c` at the central user after cancelling `s_e`.
    pub gamma_cc: f64,
    /// `s_c` at the eavesdropper.
    pub gamma_vc: f64,
    /// BD symbol at the eavesdropper.
    pub gamma_vb: f64,
    /// `s_e` at the cell-edge user.
    pub gamma_ee: f64,
    /// `s_e` at the eavesdropper.
    pub gamma_ve: f64,
}

pub fn direct_sinrs(inst: &NetworkInstance, b: &BeamPair) -> Result<Sinrs> {
    let f = backscatter_gain(inst, b)?;
    let s2 = inst.sigma2;
    let (bc, be, bv) = (inst.bd_gain_c() * f, inst.bd_gain_e() * f, inst.bd_gain_v() * f);

    let cc = gain(&inst.h_c, &b.w_c);
    let ce = gain(&inst.h_c, &b.w_e);
    let ec = gain(&inst.h_e, &b.w_c);
    let ee = gain(&inst.h_e, &b.w_e);
    let vc = gain(&inst.h_v, &b.w_c);
    let ve = gain(&inst.h_v, &b.w_e);

    Ok(Sinrs {
        gamma_ce: ce / (s2 + cc + bc),
        gamma_cc: cc / (s2 + bc),
        gamma_vc: vc / (s2 + ve + bv),
        gamma_vb: bv / (s2 + vc + ve),
        gamma_ee: ee / (s2 + ec + be),
        gamma_ve: ve / (s2 + vc + bv),
    })
}

/// SINR of the BD symbol at the central user for one realization of the
/// BS symbols; the BD symbol itself is taken unit-modulus.
pub fn gamma_cb_realized(inst: &NetworkInstance, b: &BeamPair, s_c: C64, s_e: C64) -> Result<f64> {
    check_dims(inst, b)?;
    let y = inner(&inst.h_b, &b.w_c) * s_c + inner(&inst.h_b, &b.w_e) * s_e;
    Ok(inst.bd_gain_c() * y.norm_sqr() / inst.sigma2)
}

/// Secrecy rates in bits/s/Hz. Not clipped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecrecyRates {
    pub r_c: f64,
    pub r_e: f64,
    pub r_ce: f64,
}

pub fn secrecy_rates(inst: &NetworkInstance, b: &BeamPair) -> Result<SecrecyRates> {
    let g = direct_sinrs(inst, b)?;
    let diff = |a: f64, e: f64| (a.ln_1p() - e.ln_1p()) / std::f64::consts::LN_2;
    Ok(SecrecyRates {
        r_c: diff(g.gamma_cc, g.gamma_vc),
        r_e: diff(g.gamma_ee, g.gamma_ve),
        r_ce: diff(g.gamma_ce, g.gamma_ve),
    })
}

/// Closed-form probability that the BD link sustains secrecy rate `r_b`,
/// i.e. `Pr(1 + gamma_cb >= 2^r_b (1 + gamma_vb))` over `(s_c, s_e)`
/// standard complex Gaussian.
pub fn rb_outage_success(inst: &NetworkInstance, b: &BeamPair, r_b: f64) -> Result<f64> {
    if !(r_b >= 0.0) {
        return Err(Error::InvalidArgument(format!("r_b = {r_b} must be nonnegative")));
    }
    let zeta_bar = direct_sinrs(inst, b)?.gamma_vb;
    let lambda = backscatter_gain(inst, b)?;
    let omega = r_b.exp2();
    let excess = omega * (zeta_bar + 1.0) - 1.0;
    let a = inst.bd_gain_c();
    if a == 0.0 {
        return Ok(if excess > 0.0 { 0.0 } else { 1.0 });
    }
    let xi = inst.sigma2 * excess / a;
    if xi <= 0.0 {
        return Ok(1.0);
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    Ok((-xi / lambda).exp())
}

/// Largest `r_b >= 0` whose closed-form success probability is at least
/// `1 - epsilon`, or `None` when even `r_b = 0` fails.
pub fn max_outage_rate(inst: &NetworkInstance, b: &BeamPair, epsilon: f64) -> Result<Option<f64>> {
    let zeta_bar = direct_sinrs(inst, b)?.gamma_vb;
    let lambda = backscatter_gain(inst, b)?;
    let rho = -(-epsilon).ln_1p();
    let omega_max = (1.0 + rho * inst.bd_gain_c() * lambda / inst.sigma2) / (1.0 + zeta_bar);
    if omega_max >= 1.0 {
        Ok(Some(omega_max.log2()))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::linalg::{c, cvec};

    /// Two-antenna toy network with a silent eavesdropper.
    pub fn t1() -> (NetworkInstance, BeamPair) {
        let inst = NetworkInstance::new(
            cvec(&[c(1.0, 0.0), c(0.0, 0.0)]),
            cvec(&[c(0.0, 0.0), c(1.0, 0.0)]),
            cvec(&[c(1.0, 0.0), c(0.0, 0.0)]),
            cvec(&[c(0.0, 0.0), c(0.0, 0.0)]),
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
            0.5,
            1.0,
            10.0,
        )
        .unwrap();
        let b = BeamPair::new(cvec(&[c(2.0, 0.0), c(0.0, 0.0)]), cvec(&[c(0.0, 0.0), c(1.0, 0.0)]));
        (inst, b)
    }
}
