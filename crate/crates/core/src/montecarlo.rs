//! Random network realizations and Monte Carlo checks of the outage law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{inner, CVec, C64};
use crate::model::{direct_sinrs, gamma_cb_realized, rb_outage_success, BeamPair, NetworkInstance};

/// Rayleigh-fading profile: every channel entry is `CN(0, var)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelProfile {
    pub m: usize,
    pub var_h_c: f64,
    pub var_h_e: f64,
    pub var_h_b: f64,
    pub var_h_v: f64,
    pub var_g_c: f64,
    pub var_g_e: f64,
    pub var_g_v: f64,
    pub alpha: f64,
    /// Transmit power over noise power, dB.
    pub snr_db: f64,
    pub epsilon: f64,
}

impl Default for ChannelProfile {
    fn default() -> Self {
        Self {
            m: 4,
            var_h_c: 1.0,
            var_h_e: 5f64.powi(-3),
            var_h_b: 1.0,
            var_h_v: 1e-3,
            var_g_c: 1.0,
            var_g_e: 5f64.powi(-3),
            var_g_v: 1e-3,
            alpha: 0.5,
            snr_db: 30.0,
            epsilon: 0.1,
        }
    }
}

impl ChannelProfile {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidArgument("antenna count must be at least 1".into()));
        }
        let vars = [
            self.var_h_c,
            self.var_h_e,
            self.var_h_b,
            self.var_h_v,
            self.var_g_c,
            self.var_g_e,
            self.var_g_v,
        ];
        if vars.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("channel variances must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!("alpha = {} outside [0, 1]", self.alpha)));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidArgument("snr_db must be finite".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon = {} outside (0, 1)", self.epsilon)));
        }
        Ok(())
    }

    pub fn power_linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }
}

/// Circularly-symmetric complex Gaussian with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

pub fn complex_gaussian_vec<R: Rng + ?Sized>(rng: &mut R, m: usize, var: f64) -> CVec {
    CVec::from_fn(m, |_, _| complex_gaussian(rng, var))
}

/// Draws one network with unit noise power; deterministic in `seed`.
pub fn sample_instance(profile: &ChannelProfile, seed: u64) -> Result<NetworkInstance> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = profile.m;
    let h_c = complex_gaussian_vec(&mut rng, m, profile.var_h_c);
    let h_e = complex_gaussian_vec(&mut rng, m, profile.var_h_e);
    let h_b = complex_gaussian_vec(&mut rng, m, profile.var_h_b);
    let h_v = complex_gaussian_vec(&mut rng, m, profile.var_h_v);
    let g_c = complex_gaussian(&mut rng, profile.var_g_c);
    let g_e = complex_gaussian(&mut rng, profile.var_g_e);
    let g_v = complex_gaussian(&mut rng, profile.var_g_v);
    NetworkInstance::new(h_c, h_e, h_b, h_v, g_c, g_e, g_v, profile.alpha, 1.0, profile.power_linear())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloReport {
    pub trials: u64,
    pub successes: u64,
    pub empirical: f64,
    pub closed_form: f64,
    /// `3 sqrt(p (1 - p) / N)` at the closed-form `p`.
    pub half_width: f64,
    pub pass: bool,
}

/// Trials per independent RNG stream. Stream `k` covers trials
/// `k * CHUNK .. (k + 1) * CHUNK` and is seeded from `(seed, k)` only, so
/// the count does not depend on evaluation order or thread count.
const CHUNK: u64 = 4096;

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn chunked_count<F>(trials: u64, seed: u64, hit: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k);
            let len = CHUNK.min(trials - k * CHUNK);
            (0..len).filter(|_| hit(&mut rng)).count() as u64
        })
        .sum()
}

/// Empirical success rate of the BD link at secrecy rate `r_b` over
/// standard complex Gaussian BS symbols, against the closed form.
pub fn estimate_outage(inst: &NetworkInstance, b: &BeamPair, r_b: f64, trials: u64, seed: u64) -> Result<MonteCarloReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let closed_form = rb_outage_success(inst, b, r_b)?;
    let gamma_vb = direct_sinrs(inst, b)?.gamma_vb;
    let threshold = r_b.exp2() * (1.0 + gamma_vb);
    // Validate dimensions once; the per-trial call cannot fail afterwards.
    gamma_cb_realized(inst, b, C64::new(0.0, 0.0), C64::new(0.0, 0.0))?;
    let successes = chunked_count(trials, seed, |rng| {
        let s_c = complex_gaussian(rng, 1.0);
        let s_e = complex_gaussian(rng, 1.0);
        let g = gamma_cb_realized(inst, b, s_c, s_e).unwrap_or(0.0);
        1.0 + g >= threshold
    });
    let empirical = successes as f64 / trials as f64;
    let half_width = 3.0 * (closed_form * (1.0 - closed_form) / trials as f64).sqrt();
    Ok(MonteCarloReport {
        trials,
        successes,
        empirical,
        closed_form,
        half_width,
        pass: (empirical - closed_form).abs() <= half_width,
    })
}

/// Samples of `|h_b^H (w_c s_c + w_e s_e)|^2`, ordered by trial.
pub fn quadratic_form_samples(inst: &NetworkInstance, b: &BeamPair, trials: u64, seed: u64) -> Vec<f64> {
    let a = inner(&inst.h_b, &b.w_c);
    let e = inner(&inst.h_b, &b.w_e);
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = stream(seed, k);
            let len = CHUNK.min(trials - k * CHUNK);
            (0..len)
                .map(|_| {
                    let s_c = complex_gaussian(&mut rng, 1.0);
                    let s_e = complex_gaussian(&mut rng, 1.0);
                    (a * s_c + e * s_e).norm_sqr()
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Kolmogorov-Smirnov distance between `samples` and an exponential law
/// with the given mean.
pub fn ks_exponential(samples: &[f64], mean: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-x / mean).exp();
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (cdf - lo).abs().max((hi - cdf).abs())
        })
        .fold(0.0, f64::max)
}
