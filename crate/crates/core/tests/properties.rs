//! Randomized identities of the model and the DC split.

use bdnoma::dc::{
    build_coeff_tables, eta_values, linearize_eta2, linearize_eta3, linearize_mu, rates_from_logs, tau_mu, CccpIterate,
};
use bdnoma::linalg::{gain, outer};
use bdnoma::model::{max_outage_rate, rb_outage_success, secrecy_rates};
use bdnoma::montecarlo::{complex_gaussian_vec, sample_instance, ChannelProfile};
use bdnoma::{BeamPair, NetworkInstance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(seed: u64, m: usize, alpha: f64) -> (NetworkInstance, BeamPair) {
    let profile = ChannelProfile { m, alpha, ..ChannelProfile::default() };
    let inst = sample_instance(&profile, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(!seed);
    let mut b = BeamPair::new(complex_gaussian_vec(&mut rng, m, 1.0), complex_gaussian_vec(&mut rng, m, 1.0));
    let scale = (inst.power / b.power()).sqrt();
    b.w_c *= bdnoma::linalg::c(scale, 0.0);
    b.w_e *= bdnoma::linalg::c(scale, 0.0);
    (inst, b)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn log_split_reproduces_rates(seed in any::<u64>(), m in 1usize..6, alpha in 0.05f64..1.0) {
        let (inst, b) = setup(seed, m, alpha);
        let tab = build_coeff_tables(&inst);
        let logs = rates_from_logs(&tab, &inst, &outer(&b.w_c), &outer(&b.w_e)).unwrap();
        let direct = secrecy_rates(&inst, &b).unwrap();
        prop_assert!(close(logs[0], direct.r_c, 1e-9), "{} vs {}", logs[0], direct.r_c);
        prop_assert!(close(logs[1], direct.r_e, 1e-9), "{} vs {}", logs[1], direct.r_e);
        prop_assert!(close(logs[2], direct.r_ce, 1e-9), "{} vs {}", logs[2], direct.r_ce);
    }

    #[test]
    fn mu_tangent_bounds_from_above(seed in any::<u64>(), other in any::<u64>(), j in 1usize..7) {
        let (inst, b) = setup(seed, 3, 0.5);
        let (_, b2) = setup(other, 3, 0.5);
        let tab = build_coeff_tables(&inst);
        let anchor = CccpIterate::from_beams(&b, 1.0, 0.0);
        let (w_c, w_e) = (outer(&b2.w_c), outer(&b2.w_e));
        let (_, mu) = tau_mu(j, &tab, &inst, &w_c, &w_e).unwrap();
        let lin = linearize_mu(j, &tab, &inst, &anchor, &w_c, &w_e);
        prop_assert!(lin >= mu - 1e-9 * (1.0 + mu.abs()));
        let (_, mu0) = tau_mu(j, &tab, &inst, &anchor.w_c, &anchor.w_e).unwrap();
        let lin0 = linearize_mu(j, &tab, &inst, &anchor, &anchor.w_c, &anchor.w_e);
        prop_assert!(close(lin0, mu0, 1e-12));
    }

    #[test]
    fn eta_differences_are_the_bilinear_terms(
        seed in any::<u64>(),
        omega in 1.0f64..100.0,
        zeta in 0.0f64..100.0,
    ) {
        let (inst, b) = setup(seed, 4, 0.5);
        let (w_c, w_e) = (outer(&b.w_c), outer(&b.w_e));
        let e = eta_values(omega, zeta, &inst, &w_c, &w_e);
        let leak = inst.sigma2 + gain(&inst.h_v, &b.w_c) + gain(&inst.h_v, &b.w_e);
        prop_assert!(close(e.eta1 - e.eta2, omega * (zeta + 1.0), 1e-9));
        prop_assert!(close(e.eta3 - e.eta4, zeta * leak, 1e-9));
    }

    #[test]
    fn eta_tangents_underestimate(
        seed in any::<u64>(),
        other in any::<u64>(),
        omega in 1.0f64..50.0,
        zeta in 0.0f64..50.0,
        omega0 in 1.0f64..50.0,
        zeta0 in 0.0f64..50.0,
    ) {
        let (inst, b) = setup(seed, 2, 0.5);
        let (_, b2) = setup(other, 2, 0.5);
        let anchor = CccpIterate::from_beams(&b, omega0, zeta0);
        let (w_c, w_e) = (outer(&b2.w_c), outer(&b2.w_e));
        let e = eta_values(omega, zeta, &inst, &w_c, &w_e);
        prop_assert!(linearize_eta2(&anchor, omega, zeta) <= e.eta2 * (1.0 + 1e-12));
        prop_assert!(linearize_eta3(&anchor, &inst, zeta, &w_c, &w_e) <= e.eta3 * (1.0 + 1e-12));
    }

    #[test]
    fn max_outage_rate_sits_on_the_target(seed in any::<u64>(), eps in 0.01f64..0.5) {
        let (inst, b) = setup(seed, 4, 0.5);
        if let Some(r) = max_outage_rate(&inst, &b, eps).unwrap() {
            let p = rb_outage_success(&inst, &b, r).unwrap();
            if r > 0.0 {
                prop_assert!((p - (1.0 - eps)).abs() < 1e-9, "success {p} at eps {eps}");
            } else {
                prop_assert!(p >= 1.0 - eps - 1e-9);
            }
            let above = rb_outage_success(&inst, &b, r + 1e-3).unwrap();
            prop_assert!(above < 1.0 - eps);
        } else {
            prop_assert!(rb_outage_success(&inst, &b, 0.0).unwrap() < 1.0 - eps);
        }
    }

    #[test]
    fn same_seed_same_instance(seed in any::<u64>()) {
        let p = ChannelProfile::default();
        prop_assert_eq!(sample_instance(&p, seed).unwrap(), sample_instance(&p, seed).unwrap());
    }
}
