use std::f64::consts::{PI, TAU};
use std::sync::{Arc, OnceLock};

use hartree_blowup_core::ground_state::GroundStateBundle;
use hartree_blowup_core::hartree::{RadialConvolver, RieszKernel};
use hartree_blowup_core::law::BlowupLawConstants;
use hartree_blowup_core::modulation::{fit_blowup, fit_exponent, unwrap_phase, ModParams, ProfileFrame};
use hartree_blowup_core::profile::{solve_all, ProfileCoeffs};
use num_complex::Complex64;
use proptest::prelude::*;

fn profile() -> &'static ProfileCoeffs {
    static P: OnceLock<ProfileCoeffs> = OnceLock::new();
    P.get_or_init(|| {
        let b = Arc::new(GroundStateBundle::standard(1).unwrap());
        let c = Arc::new(RadialConvolver::new(b.grid().clone(), RieszKernel::new(0.3, 1).unwrap()).unwrap());
        solve_all(1, b, c).unwrap()
    })
}

/// Deterministic uniform noise in [-1, 1).
fn noise(seed: u64, i: usize) -> f64 {
    let mut x = seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    (x >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flipping_b_conjugates_the_profile(lambda in 1e-4f64..0.15, b in 0.0f64..0.25) {
        let p = profile();
        let plus = p.assemble(lambda, b);
        let minus = p.assemble(lambda, -b);
        for (x, y) in plus.values().iter().zip(minus.values()) {
            prop_assert_eq!(*x, y.conj());
        }
        prop_assert_eq!(p.theta(lambda, b), p.theta(lambda, -b));
    }

    #[test]
    fn phase_shift_multiplies_the_frame(lambda in 0.01f64..0.2, b in -0.2f64..0.2, gamma in 0.0f64..TAU, d in 0.0f64..TAU, r in 0.0f64..1.0) {
        let p = profile();
        let a = ProfileFrame::new(p, ModParams::new(lambda, b, gamma)).unwrap();
        let c = ProfileFrame::new(p, ModParams::new(lambda, b, gamma + d)).unwrap();
        let rot = Complex64::from_polar(1.0, d);
        let x = r * 20.0 * lambda;
        for (u, v) in a.physical(x).iter().zip(c.physical(x)) {
            prop_assert!((u * rot - v).norm() <= 1e-12 * (1.0 + u.norm()));
        }
    }

    #[test]
    fn reduced_flow_holds_for_any_constants(sigma in 0.05f64..0.45, beta in 0.1f64..50.0, s in 1.0f64..1e4) {
        let c = BlowupLawConstants::new(sigma, 1, beta, 1.7).unwrap();
        let (l, b) = c.app_law(s);
        let (l2, b2) = c.app_law(2.0 * s);
        let pl = (l2 / l).ln() / 2f64.ln();
        let pb = (b2 / b).ln() / 2f64.ln();
        prop_assert!((pl / s + b).abs() < 1e-12 * b);
        prop_assert!((pb * b / s + b * b - c.beta * l.powf(c.alpha)).abs() < 1e-12 * b * b);
    }

    #[test]
    fn exponents_and_time_maps_are_consistent(sigma in 0.05f64..0.45, beta in 0.1f64..50.0, t in -1.0f64..-1e-8) {
        let c = BlowupLawConstants::new(sigma, 1, beta, 1.7).unwrap();
        prop_assert!((c.lambda_exponent() - 1.0 / (1.0 + sigma)).abs() < 1e-14);
        prop_assert!((c.b_exponent() - (2.0 * c.lambda_exponent() - 1.0)).abs() < 1e-14);
        let s = c.s_of_t(t).unwrap();
        prop_assert!((c.t_of_s(s).unwrap() / t - 1.0).abs() < 1e-12);
        let (l, b) = c.app_law(s);
        prop_assert!((l / (c.c_lambda * t.abs().powf(c.lambda_exponent())) - 1.0).abs() < 1e-10);
        prop_assert!((b / (c.c_b * t.abs().powf(c.b_exponent())) - 1.0).abs() < 1e-10);
        // ds/dt = 1/lambda^2 along t = -C s^{-1/q}
        let dtds = t.abs() / (c.b_exponent() * s);
        prop_assert!((dtds / (l * l) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unwrap_inverts_wrapping(start in -10.0f64..10.0, steps in proptest::collection::vec(-3.0f64..3.0, 1..60)) {
        let mut x = vec![start];
        for d in steps {
            let last = *x.last().unwrap();
            x.push(last + d);
        }
        let wrapped: Vec<f64> = x.iter().map(|v| v.rem_euclid(TAU)).collect();
        let back = unwrap_phase(&wrapped);
        let offset = back[0] - x[0];
        prop_assert!((offset / TAU - (offset / TAU).round()).abs() < 1e-9);
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b - offset).abs() < 1e-9);
        }
        prop_assert!(back.windows(2).all(|w| (w[1] - w[0]).abs() < PI));
    }

    #[test]
    fn exponent_fit_is_exact_on_power_laws(p in 0.1f64..2.0, c in 0.01f64..100.0) {
        let t: Vec<f64> = (0..20).map(|i| -10f64.powf(-1.0 - 0.4 * i as f64)).collect();
        let y: Vec<f64> = t.iter().map(|v| c * v.abs().powf(p)).collect();
        let f = fit_exponent(&t, &y).unwrap();
        prop_assert!((f.exponent - p).abs() < 1e-12);
        prop_assert!((f.prefactor / c - 1.0).abs() < 1e-10);
        prop_assert!(f.r2 > 1.0 - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Noisy samples of `C (T - t)^p` with unknown `T`.
    #[test]
    fn blowup_fit_recovers_exponent_under_noise(seed in any::<u64>(), p in 0.4f64..1.2, t_star in -1e-3f64..1e-3) {
        let t: Vec<f64> = (0..80).map(|i| t_star - 10f64.powf(-2.0 - 2.0 * i as f64 / 79.0)).collect();
        let y: Vec<f64> = t
            .iter()
            .enumerate()
            .map(|(i, v)| 3.0 * (t_star - v).powf(p) * (1.0 + 1e-3 * noise(seed, i)))
            .collect();
        let f = fit_blowup(&t, &y).unwrap();
        prop_assert!((f.fit.exponent / p - 1.0).abs() < 0.01, "{} vs {p}", f.fit.exponent);
        prop_assert!(f.fit.r2 > 0.9999);
        prop_assert!((f.t_star - t_star).abs() < 1e-5);
    }
}
