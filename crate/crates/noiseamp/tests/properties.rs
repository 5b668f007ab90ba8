//! Randomized property tests over the state factory and the heralded
//! amplifier invariants.

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use noiseamp::analytic::{success_probability, AmplifierParams};
use noiseamp::fock::{
    choose_cutoff, coherent_state, condition_on_click, displaced_thermal, CutoffPolicy,
};
use noiseamp::phase::mu_canonical;

fn params() -> impl Strategy<Value = (f64, f64, f64, f64, f64, usize)> {
    (
        0.05f64..1.2,     // |alpha|
        0.0f64..PI_2,     // arg(alpha)
        0.0f64..1.5,      // n_th
        0.5f64..0.99,     // T
        0.3f64..1.0,      // eta
        0usize..4,        // M
    )
}

const PI_2: f64 = std::f64::consts::TAU;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn displaced_thermal_states_are_valid_with_correct_energy(
        (r, phi, n_th, _, _, _) in params()
    ) {
        let alpha = C64::from_polar(r, phi);
        let dim = choose_cutoff(alpha, n_th, &CutoffPolicy::default()).unwrap() + 1;
        let rho = displaced_thermal(alpha, n_th, dim).unwrap();
        rho.validate().unwrap();
        let energy = rho.mean_photon();
        prop_assert!(
            (energy - (r * r + n_th)).abs() < 1e-7,
            "mean photon {} vs {}", energy, r * r + n_th
        );
    }

    #[test]
    fn heralded_states_are_valid_and_ps_in_unit_interval(
        (r, phi, n_th, t, eta, m) in params()
    ) {
        let alpha = C64::from_polar(r, phi);
        let dim = choose_cutoff(alpha, n_th, &CutoffPolicy::default()).unwrap() + 1;
        let rho = displaced_thermal(alpha, n_th, dim).unwrap();
        match condition_on_click(&rho, t, eta, m) {
            Ok(h) => {
                h.state.validate().unwrap();
                prop_assert!(h.success_prob > 0.0 && h.success_prob <= 1.0 + 1e-12);
            }
            Err(noiseamp::Error::HeraldImpossible { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(format!("unexpected error {e}"))),
        }
    }

    #[test]
    fn mu_magnitude_is_phase_invariant((r, phi, n_th, _, _, _) in params()) {
        let dim = choose_cutoff(C64::new(r, 0.0), n_th, &CutoffPolicy::default()).unwrap() + 1;
        let base = displaced_thermal(C64::new(r, 0.0), n_th, dim).unwrap();
        let rotated = displaced_thermal(C64::from_polar(r, phi), n_th, dim).unwrap();
        let m0 = mu_canonical(&base).norm();
        let m1 = mu_canonical(&rotated).norm();
        prop_assert!((m0 - m1).abs() < 1e-10, "|mu| {} vs {}", m0, m1);
    }

    #[test]
    fn success_probability_decreases_with_subtraction_order(
        (r, phi, n_th, t, eta, _) in params()
    ) {
        let alpha = C64::from_polar(r, phi);
        let mut prev = 1.0f64;
        for m in 0..=4usize {
            let p = AmplifierParams::new(alpha, n_th, t, eta, m);
            let ps = success_probability(&p).unwrap();
            prop_assert!(ps <= prev + 1e-12, "P_S not decreasing at M={}", m);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&ps));
            prev = ps;
        }
    }

    #[test]
    fn coherent_states_are_pure(r in 0.05f64..1.5, phi in 0.0f64..PI_2) {
        let alpha = C64::from_polar(r, phi);
        let dim = choose_cutoff(alpha, 0.0, &CutoffPolicy::default()).unwrap() + 1;
        let rho = coherent_state(alpha, dim).unwrap();
        rho.validate().unwrap();
        let purity = (rho.matrix() * rho.matrix()).diagonal().sum().re;
        prop_assert!((purity - 1.0).abs() < 1e-8, "purity {}", purity);
    }
}
