//! Prints the canonical phase distribution of the input coherent state, the
//! noise-added state and the heralded states for M = 1..4, showing how the
//! distribution narrows as more photons are subtracted.
//!
//! Run with: cargo run --release --example phase_distributions

use noiseamp::analytic::AmplifierParams;
use noiseamp::fock::{
    choose_cutoff, coherent_state, displaced_thermal_with_tol, CutoffPolicy,
};
use noiseamp::phase::phase_distribution;
use noiseamp::pipeline::amplify_exact;
use num_complex::Complex64 as C64;

fn fwhm(thetas: &[f64], p: &[f64]) -> f64 {
    let (imax, pmax) = p
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let half = pmax / 2.0;
    let mut lo = thetas[0];
    let mut hi = *thetas.last().unwrap();
    for i in (0..imax).rev() {
        if p[i] < half {
            lo = thetas[i];
            break;
        }
    }
    for i in imax..p.len() {
        if p[i] < half {
            hi = thetas[i];
            break;
        }
    }
    hi - lo
}

fn main() {
    let alpha = C64::new(0.186f64.sqrt(), 0.0);
    let n_th = 0.15;
    let policy = CutoffPolicy::default();
    let thetas: Vec<f64> = (0..2048)
        .map(|i| -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / 2048.0)
        .collect();
    let dim = choose_cutoff(alpha, n_th, &policy).unwrap() + 1;

    let report = |label: &str, p: Vec<f64>| {
        let peak = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("{label:>10}: peak {peak:.4}, FWHM {:.4} rad", fwhm(&thetas, &p));
    };

    let input = coherent_state(alpha, dim).unwrap();
    report("input", phase_distribution(&input, &thetas));
    let noisy = displaced_thermal_with_tol(alpha, n_th, dim, policy.tail_tol).unwrap();
    report("noisy", phase_distribution(&noisy, &thetas));
    for m in 1..=4usize {
        let p = AmplifierParams::new(alpha, n_th, 0.8, 0.63, m);
        let run = amplify_exact(&p, &policy).unwrap();
        report(&format!("M = {m}"), phase_distribution(&run.state, &thetas));
    }
}
