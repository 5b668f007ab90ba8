//! Sweeps the added thermal noise for M = 1..4 subtracted photons and
//! prints the normalized phase variance Γ, the gain and the success
//! probability, then locates the optimal noise level per M.
//!
//! Run with: cargo run --release --example noise_sweep

use noiseamp::analytic::{
    mean_amplitude_amplified, mu_amplified, mu_coherent, optimal_noise, success_probability,
    AmplifierParams,
};
use noiseamp::phase::holevo_variance;
use num_complex::Complex64 as C64;

fn main() {
    let alpha = C64::new(0.48, 0.0);
    let (t, eta) = (0.8, 0.63);
    let v_in = holevo_variance(mu_coherent(alpha));
    println!("input coherent state: |alpha| = {}, V_C = {v_in:.4}", alpha.re);
    println!();
    println!("{:>6} {:>4} {:>10} {:>8} {:>12}", "n_th", "M", "Gamma", "gain", "P_S");
    for m in 1..=4usize {
        for i in 1..=10 {
            let n_th = 0.1 * i as f64;
            let p = AmplifierParams::new(alpha, n_th, t, eta, m);
            let mu = mu_amplified(&p).expect("herald reachable on this grid");
            let gamma = holevo_variance(mu) / v_in;
            let gain = mean_amplitude_amplified(&p).unwrap().norm() / alpha.norm();
            let ps = success_probability(&p).unwrap();
            println!("{n_th:>6.2} {m:>4} {gamma:>10.4} {gain:>8.4} {ps:>12.3e}");
        }
        println!();
    }
    println!("optimal added noise per subtraction order:");
    for m in 1..=4usize {
        let opt = optimal_noise(alpha, t, eta, m).unwrap();
        println!(
            "  M = {m}: n_th* = {:.4}, Gamma* = {:.4} (improved: {})",
            opt.n_th, opt.gamma, opt.improved
        );
    }
}
