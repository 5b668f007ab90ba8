//! Contrasts deterministic parametric amplification with the probabilistic
//! noise-addition scheme: the parametric amplifier always degrades the
//! phase information, while heralded photon subtraction concentrates it.
//!
//! Run with: cargo run --release --example parametric_comparison

use noiseamp::analytic::{
    gamma_of_noise, mu_coherent, mu_parametric, optimal_noise,
};
use noiseamp::phase::holevo_variance;
use num_complex::Complex64 as C64;

fn main() {
    let alpha = C64::new(0.48, 0.0);
    let v_in = holevo_variance(mu_coherent(alpha));
    println!("input coherent |alpha| = {}, V_C = {v_in:.4}", alpha.re);
    println!();
    println!("deterministic parametric amplifier:");
    for g in [1.2, 1.5, 2.0] {
        let v = holevo_variance(mu_parametric(alpha, g).unwrap());
        println!("  G = {g}: V_C = {v:.4} (Gamma = {:.4})", v / v_in);
    }
    println!();
    println!("probabilistic noise-addition amplifier (T = 0.8, eta = 0.63):");
    for m in 1..=2usize {
        let opt = optimal_noise(alpha, 0.8, 0.63, m).unwrap();
        println!(
            "  M = {m} at n_th* = {:.3}: Gamma = {:.4}",
            opt.n_th,
            gamma_of_noise(alpha, opt.n_th, 0.8, 0.63, m)
        );
    }
}
