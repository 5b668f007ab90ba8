//! Three-way comparison of the closed-form expressions, the truncated-Fock
//! oracle and the P-function Monte Carlo sampler at one operating point.
//!
//! Run with: cargo run --release --example monte_carlo_check

use noiseamp::analytic::{mu_amplified, success_probability, AmplifierParams};
use noiseamp::fock::CutoffPolicy;
use noiseamp::pipeline::{amplify_exact, mc_heralded, MCConfig};
use num_complex::Complex64 as C64;

fn main() {
    let p = AmplifierParams::new(C64::new(0.48, 0.0), 0.2, 0.8, 0.63, 2);
    println!("params: alpha = 0.48, n_th = 0.2, T = 0.8, eta = 0.63, M = 2");

    let ps_a = success_probability(&p).unwrap();
    let mu_a = mu_amplified(&p).unwrap();

    let policy = CutoffPolicy { tail_tol: 1e-13, hard_max: 512 };
    let exact = amplify_exact(&p, &policy).unwrap();

    let mc = mc_heralded(&p, &MCConfig { n_samples: 1_000_000, seed: 11 }).unwrap();

    println!();
    println!("{:>12} {:>16} {:>16}", "route", "P_S", "|mu|");
    println!("{:>12} {:>16.10e} {:>16.10}", "analytic", ps_a, mu_a.norm());
    println!(
        "{:>12} {:>16.10e} {:>16.10}",
        "Fock oracle", exact.success_prob, exact.stats.mu().norm()
    );
    println!(
        "{:>12} {:>16.10e} {:>16.10}",
        "Monte Carlo", mc.success_prob.mean_re, mc.mu.mean().norm()
    );
    println!();
    println!(
        "MC standard errors: P_S ± {:.2e}, |mu| ± {:.2e}",
        mc.success_prob.std_error, mc.mu.std_error
    );
    println!(
        "analytic vs oracle relative gaps: P_S {:.2e}, |mu| {:.2e}",
        (ps_a - exact.success_prob).abs() / exact.success_prob,
        (mu_a.norm() - exact.stats.mu().norm()).abs() / exact.stats.mu().norm()
    );
}
