//! Phase figures of merit: canonical μ, Holevo variance, the canonical
//! phase distribution, gain and normalized variance Γ.
//!
//! The canonical measurement projects onto idealized phase states; its μ is
//! the sum of the first subdiagonal of the density matrix, chosen so that
//! μ ∝ α for coherent states.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analytic::mu_coherent;
use crate::error::{Error, Result};
use crate::fock::FockDensity;

/// Figure-of-merit bundle for one amplified state.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhaseStats {
    pub mu_re: f64,
    pub mu_im: f64,
    /// Holevo/canonical phase variance |μ|⁻² − 1.
    pub v_canonical: f64,
    /// |⟨â⟩| of the output over |α| of the reference input.
    pub gain: f64,
    /// Output canonical variance over the input coherent state's.
    pub gamma: f64,
}

impl PhaseStats {
    pub fn mu(&self) -> C64 {
        C64::new(self.mu_re, self.mu_im)
    }
}

/// Canonical μ = Tr[Σ_n |n⟩⟨n+1| ρ] = Σ_n ⟨n+1|ρ|n⟩.
pub fn mu_canonical(rho: &FockDensity) -> C64 {
    let d = rho.dim();
    (0..d.saturating_sub(1)).map(|n| rho.element(n + 1, n)).sum()
}

/// Holevo phase variance V = |μ|⁻² − 1; +∞ for phase-symmetric states.
pub fn holevo_variance(mu: C64) -> f64 {
    let m2 = mu.norm_sqr();
    if m2 == 0.0 {
        f64::INFINITY
    } else {
        1.0 / m2 - 1.0
    }
}

/// Canonical phase distribution P(θ) = (1/2π) Σ_{m,n} e^{iθ(m−n)} ⟨n|ρ|m⟩
/// evaluated on the caller's grid.
pub fn phase_distribution(rho: &FockDensity, thetas: &[f64]) -> Vec<f64> {
    let d = rho.dim();
    // collapse to off-diagonal sums t_k = Σ_n ⟨n|ρ|n+k⟩
    let mut t = Vec::with_capacity(d);
    for k in 0..d {
        let mut acc = C64::new(0.0, 0.0);
        for n in 0..d - k {
            acc += rho.element(n, n + k);
        }
        t.push(acc);
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI);
    thetas
        .iter()
        .map(|&theta| {
            let mut acc = t[0].re;
            for (k, tk) in t.iter().enumerate().skip(1) {
                let ph = C64::from_polar(1.0, theta * k as f64);
                acc += 2.0 * (ph * tk).re;
            }
            acc * norm
        })
        .collect()
}

/// Gain and normalized phase variance of `rho_out` relative to the input
/// coherent state of amplitude `alpha_in`.
pub fn gain_and_gamma(rho_out: &FockDensity, alpha_in: C64) -> Result<PhaseStats> {
    if alpha_in.norm() == 0.0 {
        return Err(Error::InvalidParam(
            "gain and gamma are undefined for a vacuum reference".into(),
        ));
    }
    let mu = mu_canonical(rho_out);
    let v = holevo_variance(mu);
    let v_ref = holevo_variance(mu_coherent(alpha_in));
    let gain = rho_out.mean_amplitude().norm() / alpha_in.norm();
    Ok(PhaseStats {
        mu_re: mu.re,
        mu_im: mu.im,
        v_canonical: v,
        gain,
        gamma: v / v_ref,
    })
}
