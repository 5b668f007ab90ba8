//! Homodyne measurement simulation and iterative maximum-likelihood state
//! reconstruction with detector-efficiency correction.
//!
//! Quadrature convention: Var_vac = 1/4, so x_θ = (â e^{−iθ} + â† e^{iθ})/2
//! and ⟨n|x,θ⟩ = e^{inθ} ψ_n(x) with ψ_n the harmonic-oscillator position
//! wavefunction rescaled to that variance.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{pure_loss, tap_kraus, FockDensity};

/// One homodyne sample: local-oscillator phase and quadrature outcome.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub theta: f64,
    pub x: f64,
}

/// Reconstruction settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TomoConfig {
    pub dim: usize,
    pub eta_hd: f64,
    pub n_phase_bins: usize,
    pub n_x_bins: usize,
    pub x_range: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for TomoConfig {
    fn default() -> Self {
        Self {
            dim: 12,
            eta_hd: 1.0,
            n_phase_bins: 12,
            n_x_bins: 64,
            x_range: 3.0,
            max_iters: 2000,
            tol: 1e-8,
        }
    }
}

impl TomoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidParam("dim must be >= 2".into()));
        }
        if self.n_phase_bins < 4 || self.n_x_bins < 4 {
            return Err(Error::InvalidParam("need at least 4 bins per axis".into()));
        }
        if !(self.eta_hd > 0.0 && self.eta_hd <= 1.0) {
            return Err(Error::InvalidParam("eta_hd outside (0,1]".into()));
        }
        if self.tol <= 0.0 {
            return Err(Error::InvalidParam("tol must be > 0".into()));
        }
        Ok(())
    }
}

/// ψ_n(x) for n = 0..dim−1 in the Var_vac = 1/4 convention:
/// ψ_n(x) = 2^{1/4} φ_n(√2 x) with φ_n the standard oscillator eigenstate.
pub fn quadrature_wavefunctions(dim: usize, x: f64) -> Vec<f64> {
    let xi = std::f64::consts::SQRT_2 * x;
    let mut psi = Vec::with_capacity(dim);
    let norm0 = 2f64.powf(0.25) * std::f64::consts::PI.powf(-0.25) * (-xi * xi / 2.0).exp();
    psi.push(norm0);
    if dim > 1 {
        psi.push(std::f64::consts::SQRT_2 * xi * norm0);
    }
    for n in 1..dim.saturating_sub(1) {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * xi * psi[n]
            - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
        psi.push(next);
    }
    psi
}

const SAMPLER_GRID: usize = 4096;

/// Draws `n` homodyne records from `rho` observed through a detector of
/// efficiency `eta_hd`. Phases are uniform on [0, π); quadrature values are
/// drawn by inverse-CDF on a 4096-point tabulation of the rotated marginal.
pub fn sample_homodyne(
    rho: &FockDensity,
    n: usize,
    eta_hd: f64,
    seed: u64,
) -> Result<Vec<QuadratureRecord>> {
    let rho_loss = if eta_hd < 1.0 { pure_loss(rho, eta_hd)? } else { rho.clone() };
    let dim = rho_loss.dim();
    // spectral decomposition: sample a pure component, then its marginal
    let herm = (rho_loss.matrix().clone() + rho_loss.matrix().adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(herm);
    let mut comps: Vec<(f64, Vec<C64>)> = Vec::new();
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 1e-12 {
            comps.push((lam, eig.eigenvectors.column(i).iter().copied().collect()));
        }
    }
    let total: f64 = comps.iter().map(|c| c.0).sum();
    for c in comps.iter_mut() {
        c.0 /= total;
    }
    let x_max = rho_loss.mean_amplitude().norm()
        + 4.0 * ((2.0 * rho_loss.mean_photon() + 1.0) / 4.0).sqrt()
        + 0.5;
    let xs: Vec<f64> = (0..SAMPLER_GRID)
        .map(|j| -x_max + 2.0 * x_max * j as f64 / (SAMPLER_GRID - 1) as f64)
        .collect();
    let dx = xs[1] - xs[0];
    // precompute wavefunction table psi[j][n]
    let psi: Vec<Vec<f64>> = xs.iter().map(|&x| quadrature_wavefunctions(dim, x)).collect();

    let shard = 4096usize;
    let shards = n.div_ceil(shard);
    let records: Vec<Vec<QuadratureRecord>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64 + 1);
            let count = shard.min(n - s * shard);
            let mut out = Vec::with_capacity(count);
            let mut pdf = vec![0.0f64; SAMPLER_GRID];
            for _ in 0..count {
                let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
                // pick a pure component
                let mut u: f64 = rng.gen();
                let mut comp = &comps[0];
                for c in &comps {
                    if u <= c.0 {
                        comp = c;
                        break;
                    }
                    u -= c.0;
                }
                let coeffs: Vec<C64> = comp
                    .1
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * C64::from_polar(1.0, theta * k as f64))
                    .collect();
                for (j, row) in psi.iter().enumerate() {
                    let mut amp = C64::new(0.0, 0.0);
                    for (k, &p) in row.iter().enumerate() {
                        amp += coeffs[k] * p;
                    }
                    pdf[j] = amp.norm_sqr();
                }
                // inverse CDF with linear interpolation
                let total: f64 = pdf.iter().sum();
                let target: f64 = rng.gen::<f64>() * total;
                let mut cum = 0.0f64;
                let mut x = xs[SAMPLER_GRID - 1];
                for (j, &p) in pdf.iter().enumerate() {
                    if cum + p >= target {
                        let frac = if p > 0.0 { (target - cum) / p } else { 0.5 };
                        x = xs[j] - 0.5 * dx + frac * dx;
                        break;
                    }
                    cum += p;
                }
                out.push(QuadratureRecord { theta, x });
            }
            out
        })
        .collect();
    Ok(records.into_iter().flatten().collect())
}

/// Diagnostics from a MaxLik run.
pub struct MaxLikResult {
    pub state: FockDensity,
    pub iterations: usize,
    pub final_log_likelihood: f64,
    /// Number of bins regularized because the model probability vanished
    /// while data landed there.
    pub regularized_bins: usize,
}

/// Iterative RρR maximum-likelihood reconstruction from binned quadrature
/// records. Detector inefficiency is folded into the POVM (loss-smeared
/// projectors), so the returned state estimates the pre-loss state.
pub fn maxlik_reconstruct(records: &[QuadratureRecord], cfg: &TomoConfig) -> Result<MaxLikResult> {
    cfg.validate()?;
    if records.len() < 100 {
        return Err(Error::Tomography(format!(
            "need at least 100 records, got {}",
            records.len()
        )));
    }
    let dim = cfg.dim;
    let nj = cfg.n_phase_bins;
    let nb = cfg.n_x_bins;
    // bin counts; one extra catch-all bin per phase for |x| > x_range
    let mut counts = vec![vec![0u64; nb + 1]; nj];
    for r in records {
        let mut th = r.theta.rem_euclid(std::f64::consts::PI);
        if th >= std::f64::consts::PI {
            th = 0.0;
        }
        let j = ((th / std::f64::consts::PI) * nj as f64) as usize;
        let j = j.min(nj - 1);
        let b = if r.x.abs() >= cfg.x_range {
            nb
        } else {
            let t = (r.x + cfg.x_range) / (2.0 * cfg.x_range);
            ((t * nb as f64) as usize).min(nb - 1)
        };
        counts[j][b] += 1;
    }
    // x-bin overlap matrices S_b[m][n] = ∫_bin ψ_m ψ_n dx via Gauss-Legendre
    let (gl_x, gl_w) = gauss_legendre_8();
    let mut s_bins: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
    let mut s_tot = DMatrix::<f64>::zeros(dim, dim);
    let width = 2.0 * cfg.x_range / nb as f64;
    for b in 0..nb {
        let lo = -cfg.x_range + b as f64 * width;
        let mut s = DMatrix::<f64>::zeros(dim, dim);
        for (gx, gw) in gl_x.iter().zip(gl_w.iter()) {
            let x = lo + 0.5 * width * (1.0 + gx);
            let psi = quadrature_wavefunctions(dim, x);
            let w = 0.5 * width * gw;
            for m in 0..dim {
                for n in 0..dim {
                    s[(m, n)] += w * psi[m] * psi[n];
                }
            }
        }
        s_tot += &s;
        s_bins.push(s);
    }
    // completeness: the tail bin absorbs I − Σ_b S_b exactly
    let s_tail = DMatrix::<f64>::identity(dim, dim) - &s_tot;
    s_bins.push(s_tail);
    // POVM per (phase, x-bin): phase twiddle times overlap, loss-smeared
    let kraus = if cfg.eta_hd < 1.0 { tap_kraus(dim, cfg.eta_hd) } else { Vec::new() };
    let mut povms: Vec<Vec<DMatrix<C64>>> = Vec::with_capacity(nj);
    for j in 0..nj {
        let theta = (j as f64 + 0.5) * std::f64::consts::PI / nj as f64;
        let mut row = Vec::with_capacity(nb + 1);
        for s in &s_bins {
            let mut pi = DMatrix::<C64>::zeros(dim, dim);
            for m in 0..dim {
                for n in 0..dim {
                    pi[(m, n)] =
                        C64::from_polar(s[(m, n)], theta * (m as f64 - n as f64));
                }
            }
            let pi = if kraus.is_empty() {
                pi
            } else {
                let mut smeared = DMatrix::<C64>::zeros(dim, dim);
                for k in &kraus {
                    smeared += k.adjoint() * &pi * k;
                }
                smeared
            };
            row.push(pi);
        }
        povms.push(row);
    }
    let n_total: f64 = records.len() as f64;
    let freqs: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 / n_total).collect())
        .collect();

    // maximally mixed start
    let mut rho = DMatrix::<C64>::identity(dim, dim) / C64::new(dim as f64, 0.0);
    let mut regularized = 0usize;
    let mut last_ll = f64::NEG_INFINITY;
    let mut iters = 0usize;
    for it in 0..cfg.max_iters {
        iters = it + 1;
        let mut r_op = DMatrix::<C64>::zeros(dim, dim);
        let mut ll = 0.0f64;
        for j in 0..nj {
            for b in 0..=nb {
                let f = freqs[j][b];
                if f == 0.0 {
                    continue;
                }
                let p = (&povms[j][b] * &rho).diagonal().sum().re / nj as f64;
                let p = if p < 1e-12 {
                    regularized += 1;
                    1e-12
                } else {
                    p
                };
                ll += f * p.ln();
                r_op += &povms[j][b] * C64::new(f / (p * nj as f64), 0.0);
            }
        }
        if ll + 1e-12 * ll.abs().max(1.0) < last_ll {
            return Err(Error::Tomography(format!(
                "likelihood decreased at iteration {it}: {last_ll} -> {ll}"
            )));
        }
        let next = &r_op * &rho * &r_op;
        let tr = next.diagonal().sum().re;
        if tr <= 0.0 {
            return Err(Error::Tomography("RρR lost all weight".into()));
        }
        let next = next / C64::new(tr, 0.0);
        let delta = (&next - &rho)
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        rho = next;
        last_ll = ll;
        if delta < cfg.tol {
            break;
        }
    }
    // hermitize against accumulated asymmetry before validation
    let herm = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let state = FockDensity::from_matrix(herm)?;
    Ok(MaxLikResult {
        state,
        iterations: iters,
        final_log_likelihood: last_ll,
        regularized_bins: regularized,
    })
}

fn gauss_legendre_8() -> ([f64; 8], [f64; 8]) {
    (
        [
            -0.960_289_856_497_536_2,
            -0.796_666_477_413_626_7,
            -0.525_532_409_916_329,
            -0.183_434_642_495_649_8,
            0.183_434_642_495_649_8,
            0.525_532_409_916_329,
            0.796_666_477_413_626_7,
            0.960_289_856_497_536_2,
        ],
        [
            0.101_228_536_290_376_26,
            0.222_381_034_453_374_47,
            0.313_706_645_877_887_29,
            0.362_683_783_378_361_98,
            0.362_683_783_378_361_98,
            0.313_706_645_877_887_29,
            0.222_381_034_453_374_47,
            0.101_228_536_290_376_26,
        ],
    )
}

fn sqrt_psd(m: &DMatrix<C64>) -> DMatrix<C64> {
    let herm = (m.clone() + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(herm);
    let mut out = DMatrix::<C64>::zeros(m.nrows(), m.ncols());
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        let v = eig.eigenvectors.column(i);
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                out[(r, c)] += v[r] * v[c].conj() * C64::new(s, 0.0);
            }
        }
    }
    out
}

/// Uhlmann fidelity F(ρ, σ) = (Tr √(√ρ σ √ρ))².
pub fn fidelity(rho: &FockDensity, sigma: &FockDensity) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension(format!(
            "fidelity of dim {} vs {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let sr = sqrt_psd(rho.matrix());
    let inner = &sr * sigma.matrix() * &sr;
    let si = sqrt_psd(&inner);
    let tr = si.diagonal().sum().re;
    Ok((tr * tr).clamp(0.0, 1.0 + 1e-9).min(1.0))
}
