//! Closed-form machinery for the noise-addition / photon-subtraction
//! amplifier: Gaussian moments, the I_n and J_n integrals, canonical μ for
//! coherent, displaced-thermal, parametrically amplified and heralded
//! states, success probabilities, the two-level small-signal approximation,
//! and the added-noise optimizer.
//!
//! Two evaluation routes exist for the heralded quantities. The corrected
//! route is derived from the Gaussian P-function integrals and rewrites the
//! click probability as an upper tail sum Σ_{k≥M}, which is free of the
//! catastrophic cancellation the printed 1 − Σ_{k<M} form suffers when the
//! success probability is small. The `*_paper_literal` variants evaluate
//! the published displays verbatim for comparison.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockDensity, HERALD_FLOOR};
use crate::phase::holevo_variance;

const SERIES_REL_TOL: f64 = 1e-16;
const SERIES_MAX_TERMS: usize = 500;

/// Moments of a 1D Gaussian with mean `a` and variance `b`, by the
/// recurrence M_{k+1} = a·M_k + b·k·M_{k−1}, M_0 = 1.
pub fn gaussian_moments(a: f64, b: f64, k_max: usize) -> Vec<f64> {
    let mut m = Vec::with_capacity(k_max + 1);
    m.push(1.0);
    if k_max == 0 {
        return m;
    }
    m.push(a);
    for k in 1..k_max {
        let next = a * m[k] + b * k as f64 * m[k - 1];
        m.push(next);
    }
    m
}

/// k-th moment of a Gaussian with mean `a` and variance `b`.
pub fn gaussian_moment(k: usize, a: f64, b: f64) -> f64 {
    gaussian_moments(a, b, k)[k]
}

/// Cached moment tables for the real and imaginary components of a complex
/// Gaussian mean, shared across many I_n / J_n evaluations.
pub struct MomentTable {
    a: C64,
    b: f64,
    mr: Vec<f64>,
    mi: Vec<f64>,
}

impl MomentTable {
    pub fn new(a: C64, b: f64) -> Self {
        Self { a, b, mr: vec![1.0, a.re], mi: vec![1.0, a.im] }
    }

    fn ensure(&mut self, order: usize) {
        while self.mr.len() <= order {
            let k = self.mr.len() - 1;
            let next = self.a.re * self.mr[k] + self.b * k as f64 * self.mr[k - 1];
            self.mr.push(next);
            let next = self.a.im * self.mi[k] + self.b * k as f64 * self.mi[k - 1];
            self.mi.push(next);
        }
    }

    /// I_n(A,B) = ∫ β |β|^{2n} G(β_r; A_r, B) G(β_i; A_i, B) d²β.
    pub fn cal_i(&mut self, n: usize) -> C64 {
        self.ensure(2 * n + 2);
        let mut re = 0.0f64;
        let mut im = 0.0f64;
        let mut binom = 1.0f64;
        for k in 0..=n {
            re += binom * self.mr[2 * k + 1] * self.mi[2 * (n - k)];
            im += binom * self.mr[2 * k] * self.mi[2 * (n - k) + 1];
            binom = binom * (n - k) as f64 / (k + 1) as f64;
        }
        C64::new(re, im)
    }

    /// J_n(A,B) = ∫ |β|^{2n} G(β_r; A_r, B) G(β_i; A_i, B) d²β.
    pub fn cal_j(&mut self, n: usize) -> f64 {
        self.ensure(2 * n);
        let mut acc = 0.0f64;
        let mut binom = 1.0f64;
        for k in 0..=n {
            acc += binom * self.mr[2 * k] * self.mi[2 * (n - k)];
            binom = binom * (n - k) as f64 / (k + 1) as f64;
        }
        acc
    }
}

/// I_n(A,B): first absolute moment of order n of a rotationally separable
/// complex Gaussian (see [`MomentTable::cal_i`]).
pub fn cal_i(n: usize, a: C64, b: f64) -> C64 {
    MomentTable::new(a, b).cal_i(n)
}

/// J_n(A,B) (see [`MomentTable::cal_j`]).
pub fn cal_j(n: usize, a: C64, b: f64) -> f64 {
    MomentTable::new(a, b).cal_j(n)
}

/// Canonical μ of a coherent state:
/// μ = e^{−|α|²} α Σ_n |α|^{2n} / (n! √(n+1)).
pub fn mu_coherent(alpha: C64) -> C64 {
    let nb = alpha.norm_sqr();
    let mut sum = 0.0f64;
    let mut term = 1.0f64;
    for n in 0..SERIES_MAX_TERMS {
        let contrib = term / ((n + 1) as f64).sqrt();
        sum += contrib;
        if contrib < SERIES_REL_TOL * sum && n as f64 > nb + 10.0 {
            break;
        }
        term *= nb / (n + 1) as f64;
    }
    alpha * (-nb).exp() * sum
}

/// Canonical μ of a displaced thermal state with amplitude `alpha` and mean
/// thermal occupation `n_th`, from the Gaussian P-function representation.
pub fn mu_displaced_thermal(alpha: C64, n_th: f64) -> Result<C64> {
    if n_th < 0.0 {
        return Err(Error::InvalidParam("n_th must be >= 0".into()));
    }
    if n_th == 0.0 {
        return Ok(mu_coherent(alpha));
    }
    let np1 = n_th + 1.0;
    let pref = (-alpha.norm_sqr() / np1).exp() / np1;
    let mut table = MomentTable::new(alpha / np1, n_th / (2.0 * np1));
    let mut sum = C64::new(0.0, 0.0);
    let mut wn = 1.0f64; // 1/n!
    let scale = alpha.norm_sqr() + n_th + 10.0;
    for n in 0..SERIES_MAX_TERMS {
        let term = table.cal_i(n) * (wn / ((n + 1) as f64).sqrt());
        if !term.norm().is_finite() {
            return Err(Error::SeriesDivergence { max_terms: n });
        }
        sum += term;
        if term.norm() <= SERIES_REL_TOL * sum.norm().max(1e-300) && n as f64 > scale {
            return Ok(sum * pref);
        }
        wn /= (n + 1) as f64;
    }
    Err(Error::SeriesDivergence { max_terms: SERIES_MAX_TERMS })
}

fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    tol: f64,
    whole: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 {
        return Err(Error::Integration("adaptive Simpson recursion limit".into()));
    }
    if delta.abs() <= 15.0 * tol {
        Ok(left + right + delta / 15.0)
    } else {
        let l = adaptive_simpson(f, a, m, fa, flm, fm, tol / 2.0, left, depth - 1)?;
        let r = adaptive_simpson(f, m, b, fm, frm, fb, tol / 2.0, right, depth - 1)?;
        Ok(l + r)
    }
}

fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(&f, a, b, fa, fm, fb, tol, whole, 60)
}

/// Canonical μ after ideal phase-insensitive parametric amplification with
/// gain `g` (g ≥ 1), which maps |α⟩ to a displaced thermal state with
/// α' = √g·α and N_th = 2g − 2.
///
/// Evaluated as μ = (α'/√π) ∫₀^{1/(N+1)} e^{−x|α'|²} /
/// √(−ln[(1−(N+1)x)/(1−Nx)]) dx, with the integrable 1/√x endpoint
/// singularity removed by the substitution x = u².
pub fn mu_parametric(alpha: C64, g: f64) -> Result<C64> {
    if g < 1.0 {
        return Err(Error::InvalidParam("parametric gain must be >= 1".into()));
    }
    let n = 2.0 * g - 2.0;
    if n == 0.0 {
        return Ok(mu_coherent(alpha));
    }
    let ap = alpha * g.sqrt();
    let nb = ap.norm_sqr();
    let u_max = 1.0 / (n + 1.0).sqrt();
    let integrand = move |u: f64| {
        if u <= 0.0 {
            return 2.0;
        }
        let x = u * u;
        let arg = (1.0 - (n + 1.0) * x) / (1.0 - n * x);
        if arg <= 0.0 {
            return 0.0;
        }
        let lg = -arg.ln();
        if lg <= 0.0 {
            return 0.0;
        }
        2.0 * u * (-x * nb).exp() / lg.sqrt()
    };
    let val = integrate(integrand, 0.0, u_max, 1e-12)?;
    Ok(ap * val / std::f64::consts::PI.sqrt())
}

/// One amplification scenario: input amplitude, added thermal noise, tap
/// transmissivity, detector efficiency and subtraction threshold.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AmplifierParams {
    pub alpha: C64,
    pub n_th: f64,
    pub t: f64,
    pub eta: f64,
    pub m: usize,
}

impl AmplifierParams {
    pub fn new(alpha: C64, n_th: f64, t: f64, eta: f64, m: usize) -> Self {
        Self { alpha, n_th, t, eta, m }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.re.is_finite() || !self.alpha.im.is_finite() {
            return Err(Error::InvalidParam("alpha must be finite".into()));
        }
        if !(self.n_th >= 0.0 && self.n_th.is_finite()) {
            return Err(Error::InvalidParam(format!("n_th {} must be >= 0", self.n_th)));
        }
        if !(self.t > 0.0 && self.t <= 1.0) {
            return Err(Error::InvalidParam(format!("T {} outside (0,1]", self.t)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParam(format!("eta {} outside [0,1]", self.eta)));
        }
        if self.m > 32 {
            return Err(Error::InvalidParam(format!("M {} exceeds policy bound 32", self.m)));
        }
        Ok(())
    }
}

/// Success probability of the heralded M-photon subtraction, corrected
/// cancellation-free form:
/// P_S = (e^{−|α|²η(1−T)/Ξ₃}/Ξ₃) Σ_{k≥M} (η(1−T))^k/k! · J_k(α/Ξ₃, N/(2Ξ₃)),
/// Ξ₃ = N η(1−T) + 1.
pub fn success_probability(p: &AmplifierParams) -> Result<f64> {
    p.validate()?;
    if p.m == 0 {
        return Ok(1.0);
    }
    let x = p.eta * (1.0 - p.t);
    if x == 0.0 {
        return Ok(0.0);
    }
    let xi3 = p.n_th * x + 1.0;
    let pref = (-p.alpha.norm_sqr() * x / xi3).exp() / xi3;
    let mut table = MomentTable::new(p.alpha / xi3, p.n_th / (2.0 * xi3));
    let mut sum = 0.0f64;
    let mut coeff = x.powi(p.m as i32);
    for k in 1..=p.m {
        coeff /= k as f64;
    }
    let mean_clicks = x * (p.alpha.norm_sqr() + p.n_th) + 5.0;
    for k in p.m..p.m + SERIES_MAX_TERMS {
        let term = coeff * table.cal_j(k);
        if !term.is_finite() {
            return Err(Error::SeriesDivergence { max_terms: k });
        }
        sum += term;
        if term <= SERIES_REL_TOL * sum.max(1e-300) && (k as f64) > mean_clicks {
            return Ok((pref * sum).min(1.0));
        }
        coeff *= x / (k + 1) as f64;
    }
    Err(Error::SeriesDivergence { max_terms: SERIES_MAX_TERMS })
}

/// Unnormalized heralded μ, i.e. Tr[Σ|n⟩⟨n+1| ρ'] · P_S, corrected form.
fn heralded_mu_numerator(p: &AmplifierParams) -> Result<C64> {
    let x = p.eta * (1.0 - p.t);
    if p.m == 0 {
        // empty exclusion sum: the unconditioned attenuated state
        return mu_displaced_thermal(p.alpha * p.t.sqrt(), p.t * p.n_th);
    }
    if x == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let xi2 = p.n_th * p.t + p.n_th * x + 1.0;
    let pref = (-p.alpha.norm_sqr() * (p.t + x) / xi2).exp() / xi2;
    let a = p.alpha * p.t.sqrt() / xi2;
    let b = p.n_th * p.t / (2.0 * xi2);
    let mut table = MomentTable::new(a, b);
    let xt = x / p.t;
    let scale = p.alpha.norm_sqr() + p.n_th + 10.0;
    let mean_clicks = x * (p.alpha.norm_sqr() + p.n_th) + 5.0;
    let mut sum = C64::new(0.0, 0.0);
    let mut wn = 1.0f64; // 1/n!
    for n in 0..SERIES_MAX_TERMS {
        // inner upper-tail click sum at fixed n
        let mut inner = C64::new(0.0, 0.0);
        let mut coeff = xt.powi(p.m as i32);
        for k in 1..=p.m {
            coeff /= k as f64;
        }
        for k in p.m..p.m + SERIES_MAX_TERMS {
            let term = table.cal_i(n + k) * coeff;
            inner += term;
            if term.norm() <= SERIES_REL_TOL * inner.norm().max(1e-300)
                && (k as f64) > mean_clicks
            {
                break;
            }
            coeff *= xt / (k + 1) as f64;
        }
        let term = inner * (wn / ((n + 1) as f64).sqrt());
        if !term.norm().is_finite() {
            return Err(Error::SeriesDivergence { max_terms: n });
        }
        sum += term;
        if term.norm() <= SERIES_REL_TOL * sum.norm().max(1e-300) && (n as f64) > scale {
            return Ok(sum * pref);
        }
        wn /= (n + 1) as f64;
    }
    Err(Error::SeriesDivergence { max_terms: SERIES_MAX_TERMS })
}

/// Canonical μ of the heralded amplified state.
pub fn mu_amplified(p: &AmplifierParams) -> Result<C64> {
    p.validate()?;
    let ps = success_probability(p)?;
    if ps < HERALD_FLOOR {
        return Err(Error::HeraldImpossible { ps });
    }
    Ok(heralded_mu_numerator(p)? / ps)
}

/// Mean field amplitude ⟨â⟩ of the heralded amplified state:
/// ⟨â⟩ = √T (e^{−|α|²η(1−T)/Ξ₃}/Ξ₃) Σ_{k≥M} (η(1−T))^k/k! ·
/// I_k(α/Ξ₃, N/(2Ξ₃)) / P_S.
pub fn mean_amplitude_amplified(p: &AmplifierParams) -> Result<C64> {
    p.validate()?;
    if p.m == 0 {
        return Ok(p.alpha * p.t.sqrt());
    }
    let ps = success_probability(p)?;
    if ps < HERALD_FLOOR {
        return Err(Error::HeraldImpossible { ps });
    }
    let x = p.eta * (1.0 - p.t);
    let xi3 = p.n_th * x + 1.0;
    let pref = (-p.alpha.norm_sqr() * x / xi3).exp() / xi3;
    let mut table = MomentTable::new(p.alpha / xi3, p.n_th / (2.0 * xi3));
    let mut sum = C64::new(0.0, 0.0);
    let mut coeff = x.powi(p.m as i32);
    for k in 1..=p.m {
        coeff /= k as f64;
    }
    let mean_clicks = x * (p.alpha.norm_sqr() + p.n_th) + 5.0;
    for k in p.m..p.m + SERIES_MAX_TERMS {
        let term = table.cal_i(k) * coeff;
        if !term.norm().is_finite() {
            return Err(Error::SeriesDivergence { max_terms: k });
        }
        sum += term;
        if term.norm() <= SERIES_REL_TOL * sum.norm().max(1e-300) && (k as f64) > mean_clicks {
            return Ok(sum * (pref * p.t.sqrt() / ps));
        }
        coeff *= x / (k + 1) as f64;
    }
    Err(Error::SeriesDivergence { max_terms: SERIES_MAX_TERMS })
}

/// Success probability evaluated exactly as printed, including the
/// (η(1−T)/T)^{2k} factor and the α T/Ξ₃ argument. Kept for comparison with
/// the corrected route; diverges from the Fock oracle for M ≥ 2.
pub fn success_probability_paper_literal(p: &AmplifierParams) -> Result<f64> {
    p.validate()?;
    if p.m == 0 {
        return Ok(1.0);
    }
    let x = p.eta * (1.0 - p.t);
    let xi3 = p.n_th * x + 1.0;
    let pref = (-p.alpha.norm_sqr() * x / xi3).exp() / xi3;
    let mut table = MomentTable::new(p.alpha * p.t / xi3, p.n_th * p.t / (2.0 * xi3));
    let ratio = x / p.t;
    let mut sum = 0.0f64;
    let mut kfact = 1.0f64;
    for k in 0..p.m {
        sum += ratio.powi(2 * k as i32) / kfact * table.cal_j(k);
        kfact *= (k + 1) as f64;
    }
    Ok(1.0 - pref * sum)
}

/// Heralded μ evaluated exactly as printed (see
/// [`success_probability_paper_literal`]).
pub fn mu_amplified_paper_literal(p: &AmplifierParams) -> Result<C64> {
    p.validate()?;
    let ps = success_probability_paper_literal(p)?;
    if ps.abs() < HERALD_FLOOR {
        return Err(Error::HeraldImpossible { ps });
    }
    let x = p.eta * (1.0 - p.t);
    let xi1 = p.n_th * p.t + 1.0;
    let xi2 = p.n_th * p.t + p.n_th * x + 1.0;
    let pref1 = (-p.alpha.norm_sqr() * p.t / xi1).exp() / xi1;
    let pref2 = (-p.alpha.norm_sqr() * (p.t + x) / xi2).exp() / xi2;
    let mut t1 = MomentTable::new(p.alpha * p.t.sqrt() / xi1, p.n_th * p.t / (2.0 * xi1));
    let mut t2 = MomentTable::new(p.alpha * p.t.sqrt() / xi2, p.n_th * p.t / (2.0 * xi2));
    let ratio = x / p.t;
    let scale = p.alpha.norm_sqr() + p.n_th + 10.0;
    let mut sum = C64::new(0.0, 0.0);
    let mut wn = 1.0f64;
    for n in 0..SERIES_MAX_TERMS {
        let mut inner = C64::new(0.0, 0.0);
        let mut kfact = 1.0f64;
        for k in 0..p.m {
            inner += t2.cal_i(n + k) * (ratio.powi(2 * k as i32) / kfact);
            kfact *= (k + 1) as f64;
        }
        let term = (t1.cal_i(n) * pref1 - inner * pref2) * (wn / ((n + 1) as f64).sqrt());
        if !term.norm().is_finite() {
            return Err(Error::SeriesDivergence { max_terms: n });
        }
        sum += term;
        if term.norm() < SERIES_REL_TOL * sum.norm().max(1e-300) && (n as f64) > scale {
            return Ok(sum / ps);
        }
        wn /= (n + 1) as f64;
    }
    Err(Error::SeriesDivergence { max_terms: SERIES_MAX_TERMS })
}

/// Small-signal (|α|² ≪ N_th ≪ 1) approximation of the single-photon
/// subtracted state and its canonical phase variance.
pub struct ApproxAmplified {
    /// Two-level approximate density matrix.
    pub state: FockDensity,
    /// Approximate canonical phase variance (1/(4|α|²))(1 + |α|²/N_th) − 1.
    pub variance: f64,
    /// Whether the inputs sit inside the validity region |α|² < 0.1, N_th < 0.3.
    pub within_validity: bool,
}

/// Two-level approximation of noise addition followed by single photon
/// subtraction.
pub fn approx_amplified(alpha: C64, n_th: f64) -> Result<ApproxAmplified> {
    let nb = alpha.norm_sqr();
    if nb == 0.0 {
        return Err(Error::InvalidParam("approx_amplified undefined at alpha = 0".into()));
    }
    if n_th <= 0.0 {
        return Err(Error::InvalidParam("approx_amplified requires n_th > 0".into()));
    }
    let norm = nb + n_th + 4.0 * nb * n_th;
    let mut mat = nalgebra::DMatrix::<C64>::zeros(2, 2);
    mat[(0, 0)] = C64::new((nb + n_th) / norm, 0.0);
    mat[(1, 0)] = alpha * (2.0 * n_th / norm);
    mat[(0, 1)] = alpha.conj() * (2.0 * n_th / norm);
    mat[(1, 1)] = C64::new(4.0 * n_th * nb / norm, 0.0);
    let state = FockDensity::from_matrix(mat)?;
    let variance = (1.0 + nb / n_th) / (4.0 * nb) - 1.0;
    Ok(ApproxAmplified {
        state,
        variance,
        within_validity: nb < 0.1 && n_th < 0.3,
    })
}

/// Result of the added-noise optimization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OptimalNoise {
    pub n_th: f64,
    pub gamma: f64,
    /// False when Γ ≥ 1 across the whole bracket (no phase concentration).
    pub improved: bool,
}

/// Normalized phase variance Γ(n_th) of the heralded output relative to the
/// input coherent state.
pub fn gamma_of_noise(alpha: C64, n_th: f64, t: f64, eta: f64, m: usize) -> f64 {
    let v_ref = holevo_variance(mu_coherent(alpha));
    let p = AmplifierParams::new(alpha, n_th, t, eta, m);
    match mu_amplified(&p) {
        Ok(mu) => holevo_variance(mu) / v_ref,
        Err(_) => f64::INFINITY,
    }
}

/// Golden-section minimization of Γ(n_th) over n_th ∈ [1e-4, 5], absolute
/// tolerance 1e-4, seeded by a coarse bracketing scan.
pub fn optimal_noise(alpha: C64, t: f64, eta: f64, m: usize) -> Result<OptimalNoise> {
    if m < 1 {
        return Err(Error::InvalidParam("optimal_noise requires M >= 1".into()));
    }
    let (lo_bound, hi_bound) = (1e-4, 5.0);
    let f = |n: f64| gamma_of_noise(alpha, n, t, eta, m);
    // coarse scan to bracket the minimum
    let coarse = 64usize;
    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..=coarse {
        let n = lo_bound + (hi_bound - lo_bound) * i as f64 / coarse as f64;
        let v = f(n);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut a = lo_bound
        + (hi_bound - lo_bound) * best_i.saturating_sub(1) as f64 / coarse as f64;
    let mut b = lo_bound
        + (hi_bound - lo_bound) * (best_i + 1).min(coarse) as f64 / coarse as f64;
    // golden-section refinement
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > 1e-4 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let n_star = 0.5 * (a + b);
    let g_star = f(n_star);
    Ok(OptimalNoise { n_th: n_star, gamma: g_star, improved: g_star < 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{choose_cutoff, condition_on_click, displaced_thermal_with_tol, CutoffPolicy};
    use crate::phase::mu_canonical;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    const TIGHT: CutoffPolicy = CutoffPolicy { tail_tol: 1e-13, hard_max: 512 };

    /// Fock-space oracle for the heralded (μ, P_S) pair.
    fn oracle(p: &AmplifierParams) -> (C64, f64) {
        let dim = choose_cutoff(p.alpha, p.n_th, &TIGHT).unwrap() + 1;
        let rho = displaced_thermal_with_tol(p.alpha, p.n_th, dim, TIGHT.tail_tol).unwrap();
        let h = condition_on_click(&rho, p.t, p.eta, p.m).unwrap();
        (mu_canonical(&h.state), h.success_prob)
    }

    /// 1D Simpson quadrature of f over [a, b].
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    fn gauss_pdf(x: f64, mean: f64, var: f64) -> f64 {
        (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
    }

    #[test]
    fn gaussian_moment_base_cases() {
        assert_abs_diff_eq!(gaussian_moment(0, 0.7, 0.3), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gaussian_moment(1, 0.7, 0.3), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(gaussian_moment(2, 0.7, 0.3), 0.49 + 0.3, epsilon = 1e-15);
        // standard normal fourth moment
        assert_abs_diff_eq!(gaussian_moment(4, 0.0, 1.0), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_moment_matches_quadrature() {
        let (a, b) = (0.7f64, 0.3f64);
        for k in 0..=6 {
            let oracle = simpson(
                |x| x.powi(k as i32) * gauss_pdf(x, a, b),
                a - 12.0 * b.sqrt(),
                a + 12.0 * b.sqrt(),
                4000,
            );
            assert_abs_diff_eq!(gaussian_moment(k, a, b), oracle, epsilon = 1e-10);
        }
    }

    /// 2D quadrature oracle for I_n and J_n over the separable Gaussian.
    fn quad_ij(n: usize, a: C64, b: f64) -> (C64, f64) {
        let half = 9.0 * b.sqrt();
        let grid = 600usize;
        let hr = 2.0 * half / grid as f64;
        let mut i_acc = C64::new(0.0, 0.0);
        let mut j_acc = 0.0f64;
        for p in 0..=grid {
            let x = a.re - half + p as f64 * hr;
            let wx = if p == 0 || p == grid {
                1.0
            } else if p % 2 == 1 {
                4.0
            } else {
                2.0
            };
            for q in 0..=grid {
                let y = a.im - half + q as f64 * hr;
                let wy = if q == 0 || q == grid {
                    1.0
                } else if q % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let w = wx * wy * gauss_pdf(x, a.re, b) * gauss_pdf(y, a.im, b);
                let r2 = (x * x + y * y).powi(n as i32);
                j_acc += w * r2;
                i_acc += C64::new(x, y) * (w * r2);
            }
        }
        let scale = hr * hr / 9.0;
        (i_acc * scale, j_acc * scale)
    }

    #[test]
    fn cal_ij_base_cases() {
        let a = c(0.4, -0.2);
        let b = 0.17;
        let i0 = cal_i(0, a, b);
        assert_abs_diff_eq!(i0.re, a.re, epsilon = 1e-14);
        assert_abs_diff_eq!(i0.im, a.im, epsilon = 1e-14);
        assert_abs_diff_eq!(cal_j(0, a, b), 1.0, epsilon = 1e-14);
        // E|β|² = |A|² + 2B
        assert_abs_diff_eq!(cal_j(1, a, b), a.norm_sqr() + 2.0 * b, epsilon = 1e-14);
        assert_abs_diff_eq!(cal_j(1, c(0.0, 0.0), b), 2.0 * b, epsilon = 1e-15);
    }

    #[test]
    fn cal_ij_match_2d_quadrature() {
        let a = c(0.35, 0.15);
        let b = 0.12;
        for n in 0..=3 {
            let (iq, jq) = quad_ij(n, a, b);
            let iv = cal_i(n, a, b);
            assert_abs_diff_eq!(iv.re, iq.re, epsilon = 1e-9);
            assert_abs_diff_eq!(iv.im, iq.im, epsilon = 1e-9);
            assert_abs_diff_eq!(cal_j(n, a, b), jq, epsilon = 1e-9);
        }
    }

    #[test]
    fn moment_table_agrees_with_free_functions() {
        let a = c(0.5, 0.3);
        let b = 0.2;
        let mut table = MomentTable::new(a, b);
        for n in (0..8).rev() {
            // out-of-order access exercises the cache
            let i_free = cal_i(n, a, b);
            let iv = table.cal_i(n);
            assert_abs_diff_eq!(iv.re, i_free.re, epsilon = 1e-13);
            assert_abs_diff_eq!(iv.im, i_free.im, epsilon = 1e-13);
            assert_abs_diff_eq!(table.cal_j(n), cal_j(n, a, b), epsilon = 1e-13);
        }
    }

    #[test]
    fn mu_coherent_matches_fock() {
        for &alpha in &[0.1, 0.48, 1.0, 2.0] {
            let dim = choose_cutoff(c(alpha, 0.0), 0.0, &TIGHT).unwrap() + 1;
            let rho = crate::fock::coherent_state(c(alpha, 0.0), dim).unwrap();
            let mu_f = mu_canonical(&rho);
            let mu_a = mu_coherent(c(alpha, 0.0));
            assert_abs_diff_eq!(mu_a.re, mu_f.re, epsilon = 1e-11);
            assert_abs_diff_eq!(mu_a.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn mu_displaced_thermal_matches_fock_oracle() {
        let alpha = c(0.431, 0.0);
        let n_th = 0.15;
        let mu_a = mu_displaced_thermal(alpha, n_th).unwrap();
        let dim = choose_cutoff(alpha, n_th, &TIGHT).unwrap() + 1;
        let rho = displaced_thermal_with_tol(alpha, n_th, dim, TIGHT.tail_tol).unwrap();
        let mu_f = mu_canonical(&rho);
        assert!((mu_a - mu_f).norm() < 1e-8, "analytic {mu_a} vs oracle {mu_f}");
    }

    #[test]
    fn mu_displaced_thermal_rotation_covariance() {
        let n_th = 0.25;
        let m0 = mu_displaced_thermal(c(0.4, 0.0), n_th).unwrap();
        let rot = C64::from_polar(0.4, 1.1);
        let m1 = mu_displaced_thermal(rot, n_th).unwrap();
        assert_abs_diff_eq!(m0.norm(), m1.norm(), epsilon = 1e-13);
        assert_abs_diff_eq!(m1.arg(), 1.1, epsilon = 1e-12);
    }

    #[test]
    fn mu_parametric_unit_gain_is_coherent() {
        let alpha = c(0.48, 0.0);
        let m = mu_parametric(alpha, 1.0).unwrap();
        let expect = mu_coherent(alpha);
        assert_abs_diff_eq!(m.re, expect.re, epsilon = 1e-14);
    }

    #[test]
    fn mu_parametric_matches_displaced_thermal_equivalent() {
        // |α⟩ amplified with gain g is the displaced thermal state
        // (√g α, 2g − 2); the integral and the series must agree.
        for &(alpha, g) in &[(0.3, 1.2), (0.48, 1.5), (0.48, 2.0)] {
            let mi = mu_parametric(c(alpha, 0.0), g).unwrap();
            let ms = mu_displaced_thermal(c(alpha * g.sqrt(), 0.0), 2.0 * g - 2.0).unwrap();
            assert!(
                (mi - ms).norm() <= 1e-6 * ms.norm(),
                "g={g}: integral {mi} vs series {ms}"
            );
        }
    }

    #[test]
    fn parametric_amplification_always_degrades_phase() {
        let alpha = c(0.48, 0.0);
        let v_in = holevo_variance(mu_coherent(alpha));
        for &g in &[1.2, 1.5, 2.0] {
            let v = holevo_variance(mu_parametric(alpha, g).unwrap());
            assert!(v > v_in, "g={g}: V {v} vs input {v_in}");
        }
    }

    #[test]
    fn success_probability_thermal_click_closed_form() {
        // α = 0, M = 1: P_S = n_th η(1−T)/(n_th η(1−T) + 1)
        let p = AmplifierParams::new(c(0.0, 0.0), 0.4, 0.8, 0.63, 1);
        let x = 0.4 * 0.63 * 0.2;
        assert_abs_diff_eq!(
            success_probability(&p).unwrap(),
            x / (x + 1.0),
            epsilon = 1e-14
        );
    }

    #[test]
    fn success_probability_coherent_click_closed_form() {
        // n_th = 0, M = 1: P_S = 1 − exp(−η(1−T)|α|²)
        let p = AmplifierParams::new(c(0.48, 0.0), 0.0, 0.8, 0.63, 1);
        let expect = 1.0 - (-0.63f64 * 0.2 * 0.48 * 0.48).exp();
        assert_abs_diff_eq!(success_probability(&p).unwrap(), expect, epsilon = 1e-14);
    }

    #[test]
    fn success_probability_edge_cases() {
        let p0 = AmplifierParams::new(c(0.3, 0.0), 0.2, 0.8, 0.63, 0);
        assert_abs_diff_eq!(success_probability(&p0).unwrap(), 1.0, epsilon = 0.0);
        // blind detector never clicks
        let blind = AmplifierParams::new(c(0.3, 0.0), 0.2, 0.8, 0.0, 1);
        assert_abs_diff_eq!(success_probability(&blind).unwrap(), 0.0, epsilon = 0.0);
        let vac = AmplifierParams::new(c(0.0, 0.0), 0.0, 0.8, 0.63, 1);
        assert_abs_diff_eq!(success_probability(&vac).unwrap(), 0.0, epsilon = 0.0);
        assert!(matches!(
            mu_amplified(&vac),
            Err(Error::HeraldImpossible { .. })
        ));
    }

    #[test]
    fn heralded_mu_matches_fock_oracle_at_figure_point() {
        let p = AmplifierParams::new(c(0.48, 0.0), 0.2, 0.8, 0.63, 2);
        let (mu_f, ps_f) = oracle(&p);
        let mu_a = mu_amplified(&p).unwrap();
        let ps_a = success_probability(&p).unwrap();
        assert!(
            (mu_a.norm() - mu_f.norm()).abs() <= 1e-6 * mu_f.norm(),
            "mu {} vs oracle {}",
            mu_a.norm(),
            mu_f.norm()
        );
        assert!((ps_a - ps_f).abs() <= 1e-6 * ps_f, "ps {ps_a} vs oracle {ps_f}");
        // golden values frozen from the Fock oracle
        assert_abs_diff_eq!(ps_a, 2.3173563938784329e-3, epsilon = 1e-11);
        assert_abs_diff_eq!(mu_a.norm(), 6.0595003305021333e-1, epsilon = 1e-9);
    }

    #[test]
    fn heralded_mean_amplitude_matches_fock_oracle() {
        let p = AmplifierParams::new(c(0.431, 0.0), 0.15, 0.8, 0.63, 1);
        let dim = choose_cutoff(p.alpha, p.n_th, &TIGHT).unwrap() + 1;
        let rho = displaced_thermal_with_tol(p.alpha, p.n_th, dim, TIGHT.tail_tol).unwrap();
        let h = condition_on_click(&rho, p.t, p.eta, p.m).unwrap();
        let amp_f = h.state.mean_amplitude();
        let amp_a = mean_amplitude_amplified(&p).unwrap();
        assert!(
            (amp_a - amp_f).norm() <= 1e-7 * amp_f.norm(),
            "⟨â⟩ {amp_a} vs oracle {amp_f}"
        );
    }

    #[test]
    fn heralded_quantities_rotate_with_alpha() {
        let p0 = AmplifierParams::new(c(0.4, 0.0), 0.3, 0.8, 0.63, 2);
        let p1 = AmplifierParams::new(C64::from_polar(0.4, 0.9), 0.3, 0.8, 0.63, 2);
        assert_abs_diff_eq!(
            success_probability(&p0).unwrap(),
            success_probability(&p1).unwrap(),
            epsilon = 1e-14
        );
        let m0 = mu_amplified(&p0).unwrap();
        let m1 = mu_amplified(&p1).unwrap();
        assert_abs_diff_eq!(m0.norm(), m1.norm(), epsilon = 1e-12);
        assert_abs_diff_eq!(m1.arg(), 0.9, epsilon = 1e-11);
    }

    #[test]
    fn paper_literal_coincides_with_corrected_for_m1() {
        // for M = 1 the printed display collapses to the same complement of
        // the zero-click term, so both routes agree there
        let p = AmplifierParams::new(c(0.48, 0.0), 0.2, 0.8, 0.63, 1);
        assert_abs_diff_eq!(
            success_probability(&p).unwrap(),
            success_probability_paper_literal(&p).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn paper_literal_diverges_from_oracle_for_m2() {
        let p = AmplifierParams::new(c(0.48, 0.0), 0.2, 0.8, 0.63, 2);
        let (_, ps_f) = oracle(&p);
        let lit = success_probability_paper_literal(&p).unwrap();
        let corr = success_probability(&p).unwrap();
        assert!((corr - ps_f).abs() <= 1e-6 * ps_f);
        assert!(
            (lit - ps_f).abs() > 1e-3 * ps_f,
            "literal {lit} unexpectedly matches oracle {ps_f}"
        );
    }

    #[test]
    fn approx_amplified_variance_golden() {
        // |α|² = 0.01, N_th = 0.1: V = (1 + 0.1)/(0.04) − 1 = 26.5
        let a = approx_amplified(c(0.1, 0.0), 0.1).unwrap();
        assert_abs_diff_eq!(a.variance, 26.5, epsilon = 1e-12);
        assert!(a.within_validity);
        a.state.validate().unwrap();
    }

    #[test]
    fn approx_amplified_small_signal_limits() {
        // deep small-signal regime: gain → 2 and Γ → 1/4
        let alpha = c(0.003, 0.0);
        let n_th = 0.03;
        let a = approx_amplified(alpha, n_th).unwrap();
        let gain = a.state.mean_amplitude().norm() / alpha.norm();
        assert!((gain - 2.0).abs() < 2e-3, "gain {gain}");
        let gamma = a.variance / holevo_variance(mu_coherent(alpha));
        assert!((gamma - 0.25).abs() < 2e-3, "gamma {gamma}");
    }

    #[test]
    fn approx_amplified_rejects_degenerate_inputs() {
        assert!(approx_amplified(c(0.0, 0.0), 0.1).is_err());
        assert!(approx_amplified(c(0.1, 0.0), 0.0).is_err());
    }

    #[test]
    fn optimal_noise_matches_dense_scan() {
        let alpha = c(0.48, 0.0);
        let opt = optimal_noise(alpha, 0.8, 0.63, 1).unwrap();
        assert!(opt.improved, "expected phase concentration at M=1");
        // dense-grid oracle with step 1e-3
        let mut best = (0.0f64, f64::INFINITY);
        for i in 1..=1000 {
            let n = i as f64 * 1e-3;
            let g = gamma_of_noise(alpha, n, 0.8, 0.63, 1);
            if g < best.1 {
                best = (n, g);
            }
        }
        assert!(
            (opt.n_th - best.0).abs() < 2e-3,
            "optimizer {} vs scan {}",
            opt.n_th,
            best.0
        );
        assert!(opt.gamma <= best.1 + 1e-9);
    }

    #[test]
    fn gamma_of_noise_is_finite_and_unity_free_limits() {
        // vanishing noise with M = 0 keeps the attenuated coherent state
        let alpha = c(0.48, 0.0);
        let p = AmplifierParams::new(alpha, 0.0, 1.0, 0.63, 0);
        let mu = mu_amplified(&p).unwrap();
        let expect = mu_coherent(alpha);
        assert_abs_diff_eq!(mu.re, expect.re, epsilon = 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(AmplifierParams::new(c(0.3, 0.0), -0.1, 0.8, 0.63, 1).validate().is_err());
        assert!(AmplifierParams::new(c(0.3, 0.0), 0.1, 0.0, 0.63, 1).validate().is_err());
        assert!(AmplifierParams::new(c(0.3, 0.0), 0.1, 0.8, 1.2, 1).validate().is_err());
        assert!(AmplifierParams::new(c(0.3, 0.0), 0.1, 0.8, 0.63, 33).validate().is_err());
        assert!(mu_parametric(c(0.3, 0.0), 0.5).is_err());
    }
}
