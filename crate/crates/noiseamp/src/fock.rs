//! Truncated Fock-space representation of bosonic states and channels.
//!
//! Everything downstream (phase metrics, the analytic closed forms, the
//! Monte Carlo sampler) is validated against direct matrix computations in
//! this module. Quadrature convention: X = (a + a†)/2, P = (a − a†)/(2i),
//! so a coherent state |α⟩ has ⟨X⟩ = Re α and the vacuum variance is 1/4.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum allowed deviation from Hermitian symmetry.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Maximum allowed trace deviation from 1 after normalization.
pub const TRACE_TOL: f64 = 1e-8;
/// Most negative admissible eigenvalue.
pub const PSD_TOL: f64 = -1e-8;
/// Success probabilities below this are treated as impossible heralds.
pub const HERALD_FLOOR: f64 = 1e-14;
/// Extra Fock levels used when building the displacement operator, trimmed
/// back after exponentiation.
pub const DISPLACEMENT_PADDING: usize = 8;

/// Fock truncation policy: admissible tail mass and a hard dimension cap.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CutoffPolicy {
    pub tail_tol: f64,
    pub hard_max: usize,
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        Self { tail_tol: 1e-10, hard_max: 256 }
    }
}

impl CutoffPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(Error::InvalidParam(format!(
                "tail_tol must be in (0,1), got {}",
                self.tail_tol
            )));
        }
        if self.hard_max < 2 {
            return Err(Error::InvalidParam("hard_max must be >= 2".into()));
        }
        Ok(())
    }
}

/// Photon-number distribution p_0..p_{n_max} of a displaced thermal state
/// with coherent amplitude `alpha` and mean thermal occupation `n_th`.
///
/// Uses the Laguerre closed form
/// p_n = N^n/(N+1)^{n+1} · exp(−|α|²/(N+1)) · L_n(−|α|²/(N(N+1))),
/// which keeps full relative accuracy (all recurrence terms positive for
/// negative argument). Reduces to a Poisson distribution at N = 0.
pub fn displaced_thermal_number_dist(alpha: C64, n_th: f64, n_max: usize) -> Vec<f64> {
    let nb = alpha.norm_sqr();
    let mut p = Vec::with_capacity(n_max + 1);
    if n_th <= 0.0 {
        // Poisson(|α|²)
        let mut term = (-nb).exp();
        for n in 0..=n_max {
            p.push(term);
            term *= nb / (n as f64 + 1.0);
        }
    } else {
        let x = -nb / (n_th * (n_th + 1.0));
        let pref0 = (-nb / (n_th + 1.0)).exp() / (n_th + 1.0);
        let ratio = n_th / (n_th + 1.0);
        // f_n = pref0 · ratio^n · L_n(x); the Laguerre three-term recurrence
        // is folded with the geometric prefactor to avoid overflow. All terms
        // are positive for x < 0, so relative accuracy is preserved.
        let mut fm1 = 0.0f64;
        let mut f = pref0;
        for n in 0..=n_max {
            p.push(f);
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 - x) * f - nf * ratio * fm1) * ratio / (nf + 1.0);
            fm1 = f;
            f = next;
        }
    }
    p
}

/// Smallest cutoff N such that the displaced-thermal number distribution has
/// tail mass beyond N below `policy.tail_tol`. The returned value is the
/// highest retained Fock level; matrix dimension is N+1.
pub fn choose_cutoff(alpha: C64, n_th: f64, policy: &CutoffPolicy) -> Result<usize> {
    policy.validate()?;
    if !(n_th >= 0.0 && n_th.is_finite()) {
        return Err(Error::InvalidParam(format!("n_th must be finite and >= 0, got {n_th}")));
    }
    let mean = alpha.norm_sqr() + n_th;
    // Gaussian-tail estimate, then the geometric thermal tail which decays
    // only like (N/(N+1))^n and dominates for slow tolerances.
    let mut start = (mean + 10.0 * (mean + 1.0).sqrt() + 20.0).ceil() as usize;
    if n_th > 0.0 {
        let geo = policy.tail_tol.ln() / (n_th / (n_th + 1.0)).ln();
        start = start.max(geo.ceil() as usize + 8);
    }
    // extend the window until the tail bound is met or the policy bound is
    // provably violated
    let limit = policy.hard_max.max(2) * 2;
    let mut window = start.min(limit);
    loop {
        let p = displaced_thermal_number_dist(alpha, n_th, window);
        let mut cum = 0.0f64;
        let mut cutoff = None;
        for (n, pn) in p.iter().enumerate() {
            cum += pn;
            if 1.0 - cum < policy.tail_tol {
                cutoff = Some(n);
                break;
            }
        }
        match cutoff {
            Some(n) if n <= policy.hard_max => return Ok(n),
            Some(n) => {
                return Err(Error::CutoffOverflow { required: n, hard_max: policy.hard_max })
            }
            None if window < limit => window = (window * 2).min(limit),
            None => {
                return Err(Error::CutoffOverflow {
                    required: window + 1,
                    hard_max: policy.hard_max,
                })
            }
        }
    }
}

/// Truncated-Fock-basis density matrix, entry (m, n) = ⟨m|ρ|n⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FockDensityJson", into = "FockDensityJson")]
pub struct FockDensity {
    mat: DMatrix<C64>,
}

#[derive(Serialize, Deserialize, Clone)]
struct FockDensityJson {
    dim: usize,
    elements: Vec<[f64; 2]>,
}

impl TryFrom<FockDensityJson> for FockDensity {
    type Error = String;
    fn try_from(j: FockDensityJson) -> std::result::Result<Self, String> {
        if j.elements.len() != j.dim * j.dim {
            return Err(format!(
                "expected {} elements for dim {}, got {}",
                j.dim * j.dim,
                j.dim,
                j.elements.len()
            ));
        }
        // row-major: elements[m*dim + n] = rho_{mn}
        let mat = DMatrix::from_fn(j.dim, j.dim, |m, n| {
            let e = j.elements[m * j.dim + n];
            C64::new(e[0], e[1])
        });
        Ok(FockDensity { mat })
    }
}

impl From<FockDensity> for FockDensityJson {
    fn from(rho: FockDensity) -> Self {
        let dim = rho.dim();
        let mut elements = Vec::with_capacity(dim * dim);
        for m in 0..dim {
            for n in 0..dim {
                let v = rho.mat[(m, n)];
                elements.push([v.re, v.im]);
            }
        }
        FockDensityJson { dim, elements }
    }
}

impl FockDensity {
    /// Wraps a raw matrix; normalizes the trace but performs no validity check.
    pub fn from_matrix_unchecked(mat: DMatrix<C64>) -> Self {
        Self { mat }
    }

    /// Wraps and normalizes a raw matrix, enforcing the FockDensity invariants.
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        let mut rho = Self { mat };
        rho.normalize()?;
        rho.validate()?;
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn element(&self, m: usize, n: usize) -> C64 {
        self.mat[(m, n)]
    }

    pub fn trace(&self) -> C64 {
        self.mat.diagonal().sum()
    }

    /// Rescales to unit trace; errors if the trace is numerically zero.
    pub fn normalize(&mut self) -> Result<()> {
        let tr = self.trace().re;
        if tr.abs() < HERALD_FLOOR {
            return Err(Error::HeraldImpossible { ps: tr });
        }
        self.mat /= C64::new(tr, 0.0);
        Ok(())
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for m in 0..d {
            for n in m..d {
                let diff = (self.mat[(m, n)] - self.mat[(n, m)].conj()).norm();
                worst = worst.max(diff);
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.mat.clone() + self.mat.adjoint()) * C64::new(0.5, 0.0);
        let eig = nalgebra::SymmetricEigen::new(herm);
        eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// Checks Hermiticity, unit trace and positive semidefiniteness within
    /// the module tolerances.
    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_defect();
        if h > HERMITICITY_TOL {
            return Err(Error::InvalidParam(format!("hermiticity defect {h:.3e}")));
        }
        let tr = self.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidParam(format!("trace {tr} deviates from 1")));
        }
        let lam = self.min_eigenvalue();
        if lam < PSD_TOL {
            return Err(Error::InvalidParam(format!("negative eigenvalue {lam:.3e}")));
        }
        Ok(())
    }

    /// Tr[n̂ ρ].
    pub fn mean_photon(&self) -> f64 {
        (0..self.dim()).map(|n| n as f64 * self.mat[(n, n)].re).sum()
    }

    /// Tr[â ρ] = Σ_m √(m+1) ρ_{m+1,m}.
    pub fn mean_amplitude(&self) -> C64 {
        let d = self.dim();
        (0..d.saturating_sub(1))
            .map(|m| ((m + 1) as f64).sqrt() * self.mat[(m + 1, m)])
            .sum()
    }

    /// Photon-number populations.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.mat[(n, n)].re).collect()
    }

    /// Embeds into a larger Fock space (zero padding) or truncates and
    /// renormalizes into a smaller one.
    pub fn resized(&self, dim: usize) -> Result<Self> {
        let d = self.dim();
        let mut mat = DMatrix::zeros(dim, dim);
        let k = d.min(dim);
        for m in 0..k {
            for n in 0..k {
                mat[(m, n)] = self.mat[(m, n)];
            }
        }
        let mut rho = Self { mat };
        rho.normalize()?;
        Ok(rho)
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut v = vec![0.0f64; n + 1];
    for k in 1..=n {
        v[k] = v[k - 1] + (k as f64).ln();
    }
    v
}

/// Pure coherent state |α⟩⟨α| in a dim-level truncation, renormalized.
/// Returns the state together with the truncation deficit (the probability
/// mass lost beyond the cutoff before renormalization).
pub fn coherent_state_with_deficit(alpha: C64, dim: usize) -> Result<(FockDensity, f64)> {
    if dim < 1 {
        return Err(Error::InvalidParam("dim must be >= 1".into()));
    }
    let lnf = ln_factorials(dim);
    let nb = alpha.norm_sqr();
    let mut c = DVector::zeros(dim);
    for n in 0..dim {
        // c_n = exp(-|α|²/2) α^n / sqrt(n!)
        let mag = (-nb / 2.0 + 0.5 * (n as f64) * if nb > 0.0 { nb.ln() } else { 0.0 }
            - 0.5 * lnf[n])
            .exp();
        let phase = if alpha.norm() > 0.0 {
            (alpha / alpha.norm()).powi(n as i32)
        } else {
            C64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0)
        };
        c[n] = if nb > 0.0 || n == 0 { mag * phase } else { C64::new(0.0, 0.0) };
    }
    let norm2: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    let deficit = 1.0 - norm2;
    let c = c / C64::new(norm2.sqrt(), 0.0);
    let mat = &c * c.adjoint();
    Ok((FockDensity::from_matrix_unchecked(mat), deficit))
}

/// Pure coherent state |α⟩⟨α| in a dim-level truncation, renormalized.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<FockDensity> {
    coherent_state_with_deficit(alpha, dim).map(|(rho, _)| rho)
}

/// Matrix exponential by scaling-and-squaring with a Taylor core. The
/// generators used here are anti-Hermitian, so conditioning is benign.
fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let d = a.nrows();
    let norm = a.iter().map(|z| z.norm()).fold(0.0f64, f64::max) * d as f64;
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / C64::new(2f64.powi(s as i32), 0.0);
    let mut result = DMatrix::identity(d, d);
    let mut term = DMatrix::identity(d, d);
    for k in 1..60 {
        term = (&term * &scaled) / C64::new(k as f64, 0.0);
        let tn = term.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        result += &term;
        if tn < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Truncated displacement operator D(α) = exp(α a† − α* a), built with
/// cutoff padding then projected back to `dim` levels.
pub fn displacement_operator(alpha: C64, dim: usize) -> DMatrix<C64> {
    let big = dim + DISPLACEMENT_PADDING;
    let mut gen = DMatrix::zeros(big, big);
    for n in 0..big - 1 {
        let s = ((n + 1) as f64).sqrt();
        gen[(n + 1, n)] += alpha * s; // α a†
        gen[(n, n + 1)] -= alpha.conj() * s; // −α* a
    }
    let d_big = expm(&gen);
    d_big.view((0, 0), (dim, dim)).into()
}

/// Displaced thermal state D(α) ρ_th(n_th) D†(α) in a dim-level truncation.
pub fn displaced_thermal(alpha: C64, n_th: f64, dim: usize) -> Result<FockDensity> {
    displaced_thermal_with_tol(alpha, n_th, dim, CutoffPolicy::default().tail_tol)
}

/// As [`displaced_thermal`], with an explicit admissible trace deficit.
pub fn displaced_thermal_with_tol(
    alpha: C64,
    n_th: f64,
    dim: usize,
    tail_tol: f64,
) -> Result<FockDensity> {
    if dim < 1 {
        return Err(Error::InvalidParam("dim must be >= 1".into()));
    }
    if n_th < 0.0 {
        return Err(Error::InvalidParam("n_th must be >= 0".into()));
    }
    if n_th == 0.0 {
        let (rho, deficit) = coherent_state_with_deficit(alpha, dim)?;
        if deficit > tail_tol * 10.0 {
            return Err(Error::Truncation { deficit, tol: tail_tol * 10.0 });
        }
        return Ok(rho);
    }
    // Build in padded space so the truncated displacement does not bleed
    // thermal tail weight into artifacts, then project back.
    let big = dim + DISPLACEMENT_PADDING;
    let mut th = DMatrix::zeros(big, big);
    let ratio = n_th / (n_th + 1.0);
    let mut p = 1.0 / (n_th + 1.0);
    for n in 0..big {
        th[(n, n)] = C64::new(p, 0.0);
        p *= ratio;
    }
    let disp = displacement_operator(alpha, big);
    let full = &disp * th * disp.adjoint();
    let projected: DMatrix<C64> = full.view((0, 0), (dim, dim)).into();
    let deficit = 1.0 - projected.diagonal().sum().re;
    // Allow a modest multiple of the tail tolerance: the thermal diagonal
    // itself carries tail mass O(tail_tol) by construction of the cutoff.
    if deficit > tail_tol * 100.0 {
        return Err(Error::Truncation { deficit, tol: tail_tol * 100.0 });
    }
    let mut rho = FockDensity::from_matrix_unchecked(projected);
    rho.normalize()?;
    Ok(rho)
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// P(Binomial(n, eta) >= m), summed from the upper tail so that small click
/// probabilities retain full relative accuracy.
fn binomial_upper_tail(n: usize, m: usize, eta: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if m > n {
        return 0.0;
    }
    let mut acc = 0.0f64;
    for k in m..=n {
        let term = binomial(n, k)
            * eta.powi(k as i32)
            * (1.0 - eta).powi((n - k) as i32);
        acc += term;
    }
    acc.min(1.0)
}

/// Kraus operators of a beam-splitter tap with vacuum in the auxiliary mode:
/// K_j removes j photons into the tap, K_j|m⟩ = sqrt(C(m,j) T^{m-j}(1-T)^j)|m-j⟩.
/// Identical to conjugating by the two-mode beam-splitter unitary and reading
/// out j photons in the traced mode.
pub fn tap_kraus(dim: usize, transmissivity: f64) -> Vec<DMatrix<C64>> {
    let mut ops = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut k = DMatrix::zeros(dim, dim);
        for m in j..dim {
            let c = binomial(m, j)
                * transmissivity.powi((m - j) as i32)
                * (1.0 - transmissivity).powi(j as i32);
            k[(m - j, m)] = C64::new(c.sqrt(), 0.0);
        }
        ops.push(k);
    }
    ops
}

/// Pure-loss channel of transmissivity `t` applied to `rho`.
pub fn pure_loss(rho: &FockDensity, t: f64) -> Result<FockDensity> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParam(format!("transmissivity {t} outside [0,1]")));
    }
    let dim = rho.dim();
    let kraus = tap_kraus(dim, t);
    let mut out = DMatrix::zeros(dim, dim);
    for k in &kraus {
        out += k * rho.matrix() * k.adjoint();
    }
    let mut res = FockDensity::from_matrix_unchecked(out);
    res.normalize()?;
    Ok(res)
}

/// Result of a heralded tap measurement.
#[derive(Debug)]
pub struct Heralded {
    pub state: FockDensity,
    pub success_prob: f64,
}

/// Taps `rho_in` on a beam splitter of transmissivity `t` with vacuum in the
/// auxiliary mode, measures the tap with an inefficient photon counter
/// (quantum efficiency `eta`, POVM Π = 1 − Σ_{k<m}|k⟩⟨k| after the virtual
/// loss), and returns the normalized heralded state and success probability.
///
/// The detector inefficiency is folded into the POVM as binomial smearing
/// q_j = P(Bin(j, η) ≥ M), equivalent to a virtual beam splitter of
/// transmissivity η in front of an ideal counter.
pub fn condition_on_click(
    rho_in: &FockDensity,
    t: f64,
    eta: f64,
    m: usize,
) -> Result<Heralded> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidParam(format!("transmissivity {t} outside (0,1]")));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParam(format!("efficiency {eta} outside [0,1]")));
    }
    let dim = rho_in.dim();
    let kraus = tap_kraus(dim, t);
    let mut out = DMatrix::zeros(dim, dim);
    let mut ps = 0.0f64;
    for (j, k) in kraus.iter().enumerate() {
        let q = binomial_upper_tail(j, m, eta);
        if q == 0.0 {
            continue;
        }
        let contrib = k * rho_in.matrix() * k.adjoint();
        ps += q * contrib.diagonal().sum().re;
        out += contrib * C64::new(q, 0.0);
    }
    if ps < HERALD_FLOOR {
        return Err(Error::HeraldImpossible { ps });
    }
    let mut state = FockDensity::from_matrix_unchecked(out);
    state.normalize()?;
    Ok(Heralded { state, success_prob: ps })
}

/// Ideal M-photon subtraction: normalized â^M ρ â†^M and its weight
/// Tr[â^M ρ â†^M].
pub fn subtract_photons_ideal(rho: &FockDensity, m: usize) -> Result<(FockDensity, f64)> {
    let dim = rho.dim();
    if m >= dim {
        return Err(Error::InvalidParam(format!(
            "cannot subtract {m} photons from a dim-{dim} truncation"
        )));
    }
    let mut mat = rho.matrix().clone();
    for _ in 0..m {
        let d = mat.nrows();
        let mut next = DMatrix::zeros(d - 1, d - 1);
        for i in 0..d - 1 {
            for j in 0..d - 1 {
                let s = (((i + 1) * (j + 1)) as f64).sqrt();
                next[(i, j)] = mat[(i + 1, j + 1)] * s;
            }
        }
        mat = next;
    }
    // pad back to the original dimension
    let mut padded = DMatrix::zeros(dim, dim);
    let k = mat.nrows();
    for i in 0..k {
        for j in 0..k {
            padded[(i, j)] = mat[(i, j)];
        }
    }
    let weight = padded.diagonal().sum().re;
    if weight < HERALD_FLOOR {
        return Err(Error::HeraldImpossible { ps: weight });
    }
    let mut state = FockDensity::from_matrix_unchecked(padded);
    state.normalize()?;
    Ok((state, weight))
}

/// ⟨m|D(γ)|n⟩ for the full (untruncated) displacement operator, via the
/// associated-Laguerre closed form. Used for Wigner evaluation.
fn displacement_elements(gamma: C64, dim: usize, lnf: &[f64]) -> DMatrix<C64> {
    let x = gamma.norm_sqr();
    let pref = (-x / 2.0).exp();
    let mut d = DMatrix::zeros(dim, dim);
    // For each offset a = |m-n|, run the Laguerre recurrence in the lower index.
    for a in 0..dim {
        let mut lm1 = 0.0f64;
        let mut l = 1.0f64; // L_0^{(a)}
        let ga = gamma.powi(a as i32);
        let gac = (-gamma.conj()).powi(a as i32);
        for n in 0..dim - a {
            let m = n + a;
            let scale = (0.5 * (lnf[n] - lnf[m])).exp() * pref * l;
            d[(m, n)] = ga * scale;
            if a > 0 {
                d[(n, m)] = gac * scale;
            }
            // advance L_{n}^{(a)} -> L_{n+1}^{(a)}
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + a as f64 - x) * l - (nf + a as f64) * lm1)
                / (nf + 1.0);
            lm1 = l;
            l = next;
        }
    }
    d
}

/// Wigner function value W(x, p) via the displaced-parity formula,
/// W = (2/π) Tr[ρ D(2β) P] with β = x + i p.
pub fn wigner_point(rho: &FockDensity, x: f64, p: f64) -> f64 {
    let dim = rho.dim();
    let lnf = ln_factorials(dim);
    wigner_point_with(rho, x, p, &lnf)
}

fn wigner_point_with(rho: &FockDensity, x: f64, p: f64, lnf: &[f64]) -> f64 {
    let beta = C64::new(x, p);
    let dim = rho.dim();
    let d = displacement_elements(beta * 2.0, dim, lnf);
    let mut acc = C64::new(0.0, 0.0);
    for m in 0..dim {
        let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
        for n in 0..dim {
            acc += rho.element(m, n) * d[(n, m)] * parity;
        }
    }
    acc.re * 2.0 / std::f64::consts::PI
}

/// Wigner function on the Cartesian grid xs × ps; entry (i, j) = W(xs[i], ps[j]).
pub fn wigner_grid(rho: &FockDensity, xs: &[f64], ps: &[f64]) -> DMatrix<f64> {
    let lnf = ln_factorials(rho.dim());
    DMatrix::from_fn(xs.len(), ps.len(), |i, j| wigner_point_with(rho, xs[i], ps[j], &lnf))
}
