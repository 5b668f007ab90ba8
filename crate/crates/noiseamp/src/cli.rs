//! Command back ends for the `noiseamp` binary: JSON run configurations,
//! figure-reproduction recipes and deterministic CSV/JSON emission.
//!
//! Exit-code contract: 0 success, 2 configuration error, 3 validation gap,
//! 4 herald impossible. Every command is a pure function of (config, seed),
//! so reruns produce byte-identical files.

use std::fmt;
use std::fs;
use std::path::Path;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    mean_amplitude_amplified, mu_amplified, mu_coherent, success_probability, AmplifierParams,
};
use crate::error::Error;
use crate::fock::{
    choose_cutoff, coherent_state, condition_on_click, displaced_thermal_with_tol, wigner_grid,
    CutoffPolicy, FockDensity, HERALD_FLOOR,
};
use crate::phase::{gain_and_gamma, holevo_variance, phase_distribution};
use crate::pipeline::{amplify_exact, report_to_csv, validate_grid, MCConfig};
use crate::tomo::{fidelity, maxlik_reconstruct, sample_homodyne, TomoConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_HERALD: i32 = 4;

/// Relative tolerance for the sweep's random oracle spot checks.
pub const SWEEP_SPOT_CHECK_TOL: f64 = 1e-5;

/// Command failure carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::HeraldImpossible { .. } => EXIT_HERALD,
            _ => EXIT_CONFIG,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { code: EXIT_CONFIG, message: e.to_string() }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError { code: EXIT_CONFIG, message: e.to_string() }
    }
}

pub type CliResult = std::result::Result<(), CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError { code: EXIT_CONFIG, message: msg.into() }
}

/// Parses one command's configuration document from a JSON file, rejecting
/// unknown fields so typos surface as exit 2 rather than silent defaults.
pub fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| config_err(format!("bad config {}: {e}", path.display())))
}

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out)
        .map_err(|e| config_err(format!("cannot create {}: {e}", out.display())))
}

fn fmt17(v: f64) -> String {
    format!("{v:.17e}")
}

/// `sweep` configuration: Γ, gain and P_S versus added thermal noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Input coherent amplitude (real, phase-free by convention).
    pub alpha: f64,
    /// Grid of mean added thermal photon numbers.
    pub n_th: Vec<f64>,
    /// Subtraction orders to sweep.
    pub m_list: Vec<usize>,
    pub t: f64,
    pub eta: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Runs the noise sweep along the analytic path, spot-checking five random
/// grid points against the Fock oracle. Emits `sweep.csv` with header
/// `n_th,M,gamma,gain,ps`.
pub fn run_sweep(cfg: &SweepConfig, out: &Path, seed_override: Option<u64>) -> CliResult {
    if cfg.n_th.is_empty() || cfg.m_list.is_empty() {
        return Err(config_err("sweep needs nonempty n_th and m_list grids"));
    }
    let seed = seed_override.unwrap_or(cfg.seed);
    let alpha = C64::new(cfg.alpha, 0.0);
    let v_in = holevo_variance(mu_coherent(alpha));
    let mut grid = Vec::new();
    for &m in &cfg.m_list {
        for &n_th in &cfg.n_th {
            grid.push(AmplifierParams::new(alpha, n_th, cfg.t, cfg.eta, m));
        }
    }
    for p in &grid {
        p.validate()?;
    }
    let mut csv = String::from("n_th,M,gamma,gain,ps\n");
    let mut analytic_rows = Vec::with_capacity(grid.len());
    for p in &grid {
        let ps = success_probability(p)?;
        let (mu, amp) = if ps < HERALD_FLOOR {
            (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
        } else {
            (mu_amplified(p)?, mean_amplitude_amplified(p)?)
        };
        let gamma = holevo_variance(mu) / v_in;
        let gain = amp.norm() / p.alpha.norm();
        analytic_rows.push((ps, mu));
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt17(p.n_th),
            p.m,
            fmt17(gamma),
            fmt17(gain),
            fmt17(ps)
        ));
    }
    // oracle spot checks at five seeded random grid points
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let policy = CutoffPolicy { tail_tol: 1e-13, hard_max: 512 };
    for _ in 0..5 {
        let i = rng.gen_range(0..grid.len());
        let (ps, mu) = analytic_rows[i];
        if ps < HERALD_FLOOR {
            continue;
        }
        let exact = amplify_exact(&grid[i], &policy)?;
        let gap = ((ps - exact.success_prob).abs() / exact.success_prob)
            .max((mu.norm() - exact.stats.mu().norm()).abs() / exact.stats.mu().norm());
        if gap > SWEEP_SPOT_CHECK_TOL {
            return Err(CliError {
                code: EXIT_VALIDATION,
                message: format!(
                    "oracle spot check failed at n_th={}, M={}: relative gap {gap:.3e}",
                    grid[i].n_th, grid[i].m
                ),
            });
        }
    }
    ensure_out_dir(out)?;
    fs::write(out.join("sweep.csv"), csv)?;
    Ok(())
}

/// Wigner grid specification for `amplify`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSpec {
    pub half_width: f64,
    pub points: usize,
}

impl Default for WignerSpec {
    fn default() -> Self {
        Self { half_width: 2.0, points: 81 }
    }
}

/// `amplify` configuration: one operating point, several subtraction orders.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifyConfig {
    pub alpha: f64,
    pub n_th: f64,
    pub t: f64,
    pub eta: f64,
    pub m_list: Vec<usize>,
    #[serde(default)]
    pub wigner: WignerSpec,
}

fn write_state_bundle(
    out: &Path,
    tag: &str,
    state: &FockDensity,
    stats_json: &str,
    wig: &WignerSpec,
) -> CliResult {
    let state_json = serde_json::to_string_pretty(state)?;
    fs::write(out.join(format!("{tag}_state.json")), state_json)?;
    fs::write(out.join(format!("{tag}_stats.json")), stats_json)?;
    if wig.points >= 2 {
        let axis: Vec<f64> = (0..wig.points)
            .map(|i| -wig.half_width + 2.0 * wig.half_width * i as f64 / (wig.points - 1) as f64)
            .collect();
        let w = wigner_grid(state, &axis, &axis);
        let mut csv = String::from("x,p,w\n");
        for (i, &x) in axis.iter().enumerate() {
            for (j, &p) in axis.iter().enumerate() {
                csv.push_str(&format!("{},{},{}\n", fmt17(x), fmt17(p), fmt17(w[(i, j)])));
            }
        }
        fs::write(out.join(format!("{tag}_wigner.csv")), csv)?;
    }
    Ok(())
}

/// Runs the heralded amplifier at one operating point and emits, for the
/// input state and each requested M, a state JSON, a Wigner CSV and a
/// phase-statistics JSON.
pub fn run_amplify(cfg: &AmplifyConfig, out: &Path) -> CliResult {
    let alpha = C64::new(cfg.alpha, 0.0);
    if alpha.norm() == 0.0 {
        return Err(config_err("amplify needs a nonvacuum input amplitude"));
    }
    let policy = CutoffPolicy::default();
    for &m in &cfg.m_list {
        AmplifierParams::new(alpha, cfg.n_th, cfg.t, cfg.eta, m).validate()?;
    }
    ensure_out_dir(out)?;
    let cutoff = choose_cutoff(alpha, cfg.n_th, &policy)?;
    let input = coherent_state(alpha, cutoff + 1)?;
    let input_stats = gain_and_gamma(&input, alpha)?;
    write_state_bundle(
        out,
        "input",
        &input,
        &serde_json::to_string_pretty(&input_stats)?,
        &cfg.wigner,
    )?;
    let noisy = displaced_thermal_with_tol(alpha, cfg.n_th, cutoff + 1, policy.tail_tol)?;
    let noisy_stats = gain_and_gamma(&noisy, alpha)?;
    write_state_bundle(
        out,
        "noisy",
        &noisy,
        &serde_json::to_string_pretty(&noisy_stats)?,
        &cfg.wigner,
    )?;
    for &m in &cfg.m_list {
        let heralded = condition_on_click(&noisy, cfg.t, cfg.eta, m).map_err(|e| {
            if matches!(e, Error::HeraldImpossible { .. }) {
                CliError {
                    code: EXIT_HERALD,
                    message: format!("herald impossible for M={m}: {e}"),
                }
            } else {
                e.into()
            }
        })?;
        let stats = gain_and_gamma(&heralded.state, alpha)?;
        #[derive(Serialize)]
        struct HeraldedStats<'a> {
            success_prob: f64,
            #[serde(flatten)]
            stats: &'a crate::phase::PhaseStats,
        }
        let doc = serde_json::to_string_pretty(&HeraldedStats {
            success_prob: heralded.success_prob,
            stats: &stats,
        })?;
        write_state_bundle(out, &format!("m{m}"), &heralded.state, &doc, &cfg.wigner)?;
    }
    Ok(())
}

/// `phase-dist` configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDistConfig {
    pub alpha: f64,
    pub n_th: f64,
    pub t: f64,
    pub eta: f64,
    pub m_list: Vec<usize>,
    #[serde(default = "default_theta_points")]
    pub theta_points: usize,
}

fn default_theta_points() -> usize {
    2048
}

/// Emits the canonical phase distribution of the input, the noisy state and
/// each heralded state as one CSV per state with header `theta,p`.
pub fn run_phase_dist(cfg: &PhaseDistConfig, out: &Path) -> CliResult {
    let alpha = C64::new(cfg.alpha, 0.0);
    if cfg.theta_points < 8 {
        return Err(config_err("theta_points must be at least 8"));
    }
    let policy = CutoffPolicy::default();
    for &m in &cfg.m_list {
        AmplifierParams::new(alpha, cfg.n_th, cfg.t, cfg.eta, m).validate()?;
    }
    ensure_out_dir(out)?;
    let thetas: Vec<f64> = (0..cfg.theta_points)
        .map(|i| {
            -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / cfg.theta_points as f64
        })
        .collect();
    let write_dist = |tag: &str, rho: &FockDensity| -> CliResult {
        let p = phase_distribution(rho, &thetas);
        let mut csv = String::from("theta,p\n");
        for (th, v) in thetas.iter().zip(p.iter()) {
            csv.push_str(&format!("{},{}\n", fmt17(*th), fmt17(*v)));
        }
        fs::write(out.join(format!("{tag}_phase.csv")), csv)?;
        Ok(())
    };
    let cutoff = choose_cutoff(alpha, cfg.n_th, &policy)?;
    let input = coherent_state(alpha, cutoff + 1)?;
    write_dist("input", &input)?;
    let noisy = displaced_thermal_with_tol(alpha, cfg.n_th, cutoff + 1, policy.tail_tol)?;
    write_dist("noisy", &noisy)?;
    for &m in &cfg.m_list {
        let heralded = condition_on_click(&noisy, cfg.t, cfg.eta, m).map_err(|e| {
            if matches!(e, Error::HeraldImpossible { .. }) {
                CliError {
                    code: EXIT_HERALD,
                    message: format!("herald impossible for M={m}: {e}"),
                }
            } else {
                e.into()
            }
        })?;
        write_dist(&format!("m{m}"), &heralded.state)?;
    }
    Ok(())
}

/// `tomo` configuration: simulate homodyne records of a coherent state and
/// reconstruct it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomoRunConfig {
    pub alpha: f64,
    pub n_samples: usize,
    #[serde(default = "default_eta_hd")]
    pub eta_hd: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reconstruction: Option<TomoConfig>,
}

fn default_eta_hd() -> f64 {
    1.0
}

#[derive(Serialize)]
struct TomoSummary {
    fidelity: f64,
    iterations: usize,
    final_log_likelihood: f64,
    regularized_bins: usize,
}

/// Samples homodyne records, reconstructs the state by MaxLik and reports
/// the fidelity to the true state. Emits `records.csv`, `reconstructed.json`
/// and `tomo_summary.json`.
pub fn run_tomo(cfg: &TomoRunConfig, out: &Path, seed_override: Option<u64>) -> CliResult {
    let seed = seed_override.unwrap_or(cfg.seed);
    let mut tomo_cfg = cfg.reconstruction.unwrap_or_else(|| TomoConfig {
        eta_hd: cfg.eta_hd,
        ..TomoConfig::default()
    });
    tomo_cfg.eta_hd = cfg.eta_hd;
    tomo_cfg.validate().map_err(CliError::from)?;
    let truth = coherent_state(C64::new(cfg.alpha, 0.0), tomo_cfg.dim)?;
    let records = sample_homodyne(&truth, cfg.n_samples, cfg.eta_hd, seed)?;
    let result = maxlik_reconstruct(&records, &tomo_cfg)?;
    let f = fidelity(&result.state, &truth)?;
    ensure_out_dir(out)?;
    let mut csv = String::from("theta,x\n");
    for r in &records {
        csv.push_str(&format!("{},{}\n", fmt17(r.theta), fmt17(r.x)));
    }
    fs::write(out.join("records.csv"), csv)?;
    fs::write(
        out.join("reconstructed.json"),
        serde_json::to_string_pretty(&result.state)?,
    )?;
    fs::write(
        out.join("tomo_summary.json"),
        serde_json::to_string_pretty(&TomoSummary {
            fidelity: f,
            iterations: result.iterations,
            final_log_likelihood: result.final_log_likelihood,
            regularized_bins: result.regularized_bins,
        })?,
    )?;
    println!("tomography round-trip fidelity: {f:.6}");
    Ok(())
}

/// `validate` configuration: a cartesian parameter grid for the three-way
/// analytic / oracle / Monte Carlo cross-check.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub alpha: Vec<f64>,
    pub n_th: Vec<f64>,
    pub t: Vec<f64>,
    pub eta: Vec<f64>,
    pub m_list: Vec<usize>,
    pub mc_samples: u64,
    #[serde(default)]
    pub seed: u64,
}

/// Runs `validate_grid` over the cartesian product and emits
/// `validation.csv` plus `validation_report.json`. Any corrected-analytics
/// gap beyond 1e-6 exits 3.
pub fn run_validate(cfg: &ValidateConfig, out: &Path, seed_override: Option<u64>) -> CliResult {
    let mut grid = Vec::new();
    for &a in &cfg.alpha {
        for &n in &cfg.n_th {
            for &t in &cfg.t {
                for &e in &cfg.eta {
                    for &m in &cfg.m_list {
                        grid.push(AmplifierParams::new(C64::new(a, 0.0), n, t, e, m));
                    }
                }
            }
        }
    }
    if grid.is_empty() {
        return Err(config_err("validation grid is empty"));
    }
    for p in &grid {
        p.validate()?;
    }
    let mc = MCConfig {
        n_samples: cfg.mc_samples,
        seed: seed_override.unwrap_or(cfg.seed),
    };
    mc.validate()?;
    let report = validate_grid(&grid, &mc)?;
    ensure_out_dir(out)?;
    fs::write(out.join("validation.csv"), report_to_csv(&report))?;
    fs::write(
        out.join("validation_report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    if !report.all_within_tol {
        return Err(CliError {
            code: EXIT_VALIDATION,
            message: "analytic-vs-oracle gap exceeded 1e-6 on the grid".into(),
        });
    }
    Ok(())
}
