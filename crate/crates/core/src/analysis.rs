//! Rates, relaxation times and power laws measured from trajectories.
//!
//! Scans integrate one trajectory per field offset `Q` in parallel and
//! compare the fitted decay rate with the closed-form prediction: `γ` for the
//! contact flow, `−u′(p∞)` for Glauber.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{self, DynamicsError, IntegratorConfig, Sampling, Termination, Trajectory};
use crate::hamiltonian::{self, Branch, ContactGenerator, CuspModel, FrontPoint, HamiltonianError};
use crate::ising_model::{self, ModelError, ShiftedState, Stability};

pub const MIN_FIT_POINTS: usize = 5;
pub const DEFAULT_MIN_R2: f64 = 0.999;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {needed} points in the fit window, found {found}")]
    InsufficientPoints { needed: usize, found: usize },
    #[error("log-log fit needs positive data (x = {x}, y = {y})")]
    NonPositive { x: f64, y: f64 },
    #[error("deviation never entered the band [{lo:e}, {hi:e}] (smallest deviation {smallest:e})")]
    BandNeverEntered { lo: f64, hi: f64, smallest: f64 },
    #[error("decay is not exponential in the fit band (r² = {r_squared:.6})")]
    Nonlinear { r_squared: f64 },
    #[error("no metastable equilibrium at Q = {q:e}")]
    NoMetastable { q: f64 },
    #[error("Q = {q:e} is outside the admissible range ({reason})")]
    OutOfRange { q: f64, reason: String },
    #[error("integration stopped early: {0}")]
    Integration(Termination),
    #[error("fitted rate is not positive ({rate:e})")]
    NonPositiveRate { rate: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Least squares `y ≈ X·c`, returning `c` and `r²`.
fn least_squares(columns: &[Vec<f64>], ys: &[f64]) -> (Vec<f64>, f64) {
    let n = ys.len();
    let x = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    let y = DVector::from_column_slice(ys);
    let coeffs = x
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .expect("SVD with both factors");
    let residual = &y - &x * &coeffs;
    let mean = ys.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = ys.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res = residual.norm_squared();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (coeffs.iter().copied().collect(), r2)
}

/// Ordinary least squares of `ln y` on `ln x`, for points with `x` in `window`.
pub fn fit_loglog(
    xs: &[f64],
    ys: &[f64],
    window: Option<(f64, f64)>,
) -> Result<PowerLawFit, AnalysisError> {
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if x < lo || x > hi {
            continue;
        }
        if !(x > 0.0 && y > 0.0) {
            return Err(AnalysisError::NonPositive { x, y });
        }
        lx.push(x.ln());
        ly.push(y.ln());
    }
    if lx.len() < MIN_FIT_POINTS {
        return Err(AnalysisError::InsufficientPoints {
            needed: MIN_FIT_POINTS,
            found: lx.len(),
        });
    }
    let window = (
        lx.iter().copied().fold(f64::INFINITY, f64::min).exp(),
        lx.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp(),
    );
    let points = lx.len();
    let (c, r_squared) = least_squares(&[vec![1.0; points], lx], &ly);
    Ok(PowerLawFit {
        exponent: c[1],
        prefactor: c[0].exp(),
        r_squared,
        window,
        points,
    })
}

/// Deviation band used for exponential rate fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Default for Band {
    fn default() -> Self {
        Self { lo: 1e-9, hi: 1e-3 }
    }
}

/// Shape assumed for `|x(t) − x∞|` inside the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayModel {
    /// `ln|Δ| = c − rate·t`.
    Exponential,
    /// `ln|Δ| = c − rate·t + k·ln t`, for the `t·e^{−γt}` decay of a resonantly forced mode.
    ResonantExponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub band: Band,
    pub model: DecayModel,
    pub min_r2: f64,
}

impl Default for RateFit {
    fn default() -> Self {
        Self {
            band: Band::default(),
            model: DecayModel::Exponential,
            min_r2: DEFAULT_MIN_R2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub rate: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// Coefficient of `ln t`; zero for the plain exponential model.
    pub log_coefficient: f64,
}

/// Fits the decay rate of `|values − limit|` over the last contiguous run of samples inside the band.
pub fn fit_decay(
    times: &[f64],
    values: &[f64],
    limit: f64,
    fit: &RateFit,
) -> Result<RateEstimate, AnalysisError> {
    let dev: Vec<f64> = values.iter().map(|v| (v - limit).abs()).collect();
    let inside = |d: f64| d >= fit.band.lo && d <= fit.band.hi;
    let end = match dev.iter().rposition(|&d| inside(d)) {
        Some(i) => i + 1,
        None => {
            let smallest = dev.iter().copied().fold(f64::INFINITY, f64::min);
            return Err(AnalysisError::BandNeverEntered {
                lo: fit.band.lo,
                hi: fit.band.hi,
                smallest,
            });
        }
    };
    let mut start = dev[..end]
        .iter()
        .rposition(|&d| !inside(d))
        .map_or(0, |i| i + 1);
    if fit.model == DecayModel::ResonantExponential {
        while start < end && times[start] <= 0.0 {
            start += 1;
        }
    }
    let (ts, ds) = (&times[start..end], &dev[start..end]);
    if ts.len() < MIN_FIT_POINTS {
        return Err(AnalysisError::InsufficientPoints {
            needed: MIN_FIT_POINTS,
            found: ts.len(),
        });
    }
    let ly: Vec<f64> = ds.iter().map(|d| d.ln()).collect();
    let mut columns = vec![vec![1.0; ts.len()], ts.to_vec()];
    if fit.model == DecayModel::ResonantExponential {
        columns.push(ts.iter().map(|t| t.ln()).collect());
    }
    let (c, r_squared) = least_squares(&columns, &ly);
    if r_squared < fit.min_r2 {
        return Err(AnalysisError::Nonlinear { r_squared });
    }
    Ok(RateEstimate {
        rate: -c[1],
        r_squared,
        window: (ts[0], ts[ts.len() - 1]),
        points: ts.len(),
        log_coefficient: c.get(2).copied().unwrap_or(0.0),
    })
}

/// [`fit_decay`] on one observable of a trajectory.
pub fn estimate_rate<S>(
    traj: &Trajectory<S>,
    observe: impl Fn(&S) -> f64,
    limit: f64,
    fit: &RateFit,
) -> Result<RateEstimate, AnalysisError> {
    let values = traj.map(observe);
    fit_decay(&traj.times, &values, limit, fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelaxationKind {
    Glauber,
    Contact,
}

impl std::fmt::Display for RelaxationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RelaxationKind::Glauber => "glauber",
            RelaxationKind::Contact => "contact",
        })
    }
}

impl std::str::FromStr for RelaxationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "glauber" => Ok(RelaxationKind::Glauber),
            "contact" => Ok(RelaxationKind::Contact),
            other => Err(format!(
                "unknown dynamics '{other}' (expected glauber or contact)"
            )),
        }
    }
}

/// How each scan point is started, integrated and fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSetup {
    /// Base integrator settings; `t_max` is replaced by `horizon / rate_theory`.
    pub integrator: IntegratorConfig,
    /// Offset added to the limiting `p` or `P`.
    pub perturbation: f64,
    /// Contact only: `Z0 = z_factor·Z∞`. `1.0` is the pure exponential start.
    pub z_factor: f64,
    pub horizon: f64,
    pub band: Band,
    /// `None` picks [`DecayModel::ResonantExponential`] for contact starts off `Z∞`.
    pub decay_model: Option<DecayModel>,
    pub min_r2: f64,
}

impl Default for ScanSetup {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            perturbation: 1e-4,
            z_factor: 1.5,
            horizon: 30.0,
            band: Band::default(),
            decay_model: None,
            min_r2: DEFAULT_MIN_R2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationResult {
    pub kind: RelaxationKind,
    /// Field offset `Q = q − q*`.
    pub q: f64,
    /// Limiting state; `z` is unused (zero) for Glauber, `p` is the shifted `P∞` for contact
    /// and the unshifted `p∞` for Glauber.
    pub limit: FrontPoint,
    pub initial: (f64, f64),
    pub rate_measured: f64,
    pub rate_theory: f64,
    pub tau: f64,
    pub tau_theory: f64,
    pub fit_window: (f64, f64),
    pub fit_r2: f64,
}

impl RelaxationResult {
    pub fn rate_ratio(&self) -> f64 {
        self.rate_measured / self.rate_theory
    }
}

/// Metastable Glauber equilibrium `p∞ > p*` at `q = q* + Q`.
pub fn glauber_metastable(model: &CuspModel, q: f64) -> Result<f64, AnalysisError> {
    let sp = &model.spinodal;
    if !(q > 0.0 && q < -2.0 * sp.q_star) {
        return Err(AnalysisError::OutOfRange {
            q,
            reason: format!("Glauber needs 0 < Q < {:e}", -2.0 * sp.q_star),
        });
    }
    ising_model::glauber_equilibria(sp.q_star + q, &model.params)?
        .into_iter()
        .filter(|e| e.p > sp.p_star && e.stability == Stability::Stable)
        .map(|e| e.p)
        .reduce(f64::min)
        .ok_or(AnalysisError::NoMetastable { q })
}

/// `−u′(p∞) = 1 − bβ(1 − p∞²)`.
pub fn glauber_rate_theory(model: &CuspModel, p_inf: f64) -> f64 {
    1.0 - model.params.coupling() * (1.0 - p_inf * p_inf)
}

fn check_contact_q(model: &CuspModel, q: f64) -> Result<(), AnalysisError> {
    let limit = model
        .front
        .q_validity()
        .min(model.hamiltonian.domain_radius());
    if !(q > 0.0 && q < limit) {
        return Err(AnalysisError::OutOfRange {
            q,
            reason: format!("contact needs 0 < Q < {limit:e}"),
        });
    }
    Ok(())
}

/// Analytic rate at each `Q`, no integration.
pub fn theory_rates(
    kind: RelaxationKind,
    model: &CuspModel,
    grid: &[f64],
) -> Result<Vec<f64>, AnalysisError> {
    grid.iter()
        .map(|&q| match kind {
            RelaxationKind::Glauber => {
                Ok(glauber_rate_theory(model, glauber_metastable(model, q)?))
            }
            RelaxationKind::Contact => {
                check_contact_q(model, q)?;
                Ok(hamiltonian::gamma(&model.hamiltonian, &model.front, q)?)
            }
        })
        .collect()
}

fn horizon_config(setup: &ScanSetup, rate: f64) -> IntegratorConfig {
    let mut cfg = setup.integrator.clone().with_t_max(setup.horizon / rate);
    cfg.dt_init = cfg.dt_init.min(0.01 / rate);
    if !matches!(cfg.sampling, Sampling::Steps(_)) {
        cfg.sampling = Sampling::Steps(1);
    }
    cfg
}

fn rate_fit(setup: &ScanSetup, model: DecayModel) -> RateFit {
    RateFit {
        band: setup.band,
        model: setup.decay_model.unwrap_or(model),
        min_r2: setup.min_r2,
    }
}

fn finish(
    kind: RelaxationKind,
    q: f64,
    limit: FrontPoint,
    initial: (f64, f64),
    est: RateEstimate,
    theory: f64,
) -> Result<RelaxationResult, AnalysisError> {
    if !(est.rate > 0.0) {
        return Err(AnalysisError::NonPositiveRate { rate: est.rate });
    }
    Ok(RelaxationResult {
        kind,
        q,
        limit,
        initial,
        rate_measured: est.rate,
        rate_theory: theory,
        tau: 1.0 / est.rate,
        tau_theory: 1.0 / theory,
        fit_window: est.window,
        fit_r2: est.r_squared,
    })
}

/// Glauber relaxation from `p∞ + perturbation` at field offset `Q`.
pub fn measure_glauber_rate(
    model: &CuspModel,
    q: f64,
    setup: &ScanSetup,
) -> Result<RelaxationResult, AnalysisError> {
    let p_inf = glauber_metastable(model, q)?;
    let theory = glauber_rate_theory(model, p_inf);
    let p0 = p_inf + setup.perturbation;
    let cfg = horizon_config(setup, theory);
    let q_field = model.spinodal.q_star + q;
    let traj = dynamics::integrate_glauber_near(p0, q_field, &model.params, &cfg, p_inf)?;
    if !traj.is_completed() {
        return Err(AnalysisError::Integration(traj.termination));
    }
    let est = estimate_rate(
        &traj,
        |p| *p,
        p_inf,
        &rate_fit(setup, DecayModel::Exponential),
    )?;
    let limit = FrontPoint {
        z: 0.0,
        q: q_field,
        p: p_inf,
    };
    finish(RelaxationKind::Glauber, q, limit, (0.0, p0), est, theory)
}

/// Contact relaxation at `Q` from an explicit `(Z0, P0)`.
pub fn measure_contact_rate_from(
    model: &CuspModel,
    q: f64,
    z0: f64,
    p0: f64,
    setup: &ScanSetup,
) -> Result<RelaxationResult, AnalysisError> {
    check_contact_q(model, q)?;
    let h = &model.hamiltonian;
    let limit = h.equilibrium(q, Branch::Metastable)?;
    let theory = hamiltonian::gamma(h, &model.front, q)?;
    let cfg = horizon_config(setup, theory);
    let traj = dynamics::integrate_contact_near(z0, p0, q, h, &cfg, (limit.z, limit.p))?;
    if !traj.is_completed() {
        return Err(AnalysisError::Integration(traj.termination));
    }
    let shape = if z0 == limit.z {
        DecayModel::Exponential
    } else {
        DecayModel::ResonantExponential
    };
    let est = estimate_rate(
        &traj,
        |s: &ShiftedState| s.p,
        limit.p,
        &rate_fit(setup, shape),
    )?;
    finish(RelaxationKind::Contact, q, limit, (z0, p0), est, theory)
}

/// Contact relaxation from `(z_factor·Z∞, P∞ + perturbation)`.
pub fn measure_contact_rate(
    model: &CuspModel,
    q: f64,
    setup: &ScanSetup,
) -> Result<RelaxationResult, AnalysisError> {
    check_contact_q(model, q)?;
    let limit = model.hamiltonian.equilibrium(q, Branch::Metastable)?;
    measure_contact_rate_from(
        model,
        q,
        setup.z_factor * limit.z,
        limit.p + setup.perturbation,
        setup,
    )
}

/// One relaxation measurement per `Q`, in grid order. Failures are kept per entry.
pub fn relaxation_scan(
    kind: RelaxationKind,
    model: &CuspModel,
    grid: &[f64],
    setup: &ScanSetup,
) -> Vec<Result<RelaxationResult, AnalysisError>> {
    grid.par_iter()
        .map(|&q| match kind {
            RelaxationKind::Glauber => measure_glauber_rate(model, q, setup),
            RelaxationKind::Contact => measure_contact_rate(model, q, setup),
        })
        .collect()
}

/// Power law of the measured `τ` against `Q`.
pub fn scaling_exponent(results: &[RelaxationResult]) -> Result<PowerLawFit, AnalysisError> {
    let qs: Vec<f64> = results.iter().map(|r| r.q).collect();
    let taus: Vec<f64> = results.iter().map(|r| r.tau).collect();
    fit_loglog(&qs, &taus, None)
}

/// Power law of the analytic `τ = 1/rate` against `Q`.
pub fn theory_scaling_exponent(
    kind: RelaxationKind,
    model: &CuspModel,
    grid: &[f64],
) -> Result<PowerLawFit, AnalysisError> {
    let taus: Vec<f64> = theory_rates(kind, model, grid)?
        .iter()
        .map(|r| 1.0 / r)
        .collect();
    fit_loglog(grid, &taus, None)
}

/// `n` points spaced evenly in `log10` between `lo` and `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
                .collect()
        }
    }
}

/// Initial conditions and window for the `Q = 0` power-law runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CuspSetup {
    pub integrator: IntegratorConfig,
    pub contact_z0: f64,
    pub contact_p0: f64,
    pub glauber_p0: f64,
    pub t_window: (f64, f64),
    pub per_decade: usize,
}

impl Default for CuspSetup {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            contact_z0: 0.05,
            contact_p0: 0.01,
            glauber_p0: 0.2,
            t_window: (1e2, 1e5),
            per_decade: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CuspPowerLaw {
    pub kind: RelaxationKind,
    pub fit: PowerLawFit,
    /// `a` for contact, `1/η` for Glauber.
    pub reference_prefactor: f64,
    pub times: Vec<f64>,
    /// `|P(t)|` at the sampled times.
    pub deviations: Vec<f64>,
}

/// Fit of `|P(t)| ∼ t^k` at `Q = 0`.
pub fn cusp_power_law(
    kind: RelaxationKind,
    model: &CuspModel,
    setup: &CuspSetup,
) -> Result<CuspPowerLaw, AnalysisError> {
    let (t_lo, t_hi) = setup.t_window;
    if !(t_lo > 0.0 && t_hi > t_lo) {
        return Err(DynamicsError::Config(format!("bad fit window ({t_lo}, {t_hi})")).into());
    }
    let first = (t_lo / 1e3).min(1.0);
    let cfg = setup
        .integrator
        .clone()
        .with_t_max(t_hi)
        .with_sampling(Sampling::Geometric {
            first,
            per_decade: setup.per_decade,
        });
    let sp = &model.spinodal;
    let (times, deviations, reference, termination) = match kind {
        RelaxationKind::Glauber => {
            let p0 = sp.p_star + setup.glauber_p0;
            let traj =
                dynamics::integrate_glauber_near(p0, sp.q_star, &model.params, &cfg, sp.p_star)?;
            let dev = traj.map(|p| (p - sp.p_star).abs());
            (traj.times, dev, 1.0 / sp.eta, traj.termination)
        }
        RelaxationKind::Contact => {
            let h = &model.hamiltonian;
            let traj =
                dynamics::integrate_contact(setup.contact_z0, setup.contact_p0, 0.0, h, &cfg)?;
            let dev = traj.map(|s| s.p.abs());
            (traj.times, dev, h.a(), traj.termination)
        }
    };
    if !termination.is_completed() {
        return Err(AnalysisError::Integration(termination));
    }
    let fit = fit_loglog(&times, &deviations, Some(setup.t_window))?;
    Ok(CuspPowerLaw {
        kind,
        fit,
        reference_prefactor: reference,
        times,
        deviations,
    })
}

/// `I(t) = (P(t) − P∞)/H(Z(t), Q∞)` along a contact trajectory and its power law on `window`.
pub fn i_growth<G: ContactGenerator>(
    traj: &Trajectory<ShiftedState>,
    h: &G,
    limit: &FrontPoint,
    window: (f64, f64),
) -> Result<(PowerLawFit, Vec<(f64, f64)>), AnalysisError> {
    let series: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t > 0.0)
        .map(|(&t, s)| (t, (s.p - limit.p) / h.evaluate(s.z, limit.q).h))
        .collect();
    let (ts, is): (Vec<f64>, Vec<f64>) = series.iter().map(|&(t, i)| (t, i.abs())).unzip();
    Ok((fit_loglog(&ts, &is, Some(window))?, series))
}

/// Residual of the Hamiltonian along the series front, with its rounding floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontResidualSample {
    pub p: f64,
    pub residual: f64,
    pub floor: f64,
}

impl FrontResidualSample {
    /// The residual is distinguishable from rounding error.
    pub fn resolved(&self) -> bool {
        self.residual.abs() > self.floor
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontResidualFit {
    pub samples: Vec<FrontResidualSample>,
    /// Slope over the resolved samples; `None` if fewer than five are resolved.
    pub fit: Option<PowerLawFit>,
}

impl FrontResidualFit {
    pub fn resolved_count(&self) -> usize {
        self.samples.iter().filter(|s| s.resolved()).count()
    }
}

/// Log-log slope of `|H(Z(P), Q(P))|` against `P` for `n` log-spaced `P` in `range` (positive `P`).
pub fn front_residual_slope(model: &CuspModel, range: (f64, f64), n: usize) -> FrontResidualFit {
    let samples: Vec<FrontResidualSample> = logspace(range.0, range.1, n)
        .into_iter()
        .map(|p| {
            let (residual, scale) = model.front_residual_with_scale(p);
            FrontResidualSample {
                p,
                residual,
                floor: 64.0 * f64::EPSILON * scale,
            }
        })
        .collect();
    let (ps, rs): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|s| s.resolved())
        .map(|s| (s.p, s.residual.abs()))
        .unzip();
    let fit = fit_loglog(&ps, &rs, None).ok();
    FrontResidualFit { samples, fit }
}

/// Grid and finite-difference settings for [`no_go_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoGoGrid {
    pub fd_step: f64,
    pub second_difference_tol: f64,
    /// Points per axis on each nested grid.
    pub points: usize,
    /// Each nested grid halves the previous radius.
    pub levels: usize,
    /// Front check over `P ∈ front_range` (both signs).
    pub front_range: (f64, f64),
}

impl Default for NoGoGrid {
    fn default() -> Self {
        Self {
            fd_step: 1e-5,
            second_difference_tol: 1e-8,
            points: 41,
            levels: 8,
            front_range: (1e-3, 1e-1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoGoReport {
    pub d2h_dq2: f64,
    pub d2h_dzdq: f64,
    pub tolerance: f64,
    pub r02_vanishes: bool,
    pub r11_vanishes: bool,
    /// Smallest `C` with `|∂H/∂Z| ≤ C(|Z| + Q²)` on the fitting grids.
    pub bound_constant: f64,
    /// Largest ratio on the interleaved check grids.
    pub check_ratio: f64,
    pub bound_holds: bool,
    /// Largest ratio at front points.
    pub front_ratio: f64,
    pub front_bounded: bool,
    /// Lower-bound exponent for `τ` implied by the estimate along the front.
    pub implied_tau_exponent: f64,
}

impl NoGoReport {
    pub fn passed(&self) -> bool {
        self.r02_vanishes && self.r11_vanishes && self.bound_holds && self.front_bounded
    }
}

fn grid_ratio_max<G: ContactGenerator>(h: &G, radius: f64, points: usize, offset: f64) -> f64 {
    let mut worst: f64 = 0.0;
    let n = points.max(2);
    for i in 0..n {
        for j in 0..n {
            let z = radius * (-1.0 + 2.0 * (i as f64 + offset) / (n - 1) as f64);
            let q = radius * (-1.0 + 2.0 * (j as f64 + offset) / (n - 1) as f64);
            let denom = z.abs() + q * q;
            if denom == 0.0 || !h.contains(z, q) {
                continue;
            }
            worst = worst.max(h.evaluate(z, q).dh_dz.abs() / denom);
        }
    }
    worst
}

/// Checks the consequences of the No-Go argument: no `Q²` or `ZQ` monomials in `H`
/// and the weighted estimate on `∂H/∂Z`.
pub fn no_go_report<G: ContactGenerator>(h: &G, model: &CuspModel, grid: &NoGoGrid) -> NoGoReport {
    let e = grid.fd_step;
    let f = |z: f64, q: f64| h.evaluate(z, q).h;
    let d2h_dq2 = (f(0.0, e) - 2.0 * f(0.0, 0.0) + f(0.0, -e)) / (e * e);
    let d2h_dzdq = (f(e, e) - f(e, -e) - f(-e, e) + f(-e, -e)) / (4.0 * e * e);

    let radius = h.domain_radius();
    let scales: Vec<f64> = (0..grid.levels)
        .map(|k| radius * 0.5f64.powi(k as i32))
        .collect();
    let bound_constant = scales
        .iter()
        .map(|&r| grid_ratio_max(h, r, grid.points, 0.0))
        .fold(0.0, f64::max);
    let check_ratio = scales
        .iter()
        .map(|&r| grid_ratio_max(h, r * 0.999, grid.points - 1, 0.5))
        .fold(0.0, f64::max);

    let ps = logspace(grid.front_range.0, grid.front_range.1, 50);
    let front_ratio = ps
        .iter()
        .flat_map(|&p| [p, -p])
        .map(|p| model.front.point(p))
        .filter(|pt| h.contains(pt.z, pt.q))
        .map(|pt| h.evaluate(pt.z, pt.q).dh_dz.abs() / (pt.z.abs() + pt.q * pt.q))
        .fold(0.0, f64::max);

    NoGoReport {
        d2h_dq2,
        d2h_dzdq,
        tolerance: grid.second_difference_tol,
        r02_vanishes: d2h_dq2.abs() < grid.second_difference_tol,
        r11_vanishes: d2h_dzdq.abs() < grid.second_difference_tol,
        bound_constant,
        check_ratio,
        bound_holds: check_ratio <= bound_constant * (1.0 + 1e-9),
        front_ratio,
        front_bounded: front_ratio <= bound_constant * (1.0 + 1e-9),
        implied_tau_exponent: -1.5,
    }
}

/// `τ` strictly decreasing along increasing `Q`.
pub fn tau_is_monotone(results: &[RelaxationResult]) -> bool {
    results
        .windows(2)
        .all(|w| w[0].q < w[1].q && w[1].tau < w[0].tau)
}
