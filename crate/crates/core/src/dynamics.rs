//! Time integration of the Glauber ODE and of the triangular contact system
//!
//! ```text
//! ṗ = −p + tanh(β(q + b p))
//! Ż = H(Z, Q),   Ṗ = P·∂H/∂Z + ∂H/∂Q,   Q̇ = 0
//! ```
//!
//! plus the exact solution of the contact system at the cusp (`Q = 0`).
//!
//! The adaptive method is the Dormand–Prince 5(4) pair with per-component
//! mixed tolerances `atol + rtol·|y − y_ref|`. `y_ref` is zero for the plain
//! entry points; the `_near` variants measure it from a reference state so
//! that small deviations from an equilibrium keep relative accuracy.

use std::collections::hash_map::DefaultHasher;
use std::fmt::{self, Write as _};
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::hamiltonian::ContactGenerator;
use crate::ising_model::{self, ModelParams, ShiftedState};

/// Smallest accepted step, relative to the horizon.
pub const STEP_FLOOR: f64 = 1e-14;

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 5.0;
const MIN_SHRINK: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid integrator configuration: {0}")]
    Config(String),
    #[error("invalid initial condition: {0}")]
    Initial(String),
    #[error("closed-form cusp solution needs Z0 > 0 (got {z0})")]
    ClosedFormDomain { z0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Rk4Fixed,
    Rk45Adaptive,
}

/// Which states end up in the trajectory. `t = 0` and the final time are always kept.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampling {
    /// Every `n`-th accepted step.
    Steps(usize),
    /// `first·10^(k/per_decade)` for `k = 0, 1, …` up to `t_max`; steps land on these exactly.
    Geometric { first: f64, per_decade: usize },
    /// Explicit ascending times in `(0, t_max]`; steps land on these exactly.
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    /// Initial step (adaptive) or the fixed step (RK4).
    pub dt_init: f64,
    pub t_max: f64,
    /// Cap on attempted steps, accepted or rejected.
    pub max_steps: usize,
    pub sampling: Sampling,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45Adaptive,
            rtol: 1e-10,
            atol: 1e-12,
            dt_init: 1e-3,
            t_max: 100.0,
            max_steps: 10_000_000,
            sampling: Sampling::Steps(1),
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(dt: f64, t_max: f64) -> Self {
        Self {
            method: Method::Rk4Fixed,
            dt_init: dt,
            t_max,
            ..Self::default()
        }
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |msg: String| Err(DynamicsError::Config(msg));
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad(format!(
                "tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            ));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad(format!(
                "t_max must be positive and finite (got {})",
                self.t_max
            ));
        }
        if !(self.dt_init > 0.0) {
            return bad(format!("dt_init must be positive (got {})", self.dt_init));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        match &self.sampling {
            Sampling::Steps(0) => return bad("sampling stride must be at least 1".into()),
            Sampling::Geometric { first, per_decade } => {
                if !(*first > 0.0) || *per_decade == 0 {
                    return bad(format!("geometric sampling needs first > 0 and per_decade ≥ 1 (got {first}, {per_decade})"));
                }
            }
            Sampling::Times(ts) => {
                if ts.iter().any(|&t| !(t > 0.0 && t <= self.t_max)) {
                    return bad("sample times must lie in (0, t_max]".into());
                }
                if ts.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("sample times must be strictly increasing".into());
                }
            }
            Sampling::Steps(_) => {}
        }
        Ok(())
    }

    /// Stable fingerprint of the configuration for trajectory metadata.
    pub fn fingerprint(&self) -> u64 {
        let mut hasher = DefaultHasher::new();
        format!("{self:?}").hash(&mut hasher);
        hasher.finish()
    }

    fn sample_targets(&self) -> Vec<f64> {
        match &self.sampling {
            Sampling::Steps(_) => Vec::new(),
            Sampling::Geometric { first, per_decade } => {
                let mut out = Vec::new();
                let mut k = 0;
                loop {
                    let t = first * 10f64.powf(k as f64 / *per_decade as f64);
                    if t >= self.t_max * (1.0 - 1e-12) {
                        break;
                    }
                    out.push(t);
                    k += 1;
                }
                out
            }
            Sampling::Times(ts) => ts.iter().copied().filter(|&t| t < self.t_max).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DynamicsKind {
    Glauber,
    Contact,
    ContactZ,
}

impl DynamicsKind {
    fn header(self) -> &'static str {
        match self {
            DynamicsKind::Glauber => "t,p",
            DynamicsKind::Contact => "t,Z,Q,P",
            DynamicsKind::ContactZ => "t,Z",
        }
    }
}

impl fmt::Display for DynamicsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DynamicsKind::Glauber => "glauber",
            DynamicsKind::Contact => "contact",
            DynamicsKind::ContactZ => "contact-z",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub kind: DynamicsKind,
    pub description: String,
    pub config_hash: u64,
}

/// Why integration stopped. Everything but `Completed` leaves a partial trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    /// The contact state left the Hamiltonian's validity domain at time `t`.
    DomainEscape {
        t: f64,
    },
    /// Non-finite state, or `|p| ≥ 1` for Glauber.
    StateEscape {
        t: f64,
    },
    StepLimit {
        t: f64,
    },
    StepTooSmall {
        t: f64,
    },
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Completed => write!(f, "completed"),
            Termination::DomainEscape { t } => write!(f, "domain escape at t = {t:.6e}"),
            Termination::StateEscape { t } => write!(f, "state escape at t = {t:.6e}"),
            Termination::StepLimit { t } => write!(f, "step limit reached at t = {t:.6e}"),
            Termination::StepTooSmall { t } => write!(f, "step size underflow at t = {t:.6e}"),
        }
    }
}

/// A state that can be written as CSV columns after `t`.
pub trait StateRow {
    fn values(&self) -> Vec<f64>;
}

impl StateRow for f64 {
    fn values(&self) -> Vec<f64> {
        vec![*self]
    }
}

impl StateRow for ShiftedState {
    fn values(&self) -> Vec<f64> {
        vec![self.z, self.q, self.p]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub meta: TrajectoryMeta,
    pub termination: Termination,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> (f64, &S) {
        let n = self.times.len() - 1;
        (self.times[n], &self.states[n])
    }

    pub fn is_completed(&self) -> bool {
        self.termination.is_completed()
    }

    /// One scalar series per sample, e.g. `|P − P∞|`.
    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> Vec<T> {
        self.states.iter().map(f).collect()
    }
}

impl<S: StateRow> Trajectory<S> {
    /// Header row plus one line per sample, 17 significant digits, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(self.meta.kind.header());
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            write!(out, "{t:.16e}").unwrap();
            for v in s.values() {
                write!(out, ",{v:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

struct RawTrajectory<const D: usize> {
    times: Vec<f64>,
    states: Vec<[f64; D]>,
    termination: Termination,
}

fn error_norm<const D: usize>(
    err: &[f64; D],
    y0: &[f64; D],
    y1: &[f64; D],
    origin: &[f64; D],
    cfg: &IntegratorConfig,
) -> f64 {
    (0..D)
        .map(|i| {
            let size = (y0[i] - origin[i]).abs().max((y1[i] - origin[i]).abs());
            err[i].abs() / (cfg.atol + cfg.rtol * size)
        })
        .fold(0.0, f64::max)
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let s: f64 = terms.iter().map(|(c, k)| c * k[i]).sum();
        *o += h * s;
    }
    out
}

fn rk4_step<const D: usize>(f: &impl Fn(&[f64; D]) -> [f64; D], y: &[f64; D], h: f64) -> [f64; D] {
    let k1 = f(y);
    let k2 = f(&axpy(y, h, &[(0.5, &k1)]));
    let k3 = f(&axpy(y, h, &[(0.5, &k2)]));
    let k4 = f(&axpy(y, h, &[(1.0, &k3)]));
    axpy(
        y,
        h,
        &[
            (1.0 / 6.0, &k1),
            (1.0 / 3.0, &k2),
            (1.0 / 3.0, &k3),
            (1.0 / 6.0, &k4),
        ],
    )
}

/// One Dormand–Prince step from `y` with `k1 = f(y)`. Returns the 5th-order
/// solution, the embedded error estimate and `f` at the new point.
fn dopri_step<const D: usize>(
    f: &impl Fn(&[f64; D]) -> [f64; D],
    y: &[f64; D],
    k1: &[f64; D],
    h: f64,
) -> ([f64; D], [f64; D], [f64; D]) {
    let k2 = f(&axpy(y, h, &[(1.0 / 5.0, k1)]));
    let k3 = f(&axpy(y, h, &[(3.0 / 40.0, k1), (9.0 / 40.0, &k2)]));
    let k4 = f(&axpy(
        y,
        h,
        &[(44.0 / 45.0, k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)],
    ));
    let k5 = f(&axpy(
        y,
        h,
        &[
            (19372.0 / 6561.0, k1),
            (-25360.0 / 2187.0, &k2),
            (64448.0 / 6561.0, &k3),
            (-212.0 / 729.0, &k4),
        ],
    ));
    let k6 = f(&axpy(
        y,
        h,
        &[
            (9017.0 / 3168.0, k1),
            (-355.0 / 33.0, &k2),
            (46732.0 / 5247.0, &k3),
            (49.0 / 176.0, &k4),
            (-5103.0 / 18656.0, &k5),
        ],
    ));
    let y5 = axpy(
        y,
        h,
        &[
            (35.0 / 384.0, k1),
            (500.0 / 1113.0, &k3),
            (125.0 / 192.0, &k4),
            (-2187.0 / 6784.0, &k5),
            (11.0 / 84.0, &k6),
        ],
    );
    let k7 = f(&y5);
    let e = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let ks = [k1, &k2, &k3, &k4, &k5, &k6, &k7];
    let mut err = [0.0; D];
    for (i, out) in err.iter_mut().enumerate() {
        *out = h * e.iter().zip(ks.iter()).map(|(c, k)| c * k[i]).sum::<f64>();
    }
    (y5, err, k7)
}

/// Shared driver for autonomous systems. `check` flags a state that must stop the run.
fn drive<const D: usize>(
    f: impl Fn(&[f64; D]) -> [f64; D],
    check: impl Fn(&[f64; D], f64) -> Option<Termination>,
    y0: [f64; D],
    origin: [f64; D],
    cfg: &IntegratorConfig,
) -> RawTrajectory<D> {
    let targets = cfg.sample_targets();
    let stride = match cfg.sampling {
        Sampling::Steps(n) => n,
        _ => usize::MAX,
    };
    let floor = STEP_FLOOR * cfg.t_max;
    let mut out = RawTrajectory {
        times: vec![0.0],
        states: vec![y0],
        termination: Termination::Completed,
    };
    let mut t = 0.0;
    let mut y = y0;
    let mut k1 = f(&y);
    let mut h = cfg.dt_init.min(cfg.t_max);
    let mut next_target = 0;
    let mut attempts = 0usize;
    let mut accepted = 0usize;

    while t < cfg.t_max {
        if attempts >= cfg.max_steps {
            out.termination = Termination::StepLimit { t };
            break;
        }
        attempts += 1;
        let stop = targets.get(next_target).copied().unwrap_or(cfg.t_max);
        let lands = t + h >= stop * (1.0 - 1e-13) || stop - (t + h) < floor;
        let step = if lands { stop - t } else { h };

        let (y_new, norm, k_new) = match cfg.method {
            Method::Rk4Fixed => {
                let y_new = rk4_step(&f, &y, step);
                let k_new = f(&y_new);
                (y_new, 0.0, k_new)
            }
            Method::Rk45Adaptive => {
                let (y_new, err, k_new) = dopri_step(&f, &y, &k1, step);
                (y_new, error_norm(&err, &y, &y_new, &origin, cfg), k_new)
            }
        };

        if !norm.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            if cfg.method == Method::Rk4Fixed || step <= floor {
                out.termination = Termination::StateEscape { t };
                break;
            }
            h = step * MIN_SHRINK;
            continue;
        }
        if norm > 1.0 {
            let shrink = (SAFETY * norm.powf(-0.2)).max(MIN_SHRINK);
            h = step * shrink;
            if h < floor {
                out.termination = Termination::StepTooSmall { t };
                break;
            }
            continue;
        }

        let t_new = if lands { stop } else { t + step };
        if let Some(term) = check(&y_new, t_new) {
            out.termination = term;
            break;
        }
        t = t_new;
        y = y_new;
        k1 = k_new;
        accepted += 1;

        let at_target = lands && next_target < targets.len();
        if at_target {
            next_target += 1;
        }
        if at_target || accepted.is_multiple_of(stride) || t >= cfg.t_max {
            out.times.push(t);
            out.states.push(y);
        }

        if cfg.method == Method::Rk45Adaptive {
            let grow = if norm == 0.0 {
                MAX_GROWTH
            } else {
                (SAFETY * norm.powf(-0.2)).min(MAX_GROWTH)
            };
            h = if lands && step < h {
                h.max(step * grow)
            } else {
                step * grow
            };
        }
    }
    out
}

fn finish_meta(kind: DynamicsKind, description: String, cfg: &IntegratorConfig) -> TrajectoryMeta {
    let mut hasher = DefaultHasher::new();
    cfg.fingerprint().hash(&mut hasher);
    description.hash(&mut hasher);
    TrajectoryMeta {
        kind,
        description,
        config_hash: hasher.finish(),
    }
}

/// Glauber magnetization `p(t)` at fixed field `q`.
pub fn integrate_glauber(
    p0: f64,
    q: f64,
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<f64>, DynamicsError> {
    integrate_glauber_near(p0, q, params, cfg, 0.0)
}

/// As [`integrate_glauber`], with tolerances measured relative to `p_ref`.
pub fn integrate_glauber_near(
    p0: f64,
    q: f64,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    p_ref: f64,
) -> Result<Trajectory<f64>, DynamicsError> {
    cfg.validate()?;
    if !(p0.abs() < 1.0) || !q.is_finite() {
        return Err(DynamicsError::Initial(format!(
            "Glauber needs |p0| < 1 and finite q (got p0 = {p0}, q = {q})"
        )));
    }
    let params = *params;
    let raw = drive(
        move |y: &[f64; 1]| [ising_model::glauber_rhs(y[0], q, &params)],
        |y, t| (y[0].abs() >= 1.0).then_some(Termination::StateEscape { t }),
        [p0],
        [p_ref],
        cfg,
    );
    let description = format!("beta={} b={} q={q:e} p0={p0:e}", params.beta(), params.b());
    Ok(Trajectory {
        times: raw.times,
        states: raw.states.into_iter().map(|y| y[0]).collect(),
        meta: finish_meta(DynamicsKind::Glauber, description, cfg),
        termination: raw.termination,
    })
}

/// Joint `(Z, P)` integration of the triangular system at frozen `Q`.
pub fn integrate_contact<G: ContactGenerator>(
    z0: f64,
    p0: f64,
    q: f64,
    h: &G,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<ShiftedState>, DynamicsError> {
    integrate_contact_near(z0, p0, q, h, cfg, (0.0, 0.0))
}

/// As [`integrate_contact`], with tolerances measured relative to `(Z_ref, P_ref)`.
pub fn integrate_contact_near<G: ContactGenerator>(
    z0: f64,
    p0: f64,
    q: f64,
    h: &G,
    cfg: &IntegratorConfig,
    reference: (f64, f64),
) -> Result<Trajectory<ShiftedState>, DynamicsError> {
    cfg.validate()?;
    if !(z0.is_finite() && p0.is_finite() && q.is_finite()) {
        return Err(DynamicsError::Initial(format!(
            "non-finite initial state ({z0}, {q}, {p0})"
        )));
    }
    if !h.contains(z0, q) {
        return Err(DynamicsError::Initial(format!(
            "(Z0, Q) = ({z0:e}, {q:e}) lies outside the validity radius {:e}",
            h.domain_radius()
        )));
    }
    let raw = drive(
        |y: &[f64; 2]| {
            let ev = h.evaluate(y[0], q);
            [ev.h, y[1] * ev.dh_dz + ev.dh_dq]
        },
        |y, t| (!h.contains(y[0], q)).then_some(Termination::DomainEscape { t }),
        [z0, p0],
        [reference.0, reference.1],
        cfg,
    );
    let description = format!("Q={q:e} Z0={z0:e} P0={p0:e} radius={:e}", h.domain_radius());
    Ok(Trajectory {
        times: raw.times,
        states: raw
            .states
            .into_iter()
            .map(|y| ShiftedState {
                z: y[0],
                q,
                p: y[1],
            })
            .collect(),
        meta: finish_meta(DynamicsKind::Contact, description, cfg),
        termination: raw.termination,
    })
}

/// The autonomous `Ż = H(Z, Q)` equation on its own.
pub fn integrate_contact_z<G: ContactGenerator>(
    z0: f64,
    q: f64,
    h: &G,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<f64>, DynamicsError> {
    cfg.validate()?;
    if !h.contains(z0, q) {
        return Err(DynamicsError::Initial(format!(
            "(Z0, Q) = ({z0:e}, {q:e}) lies outside the validity radius"
        )));
    }
    let raw = drive(
        |y: &[f64; 1]| [h.evaluate(y[0], q).h],
        |y, t| (!h.contains(y[0], q)).then_some(Termination::DomainEscape { t }),
        [z0],
        [0.0],
        cfg,
    );
    let description = format!("Q={q:e} Z0={z0:e}");
    Ok(Trajectory {
        times: raw.times,
        states: raw.states.into_iter().map(|y| y[0]).collect(),
        meta: finish_meta(DynamicsKind::ContactZ, description, cfg),
        termination: raw.termination,
    })
}

/// Exact `Q = 0` solution: `Z = 1/(t + 1/Z0)`, `P = C/(t + 1/Z0)² + a/(t + 1/Z0)`
/// with `C = (P0 − aZ0)/Z0²`.
pub fn closed_form_cusp(z0: f64, p0: f64, a: f64, t: f64) -> Result<(f64, f64), DynamicsError> {
    if !(z0 > 0.0) {
        return Err(DynamicsError::ClosedFormDomain { z0 });
    }
    let c = (p0 - a * z0) / (z0 * z0);
    let s = t + 1.0 / z0;
    Ok((1.0 / s, c / (s * s) + a / s))
}

/// The integration constant `C` of [`closed_form_cusp`].
pub fn closed_form_constant(z0: f64, p0: f64, a: f64) -> Result<f64, DynamicsError> {
    if !(z0 > 0.0) {
        return Err(DynamicsError::ClosedFormDomain { z0 });
    }
    Ok((p0 - a * z0) / (z0 * z0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{Branch, CuspModel, HamiltonianEval};
    use approx::assert_relative_eq;

    /// `H = −Z²` exactly, the cusp normal form with `a = 0`.
    struct Quadratic;

    impl ContactGenerator for Quadratic {
        fn evaluate(&self, z: f64, _q: f64) -> HamiltonianEval {
            HamiltonianEval {
                h: -z * z,
                dh_dz: -2.0 * z,
                dh_dq: 0.0,
            }
        }

        fn domain_radius(&self) -> f64 {
            1.0
        }
    }

    fn reference_params() -> ModelParams {
        ModelParams::spinodal_regime(2.0, 1.0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::default().validate().is_ok());
        let cfg = IntegratorConfig {
            rtol: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = IntegratorConfig::default().with_t_max(-1.0);
        assert!(cfg.validate().is_err());
        let cfg = IntegratorConfig::default().with_sampling(Sampling::Times(vec![2.0, 1.0]));
        assert!(cfg.validate().is_err());
        let cfg = IntegratorConfig::default().with_sampling(Sampling::Steps(0));
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sample_times_are_hit_exactly() {
        let cfg = IntegratorConfig::default()
            .with_t_max(10.0)
            .with_sampling(Sampling::Times(vec![0.5, 1.0, 2.5, 7.0]));
        let tr = integrate_contact_z(0.3, 0.0, &Quadratic, &cfg).unwrap();
        assert_eq!(tr.times, vec![0.0, 0.5, 1.0, 2.5, 7.0, 10.0]);
        let geo = IntegratorConfig::default()
            .with_t_max(1e3)
            .with_sampling(Sampling::Geometric {
                first: 1.0,
                per_decade: 4,
            });
        let tr = integrate_contact_z(0.3, 0.0, &Quadratic, &geo).unwrap();
        assert_eq!(tr.len(), 1 + 12 + 1);
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*tr.times.last().unwrap(), 1e3);
    }

    #[test]
    fn rk4_global_error_is_fourth_order() {
        let z0 = 1.0;
        let exact = 1.0 / (10.0 + 1.0 / z0);
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&dt| {
                let cfg =
                    IntegratorConfig::rk4(dt, 10.0).with_sampling(Sampling::Steps(usize::MAX));
                let tr = integrate_contact_z(z0, 0.0, &Quadratic, &cfg).unwrap();
                (tr.last().1 - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!((slope - 4.0).abs() < 0.2, "slope {slope}");
        }
    }

    #[test]
    fn glauber_equilibrium_start_stays_put() {
        let params = reference_params();
        let eq = ising_model::glauber_equilibria(0.0, &params).unwrap();
        let p_eq = eq.iter().map(|e| e.p).fold(f64::MIN, f64::max);
        let tr = integrate_glauber(
            p_eq,
            0.0,
            &params,
            &IntegratorConfig::default().with_t_max(50.0),
        )
        .unwrap();
        assert!(tr.states.iter().all(|p| (p - p_eq).abs() < 1e-12));
    }

    #[test]
    fn glauber_converges_monotonically() {
        let params = reference_params();
        let eq = ising_model::glauber_equilibria(0.0, &params).unwrap();
        let target = eq.iter().map(|e| e.p).fold(f64::MIN, f64::max);
        assert_relative_eq!(target, 0.957504, epsilon = 1e-6);
        let cfg = IntegratorConfig::default().with_t_max(60.0);
        let tr = integrate_glauber(0.5, 0.0, &params, &cfg).unwrap();
        assert!(tr.is_completed());
        let slack = cfg.atol + cfg.rtol * target;
        for (i, w) in tr.states.windows(2).enumerate() {
            assert!(
                w[1] >= w[0] - slack,
                "t = {}: {} -> {}",
                tr.times[i],
                w[0],
                w[1]
            );
        }
        assert!((tr.last().1 - target).abs() < 1e-10);
    }

    #[test]
    fn glauber_self_convergence() {
        let params = reference_params();
        let run = |rtol: f64| {
            let cfg = IntegratorConfig::default()
                .with_t_max(5.0)
                .with_tolerances(rtol, rtol * 1e-2);
            *integrate_glauber(0.1, 0.05, &params, &cfg)
                .unwrap()
                .last()
                .1
        };
        let (coarse, fine, finer) = (run(1e-6), run(5e-7), run(1e-12));
        assert!((fine - finer).abs() <= (coarse - finer).abs());
        assert!((coarse - finer).abs() < 1e-5);
    }

    #[test]
    fn glauber_rejects_bad_start() {
        let params = reference_params();
        assert!(integrate_glauber(1.0, 0.0, &params, &IntegratorConfig::default()).is_err());
    }

    #[test]
    fn contact_at_cusp_matches_closed_form() {
        let model = CuspModel::reference();
        let h = &model.hamiltonian;
        let (z0, p0) = (0.01, 0.02);
        let cfg = IntegratorConfig::default()
            .with_t_max(1e4)
            .with_sampling(Sampling::Geometric {
                first: 0.1,
                per_decade: 10,
            });
        let tr = integrate_contact(z0, p0, 0.0, h, &cfg).unwrap();
        assert!(tr.is_completed());
        for (t, s) in tr.times.iter().zip(&tr.states) {
            let (z, p) = closed_form_cusp(z0, p0, h.a(), *t).unwrap();
            assert!(
                (s.z - z).abs() <= 10.0 * (cfg.atol + cfg.rtol * z.abs()) + 1e-9 * z.abs(),
                "t = {t}"
            );
            assert!((s.p - p).abs() <= 1e-8 * p.abs(), "t = {t}: {} vs {p}", s.p);
        }
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(
            closed_form_cusp(0.01, 0.02, 0.1, 0.0).unwrap(),
            (0.01, 0.02)
        );
        let c = closed_form_constant(0.01, 0.02, 0.1).unwrap();
        assert_relative_eq!(c, 190.0, max_relative = 1e-12);
        let (_, p) = closed_form_cusp(0.01, 0.02, 0.1, 1.0).unwrap();
        assert_relative_eq!(
            p,
            190.0 / (101.0 * 101.0) + 0.1 / 101.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(p, 0.0196157, epsilon = 1e-7);
        let t = 1e7;
        let (_, p) = closed_form_cusp(0.01, 0.02, 0.0, t).unwrap();
        assert_relative_eq!(p * t * t, 0.02 / 1e-4, max_relative = 1e-4);
        assert!(matches!(
            closed_form_cusp(0.0, 0.1, 0.1, 1.0),
            Err(DynamicsError::ClosedFormDomain { .. })
        ));
    }

    #[test]
    fn front_point_is_stationary() {
        let model = CuspModel::reference();
        let h = &model.hamiltonian;
        let eq = h.equilibrium(1e-3, Branch::Metastable).unwrap();
        let cfg = IntegratorConfig::default().with_t_max(100.0);
        let tr = integrate_contact(eq.z, eq.p, eq.q, h, &cfg).unwrap();
        for s in &tr.states {
            assert!((s.z - eq.z).abs() < 1e-12 && (s.p - eq.p).abs() < 1e-12);
        }
    }

    #[test]
    fn case_two_decay_is_exponential() {
        let model = CuspModel::reference();
        let h = &model.hamiltonian;
        let q = 1e-3;
        let eq = h.equilibrium(q, Branch::Metastable).unwrap();
        let gamma = -h.evaluate(eq.z, q).dh_dz;
        let dp0 = 1e-4;
        let cfg = IntegratorConfig::default()
            .with_t_max(5.0 / gamma)
            .with_sampling(Sampling::Times((1..=5).map(|k| k as f64 / gamma).collect()));
        let tr = integrate_contact_near(eq.z, eq.p + dp0, q, h, &cfg, (eq.z, eq.p)).unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            let expected = (-gamma * t).exp() * dp0;
            assert!((s.p - eq.p - expected).abs() < 10.0 * cfg.atol, "t = {t}");
        }
    }

    #[test]
    fn triangular_structure() {
        let model = CuspModel::reference();
        let h = &model.hamiltonian;
        let q = 1e-3;
        let eq = h.equilibrium(q, Branch::Metastable).unwrap();
        let z0 = 1.5 * eq.z;
        let cfg = IntegratorConfig::default()
            .with_t_max(2000.0)
            .with_sampling(Sampling::Times(
                (1..=20).map(|k| 100.0 * k as f64).collect(),
            ));
        let joint = integrate_contact(z0, eq.p + 1e-4, q, h, &cfg).unwrap();
        let alone = integrate_contact_z(z0, q, h, &cfg).unwrap();
        assert_eq!(joint.times, alone.times);
        for (s, z) in joint.states.iter().zip(&alone.states) {
            assert!((s.z - z).abs() < cfg.atol, "{} vs {z}", s.z);
        }
    }

    #[test]
    fn domain_escape_is_reported() {
        let model = CuspModel::reference();
        let h = &model.hamiltonian;
        let cfg = IntegratorConfig::default().with_t_max(1e3);
        let tr = integrate_contact(-0.01, 0.0, 1e-3, h, &cfg).unwrap();
        assert!(
            matches!(tr.termination, Termination::DomainEscape { .. }),
            "{:?}",
            tr.termination
        );
        assert!(tr.states.iter().all(|s| h.contains(s.z, s.q)));
        assert!(integrate_contact(1.0, 0.0, 0.0, h, &cfg).is_err());
    }

    #[test]
    fn step_limit_gives_partial_trajectory() {
        let mut cfg = IntegratorConfig::default().with_t_max(1e3);
        cfg.max_steps = 10;
        let tr = integrate_contact_z(0.3, 0.0, &Quadratic, &cfg).unwrap();
        assert!(matches!(tr.termination, Termination::StepLimit { .. }));
        assert!(tr.len() <= 11);
    }

    #[test]
    fn csv_layout() {
        let cfg = IntegratorConfig::default()
            .with_t_max(1.0)
            .with_sampling(Sampling::Times(vec![0.5]));
        let tr =
            integrate_contact(0.02, 0.01, 0.0, &CuspModel::reference().hamiltonian, &cfg).unwrap();
        let csv = tr.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,Z,Q,P");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 4);
        assert!(lines[1].starts_with("0.0000000000000000e0"));
        assert!(!csv.contains('\r'));
    }
}
