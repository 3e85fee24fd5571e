//! Mean-field Ising model: equation of state, the equilibrium (Legendrian)
//! curve, the spinodal point and the Glauber vector field.
//!
//! Coordinates follow the thermodynamic phase space convention: `z` is minus
//! the free energy, `q` the exterior magnetic field and `p` the magnetization.
//! The equilibrium curve is parameterized by `p`:
//!
//! ```text
//! q(p) = artanh(p)/β − b p,     z(p) = φ(q + b p) − (b/2) p²,
//! φ(u) = β⁻¹ ln(2 cosh(β u)).
//! ```

use thiserror::Error;

/// Magnetizations this close to ±1 are rejected by the equilibrium functions.
pub const MAGNETIZATION_GUARD: f64 = 1e-12;

/// |u′(p)| below this marks an equilibrium as degenerate (tangential root).
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

const ROOT_GRID_POINTS: usize = 2048;
const ROOT_GRID_MARGIN: f64 = 1e-9;
const BISECTION_TOLERANCE: f64 = 1e-14;
/// A critical point of u with |u| below this is accepted as a double root.
const TANGENCY_RESIDUAL: f64 = 1e-12;
/// Simple roots closer than this to an accepted double root are merged into it.
const TANGENCY_MERGE_RADIUS: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model parameters must be positive (beta = {beta}, b = {b})")]
    NonPositive { beta: f64, b: f64 },
    #[error("no spinodal point: b*beta = {product} but b*beta > 1 is required")]
    NoSpinodal { product: f64 },
    #[error("magnetization {p} outside the open interval (-1, 1)")]
    Domain { p: f64 },
}

/// Inverse temperature `beta` and coupling `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    beta: f64,
    b: f64,
}

impl ModelParams {
    pub fn new(beta: f64, b: f64) -> Result<Self, ModelError> {
        if !(beta > 0.0 && b > 0.0 && beta.is_finite() && b.is_finite()) {
            return Err(ModelError::NonPositive { beta, b });
        }
        Ok(Self { beta, b })
    }

    /// Parameters in the low-temperature regime `b·β > 1`, where spinodal points exist.
    pub fn spinodal_regime(beta: f64, b: f64) -> Result<Self, ModelError> {
        let params = Self::new(beta, b)?;
        params.require_spinodal_regime()?;
        Ok(params)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// The product `b·β`.
    pub fn coupling(&self) -> f64 {
        self.b * self.beta
    }

    pub fn require_spinodal_regime(&self) -> Result<(), ModelError> {
        let product = self.coupling();
        if product > 1.0 {
            Ok(())
        } else {
            Err(ModelError::NoSpinodal { product })
        }
    }
}

/// The left spinodal point (plus sign of p*) with its curvature data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinodalPoint {
    pub p_star: f64,
    pub q_star: f64,
    pub z_star: f64,
    /// q″(p*), the cusp curvature.
    pub theta: f64,
    /// b·β·p*, the quadratic degeneracy of the Glauber field at the spinodal.
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoState {
    pub z: f64,
    pub q: f64,
    pub p: f64,
}

/// Coordinates centered at the spinodal point, in which the contact form
/// `dz − p dq` reads `dZ − P dQ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedState {
    pub z: f64,
    pub q: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    /// |u′(p)| below [`DEGENERACY_TOLERANCE`]: the root is (numerically) tangential.
    Degenerate,
}

/// A root of the Glauber vector field at fixed field `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub p: f64,
    pub stability: Stability,
    /// u′(p) = −1 + bβ(1 − p²), the linearization at the root.
    pub slope: f64,
}

/// φ(u) = β⁻¹ ln(2 cosh βu), evaluated without overflow for large |βu|.
pub fn phi(u: f64, params: &ModelParams) -> f64 {
    let beta = params.beta;
    let x = u.abs();
    // ln(2 cosh y) = |y| + ln(1 + e^{-2|y|})
    x + (-2.0 * beta * x).exp().ln_1p() / beta
}

/// φ′(u) = tanh(βu).
pub fn phi_prime(u: f64, params: &ModelParams) -> f64 {
    (params.beta * u).tanh()
}

fn check_magnetization(p: f64) -> Result<(), ModelError> {
    if p.is_finite() && p.abs() < 1.0 - MAGNETIZATION_GUARD {
        Ok(())
    } else {
        Err(ModelError::Domain { p })
    }
}

/// Field on the equilibrium curve at magnetization `p`.
pub fn equilibrium_q(p: f64, params: &ModelParams) -> Result<f64, ModelError> {
    check_magnetization(p)?;
    Ok(p.atanh() / params.beta - params.b * p)
}

/// q′(p) = 1/(β(1 − p²)) − b.
pub fn equilibrium_dq(p: f64, params: &ModelParams) -> Result<f64, ModelError> {
    check_magnetization(p)?;
    Ok(1.0 / (params.beta * (1.0 - p * p)) - params.b)
}

/// q″(p) = 2p/(β(1 − p²)²).
pub fn equilibrium_d2q(p: f64, params: &ModelParams) -> Result<f64, ModelError> {
    check_magnetization(p)?;
    let w = 1.0 - p * p;
    Ok(2.0 * p / (params.beta * w * w))
}

/// Minus free energy on the equilibrium curve at magnetization `p`.
pub fn equilibrium_z(p: f64, params: &ModelParams) -> Result<f64, ModelError> {
    check_magnetization(p)?;
    // q + b p = artanh(p)/β on the curve
    let u = p.atanh() / params.beta;
    Ok(phi(u, params) - 0.5 * params.b * p * p)
}

pub fn equilibrium_state(p: f64, params: &ModelParams) -> Result<ThermoState, ModelError> {
    Ok(ThermoState {
        z: equilibrium_z(p, params)?,
        q: equilibrium_q(p, params)?,
        p,
    })
}

pub fn spinodal(params: &ModelParams) -> Result<SpinodalPoint, ModelError> {
    params.require_spinodal_regime()?;
    let bb = params.coupling();
    let p_star = (1.0 - 1.0 / bb).sqrt();
    Ok(SpinodalPoint {
        p_star,
        q_star: equilibrium_q(p_star, params)?,
        z_star: equilibrium_z(p_star, params)?,
        theta: equilibrium_d2q(p_star, params)?,
        eta: bb * p_star,
    })
}

/// Glauber vector field u(p) = −p + tanh(β(q + bp)) at field `q`.
pub fn glauber_rhs(p: f64, q: f64, params: &ModelParams) -> f64 {
    -p + phi_prime(q + params.b * p, params)
}

/// ∂u/∂p = −1 + bβ(1 − tanh²(β(q + bp))).
pub fn glauber_slope(p: f64, q: f64, params: &ModelParams) -> f64 {
    let t = phi_prime(q + params.b * p, params);
    -1.0 + params.coupling() * (1.0 - t * t)
}

fn classify(p: f64, q: f64, params: &ModelParams) -> Equilibrium {
    let slope = glauber_slope(p, q, params);
    let stability = if slope.abs() < DEGENERACY_TOLERANCE {
        Stability::Degenerate
    } else if slope < 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    };
    Equilibrium {
        p,
        stability,
        slope,
    }
}

fn bisect(mut lo: f64, mut hi: f64, q: f64, params: &ModelParams) -> f64 {
    let mut f_lo = glauber_rhs(lo, q, params);
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let f_mid = glauber_rhs(mid, q, params);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    // one Newton polish, kept only if it improves the residual inside the bracket
    let slope = glauber_slope(root, q, params);
    if slope != 0.0 {
        let polished = root - glauber_rhs(root, q, params) / slope;
        if polished >= lo
            && polished <= hi
            && glauber_rhs(polished, q, params).abs() <= glauber_rhs(root, q, params).abs()
        {
            return polished;
        }
    }
    root
}

/// All equilibria of the Glauber field at field `q`, sorted ascending.
///
/// Simple roots are bracketed by a sign-change scan. Tangential roots (only
/// possible at q = ±q*) have no sign change; they are found at the critical
/// points of u, which are available in closed form, and reported as
/// [`Stability::Degenerate`].
pub fn glauber_equilibria(q: f64, params: &ModelParams) -> Result<Vec<Equilibrium>, ModelError> {
    params.require_spinodal_regime()?;

    let lo = -1.0 + ROOT_GRID_MARGIN;
    let hi = 1.0 - ROOT_GRID_MARGIN;
    let step = (hi - lo) / (ROOT_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..ROOT_GRID_POINTS)
        .map(|i| {
            if i + 1 == ROOT_GRID_POINTS {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&p| glauber_rhs(p, q, params)).collect();

    let mut roots = Vec::new();
    for i in 0..grid.len() {
        if values[i] == 0.0 {
            roots.push(grid[i]);
        } else if i + 1 < grid.len()
            && values[i + 1] != 0.0
            && (values[i] < 0.0) != (values[i + 1] < 0.0)
        {
            roots.push(bisect(grid[i], grid[i + 1], q, params));
        }
    }

    // critical points of u: tanh²(β(q + bp)) = 1 − 1/(bβ)
    let p_star = (1.0 - 1.0 / params.coupling()).sqrt();
    let u_star = p_star.atanh() / params.beta;
    for sign in [-1.0, 1.0] {
        let p_crit = (sign * u_star - q) / params.b;
        if p_crit.abs() < hi && glauber_rhs(p_crit, q, params).abs() < TANGENCY_RESIDUAL {
            roots.retain(|r| (r - p_crit).abs() > TANGENCY_MERGE_RADIUS);
            roots.push(p_crit);
        }
    }

    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(roots.into_iter().map(|p| classify(p, q, params)).collect())
}

impl SpinodalPoint {
    pub fn to_shifted(&self, state: &ThermoState) -> ShiftedState {
        ShiftedState {
            z: state.z - self.p_star * state.q - (self.z_star - self.p_star * self.q_star),
            q: state.q - self.q_star,
            p: state.p - self.p_star,
        }
    }

    pub fn from_shifted(&self, state: &ShiftedState) -> ThermoState {
        let q = state.q + self.q_star;
        ThermoState {
            z: state.z + self.p_star * q + (self.z_star - self.p_star * self.q_star),
            q,
            p: state.p + self.p_star,
        }
    }
}

pub fn to_shifted(state: &ThermoState, sp: &SpinodalPoint) -> ShiftedState {
    sp.to_shifted(state)
}

pub fn from_shifted(state: &ShiftedState, sp: &SpinodalPoint) -> ThermoState {
    sp.from_shifted(state)
}
