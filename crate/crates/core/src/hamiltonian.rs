//! Contact Hamiltonian vanishing on the equilibrium front near the spinodal cusp.
//!
//! The construction runs in shifted coordinates `(Z, Q, P)` centered at the
//! spinodal point:
//!
//! 1. Taylor-expand the front `P ↦ (Z(P), Q(P))` from the equation of state.
//! 2. Introduce the Morse coordinate `s` with `Q = s²` and re-expand `Z(s)`.
//! 3. Split `Z(s) = φ₀(Q) + s·Q·φ₁(Q)` into even and odd parts.
//! 4. `H(Z, Q) = (1 − aQ)(−(Z − φ₀(Q))² + Q³φ₁(Q)²)`.
//!
//! Everything downstream (the relaxation rate γ, the function R and its
//! slope δ) is evaluated in closed form from the truncated series.

use std::fmt::Write as _;

use thiserror::Error;

use crate::formal_series::{SeriesError, TruncatedSeries};
use crate::ising_model::{self, ModelError, ModelParams, SpinodalPoint};

pub const DEFAULT_A: f64 = 0.1;
pub const DEFAULT_ORDER: usize = 12;
pub const MIN_ORDER: usize = 6;

/// Default validity radius in `(Z, Q)`: `0.1·min(1, θ)`.
pub fn default_domain_radius(theta: f64) -> f64 {
    0.1 * theta.min(1.0)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("truncation order {order} is below the minimum {MIN_ORDER}")]
    Order { order: usize },
    #[error("degenerate cusp: |phi1(0)| = {phi1_0:e} is below 1e-12")]
    DegenerateCusp { phi1_0: f64 },
    #[error("point (Z = {z:e}, Q = {q:e}) lies outside the validity radius {radius:e}")]
    OutsideDomain { z: f64, q: f64, radius: f64 },
    #[error("front point for Q = {q_inf:e}: {reason}")]
    FrontPoint { q_inf: f64, reason: String },
    #[error("relaxation rate gamma = {gamma:e} is not positive")]
    NonPositiveRate { gamma: f64 },
    #[error("dR/dZ = {delta:e} vanishes at the equilibrium")]
    DegenerateDelta { delta: f64 },
    #[error("invalid hamiltonian text: {0}")]
    Parse(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// Which sheet of the front near the cusp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// P > 0: metastable for Glauber, attracting for the contact flow.
    Metastable,
    /// P < 0.
    Unstable,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Metastable => 1.0,
            Branch::Unstable => -1.0,
        }
    }
}

/// Power series of the front in the shifted magnetization `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontExpansion {
    pub z_of_p: TruncatedSeries,
    pub q_of_p: TruncatedSeries,
    pub theta: f64,
    /// |P| beyond which the truncated series are not used.
    pub p_validity: f64,
}

/// Result of the Morse-coordinate construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MorseSplit {
    pub phi0: TruncatedSeries,
    pub phi1: TruncatedSeries,
    /// `Z` as a series in the Morse coordinate `s`.
    pub z_of_s: TruncatedSeries,
    /// `P` as a series in `s`.
    pub p_of_s: TruncatedSeries,
}

/// Point of the front with its shifted coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontPoint {
    pub z: f64,
    pub q: f64,
    pub p: f64,
}

/// `H` and its first partial derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianEval {
    pub h: f64,
    pub dh_dz: f64,
    pub dh_dq: f64,
}

/// A Hamiltonian `H(Z, Q)` generating the triangular contact system.
pub trait ContactGenerator: Sync {
    /// Value and first partials, without a domain check.
    fn evaluate(&self, z: f64, q: f64) -> HamiltonianEval;

    fn domain_radius(&self) -> f64;

    fn contains(&self, z: f64, q: f64) -> bool {
        let r = self.domain_radius();
        z.abs() <= r && q.abs() <= r
    }
}

/// Taylor series of `Q(P) = q(p* + P) − q*` and `Z(P)` to `order`.
///
/// `Q` comes from integrating `artanh′(p* + P) = 1/(1 − (p* + P)²)`; `Z`
/// from integrating the Legendrian relation `Z′(P) = P·Q′(P)`.
pub fn front_expansion(
    params: &ModelParams,
    sp: &SpinodalPoint,
    order: usize,
) -> Result<FrontExpansion, HamiltonianError> {
    params.require_spinodal_regime()?;
    if order < MIN_ORDER {
        return Err(HamiltonianError::Order { order });
    }
    let p_star = sp.p_star;
    let denominator =
        TruncatedSeries::from_slice(&[1.0 - p_star * p_star, -2.0 * p_star, -1.0], order - 1);
    let d_artanh = denominator.recip()?;
    let mut q_of_p = &d_artanh.integrate().scale(1.0 / params.beta())
        - &TruncatedSeries::monomial(1, params.b(), order);
    // Q(0) = Q'(0) = 0 by the choice of p*; drop the rounding residue
    let mut coeffs = q_of_p.coeffs().to_vec();
    coeffs[0] = 0.0;
    coeffs[1] = 0.0;
    q_of_p = TruncatedSeries::new(coeffs)?;

    // P·Q'(P) at order N only needs Q' through P^{N-1}
    let dz = q_of_p.differentiate().with_order(order).shift_up(1);
    let z_of_p = dz.integrate().with_order(order);

    Ok(FrontExpansion {
        z_of_p,
        q_of_p,
        theta: sp.theta,
        p_validity: 0.5 * (1.0 - p_star),
    })
}

impl FrontExpansion {
    pub fn order(&self) -> usize {
        self.q_of_p.order()
    }

    pub fn point(&self, p: f64) -> FrontPoint {
        FrontPoint {
            z: self.z_of_p.evaluate(p),
            q: self.q_of_p.evaluate(p),
            p,
        }
    }

    /// Largest `Q` reachable on the metastable branch within the validity range.
    pub fn q_validity(&self) -> f64 {
        self.q_of_p.evaluate(self.p_validity)
    }

    /// Solves `Q(P) = q_inf` on the requested branch by Newton's method.
    pub fn front_point(&self, q_inf: f64, branch: Branch) -> Result<FrontPoint, HamiltonianError> {
        let fail = |reason: &str| HamiltonianError::FrontPoint {
            q_inf,
            reason: reason.to_string(),
        };
        if !(q_inf > 0.0 && q_inf.is_finite()) {
            return Err(fail("Q must be positive"));
        }
        let sign = branch.sign();
        let dq = self.q_of_p.differentiate();
        let mut p = sign * (2.0 * q_inf / self.theta).sqrt();
        for _ in 0..100 {
            if p.abs() > self.p_validity || p * sign <= 0.0 {
                return Err(fail("outside the validity range of the front expansion"));
            }
            let step = (self.q_of_p.evaluate(p) - q_inf) / dq.evaluate(p);
            p -= step;
            if step.abs() <= 4.0 * f64::EPSILON * p.abs() {
                if p.abs() > self.p_validity {
                    break;
                }
                return Ok(self.point(p));
            }
        }
        Err(fail(
            "Newton iteration did not converge within the validity range",
        ))
    }
}

pub fn front_point(
    fe: &FrontExpansion,
    q_inf: f64,
    branch: Branch,
) -> Result<FrontPoint, HamiltonianError> {
    fe.front_point(q_inf, branch)
}

/// Morse coordinate `s = √Q(P)`, its inverse `P(s)`, and the split of `Z(s)`.
pub fn morse_split(fe: &FrontExpansion, order: usize) -> Result<MorseSplit, HamiltonianError> {
    let order = order.min(fe.order());
    if order < MIN_ORDER {
        return Err(HamiltonianError::Order { order });
    }
    let q_of_p = fe.q_of_p.with_order(order);
    let z_of_p = fe.z_of_p.with_order(order);

    // Q(P) = c₂P²·u(P) with u(0) = 1, so s(P) = P·√c₂·√u(P), known through P^{N-1}
    let c2 = q_of_p.coeff(2);
    let unit = TruncatedSeries::new(
        q_of_p
            .shift_down(2)
            .coeffs()
            .iter()
            .map(|c| c / c2)
            .collect(),
    )?;
    let s_of_p = unit
        .sqrt_unit()?
        .scale(c2.sqrt())
        .with_order(order - 1)
        .shift_up(1);
    let p_of_s = s_of_p.revert()?;

    // Z starts at P³, so [s^N] Z(P(s)) involves P(s) only through s^{N-2}
    let mut z_of_s = z_of_p.compose(&p_of_s.with_order(order))?;
    let mut coeffs = z_of_s.coeffs().to_vec();
    coeffs[..3].fill(0.0);
    z_of_s = TruncatedSeries::new(coeffs)?;

    let (even, odd) = z_of_s.split_even_odd();
    let phi1 = odd.shift_down(1);
    Ok(MorseSplit {
        phi0: even,
        phi1,
        z_of_s,
        p_of_s,
    })
}

impl MorseSplit {
    /// Coefficients of `Z(s) − φ₀(s²) − s³φ₁(s²)` through the truncation order.
    pub fn reconstruction_residual(&self) -> TruncatedSeries {
        let order = self.z_of_s.order();
        let odd = self.phi1.with_order(self.phi1.order() + 1).shift_up(1);
        let rebuilt = TruncatedSeries::recombine(&self.phi0, &odd, order);
        &self.z_of_s - &rebuilt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactHamiltonian {
    phi0: TruncatedSeries,
    phi1: TruncatedSeries,
    dphi0: TruncatedSeries,
    dphi1: TruncatedSeries,
    a: f64,
    domain_radius: f64,
}

pub fn build_hamiltonian(
    phi0: TruncatedSeries,
    phi1: TruncatedSeries,
    a: f64,
    domain_radius: f64,
) -> Result<ContactHamiltonian, HamiltonianError> {
    let phi1_0 = phi1.coeff(0);
    if phi1_0.abs() < 1e-12 {
        return Err(HamiltonianError::DegenerateCusp { phi1_0 });
    }
    if !a.is_finite() {
        return Err(HamiltonianError::Parameter(format!("a = {a}")));
    }
    if !(domain_radius > 0.0 && domain_radius.is_finite()) {
        return Err(HamiltonianError::Parameter(format!(
            "domain_radius = {domain_radius}"
        )));
    }
    let prefactor_floor = 1.0 - a.abs() * domain_radius;
    if prefactor_floor <= 0.0 {
        return Err(HamiltonianError::Parameter(format!(
            "1 - aQ must stay positive on the domain (a = {a}, radius = {domain_radius})"
        )));
    }
    Ok(ContactHamiltonian {
        dphi0: phi0.differentiate(),
        dphi1: phi1.differentiate(),
        phi0,
        phi1,
        a,
        domain_radius,
    })
}

impl ContactHamiltonian {
    pub fn phi0(&self) -> &TruncatedSeries {
        &self.phi0
    }

    pub fn phi1(&self) -> &TruncatedSeries {
        &self.phi1
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Copy with a different `a`.
    pub fn with_a(&self, a: f64) -> Result<Self, HamiltonianError> {
        build_hamiltonian(self.phi0.clone(), self.phi1.clone(), a, self.domain_radius)
    }

    /// Checked evaluation of `H`, `∂H/∂Z` and `∂H/∂Q`.
    pub fn eval_h(&self, z: f64, q: f64) -> Result<HamiltonianEval, HamiltonianError> {
        if !self.contains(z, q) {
            return Err(HamiltonianError::OutsideDomain {
                z,
                q,
                radius: self.domain_radius,
            });
        }
        Ok(self.evaluate(z, q))
    }

    pub fn h(&self, z: f64, q: f64) -> f64 {
        self.evaluate(z, q).h
    }

    /// `∂²H/∂Z² = −2(1 − aQ)`.
    pub fn d2h_dz2(&self, q: f64) -> f64 {
        -2.0 * (1.0 - self.a * q)
    }

    /// `∂²H/∂Z∂Q = 2a(Z − φ₀) + 2(1 − aQ)φ₀′`.
    pub fn d2h_dzdq(&self, z: f64, q: f64) -> f64 {
        let w = z - self.phi0.evaluate(q);
        2.0 * self.a * w + 2.0 * (1.0 - self.a * q) * self.dphi0.evaluate(q)
    }

    /// Zero of `H(·, q)` on the requested sheet: `Z = φ₀(Q) ± Q^{3/2}φ₁(Q)`.
    pub fn equilibrium_z(&self, q: f64, branch: Branch) -> f64 {
        self.phi0.evaluate(q) + branch.sign() * q.powf(1.5) * self.phi1.evaluate(q)
    }

    /// Equilibrium of the triangular system at field offset `q > 0`:
    /// `H = 0` and `P = −(∂H/∂Q)/(∂H/∂Z)`.
    pub fn equilibrium(&self, q: f64, branch: Branch) -> Result<FrontPoint, HamiltonianError> {
        if !(q > 0.0) {
            return Err(HamiltonianError::Parameter(format!(
                "equilibrium needs Q > 0, got {q}"
            )));
        }
        let z = self.equilibrium_z(q, branch);
        let ev = self.eval_h(z, q)?;
        Ok(FrontPoint {
            z,
            q,
            p: -ev.dh_dq / ev.dh_dz,
        })
    }

    /// Plain-text `key = value` form with 17 significant digits.
    pub fn to_text(&self) -> String {
        let list = |s: &TruncatedSeries| {
            s.coeffs()
                .iter()
                .map(|c| format!("{c:.16e}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut out =
            String::from("# contact hamiltonian H = (1 - aQ)(-(Z - phi0(Q))^2 + Q^3 phi1(Q)^2)\n");
        let _ = writeln!(out, "a = {:.16e}", self.a);
        let _ = writeln!(out, "domain_radius = {:.16e}", self.domain_radius);
        let _ = writeln!(out, "phi0 = {}", list(&self.phi0));
        let _ = writeln!(out, "phi1 = {}", list(&self.phi1));
        out
    }

    pub fn from_text(text: &str) -> Result<Self, HamiltonianError> {
        let mut a = None;
        let mut radius = None;
        let mut phi0 = None;
        let mut phi1 = None;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| HamiltonianError::Parse(format!("{v:?}: {e}")))
        };
        let parse_list = |v: &str| -> Result<TruncatedSeries, HamiltonianError> {
            let coeffs = v.split(',').map(parse).collect::<Result<Vec<_>, _>>()?;
            if coeffs.is_empty() {
                return Err(HamiltonianError::Parse("empty coefficient list".into()));
            }
            Ok(TruncatedSeries::new(coeffs)?)
        };
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HamiltonianError::Parse(format!("missing '=' in {line:?}")))?;
            match key.trim() {
                "a" => a = Some(parse(value)?),
                "domain_radius" => radius = Some(parse(value)?),
                "phi0" => phi0 = Some(parse_list(value)?),
                "phi1" => phi1 = Some(parse_list(value)?),
                other => return Err(HamiltonianError::Parse(format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| HamiltonianError::Parse(format!("missing key {k}"));
        build_hamiltonian(
            phi0.ok_or_else(|| missing("phi0"))?,
            phi1.ok_or_else(|| missing("phi1"))?,
            a.ok_or_else(|| missing("a"))?,
            radius.ok_or_else(|| missing("domain_radius"))?,
        )
    }
}

impl ContactGenerator for ContactHamiltonian {
    fn evaluate(&self, z: f64, q: f64) -> HamiltonianEval {
        let prefactor = 1.0 - self.a * q;
        let w = z - self.phi0.evaluate(q);
        let f1 = self.phi1.evaluate(q);
        let q2 = q * q;
        let front = -w * w + q2 * q * f1 * f1;
        let d_front_dq = 2.0 * w * self.dphi0.evaluate(q)
            + 3.0 * q2 * f1 * f1
            + 2.0 * q2 * q * f1 * self.dphi1.evaluate(q);
        HamiltonianEval {
            h: prefactor * front,
            dh_dz: -2.0 * prefactor * w,
            dh_dq: -self.a * front + prefactor * d_front_dq,
        }
    }

    fn domain_radius(&self) -> f64 {
        self.domain_radius
    }
}

/// `H + εQ²`: violates the front-vanishing hypothesis through a `Q²` monomial.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticPerturbation<'a, G> {
    pub base: &'a G,
    pub epsilon: f64,
}

impl<G: ContactGenerator> ContactGenerator for QuadraticPerturbation<'_, G> {
    fn evaluate(&self, z: f64, q: f64) -> HamiltonianEval {
        let mut ev = self.base.evaluate(z, q);
        ev.h += self.epsilon * q * q;
        ev.dh_dq += 2.0 * self.epsilon * q;
        ev
    }

    fn domain_radius(&self) -> f64 {
        self.base.domain_radius()
    }
}

/// `R(Z) = P∞·∂H/∂Z(Z, Q∞) + ∂H/∂Q(Z, Q∞)`.
#[derive(Debug, Clone, Copy)]
pub struct RateFunction<'a> {
    pub hamiltonian: &'a ContactHamiltonian,
    pub z_inf: f64,
    pub q_inf: f64,
    pub p_inf: f64,
}

impl RateFunction<'_> {
    pub fn eval(&self, z: f64) -> f64 {
        let ev = self.hamiltonian.evaluate(z, self.q_inf);
        self.p_inf * ev.dh_dz + ev.dh_dq
    }
}

/// γ = −∂H/∂Z at the metastable front point over `q_inf`.
pub fn gamma(
    h: &ContactHamiltonian,
    fe: &FrontExpansion,
    q_inf: f64,
) -> Result<f64, HamiltonianError> {
    let point = fe.front_point(q_inf, Branch::Metastable)?;
    let gamma = -h.eval_h(point.z, point.q)?.dh_dz;
    if gamma > 0.0 {
        Ok(gamma)
    } else {
        Err(HamiltonianError::NonPositiveRate { gamma })
    }
}

/// `R` at the metastable front point over `q_inf`, and `δ = dR/dZ(Z∞)` in closed form.
pub fn r_and_delta<'a>(
    h: &'a ContactHamiltonian,
    fe: &FrontExpansion,
    q_inf: f64,
) -> Result<(RateFunction<'a>, f64), HamiltonianError> {
    let point = fe.front_point(q_inf, Branch::Metastable)?;
    h.eval_h(point.z, point.q)?;
    let delta = point.p * h.d2h_dz2(point.q) + h.d2h_dzdq(point.z, point.q);
    if delta.abs() < 1e-14 {
        return Err(HamiltonianError::DegenerateDelta { delta });
    }
    let r = RateFunction {
        hamiltonian: h,
        z_inf: point.z,
        q_inf: point.q,
        p_inf: point.p,
    };
    Ok((r, delta))
}

/// All the cusp data for one parameter set, built in one go.
#[derive(Debug, Clone)]
pub struct CuspModel {
    pub params: ModelParams,
    pub spinodal: SpinodalPoint,
    pub front: FrontExpansion,
    pub split: MorseSplit,
    pub hamiltonian: ContactHamiltonian,
}

impl CuspModel {
    pub fn new(
        params: ModelParams,
        a: f64,
        order: usize,
        domain_radius: Option<f64>,
    ) -> Result<Self, HamiltonianError> {
        let spinodal = ising_model::spinodal(&params)?;
        let front = front_expansion(&params, &spinodal, order)?;
        let split = morse_split(&front, order)?;
        let radius = domain_radius.unwrap_or_else(|| default_domain_radius(spinodal.theta));
        let hamiltonian = build_hamiltonian(split.phi0.clone(), split.phi1.clone(), a, radius)?;
        Ok(Self {
            params,
            spinodal,
            front,
            split,
            hamiltonian,
        })
    }

    /// `b = 1`, `β = 2`, `a = 0.1`, `N = 12`.
    pub fn reference() -> Self {
        let params = ModelParams::spinodal_regime(2.0, 1.0).expect("reference parameters");
        Self::new(params, DEFAULT_A, DEFAULT_ORDER, None).expect("reference model")
    }

    /// `H` along the series front, `H(Z(P), Q(P))`.
    pub fn front_residual(&self, p: f64) -> f64 {
        let point = self.front.point(p);
        self.hamiltonian.h(point.z, point.q)
    }

    /// [`Self::front_residual`] together with the size of the two terms that cancel in it,
    /// `|1 − aQ|·((Z − φ₀)² + |Q³|φ₁²)`.
    pub fn front_residual_with_scale(&self, p: f64) -> (f64, f64) {
        let point = self.front.point(p);
        let h = &self.hamiltonian;
        let w = point.z - h.phi0().evaluate(point.q);
        let f1 = h.phi1().evaluate(point.q);
        let scale = (1.0 - h.a() * point.q).abs() * (w * w + point.q.powi(3).abs() * f1 * f1);
        (h.h(point.z, point.q), scale)
    }
}
