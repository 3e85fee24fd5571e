//! Run configuration: TOML file sections plus command-line overrides.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use cusp_core::analysis::{self, Band, CuspSetup, ScanSetup};
use cusp_core::dynamics::{IntegratorConfig, Method, Sampling};
use cusp_core::hamiltonian::{DEFAULT_A, DEFAULT_ORDER};
use cusp_core::{CuspModel, ModelParams};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub b: f64,
    pub beta: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { b: 1.0, beta: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HamiltonianSection {
    pub a: f64,
    pub order: usize,
    /// Omitted means `0.1·min(1, θ)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain_radius: Option<f64>,
}

impl Default for HamiltonianSection {
    fn default() -> Self {
        Self {
            a: DEFAULT_A,
            order: DEFAULT_ORDER,
            domain_radius: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Rk4Fixed,
    Rk45Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub method: MethodName,
    pub rtol: f64,
    pub atol: f64,
    pub dt_init: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self {
            method: MethodName::Rk45Adaptive,
            rtol: d.rtol,
            atol: d.atol,
            dt_init: d.dt_init,
            max_steps: d.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        analysis::logspace(self.lo, self.hi, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub glauber: Grid,
    pub contact: Grid,
    pub perturbation: f64,
    pub z_factor: f64,
    pub horizon: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub min_r2: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        let s = ScanSetup::default();
        Self {
            glauber: Grid {
                lo: 1e-4,
                hi: 1e-2,
                points: 9,
            },
            contact: Grid {
                lo: 1e-4,
                hi: 3e-3,
                points: 7,
            },
            perturbation: s.perturbation,
            z_factor: s.z_factor,
            horizon: s.horizon,
            band_lo: s.band.lo,
            band_hi: s.band.hi,
            min_r2: s.min_r2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CuspSection {
    pub contact_z0: f64,
    pub contact_p0: f64,
    pub glauber_p0: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub per_decade: usize,
}

impl Default for CuspSection {
    fn default() -> Self {
        let c = CuspSetup::default();
        Self {
            contact_z0: c.contact_z0,
            contact_p0: c.contact_p0,
            glauber_p0: c.glauber_p0,
            t_lo: c.t_window.0,
            t_hi: c.t_window.1,
            per_decade: c.per_decade,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub hamiltonian: HamiltonianSection,
    pub integrator: IntegratorSection,
    pub scan: ScanSection,
    pub cusp: CuspSection,
}

/// Values given on the command line; `None` leaves the file value alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub b: Option<f64>,
    pub beta: Option<f64>,
    pub a: Option<f64>,
    pub order: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        if let Some(b) = overrides.b {
            cfg.model.b = b;
        }
        if let Some(beta) = overrides.beta {
            cfg.model.beta = beta;
        }
        if let Some(a) = overrides.a {
            cfg.hamiltonian.a = a;
        }
        if let Some(order) = overrides.order {
            cfg.hamiltonian.order = order;
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        ModelParams::spinodal_regime(self.model.beta, self.model.b)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn model(&self) -> Result<CuspModel, CliError> {
        let h = &self.hamiltonian;
        CuspModel::new(self.params()?, h.a, h.order, h.domain_radius)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn integrator(&self) -> IntegratorConfig {
        let i = &self.integrator;
        IntegratorConfig {
            method: match i.method {
                MethodName::Rk4Fixed => Method::Rk4Fixed,
                MethodName::Rk45Adaptive => Method::Rk45Adaptive,
            },
            rtol: i.rtol,
            atol: i.atol,
            dt_init: i.dt_init,
            max_steps: i.max_steps,
            sampling: Sampling::Steps(1),
            ..IntegratorConfig::default()
        }
    }

    pub fn scan_setup(&self) -> ScanSetup {
        let s = &self.scan;
        ScanSetup {
            integrator: self.integrator(),
            perturbation: s.perturbation,
            z_factor: s.z_factor,
            horizon: s.horizon,
            band: Band {
                lo: s.band_lo,
                hi: s.band_hi,
            },
            decay_model: None,
            min_r2: s.min_r2,
        }
    }

    pub fn cusp_setup(&self) -> CuspSetup {
        let c = &self.cusp;
        CuspSetup {
            integrator: self.integrator(),
            contact_z0: c.contact_z0,
            contact_p0: c.contact_p0,
            glauber_p0: c.glauber_p0,
            t_window: (c.t_lo, c.t_hi),
            per_decade: c.per_decade,
        }
    }

    /// Checks everything that does not need the model built.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params()?;
        self.integrator()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let bad = |msg: String| Err(CliError::Config(msg));
        for (name, g) in [
            ("scan.glauber", &self.scan.glauber),
            ("scan.contact", &self.scan.contact),
        ] {
            if !(g.lo > 0.0 && g.hi >= g.lo) {
                return bad(format!(
                    "{name}: need 0 < lo <= hi (got {}, {})",
                    g.lo, g.hi
                ));
            }
        }
        let s = &self.scan;
        if !(s.band_lo > 0.0 && s.band_hi > s.band_lo) {
            return bad(format!(
                "scan band must satisfy 0 < band_lo < band_hi (got {}, {})",
                s.band_lo, s.band_hi
            ));
        }
        if !(s.horizon > 0.0) {
            return bad(format!("scan.horizon must be positive (got {})", s.horizon));
        }
        let c = &self.cusp;
        if !(c.t_lo > 0.0 && c.t_hi > c.t_lo) || c.per_decade == 0 {
            return bad("cusp window needs 0 < t_lo < t_hi and per_decade >= 1".into());
        }
        if !(c.contact_z0 > 0.0) {
            return bad(format!(
                "cusp.contact_z0 must be positive (got {})",
                c.contact_z0
            ));
        }
        Ok(())
    }
}
