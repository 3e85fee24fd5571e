//! Relaxation near the spinodal cusp of the mean-field Ising model.
//!
//! Two relaxation models are implemented side by side: the Glauber ODE for
//! the magnetization, and a contact Hamiltonian flow on the thermodynamic
//! phase space whose Hamiltonian vanishes exactly on the equilibrium front.
//! The [`analysis`] module measures relaxation rates and power laws from
//! simulated trajectories and compares them with the closed-form predictions.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod formal_series;
pub mod hamiltonian;
pub mod ising_model;

pub use formal_series::TruncatedSeries;
pub use hamiltonian::{ContactHamiltonian, CuspModel, FrontExpansion};
pub use ising_model::{ModelParams, ShiftedState, SpinodalPoint, ThermoState};
