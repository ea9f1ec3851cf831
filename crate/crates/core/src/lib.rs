//! Transport through a quantum dot coupled to a harmonic oscillator.
//!
//! The dot-oscillator system is treated in the polaron frame and coupled to
//! fermionic leads with Lorentzian transmission. The crate builds projected
//! Redfield and GKLS generators on a truncated Fock space, solves for steady
//! states and transients, and evaluates currents, frame changes and
//! stability maps.
//!
//! All energies are angular frequencies in units of 10^9 rad/s with
//! `hbar = k_B = 1`; see [`units`].

pub mod error;
pub mod fock;
pub mod leads;
pub mod master_eq;
pub mod observables;
pub mod ode;
mod special;
pub mod state;
pub mod system;
pub mod units;

pub use error::{Error, Result};
pub use fock::{displacement_elements, displacement_elements_expm, FockSpace};
pub use leads::{bath_correlation, lamb_shift_im, Channel, LeadParams};
pub use master_eq::{
    build_liouvillian, evolve, qd_rate_equation, steady_state, steady_state_from, Liouvillian, Model,
    RedfieldTensorSet, SolverKind, SteadyStateOptions,
};
pub use ode::Tolerances;
pub use state::{trace_distance, BlockState, Frame};
pub use system::SystemParams;
