//! Finite-time equilibration of closed quantum systems.
//!
//! Given a Hamiltonian and an initial state, this crate computes gap
//! statistics (`N(eps)`, `D_G`, `eps_min`), the effective dimension, exact and
//! quadrature time averages of observable deviations and distinguishabilities,
//! and the closed-form bounds they satisfy.

pub mod averaging;
pub mod bounds;
pub mod distinguish;
pub mod dynamics;
pub mod error;
pub mod models;
pub mod numerics;
pub mod quantum_state;
pub mod spectral;
pub mod tolerance;

pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, C64};
pub use quantum_state::{DensityMatrix, PureState, State};
pub use spectral::{GapSet, Hamiltonian, Spectrum};
