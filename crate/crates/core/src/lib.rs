//! Two-mode Fock-space toolkit for an interferometer powered by a coherent
//! state in one input port and an arbitrary pure state in the other.
//!
//! * [`fock`]: truncated single- and two-mode states, constructors, moments.
//! * [`interferometer`]: beam splitter, phase shifts, Mach-Zehnder blocks.
//! * [`fisher`]: quantum Fisher information by three routes, and its bound.
//! * [`optimizer`]: numerical search for the best secondary-port state.
//! * [`counting`]: photon-count statistics and classical Fisher information.
//! * [`estimation`]: Monte Carlo phase estimation against the Cramér-Rao bound.
//! * [`entanglement`]: modal entanglement after the input beam splitter.

pub mod counting;
pub mod entanglement;
pub mod error;
pub mod estimation;
pub mod fisher;
pub mod fock;
pub mod interferometer;
mod linalg;
pub mod optimizer;

pub use error::{Error, Result};
pub use num_complex::Complex64;
