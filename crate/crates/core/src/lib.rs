//! Numerical toolkit for optimizing Bell tests based on the Eberhard inequality.
//!
//! * [`linalg`]: fixed-size complex matrices, Hermitian quadratic forms and a Jacobi eigensolver.
//! * [`eberhard`]: the Eberhard state, setting operators and the objective matrix `B`.
//! * [`vienna`]: the mixed-state count model with background clicks and accidental coincidences.
//! * [`fluctuation`]: mean, quantum standard deviation and signal/noise ratio under uniform angle noise.
//! * [`optimizer`]: bounded Nelder-Mead and seeded multi-start.
//!
//! All angles cross the public API in degrees. Objective values of the Eberhard model are
//! reported per emitted pair (`J/N`).

pub mod eberhard;
pub mod error;
pub mod fluctuation;
pub mod linalg;
pub mod optimizer;
pub mod quadrature;
pub mod summation;
pub mod vienna;

pub use error::{Error, Result};
