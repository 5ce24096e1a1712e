//! A numerical laboratory for path integrals whose action carries an
//! imaginary part.
//!
//! A history with action `S = S_R + i S_I` contributes `exp(iS/ħ)` to the
//! path sum, so its squared integrand is suppressed by `exp(-2 S_I/ħ)`. The
//! modules here evaluate that weight on small 1-D lattices, select classical
//! histories by their imaginary action, model measurement outcomes as a race
//! between branch weights, and study substructure growth in substitution
//! systems.
//!
//! * [`action`]: lattice discretization, complex potentials, the action functional.
//! * [`propagator`]: brute-force path enumeration and transfer-matrix propagation.
//! * [`classical`]: discrete Euler–Lagrange solutions and argmin-`S_I` selection.
//! * [`selection`]: measurement branches with noisy future imaginary action.
//! * [`scenarios`]: double slit, single-mode Higgs toy, dominance sweeps.
//! * [`tape`]: substitution systems, substructure counts, growth fits.

pub mod action;
pub mod classical;
mod error;
pub mod numeric;
pub mod propagator;
pub mod scenarios;
pub mod selection;
pub mod tape;

pub use action::{action, log_weight, weight, ActionValue, ComplexPotential, LatticeConfig, Path};
pub use error::{Error, Result};
pub use num_complex::Complex64;
