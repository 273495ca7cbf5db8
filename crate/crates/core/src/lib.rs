//! Numerical laboratory for Feynman–Trotter time slicing of Schrödinger
//! propagators with quadratic Hamiltonians plus bounded potentials.
//!
//! Fourier convention throughout: ℱf(ξ) = ∫ e^{−2πix·ξ} f(x) dx, so the free
//! particle −½Δ has the multiplier e^{−2π²it|ξ|²}.

pub mod io;
pub mod lattice;
pub mod linalg;
pub mod potential;
pub mod propagators;
pub mod symplectic;
pub mod timefreq;
pub mod experiments;
