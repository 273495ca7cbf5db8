//! Time-frequency diagnostics on the phase-space lattice (grid nodes × DFT nodes):
//! STFT, Wigner transform, modulation and Fourier–Lebesgue norms, the duality
//! pairing, Weyl quantisation and almost-diagonalisation of Gram matrices.

mod almost_diag;
mod norms;
mod pairing;
mod stft;
mod wigner;

pub use almost_diag::{almost_diag_gram, AlmostDiagReport, GramLattice};
pub use norms::{fourier_lebesgue_norm, mod_norm, mod_norm_with, Flavor, NormRecord, NormSpec};
pub use pairing::{kernel_as_function, stft_pairing, weakstar_pairing, weakstar_pairings, Atom, PairingTarget};
pub use stft::{stft, stft_with, STFTGram};
pub use wigner::{weyl_apply, weyl_matrix, wigner, wigner_with, HalfShift, SampledSymbol, WignerLattice};

use crate::lattice::{inner, Grid, LatticeError, WaveFunction};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TimeFreqError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("norm exponents must satisfy p, q ≥ 1, got p = {p}, q = {q}")]
    Exponent { p: f64, q: f64 },
    #[error("weight exponent must satisfy |s| ≤ 50, got {0}")]
    Weight(f64),
    #[error("localized flavor requires a compact window on the same grid")]
    MissingCompactWindow,
    #[error("window width must be positive, got {0}")]
    Width(f64),
    #[error("position stride {stride} must divide N = {n}")]
    Stride { stride: usize, n: usize },
    #[error("operation supports d = 1 only, got d = {0}")]
    Dimension(usize),
    #[error("symbol lattice does not match the grid")]
    SymbolLattice,
    #[error("atom dimension does not match the kernel grid")]
    Atom,
}

/// Normalised Gaussian window 2^{d/4}λ^{−d/2}e^{−π|x|²/λ²}, rescaled to unit grid norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    function: WaveFunction,
    width: f64,
    raw_norm: f64,
}

impl Window {
    pub fn gaussian(grid: Grid) -> Self {
        Self::with_width(grid, 1.0).expect("unit width is valid")
    }

    pub fn with_width(grid: Grid, width: f64) -> Result<Self, TimeFreqError> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(TimeFreqError::Width(width));
        }
        let d = grid.dim() as f64;
        let amp = 2f64.powf(d / 4.0) * width.powf(-d / 2.0);
        let mut function = WaveFunction::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            C64::new(amp * (-PI * r2 / (width * width)).exp(), 0.0)
        });
        let raw_norm = inner(&function, &function)?.re.sqrt();
        function.scale(C64::new(1.0 / raw_norm, 0.0));
        Ok(Self { function, width, raw_norm })
    }

    pub fn grid(&self) -> &Grid {
        self.function.grid()
    }

    pub fn function(&self) -> &WaveFunction {
        &self.function
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Grid norm of the analytic Gaussian before rescaling.
    pub fn raw_norm(&self) -> f64 {
        self.raw_norm
    }

    /// Analytic (unit L²-norm) window value at x.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        2f64.powf(d / 4.0) * self.width.powf(-d / 2.0) * (-PI * r2 / (self.width * self.width)).exp()
    }

    /// Value of the periodised window at the node offset `shift` (per axis).
    pub(crate) fn shifted(&self, offset: [usize; 2]) -> impl Fn(usize) -> C64 + '_ {
        let grid = *self.grid();
        let n = grid.n();
        let half = n / 2;
        let vals = self.function.values();
        move |flat: usize| {
            let [a, b] = grid.axis_indices(flat);
            let ia = (a + n + half - offset[0]) % n;
            if grid.dim() == 1 {
                vals[ia]
            } else {
                let ib = (b + n + half - offset[1]) % n;
                vals[ia * n + ib]
            }
        }
    }
}

/// ⟨ξ⟩^s = (1 + |ξ|²)^{s/2}.
pub fn japanese(xi: &[f64], s: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).powf(s / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;

    #[test]
    fn window_has_unit_grid_norm() {
        for (n, l, w) in [(16, 4.0, 1.0), (256, 8.0, 1.0), (64, 6.0, 1.7)] {
            let win = Window::with_width(make_grid(1, n, l).unwrap(), w).unwrap();
            assert!((win.function().norm() - 1.0).abs() < 1e-10);
        }
        let win = Window::gaussian(make_grid(1, 256, 8.0).unwrap());
        assert!((win.raw_norm() - 1.0).abs() < 1e-12);
    }
}
