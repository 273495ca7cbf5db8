//! Propagator kernels: the exact metaplectic kernel, the Mehler closed form, the
//! grid eigensolver oracle, Trotter products and the time-sliced action quadrature.
//!
//! Convention: a kernel value k(x_j, y_k) corresponds to the matrix entry
//! h^d · k(x_j, y_k) of the discretised operator.

mod action;
mod dump;
mod grid_operator;
mod mehler;
mod metaplectic;
mod trotter;

pub use action::{action_sum, gauss_legendre, timeslice_kernel_quadrature};
pub use dump::{read_kernel_dump, write_kernel_dump, KernelSidecar};
pub use grid_operator::{eigensolver_reference, grid_hamiltonian, GridPropagator, SpectrumInfo};
pub use mehler::{mehler_kernel, MehlerKernel, ReflectionDescriptor};
pub use metaplectic::{
    analytic_probe_overlap, metaplectic_kernel, phase_phi, Calibration, MetaplecticKernelSpec,
};
pub use trotter::{
    trotter_entry, trotter_propagator, trotter_with, FreeStep, Placement, TrotterBuilder,
    TrotterOptions,
};

use crate::lattice::{boundary_mass, CompactWindow, Grid, LatticeError, WaveFunction};
use crate::linalg::{cmat_max_abs, unitarity_residual, CMat};
use crate::potential::PotentialError;
use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PropagatorError {
    #[error("t = {t} is near-exceptional: |det B_t| = {det_b:e}")]
    NearExceptional { t: f64, det_b: f64 },
    #[error("Trotter step t/n is exceptional for n = {first}..={last} at t = {t}")]
    ExceptionalStep { t: f64, first: usize, last: usize },
    #[error("grid resolves no eigenvalue below the 0.1/h² guard")]
    Unresolved,
    #[error("grid dimension {grid} does not match Hamiltonian dimension {hamiltonian}")]
    Dimension { grid: usize, hamiltonian: usize },
    #[error("n must be at least 1")]
    ZeroSteps,
    #[error("t must be nonzero")]
    ZeroTime,
    #[error("time-sliced quadrature supports d = 1 and n ≤ 3, got d = {d}, n = {n}")]
    QuadratureCost { d: usize, n: usize },
    #[error("the time-sliced form requires the free particle −½Δ as H₀")]
    NotFreeParticle,
    #[error("the classical action is real only for real potentials")]
    ComplexPotential,
    #[error("sampled metaplectic steps need d = 1 for lazy entries")]
    LazyDimension,
    #[error("placement {0:?} has no time-sliced counterpart")]
    Placement(Placement),
    #[error("index out of range")]
    Index,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("kernel dump: {0}")]
    Dump(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    ExactMetaplectic,
    Mehler,
    EigensolverReference,
    Trotter { n: usize },
    ActionSum { n: usize },
}

/// A two-point kernel sampled on grid × grid.
#[derive(Debug, Clone)]
pub struct SampledKernel {
    grid: Grid,
    values: CMat,
    provenance: Provenance,
    t: f64,
    phase: Option<C64>,
    unitary: bool,
    boundary_mass: f64,
}

impl SampledKernel {
    pub(crate) fn from_values(grid: Grid, values: CMat, provenance: Provenance, t: f64, unitary: bool) -> Self {
        let mut k = Self { grid, values, provenance, t, phase: None, unitary, boundary_mass: 0.0 };
        k.boundary_mass = k.probe_boundary_mass();
        k
    }

    /// Builds a kernel from the operator matrix (entries h^d·k).
    pub(crate) fn from_operator(grid: Grid, op: CMat, provenance: Provenance, t: f64, unitary: bool) -> Self {
        let inv = 1.0 / grid.cell();
        let values = Mat::from_fn(op.nrows(), op.ncols(), |i, j| op[(i, j)] * inv);
        Self::from_values(grid, values, provenance, t, unitary)
    }

    pub(crate) fn with_phase(mut self, c: C64) -> Self {
        self.phase = Some(c);
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Kernel values K[j][k] ≈ k(x_j, y_k).
    pub fn values(&self) -> &CMat {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Calibrated unit-modulus prefactor, for closed-form kernels.
    pub fn phase(&self) -> Option<C64> {
        self.phase
    }

    /// Whether the kernel is expected to induce a unitary operator (real V).
    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    /// Outer-shell mass fraction of the propagated standard Gaussian.
    pub fn boundary_mass(&self) -> f64 {
        self.boundary_mass
    }

    pub fn boundary_flagged(&self) -> bool {
        self.boundary_mass > crate::lattice::BOUNDARY_MASS_FLAG
    }

    pub fn entry(&self, j: usize, k: usize) -> C64 {
        self.values[(j, k)]
    }

    /// Operator matrix h^d·K.
    pub fn operator(&self) -> CMat {
        let w = self.grid.cell();
        Mat::from_fn(self.values.nrows(), self.values.ncols(), |i, j| self.values[(i, j)] * w)
    }

    /// (Kφ)(x_j) = h^d Σ_k K[j][k] φ(y_k).
    pub fn apply(&self, f: &WaveFunction) -> Result<WaveFunction, PropagatorError> {
        if f.grid() != &self.grid {
            return Err(LatticeError::GridMismatch.into());
        }
        let w = self.grid.cell();
        let v = f.values();
        let out = (0..self.values.nrows())
            .map(|j| {
                let mut acc = C64::new(0.0, 0.0);
                for (k, x) in v.iter().enumerate() {
                    acc += self.values[(j, k)] * x;
                }
                acc * w
            })
            .collect();
        Ok(WaveFunction::new(self.grid, out)?)
    }

    /// Kernel of the adjoint operator: conj(k(y, x)).
    pub fn adjoint(&self) -> SampledKernel {
        let values = self.values.adjoint().to_owned();
        Self { values, ..self.clone() }
    }

    /// max |(h^dK)*(h^dK) − I|.
    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.operator())
    }

    /// Operator 2-norm bound via max row/column sums (used for the contraction check).
    pub fn operator_norm_bound(&self) -> f64 {
        let op = self.operator();
        let rows = (0..op.nrows()).map(|i| (0..op.ncols()).map(|j| op[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
        let cols = (0..op.ncols()).map(|j| (0..op.nrows()).map(|i| op[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
        (rows * cols).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        cmat_max_abs(&self.values)
    }

    /// max |K − other| over pairs (x_j, y_k) ∈ K × K of the compact window.
    pub fn sup_diff_on(&self, other: &SampledKernel, window: &CompactWindow) -> Result<f64, PropagatorError> {
        if other.grid != self.grid || window.grid() != &self.grid {
            return Err(LatticeError::GridMismatch.into());
        }
        let inside = window.inside_indices();
        let mut best = 0.0f64;
        for &k in &inside {
            for &j in &inside {
                best = best.max((self.values[(j, k)] - other.values[(j, k)]).norm());
            }
        }
        Ok(best)
    }

    fn probe_boundary_mass(&self) -> f64 {
        let probe = standard_gaussian(self.grid);
        match self.apply(&probe) {
            Ok(out) => boundary_mass(&out),
            Err(_) => f64::NAN,
        }
    }
}

/// 2^{d/4} e^{−π|x|²} sampled on the grid (not renormalised).
pub fn standard_gaussian(grid: Grid) -> WaveFunction {
    let d = grid.dim() as f64;
    WaveFunction::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        C64::new(2f64.powf(d / 4.0) * (-std::f64::consts::PI * r2).exp(), 0.0)
    })
}

pub(crate) fn check_dims(grid: &Grid, d: usize) -> Result<(), PropagatorError> {
    if grid.dim() != d {
        return Err(PropagatorError::Dimension { grid: grid.dim(), hamiltonian: d });
    }
    Ok(())
}
