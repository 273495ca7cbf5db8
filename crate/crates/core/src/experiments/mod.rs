//! Convergence, weak-* and slice studies of the Trotter kernels against the grid
//! oracle, and the transition-amplitude limit.

mod amplitude;
mod convergence;
mod report;

pub use amplitude::{amplitude_study, transition_amplitude, unit_ball_volume, AmplitudeRow, AmplitudeStudy, MIN_BALL_NODES};
pub use convergence::{column_slice, converge_study, m1_slice_study, row_slice, weakstar_study, StudyKind};
pub use report::{BandCheck, ConvergenceReport, ConvergenceRow, CSV_HEADER};

use crate::lattice::LatticeError;
use crate::propagators::{PropagatorError, TrotterOptions};
use crate::timefreq::{Atom, TimeFreqError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error(transparent)]
    TimeFreq(#[from] TimeFreqError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("n-schedule must be non-empty and strictly increasing, got {0:?}")]
    Schedule(Vec<usize>),
    #[error("t = {t} is exceptional (|det B_t| = {det_b:e}); use the weak-* study")]
    Exceptional { t: f64, det_b: f64 },
    #[error("t = {t} is not exceptional (|det B_t| = {det_b:e}); use the convergence study")]
    NotExceptional { t: f64, det_b: f64 },
    #[error("boundary mass {mass:e} at n = {n} exceeds the flag; enlarge L")]
    BoundaryMass { n: usize, mass: f64 },
    #[error("ball of radius {radius} holds {cells} grid cells, need at least {min}")]
    UnderResolved { radius: f64, cells: usize, min: usize },
    #[error("radius schedule must be positive and strictly decreasing with at least two entries")]
    Radii,
    #[error("atom battery is empty")]
    Battery,
}

/// Acceptance bands for the studies. These are implementation bounds chosen from
/// pilot runs, recorded in every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bands {
    /// E(2n)/E(n) must lie in this interval for non-exceptional t.
    pub halving_ratio: [f64; 2],
    /// E(n_last) < factor · E(n_first) at non-exceptional t.
    pub final_factor: f64,
    /// max/min of the phase-flattened M^{∞,1} norms.
    pub boundedness: f64,
    /// every weak-* atom gap at n_last < ratio · its n_first value.
    pub weakstar_gap_ratio: f64,
    /// sup error at n_last > persistence · sup error at n_first at exceptional t.
    pub sup_persistence: f64,
    /// relative tolerance of the extrapolated amplitude.
    pub amplitude_rel: f64,
}

impl Default for Bands {
    fn default() -> Self {
        Self {
            halving_ratio: [0.4, 0.6],
            final_factor: 0.01,
            boundedness: 3.0,
            weakstar_gap_ratio: 0.05,
            sup_persistence: 0.1,
            amplitude_rel: 0.05,
        }
    }
}

/// Errors at or below this are treated as exact zero (V = 0, t = 0).
pub const EXACT_FLOOR: f64 = 1e-10;

/// Everything a study needs besides H, t, the schedule and the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyOptions {
    pub compact_fraction: f64,
    pub window_width: f64,
    /// Position stride of the M^{∞,1} norm on the product grid; `None` picks N/32.
    pub minfty1_stride: Option<usize>,
    pub atoms: Vec<Atom>,
    /// Test functions π(z)g for the slice studies.
    pub slice_atoms: Vec<[f64; 2]>,
    pub trotter: TrotterOptions,
    pub bands: Bands,
    pub scenario: String,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            compact_fraction: 0.5,
            window_width: 1.0,
            minfty1_stride: None,
            atoms: atom_battery(0, 25),
            slice_atoms: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.5]],
            trotter: TrotterOptions::default(),
            bands: Bands::default(),
            scenario: "scenario".into(),
        }
    }
}

/// `count` distinct atoms π(z₁)g ⊗ π(z₂)g with z = (z₁, z₂) on the lattice (½ℤ)⁴ inside
/// the ball |z| ≤ 3, drawn from a seeded ChaCha8 stream; the first atom is g ⊗ g.
pub fn atom_battery(seed: u64, count: usize) -> Vec<Atom> {
    const RADIUS: f64 = 3.0;
    const STEP: f64 = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut atoms = vec![Atom::centred()];
    let snap = |v: f64| (v / STEP).round() * STEP;
    let mut guard = 0;
    while atoms.len() < count && guard < 100_000 {
        guard += 1;
        let z: [f64; 4] = std::array::from_fn(|_| snap(rng.random_range(-RADIUS..=RADIUS)));
        if z.iter().map(|v| v * v).sum::<f64>() > RADIUS * RADIUS {
            continue;
        }
        let atom = Atom::new([z[0], z[1]], [z[2], z[3]]);
        if !atoms.contains(&atom) {
            atoms.push(atom);
        }
    }
    atoms
}
