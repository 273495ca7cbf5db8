use ftl_core::experiments::ExperimentError;
use ftl_core::lattice::LatticeError;
use ftl_core::propagators::PropagatorError;
use ftl_core::symplectic::SymplecticError;
use ftl_core::timefreq::TimeFreqError;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
    #[error(transparent)]
    TimeFreq(#[from] TimeFreqError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("exceptional-time scan left unresolved root clusters {0:?}; refine time.scan_step")]
    Clusters(Vec<(f64, f64)>),
    #[error("t = {t} is exceptional (|det B_t| = {det_b:e}); symbolic descriptor written to sidecar only")]
    Descriptor { t: f64, det_b: f64 },
    #[error("acceptance bands violated: {0}")]
    Bands(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 0 success, 1 parse error, 2 unresolved numerical condition, 3 exceptional-time
    /// refusal, 4 assertion-band violation.
    pub fn exit_code(&self) -> u8 {
        use ExperimentError as E;
        use PropagatorError as P;
        match self {
            Self::Config(_) => 1,
            Self::Symplectic(_) | Self::Lattice(_) | Self::TimeFreq(_) => 1,
            Self::Descriptor { .. } => 3,
            Self::Propagator(p) | Self::Experiment(E::Propagator(p)) => match p {
                P::NearExceptional { .. } | P::ExceptionalStep { .. } => 3,
                P::Lattice(_) | P::Potential(_) | P::Dimension { .. } | P::ZeroSteps | P::Placement(_) => 1,
                _ => 2,
            },
            Self::Experiment(E::Exceptional { .. } | E::NotExceptional { .. }) => 3,
            Self::Experiment(E::Schedule(_) | E::Radii | E::Battery | E::Lattice(_) | E::TimeFreq(_)) => 1,
            Self::Experiment(E::BoundaryMass { .. } | E::UnderResolved { .. }) => 2,
            Self::Clusters(_) | Self::Io { .. } => 2,
            Self::Bands(_) => 4,
        }
    }
}
