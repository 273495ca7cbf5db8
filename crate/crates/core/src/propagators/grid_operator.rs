//! The discretised Hamiltonian a^w + V on the grid and its exact exponential.

use super::{check_dims, PropagatorError, Provenance, SampledKernel};
use crate::lattice::{dft_raw, inverse_dft_raw, Fft1, Grid, LatticeError, WaveFunction};
use crate::linalg::{cmat_expm, CMat};
use crate::symplectic::QuadraticHamiltonian;
use faer::{Mat, Side};
use num_complex::Complex64 as C64;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Applies the Fourier multiplier m(ξ_k) (centred order) to grid samples.
pub(crate) fn apply_multiplier(values: &mut [C64], grid: &Grid, plan: &Fft1, symbol: &[C64]) {
    dft_raw(values, grid.dim(), grid.n(), grid.spacing(), plan);
    values.iter_mut().zip(symbol).for_each(|(v, m)| *v *= m);
    inverse_dft_raw(values, grid.dim(), grid.n(), grid.freq_spacing(), plan);
}

/// Dense matrix of a Fourier multiplier, assembled column by column.
pub(crate) fn multiplier_matrix(grid: &Grid, symbol: &[C64]) -> CMat {
    let n = grid.len();
    let plan = Fft1::new(grid.n());
    let mut m = Mat::zeros(n, n);
    let mut col = vec![zero(); n];
    for l in 0..n {
        col.iter_mut().for_each(|v| *v = zero());
        col[l] = C64::new(1.0, 0.0);
        apply_multiplier(&mut col, grid, &plan, symbol);
        for (j, v) in col.iter().enumerate() {
            m[(j, l)] = *v;
        }
    }
    m
}

fn kinetic_symbol(h: &QuadraticHamiltonian, grid: &Grid) -> Vec<f64> {
    let d = grid.dim();
    (0..grid.len())
        .map(|i| {
            let xi = &grid.freq_point(i)[..d];
            let cxi = h.c().mul_vec(xi);
            0.5 * xi.iter().zip(&cxi).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect()
}

/// H_grid = Weyl realisation of ½x·Ax + ξ·Bx + ½ξ·Cξ plus diag(V(x_j)).
///
/// The mixed term uses the Weyl midpoint rule: the entry of Weyl(ξ_i x_j) at
/// (a, b) is Ξ_i[a, b]·½(x_j(a) + x_j(b)), with Ξ_i the multiplier of ξ_i.
pub fn grid_hamiltonian(h: &QuadraticHamiltonian, grid: &Grid) -> Result<CMat, PropagatorError> {
    check_dims(grid, h.dim())?;
    h.potential().validate(h.dim())?;
    let d = grid.dim();
    let n = grid.len();
    let kin: Vec<C64> = kinetic_symbol(h, grid).into_iter().map(|v| C64::new(v, 0.0)).collect();
    let mut m = multiplier_matrix(grid, &kin);
    let points: Vec<Vec<f64>> = (0..n).map(|j| grid.point_vec(j)).collect();
    for (j, x) in points.iter().enumerate() {
        let ax = h.a().mul_vec(x);
        let quad: f64 = 0.5 * x.iter().zip(&ax).map(|(p, q)| p * q).sum::<f64>();
        m[(j, j)] += C64::new(quad, 0.0) + h.potential().eval(x);
    }
    if h.b().max_abs() > 0.0 {
        for i in 0..d {
            let sym: Vec<C64> = (0..n).map(|k| C64::new(grid.freq_point(k)[i], 0.0)).collect();
            let xi_mat = multiplier_matrix(grid, &sym);
            for jj in 0..d {
                let coeff = h.b()[(i, jj)];
                if coeff == 0.0 {
                    continue;
                }
                for b in 0..n {
                    for a in 0..n {
                        let mid = 0.5 * (points[a][jj] + points[b][jj]);
                        m[(a, b)] += xi_mat[(a, b)] * (coeff * mid);
                    }
                }
            }
        }
    }
    Ok(m)
}

/// Diagnostics of the grid spectrum against the resolution guard λh² < 0.1.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SpectrumInfo {
    pub max_eigenvalue_h2: f64,
    pub resolved_fraction: f64,
    pub hermitian_residual: f64,
}

/// Exact evolution e^{−itH_grid}, factorised once and reused for many times.
#[derive(Debug, Clone)]
pub enum GridPropagator {
    /// Kinetic-only H₀ without potential: diagonal in the DFT basis.
    Multiplier { grid: Grid, symbol: Vec<f64> },
    /// Hermitian H_grid = ΦΛΦ*.
    Hermitian { grid: Grid, vectors: CMat, values: Vec<f64>, info: SpectrumInfo },
    /// Complex potential: dense exponential of the generator.
    General { grid: Grid, generator: CMat, info: SpectrumInfo },
}

const HERMITIAN_TOL: f64 = 1e-10;
const RESOLUTION_GUARD: f64 = 0.1;

impl GridPropagator {
    pub fn new(h: &QuadraticHamiltonian, grid: &Grid) -> Result<Self, PropagatorError> {
        check_dims(grid, h.dim())?;
        if h.is_kinetic_only() && matches!(h.potential(), crate::potential::Potential::Zero) {
            return Ok(Self::Multiplier { grid: *grid, symbol: kinetic_symbol(h, grid) });
        }
        let mut m = grid_hamiltonian(h, grid)?;
        let n = m.nrows();
        let mut resid = 0.0f64;
        let mut scale = 1.0f64;
        for j in 0..n {
            for i in 0..n {
                resid = resid.max((m[(i, j)] - m[(j, i)].conj()).norm());
                scale = scale.max(m[(i, j)].norm());
            }
        }
        let hermitian_residual = resid / scale;
        let h2 = grid.spacing().powi(2);
        if hermitian_residual > HERMITIAN_TOL {
            let info = SpectrumInfo { max_eigenvalue_h2: f64::NAN, resolved_fraction: f64::NAN, hermitian_residual };
            let generator = Mat::from_fn(n, n, |i, j| m[(i, j)] * C64::new(0.0, -1.0));
            return Ok(Self::General { grid: *grid, generator, info });
        }
        for j in 0..n {
            for i in 0..j {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
            m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
        }
        let eig = m.self_adjoint_eigen(Side::Lower).map_err(|_| PropagatorError::Unresolved)?;
        let values: Vec<f64> = (0..n).map(|i| eig.S().column_vector()[i].re).collect();
        let vectors = eig.U().to_owned();
        let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let resolved = values.iter().filter(|v| v.abs() * h2 < RESOLUTION_GUARD).count();
        if resolved == 0 {
            return Err(PropagatorError::Unresolved);
        }
        let info = SpectrumInfo {
            max_eigenvalue_h2: max_abs * h2,
            resolved_fraction: resolved as f64 / n as f64,
            hermitian_residual,
        };
        Ok(Self::Hermitian { grid: *grid, vectors, values, info })
    }

    pub fn grid(&self) -> &Grid {
        match self {
            Self::Multiplier { grid, .. } | Self::Hermitian { grid, .. } | Self::General { grid, .. } => grid,
        }
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, Self::General { .. })
    }

    pub fn info(&self) -> Option<SpectrumInfo> {
        match self {
            Self::Multiplier { .. } => None,
            Self::Hermitian { info, .. } | Self::General { info, .. } => Some(*info),
        }
    }

    /// Operator matrix of e^{−itH_grid}.
    pub fn evolve(&self, t: f64) -> CMat {
        match self {
            Self::Multiplier { grid, symbol } => {
                let phases: Vec<C64> = symbol.iter().map(|m| C64::cis(-t * m)).collect();
                multiplier_matrix(grid, &phases)
            }
            Self::Hermitian { vectors, values, .. } => {
                let n = values.len();
                let phases: Vec<C64> = values.iter().map(|l| C64::cis(-t * l)).collect();
                let scaled = Mat::from_fn(n, n, |i, j| vectors[(i, j)] * phases[j]);
                &scaled * vectors.adjoint()
            }
            Self::General { generator, .. } => {
                let n = generator.nrows();
                cmat_expm(&Mat::from_fn(n, n, |i, j| generator[(i, j)] * t))
            }
        }
    }

    /// e^{−itH_grid}ψ without forming the dense matrix when possible.
    pub fn apply(&self, t: f64, f: &WaveFunction) -> Result<WaveFunction, PropagatorError> {
        if f.grid() != self.grid() {
            return Err(LatticeError::GridMismatch.into());
        }
        let out = match self {
            Self::Multiplier { grid, symbol } => {
                let phases: Vec<C64> = symbol.iter().map(|m| C64::cis(-t * m)).collect();
                let mut v = f.values().to_vec();
                apply_multiplier(&mut v, grid, &Fft1::new(grid.n()), &phases);
                v
            }
            Self::Hermitian { vectors, values, .. } => {
                let n = values.len();
                let col = Mat::from_fn(n, 1, |i, _| f.values()[i]);
                let coeff = vectors.adjoint() * &col;
                let scaled = Mat::from_fn(n, 1, |i, _| coeff[(i, 0)] * C64::cis(-t * values[i]));
                let res = vectors * &scaled;
                (0..n).map(|i| res[(i, 0)]).collect()
            }
            Self::General { .. } => {
                let op = self.evolve(t);
                let n = op.nrows();
                let col = Mat::from_fn(n, 1, |i, _| f.values()[i]);
                let res = &op * &col;
                (0..n).map(|i| res[(i, 0)]).collect()
            }
        };
        Ok(WaveFunction::new(*self.grid(), out)?)
    }

    pub fn kernel(&self, t: f64) -> SampledKernel {
        SampledKernel::from_operator(*self.grid(), self.evolve(t), Provenance::EigensolverReference, t, self.is_unitary())
    }
}

/// The u_t oracle: K = Φe^{−itΛ}Φ*/h^d from the grid eigendecomposition.
pub fn eigensolver_reference(h: &QuadraticHamiltonian, t: f64, grid: &Grid) -> Result<SampledKernel, PropagatorError> {
    Ok(GridPropagator::new(h, grid)?.kernel(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;
    use crate::linalg::{cmat_max_abs, unitarity_residual};
    use crate::potential::{FourierTerm, Potential};
    use crate::propagators::standard_gaussian;

    #[test]
    fn identity_at_time_zero() {
        let grid = make_grid(1, 64, 4.0).unwrap();
        let h = QuadraticHamiltonian::harmonic(1).with_potential(Potential::cosine(1.0, vec![1.0]));
        let k = eigensolver_reference(&h, 0.0, &grid).unwrap();
        let op = k.operator();
        for j in 0..64 {
            for i in 0..64 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((op[(i, j)] - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn oscillator_ground_state_is_stationary() {
        // the standard Gaussian is the ground state of π(x² + ξ²)^w with energy ½
        let grid = make_grid(1, 128, 6.0).unwrap();
        let prop = GridPropagator::new(&QuadraticHamiltonian::harmonic(1), &grid).unwrap();
        let g = standard_gaussian(grid);
        let out = prop.apply(0.7, &g).unwrap();
        for (a, b) in out.values().iter().zip(g.values()) {
            assert!((a - b * C64::cis(-0.35)).norm() < 1e-10);
        }
    }

    #[test]
    fn weyl_mixed_term_is_hermitian_and_unitary() {
        let grid = make_grid(1, 64, 4.0).unwrap();
        let h = QuadraticHamiltonian::new(
            crate::linalg::RealMatrix::scalar(1, 2.0),
            crate::linalg::RealMatrix::scalar(1, 0.7),
            crate::linalg::RealMatrix::scalar(1, 3.0),
        )
        .unwrap();
        let prop = GridPropagator::new(&h, &grid).unwrap();
        assert!(prop.info().unwrap().hermitian_residual < 1e-12);
        assert!(unitarity_residual(&prop.evolve(1.3)) < 1e-10);
    }

    #[test]
    fn multiplier_and_eigen_routes_agree() {
        let grid = make_grid(1, 64, 4.0).unwrap();
        let free = QuadraticHamiltonian::free(1);
        let a = GridPropagator::new(&free, &grid).unwrap().evolve(0.3);
        let eig = GridPropagator::new(&free.clone().with_potential(Potential::cosine(0.0, vec![1.0])), &grid).unwrap();
        assert!(matches!(eig, GridPropagator::Hermitian { .. }));
        let b = eig.evolve(0.3);
        assert!(cmat_max_abs(&(&a - &b)) < 1e-10);
    }

    #[test]
    fn complex_potential_is_contractive() {
        let grid = make_grid(1, 32, 3.0).unwrap();
        let v = Potential::FourierMeasure { terms: vec![FourierTerm { weight: [0.0, -0.5], frequency: vec![0.0] }] };
        let h = QuadraticHamiltonian::harmonic(1).with_potential(v);
        let prop = GridPropagator::new(&h, &grid).unwrap();
        assert!(!prop.is_unitary());
        // V = −0.5i decays every state by e^{−0.5t}
        let g = standard_gaussian(grid);
        let out = prop.apply(1.0, &g).unwrap();
        assert!((out.norm() - (-0.5f64).exp() * g.norm()).abs() < 1e-9);
    }
}
