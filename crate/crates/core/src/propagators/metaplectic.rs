//! The quadratic Fourier transform c_t|det B_t|^{−1/2} e^{2πiΦ_t(x,y)}.

use super::{check_dims, standard_gaussian, GridPropagator, PropagatorError, Provenance, SampledKernel};
use crate::lattice::{inner, Grid};
use crate::linalg::RealMatrix;
use crate::symplectic::{flow_at, QuadraticHamiltonian, SymplecticFlow};
use faer::Mat;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Outcome of matching the uncalibrated kernel against the grid oracle on the
/// standard Gaussian probe.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Calibration {
    /// Unit-modulus prefactor r/|r|.
    pub phase: [f64; 2],
    /// ||r| − 1| where r = ⟨U_grid g, g⟩ / ⟨K_u g, g⟩.
    pub modulus_deviation: f64,
}

impl Calibration {
    pub fn c_t(&self) -> C64 {
        C64::new(self.phase[0], self.phase[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaplecticKernelSpec {
    flow: SymplecticFlow,
    /// D_t B_t^{−1}.
    db_inv: RealMatrix,
    /// B_t^{−1}.
    b_inv: RealMatrix,
    /// B_t^{−1} A_t.
    b_inv_a: RealMatrix,
    amplitude: f64,
    condition: f64,
    calibration: Option<Calibration>,
}

fn symmetrized(m: RealMatrix) -> RealMatrix {
    m.add(&m.transpose()).scaled(0.5)
}

impl MetaplecticKernelSpec {
    pub fn new(flow: SymplecticFlow) -> Result<Self, PropagatorError> {
        if flow.is_near_exceptional() {
            return Err(PropagatorError::NearExceptional { t: flow.t(), det_b: flow.det_b() });
        }
        let b = flow.b_t();
        let b_inv = b.inverse().ok_or(PropagatorError::NearExceptional { t: flow.t(), det_b: flow.det_b() })?;
        let db_inv = symmetrized(flow.d_t().mul(&b_inv));
        let b_inv_a = symmetrized(b_inv.mul(&flow.a_t()));
        let amplitude = flow.det_b().abs().powf(-0.5);
        let condition = b.condition();
        Ok(Self { flow, db_inv, b_inv, b_inv_a, amplitude, condition, calibration: None })
    }

    /// Spec for H₀ at time t, calibrated against the grid oracle on `grid`.
    pub fn calibrated(h: &QuadraticHamiltonian, t: f64, grid: &Grid) -> Result<Self, PropagatorError> {
        let spec = Self::new(flow_at(h, t))?;
        let prop = GridPropagator::new(&h.quadratic_part(), grid)?;
        spec.calibrate_with(&prop)
    }

    /// Calibrates c_t with an already factorised quadratic-part propagator.
    pub fn calibrate_with(mut self, prop: &GridPropagator) -> Result<Self, PropagatorError> {
        let grid = *prop.grid();
        check_dims(&grid, self.dim())?;
        let g = standard_gaussian(grid);
        let reference = inner(&prop.apply(self.flow.t(), &g)?, &g)?;
        let r = reference / analytic_probe_overlap(&self);
        let unit = r / r.norm();
        self.calibration = Some(Calibration { phase: [unit.re, unit.im], modulus_deviation: (r.norm() - 1.0).abs() });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.flow.dim()
    }

    pub fn flow(&self) -> &SymplecticFlow {
        &self.flow
    }

    pub fn db_inv(&self) -> &RealMatrix {
        &self.db_inv
    }

    pub fn b_inv(&self) -> &RealMatrix {
        &self.b_inv
    }

    pub fn b_inv_a(&self) -> &RealMatrix {
        &self.b_inv_a
    }

    /// |det B_t|^{−1/2}.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// 1-norm condition number of B_t.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn calibration(&self) -> Option<Calibration> {
        self.calibration
    }

    /// c_t, or 1 before calibration.
    pub fn c_t(&self) -> C64 {
        self.calibration.map_or(C64::new(1.0, 0.0), |c| c.c_t())
    }

    /// c_t|det B_t|^{−1/2}e^{2πiΦ_t(x,y)}.
    pub fn kernel_value(&self, x: &[f64], y: &[f64]) -> C64 {
        self.c_t() * self.amplitude * C64::cis(2.0 * PI * phase_phi(self, x, y))
    }

    /// Symmetric 2d×2d matrix Q with Φ_t(x,y) = ½(x,y)·Q(x,y).
    fn phase_matrix(&self) -> RealMatrix {
        let off = self.b_inv.scaled(-1.0);
        RealMatrix::from_blocks(&self.db_inv, &off.transpose(), &off, &self.b_inv_a)
    }
}

/// Φ_t(x,y) = ½x·D_tB_t^{−1}x − y·B_t^{−1}x + ½y·B_t^{−1}A_t y.
pub fn phase_phi(spec: &MetaplecticKernelSpec, x: &[f64], y: &[f64]) -> f64 {
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    0.5 * dot(x, &spec.db_inv.mul_vec(x)) - dot(y, &spec.b_inv.mul_vec(x)) + 0.5 * dot(y, &spec.b_inv_a.mul_vec(y))
}

/// ⟨K_u g, g⟩ for the uncalibrated kernel and g = 2^{d/4}e^{−π|x|²}, in closed form:
/// |det B|^{−1/2} 2^{d/2} Π_k (1 − i q_k)^{−1/2} with q_k the eigenvalues of the
/// phase matrix.
pub fn analytic_probe_overlap(spec: &MetaplecticKernelSpec) -> C64 {
    let d = spec.dim() as f64;
    let q = spec.phase_matrix().symmetric_eigenvalues();
    let det_factor = q.iter().fold(C64::new(1.0, 0.0), |acc, qk| acc * C64::new(1.0, -qk).powf(-0.5));
    det_factor * spec.amplitude * 2f64.powf(d / 2.0)
}

/// Samples the calibrated metaplectic kernel of H₀ (the potential is ignored).
pub fn metaplectic_kernel(h: &QuadraticHamiltonian, t: f64, grid: &Grid) -> Result<SampledKernel, PropagatorError> {
    check_dims(grid, h.dim())?;
    let spec = MetaplecticKernelSpec::calibrated(h, t, grid)?;
    Ok(sample_spec(&spec, grid, Provenance::ExactMetaplectic))
}

pub(crate) fn sample_spec(spec: &MetaplecticKernelSpec, grid: &Grid, provenance: Provenance) -> SampledKernel {
    let n = grid.len();
    let points: Vec<Vec<f64>> = (0..n).map(|j| grid.point_vec(j)).collect();
    let values = Mat::from_fn(n, n, |j, k| spec.kernel_value(&points[j], &points[k]));
    SampledKernel::from_values(*grid, values, provenance, spec.flow().t(), true).with_phase(spec.c_t())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;

    #[test]
    fn free_phase_closed_form() {
        let spec = MetaplecticKernelSpec::new(flow_at(&QuadraticHamiltonian::free(1), 0.8)).unwrap();
        for (x, y) in [(0.3, -1.0), (2.0, 2.5), (-4.0, 1.0)] {
            let want = (x - y) * (x - y) / (4.0 * PI * 0.8);
            assert!((phase_phi(&spec, &[x], &[y]) - want).abs() < 1e-12);
        }
        assert_eq!(phase_phi(&spec, &[0.0], &[0.0]), 0.0);
    }

    #[test]
    fn oscillator_quarter_period_phase() {
        let spec = MetaplecticKernelSpec::new(flow_at(&QuadraticHamiltonian::harmonic(1), PI / 2.0)).unwrap();
        for (x, y) in [(0.3, -1.0), (2.0, 2.5)] {
            assert!((phase_phi(&spec, &[x], &[y]) + x * y).abs() < 1e-12);
        }
    }

    #[test]
    fn refuses_exceptional_flow() {
        let err = MetaplecticKernelSpec::new(flow_at(&QuadraticHamiltonian::harmonic(1), PI)).unwrap_err();
        assert!(matches!(err, PropagatorError::NearExceptional { .. }));
    }

    #[test]
    fn mixed_partial_is_minus_b_inverse() {
        let h = QuadraticHamiltonian::anisotropic();
        let spec = MetaplecticKernelSpec::new(flow_at(&h, 0.9)).unwrap();
        let eps = 1e-3;
        let b_inv = spec.b_inv().clone();
        let base = ([0.2, -0.4], [0.7, 0.1]);
        for i in 0..2 {
            for j in 0..2 {
                let f = |sx: f64, sy: f64| {
                    let mut x = base.0;
                    let mut y = base.1;
                    x[i] += sx;
                    y[j] += sy;
                    phase_phi(&spec, &x, &y)
                };
                let fd = (f(eps, eps) - f(eps, -eps) - f(-eps, eps) + f(-eps, -eps)) / (4.0 * eps * eps);
                // ∂²Φ/∂x_i∂y_j = −(B^{−1})_{ji}
                assert!((fd + b_inv[(j, i)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn free_calibration_is_unimodular_and_matches_fresnel_phase() {
        let grid = make_grid(1, 256, 12.0).unwrap();
        let spec = MetaplecticKernelSpec::calibrated(&QuadraticHamiltonian::free(1), 1.0, &grid).unwrap();
        let cal = spec.calibration().unwrap();
        assert!(cal.modulus_deviation < 1e-10);
        // (2πit)^{−1/2} = (2πt)^{−1/2} e^{−iπ/4}
        assert!((cal.c_t() - C64::cis(-PI / 4.0)).norm() < 1e-10);
    }
}
