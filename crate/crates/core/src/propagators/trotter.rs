//! Trotter products E_n(t) = (e^{−i(t/n)H₀} e^{−i(t/n)V})^n on the grid.

use super::{check_dims, GridPropagator, MetaplecticKernelSpec, PropagatorError, Provenance, SampledKernel};
use crate::lattice::{pairwise_sum, Grid};
use crate::linalg::{cmat_pow, CMat};
use crate::potential::Potential;
use crate::symplectic::QuadraticHamiltonian;
use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// How the free factor e^{−iτH₀} is realised on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FreeStep {
    /// Exact exponential of the grid operator (a DFT multiplier when H₀ is
    /// kinetic-only, an eigendecomposition otherwise).
    #[default]
    GridExponential,
    /// h^d times the sampled metaplectic kernel at τ = t/n.
    SampledKernel,
}

/// Where the potential factor sits inside each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// S = e^{−iτH₀}e^{−iτV}: V evaluated at x_0..x_{n−1}.
    #[default]
    Start,
    /// S = e^{−iτV}e^{−iτH₀}: V evaluated at x_1..x_n.
    Endpoint,
    /// Symmetric e^{−iτV/2}e^{−iτH₀}e^{−iτV/2}; comparison only.
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrotterOptions {
    pub free_step: FreeStep,
    pub placement: Placement,
}

/// Largest number of extra steps tried when t/n hits an exceptional time.
const MAX_BUMP: usize = 10;

/// Reusable Trotter factory: factorises H₀ once, then builds E_n(t) for many (t, n).
#[derive(Debug, Clone)]
pub struct TrotterBuilder {
    h0: QuadraticHamiltonian,
    potential: Potential,
    grid: Grid,
    options: TrotterOptions,
    free: GridPropagator,
    samples: Vec<C64>,
}

impl TrotterBuilder {
    pub fn new(h: &QuadraticHamiltonian, grid: &Grid, options: TrotterOptions) -> Result<Self, PropagatorError> {
        check_dims(grid, h.dim())?;
        h.potential().validate(h.dim())?;
        let h0 = h.quadratic_part();
        let free = GridPropagator::new(&h0, grid)?;
        Ok(Self {
            h0,
            potential: h.potential().clone(),
            grid: *grid,
            options,
            samples: h.potential().sample(grid),
            free,
        })
    }

    pub fn options(&self) -> TrotterOptions {
        self.options
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn free_factor(&self, tau: f64) -> Result<CMat, PropagatorError> {
        match self.options.free_step {
            FreeStep::GridExponential => Ok(self.free.evolve(tau)),
            FreeStep::SampledKernel => {
                let spec = MetaplecticKernelSpec::new(crate::symplectic::flow_at(&self.h0, tau))?
                    .calibrate_with(&self.free)?;
                Ok(super::metaplectic::sample_spec(&spec, &self.grid, Provenance::ExactMetaplectic).operator())
            }
        }
    }

    /// One step matrix S for step count n, and the step count actually used.
    pub fn step(&self, t: f64, n: usize) -> Result<(CMat, usize), PropagatorError> {
        if n == 0 {
            return Err(PropagatorError::ZeroSteps);
        }
        let mut used = n;
        let m0 = loop {
            match self.free_factor(t / used as f64) {
                Ok(m) => break m,
                Err(PropagatorError::NearExceptional { .. }) if used < n + MAX_BUMP => used += 1,
                Err(PropagatorError::NearExceptional { .. }) => {
                    return Err(PropagatorError::ExceptionalStep { t, first: n, last: used })
                }
                Err(e) => return Err(e),
            }
        };
        let tau = t / used as f64;
        let full: Vec<C64> = self.samples.iter().map(|v| (C64::new(0.0, -tau) * v).exp()).collect();
        let half: Vec<C64> = self.samples.iter().map(|v| (C64::new(0.0, -0.5 * tau) * v).exp()).collect();
        let size = m0.nrows();
        let s = match self.options.placement {
            Placement::Start => Mat::from_fn(size, size, |i, j| m0[(i, j)] * full[j]),
            Placement::Endpoint => Mat::from_fn(size, size, |i, j| full[i] * m0[(i, j)]),
            Placement::Strang => Mat::from_fn(size, size, |i, j| half[i] * m0[(i, j)] * half[j]),
        };
        Ok((s, used))
    }

    /// Operator matrix of E_n(t) and the step count used.
    pub fn operator(&self, t: f64, n: usize) -> Result<(CMat, usize), PropagatorError> {
        let (s, used) = self.step(t, n)?;
        Ok((cmat_pow(&s, used), used))
    }

    pub fn kernel(&self, t: f64, n: usize) -> Result<SampledKernel, PropagatorError> {
        let (op, used) = self.operator(t, n)?;
        let unitary = self.potential.is_real();
        Ok(SampledKernel::from_operator(self.grid, op, Provenance::Trotter { n: used }, t, unitary))
    }
}

/// E_n(t) with default options (grid-exact free step, V at the start of each step).
pub fn trotter_propagator(h: &QuadraticHamiltonian, t: f64, n: usize, grid: &Grid) -> Result<SampledKernel, PropagatorError> {
    trotter_with(h, t, n, grid, TrotterOptions::default())
}

pub fn trotter_with(
    h: &QuadraticHamiltonian,
    t: f64,
    n: usize,
    grid: &Grid,
    options: TrotterOptions,
) -> Result<SampledKernel, PropagatorError> {
    TrotterBuilder::new(h, grid, options)?.kernel(t, n)
}

/// One kernel entry (S^n)[j][k]/h of the sampled-metaplectic Trotter product on a
/// 1-d grid, computed without forming S. Cost is O(N) for n ≤ 2 and O(N²) per
/// additional step. c_τ is calibrated on `calibration_grid`.
#[allow(clippy::too_many_arguments)]
pub fn trotter_entry(
    h: &QuadraticHamiltonian,
    t: f64,
    n: usize,
    grid: &Grid,
    calibration_grid: &Grid,
    j: usize,
    k: usize,
    placement: Placement,
) -> Result<C64, PropagatorError> {
    if grid.dim() != 1 || h.dim() != 1 {
        return Err(PropagatorError::LazyDimension);
    }
    if n == 0 {
        return Err(PropagatorError::ZeroSteps);
    }
    if j >= grid.len() || k >= grid.len() {
        return Err(PropagatorError::Index);
    }
    let tau = t / n as f64;
    let spec = MetaplecticKernelSpec::calibrated(h, tau, calibration_grid)?;
    let hh = grid.spacing();
    let nodes = grid.nodes();
    let w: Vec<C64> = nodes
        .iter()
        .map(|&x| {
            let v = h.potential().eval(&[x]);
            let scale = if placement == Placement::Strang { 0.5 } else { 1.0 };
            (C64::new(0.0, -tau * scale) * v).exp()
        })
        .collect();
    let s = |a: usize, b: usize| -> C64 {
        let k0 = spec.kernel_value(&[nodes[a]], &[nodes[b]]) * hh;
        match placement {
            Placement::Start => k0 * w[b],
            Placement::Endpoint => w[a] * k0,
            Placement::Strang => w[a] * k0 * w[b],
        }
    };
    if n == 1 {
        return Ok(s(j, k) / hh);
    }
    let size = grid.len();
    let mut v: Vec<C64> = (0..size).map(|b| s(b, k)).collect();
    for _ in 2..n {
        v = (0..size)
            .map(|a| {
                let terms: Vec<C64> = (0..size).map(|b| s(a, b) * v[b]).collect();
                pairwise_sum(&terms)
            })
            .collect();
    }
    let terms: Vec<C64> = (0..size).map(|b| s(j, b) * v[b]).collect();
    Ok(pairwise_sum(&terms) / hh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;
    use crate::linalg::{cmat_max_abs, unitarity_residual};
    use crate::propagators::eigensolver_reference;
    use std::f64::consts::PI;

    fn ho_cos() -> QuadraticHamiltonian {
        QuadraticHamiltonian::harmonic(1).with_potential(Potential::cosine(1.0, vec![1.0]))
    }

    #[test]
    fn zero_potential_collapses_to_exact_evolution() {
        let grid = make_grid(1, 64, 4.0).unwrap();
        for h in [QuadraticHamiltonian::harmonic(1), QuadraticHamiltonian::free(1)] {
            let exact = eigensolver_reference(&h, 1.0, &grid).unwrap();
            for n in [1, 3, 8] {
                let e = trotter_propagator(&h, 1.0, n, &grid).unwrap();
                let diff = cmat_max_abs(&(e.operator() - exact.operator()));
                assert!(diff < 1e-10, "n={n}: {diff}");
            }
        }
    }

    #[test]
    fn semigroup_spot_check() {
        let grid = make_grid(1, 64, 5.0).unwrap();
        let b = TrotterBuilder::new(&ho_cos(), &grid, TrotterOptions::default()).unwrap();
        let (full, _) = b.operator(1.2, 8).unwrap();
        let (half, _) = b.operator(0.6, 4).unwrap();
        assert!(cmat_max_abs(&(&half * &half - &full)) < 1e-10);
    }

    #[test]
    fn unitary_for_real_potential() {
        let grid = make_grid(1, 64, 5.0).unwrap();
        for n in [1, 5, 16] {
            let e = trotter_propagator(&ho_cos(), 0.9, n, &grid).unwrap();
            assert!(e.unitarity_residual() < 1e-8);
            assert_eq!(e.provenance(), Provenance::Trotter { n });
        }
    }

    #[test]
    fn single_sampled_step_is_free_kernel_times_phase() {
        let grid = make_grid(1, 64, 4.0).unwrap();
        let v = Potential::cosine(1.0, vec![1.0]);
        let h = QuadraticHamiltonian::free(1).with_potential(v.clone());
        let opts = TrotterOptions { free_step: FreeStep::SampledKernel, placement: Placement::Start };
        let k = trotter_with(&h, 0.7, 1, &grid, opts).unwrap();
        for (j, kk) in [(3, 40), (20, 21), (63, 0)] {
            let (x, y) = (grid.node(j), grid.node(kk));
            let free = C64::new(2.0 * PI * 0.7, 0.0).powf(-0.5) * C64::cis(-PI / 4.0) * C64::cis((x - y).powi(2) / 1.4);
            let want = free * C64::cis(-0.7 * v.eval(&[y]).re);
            // c_t comes from a grid probe overlap, good to ~1e-8
            assert!((k.entry(j, kk) - want).norm() < 1e-7, "{} {want}", k.entry(j, kk));
        }
    }

    #[test]
    fn lazy_entry_matches_dense_product() {
        let grid = make_grid(1, 64, 4.0).unwrap();
        let h = QuadraticHamiltonian::free(1).with_potential(Potential::cosine(1.0, vec![1.0]));
        for placement in [Placement::Start, Placement::Endpoint] {
            let opts = TrotterOptions { free_step: FreeStep::SampledKernel, placement };
            for n in [1, 2, 3] {
                let dense = trotter_with(&h, 1.0, n, &grid, opts).unwrap();
                for (j, k) in [(10, 50), (32, 30)] {
                    let lazy = trotter_entry(&h, 1.0, n, &grid, &grid, j, k, placement).unwrap();
                    assert!((lazy - dense.entry(j, k)).norm() < 1e-11, "n={n}");
                }
            }
        }
    }

    #[test]
    fn sampled_step_skips_exceptional_step_times() {
        let grid = make_grid(1, 32, 3.0).unwrap();
        let opts = TrotterOptions { free_step: FreeStep::SampledKernel, placement: Placement::Start };
        // t/n = π for n = 2 → bumped to n = 3
        let k = trotter_with(&QuadraticHamiltonian::harmonic(1), 2.0 * PI, 2, &grid, opts).unwrap();
        assert_eq!(k.provenance(), Provenance::Trotter { n: 3 });
        let err = trotter_with(&QuadraticHamiltonian::free(1), 0.0, 2, &grid, opts).unwrap_err();
        assert!(matches!(err, PropagatorError::ExceptionalStep { .. }));
    }

    #[test]
    fn sampled_metaplectic_is_unitary_when_resolved() {
        // t = π/2: h·K is the unitary DFT matrix when N = 4L²
        let grid = make_grid(1, 64, 4.0).unwrap();
        let k = crate::propagators::metaplectic_kernel(&QuadraticHamiltonian::harmonic(1), PI / 2.0, &grid).unwrap();
        assert!(unitarity_residual(&k.operator()) < 1e-8);
    }
}
