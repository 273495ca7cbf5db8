//! Closed-form oscillator kernel c(k)|sin t|^{−d/2}exp(πi(x²+y²)cot t − 2πix·y/sin t)
//! and the reflection descriptors at t = kπ.

use super::{check_dims, GridPropagator, MetaplecticKernelSpec, PropagatorError, Provenance, SampledKernel};
use crate::lattice::{inner, Grid};
use crate::symplectic::{flow_at, QuadraticHamiltonian};
use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// c′(k)δ((−1)^k x − y): the oscillator propagator at t = kπ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionDescriptor {
    pub t: f64,
    pub k: i64,
    pub d: usize,
    /// c′(k) as [re, im].
    pub coefficient: [f64; 2],
}

impl ReflectionDescriptor {
    /// The identity kernel δ(x − y) at t = 0.
    pub fn identity(d: usize) -> Self {
        Self { t: 0.0, k: 0, d, coefficient: [1.0, 0.0] }
    }

    pub fn parity(&self) -> i8 {
        if self.k.rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }

    pub fn coefficient(&self) -> C64 {
        C64::new(self.coefficient[0], self.coefficient[1])
    }
}

#[derive(Debug, Clone)]
pub enum MehlerKernel {
    Kernel(SampledKernel),
    Reflection(ReflectionDescriptor),
}

/// Oscillator kernel for H₀ = π(|x|² + |ξ|²)^w on `grid`; c(k) and c′(k) are
/// calibrated against the grid eigensolver.
pub fn mehler_kernel(t: f64, grid: &Grid) -> Result<MehlerKernel, PropagatorError> {
    let d = grid.dim();
    let h = QuadraticHamiltonian::harmonic(d);
    check_dims(grid, d)?;
    let prop = GridPropagator::new(&h, grid)?;
    let flow = flow_at(&h, t);
    if flow.is_near_exceptional() {
        let k = (t / PI).round() as i64;
        let g = super::standard_gaussian(*grid);
        // the probe is even, so ⟨U(kπ)g, g∘R⟩ = ⟨U(kπ)g, g⟩
        let c = inner(&prop.apply(t, &g)?, &g)? / inner(&g, &g)?;
        let c = c / c.norm();
        return Ok(MehlerKernel::Reflection(ReflectionDescriptor { t, k, d, coefficient: [c.re, c.im] }));
    }
    let c_k = MetaplecticKernelSpec::new(flow)?.calibrate_with(&prop)?.c_t();
    let (s, cot) = (t.sin(), t.cos() / t.sin());
    let amp = s.abs().powf(-(d as f64) / 2.0);
    let n = grid.len();
    let points: Vec<Vec<f64>> = (0..n).map(|j| grid.point_vec(j)).collect();
    let values = Mat::from_fn(n, n, |j, k| {
        let (x, y) = (&points[j], &points[k]);
        let sq: f64 = x.iter().chain(y.iter()).map(|v| v * v).sum();
        let xy: f64 = x.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
        c_k * amp * C64::cis(PI * sq * cot - 2.0 * PI * xy / s)
    });
    Ok(MehlerKernel::Kernel(SampledKernel::from_values(*grid, values, Provenance::Mehler, t, true).with_phase(c_k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;

    fn kernel(t: f64, grid: &Grid) -> SampledKernel {
        match mehler_kernel(t, grid).unwrap() {
            MehlerKernel::Kernel(k) => k,
            MehlerKernel::Reflection(_) => panic!("expected a kernel"),
        }
    }

    #[test]
    fn modulus_and_phase() {
        let grid = make_grid(1, 64, 4.0).unwrap();
        let k = kernel(PI / 2.0, &grid);
        let c = k.phase().unwrap();
        for (j, kk) in [(3, 10), (40, 7), (32, 32)] {
            let (x, y) = (grid.node(j), grid.node(kk));
            assert!((k.entry(j, kk).norm() - 1.0).abs() < 1e-12);
            assert!((k.entry(j, kk) - c * C64::cis(-2.0 * PI * x * y)).norm() < 1e-12);
        }
        let k = kernel(PI / 4.0, &grid);
        assert!((k.entry(5, 9).norm() - 2f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn phases_follow_the_hermite_spectrum() {
        // U(t) = e^{−it(n+½)} on Hermite functions; branch continuation of
        // (i sin t)^{−1/2} gives c(k) = e^{−iπ(2k+1)/4}, c′(k) = e^{−iπk/2}
        let grid = make_grid(1, 128, 6.0).unwrap();
        for (t, want) in [(1.0, C64::cis(-PI / 4.0)), (4.0, C64::cis(-3.0 * PI / 4.0)), (-1.0, C64::cis(PI / 4.0))] {
            assert!((kernel(t, &grid).phase().unwrap() - want).norm() < 1e-9, "t={t}");
        }
        match mehler_kernel(PI, &grid).unwrap() {
            MehlerKernel::Reflection(r) => {
                assert_eq!(r.parity(), -1);
                assert!((r.coefficient() - C64::new(0.0, -1.0)).norm() < 1e-10);
            }
            MehlerKernel::Kernel(_) => panic!("t = π must be symbolic"),
        }
    }
}
