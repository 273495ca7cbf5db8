//! The Riemann-sum action S_n of a polygonal path and the time-sliced kernel
//! (2πiτ)^{−n/2}∫e^{iS_n} evaluated by Gauss–Legendre panels.

use super::{Placement, PropagatorError};
use crate::lattice::{pairwise_sum, Grid};
use crate::potential::Potential;
use crate::symplectic::QuadraticHamiltonian;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Σ_k τ[½(|x_k − x_{k−1}|/τ)² − V(·)] with V at x_k (Endpoint) or x_{k−1} (Start).
fn action_complex(t: f64, vertices: &[Vec<f64>], potential: &Potential, placement: Placement) -> C64 {
    let n = vertices.len() - 1;
    let tau = t / n as f64;
    let mut acc = C64::new(0.0, 0.0);
    for k in 1..=n {
        let step: f64 = vertices[k].iter().zip(&vertices[k - 1]).map(|(a, b)| (a - b).powi(2)).sum();
        let at = if placement == Placement::Start { &vertices[k - 1] } else { &vertices[k] };
        acc += C64::new(0.5 * step / tau, 0.0) - potential.eval(at) * tau;
    }
    acc
}

/// S_n(t; x_0, …, x_n) with n = vertices.len() − 1; `placement` selects where V is
/// evaluated (Endpoint reproduces V(x_k), k = 1..n).
pub fn action_sum(t: f64, vertices: &[Vec<f64>], potential: &Potential, placement: Placement) -> Result<f64, PropagatorError> {
    if t == 0.0 {
        return Err(PropagatorError::ZeroTime);
    }
    if vertices.len() < 2 {
        return Err(PropagatorError::ZeroSteps);
    }
    if placement == Placement::Strang {
        return Err(PropagatorError::Placement(placement));
    }
    if !potential.is_real() {
        return Err(PropagatorError::ComplexPotential);
    }
    Ok(action_complex(t, vertices, potential, placement).re)
}

/// Nodes and weights of the m-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 0 { 1.0 } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite rule on [−L, L]: one panel per grid cell with `points_per_cell` nodes.
fn panel_rule(grid: &Grid, points_per_cell: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(points_per_cell);
    let h = grid.spacing();
    let mut xs = Vec::with_capacity(grid.n() * points_per_cell);
    let mut ws = Vec::with_capacity(grid.n() * points_per_cell);
    for p in 0..grid.n() {
        let mid = -grid.half_width() + (p as f64 + 0.5) * h;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(mid + 0.5 * h * x);
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

/// Minimum quadrature density relative to the grid.
pub const MIN_POINTS_PER_CELL: usize = 4;

/// Time-sliced kernel of −½Δ + V between y (= x_0) and x (= x_n):
/// (2πiτ)^{−n/2} ∫_{[−L,L]^{n−1}} e^{iS_n} dx_1…dx_{n−1}, τ = t/n.
#[allow(clippy::too_many_arguments)]
pub fn timeslice_kernel_quadrature(
    h: &QuadraticHamiltonian,
    t: f64,
    n: usize,
    grid: &Grid,
    x: f64,
    y: f64,
    placement: Placement,
    points_per_cell: usize,
) -> Result<C64, PropagatorError> {
    if grid.dim() != 1 || h.dim() != 1 || n == 0 || n > 3 {
        return Err(PropagatorError::QuadratureCost { d: grid.dim(), n });
    }
    if *h != QuadraticHamiltonian::free(1).with_potential(h.potential().clone()) {
        return Err(PropagatorError::NotFreeParticle);
    }
    if t == 0.0 {
        return Err(PropagatorError::ZeroTime);
    }
    if placement == Placement::Strang {
        return Err(PropagatorError::Placement(placement));
    }
    let v = h.potential();
    let tau = t / n as f64;
    let prefactor = (C64::new(0.0, 2.0 * PI * tau)).powf(-(n as f64) / 2.0);
    let integrand = |inner: &[f64]| {
        let mut path = Vec::with_capacity(n + 1);
        path.push(vec![y]);
        path.extend(inner.iter().map(|&p| vec![p]));
        path.push(vec![x]);
        (C64::new(0.0, 1.0) * action_complex(t, &path, v, placement)).exp()
    };
    let points = points_per_cell.max(MIN_POINTS_PER_CELL);
    let value = match n {
        1 => integrand(&[]),
        2 => {
            let (xs, ws) = panel_rule(grid, points);
            let terms: Vec<C64> = xs.iter().zip(&ws).map(|(p, w)| integrand(&[*p]) * *w).collect();
            pairwise_sum(&terms)
        }
        _ => {
            let (xs, ws) = panel_rule(grid, points);
            let rows: Vec<C64> = xs
                .iter()
                .zip(&ws)
                .map(|(p, wp)| {
                    let terms: Vec<C64> = xs.iter().zip(&ws).map(|(q, wq)| integrand(&[*p, *q]) * (wp * wq)).collect();
                    pairwise_sum(&terms)
                })
                .collect();
            pairwise_sum(&rows)
        }
    };
    Ok(prefactor * value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;

    #[test]
    fn action_examples() {
        let zero = Potential::Zero;
        let s = action_sum(1.0, &[vec![0.0], vec![1.0]], &zero, Placement::Endpoint).unwrap();
        assert_eq!(s, 0.5);
        let s = action_sum(1.0, &[vec![0.0], vec![0.5], vec![1.0]], &zero, Placement::Endpoint).unwrap();
        assert!((s - 0.5).abs() < 1e-15);
        assert_eq!(action_sum(0.0, &[vec![0.0], vec![1.0]], &zero, Placement::Start), Err(PropagatorError::ZeroTime));
    }

    #[test]
    fn placement_selects_vertices() {
        let v = Potential::GaussianBump { amplitude: 1.0, center: vec![0.0], width: 1.0 };
        let path = [vec![0.0], vec![1.0]];
        let end = action_sum(2.0, &path, &v, Placement::Endpoint).unwrap();
        let start = action_sum(2.0, &path, &v, Placement::Start).unwrap();
        assert!((end - (0.25 - 2.0 * (-1f64).exp())).abs() < 1e-15);
        assert!((start - (0.25 - 2.0)).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for m in [1, 2, 4, 8, 13] {
            let (x, w) = gauss_legendre(m);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            let deg = 2 * m - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg + 1) as f64 } else { 0.0 };
            let got: f64 = x.iter().zip(&w).map(|(a, b)| a.powi(deg as i32) * b).sum();
            assert!((got - exact).abs() < 1e-13, "m={m}");
            let even = 2 * m - 2;
            let got: f64 = x.iter().zip(&w).map(|(a, b)| a.powi(even as i32) * b).sum();
            assert!((got - 2.0 / (even + 1) as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn single_slice_is_closed_form() {
        let grid = make_grid(1, 64, 4.0).unwrap();
        let v = Potential::cosine(1.0, vec![1.0]);
        let h = QuadraticHamiltonian::free(1).with_potential(v.clone());
        let (x, y, t) = (0.4, -0.3, 0.8);
        let got = timeslice_kernel_quadrature(&h, t, 1, &grid, x, y, Placement::Endpoint, 4).unwrap();
        let want = C64::new(0.0, 2.0 * PI * t).powf(-0.5) * C64::cis((x - y).powi(2) / (2.0 * t)) * C64::cis(-t * v.eval(&[x]).re);
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn rejects_unsupported_requests() {
        let grid = make_grid(1, 64, 4.0).unwrap();
        let free = QuadraticHamiltonian::free(1);
        assert!(matches!(
            timeslice_kernel_quadrature(&free, 1.0, 4, &grid, 0.0, 0.0, Placement::Start, 4),
            Err(PropagatorError::QuadratureCost { .. })
        ));
        assert_eq!(
            timeslice_kernel_quadrature(&QuadraticHamiltonian::harmonic(1), 1.0, 2, &grid, 0.0, 0.0, Placement::Start, 4),
            Err(PropagatorError::NotFreeParticle)
        );
    }
}
