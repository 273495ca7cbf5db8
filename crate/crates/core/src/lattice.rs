//! Uniform grids on [−L, L)^d, the Riemann-sum Fourier transform under the
//! e^{−2πix·ξ} convention, and wave-function storage.
//!
//! Nodes are x_j = −L + j·h with h = 2L/N; frequencies are ξ_k = k/(2L),
//! k = −N/2..N/2−1, stored in centred order (index k + N/2).

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatticeError {
    #[error("dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("points per axis must be even and at least 16, got {0}")]
    Points(usize),
    #[error("half-width must be positive and finite, got {0}")]
    HalfWidth(f64),
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("compact fraction must lie in (0, 0.8), got {0}")]
    CompactFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    d: usize,
    n: usize,
    half_width: f64,
}

pub fn make_grid(d: usize, n: usize, half_width: f64) -> Result<Grid, LatticeError> {
    Grid::new(d, n, half_width)
}

impl Grid {
    pub fn new(d: usize, n: usize, half_width: f64) -> Result<Self, LatticeError> {
        if d != 1 && d != 2 {
            return Err(LatticeError::Dimension(d));
        }
        if n < 16 || n % 2 != 0 {
            return Err(LatticeError::Points(n));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(LatticeError::HalfWidth(half_width));
        }
        Ok(Self { d, n, half_width })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Frequency spacing 1/(2L).
    pub fn freq_spacing(&self) -> f64 {
        0.5 / self.half_width
    }

    /// Total node count N^d.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight h^d.
    pub fn cell(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Frequency at centred index i (i = k + N/2).
    pub fn freq(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.freq_spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.freq(i)).collect()
    }

    /// Per-axis indices of a flat (row-major) node index.
    pub fn axis_indices(&self, flat: usize) -> [usize; 2] {
        match self.d {
            1 => [flat, 0],
            _ => [flat / self.n, flat % self.n],
        }
    }

    /// Coordinates of a flat node index (unused axes are zero).
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let [a, b] = self.axis_indices(flat);
        match self.d {
            1 => [self.node(a), 0.0],
            _ => [self.node(a), self.node(b)],
        }
    }

    pub fn point_vec(&self, flat: usize) -> Vec<f64> {
        self.point(flat)[..self.d].to_vec()
    }

    /// Frequency vector of a flat centred spectral index.
    pub fn freq_point(&self, flat: usize) -> [f64; 2] {
        let [a, b] = self.axis_indices(flat);
        match self.d {
            1 => [self.freq(a), 0.0],
            _ => [self.freq(a), self.freq(b)],
        }
    }

    /// The product grid on which kernels of a 1-d grid live as functions.
    pub fn product(&self) -> Result<Grid, LatticeError> {
        Grid::new(2 * self.d, self.n, self.half_width)
    }

    /// Flat index of the node nearest to `x` (clamped into the grid).
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let axis = |v: f64| {
            let j = ((v + self.half_width) / self.spacing()).round();
            j.clamp(0.0, (self.n - 1) as f64) as usize
        };
        match self.d {
            1 => axis(x[0]),
            _ => axis(x[0]) * self.n + axis(x[1]),
        }
    }
}

/// Complex samples on the grid nodes, row-major over axes.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    values: Vec<C64>,
}

impl WaveFunction {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self, LatticeError> {
        if values.len() != grid.len() {
            return Err(LatticeError::Length { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(LatticeError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> C64) -> Self {
        let values = (0..grid.len()).map(|j| f(&grid.point(j)[..grid.dim()])).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        inner(self, self).map(|z| z.re.max(0.0).sqrt()).unwrap_or(0.0)
    }

    pub fn scale(&mut self, s: C64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }
}

/// Fourier samples at the centred frequency nodes, row-major over axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    values: Vec<C64>,
}

impl Spectrum {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self, LatticeError> {
        if values.len() != grid.len() {
            return Err(LatticeError::Length { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    /// Inner product with weight (1/(2L))^d; equals the grid inner product of the
    /// inverse transforms (discrete Parseval).
    pub fn inner(&self, other: &Spectrum) -> Result<C64, LatticeError> {
        if self.grid != other.grid {
            return Err(LatticeError::GridMismatch);
        }
        let w = self.grid.freq_spacing().powi(self.grid.dim() as i32);
        let terms: Vec<C64> =
            self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).collect();
        Ok(pairwise_sum(&terms) * w)
    }
}

/// Cached FFT plans for one axis length.
#[derive(Clone)]
pub struct Fft1 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft1").field("n", &self.n).finish()
    }
}

impl Fft1 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In place: node samples → centred spectrum of Σ_j e^{−2πi x_j ξ_k} f_j
    /// (no h factor). Uses x_j ξ_k = −k/2 + jk/N.
    pub fn centred_forward(&self, buf: &mut [C64]) {
        self.forward.process(buf);
        let n = self.n;
        let half = n / 2;
        // result index i (centred) takes FFT bin (i − N/2) mod N with sign (−1)^k
        buf.rotate_right(half);
        for (i, v) in buf.iter_mut().enumerate() {
            if (i + half) % 2 == 1 {
                *v = -*v;
            }
        }
    }

    /// In place inverse of [`Self::centred_forward`] without the 1/N factor:
    /// Σ_k e^{2πi x_j ξ_k} F_k.
    pub fn centred_inverse(&self, buf: &mut [C64]) {
        let n = self.n;
        let half = n / 2;
        for (i, v) in buf.iter_mut().enumerate() {
            if (i + half) % 2 == 1 {
                *v = -*v;
            }
        }
        buf.rotate_left(half);
        self.inverse.process(buf);
    }

    pub fn raw_forward(&self, buf: &mut [C64]) {
        self.forward.process(buf);
    }

    pub fn raw_inverse(&self, buf: &mut [C64]) {
        self.inverse.process(buf);
    }
}

/// Applies `op` along every axis of row-major data with `d` axes of length n.
fn along_axes(values: &mut [C64], n: usize, d: usize, op: impl Fn(&mut [C64])) {
    match d {
        1 => op(values),
        2 => {
            for row in values.chunks_mut(n) {
                op(row);
            }
            let mut col = vec![C64::new(0.0, 0.0); n];
            for c in 0..n {
                for r in 0..n {
                    col[r] = values[r * n + c];
                }
                op(&mut col);
                for r in 0..n {
                    values[r * n + c] = col[r];
                }
            }
        }
        _ => unreachable!("grids have d ∈ {{1, 2}}"),
    }
}

/// Forward transform of row-major data with `d` axes (d ≤ 2 here; kernels with
/// d = 1 use two axes), including the h^d weight.
pub fn dft_raw(values: &mut [C64], grid_axes: usize, n: usize, spacing: f64, plan: &Fft1) {
    along_axes(values, n, grid_axes, |row| plan.centred_forward(row));
    let w = spacing.powi(grid_axes as i32);
    values.iter_mut().for_each(|v| *v *= w);
}

pub fn inverse_dft_raw(values: &mut [C64], grid_axes: usize, n: usize, freq_spacing: f64, plan: &Fft1) {
    along_axes(values, n, grid_axes, |row| plan.centred_inverse(row));
    let w = freq_spacing.powi(grid_axes as i32);
    values.iter_mut().for_each(|v| *v *= w);
}

/// Riemann-sum Fourier transform h^d Σ_j e^{−2πi x_j·ξ_k} f(x_j).
pub fn dft(f: &WaveFunction) -> Spectrum {
    let grid = *f.grid();
    let plan = Fft1::new(grid.n());
    let mut values = f.values().to_vec();
    dft_raw(&mut values, grid.dim(), grid.n(), grid.spacing(), &plan);
    Spectrum { grid, values }
}

/// Inverse of [`dft`]: (1/(2L))^d Σ_k e^{2πi x_j·ξ_k} F(ξ_k).
pub fn inverse_dft(s: &Spectrum) -> WaveFunction {
    let grid = *s.grid();
    let plan = Fft1::new(grid.n());
    let mut values = s.values().to_vec();
    inverse_dft_raw(&mut values, grid.dim(), grid.n(), grid.freq_spacing(), &plan);
    WaveFunction { grid, values }
}

/// h^d Σ_j f(x_j) conj(g(x_j)).
pub fn inner(f: &WaveFunction, g: &WaveFunction) -> Result<C64, LatticeError> {
    if f.grid() != g.grid() {
        return Err(LatticeError::GridMismatch);
    }
    let terms: Vec<C64> = f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).collect();
    Ok(pairwise_sum(&terms) * f.grid().cell())
}

/// Fixed-order pairwise summation; the result does not depend on worker count.
pub fn pairwise_sum(terms: &[C64]) -> C64 {
    const LEAF: usize = 32;
    if terms.len() <= LEAF {
        return terms.iter().fold(C64::new(0.0, 0.0), |acc, v| acc + v);
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

pub fn pairwise_sum_real(terms: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if terms.len() <= LEAF {
        return terms.iter().sum();
    }
    let mid = terms.len() / 2;
    pairwise_sum_real(&terms[..mid]) + pairwise_sum_real(&terms[mid..])
}

/// Smooth cutoff: 1 on [−fL, fL]^d, 0 on the outermost 10% of nodes per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactWindow {
    grid: Grid,
    fraction: f64,
    bump: Vec<f64>,
}

impl CompactWindow {
    /// The default window with K = [−L/2, L/2]^d.
    pub fn new(grid: Grid) -> Self {
        Self::with_fraction(grid, 0.5).expect("0.5 is a valid fraction")
    }

    pub fn with_fraction(grid: Grid, fraction: f64) -> Result<Self, LatticeError> {
        if !(fraction > 0.0 && fraction < 0.8) {
            return Err(LatticeError::CompactFraction(fraction));
        }
        let n = grid.n();
        let shell = n.div_ceil(10);
        let inner_edge = fraction * grid.half_width();
        // zero from the first shell node inward edge; transition in between
        let outer_edge = grid.node(shell).abs().min(grid.node(n - 1 - shell).abs());
        let axis: Vec<f64> = (0..n)
            .map(|j| {
                if j < shell || j >= n - shell {
                    return 0.0;
                }
                let r = grid.node(j).abs();
                if r <= inner_edge {
                    1.0
                } else if r >= outer_edge {
                    0.0
                } else {
                    smooth_step((outer_edge - r) / (outer_edge - inner_edge))
                }
            })
            .collect();
        let bump = (0..grid.len())
            .map(|flat| {
                let [a, b] = grid.axis_indices(flat);
                if grid.dim() == 1 {
                    axis[a]
                } else {
                    axis[a] * axis[b]
                }
            })
            .collect();
        Ok(Self { grid, fraction, bump })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    /// Bump values per flat node.
    pub fn bump(&self) -> &[f64] {
        &self.bump
    }

    /// Per-axis membership of the compact set K.
    pub fn axis_inside(&self, j: usize) -> bool {
        self.grid.node(j).abs() <= self.fraction * self.grid.half_width() + 1e-12
    }

    pub fn inside(&self, flat: usize) -> bool {
        let [a, b] = self.grid.axis_indices(flat);
        self.axis_inside(a) && (self.grid.dim() == 1 || self.axis_inside(b))
    }

    /// Flat indices of nodes in K.
    pub fn inside_indices(&self) -> Vec<usize> {
        (0..self.grid.len()).filter(|&j| self.inside(j)).collect()
    }
}

/// C^∞ transition from 0 (at s ≤ 0) to 1 (at s ≥ 1).
fn smooth_step(s: f64) -> f64 {
    let f = |u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 };
    let a = f(s);
    let b = f(1.0 - s);
    a / (a + b)
}

/// Fraction of ‖ψ‖² carried by nodes in the outer 10% shell of each axis.
pub fn boundary_mass(f: &WaveFunction) -> f64 {
    let grid = f.grid();
    let n = grid.n();
    let shell = n.div_ceil(10);
    let outer = |j: usize| j < shell || j >= n - shell;
    let mut total = Vec::with_capacity(grid.len());
    let mut edge = Vec::with_capacity(grid.len());
    for (flat, v) in f.values().iter().enumerate() {
        let [a, b] = grid.axis_indices(flat);
        let m = v.norm_sqr();
        total.push(m);
        let is_outer = outer(a) || (grid.dim() == 2 && outer(b));
        edge.push(if is_outer { m } else { 0.0 });
    }
    let total = pairwise_sum_real(&total);
    if total == 0.0 {
        return 0.0;
    }
    pairwise_sum_real(&edge) / total
}

pub const BOUNDARY_MASS_FLAG: f64 = 1e-8;
