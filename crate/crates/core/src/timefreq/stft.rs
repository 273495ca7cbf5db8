use super::{TimeFreqError, Window};
use crate::lattice::{dft_raw, Fft1, Grid, LatticeError, WaveFunction};
use num_complex::Complex64 as C64;

/// V_g f sampled on (grid nodes, every `stride`-th per axis) × (DFT nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct STFTGram {
    grid: Grid,
    stride: usize,
    values: Vec<C64>,
}

impl STFTGram {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Positions per axis.
    pub fn positions_per_axis(&self) -> usize {
        self.grid.n() / self.stride
    }

    pub fn position_count(&self) -> usize {
        self.positions_per_axis().pow(self.grid.dim() as u32)
    }

    /// Position lattice step α = h·stride.
    pub fn alpha(&self) -> f64 {
        self.grid.spacing() * self.stride as f64
    }

    /// Frequency lattice step β = 1/(2L).
    pub fn beta(&self) -> f64 {
        self.grid.freq_spacing()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// V_g f at position index `p` (flat over the strided lattice) and centred
    /// frequency index `k` (flat).
    pub fn value(&self, p: usize, k: usize) -> C64 {
        self.values[p * self.grid.len() + k]
    }

    /// Grid node index of strided position `p`.
    pub fn position_node(&self, p: usize) -> usize {
        position_node(&self.grid, self.stride, p)
    }
}

fn position_node(grid: &Grid, stride: usize, p: usize) -> usize {
    let per = grid.n() / stride;
    match grid.dim() {
        1 => p * stride,
        _ => (p / per) * stride * grid.n() + (p % per) * stride,
    }
}

fn check(f: &WaveFunction, g: &Window, stride: usize) -> Result<(), TimeFreqError> {
    if f.grid() != g.grid() {
        return Err(LatticeError::GridMismatch.into());
    }
    let n = f.grid().n();
    if stride == 0 || n % stride != 0 {
        return Err(TimeFreqError::Stride { stride, n });
    }
    Ok(())
}

/// Streams V_g f(x_p, ·) for every strided position p, in lattice order.
pub(crate) fn for_each_position(
    f: &WaveFunction,
    g: &Window,
    stride: usize,
    mut visit: impl FnMut(usize, &[C64]),
) -> Result<(), TimeFreqError> {
    check(f, g, stride)?;
    let grid = *f.grid();
    let plan = Fft1::new(grid.n());
    let count = (grid.n() / stride).pow(grid.dim() as u32);
    let mut buf = vec![C64::new(0.0, 0.0); grid.len()];
    for p in 0..count {
        let node = position_node(&grid, stride, p);
        let offset = grid.axis_indices(node);
        let window = g.shifted(offset);
        for (j, (b, v)) in buf.iter_mut().zip(f.values()).enumerate() {
            *b = v * window(j).conj();
        }
        dft_raw(&mut buf, grid.dim(), grid.n(), grid.spacing(), &plan);
        visit(p, &buf);
    }
    Ok(())
}

/// Streams V_g a(x_p, ·) and V_g b(x_p, ·) together over every position.
pub(crate) fn for_each_position_pair(
    a: &WaveFunction,
    b: &WaveFunction,
    g: &Window,
    mut visit: impl FnMut(usize, &[C64], &[C64]),
) -> Result<(), TimeFreqError> {
    check(a, g, 1)?;
    check(b, g, 1)?;
    let grid = *a.grid();
    let plan = Fft1::new(grid.n());
    let mut ba = vec![C64::new(0.0, 0.0); grid.len()];
    let mut bb = ba.clone();
    for p in 0..grid.len() {
        let window = g.shifted(grid.axis_indices(p));
        for j in 0..grid.len() {
            let w = window(j).conj();
            ba[j] = a.values()[j] * w;
            bb[j] = b.values()[j] * w;
        }
        dft_raw(&mut ba, grid.dim(), grid.n(), grid.spacing(), &plan);
        dft_raw(&mut bb, grid.dim(), grid.n(), grid.spacing(), &plan);
        visit(p, &ba, &bb);
    }
    Ok(())
}

/// Full-lattice STFT V_g f(x_j, ξ_k) = dft(f · conj(T_{x_j} g))(ξ_k).
pub fn stft(f: &WaveFunction, g: &Window) -> Result<STFTGram, TimeFreqError> {
    stft_with(f, g, 1)
}

/// STFT on positions subsampled by `stride` per axis.
pub fn stft_with(f: &WaveFunction, g: &Window, stride: usize) -> Result<STFTGram, TimeFreqError> {
    let mut values = Vec::new();
    for_each_position(f, g, stride, |_, spec| values.extend_from_slice(spec))?;
    Ok(STFTGram { grid: *f.grid(), stride, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_ambiguity_function() {
        let grid = make_grid(1, 128, 8.0).unwrap();
        let g = Window::gaussian(grid);
        let gram = stft(g.function(), &g).unwrap();
        let origin = gram.value(64, 64);
        assert!((origin - C64::new(1.0, 0.0)).norm() < 1e-10);
        for p in (0..128).step_by(7) {
            for k in (0..128).step_by(5) {
                let (x, xi) = (grid.node(p), grid.freq(k));
                let want = (-PI * (x * x + xi * xi) / 2.0).exp();
                assert!((gram.value(p, k).norm() - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn covariance_on_lattice_shifts() {
        let grid = make_grid(1, 128, 8.0).unwrap();
        let g = Window::gaussian(grid);
        let (sx, sk) = (10usize, 6usize); // shift by 10 nodes, 6 frequency steps
        let shifted = WaveFunction::from_fn(grid, |_| C64::new(0.0, 0.0));
        let mut vals = shifted.into_values();
        for (j, v) in vals.iter_mut().enumerate() {
            let src = (j + 128 - sx) % 128;
            *v = g.function().values()[src] * C64::cis(2.0 * PI * grid.node(j) * sk as f64 * grid.freq_spacing());
        }
        let moved = WaveFunction::new(grid, vals).unwrap();
        let a = stft(&moved, &g).unwrap();
        let b = stft(g.function(), &g).unwrap();
        for p in 20..100 {
            for k in 20..100 {
                let lhs = a.value(p, k).norm();
                let rhs = b.value(p - sx, k - sk).norm();
                assert!((lhs - rhs).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn strided_positions_subsample_full_lattice() {
        let grid = make_grid(2, 16, 3.0).unwrap();
        let g = Window::gaussian(grid);
        let f = WaveFunction::from_fn(grid, |x| C64::new((-(x[0] - 0.3).powi(2) - x[1] * x[1]).exp(), x[1]));
        let full = stft(&f, &g).unwrap();
        let coarse = stft_with(&f, &g, 4).unwrap();
        assert_eq!(coarse.position_count(), 16);
        for p in 0..16 {
            let node = coarse.position_node(p);
            for k in [0, 17, 255] {
                assert_eq!(coarse.value(p, k), full.value(node, k));
            }
        }
    }
}
