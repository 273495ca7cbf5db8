use super::TimeFreqError;
use crate::lattice::{dft, inverse_dft, Fft1, Grid, LatticeError, Spectrum, WaveFunction};
use crate::linalg::CMat;
use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// How samples at half-nodes x_j ± h/2 are produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HalfShift {
    /// Band-limited (trigonometric) interpolation through the DFT.
    #[default]
    Spectral,
    /// Average of the neighbouring nodes.
    Linear,
}

/// W(f, g) sampled on grid nodes × DFT nodes, value (j, k) at j·N + k.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerLattice {
    grid: Grid,
    values: Vec<C64>,
}

impl WignerLattice {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn value(&self, j: usize, k: usize) -> C64 {
        self.values[j * self.grid.n() + k]
    }

    /// max |Im W| over the lattice.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    /// β Σ_k W(x_j, ξ_k) for each node j.
    pub fn position_marginal(&self) -> Vec<f64> {
        let n = self.grid.n();
        let beta = self.grid.freq_spacing();
        (0..n).map(|j| beta * self.values[j * n..(j + 1) * n].iter().map(|v| v.re).sum::<f64>()).collect()
    }
}

fn one_dim(grid: &Grid) -> Result<(), TimeFreqError> {
    if grid.dim() != 1 {
        return Err(TimeFreqError::Dimension(grid.dim()));
    }
    Ok(())
}

/// f(x_j + shift·h) for shift ∈ {+½, −½}.
fn half_shifted(f: &WaveFunction, sign: f64, mode: HalfShift) -> Vec<C64> {
    let grid = *f.grid();
    let n = grid.n();
    match mode {
        HalfShift::Spectral => {
            let spec = dft(f);
            let h = grid.spacing();
            let moved: Vec<C64> = spec
                .values()
                .iter()
                .enumerate()
                .map(|(k, v)| v * C64::cis(PI * sign * h * grid.freq(k)))
                .collect();
            inverse_dft(&Spectrum::new(grid, moved).expect("same grid")).into_values()
        }
        HalfShift::Linear => {
            let v = f.values();
            (0..n)
                .map(|j| {
                    let other = if sign > 0.0 { (j + 1) % n } else { (j + n - 1) % n };
                    0.5 * (v[j] + v[other])
                })
                .collect()
        }
    }
}

/// Cross-Wigner distribution with band-limited half-shifts.
pub fn wigner(f: &WaveFunction, g: &WaveFunction) -> Result<WignerLattice, TimeFreqError> {
    wigner_with(f, g, HalfShift::Spectral)
}

/// W(f,g)(x_j, ξ_k) ≈ h Σ_m e^{−2πi m h ξ_k} f(x_j + mh/2) conj g(x_j − mh/2), the sum
/// running over one period |m| ≤ N/2 with the end points halved.
pub fn wigner_with(f: &WaveFunction, g: &WaveFunction, mode: HalfShift) -> Result<WignerLattice, TimeFreqError> {
    if f.grid() != g.grid() {
        return Err(LatticeError::GridMismatch.into());
    }
    let grid = *f.grid();
    one_dim(&grid)?;
    let n = grid.n();
    let half = n / 2;
    let h = grid.spacing();
    let (fv, gv) = (f.values(), g.values());
    let f_plus = half_shifted(f, 1.0, mode);
    let g_minus = half_shifted(g, -1.0, mode);
    let wrap = |i: i64| i.rem_euclid(n as i64) as usize;
    // u(m) = f(x_j + mh/2) conj g(x_j − mh/2)
    let term = |j: usize, m: i64| -> C64 {
        let r = m.div_euclid(2);
        let (a, b) = (wrap(j as i64 + r), wrap(j as i64 - r));
        if m.rem_euclid(2) == 0 {
            fv[a] * gv[b].conj()
        } else {
            f_plus[a] * g_minus[b].conj()
        }
    };
    let plan = Fft1::new(n);
    let mut values = Vec::with_capacity(n * n);
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        // buf[m mod N] holds u(m) for m ∈ [−N/2, N/2], ends halved and folded
        for (i, b) in buf.iter_mut().enumerate() {
            let m = if i < half { i as i64 } else { i as i64 - n as i64 };
            *b = term(j, m);
        }
        buf[half] = 0.5 * (term(j, -(half as i64)) + term(j, half as i64));
        plan.raw_forward(&mut buf);
        // raw index r ↔ frequency index k = r + N/2 (mod N)
        let mut row = vec![C64::new(0.0, 0.0); n];
        for (r, v) in buf.iter().enumerate() {
            row[(r + half) % n] = v * h;
        }
        values.extend(row);
    }
    Ok(WignerLattice { grid, values })
}

/// A symbol σ(x, ξ) sampled at the 2N − 1 midpoints (x_j + x_m)/2 × the DFT nodes,
/// stored at p·N + k with p = j + m.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSymbol {
    grid: Grid,
    values: Vec<C64>,
}

impl SampledSymbol {
    pub fn from_fn(grid: Grid, sigma: impl Fn(f64, f64) -> C64) -> Result<Self, TimeFreqError> {
        one_dim(&grid)?;
        let n = grid.n();
        let h = grid.spacing();
        let mut values = Vec::with_capacity((2 * n - 1) * n);
        for p in 0..2 * n - 1 {
            let x = -grid.half_width() + 0.5 * p as f64 * h;
            values.extend((0..n).map(|k| sigma(x, grid.freq(k))));
        }
        Ok(Self { grid, values })
    }

    /// From values on the Wigner lattice (nodes × DFT nodes, j·N + k); midpoints
    /// between nodes are linearly interpolated.
    pub fn from_lattice(grid: Grid, lattice: &[C64]) -> Result<Self, TimeFreqError> {
        one_dim(&grid)?;
        let n = grid.n();
        if lattice.len() != n * n {
            return Err(TimeFreqError::SymbolLattice);
        }
        let mut values = Vec::with_capacity((2 * n - 1) * n);
        for p in 0..2 * n - 1 {
            let (a, b) = (p / 2, p.div_ceil(2));
            values.extend((0..n).map(|k| 0.5 * (lattice[a * n + k] + lattice[b * n + k])));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn value(&self, p: usize, k: usize) -> C64 {
        self.values[p * self.grid.n() + k]
    }
}

/// Dense matrix of σ^w acting on grid samples:
/// (σ^w f)_j = h Σ_m K(j, m) f_m, K(j, m) = β Σ_k σ((x_j + x_m)/2, ξ_k) e^{2πi(x_j − x_m)ξ_k}.
pub fn weyl_matrix(sigma: &SampledSymbol) -> CMat {
    let grid = sigma.grid;
    let n = grid.n();
    let half = n / 2;
    let (h, beta) = (grid.spacing(), grid.freq_spacing());
    let plan = Fft1::new(n);
    // S_p[r] = β Σ_k σ_p(ξ_k) e^{2πi r (k − N/2)/N}
    let mut s = vec![C64::new(0.0, 0.0); (2 * n - 1) * n];
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for p in 0..2 * n - 1 {
        for (r, b) in buf.iter_mut().enumerate() {
            *b = sigma.value(p, (r + half) % n);
        }
        plan.raw_inverse(&mut buf);
        for (r, v) in buf.iter().enumerate() {
            s[p * n + r] = v * beta;
        }
    }
    Mat::from_fn(n, n, |j, m| s[(j + m) * n + (j + n - m) % n] * h)
}

/// σ^w f on the grid.
pub fn weyl_apply(sigma: &SampledSymbol, f: &WaveFunction) -> Result<WaveFunction, TimeFreqError> {
    if sigma.grid() != f.grid() {
        return Err(TimeFreqError::SymbolLattice);
    }
    let m = weyl_matrix(sigma);
    let n = f.grid().n();
    let out = (0..n).map(|j| (0..n).map(|l| m[(j, l)] * f.values()[l]).sum()).collect();
    Ok(WaveFunction::new(*f.grid(), out)?)
}
