use super::stft::for_each_position_pair;
use super::{TimeFreqError, Window};
use crate::lattice::{pairwise_sum, Grid, LatticeError, WaveFunction};
use crate::propagators::{gauss_legendre, ReflectionDescriptor, SampledKernel};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// coefficient · π(z₁)g ⊗ π(z₂)g on ℝ¹ × ℝ¹, with z = [x, ξ] and
/// π(x₀, ξ₀)g(x) = e^{2πiξ₀x} g(x − x₀), g(x) = 2^{1/4}e^{−πx²}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub z1: [f64; 2],
    pub z2: [f64; 2],
    #[serde(default = "unit")]
    pub coefficient: [f64; 2],
}

fn unit() -> [f64; 2] {
    [1.0, 0.0]
}

fn shifted_gaussian(z: [f64; 2], x: f64) -> C64 {
    C64::cis(2.0 * PI * z[1] * x) * (2f64.powf(0.25) * (-PI * (x - z[0]).powi(2)).exp())
}

impl Atom {
    pub fn new(z1: [f64; 2], z2: [f64; 2]) -> Self {
        Self { z1, z2, coefficient: unit() }
    }

    /// The product Gaussian g ⊗ g.
    pub fn centred() -> Self {
        Self::new([0.0; 2], [0.0; 2])
    }

    pub fn with_coefficient(mut self, c: C64) -> Self {
        self.coefficient = [c.re, c.im];
        self
    }

    pub fn coefficient(&self) -> C64 {
        C64::new(self.coefficient[0], self.coefficient[1])
    }

    pub fn eval(&self, x: f64, y: f64) -> C64 {
        self.coefficient() * shifted_gaussian(self.z1, x) * shifted_gaussian(self.z2, y)
    }

    /// The atom sampled on the product grid of a 1-d grid.
    pub fn sample(&self, grid: &Grid) -> Result<WaveFunction, TimeFreqError> {
        if grid.dim() != 1 {
            return Err(TimeFreqError::Atom);
        }
        let product = grid.product()?;
        Ok(WaveFunction::from_fn(product, |p| self.eval(p[0], p[1])))
    }
}

/// What the test function is paired against.
#[derive(Debug, Clone, Copy)]
pub enum PairingTarget<'a> {
    Sampled(&'a SampledKernel),
    Reflection(&'a ReflectionDescriptor),
}

/// ⟨a, φ⟩ for φ = Σ atoms: h²ΣΣ a(x_j, y_k) conj φ(x_j, y_k) for a sampled kernel, or
/// c′∫conj φ((−1)^k y, y) dy for a reflection descriptor.
pub fn weakstar_pairing(target: PairingTarget<'_>, atoms: &[Atom]) -> Result<C64, TimeFreqError> {
    Ok(weakstar_pairings(target, atoms)?.iter().sum())
}

/// ⟨a, φ_i⟩ for each atom separately.
pub fn weakstar_pairings(target: PairingTarget<'_>, atoms: &[Atom]) -> Result<Vec<C64>, TimeFreqError> {
    match target {
        PairingTarget::Sampled(k) => {
            let grid = *k.grid();
            if grid.dim() != 1 {
                return Err(TimeFreqError::Atom);
            }
            let n = grid.n();
            let nodes = grid.nodes();
            let cell2 = grid.cell().powi(2);
            Ok(atoms
                .iter()
                .map(|atom| {
                    // the atom factorises, so the double sum is a row-weighted matrix-vector product
                    let left: Vec<C64> = nodes.iter().map(|x| shifted_gaussian(atom.z1, *x).conj()).collect();
                    let right: Vec<C64> = nodes.iter().map(|y| shifted_gaussian(atom.z2, *y).conj()).collect();
                    let rows: Vec<C64> = (0..n)
                        .map(|j| {
                            let terms: Vec<C64> = (0..n).map(|l| k.entry(j, l) * right[l]).collect();
                            left[j] * pairwise_sum(&terms)
                        })
                        .collect();
                    atom.coefficient().conj() * pairwise_sum(&rows) * cell2
                })
                .collect())
        }
        PairingTarget::Reflection(desc) => {
            if desc.d != 1 {
                return Err(TimeFreqError::Atom);
            }
            let sign = desc.parity() as f64;
            Ok(atoms
                .iter()
                .map(|atom| {
                    let single = std::slice::from_ref(atom);
                    desc.coefficient() * line_integral(single, |y| atom.eval(sign * y, y).conj())
                })
                .collect())
        }
    }
}

/// ∫_ℝ f over the window where the atoms live, by composite Gauss–Legendre panels.
fn line_integral(atoms: &[Atom], f: impl Fn(f64) -> C64) -> C64 {
    let reach = atoms.iter().fold(0.0f64, |m, a| m.max(a.z1[0].abs()).max(a.z2[0].abs())) + 12.0;
    let oscill = atoms.iter().fold(1.0f64, |m, a| m.max(a.z1[1].abs()).max(a.z2[1].abs()));
    let panels = (2.0 * reach * 4.0 * oscill).ceil() as usize;
    let width = 2.0 * reach / panels as f64;
    let (gx, gw) = gauss_legendre(16);
    let terms: Vec<C64> = (0..panels)
        .flat_map(|p| {
            let mid = -reach + (p as f64 + 0.5) * width;
            gx.iter().zip(&gw).map(move |(x, w)| (mid + 0.5 * width * x, 0.5 * width * w))
        })
        .map(|(y, w)| f(y) * w)
        .collect();
    pairwise_sum(&terms)
}

/// A sampled kernel as a function on the product grid, flat index j·N + k.
pub fn kernel_as_function(k: &SampledKernel) -> Result<WaveFunction, TimeFreqError> {
    let grid = *k.grid();
    if grid.dim() != 1 {
        return Err(TimeFreqError::Atom);
    }
    let n = grid.n();
    let values = (0..n * n).map(|i| k.entry(i / n, i % n)).collect();
    Ok(WaveFunction::new(grid.product()?, values)?)
}

/// ⟨a, φ⟩ by the Moyal route: α²β² Σ V_G a · conj V_G φ over the full product
/// lattice, divided by ‖G‖² for the product window G = g ⊗ g.
pub fn stft_pairing(k: &SampledKernel, atoms: &[Atom], window: &Window) -> Result<C64, TimeFreqError> {
    let a = kernel_as_function(k)?;
    if window.grid() != a.grid() {
        return Err(LatticeError::GridMismatch.into());
    }
    let phi = atoms
        .iter()
        .map(|atom| atom.sample(k.grid()))
        .try_fold(WaveFunction::zeros(*a.grid()), |mut acc, s| {
            let s = s?;
            acc.values_mut().iter_mut().zip(s.values()).for_each(|(x, y)| *x += y);
            Ok::<_, TimeFreqError>(acc)
        })?;
    let grid = *a.grid();
    let cell = grid.cell() * grid.freq_spacing().powi(grid.dim() as i32);
    let mut rows = Vec::new();
    for_each_position_pair(&a, &phi, window, |_, va, vp| {
        let terms: Vec<C64> = va.iter().zip(vp).map(|(x, y)| x * y.conj()).collect();
        rows.push(pairwise_sum(&terms));
    })?;
    let norm2 = window.function().norm().powi(2);
    Ok(pairwise_sum(&rows) * (cell / norm2))
}
