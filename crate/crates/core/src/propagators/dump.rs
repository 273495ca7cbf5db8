//! Binary kernel dumps: row-major interleaved (re, im) little-endian f64 values,
//! with metadata in a JSON sidecar.

use super::{PropagatorError, Provenance, ReflectionDescriptor, SampledKernel};
use crate::io::write_atomic;
use crate::lattice::Grid;
use crate::linalg::CMat;
use crate::potential::Potential;
use crate::symplectic::QuadraticHamiltonian;
use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianBlocks {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl From<&QuadraticHamiltonian> for HamiltonianBlocks {
    fn from(h: &QuadraticHamiltonian) -> Self {
        Self { a: h.a().to_rows(), b: h.b().to_rows(), c: h.c().to_rows() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSidecar {
    pub d: usize,
    #[serde(rename = "N")]
    pub n_points: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub t: f64,
    /// Trotter step count, if any.
    pub n: Option<usize>,
    pub provenance: Option<Provenance>,
    pub hamiltonian: HamiltonianBlocks,
    pub potential: Potential,
    /// Calibrated prefactor [re, im] for closed-form kernels.
    pub c_t: Option<[f64; 2]>,
    pub boundary_mass: Option<f64>,
    /// Present instead of a binary file when the kernel is a δ-descriptor.
    pub descriptor: Option<ReflectionDescriptor>,
}

impl KernelSidecar {
    pub fn for_kernel(k: &SampledKernel, h: &QuadraticHamiltonian) -> Self {
        let grid = k.grid();
        Self {
            d: grid.dim(),
            n_points: grid.n(),
            half_width: grid.half_width(),
            t: k.t(),
            n: match k.provenance() {
                Provenance::Trotter { n } | Provenance::ActionSum { n } => Some(n),
                _ => None,
            },
            provenance: Some(k.provenance()),
            hamiltonian: h.into(),
            potential: h.potential().clone(),
            c_t: k.phase().map(|c| [c.re, c.im]),
            boundary_mass: Some(k.boundary_mass()),
            descriptor: None,
        }
    }

    pub fn for_descriptor(r: &ReflectionDescriptor, grid: &Grid, h: &QuadraticHamiltonian) -> Self {
        Self {
            d: grid.dim(),
            n_points: grid.n(),
            half_width: grid.half_width(),
            t: r.t,
            n: None,
            provenance: None,
            hamiltonian: h.into(),
            potential: h.potential().clone(),
            c_t: Some(r.coefficient),
            boundary_mass: None,
            descriptor: Some(*r),
        }
    }
}

pub fn kernel_bytes(values: &CMat) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.nrows() * values.ncols() * 16);
    for j in 0..values.nrows() {
        for k in 0..values.ncols() {
            let v = values[(j, k)];
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

/// Writes `<stem>.bin` and `<stem>.json`; returns the binary bytes for checksumming.
pub fn write_kernel_dump(k: &SampledKernel, h: &QuadraticHamiltonian, stem: &Path) -> Result<Vec<u8>, PropagatorError> {
    let bytes = kernel_bytes(k.values());
    let sidecar = KernelSidecar::for_kernel(k, h);
    let json = serde_json::to_vec_pretty(&sidecar).map_err(|e| PropagatorError::Dump(e.to_string()))?;
    write_atomic(&stem.with_extension("bin"), &bytes).map_err(|e| PropagatorError::Dump(e.to_string()))?;
    write_atomic(&stem.with_extension("json"), &json).map_err(|e| PropagatorError::Dump(e.to_string()))?;
    Ok(bytes)
}

/// Reads a dump back into an N^d × N^d matrix of kernel values.
pub fn read_kernel_dump(stem: &Path) -> Result<(KernelSidecar, CMat), PropagatorError> {
    let err = |e: &dyn std::fmt::Display| PropagatorError::Dump(e.to_string());
    let json = std::fs::read(stem.with_extension("json")).map_err(|e| err(&e))?;
    let sidecar: KernelSidecar = serde_json::from_slice(&json).map_err(|e| err(&e))?;
    let bytes = std::fs::read(stem.with_extension("bin")).map_err(|e| err(&e))?;
    let size = sidecar.n_points.pow(sidecar.d as u32);
    if bytes.len() != size * size * 16 {
        return Err(PropagatorError::Dump(format!("expected {} bytes, found {}", size * size * 16, bytes.len())));
    }
    let f = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().expect("8 bytes"));
    let values = Mat::from_fn(size, size, |j, k| {
        let off = (j * size + k) * 16;
        C64::new(f(off), f(off + 8))
    });
    Ok((sidecar, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;
    use crate::propagators::trotter_propagator;

    #[test]
    fn dump_round_trip() {
        let grid = make_grid(1, 16, 2.0).unwrap();
        let h = QuadraticHamiltonian::harmonic(1).with_potential(Potential::cosine(0.5, vec![1.0]));
        let k = trotter_propagator(&h, 0.5, 4, &grid).unwrap();
        let dir = std::env::temp_dir().join(format!("ftl-dump-{}", std::process::id()));
        let stem = dir.join("k");
        let bytes = write_kernel_dump(&k, &h, &stem).unwrap();
        assert_eq!(bytes.len(), 2 * 16 * 16 * 8);
        assert_eq!(f64::from_le_bytes(bytes[8..16].try_into().unwrap()), k.entry(0, 0).im);
        let (side, values) = read_kernel_dump(&stem).unwrap();
        assert_eq!(side.n, Some(4));
        assert_eq!(side.potential, h.potential().clone());
        assert_eq!(values[(3, 7)], k.entry(3, 7));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
