use super::stft::for_each_position;
use super::{japanese, TimeFreqError, Window};
use crate::lattice::{dft, pairwise_sum_real, CompactWindow, LatticeError, WaveFunction};
use num_complex::Complex64 as C64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    Modulation,
    FourierLebesgue,
    LocalizedFourierLebesgue,
}

/// Exponents p, q ∈ [1, ∞] (∞ as `f64::INFINITY`), weight s, flavor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSpec {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub flavor: Flavor,
}

impl NormSpec {
    pub fn modulation(p: f64, q: f64, s: f64) -> Self {
        Self { p, q, s, flavor: Flavor::Modulation }
    }

    pub fn fourier_lebesgue(s: f64) -> Self {
        Self { p: 1.0, q: 1.0, s, flavor: Flavor::FourierLebesgue }
    }

    pub fn localized(s: f64) -> Self {
        Self { p: 1.0, q: 1.0, s, flavor: Flavor::LocalizedFourierLebesgue }
    }

    pub fn validate(&self) -> Result<(), TimeFreqError> {
        if !(self.p >= 1.0 && self.q >= 1.0) {
            return Err(TimeFreqError::Exponent { p: self.p, q: self.q });
        }
        if !(self.s.abs() <= 50.0) {
            return Err(TimeFreqError::Weight(self.s));
        }
        Ok(())
    }
}

/// One JSON-lines record of a computed norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormRecord {
    pub object_id: String,
    pub flavor: Flavor,
    #[serde(serialize_with = "exponent")]
    pub p: f64,
    #[serde(serialize_with = "exponent")]
    pub q: f64,
    pub s: f64,
    pub value: f64,
    pub lattice: LatticeRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeRecord {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

fn exponent<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

impl NormRecord {
    pub fn new(object_id: impl Into<String>, spec: NormSpec, value: f64, f: &WaveFunction, stride: usize) -> Self {
        let grid = f.grid();
        let alpha = match spec.flavor {
            Flavor::Modulation => grid.spacing() * stride as f64,
            _ => grid.spacing(),
        };
        Self {
            object_id: object_id.into(),
            flavor: spec.flavor,
            p: spec.p,
            q: spec.q,
            s: spec.s,
            value,
            lattice: LatticeRecord { alpha, beta: grid.freq_spacing(), n: grid.n() },
        }
    }
}

/// Discretised norm on the full phase-space lattice.
pub fn mod_norm(f: &WaveFunction, spec: NormSpec, g: &Window) -> Result<f64, TimeFreqError> {
    mod_norm_with(f, spec, g, None, 1)
}

/// Discretised norm; modulation norms use positions subsampled by `stride`, the
/// localized flavor needs `compact`.
pub fn mod_norm_with(
    f: &WaveFunction,
    spec: NormSpec,
    g: &Window,
    compact: Option<&CompactWindow>,
    stride: usize,
) -> Result<f64, TimeFreqError> {
    spec.validate()?;
    match spec.flavor {
        Flavor::FourierLebesgue => Ok(fourier_lebesgue_norm(f, spec.s)),
        Flavor::LocalizedFourierLebesgue => {
            let cw = compact.ok_or(TimeFreqError::MissingCompactWindow)?;
            if cw.grid() != f.grid() {
                return Err(TimeFreqError::MissingCompactWindow);
            }
            let vals: Vec<C64> = f.values().iter().zip(cw.bump()).map(|(v, b)| v * b).collect();
            Ok(fourier_lebesgue_norm(&WaveFunction::new(*f.grid(), vals)?, spec.s))
        }
        Flavor::Modulation => modulation(f, spec, g, stride),
    }
}

/// β^d Σ_k |dft(f)(ξ_k)| ⟨ξ_k⟩^s.
pub fn fourier_lebesgue_norm(f: &WaveFunction, s: f64) -> f64 {
    let grid = *f.grid();
    let spec = dft(f);
    let beta = grid.freq_spacing().powi(grid.dim() as i32);
    let terms: Vec<f64> = spec
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| v.norm() * japanese(&grid.freq_point(k)[..grid.dim()], s))
        .collect();
    beta * pairwise_sum_real(&terms)
}

fn modulation(f: &WaveFunction, spec: NormSpec, g: &Window, stride: usize) -> Result<f64, TimeFreqError> {
    if f.grid() != g.grid() {
        return Err(LatticeError::GridMismatch.into());
    }
    let grid = *f.grid();
    let d = grid.dim() as i32;
    let alpha = (grid.spacing() * stride as f64).powi(d);
    let beta = grid.freq_spacing().powi(d);
    let nf = grid.len();
    // per-frequency accumulation over positions; rows stored for a fixed-order sum
    let mut acc_max = vec![0.0f64; nf];
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for_each_position(f, g, stride, |_, v| {
        if spec.p.is_infinite() {
            for (m, z) in acc_max.iter_mut().zip(v) {
                *m = m.max(z.norm());
            }
        } else {
            rows.push(v.iter().map(|z| z.norm().powf(spec.p)).collect());
        }
    })?;
    let inner: Vec<f64> = if spec.p.is_infinite() {
        acc_max
    } else {
        (0..nf)
            .map(|k| {
                let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
                (alpha * pairwise_sum_real(&col)).powf(1.0 / spec.p)
            })
            .collect()
    };
    let weighted: Vec<f64> =
        inner.iter().enumerate().map(|(k, v)| v * japanese(&grid.freq_point(k)[..grid.dim()], spec.s)).collect();
    if spec.q.is_infinite() {
        return Ok(weighted.iter().fold(0.0, |m, v| m.max(*v)));
    }
    let terms: Vec<f64> = weighted.iter().map(|v| v.powf(spec.q)).collect();
    Ok((beta * pairwise_sum_real(&terms)).powf(1.0 / spec.q))
}
