//! Bounded potentials V on ℝ^d.

use crate::lattice::Grid;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One term w·e^{2πi x·ν} of a Fourier transform of a finite measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    /// Complex weight as [re, im].
    pub weight: [f64; 2],
    pub frequency: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Potential {
    #[default]
    Zero,
    /// amplitude · cos(2π ν·x).
    Cosine { amplitude: f64, frequency: Vec<f64> },
    /// amplitude · exp(−|x − center|²/width²).
    GaussianBump { amplitude: f64, center: Vec<f64>, width: f64 },
    /// Σ_j w_j e^{2πi x·ν_j}.
    FourierMeasure { terms: Vec<FourierTerm> },
    /// Values on the nodes of `grid` (linear interpolation in between, zero outside).
    Tabulated { grid: Grid, values: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PotentialError {
    #[error("potential expects dimension {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite potential parameter")]
    NonFinite,
    #[error("bump width must be positive")]
    Width,
    #[error("tabulated potential needs {expected} values, got {got}")]
    Table { expected: usize, got: usize },
}

impl Potential {
    pub fn cosine(amplitude: f64, frequency: Vec<f64>) -> Self {
        Self::Cosine { amplitude, frequency }
    }

    /// Checks parameters against the spatial dimension.
    pub fn validate(&self, d: usize) -> Result<(), PotentialError> {
        let dim = |v: &Vec<f64>| {
            if v.len() != d {
                Err(PotentialError::Dimension { expected: d, found: v.len() })
            } else if v.iter().any(|x| !x.is_finite()) {
                Err(PotentialError::NonFinite)
            } else {
                Ok(())
            }
        };
        match self {
            Self::Zero => Ok(()),
            Self::Cosine { amplitude, frequency } => {
                if !amplitude.is_finite() {
                    return Err(PotentialError::NonFinite);
                }
                dim(frequency)
            }
            Self::GaussianBump { amplitude, center, width } => {
                if !amplitude.is_finite() {
                    return Err(PotentialError::NonFinite);
                }
                if !(*width > 0.0 && width.is_finite()) {
                    return Err(PotentialError::Width);
                }
                dim(center)
            }
            Self::FourierMeasure { terms } => {
                for t in terms {
                    if !(t.weight[0].is_finite() && t.weight[1].is_finite()) {
                        return Err(PotentialError::NonFinite);
                    }
                    dim(&t.frequency)?;
                }
                Ok(())
            }
            Self::Tabulated { grid, values } => {
                if grid.dim() != d {
                    return Err(PotentialError::Dimension { expected: d, found: grid.dim() });
                }
                if values.len() != grid.len() {
                    return Err(PotentialError::Table { expected: grid.len(), got: values.len() });
                }
                if values.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(PotentialError::NonFinite);
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        match self {
            Self::Zero => C64::new(0.0, 0.0),
            Self::Cosine { amplitude, frequency } => {
                C64::new(amplitude * (2.0 * PI * dot(x, frequency)).cos(), 0.0)
            }
            Self::GaussianBump { amplitude, center, width } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
                C64::new(amplitude * (-r2 / (width * width)).exp(), 0.0)
            }
            Self::FourierMeasure { terms } => terms.iter().fold(C64::new(0.0, 0.0), |acc, t| {
                acc + C64::new(t.weight[0], t.weight[1]) * C64::cis(2.0 * PI * dot(x, &t.frequency))
            }),
            Self::Tabulated { grid, values } => interpolate(grid, values, x),
        }
    }

    /// sup |V|, exact for the analytic kinds and the triangle bound for measures.
    pub fn sup_bound(&self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Cosine { amplitude, .. } | Self::GaussianBump { amplitude, .. } => amplitude.abs(),
            Self::FourierMeasure { terms } => {
                terms.iter().map(|t| C64::new(t.weight[0], t.weight[1]).norm()).sum()
            }
            Self::Tabulated { values, .. } => {
                values.iter().map(|v| C64::new(v[0], v[1]).norm()).fold(0.0, f64::max)
            }
        }
    }

    /// sup |Im V| bound (governs the contraction estimate for complex V).
    pub fn sup_imag_bound(&self) -> f64 {
        match self {
            Self::Zero | Self::Cosine { .. } | Self::GaussianBump { .. } => 0.0,
            Self::FourierMeasure { .. } if self.is_real() => 0.0,
            Self::FourierMeasure { terms } => {
                terms.iter().map(|t| C64::new(t.weight[0], t.weight[1]).norm()).sum()
            }
            Self::Tabulated { values, .. } => values.iter().map(|v| v[1].abs()).fold(0.0, f64::max),
        }
    }

    /// Real-valuedness: measures are real when weights pair up under ν ↦ −ν with
    /// conjugation.
    pub fn is_real(&self) -> bool {
        match self {
            Self::Zero | Self::Cosine { .. } | Self::GaussianBump { .. } => true,
            Self::Tabulated { values, .. } => values.iter().all(|v| v[1] == 0.0),
            Self::FourierMeasure { terms } => {
                let total = |nu: &[f64]| -> C64 {
                    terms
                        .iter()
                        .filter(|t| t.frequency.as_slice() == nu)
                        .map(|t| C64::new(t.weight[0], t.weight[1]))
                        .sum()
                };
                terms.iter().all(|t| {
                    let neg: Vec<f64> = t.frequency.iter().map(|v| -v).collect();
                    (total(&t.frequency) - total(&neg).conj()).norm() <= 1e-14
                })
            }
        }
    }

    /// Samples at every node of `grid`.
    pub fn sample(&self, grid: &Grid) -> Vec<C64> {
        (0..grid.len()).map(|j| self.eval(&grid.point(j)[..grid.dim()])).collect()
    }

    /// Whether the potential is a finite Fourier–Stieltjes sum (the ℱℳ class).
    pub fn is_fourier_measure(&self) -> bool {
        matches!(self, Self::Zero | Self::Cosine { .. } | Self::FourierMeasure { .. })
    }
}

fn interpolate(grid: &Grid, values: &[[f64; 2]], x: &[f64]) -> C64 {
    let h = grid.spacing();
    let n = grid.n();
    let axis = |v: f64| -> Option<(usize, f64)> {
        let s = (v + grid.half_width()) / h;
        if s < 0.0 || s > (n - 1) as f64 {
            return None;
        }
        let j = (s.floor() as usize).min(n - 2);
        Some((j, s - j as f64))
    };
    let at = |flat: usize| C64::new(values[flat][0], values[flat][1]);
    match grid.dim() {
        1 => match axis(x[0]) {
            None => C64::new(0.0, 0.0),
            Some((j, f)) => at(j) * (1.0 - f) + at(j + 1) * f,
        },
        _ => match (axis(x[0]), axis(x[1])) {
            (Some((a, fa)), Some((b, fb))) => {
                let v = |i: usize, k: usize| at(i * n + k);
                v(a, b) * (1.0 - fa) * (1.0 - fb)
                    + v(a + 1, b) * fa * (1.0 - fb)
                    + v(a, b + 1) * (1.0 - fa) * fb
                    + v(a + 1, b + 1) * fa * fb
            }
            _ => C64::new(0.0, 0.0),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;

    #[test]
    fn cosine_matches_measure_form() {
        let cos = Potential::cosine(1.0, vec![1.0]);
        let fm = Potential::FourierMeasure {
            terms: vec![
                FourierTerm { weight: [0.5, 0.0], frequency: vec![1.0] },
                FourierTerm { weight: [0.5, 0.0], frequency: vec![-1.0] },
            ],
        };
        assert!(fm.is_real());
        for x in [-1.3, 0.0, 0.2, 2.7] {
            assert!((cos.eval(&[x]) - fm.eval(&[x])).norm() < 1e-14);
        }
        assert_eq!(fm.sup_bound(), 1.0);
    }

    #[test]
    fn complex_measure_flags() {
        let fm = Potential::FourierMeasure {
            terms: vec![FourierTerm { weight: [0.0, 0.3], frequency: vec![0.5] }],
        };
        assert!(!fm.is_real());
        assert!(fm.sup_imag_bound() > 0.0);
    }

    #[test]
    fn tabulated_reproduces_nodes() {
        let grid = make_grid(1, 16, 2.0).unwrap();
        let values: Vec<[f64; 2]> = (0..16).map(|j| [j as f64, 0.0]).collect();
        let v = Potential::Tabulated { grid, values };
        v.validate(1).unwrap();
        assert_eq!(v.eval(&[grid.node(5)]).re, 5.0);
        assert!((v.eval(&[grid.node(5) + 0.5 * grid.spacing()]).re - 5.5).abs() < 1e-12);
        assert_eq!(v.sup_bound(), 15.0);
    }

    #[test]
    fn validation() {
        assert_eq!(
            Potential::cosine(1.0, vec![1.0, 2.0]).validate(1),
            Err(PotentialError::Dimension { expected: 1, found: 2 })
        );
        let bump = Potential::GaussianBump { amplitude: 1.0, center: vec![0.0], width: 0.0 };
        assert_eq!(bump.validate(1), Err(PotentialError::Width));
    }
}
