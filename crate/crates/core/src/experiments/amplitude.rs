use super::report::BandCheck;
use super::{Bands, ExperimentError};
use crate::lattice::{inner, Grid, WaveFunction};
use crate::propagators::{eigensolver_reference, GridPropagator, MetaplecticKernelSpec};
use crate::symplectic::{flow_at, QuadraticHamiltonian};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

/// Grid nodes a ball must contain to count as resolved.
pub const MIN_BALL_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeRow {
    pub a: f64,
    pub b: f64,
    /// I = ⟨U(t)A, B⟩ as [re, im].
    pub amplitude: [f64; 2],
    pub modulus: f64,
    /// |I|/(ab)^{d/2}.
    pub rescaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeStudy {
    pub t: f64,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub rows: Vec<AmplitudeRow>,
    /// Least-squares fit rescaled ≈ c₀ + c₁a.
    pub fit: [f64; 2],
    pub extrapolated: f64,
    /// |B(0,1)|.
    pub ball_volume: f64,
    pub reference_modulus: f64,
    /// "analytic" (closed-form kernel, V = 0) or "grid" (eigensolver entry).
    pub reference_source: String,
    pub relative_error: f64,
    /// arg of the complex extrapolation relative to u_t and to conj(u_t).
    pub phase_vs_kernel: f64,
    pub phase_vs_conjugate: f64,
    pub checks: Vec<BandCheck>,
}

impl AmplitudeStudy {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// |B(0,1)| in ℝ^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        _ => PI,
    }
}

/// Normalised indicator of the closed ball B(centre, r) on the grid.
fn ball(grid: &Grid, centre: &[f64], r: f64) -> Result<WaveFunction, ExperimentError> {
    let mut f = WaveFunction::from_fn(*grid, |x| {
        let d2: f64 = x.iter().zip(centre).map(|(a, b)| (a - b).powi(2)).sum();
        C64::new(if d2 <= r * r * (1.0 + 1e-12) { 1.0 } else { 0.0 }, 0.0)
    });
    let cells = f.values().iter().filter(|v| v.re > 0.0).count();
    if cells < MIN_BALL_NODES {
        return Err(ExperimentError::UnderResolved { radius: r, cells, min: MIN_BALL_NODES });
    }
    let norm = f.norm();
    f.scale(C64::new(1.0 / norm, 0.0));
    Ok(f)
}

/// I(t, x₀, y₀, a, b) = ⟨U(t)A, B⟩ = h^d Σ conj(B)·U(t)A with A, B the normalised
/// indicators of B(y₀, a) and B(x₀, b). Defined at every t.
pub fn transition_amplitude(
    prop: &GridPropagator,
    t: f64,
    x0: &[f64],
    y0: &[f64],
    a: f64,
    b: f64,
) -> Result<C64, ExperimentError> {
    let grid = *prop.grid();
    let start = ball(&grid, y0, a)?;
    let end = ball(&grid, x0, b)?;
    let moved = prop.apply(t, &start)?;
    Ok(inner(&moved, &end)?)
}

fn least_squares_line(points: &[(f64, f64)]) -> [f64; 2] {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    [my - slope * mx, slope]
}

fn wrap(phase: f64) -> f64 {
    (phase + PI).rem_euclid(2.0 * PI) - PI
}

/// Small-ball limit of I/(ab)^{d/2} with a = b, extrapolated linearly in a and
/// compared in modulus with |B(0,1)|·|u_t(x₀, y₀)|.
pub fn amplitude_study(
    h: &QuadraticHamiltonian,
    t: f64,
    x0: &[f64],
    y0: &[f64],
    radii: &[f64],
    grid: &Grid,
    bands: &Bands,
) -> Result<AmplitudeStudy, ExperimentError> {
    if radii.len() < 2 || radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ExperimentError::Radii);
    }
    let flow = flow_at(&h.quadratic_part(), t);
    if flow.is_near_exceptional() {
        return Err(ExperimentError::Exceptional { t, det_b: flow.det_b() });
    }
    let d = grid.dim();
    let prop = GridPropagator::new(h, grid)?;
    let mut rows = Vec::with_capacity(radii.len());
    let mut complex = Vec::with_capacity(radii.len());
    for &r in radii {
        let i = transition_amplitude(&prop, t, x0, y0, r, r)?;
        let scale = (r * r).powf(d as f64 / 2.0);
        complex.push(i / scale);
        rows.push(AmplitudeRow { a: r, b: r, amplitude: [i.re, i.im], modulus: i.norm(), rescaled: i.norm() / scale });
    }
    let fit = least_squares_line(&rows.iter().map(|r| (r.a, r.rescaled)).collect::<Vec<_>>());
    let re = least_squares_line(&radii.iter().zip(&complex).map(|(a, c)| (*a, c.re)).collect::<Vec<_>>());
    let im = least_squares_line(&radii.iter().zip(&complex).map(|(a, c)| (*a, c.im)).collect::<Vec<_>>());
    let limit = C64::new(re[0], im[0]);

    let (kernel, source) = if h.potential().sup_bound() == 0.0 {
        let spec = MetaplecticKernelSpec::calibrated(&h.quadratic_part(), t, grid)?;
        (spec.kernel_value(x0, y0), "analytic")
    } else {
        let reference = eigensolver_reference(h, t, grid)?;
        (reference.entry(grid.nearest_index(x0), grid.nearest_index(y0)), "grid")
    };
    let ball_volume = unit_ball_volume(d);
    let target = ball_volume * kernel.norm();
    let relative_error = (fit[0] - target).abs() / target;
    let worst = rows.iter().map(|r| r.modulus).fold(0.0, f64::max);
    let checks = vec![
        BandCheck::new("amplitude_unitarity", worst <= 1.0 + 1e-10, worst, 1.0 + 1e-10),
        BandCheck::new("amplitude_limit", relative_error <= bands.amplitude_rel, relative_error, bands.amplitude_rel),
    ];
    Ok(AmplitudeStudy {
        t,
        x0: x0.to_vec(),
        y0: y0.to_vec(),
        rows,
        fit,
        extrapolated: fit[0],
        ball_volume,
        reference_modulus: kernel.norm(),
        reference_source: source.into(),
        relative_error,
        phase_vs_kernel: wrap((limit / kernel).arg()),
        phase_vs_conjugate: wrap((limit / kernel.conj()).arg()),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;

    #[test]
    fn zero_time_matched_balls_give_one() {
        let grid = make_grid(1, 128, 8.0).unwrap();
        let prop = GridPropagator::new(&QuadraticHamiltonian::free(1), &grid).unwrap();
        let a = 10.5 * grid.spacing();
        let i = transition_amplitude(&prop, 0.0, &[0.5], &[0.5], a, a).unwrap();
        assert!((i - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_small_balls_and_bad_schedules() {
        let grid = make_grid(1, 128, 8.0).unwrap();
        let free = QuadraticHamiltonian::free(1);
        let h = grid.spacing();
        assert!(matches!(
            amplitude_study(&free, 1.0, &[1.0], &[0.0], &[4.5 * h, 2.5 * h], &grid, &Bands::default()),
            Err(ExperimentError::UnderResolved { .. })
        ));
        assert_eq!(
            amplitude_study(&free, 1.0, &[1.0], &[0.0], &[0.2, 0.3], &grid, &Bands::default()).unwrap_err(),
            ExperimentError::Radii
        );
        assert!(matches!(
            amplitude_study(&free, 0.0, &[1.0], &[0.0], &[0.6, 0.4], &grid, &Bands::default()),
            Err(ExperimentError::Exceptional { .. })
        ));
    }
}
