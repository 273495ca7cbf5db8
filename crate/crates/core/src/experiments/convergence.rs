use super::report::{BandCheck, ConvergenceReport, ConvergenceRow};
use super::{Bands, ExperimentError, StudyOptions, EXACT_FLOOR};
use crate::lattice::{CompactWindow, Grid, WaveFunction};
use crate::propagators::{
    eigensolver_reference, phase_phi, MetaplecticKernelSpec, PropagatorError, SampledKernel, TrotterBuilder,
};
use crate::symplectic::{flow_at, QuadraticHamiltonian};
use crate::timefreq::{
    kernel_as_function, mod_norm, mod_norm_with, weakstar_pairings, Atom, NormSpec, PairingTarget, Window,
};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    Converge,
    Weakstar,
    M1Slice,
}

/// x ↦ ⟨k(x, ·), φ⟩ = h Σ_k K(x, y_k) conj φ(y_k).
pub fn row_slice(k: &SampledKernel, phi: &WaveFunction) -> Result<WaveFunction, PropagatorError> {
    let conj: Vec<C64> = phi.values().iter().map(|v| v.conj()).collect();
    k.apply(&WaveFunction::new(*phi.grid(), conj)?)
}

/// y ↦ ⟨k(·, y), φ⟩ = h Σ_j K(x_j, y) conj φ(x_j).
pub fn column_slice(k: &SampledKernel, phi: &WaveFunction) -> Result<WaveFunction, PropagatorError> {
    let grid = *k.grid();
    if phi.grid() != &grid {
        return Err(crate::lattice::LatticeError::GridMismatch.into());
    }
    let n = grid.len();
    let w = grid.cell();
    let out = (0..n)
        .map(|y| (0..n).map(|x| k.entry(x, y) * phi.values()[x].conj()).sum::<C64>() * w)
        .collect();
    Ok(WaveFunction::new(grid, out)?)
}

fn check_schedule(schedule: &[usize]) -> Result<(), ExperimentError> {
    if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ExperimentError::Schedule(schedule.to_vec()));
    }
    Ok(())
}

/// Sampled π(z)g on a 1-d grid.
fn time_frequency_atom(grid: Grid, z: [f64; 2]) -> WaveFunction {
    WaveFunction::from_fn(grid, |x| {
        C64::cis(2.0 * PI * z[1] * x[0]) * (2f64.powf(0.25) * (-PI * (x[0] - z[0]).powi(2)).exp())
    })
}

/// Everything about u_t that is reused across the schedule.
struct Oracle {
    reference: SampledKernel,
    reference_function: WaveFunction,
    pairings: Vec<C64>,
    slice_atoms: Vec<WaveFunction>,
    slices: Vec<WaveFunction>,
    /// e^{−2πiΦ_t} on the product grid, when Φ_t exists.
    flattening: Option<Vec<C64>>,
    compact: CompactWindow,
    compact_product: CompactWindow,
    window: Window,
    window_product: Window,
    stride: usize,
}

impl Oracle {
    fn new(h: &QuadraticHamiltonian, t: f64, grid: &Grid, opts: &StudyOptions) -> Result<Self, ExperimentError> {
        let reference = eigensolver_reference(h, t, grid)?;
        let product = grid.product()?;
        let flow = flow_at(&h.quadratic_part(), t);
        let flattening = if flow.is_near_exceptional() {
            None
        } else {
            let spec = MetaplecticKernelSpec::new(flow)?;
            Some(
                (0..product.len())
                    .map(|i| {
                        let [x, y] = product.point(i);
                        C64::cis(-2.0 * PI * phase_phi(&spec, &[x], &[y]))
                    })
                    .collect(),
            )
        };
        let slice_atoms: Vec<WaveFunction> = opts.slice_atoms.iter().map(|z| time_frequency_atom(*grid, *z)).collect();
        let slices = slice_atoms.iter().map(|phi| row_slice(&reference, phi)).collect::<Result<_, _>>()?;
        let stride = opts.minfty1_stride.unwrap_or((grid.n() / 32).max(1));
        Ok(Self {
            reference_function: kernel_as_function(&reference)?,
            pairings: weakstar_pairings(PairingTarget::Sampled(&reference), &opts.atoms)?,
            slice_atoms,
            slices,
            flattening,
            compact: CompactWindow::with_fraction(*grid, opts.compact_fraction)?,
            compact_product: CompactWindow::with_fraction(product, opts.compact_fraction)?,
            window: Window::with_width(*grid, opts.window_width)?,
            window_product: Window::with_width(product, opts.window_width)?,
            stride,
            reference,
        })
    }

    fn measure(&self, e: &SampledKernel, n: usize, atoms: &[Atom]) -> Result<ConvergenceRow, ExperimentError> {
        let start = Instant::now();
        if e.boundary_flagged() {
            return Err(ExperimentError::BoundaryMass { n, mass: e.boundary_mass() });
        }
        let sup_err = e.sup_diff_on(&self.reference, &self.compact)?;
        let as_fn = kernel_as_function(e)?;
        let diff: Vec<C64> =
            as_fn.values().iter().zip(self.reference_function.values()).map(|(a, b)| a - b).collect();
        let diff = WaveFunction::new(*as_fn.grid(), diff)?;
        let fl1_err = mod_norm_with(&diff, NormSpec::localized(0.0), &self.window_product, Some(&self.compact_product), 1)?;
        let minfty1_norm = match &self.flattening {
            Some(phase) => {
                let flat: Vec<C64> = as_fn.values().iter().zip(phase).map(|(a, p)| a * p).collect();
                let flat = WaveFunction::new(*as_fn.grid(), flat)?;
                let spec = NormSpec::modulation(f64::INFINITY, 1.0, 0.0);
                Some(mod_norm_with(&flat, spec, &self.window_product, None, self.stride)?)
            }
            None => None,
        };
        let gaps: Vec<f64> = weakstar_pairings(PairingTarget::Sampled(e), atoms)?
            .iter()
            .zip(&self.pairings)
            .map(|(a, b)| (a - b).norm())
            .collect();
        let mut m1 = 0.0f64;
        let mut lp = [0.0f64; 3];
        for (phi, reference) in self.slice_atoms.iter().zip(&self.slices) {
            let slice = row_slice(e, phi)?;
            let d: Vec<C64> = slice.values().iter().zip(reference.values()).map(|(a, b)| a - b).collect();
            let d = WaveFunction::new(*slice.grid(), d)?;
            m1 = m1.max(mod_norm(&d, NormSpec::modulation(1.0, 1.0, 0.0), &self.window)?);
            let h = d.grid().cell();
            lp[0] = lp[0].max(h * d.values().iter().map(|v| v.norm()).sum::<f64>());
            lp[1] = lp[1].max(d.norm());
            lp[2] = lp[2].max(d.values().iter().fold(0.0, |m, v| m.max(v.norm())));
        }
        let n_used = match e.provenance() {
            crate::propagators::Provenance::Trotter { n } => n,
            _ => n,
        };
        Ok(ConvergenceRow {
            n,
            n_used,
            sup_err,
            fl1_err,
            minfty1_norm,
            weakstar_max_gap: gaps.iter().fold(0.0, |m, v| m.max(*v)),
            weakstar_gaps: gaps,
            m1_slice_err: m1,
            lp_slice_err: lp,
            boundary_mass: e.boundary_mass(),
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    }
}

fn run(
    kind: StudyKind,
    h: &QuadraticHamiltonian,
    t: f64,
    schedule: &[usize],
    grid: &Grid,
    opts: &StudyOptions,
) -> Result<ConvergenceReport, ExperimentError> {
    check_schedule(schedule)?;
    if grid.dim() != 1 {
        return Err(crate::timefreq::TimeFreqError::Dimension(grid.dim()).into());
    }
    if opts.atoms.is_empty() {
        return Err(ExperimentError::Battery);
    }
    let flow = flow_at(&h.quadratic_part(), t);
    let det_b = flow.det_b();
    match kind {
        StudyKind::Converge if flow.is_near_exceptional() => return Err(ExperimentError::Exceptional { t, det_b }),
        StudyKind::Weakstar if !flow.is_near_exceptional() => return Err(ExperimentError::NotExceptional { t, det_b }),
        _ => {}
    }
    let oracle = Oracle::new(h, t, grid, opts)?;
    let builder = TrotterBuilder::new(h, grid, opts.trotter)?;
    let mut rows = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let start = Instant::now();
        let e = builder.kernel(t, n)?;
        let mut row = oracle.measure(&e, n, &opts.atoms)?;
        row.wall_seconds = start.elapsed().as_secs_f64();
        rows.push(row);
    }
    let checks = match kind {
        StudyKind::Converge => converge_checks(schedule, &rows, &opts.bands),
        StudyKind::Weakstar => weakstar_checks(&rows, &opts.bands),
        StudyKind::M1Slice => slice_checks(&rows),
    };
    Ok(ConvergenceReport {
        scenario: opts.scenario.clone(),
        study: kind,
        t,
        det_b,
        schedule: schedule.to_vec(),
        grid: *grid,
        window_width: opts.window_width,
        compact_fraction: opts.compact_fraction,
        minfty1_stride: oracle.stride,
        atom_count: opts.atoms.len(),
        bands: opts.bands,
        rows,
        checks,
    })
}

fn exact(values: &[f64]) -> bool {
    values.iter().all(|v| *v <= EXACT_FLOOR)
}

/// Strict decrease over all entries but the first (or exact zero throughout).
fn tail_decreasing(name: &str, values: &[f64]) -> BandCheck {
    let tail = &values[1.min(values.len())..];
    let worst = tail.windows(2).map(|w| w[1] / w[0]).fold(0.0f64, f64::max);
    let passed = exact(values) || tail.windows(2).all(|w| w[1] < w[0]);
    BandCheck::new(name, passed, worst, 1.0)
}

fn ratio(last: f64, first: f64) -> f64 {
    if last <= EXACT_FLOOR && first <= EXACT_FLOOR {
        0.0
    } else {
        last / first
    }
}

fn converge_checks(schedule: &[usize], rows: &[ConvergenceRow], bands: &Bands) -> Vec<BandCheck> {
    let sup: Vec<f64> = rows.iter().map(|r| r.sup_err).collect();
    let fl1: Vec<f64> = rows.iter().map(|r| r.fl1_err).collect();
    let mut checks = vec![tail_decreasing("sup_err_tail_decreasing", &sup)];
    let ratios: Vec<f64> = (1..rows.len()).filter(|&i| schedule[i] == 2 * schedule[i - 1]).map(|i| sup[i] / sup[i - 1]).collect();
    if !exact(&sup) && !ratios.is_empty() {
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        checks.push(BandCheck::new("sup_err_ratio_min", lo >= bands.halving_ratio[0], lo, bands.halving_ratio[0]));
        checks.push(BandCheck::new("sup_err_ratio_max", hi <= bands.halving_ratio[1], hi, bands.halving_ratio[1]));
    }
    let r = ratio(sup[sup.len() - 1], sup[0]);
    checks.push(BandCheck::new("sup_err_final_factor", exact(&sup) || r < bands.final_factor, r, bands.final_factor));
    checks.push(tail_decreasing("fl1_err_tail_decreasing", &fl1));
    let norms: Vec<f64> = rows.iter().filter_map(|r| r.minfty1_norm).collect();
    if !norms.is_empty() {
        let spread = norms.iter().cloned().fold(0.0, f64::max) / norms.iter().cloned().fold(f64::INFINITY, f64::min);
        checks.push(BandCheck::new("minfty1_boundedness", spread <= bands.boundedness, spread, bands.boundedness));
    }
    checks
}

fn weakstar_checks(rows: &[ConvergenceRow], bands: &Bands) -> Vec<BandCheck> {
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    let worst = first.weakstar_gaps.iter().zip(&last.weakstar_gaps).map(|(a, b)| ratio(*b, *a)).fold(0.0, f64::max);
    let sup = if first.sup_err <= EXACT_FLOOR && last.sup_err <= EXACT_FLOOR { 1.0 } else { last.sup_err / first.sup_err };
    vec![
        BandCheck::new("weakstar_gap_ratio", worst < bands.weakstar_gap_ratio, worst, bands.weakstar_gap_ratio),
        BandCheck::new("sup_err_persistence", sup > bands.sup_persistence, sup, bands.sup_persistence),
    ]
}

fn slice_checks(rows: &[ConvergenceRow]) -> Vec<BandCheck> {
    let col = |f: &dyn Fn(&ConvergenceRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    vec![
        tail_decreasing("m1_slice_err_tail_decreasing", &col(&|r| r.m1_slice_err)),
        tail_decreasing("l1_slice_err_tail_decreasing", &col(&|r| r.lp_slice_err[0])),
        tail_decreasing("l2_slice_err_tail_decreasing", &col(&|r| r.lp_slice_err[1])),
        tail_decreasing("linf_slice_err_tail_decreasing", &col(&|r| r.lp_slice_err[2])),
    ]
}

/// Trotter convergence at a non-exceptional t against the grid oracle.
pub fn converge_study(
    h: &QuadraticHamiltonian,
    t: f64,
    schedule: &[usize],
    grid: &Grid,
    opts: &StudyOptions,
) -> Result<ConvergenceReport, ExperimentError> {
    run(StudyKind::Converge, h, t, schedule, grid, opts)
}

/// Weak-* convergence at an exceptional t: atom gaps shrink while the sup error persists.
pub fn weakstar_study(
    h: &QuadraticHamiltonian,
    t: f64,
    schedule: &[usize],
    grid: &Grid,
    opts: &StudyOptions,
) -> Result<ConvergenceReport, ExperimentError> {
    run(StudyKind::Weakstar, h, t, schedule, grid, opts)
}

/// Slices ⟨e_{n,t}(x, ·), φ⟩ against the oracle slices, at any t.
pub fn m1_slice_study(
    h: &QuadraticHamiltonian,
    t: f64,
    schedule: &[usize],
    grid: &Grid,
    opts: &StudyOptions,
) -> Result<ConvergenceReport, ExperimentError> {
    run(StudyKind::M1Slice, h, t, schedule, grid, opts)
}
