use super::wigner::{weyl_matrix, SampledSymbol};
use super::{japanese, TimeFreqError, Window};
use crate::lattice::{inner, WaveFunction};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Coarse phase-space sub-lattice for the Gram matrix: offsets w − z on a square
/// grid of the given step and radius around each centre z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramLattice {
    pub step: f64,
    pub radius: f64,
    pub centres: Vec<[f64; 2]>,
    /// Envelope values below this are roundoff and left out of the fit.
    pub floor: f64,
}

impl Default for GramLattice {
    fn default() -> Self {
        Self { step: 0.5, radius: 4.0, centres: vec![[0.0, 0.0], [1.0, -0.5]], floor: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlmostDiagReport {
    /// Fitted envelope C⟨r⟩^{−s}; C is raised until the envelope dominates every ring.
    pub c: f64,
    pub s: f64,
    /// (r, max G over the ring |w − z| = r), all centres merged.
    pub rings: Vec<(f64, f64)>,
    /// ∫_{ℝ²} C⟨z⟩^{−s} dz = 2πC/(s − 2) (infinite for s ≤ 2).
    pub envelope_mass: f64,
    /// max over centres of Σ_w G(z, w)·step².
    pub riemann_mass: f64,
    pub dominated: bool,
}

fn time_freq_shift(window: &Window, z: [f64; 2]) -> WaveFunction {
    WaveFunction::from_fn(*window.grid(), |x| {
        C64::cis(2.0 * PI * z[1] * x[0]) * window.eval(&[x[0] - z[0]])
    })
}

/// G(z, w) = |⟨σ^w π(z)g, π(w)g⟩| on the sub-lattice, its ring envelope and a
/// least-squares fit log E(r) ≈ log C − s log⟨r⟩.
pub fn almost_diag_gram(sigma: &SampledSymbol, window: &Window, lattice: &GramLattice) -> Result<AlmostDiagReport, TimeFreqError> {
    if sigma.grid() != window.grid() {
        return Err(TimeFreqError::SymbolLattice);
    }
    if !(lattice.step > 0.0 && lattice.radius >= lattice.step) {
        return Err(TimeFreqError::Width(lattice.step));
    }
    let op = weyl_matrix(sigma);
    let grid = *sigma.grid();
    let n = grid.n();
    let steps = (lattice.radius / lattice.step).round() as i64;
    let mut rings: Vec<(f64, f64)> = Vec::new();
    let mut riemann_mass: f64 = 0.0;
    let cell = lattice.step * lattice.step;
    for &z in &lattice.centres {
        let pz = time_freq_shift(window, z);
        let applied: Vec<C64> = (0..n).map(|j| (0..n).map(|l| op[(j, l)] * pz.values()[l]).sum()).collect();
        let applied = WaveFunction::new(grid, applied)?;
        let mut total = 0.0;
        for a in -steps..=steps {
            for b in -steps..=steps {
                let off = [a as f64 * lattice.step, b as f64 * lattice.step];
                let r = off[0].hypot(off[1]);
                if r > lattice.radius + 1e-12 {
                    continue;
                }
                let w = [z[0] + off[0], z[1] + off[1]];
                let gram = inner(&applied, &time_freq_shift(window, w))?.norm();
                total += gram * cell;
                match rings.iter_mut().find(|(rr, _)| (rr - r).abs() < 1e-9) {
                    Some(entry) => entry.1 = entry.1.max(gram),
                    None => rings.push((r, gram)),
                }
            }
        }
        riemann_mass = riemann_mass.max(total);
    }
    rings.sort_by(|x, y| x.0.total_cmp(&y.0));
    let fit: Vec<(f64, f64)> = rings
        .iter()
        .filter(|(r, e)| *r > 0.0 && *e > lattice.floor)
        .map(|(r, e)| (japanese(&[*r], 1.0).ln(), e.ln()))
        .collect();
    let s = -slope(&fit);
    let c = rings.iter().fold(0.0f64, |m, (r, e)| m.max(e * japanese(&[*r], s)));
    let envelope_mass = if s > 2.0 { 2.0 * PI * c / (s - 2.0) } else { f64::INFINITY };
    Ok(AlmostDiagReport { c, s, rings, envelope_mass, riemann_mass, dominated: riemann_mass <= 1.05 * envelope_mass })
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    if m < 2.0 {
        return 0.0;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
