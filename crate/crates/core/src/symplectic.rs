//! Quadratic symbols a(x,ξ) = ½x·Ax + ξ·Bx + ½ξ·Cξ, their Hamilton matrices, the
//! classical flow exp((t/2π)𝔸), and the exceptional times where det B_t = 0.

use crate::linalg::{symplectic_form, RealMatrix};
use crate::potential::Potential;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SymplecticError {
    #[error("block {0} must be symmetric")]
    Asymmetric(&'static str),
    #[error("block {name} must be {d}×{d}")]
    Shape { name: &'static str, d: usize },
    #[error("dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("non-finite entry in block {0}")]
    NonFinite(&'static str),
    #[error("invalid scan: need t_min < t_max and 0 < step ≤ (t_max − t_min)/100")]
    Scan,
    #[error("unknown preset {0:?}")]
    Preset(String),
}

/// The blocks of a quadratic symbol plus a bounded potential.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    a: RealMatrix,
    b: RealMatrix,
    c: RealMatrix,
    potential: Potential,
}

impl QuadraticHamiltonian {
    pub fn new(a: RealMatrix, b: RealMatrix, c: RealMatrix) -> Result<Self, SymplecticError> {
        let d = a.rows();
        if d != 1 && d != 2 {
            return Err(SymplecticError::Dimension(d));
        }
        for (name, m) in [("A", &a), ("B", &b), ("C", &c)] {
            if m.rows() != d || m.cols() != d {
                return Err(SymplecticError::Shape { name, d });
            }
            if !m.is_finite() {
                return Err(SymplecticError::NonFinite(name));
            }
        }
        if !a.is_symmetric() {
            return Err(SymplecticError::Asymmetric("A"));
        }
        if !c.is_symmetric() {
            return Err(SymplecticError::Asymmetric("C"));
        }
        Ok(Self { a, b, c, potential: Potential::Zero })
    }

    pub fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = potential;
        self
    }

    /// Free particle −½Δ, symbol 2π²|ξ|².
    pub fn free(d: usize) -> Self {
        Self::new(RealMatrix::zeros(d, d), RealMatrix::zeros(d, d), RealMatrix::scalar(d, 4.0 * PI * PI))
            .expect("valid preset")
    }

    /// Harmonic oscillator with symbol π(|x|² + |ξ|²); flow is the rotation by t.
    pub fn harmonic(d: usize) -> Self {
        Self::new(RealMatrix::scalar(d, 2.0 * PI), RealMatrix::zeros(d, d), RealMatrix::scalar(d, 2.0 * PI))
            .expect("valid preset")
    }

    /// Two-dimensional oscillator with frequencies 1 and 2.
    pub fn anisotropic() -> Self {
        Self::new(
            RealMatrix::diagonal(&[2.0 * PI, 8.0 * PI]),
            RealMatrix::zeros(2, 2),
            RealMatrix::scalar(2, 2.0 * PI),
        )
        .expect("valid preset")
    }

    /// H = 0.
    pub fn zero(d: usize) -> Self {
        Self::new(RealMatrix::zeros(d, d), RealMatrix::zeros(d, d), RealMatrix::zeros(d, d))
            .expect("valid preset")
    }

    pub fn preset(name: &str, d: usize) -> Result<Self, SymplecticError> {
        match name {
            "free" => Ok(Self::free(d)),
            "harmonic" => Ok(Self::harmonic(d)),
            "anisotropic" if d == 2 => Ok(Self::anisotropic()),
            "zero" => Ok(Self::zero(d)),
            other => Err(SymplecticError::Preset(other.to_string())),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &RealMatrix {
        &self.a
    }

    pub fn b(&self) -> &RealMatrix {
        &self.b
    }

    pub fn c(&self) -> &RealMatrix {
        &self.c
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// True when A = B = 0 (the operator is a pure Fourier multiplier).
    pub fn is_kinetic_only(&self) -> bool {
        self.a.max_abs() == 0.0 && self.b.max_abs() == 0.0
    }

    /// The symbol a(x, ξ) without the potential.
    pub fn symbol(&self, x: &[f64], xi: &[f64]) -> f64 {
        let ax = self.a.mul_vec(x);
        let bx = self.b.mul_vec(x);
        let cxi = self.c.mul_vec(xi);
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
        0.5 * dot(x, &ax) + dot(xi, &bx) + 0.5 * dot(xi, &cxi)
    }

    /// Copy without the potential.
    pub fn quadratic_part(&self) -> Self {
        Self { potential: Potential::Zero, ..self.clone() }
    }
}

/// 𝔸 = [[B, C], [−A, −Bᵀ]].
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonMatrix(RealMatrix);

impl HamiltonMatrix {
    pub fn matrix(&self) -> &RealMatrix {
        &self.0
    }

    /// max |𝔸ᵀJ + J𝔸| entry.
    pub fn infinitesimal_residual(&self) -> f64 {
        let j = symplectic_form(self.0.rows() / 2);
        self.0.transpose().mul(&j).add(&j.mul(&self.0)).max_abs()
    }
}

pub fn hamilton_matrix(h: &QuadraticHamiltonian) -> HamiltonMatrix {
    let neg_a = h.a.scaled(-1.0);
    let neg_bt = h.b.transpose().scaled(-1.0);
    HamiltonMatrix(RealMatrix::from_blocks(&h.b, &h.c, &neg_a, &neg_bt))
}

/// 𝒜_t and its d×d blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticFlow {
    t: f64,
    matrix: RealMatrix,
    det_b: f64,
}

/// Relative threshold below which det B_t is treated as near-exceptional.
pub const NEAR_EXCEPTIONAL: f64 = 1e-6;

impl SymplecticFlow {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows() / 2
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.matrix
    }

    fn quarter(&self, r: usize, c: usize) -> RealMatrix {
        let d = self.dim();
        self.matrix.block(r * d, c * d, d, d)
    }

    pub fn a_t(&self) -> RealMatrix {
        self.quarter(0, 0)
    }

    pub fn b_t(&self) -> RealMatrix {
        self.quarter(0, 1)
    }

    pub fn c_t(&self) -> RealMatrix {
        self.quarter(1, 0)
    }

    pub fn d_t(&self) -> RealMatrix {
        self.quarter(1, 1)
    }

    pub fn det_b(&self) -> f64 {
        self.det_b
    }

    /// max |𝒜ᵀJ𝒜 − J| entry.
    pub fn symplectic_residual(&self) -> f64 {
        let j = symplectic_form(self.dim());
        self.matrix.transpose().mul(&j).mul(&self.matrix).sub(&j).max_abs()
    }

    pub fn det(&self) -> f64 {
        self.matrix.det()
    }

    /// (max |entry of 𝒜_t|)^d, the natural size of det B_t.
    pub fn det_scale(&self) -> f64 {
        self.matrix.max_abs().max(1.0).powi(self.dim() as i32)
    }

    pub fn is_near_exceptional(&self) -> bool {
        self.det_b.abs() < NEAR_EXCEPTIONAL * self.det_scale()
    }
}

pub fn flow_at(h: &QuadraticHamiltonian, t: f64) -> SymplecticFlow {
    let gen = hamilton_matrix(h).0.scaled(t / (2.0 * PI));
    let matrix = gen.expm();
    let d = h.dim();
    let det_b = matrix.block(0, d, d, d).det();
    SymplecticFlow { t, matrix, det_b }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootKind {
    SignChange,
    Tangential,
    /// det B vanishes exactly at a scan node.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Root {
    pub t: f64,
    pub kind: RootKind,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExceptionalTimeSet {
    pub interval: (f64, f64),
    pub scan_step: f64,
    /// Ẽ ⊇ interval: det B_t vanishes on the whole scan.
    pub whole_line: bool,
    pub roots: Vec<Root>,
    /// Pairs of roots closer than one scan cell.
    pub clusters: Vec<(f64, f64)>,
    /// Local minima of |det B_t| that stayed above tolerance yet below the
    /// near-exceptional level; a finer rescan may split them into roots.
    pub near_misses: Vec<f64>,
    /// max |det B_t| over the scan.
    pub scale: f64,
}

impl ExceptionalTimeSet {
    pub fn times(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.t).collect()
    }

    pub fn is_resolved(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Whether `t` is (numerically) one of the roots or the set is the whole line.
    pub fn contains(&self, t: f64, tol: f64) -> bool {
        self.whole_line || self.roots.iter().any(|r| (r.t - t).abs() <= tol)
    }
}

const ROOT_TOL: f64 = 1e-10;

pub fn exceptional_times(
    h: &QuadraticHamiltonian,
    t_min: f64,
    t_max: f64,
    scan_step: f64,
) -> Result<ExceptionalTimeSet, SymplecticError> {
    if !(t_min < t_max) || !(scan_step > 0.0) || scan_step > (t_max - t_min) / 100.0 {
        return Err(SymplecticError::Scan);
    }
    let det_b = |t: f64| flow_at(h, t).det_b();
    let count = ((t_max - t_min) / scan_step).ceil() as usize;
    let ts: Vec<f64> = (0..=count).map(|i| (t_min + i as f64 * scan_step).min(t_max)).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| det_b(t)).collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let flow_scale = ts.iter().map(|&t| flow_at(h, t).det_scale()).fold(1.0, f64::max);
    let mut set = ExceptionalTimeSet {
        interval: (t_min, t_max),
        scan_step,
        whole_line: false,
        roots: Vec::new(),
        clusters: Vec::new(),
        near_misses: Vec::new(),
        scale,
    };
    if scale <= 1e-12 * flow_scale {
        set.whole_line = true;
        return Ok(set);
    }
    let tol = ROOT_TOL * scale;
    let mut roots = Vec::new();
    for i in 0..ts.len() {
        if vals[i] == 0.0 {
            roots.push(Root { t: ts[i], kind: RootKind::Sampled });
        }
        if i + 1 < ts.len() && vals[i] * vals[i + 1] < 0.0 {
            roots.push(Root { t: bisect(&det_b, ts[i], ts[i + 1], vals[i]), kind: RootKind::SignChange });
        }
    }
    for i in 1..ts.len().saturating_sub(1) {
        let (l, m, r) = (vals[i - 1], vals[i], vals[i + 1]);
        let is_min = m.abs() <= l.abs() && m.abs() <= r.abs() && m != 0.0;
        let no_crossing = l * m > 0.0 && m * r > 0.0;
        if !(is_min && no_crossing) {
            continue;
        }
        let t = golden_min(|t| det_b(t).abs(), ts[i - 1], ts[i + 1]);
        let v = det_b(t).abs();
        if v < tol {
            roots.push(Root { t, kind: RootKind::Tangential });
        } else if v < NEAR_EXCEPTIONAL * scale {
            set.near_misses.push(t);
        }
    }
    roots.sort_by(|a, b| a.t.total_cmp(&b.t));
    roots.dedup_by(|b, a| (a.t - b.t).abs() < 1e-9);
    for w in roots.windows(2) {
        if w[1].t - w[0].t < scan_step {
            set.clusters.push((w[0].t, w[1].t));
        }
    }
    set.roots = roots;
    Ok(set)
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm * f_lo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = fm;
        }
    }
    0.5 * (lo + hi)
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > 1e-12 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamilton_matrix_presets() {
        let ho = hamilton_matrix(&QuadraticHamiltonian::harmonic(1));
        assert_eq!(ho.matrix().to_rows(), vec![vec![0.0, 2.0 * PI], vec![-2.0 * PI, 0.0]]);
        let free = hamilton_matrix(&QuadraticHamiltonian::free(1));
        assert_eq!(free.matrix().to_rows(), vec![vec![0.0, 4.0 * PI * PI], vec![0.0, 0.0]]);
        assert_eq!(hamilton_matrix(&QuadraticHamiltonian::zero(2)).matrix().max_abs(), 0.0);
        assert!(ho.infinitesimal_residual() < 1e-13);
    }

    #[test]
    fn rejects_asymmetric_blocks() {
        let a = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        let err = QuadraticHamiltonian::new(a, RealMatrix::zeros(2, 2), RealMatrix::identity(2));
        assert_eq!(err, Err(SymplecticError::Asymmetric("A")));
    }

    #[test]
    fn harmonic_flow_is_rotation() {
        let h = QuadraticHamiltonian::harmonic(2);
        for &t in &[-7.3, -1.0, 0.4, 2.0, 9.9] {
            let f = flow_at(&h, t);
            let (c, s) = (t.cos(), t.sin());
            assert!(f.a_t().sub(&RealMatrix::scalar(2, c)).max_abs() < 1e-12);
            assert!(f.b_t().sub(&RealMatrix::scalar(2, s)).max_abs() < 1e-12);
            assert!(f.c_t().sub(&RealMatrix::scalar(2, -s)).max_abs() < 1e-12);
            assert!(f.d_t().sub(&RealMatrix::scalar(2, c)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn free_flow_is_shear() {
        let f = flow_at(&QuadraticHamiltonian::free(1), 1.0);
        assert!((f.b_t()[(0, 0)] - 2.0 * PI).abs() < 1e-13);
        assert!((f.det_b() - 2.0 * PI).abs() < 1e-13);
        let z = flow_at(&QuadraticHamiltonian::harmonic(1), 0.0);
        assert_eq!(z.matrix(), &RealMatrix::identity(2));
        assert_eq!(z.det_b(), 0.0);
        assert!(z.is_near_exceptional());
    }

    #[test]
    fn exceptional_sets() {
        let ho = exceptional_times(&QuadraticHamiltonian::harmonic(1), -10.0, 10.0, 0.01).unwrap();
        let times = ho.times();
        assert_eq!(times.len(), 7);
        for (k, t) in (-3..=3).zip(&times) {
            assert!((t - k as f64 * PI).abs() < 1e-8);
        }
        let free = exceptional_times(&QuadraticHamiltonian::free(1), -5.0, 5.0, 0.01).unwrap();
        assert_eq!(free.times(), vec![0.0]);
        let zero = exceptional_times(&QuadraticHamiltonian::zero(1), -5.0, 5.0, 0.01).unwrap();
        assert!(zero.whole_line);
    }

    #[test]
    fn anisotropic_tangential_roots() {
        let set = exceptional_times(&QuadraticHamiltonian::anisotropic(), 0.5, 7.0, 0.01).unwrap();
        let times = set.times();
        let want = [PI / 2.0, PI, 1.5 * PI, 2.0 * PI];
        assert_eq!(times.len(), want.len(), "{times:?}");
        for (t, w) in times.iter().zip(want) {
            assert!((t - w).abs() < 1e-4, "{t} vs {w}");
        }
        assert_eq!(set.roots[1].kind, RootKind::Tangential);
        let h = QuadraticHamiltonian::anisotropic();
        for r in &set.roots {
            assert!(flow_at(&h, r.t).det_b().abs() < 1e-9);
        }
    }

    #[test]
    fn scan_preconditions() {
        let h = QuadraticHamiltonian::harmonic(1);
        assert_eq!(exceptional_times(&h, 1.0, 0.0, 0.001), Err(SymplecticError::Scan));
        assert_eq!(exceptional_times(&h, 0.0, 1.0, 0.5), Err(SymplecticError::Scan));
    }
}
