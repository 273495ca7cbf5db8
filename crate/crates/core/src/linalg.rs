//! Small dense real matrices (phase-space blocks, ≤ 4×4) and dense complex helpers
//! built on faer for grid-sized operators.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64 as C64;

/// Row-major dense real matrix.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.concat() }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn scalar(n: usize, s: f64) -> Self {
        Self::identity(n).scaled(s)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scaled(-1.0))
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows);
        let mut m = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..o.cols {
                    m[(i, j)] += a * o[(k, j)];
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Sub-block of size r×c at (i0, j0).
    pub fn block(&self, i0: usize, j0: usize, r: usize, c: usize) -> Self {
        let mut m = Self::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                m[(i, j)] = self[(i0 + i, j0 + j)];
            }
        }
        m
    }

    /// Assembles a 2×2 block matrix from square blocks of equal size.
    pub fn from_blocks(tl: &Self, tr: &Self, bl: &Self, br: &Self) -> Self {
        let d = tl.rows;
        let mut m = Self::zeros(2 * d, 2 * d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = tl[(i, j)];
                m[(i, d + j)] = tr[(i, j)];
                m[(d + i, j)] = bl[(i, j)];
                m[(d + i, d + j)] = br[(i, j)];
            }
        }
        m
    }

    /// LU factorisation with partial pivoting; returns (lu, perm, sign) or None when
    /// a pivot vanishes exactly.
    fn lu(&self) -> Option<(Self, Vec<usize>, f64)> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[(x, k)].abs().total_cmp(&a[(y, k)].abs()))?;
            if a[(p, k)] == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                let f = a[(i, k)] / a[(k, k)];
                a[(i, k)] = f;
                for j in k + 1..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
        Some((a, perm, sign))
    }

    pub fn det(&self) -> f64 {
        match self.lu() {
            None => 0.0,
            Some((lu, _, sign)) => (0..self.rows).fold(sign, |acc, i| acc * lu[(i, i)]),
        }
    }

    /// Solves self · X = rhs.
    pub fn solve(&self, rhs: &Self) -> Option<Self> {
        let n = self.rows;
        let (lu, perm, _) = self.lu()?;
        let mut x = Self::zeros(n, rhs.cols);
        for c in 0..rhs.cols {
            let mut y: Vec<f64> = perm.iter().map(|&p| rhs[(p, c)]).collect();
            for i in 0..n {
                for k in 0..i {
                    y[i] -= lu[(i, k)] * y[k];
                }
            }
            for i in (0..n).rev() {
                for k in i + 1..n {
                    y[i] -= lu[(i, k)] * y[k];
                }
                y[i] /= lu[(i, i)];
            }
            for i in 0..n {
                x[(i, c)] = y[i];
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Self> {
        self.solve(&Self::identity(self.rows))
    }

    /// 1-norm condition number estimate ‖M‖₁‖M⁻¹‖₁.
    pub fn condition(&self) -> f64 {
        self.inverse().map_or(f64::INFINITY, |inv| self.norm_one() * inv.norm_one())
    }

    /// Matrix exponential by scaling and squaring with the degree-13 Padé approximant.
    pub fn expm(&self) -> Self {
        let n = self.rows;
        let theta13 = 5.371920351148152;
        let norm = self.norm_one();
        let s = if norm > theta13 { (norm / theta13).log2().ceil() as i32 } else { 0 };
        let a = self.scaled(0.5f64.powi(s));
        let b = PADE13;
        let ident = Self::identity(n);
        let a2 = a.mul(&a);
        let a4 = a2.mul(&a2);
        let a6 = a4.mul(&a2);
        let lin = |c: [f64; 4], m: [&Self; 4]| {
            m[0].scaled(c[0]).add(&m[1].scaled(c[1])).add(&m[2].scaled(c[2])).add(&m[3].scaled(c[3]))
        };
        let u_inner = a6.mul(&lin([b[13], b[11], b[9], 0.0], [&a6, &a4, &a2, &ident]));
        let u = a.mul(&u_inner.add(&lin([b[7], b[5], b[3], b[1]], [&a6, &a4, &a2, &ident])));
        let v_inner = a6.mul(&lin([b[12], b[10], b[8], 0.0], [&a6, &a4, &a2, &ident]));
        let v = v_inner.add(&lin([b[6], b[4], b[2], b[0]], [&a6, &a4, &a2, &ident]));
        let mut r = v.sub(&u).solve(&v.add(&u)).expect("Padé denominator is invertible");
        for _ in 0..s {
            r = r.mul(&r);
        }
        r
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        for _sweep in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[(i, j)].powi(2)).sum();
            if off <= 1e-30 * (1.0 + a.max_abs().powi(2)) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)] == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

impl std::ops::Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Standard symplectic form J = [[0, I], [−I, 0]] on ℝ^{2d}.
pub fn symplectic_form(d: usize) -> RealMatrix {
    let z = RealMatrix::zeros(d, d);
    let i = RealMatrix::identity(d);
    RealMatrix::from_blocks(&z, &i, &i.scaled(-1.0), &z)
}

// ---------------------------------------------------------------------------
// dense complex helpers

pub type CMat = Mat<C64>;

pub fn cmat_identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn cmat_max_abs(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// max |M*M − I| entry.
pub fn unitarity_residual(m: &CMat) -> f64 {
    let prod = m.adjoint() * m;
    let mut best = 0.0f64;
    for j in 0..prod.ncols() {
        for i in 0..prod.nrows() {
            let want = if i == j { 1.0 } else { 0.0 };
            best = best.max((prod[(i, j)] - C64::new(want, 0.0)).norm());
        }
    }
    best
}

/// M^n by binary powering; the multiplication order is fixed by n alone.
pub fn cmat_pow(m: &CMat, mut n: usize) -> CMat {
    let mut result: Option<CMat> = None;
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => &r * &base,
            });
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result.unwrap_or_else(|| cmat_identity(m.nrows()))
}

/// Induced 1-norm of a complex matrix.
fn cmat_norm_one(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense complex matrix exponential (scaling and squaring, Padé 13); used for
/// non-Hermitian generators.
pub fn cmat_expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let theta13 = 5.371920351148152;
    let norm = cmat_norm_one(a);
    let s = if norm > theta13 { (norm / theta13).log2().ceil() as i32 } else { 0 };
    let scale = C64::new(0.5f64.powi(s), 0.0);
    let a = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let ident = cmat_identity(n);
    let b = PADE13.map(|v| C64::new(v, 0.0));
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let comb = |c: [C64; 4], m: [&CMat; 4]| -> CMat {
        Mat::from_fn(n, n, |i, j| {
            c[0] * m[0][(i, j)] + c[1] * m[1][(i, j)] + c[2] * m[2][(i, j)] + c[3] * m[3][(i, j)]
        })
    };
    let zero = C64::new(0.0, 0.0);
    let u_inner = &a6 * comb([b[13], b[11], b[9], zero], [&a6, &a4, &a2, &ident]);
    let u = &a * (u_inner + comb([b[7], b[5], b[3], b[1]], [&a6, &a4, &a2, &ident]));
    let v = &a6 * comb([b[12], b[10], b[8], zero], [&a6, &a4, &a2, &ident])
        + comb([b[6], b[4], b[2], b[0]], [&a6, &a4, &a2, &ident]);
    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom.partial_piv_lu().solve(&numer);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}
