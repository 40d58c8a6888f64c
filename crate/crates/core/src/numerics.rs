//! Dense complex matrices and the shared tolerance policy.
//!
//! Every matrix comparison in the crate goes through the max-abs entry norm
//! with an absolute tolerance. Matrices are small (2g x 2g with g <= 4 at desk
//! scale), so nothing here tries to be clever about memory layout.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::complex::Complex64;
use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// `2 pi i`.
pub const TWO_PI_I: C64 = C64::new(0.0, 2.0 * std::f64::consts::PI);

/// Threshold for leading principal minors when deciding positive definiteness.
pub const PD_MINOR_THRESHOLD: f64 = 1e-12;

/// Relative pivot threshold used by LU factorisation.
pub const PIVOT_RELATIVE_THRESHOLD: f64 = 1e-14;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub fd_step: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_tol: 1e-10,
            fd_step: 1e-6,
        }
    }
}

impl Tolerance {
    pub fn new(abs_tol: f64, fd_step: f64) -> Result<Self> {
        if !(abs_tol > 0.0 && abs_tol.is_finite()) || !(fd_step > 0.0 && fd_step.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be positive (abs_tol={abs_tol}, fd_step={fd_step})"
            )));
        }
        Ok(Tolerance { abs_tol, fd_step })
    }

    pub fn with_abs(abs_tol: f64) -> Self {
        Tolerance {
            abs_tol,
            ..Default::default()
        }
    }
}

/// Row-major dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "empty shape {rows}x{cols}"
            )));
        }
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} shape needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Build from real row slices; handy in tests.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows[0].len();
        CMatrix::from_fn(n, m, |i, j| c(rows[i][j], 0.0))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        CMatrix::from_vec(n, m, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        CMatrix::from_fn(n, n, |i, j| if i == j { c(1.0, 0.0) } else { C64::zero() })
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        CMatrix::from_fn(n, n, |i, j| if i == j { entries[i] } else { C64::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn real_part(&self) -> CMatrix {
        self.map(|z| c(z.re, 0.0))
    }

    pub fn imag_part(&self) -> CMatrix {
        self.map(|z| c(z.im, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest imaginary component in absolute value.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &CMatrix, tol: f64) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols) && self.max_abs_diff(other) <= tol
    }

    pub fn symmetry_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.transpose())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.symmetry_defect() <= tol
    }

    pub fn checked_mul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    fn checked_zip(&self, other: &CMatrix, f: impl Fn(C64, C64) -> C64) -> Result<CMatrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn checked_add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.checked_zip(other, |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.checked_zip(other, |a, b| a - b)
    }

    /// LU factorisation with partial pivoting. Fails when a pivot drops below
    /// `1e-14 * max_abs(self)`.
    pub fn lu(&self) -> Result<Lu> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let threshold = PIVOT_RELATIVE_THRESHOLD * self.max_abs();
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, pivot_abs) =
                (k..n)
                    .map(|i| (i, a[i * n + k].norm()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot_abs <= threshold || pivot_abs == 0.0 {
                return Err(Error::Singular {
                    pivot: pivot_abs,
                    threshold,
                });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let factor = a[i * n + k] / pivot;
                a[i * n + k] = factor;
                for j in (k + 1)..n {
                    let u = a[k * n + j];
                    a[i * n + j] -= factor * u;
                }
            }
        }
        Ok(Lu {
            n,
            lu: a,
            perm,
            sign,
        })
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        self.lu()?.inverse()
    }

    /// Determinant; zero for matrices that are singular to the pivot threshold.
    pub fn det(&self) -> Result<C64> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(
                "determinant of non-square matrix".into(),
            ));
        }
        match self.lu() {
            Ok(lu) => Ok(lu.det()),
            Err(Error::Singular { .. }) => Ok(C64::zero()),
            Err(e) => Err(e),
        }
    }

    /// Upper-left `k x k` submatrix.
    pub fn leading(&self, k: usize) -> CMatrix {
        CMatrix::from_fn(k, k, |i, j| self[(i, j)])
    }

    /// Positive definiteness of a Hermitian matrix by leading principal minors.
    pub fn is_hermitian_positive_definite(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let herm_defect = self.max_abs_diff(&self.transpose().map(|z| z.conj()));
        if herm_defect > tol {
            return false;
        }
        (1..=self.rows).all(|k| {
            let minor = naive_det(&self.leading(k));
            minor.re > PD_MINOR_THRESHOLD
        })
    }

    pub fn block_split(&self, g: usize) -> Result<Blocks> {
        if self.rows != 2 * g || self.cols != 2 * g || g == 0 {
            return Err(Error::DimensionMismatch(format!(
                "block split needs {}x{}, got {}x{}",
                2 * g,
                2 * g,
                self.rows,
                self.cols
            )));
        }
        let sub = |r0: usize, c0: usize| CMatrix::from_fn(g, g, |i, j| self[(r0 + i, c0 + j)]);
        Ok(Blocks {
            a: sub(0, 0),
            b: sub(0, g),
            c: sub(g, 0),
            d: sub(g, g),
        })
    }

    /// Half dimension of a square even-dimensional matrix.
    pub fn half_dim(&self) -> Result<usize> {
        if !self.is_square() || !self.rows.is_multiple_of(2) {
            return Err(Error::DimensionMismatch(format!(
                "expected a square even-dimensional matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(self.rows / 2)
    }
}

/// Blocks `(A B; C D)` of a `2g x 2g` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub d: CMatrix,
}

impl Blocks {
    pub fn join(&self) -> Result<CMatrix> {
        block_join(&self.a, &self.b, &self.c, &self.d)
    }
}

pub fn block_join(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> Result<CMatrix> {
    let g = a.rows;
    for m in [a, b, c, d] {
        if m.rows != g || m.cols != g {
            return Err(Error::DimensionMismatch(format!(
                "block_join needs four {g}x{g} blocks, got {}x{}",
                m.rows, m.cols
            )));
        }
    }
    Ok(CMatrix::from_fn(2 * g, 2 * g, |i, j| {
        match (i < g, j < g) {
            (true, true) => a[(i, j)],
            (true, false) => b[(i, j - g)],
            (false, true) => c[(i - g, j)],
            (false, false) => d[(i - g, j - g)],
        }
    }))
}

/// Result of [`CMatrix::lu`].
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn det(&self) -> C64 {
        (0..self.n).fold(c(self.sign, 0.0), |acc, i| acc * self.lu[i * self.n + i])
    }

    pub fn solve_vec(&self, rhs: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[i * n + k];
                let xk = x[k];
                x[i] -= l * xk;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let u = self.lu[i * n + k];
                let xk = x[k];
                x[i] -= u * xk;
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        let n = self.n;
        let mut out = CMatrix::zeros(n, n);
        let mut e = vec![C64::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|z| *z = C64::zero());
            e[j] = c(1.0, 0.0);
            let col = self.solve_vec(&e);
            for (i, z) in col.into_iter().enumerate() {
                out.data[i * n + j] = z;
            }
        }
        Ok(out)
    }
}

/// Cofactor-free determinant by Gaussian elimination without a singularity cut-off.
fn naive_det(m: &CMatrix) -> C64 {
    let n = m.rows;
    let mut a = m.data.clone();
    let mut det = c(1.0, 0.0);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| a[x * n + k].norm().total_cmp(&a[y * n + k].norm()))
            .unwrap();
        if a[p * n + k].is_zero() {
            return C64::zero();
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            det = -det;
        }
        let pivot = a[k * n + k];
        det *= pivot;
        for i in (k + 1)..n {
            let f = a[i * n + k] / pivot;
            for j in k..n {
                let u = a[k * n + j];
                a[i * n + j] -= f * u;
            }
        }
    }
    det
}

pub fn mat_mul(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    a.checked_mul(b)
}

pub fn mat_inv(a: &CMatrix) -> Result<CMatrix> {
    a.inverse()
}

pub fn block_split(m: &CMatrix, g: usize) -> Result<Blocks> {
    m.block_split(g)
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of {}x{}",
            self.rows,
            self.cols
        );
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of {}x{}",
            self.rows,
            self.cols
        );
        &mut self.data[i * self.cols + j]
    }
}

// Operator impls panic on shape mismatch; use the `checked_*` methods on
// untrusted input.
impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.checked_mul(rhs)
            .expect("matrix product shape mismatch")
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        self.checked_add(rhs).expect("matrix sum shape mismatch")
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        self.checked_sub(rhs)
            .expect("matrix difference shape mismatch")
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.map(|z| -z)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for CMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            rows: self.rows,
            cols: self.cols,
            entries: self.data.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        let data = raw.entries.iter().map(|&[re, im]| c(re, im)).collect();
        CMatrix::from_vec(raw.rows, raw.cols, data).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CMatrix {
        CMatrix::from_fn(n, m, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn triple_loop(a: &CMatrix, b: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = C64::zero();
                for k in 0..a.cols() {
                    s += a[(i, k)] * b[(k, j)];
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_matrix(&mut rng, 2, 3);
        assert_eq!(&CMatrix::identity(2) * &x, x);
    }

    #[test]
    fn product_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 3, 3);
        let b = random_matrix(&mut rng, 3, 3);
        assert!((&a * &b).max_abs_diff(&triple_loop(&a, &b)) < 1e-15);
    }

    #[test]
    fn product_shape_mismatch_errors() {
        let a = CMatrix::zeros(2, 3);
        assert!(matches!(
            a.checked_mul(&a),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn inverse_of_identity_and_diagonal() {
        assert_eq!(
            CMatrix::identity(3).inverse().unwrap(),
            CMatrix::identity(3)
        );
        let d = CMatrix::diag(&[c(2.0, 0.0), c(0.0, 4.0)]);
        let inv = d.inverse().unwrap();
        let expected = CMatrix::diag(&[c(0.5, 0.0), c(0.0, -0.25)]);
        assert!(inv.max_abs_diff(&expected) < 1e-16);
    }

    #[test]
    fn inverse_residual_on_random_4x4() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = &random_matrix(&mut rng, 4, 4) + &CMatrix::identity(4).scale(c(3.0, 0.0));
            let inv = a.inverse().unwrap();
            assert!((&a * &inv).max_abs_diff(&CMatrix::identity(4)) <= 1e-10);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = CMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(m.inverse(), Err(Error::Singular { .. })));
        assert_eq!(m.det().unwrap(), C64::zero());
    }

    #[test]
    fn determinant_of_triangular() {
        let m = CMatrix::from_real_rows(&[&[2.0, 7.0, 1.0], &[0.0, 3.0, 5.0], &[0.0, 0.0, -1.0]]);
        assert!((m.det().unwrap() - c(-6.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn block_split_of_j() {
        let g = 2;
        let j = block_join(
            &CMatrix::zeros(g, g),
            &CMatrix::identity(g),
            &(-&CMatrix::identity(g)),
            &CMatrix::zeros(g, g),
        )
        .unwrap();
        let b = j.block_split(g).unwrap();
        assert_eq!(b.a, CMatrix::zeros(g, g));
        assert_eq!(b.b, CMatrix::identity(g));
        assert_eq!(b.c, -&CMatrix::identity(g));
        assert_eq!(b.d, CMatrix::zeros(g, g));
    }

    #[test]
    fn block_split_rejects_wrong_shape() {
        assert!(CMatrix::zeros(3, 3).block_split(1).is_err());
        assert!(block_join(
            &CMatrix::zeros(1, 1),
            &CMatrix::zeros(2, 2),
            &CMatrix::zeros(1, 1),
            &CMatrix::zeros(1, 1)
        )
        .is_err());
    }

    #[test]
    fn positive_definite_by_minors() {
        let pd = CMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 1.0]]);
        assert!(pd.is_hermitian_positive_definite(1e-12));
        let indefinite = CMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(!indefinite.is_hermitian_positive_definite(1e-12));
        assert!(!CMatrix::zeros(2, 2).is_hermitian_positive_definite(1e-12));
    }

    #[test]
    fn from_vec_validates() {
        assert!(CMatrix::from_vec(2, 2, vec![C64::zero(); 3]).is_err());
        assert!(matches!(
            CMatrix::from_vec(1, 1, vec![c(f64::NAN, 0.0)]),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn json_round_trip_and_schema() {
        let m = CMatrix::from_fn(2, 2, |i, j| c(i as f64, j as f64 - 0.5));
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(
            s,
            r#"{"rows":2,"cols":2,"entries":[[0.0,-0.5],[0.0,0.5],[1.0,-0.5],[1.0,0.5]]}"#
        );
        let back: CMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"rows":2,"cols":2,"entries":[[0.0,1.0]]}"#;
        assert!(serde_json::from_str::<CMatrix>(bad).is_err());
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerance::new(0.0, 1e-6).is_err());
        assert!(Tolerance::new(1e-10, -1.0).is_err());
        assert_eq!(Tolerance::default(), Tolerance::new(1e-10, 1e-6).unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrix(n: usize, m: usize) -> impl Strategy<Value = CMatrix> {
            proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64), n * m).prop_map(move |v| {
                CMatrix::from_vec(n, m, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap()
            })
        }

        proptest! {
            #[test]
            fn associativity(a in matrix(3, 4), b in matrix(4, 2), cm in matrix(2, 3)) {
                let lhs = &(&a * &b) * &cm;
                let rhs = &a * &(&b * &cm);
                let scale = 1.0 + a.max_abs() * b.max_abs() * cm.max_abs();
                prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-9 * scale);
            }

            #[test]
            fn block_round_trip_is_exact(m in matrix(6, 6)) {
                prop_assert_eq!(m.block_split(3).unwrap().join().unwrap(), m);
            }

            #[test]
            fn double_inverse(m in matrix(3, 3)) {
                let m = &m + &CMatrix::identity(3).scale(c(8.0, 0.0));
                let back = m.inverse().unwrap().inverse().unwrap();
                prop_assert!(back.max_abs_diff(&m) <= 1e-8);
            }
        }
    }
}
