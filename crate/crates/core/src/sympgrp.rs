//! Symplectic and general-symplectic groups.
//!
//! Conventions: `J = (0 1; -1 0)`, a matrix `M` is symplectic when `M J M^T = J`,
//! and the Siegel parabolic consists of the matrices `(A B; 0 (A^T)^-1)`.
//!
//! Tolerances passed to the predicates here are scaled by `max(1, |M|^2)`,
//! the natural size of the roundoff in a product like `M J M^T`.

use serde::{Deserialize, Serialize};

use crate::derham::HodgeFrame;
use crate::error::{Error, Result};
use crate::numerics::{block_join, Blocks, CMatrix, C64, TWO_PI_I};

/// Default tolerance for group-membership predicates.
pub const GROUP_TOL: f64 = 1e-10;

/// Entry-wise distance to the nearest integer accepted by [`same_coset_spz`].
pub const INTEGER_TOL: f64 = 1e-8;

pub fn j_matrix(g: usize) -> CMatrix {
    let i = CMatrix::identity(g);
    block_join(&CMatrix::zeros(g, g), &i, &-&i, &CMatrix::zeros(g, g)).expect("square blocks")
}

/// The symmetric matrix `E^{ij}` (1-based indices, `i <= j`).
pub fn e_basis(i: usize, j: usize, g: usize) -> Result<CMatrix> {
    if !(1 <= i && i <= j && j <= g) {
        return Err(Error::IndexOutOfRange(format!(
            "E^{{{i}{j}}} needs 1 <= i <= j <= {g}"
        )));
    }
    let mut e = CMatrix::zeros(g, g);
    e[(i - 1, j - 1)] = C64::new(1.0, 0.0);
    e[(j - 1, i - 1)] = C64::new(1.0, 0.0);
    Ok(e)
}

pub(crate) fn scale_of(m: &CMatrix) -> f64 {
    let n = m.max_abs();
    (n * n).max(1.0)
}

fn sym_defect(x: &CMatrix, y: &CMatrix) -> f64 {
    // |X Y^T - Y X^T|
    (x * &y.transpose()).max_abs_diff(&(y * &x.transpose()))
}

/// Outcome of [`check_symplectic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymplecticCheck {
    pub symplectic: bool,
    /// `|M J M^T - J|`.
    pub defect: f64,
    /// Worst residual of `AB^T = BA^T, CD^T = DC^T, AD^T - BC^T = 1`.
    pub row_conditions: f64,
    /// Worst residual of `A^TC = C^TA, B^TD = D^TB, A^TD - C^TB = 1`.
    pub column_conditions: f64,
    pub threshold: f64,
}

impl SymplecticCheck {
    /// Both block-condition sets lead to the same verdict.
    pub fn sets_agree(&self) -> bool {
        (self.row_conditions <= self.threshold) == (self.column_conditions <= self.threshold)
    }
}

pub fn check_symplectic(m: &CMatrix, tol: f64) -> Result<SymplecticCheck> {
    let g = m.half_dim()?;
    let Blocks { a, b, c, d } = m.block_split(g)?;
    let j = j_matrix(g);
    let defect = (&(m * &j) * &m.transpose()).max_abs_diff(&j);
    let one = CMatrix::identity(g);

    let row = sym_defect(&a, &b)
        .max(sym_defect(&c, &d))
        .max((&(&a * &d.transpose()) - &(&b * &c.transpose())).max_abs_diff(&one));
    let (at, bt, ct) = (a.transpose(), b.transpose(), c.transpose());
    let column = (&at * &c)
        .max_abs_diff(&(&ct * &a))
        .max((&bt * &d).max_abs_diff(&(&d.transpose() * &b)))
        .max((&(&at * &d) - &(&ct * &b)).max_abs_diff(&one));

    let threshold = tol * scale_of(m);
    Ok(SymplecticCheck {
        symplectic: defect <= threshold,
        defect,
        row_conditions: row,
        column_conditions: column,
        threshold,
    })
}

pub fn is_symplectic(m: &CMatrix, tol: f64) -> Result<bool> {
    Ok(check_symplectic(m, tol)?.symplectic)
}

/// Multiplier `nu` of a GSp matrix: `AB^T = BA^T`, `CD^T = DC^T` and `AD^T - BC^T = nu 1`.
pub fn gsp_multiplier(m: &CMatrix, tol: f64) -> Result<C64> {
    let g = m.half_dim()?;
    let Blocks { a, b, c, d } = m.block_split(g)?;
    let threshold = tol * scale_of(m);
    let s1 = sym_defect(&a, &b);
    let s2 = sym_defect(&c, &d);
    if s1 > threshold || s2 > threshold {
        return Err(Error::NotInGsp(format!(
            "symmetry defects {s1:.3e}, {s2:.3e}"
        )));
    }
    let q = &(&a * &d.transpose()) - &(&b * &c.transpose());
    let nu = (0..g).map(|i| q[(i, i)]).sum::<C64>() / g as f64;
    let scalar_defect = q.max_abs_diff(&CMatrix::identity(g).scale(nu));
    if scalar_defect > threshold {
        return Err(Error::NotInGsp(format!(
            "AD^T - BC^T is not scalar (defect {scalar_defect:.3e})"
        )));
    }
    if nu.norm() <= threshold {
        return Err(Error::NotInGsp("multiplier vanishes".into()));
    }
    Ok(nu)
}

/// A validated element of `Sp_2g(C)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymplecticMatrix {
    g: usize,
    m: CMatrix,
}

impl SymplecticMatrix {
    pub fn new(m: CMatrix, tol: f64) -> Result<Self> {
        let check = check_symplectic(&m, tol)?;
        if !check.symplectic {
            return Err(Error::NotSymplectic(check.defect));
        }
        Ok(SymplecticMatrix { g: m.rows() / 2, m })
    }

    /// Wraps a matrix that is symplectic by construction.
    pub(crate) fn trusted(m: CMatrix) -> Self {
        debug_assert!(m.is_square() && m.rows().is_multiple_of(2));
        SymplecticMatrix { g: m.rows() / 2, m }
    }

    pub fn identity(g: usize) -> Self {
        SymplecticMatrix::trusted(CMatrix::identity(2 * g))
    }

    pub fn j(g: usize) -> Self {
        SymplecticMatrix::trusted(j_matrix(g))
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn blocks(&self) -> Blocks {
        self.m.block_split(self.g).expect("2g x 2g by construction")
    }

    /// `M^-1 = -J M^T J`, exact up to the sign flips.
    pub fn inverse(&self) -> SymplecticMatrix {
        let Blocks { a, b, c, d } = self.blocks();
        let m = block_join(
            &d.transpose(),
            &-&b.transpose(),
            &-&c.transpose(),
            &a.transpose(),
        )
        .expect("square blocks");
        SymplecticMatrix::trusted(m)
    }

    pub fn compose(&self, other: &SymplecticMatrix) -> Result<SymplecticMatrix> {
        if self.g != other.g {
            return Err(Error::DimensionMismatch(format!(
                "Sp_{} vs Sp_{}",
                2 * self.g,
                2 * other.g
            )));
        }
        Ok(SymplecticMatrix::trusted(&self.m * &other.m))
    }

    pub fn defect(&self) -> f64 {
        let j = j_matrix(self.g);
        (&(&self.m * &j) * &self.m.transpose()).max_abs_diff(&j)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.m.max_imag() <= tol
    }
}

/// A validated element of `GSp_2g(C)` with its multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct GSpMatrix {
    g: usize,
    m: CMatrix,
    nu: C64,
}

impl GSpMatrix {
    pub fn new(m: CMatrix, tol: f64) -> Result<Self> {
        let nu = gsp_multiplier(&m, tol)?;
        Ok(GSpMatrix {
            g: m.rows() / 2,
            m,
            nu,
        })
    }

    pub(crate) fn trusted(m: CMatrix, nu: C64) -> Self {
        GSpMatrix {
            g: m.rows() / 2,
            m,
            nu,
        }
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn nu(&self) -> C64 {
        self.nu
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn blocks(&self) -> Blocks {
        self.m.block_split(self.g).expect("2g x 2g by construction")
    }
}

/// Data `(A, B)` of the Siegel parabolic element `(A B; 0 (A^T)^-1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParabolicElement {
    a: CMatrix,
    b: CMatrix,
}

impl ParabolicElement {
    pub fn new(a: CMatrix, b: CMatrix, tol: f64) -> Result<Self> {
        if !a.is_square() || (a.rows(), a.cols()) != (b.rows(), b.cols()) {
            return Err(Error::DimensionMismatch(format!(
                "parabolic blocks {}x{} and {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        a.lu()
            .map_err(|_| Error::InvalidParabolic("A is singular".into()))?;
        let defect = sym_defect(&a, &b);
        if defect > tol * scale_of(&a).max(scale_of(&b)) {
            return Err(Error::InvalidParabolic(format!(
                "AB^T is not symmetric (defect {defect:.3e})"
            )));
        }
        Ok(ParabolicElement { a, b })
    }

    pub(crate) fn trusted(a: CMatrix, b: CMatrix) -> Self {
        ParabolicElement { a, b }
    }

    pub fn identity(g: usize) -> Self {
        ParabolicElement {
            a: CMatrix::identity(g),
            b: CMatrix::zeros(g, g),
        }
    }

    pub fn g(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    /// `(A^T)^-1`.
    pub fn a_inv_t(&self) -> CMatrix {
        self.a
            .inverse()
            .expect("A invertible by construction")
            .transpose()
    }

    pub fn embed(&self) -> SymplecticMatrix {
        let g = self.g();
        let m = block_join(&self.a, &self.b, &CMatrix::zeros(g, g), &self.a_inv_t())
            .expect("square blocks");
        SymplecticMatrix::trusted(m)
    }

    /// Group product `self * other` in `P_g`.
    pub fn compose(&self, other: &ParabolicElement) -> ParabolicElement {
        let a = &self.a * &other.a;
        let b = &(&self.a * &other.b) + &(&self.b * &other.a_inv_t());
        ParabolicElement { a, b }
    }

    pub fn inverse(&self) -> ParabolicElement {
        let a_inv = self.a.inverse().expect("A invertible by construction");
        let b = -&(&(&a_inv * &self.b) * &self.a.transpose());
        ParabolicElement { a: a_inv, b }
    }
}

/// `p' = ((A^T)^-1 0; 2 pi i B A)`, the mirror image of `p` in `P'_g`.
pub fn p_to_pprime(p: &ParabolicElement) -> SymplecticMatrix {
    let g = p.g();
    let m = block_join(
        &p.a_inv_t(),
        &CMatrix::zeros(g, g),
        &p.b.scale(TWO_PI_I),
        &p.a,
    )
    .expect("square blocks");
    SymplecticMatrix::trusted(m)
}

/// Right action of the parabolic on a symplectic-Hodge frame.
pub fn parabolic_act_frame(frame: &HodgeFrame, p: &ParabolicElement) -> Result<HodgeFrame> {
    frame.act(p)
}

/// The decomposition `s <-> (nu(s), tau(s), p(s))` of an element of `GSp*`.
#[derive(Debug, Clone, PartialEq)]
pub struct GspStarFactors {
    pub nu: C64,
    /// `C A^-1`, symmetric.
    pub z: CMatrix,
    /// `(A^-1, -B^T)`.
    pub p: ParabolicElement,
}

pub fn gsp_star_factor(s: &GSpMatrix) -> Result<GspStarFactors> {
    let Blocks { a, b, c, .. } = s.blocks();
    let a_inv = a.inverse().map_err(|_| Error::NotInGspStar)?;
    Ok(GspStarFactors {
        nu: s.nu,
        z: &c * &a_inv,
        p: ParabolicElement::trusted(a_inv, -&b.transpose()),
    })
}

/// Inverse of [`gsp_star_factor`]: `(X^-1, -Y^T; Z X^-1, (nu - Z X^-1 Y) X^T)`.
pub fn gsp_star_assemble(
    nu: C64,
    z: &CMatrix,
    p: &ParabolicElement,
    tol: f64,
) -> Result<GSpMatrix> {
    let g = p.g();
    if (z.rows(), z.cols()) != (g, g) {
        return Err(Error::DimensionMismatch(format!(
            "Z is {}x{}, expected {g}x{g}",
            z.rows(),
            z.cols()
        )));
    }
    let defect = z.symmetry_defect();
    if defect > tol * z.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(defect));
    }
    if nu.norm() == 0.0 || !nu.re.is_finite() || !nu.im.is_finite() {
        return Err(Error::InvalidInput(
            "multiplier must be a nonzero finite number".into(),
        ));
    }
    let x_inv =
        p.a.inverse()
            .map_err(|_| Error::InvalidParabolic("A is singular".into()))?;
    let zx = z * &x_inv;
    let d = &(&CMatrix::identity(g).scale(nu) - &(&zx * &p.b)) * &p.a.transpose();
    let m = block_join(&x_inv, &-&p.b.transpose(), &zx, &d)?;
    Ok(GSpMatrix::trusted(m, nu))
}

/// `s1` and `s2` define the same point of `Sp_2g(Z) \ Sp_2g(C)`.
pub fn same_coset_spz(s1: &SymplecticMatrix, s2: &SymplecticMatrix, tol: f64) -> bool {
    if s1.g != s2.g {
        return false;
    }
    let q = &s1.m * &s2.inverse().m;
    match IntMatrix::round_from(&q, tol) {
        Some(n) => n.is_symplectic(),
        None => false,
    }
}

/// A generator `A_kl = (1/2 pi i)(0 E^{kl}; 0 0)` of the Ramanujan flows.
#[derive(Debug, Clone, PartialEq)]
pub struct LieGenerator {
    g: usize,
    k: usize,
    l: usize,
    matrix: CMatrix,
}

impl LieGenerator {
    pub fn new(g: usize, k: usize, l: usize) -> Result<Self> {
        let e = e_basis(k, l, g)?.scale(TWO_PI_I.inv());
        let z = CMatrix::zeros(g, g);
        let matrix = block_join(&z, &e, &z, &z)?;
        Ok(LieGenerator { g, k, l, matrix })
    }

    pub fn all(g: usize) -> Vec<LieGenerator> {
        (1..=g)
            .flat_map(|k| (k..=g).map(move |l| LieGenerator::new(g, k, l).expect("valid indices")))
            .collect()
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn indices(&self) -> (usize, usize) {
        (self.k, self.l)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Membership in `Lie Sp_2g`: `B^T = B`, `C^T = C`, `D = -A^T`.
pub fn in_lie_sp(x: &CMatrix, tol: f64) -> Result<bool> {
    let g = x.half_dim()?;
    let Blocks { a, b, c, d } = x.block_split(g)?;
    Ok(b.symmetry_defect() <= tol
        && c.symmetry_defect() <= tol
        && d.max_abs_diff(&-&a.transpose()) <= tol)
}

/// Integer matrix used for exact checks in `Sp_2g(Z)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if rows * cols != data.len() || rows == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} with {} entries",
                data.len()
            )));
        }
        Ok(IntMatrix { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0; n * n];
        (0..n).for_each(|i| data[i * n + i] = 1);
        IntMatrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn j(g: usize) -> Self {
        let n = 2 * g;
        let mut data = vec![0; n * n];
        for i in 0..g {
            data[i * n + g + i] = 1;
            data[(g + i) * n + i] = -1;
        }
        IntMatrix {
            rows: n,
            cols: n,
            data,
        }
    }

    /// `(1 N; 0 1)` for an integer symmetric `g x g` matrix `N`.
    pub fn translation(n: &IntMatrix) -> Result<Self> {
        let g = n.rows;
        if n.cols != g || (0..g).any(|i| (0..g).any(|j| n.get(i, j) != n.get(j, i))) {
            return Err(Error::InvalidInput(
                "translation needs a symmetric square matrix".into(),
            ));
        }
        let mut out = IntMatrix::identity(2 * g);
        for i in 0..g {
            for j in 0..g {
                out.data[i * 2 * g + g + j] = n.get(i, j);
            }
        }
        Ok(out)
    }

    /// Rounds every entry of `m`, provided all are within `tol` of an integer.
    pub fn round_from(m: &CMatrix, tol: f64) -> Option<Self> {
        let mut data = Vec::with_capacity(m.rows() * m.cols());
        for z in m.entries() {
            let r = z.re.round();
            if (z.re - r).abs() > tol || z.im.abs() > tol || r.abs() > 9.0e15 {
                return None;
            }
            data.push(r as i64);
        }
        Some(IntMatrix {
            rows: m.rows(),
            cols: m.cols(),
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    pub fn max_abs(&self) -> i64 {
        self.data.iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    pub fn mul(&self, other: &IntMatrix) -> Option<IntMatrix> {
        if self.cols != other.rows {
            return None;
        }
        let mut data = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut s: i128 = 0;
                for k in 0..self.cols {
                    s += self.get(i, k) as i128 * other.get(k, j) as i128;
                }
                data.push(i64::try_from(s).ok()?);
            }
        }
        Some(IntMatrix {
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    /// `M J M^T = J` in exact integer arithmetic.
    pub fn is_symplectic(&self) -> bool {
        if self.rows != self.cols || !self.rows.is_multiple_of(2) {
            return false;
        }
        let n = self.rows;
        let g = n / 2;
        let jv = |i: usize, j: usize| -> i128 {
            if i < g && j == i + g {
                1
            } else if i >= g && j + g == i {
                -1
            } else {
                0
            }
        };
        for i in 0..n {
            for j in 0..n {
                // (M J M^T)_ij = sum_k sum_l M_ik J_kl M_jl
                let mut s: i128 = 0;
                for k in 0..g {
                    s += self.get(i, k) as i128 * self.get(j, k + g) as i128;
                    s -= self.get(i, k + g) as i128 * self.get(j, k) as i128;
                }
                if s != jv(i, j) {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            C64::new(self.get(i, j) as f64, 0.0)
        })
    }

    pub fn to_symplectic(&self) -> Result<SymplecticMatrix> {
        if !self.is_symplectic() {
            return Err(Error::NotSymplectic(f64::NAN));
        }
        Ok(SymplecticMatrix::trusted(self.to_cmatrix()))
    }
}
