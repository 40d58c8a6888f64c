//! The Siegel upper half-space `H_g` and the actions of `Sp_2g` on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Blocks, CMatrix, C64};
use crate::sympgrp::SymplecticMatrix;

/// Symmetry tolerance used by [`in_siegel`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Relative determinant threshold deciding invertibility of `C tau + D`.
pub const DET_THRESHOLD: f64 = 1e-12;

/// A symmetric matrix with positive-definite imaginary part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiegelPoint {
    tau: CMatrix,
}

impl SiegelPoint {
    pub fn new(tau: CMatrix) -> Result<Self> {
        if !tau.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "tau is {}x{}",
                tau.rows(),
                tau.cols()
            )));
        }
        let defect = tau.symmetry_defect();
        if defect > SYMMETRY_TOL * tau.max_abs().max(1.0) {
            return Err(Error::NotInSiegel(format!(
                "tau is not symmetric (defect {defect:.3e})"
            )));
        }
        if !tau
            .imag_part()
            .is_hermitian_positive_definite(SYMMETRY_TOL * tau.max_abs().max(1.0))
        {
            return Err(Error::NotInSiegel("Im tau is not positive definite".into()));
        }
        Ok(SiegelPoint { tau })
    }

    /// `z * 1_g`.
    pub fn scalar(z: C64, g: usize) -> Result<Self> {
        SiegelPoint::new(CMatrix::identity(g).scale(z))
    }

    pub fn g(&self) -> usize {
        self.tau.rows()
    }

    pub fn tau(&self) -> &CMatrix {
        &self.tau
    }

    pub fn into_matrix(self) -> CMatrix {
        self.tau
    }

    /// Entry `tau_kl` (0-based).
    pub fn entry(&self, k: usize, l: usize) -> C64 {
        self.tau[(k, l)]
    }
}

impl<'de> Deserialize<'de> for SiegelPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            tau: CMatrix,
        }
        SiegelPoint::new(Raw::deserialize(d)?.tau).map_err(serde::de::Error::custom)
    }
}

pub fn in_siegel(tau: &CMatrix) -> bool {
    SiegelPoint::new(tau.clone()).is_ok()
}

/// `j(gamma, tau) = C tau + D`.
pub fn cocycle_j(gamma: &CMatrix, tau: &CMatrix) -> Result<CMatrix> {
    let g = gamma.half_dim()?;
    let Blocks { c, d, .. } = gamma.block_split(g)?;
    Ok(&c.checked_mul(tau)? + &d)
}

fn invertible_to_threshold(m: &CMatrix) -> bool {
    let scale = m.max_abs().powi(m.rows() as i32).max(1.0);
    match m.det() {
        Ok(det) => det.norm() > DET_THRESHOLD * scale,
        Err(_) => false,
    }
}

/// `tau` lies in `U_delta`, i.e. `j(delta, tau)` is invertible.
pub fn u_delta_contains(delta: &SymplecticMatrix, tau: &SiegelPoint) -> bool {
    match cocycle_j(delta.matrix(), tau.tau()) {
        Ok(j) => invertible_to_threshold(&j),
        Err(_) => false,
    }
}

/// `(A Z + B)(C Z + D)^-1` for a possibly complex `delta` and symmetric `Z`.
pub fn grassmann_act(delta: &CMatrix, z: &CMatrix) -> Result<CMatrix> {
    let g = delta.half_dim()?;
    if (z.rows(), z.cols()) != (g, g) {
        return Err(Error::DimensionMismatch(format!(
            "Z is {}x{}, expected {g}x{g}",
            z.rows(),
            z.cols()
        )));
    }
    let defect = z.symmetry_defect();
    if defect > SYMMETRY_TOL * z.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(defect));
    }
    let Blocks { a, b, c, d } = delta.block_split(g)?;
    let den = &(&c * z) + &d;
    if !invertible_to_threshold(&den) {
        return Err(Error::OutOfChart);
    }
    let inv = den.inverse().map_err(|_| Error::OutOfChart)?;
    Ok(&(&(&a * z) + &b) * &inv)
}

/// `gamma . tau = (A tau + B)(C tau + D)^-1` for real symplectic `gamma`.
pub fn moebius(gamma: &SymplecticMatrix, tau: &SiegelPoint) -> Result<SiegelPoint> {
    if gamma.g() != tau.g() {
        return Err(Error::DimensionMismatch(format!(
            "Sp_{} acting on H_{}",
            2 * gamma.g(),
            tau.g()
        )));
    }
    let imag = gamma.matrix().max_imag();
    if imag > SYMMETRY_TOL {
        return Err(Error::NotReal(imag));
    }
    let w = grassmann_act(gamma.matrix(), tau.tau())?;
    // roundoff leaves a tiny antisymmetric part; the exact image is symmetric
    let w = (&w + &w.transpose()).scale(C64::new(0.5, 0.0));
    SiegelPoint::new(w)
}
