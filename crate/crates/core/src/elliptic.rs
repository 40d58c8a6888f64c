//! Weierstrass invariants, zeta and quasi-periods of the lattice `Z + tau Z`.
//!
//! Everything here is a plain lattice sum over square shells
//! `max(|m|, |n|) = r`, deliberately independent of the q-series code so the
//! two can be played off against each other.
//!
//! The shell sums of `lambda^-4` do not cancel, so truncating at `R` leaves an
//! error close to `a / R^2`. Each sum therefore also records the partial sum at
//! `R / 2`, and the reported value is the Richardson extrapolation of the two.
//! The raw truncated sums stay available for convergence studies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{c, CMatrix, C64, TWO_PI_I};
use crate::qseries::{eisenstein_series, eval_series, TailModel};
use crate::sympgrp::gsp_multiplier;

/// Smallest admissible cutoff.
pub const MIN_CUTOFF: usize = 20;

/// Sign of the `x dx/y` class relative to the Weierstrass quasi-periods `2 zeta(w/2)`.
///
/// Re-derived by [`derive_eta_class_sign`] from the requirement that the
/// assembled period matrix has multiplier `+2 pi i`.
pub const ETA_CLASS_SIGN: f64 = -1.0;

/// Point where [`ETA_CLASS_SIGN`] is pinned down.
pub const SIGN_FIX_TAU: C64 = C64::new(0.0, 2.0);

/// A truncated shell sum and its extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellSum {
    /// Sum over `0 < max(|m|, |n|) <= R`.
    pub raw: C64,
    /// Sum over `0 < max(|m|, |n|) <= R / 2`.
    pub half: C64,
    /// `(R^2 raw - h^2 half) / (R^2 - h^2)` with `h = R / 2`.
    pub extrapolated: C64,
    pub cutoff: usize,
}

impl ShellSum {
    /// Heuristic error of the raw sum, `|raw - extrapolated|`.
    pub fn raw_error_estimate(&self) -> f64 {
        (self.raw - self.extrapolated).norm()
    }
}

fn check_inputs(tau: C64, cutoff: usize) -> Result<()> {
    if tau.im.is_nan() || tau.im < 0.5 || !tau.re.is_finite() {
        return Err(Error::InvalidInput(format!(
            "lattice sums need Im tau >= 1/2, got {}",
            tau.im
        )));
    }
    if cutoff < MIN_CUTOFF {
        return Err(Error::InvalidInput(format!(
            "cutoff {cutoff} is below {MIN_CUTOFF}"
        )));
    }
    Ok(())
}

/// Calls `f` on every lattice point of the shell `max(|m|, |n|) = r`, `r >= 1`.
fn for_shell(tau: C64, r: i64, mut f: impl FnMut(C64)) {
    let pt = |m: i64, n: i64| c(m as f64, 0.0) + tau * n as f64;
    for m in -r..=r {
        f(pt(m, r));
        f(pt(m, -r));
    }
    for n in (-r + 1)..r {
        f(pt(r, n));
        f(pt(-r, n));
    }
}

/// Shell sums of several functions at once.
fn shell_sums<const K: usize>(
    tau: C64,
    cutoff: usize,
    f: impl Fn(C64) -> [C64; K],
) -> [ShellSum; K] {
    let h = cutoff / 2;
    let mut acc = [C64::default(); K];
    let mut half = [C64::default(); K];
    for r in 1..=cutoff as i64 {
        let mut shell = [C64::default(); K];
        for_shell(tau, r, |lam| {
            let v = f(lam);
            for k in 0..K {
                shell[k] += v[k];
            }
        });
        for k in 0..K {
            acc[k] += shell[k];
        }
        if r as usize == h {
            half = acc;
        }
    }
    let (rr, hh) = ((cutoff * cutoff) as f64, (h * h) as f64);
    std::array::from_fn(|k| ShellSum {
        raw: acc[k],
        half: half[k],
        extrapolated: (acc[k] * rr - half[k] * hh) / (rr - hh),
        cutoff,
    })
}

/// `g2 = 60 sum' lambda^-4` and `g3 = 140 sum' lambda^-6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeInvariants {
    pub g2: C64,
    pub g3: C64,
    pub g2_raw: C64,
    pub g3_raw: C64,
    /// Heuristic error of the raw sums.
    pub raw_error_estimate: f64,
}

pub fn lattice_invariants(tau: C64, cutoff: usize) -> Result<LatticeInvariants> {
    check_inputs(tau, cutoff)?;
    let [s4, s6] = shell_sums(tau, cutoff, |lam| {
        let inv2 = lam.inv() * lam.inv();
        let inv4 = inv2 * inv2;
        [inv4, inv4 * inv2]
    });
    Ok(LatticeInvariants {
        g2: s4.extrapolated * 60.0,
        g3: s6.extrapolated * 140.0,
        g2_raw: s4.raw * 60.0,
        g3_raw: s6.raw * 140.0,
        raw_error_estimate: (60.0 * s4.raw_error_estimate()).max(140.0 * s6.raw_error_estimate()),
    })
}

/// Rejects lattice points and points far outside the period parallelogram.
fn check_argument(z: C64, tau: C64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite);
    }
    // z = u + v tau
    let v = z.im / tau.im;
    let u = z.re - v * tau.re;
    if u.abs() > 2.0 || v.abs() > 2.0 {
        return Err(Error::InvalidInput(format!(
            "z = {z} is outside the guard region |u|, |v| <= 2"
        )));
    }
    let (m, n) = (u.round(), v.round());
    if (z - (c(m, 0.0) + tau * n)).norm() < 1e-12 {
        return Err(Error::InvalidInput(format!("z = {z} is a lattice point")));
    }
    Ok(())
}

/// `zeta(z) - 1/z` as a shell sum of `1/(z - l) + 1/l + z/l^2`.
pub fn weierstrass_zeta_sum(z: C64, tau: C64, cutoff: usize) -> Result<ShellSum> {
    check_inputs(tau, cutoff)?;
    check_argument(z, tau)?;
    let [s] = shell_sums(tau, cutoff, |lam| {
        let il = lam.inv();
        [(z - lam).inv() + il + z * il * il]
    });
    Ok(s)
}

pub fn weierstrass_zeta(z: C64, tau: C64, cutoff: usize) -> Result<C64> {
    Ok(z.inv() + weierstrass_zeta_sum(z, tau, cutoff)?.extrapolated)
}

/// `wp(z) - 1/z^2` as a shell sum of `1/(z - l)^2 - 1/l^2`.
pub fn weierstrass_p_sum(z: C64, tau: C64, cutoff: usize) -> Result<ShellSum> {
    check_inputs(tau, cutoff)?;
    check_argument(z, tau)?;
    let [s] = shell_sums(tau, cutoff, |lam| {
        let a = (z - lam).inv();
        let b = lam.inv();
        [a * a - b * b]
    });
    Ok(s)
}

pub fn weierstrass_p(z: C64, tau: C64, cutoff: usize) -> Result<C64> {
    Ok(z.inv() * z.inv() + weierstrass_p_sum(z, tau, cutoff)?.extrapolated)
}

/// `(eta1, eta2) = (2 zeta(1/2), 2 zeta(tau/2))`, so that `zeta(z + w_i) = zeta(z) + eta_i`.
pub fn quasi_periods(tau: C64, cutoff: usize) -> Result<(C64, C64)> {
    Ok((
        2.0 * weierstrass_zeta(c(0.5, 0.0), tau, cutoff)?,
        2.0 * weierstrass_zeta(tau / 2.0, tau, cutoff)?,
    ))
}

/// Periods, quasi-periods and invariants of `Z + tau Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticePeriods {
    pub tau: C64,
    pub omega1: C64,
    pub omega2: C64,
    pub eta1: C64,
    pub eta2: C64,
    pub g2: C64,
    pub g3: C64,
}

impl LatticePeriods {
    pub fn compute(tau: C64, cutoff: usize) -> Result<Self> {
        let inv = lattice_invariants(tau, cutoff)?;
        let (eta1, eta2) = quasi_periods(tau, cutoff)?;
        Ok(LatticePeriods {
            tau,
            omega1: c(1.0, 0.0),
            omega2: tau,
            eta1,
            eta2,
            g2: inv.g2,
            g3: inv.g3,
        })
    }

    /// `eta1 omega2 - eta2 omega1`, which Legendre's relation puts at `2 pi i`.
    pub fn legendre(&self) -> C64 {
        self.eta1 * self.omega2 - self.eta2 * self.omega1
    }

    /// Period matrix of `(dz, x dx/y)` against `(gamma, delta) = (1, tau)`, with the
    /// second column built from the quasi-periods times `sign`.
    pub fn period_matrix_with_sign(&self, sign: f64) -> CMatrix {
        CMatrix::from_rows(&[
            vec![self.omega1, self.eta1 * sign],
            vec![self.omega2, self.eta2 * sign],
        ])
        .expect("2x2")
    }

    pub fn period_matrix(&self) -> CMatrix {
        self.period_matrix_with_sign(ETA_CLASS_SIGN)
    }
}

/// Chooses the sign of the `x dx/y` periods so that the multiplier at `tau = 2i` is `+2 pi i`.
pub fn derive_eta_class_sign(cutoff: usize) -> Result<f64> {
    let lp = LatticePeriods::compute(SIGN_FIX_TAU, cutoff)?;
    let nu = gsp_multiplier(&lp.period_matrix_with_sign(1.0), 1e-6)?;
    Ok(if (nu - TWO_PI_I).norm() <= (nu + TWO_PI_I).norm() {
        1.0
    } else {
        -1.0
    })
}

/// Multiplier and `Omega_2 Omega_1^-1` of the assembled period matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiemannCheck {
    pub nu: C64,
    pub nu_residual: f64,
    pub ratio: C64,
    pub ratio_residual: f64,
}

pub fn riemann_check(periods: &LatticePeriods) -> Result<RiemannCheck> {
    let p = periods.period_matrix();
    let nu = gsp_multiplier(&p, 1e-6)?;
    let ratio = p[(1, 0)] / p[(0, 0)];
    Ok(RiemannCheck {
        nu,
        nu_residual: (nu - TWO_PI_I).norm(),
        ratio,
        ratio_residual: (ratio - periods.tau).norm(),
    })
}

/// Residuals of `E2 = -12 (w1/2pi i)(eta1/2pi i)`, `E4 = 12 g2 (w1/2pi i)^4`, `E6 = -216 g3 (w1/2pi i)^6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodIdentityReport {
    pub tau: C64,
    pub lattice: [C64; 3],
    pub series: [C64; 3],
    pub residuals: [f64; 3],
}

pub fn eisenstein_period_identities(
    tau: C64,
    cutoff: usize,
    terms: usize,
) -> Result<PeriodIdentityReport> {
    let lp = LatticePeriods::compute(tau, cutoff)?;
    eisenstein_period_identities_from(&lp, terms)
}

pub fn eisenstein_period_identities_from(
    lp: &LatticePeriods,
    terms: usize,
) -> Result<PeriodIdentityReport> {
    let w = lp.omega1 / TWO_PI_I;
    let lattice = [
        -12.0 * w * (lp.eta1 / TWO_PI_I),
        12.0 * lp.g2 * w.powu(4),
        -216.0 * lp.g3 * w.powu(6),
    ];
    let mut series = [C64::default(); 3];
    for (k, weight) in [2u32, 4, 6].into_iter().enumerate() {
        let f = eisenstein_series(weight, terms)?;
        series[k] = eval_series(&f, lp.tau, &TailModel::eisenstein(weight)?, 1e-9)?.value;
    }
    let residuals = std::array::from_fn(|k| (lattice[k] - series[k]).norm());
    Ok(PeriodIdentityReport {
        tau: lp.tau,
        lattice,
        series,
        residuals,
    })
}
