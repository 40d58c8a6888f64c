//! First de Rham cohomology of `X_tau = C^g / (Z^g + tau Z^g)` in period coordinates.
//!
//! A class is stored as its periods along the integral symplectic basis
//! `gamma_l = e_l`, `delta_l = tau e_l`. Nothing about differential forms is
//! materialised: every statement we need is a statement about periods.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{block_join, c, CMatrix, C64, TWO_PI_I};
use crate::siegel::SiegelPoint;
use crate::sympgrp::{
    gsp_star_factor, j_matrix, scale_of, GSpMatrix, ParabolicElement, SymplecticMatrix,
};

/// Tolerance for the Gram-matrix check on frames.
pub const FRAME_TOL: f64 = 1e-9;

/// A cohomology class through its periods along `gamma_1..gamma_g` and `delta_1..delta_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct CohClass {
    pub gamma: Vec<C64>,
    pub delta: Vec<C64>,
}

impl CohClass {
    pub fn new(gamma: Vec<C64>, delta: Vec<C64>) -> Result<Self> {
        if gamma.len() != delta.len() || gamma.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "period vectors of length {} and {}",
                gamma.len(),
                delta.len()
            )));
        }
        if gamma
            .iter()
            .chain(&delta)
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(CohClass { gamma, delta })
    }

    pub fn zero(g: usize) -> Self {
        CohClass {
            gamma: vec![C64::default(); g],
            delta: vec![C64::default(); g],
        }
    }

    pub fn g(&self) -> usize {
        self.gamma.len()
    }

    /// The `2g` periods, gamma block first.
    pub fn periods(&self) -> Vec<C64> {
        self.gamma.iter().chain(&self.delta).copied().collect()
    }

    pub fn scale(&self, s: C64) -> CohClass {
        CohClass {
            gamma: self.gamma.iter().map(|z| z * s).collect(),
            delta: self.delta.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &CohClass) -> CohClass {
        CohClass {
            gamma: self
                .gamma
                .iter()
                .zip(&other.gamma)
                .map(|(a, b)| a + b)
                .collect(),
            delta: self
                .delta
                .iter()
                .zip(&other.delta)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CohClass) -> CohClass {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn max_abs(&self) -> f64 {
        self.gamma
            .iter()
            .chain(&self.delta)
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CohClass) -> f64 {
        self.sub(other).max_abs()
    }
}

fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `<u, v> = (u_gamma . v_delta - u_delta . v_gamma) / 2 pi i`.
pub fn pairing(u: &CohClass, v: &CohClass) -> Result<C64> {
    if u.g() != v.g() {
        return Err(Error::DimensionMismatch(format!(
            "classes for g = {} and g = {}",
            u.g(),
            v.g()
        )));
    }
    Ok((dot(&u.gamma, &v.delta) - dot(&u.delta, &v.gamma)) / TWO_PI_I)
}

/// A frame `(omega_1..omega_g, eta_1..eta_g)` of `H^1_dR(X_tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HodgeFrame {
    tau: SiegelPoint,
    omega: Vec<CohClass>,
    eta: Vec<CohClass>,
}

impl HodgeFrame {
    /// Checks shapes only; see [`HodgeFrame::gram_defect`] for the symplectic condition.
    pub fn new(tau: SiegelPoint, omega: Vec<CohClass>, eta: Vec<CohClass>) -> Result<Self> {
        let g = tau.g();
        if omega.len() != g || eta.len() != g || omega.iter().chain(&eta).any(|k| k.g() != g) {
            return Err(Error::DimensionMismatch(format!(
                "frame for g = {g} needs {g} + {g} classes of length {g}"
            )));
        }
        Ok(HodgeFrame { tau, omega, eta })
    }

    pub fn g(&self) -> usize {
        self.tau.g()
    }

    pub fn tau(&self) -> &SiegelPoint {
        &self.tau
    }

    pub fn omega(&self) -> &[CohClass] {
        &self.omega
    }

    pub fn eta(&self) -> &[CohClass] {
        &self.eta
    }

    fn classes(&self) -> impl Iterator<Item = &CohClass> {
        self.omega.iter().chain(&self.eta)
    }

    /// Pairings of the frame classes, in the order `omega..., eta...`.
    pub fn gram(&self) -> CMatrix {
        let classes: Vec<&CohClass> = self.classes().collect();
        let n = classes.len();
        CMatrix::from_fn(n, n, |i, j| {
            pairing(classes[i], classes[j]).expect("same g")
        })
    }

    /// Distance of the Gram matrix from the standard form `J`.
    pub fn gram_defect(&self) -> f64 {
        self.gram().max_abs_diff(&j_matrix(self.g()))
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let d = self.gram_defect();
        let scale = self.classes().map(CohClass::max_abs).fold(1.0, f64::max);
        if d > tol * scale * scale {
            return Err(Error::InvalidFrame(d));
        }
        Ok(())
    }

    /// `b . p = (omega A, omega B + eta (A^T)^-1)`.
    pub fn act(&self, p: &ParabolicElement) -> Result<HodgeFrame> {
        let g = self.g();
        if p.g() != g {
            return Err(Error::DimensionMismatch(format!(
                "parabolic for g = {} on a frame for g = {g}",
                p.g()
            )));
        }
        let (a, b, a_it) = (p.a(), p.b(), p.a_inv_t());
        // new class j = sum_i omega_i x_ij + eta_i y_ij
        let combo = |x: &CMatrix, y: Option<&CMatrix>, j: usize| -> CohClass {
            (0..g).fold(CohClass::zero(g), |acc, i| {
                let acc = acc.add(&self.omega[i].scale(x[(i, j)]));
                match y {
                    Some(y) => acc.add(&self.eta[i].scale(y[(i, j)])),
                    None => acc,
                }
            })
        };
        let omega = (0..g).map(|j| combo(a, None, j)).collect();
        let eta = (0..g).map(|j| combo(b, Some(&a_it), j)).collect();
        HodgeFrame::new(self.tau.clone(), omega, eta)
    }
}

/// The frame `omega_k = 2 pi i dz_k` and `eta_k` with periods `(0, e_k)`.
pub fn canonical_frame(tau: &SiegelPoint) -> HodgeFrame {
    let g = tau.g();
    let t = tau.tau();
    let omega = (0..g)
        .map(|k| CohClass {
            gamma: (0..g)
                .map(|l| if l == k { TWO_PI_I } else { C64::default() })
                .collect(),
            delta: (0..g).map(|l| TWO_PI_I * t[(l, k)]).collect(),
        })
        .collect();
    let eta = (0..g).map(|k| unit_delta_class(g, k)).collect();
    HodgeFrame {
        tau: tau.clone(),
        omega,
        eta,
    }
}

fn unit_delta_class(g: usize, k: usize) -> CohClass {
    CohClass {
        gamma: vec![C64::default(); g],
        delta: (0..g)
            .map(|l| if l == k { c(1.0, 0.0) } else { C64::default() })
            .collect(),
    }
}

/// The classes `eta_k^{ij}`, `k = 1..g`, with periods `(0, E^{ij} e_k)` (1-based `i <= j`).
pub fn eta_ij(tau: &SiegelPoint, i: usize, j: usize) -> Result<Vec<CohClass>> {
    let g = tau.g();
    let e = crate::sympgrp::e_basis(i, j, g)?;
    Ok((0..g)
        .map(|k| CohClass {
            gamma: vec![C64::default(); g],
            delta: (0..g).map(|l| e[(l, k)]).collect(),
        })
        .collect())
}

/// Gauss-Manin derivatives `nabla_{theta_kl}` of each frame class.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussManin {
    pub omega: Vec<CohClass>,
    pub eta: Vec<CohClass>,
}

/// Central difference of a frame family along the coordinate `tau_kl` (1-based, `k <= l`),
/// scaled by `1/2 pi i`. Off-diagonal steps move `tau_kl` and `tau_lk` together.
pub fn gauss_manin_fd<F>(
    family: F,
    tau: &SiegelPoint,
    k: usize,
    l: usize,
    h: f64,
) -> Result<GaussManin>
where
    F: Fn(&SiegelPoint) -> Result<HodgeFrame>,
{
    let g = tau.g();
    let e = crate::sympgrp::e_basis(k, l, g)?;
    if !(h > 0.0 && h.is_finite()) || h < 1e3 * f64::EPSILON * tau.tau().max_abs().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "finite-difference step {h:e} is unusable"
        )));
    }
    let shifted = |s: f64| SiegelPoint::new(tau.tau() + &e.scale(c(s, 0.0)));
    let plus = family(&shifted(h)?)?;
    let minus = family(&shifted(-h)?)?;
    let scale = (TWO_PI_I * 2.0 * h).inv();
    let diff = |a: &[CohClass], b: &[CohClass]| -> Vec<CohClass> {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.sub(y).scale(scale))
            .collect()
    };
    Ok(GaussManin {
        omega: diff(&plus.omega, &minus.omega),
        eta: diff(&plus.eta, &minus.eta),
    })
}

/// `P = (Omega_1 N_1; Omega_2 N_2)`: column `j` holds the periods of the `j`-th frame class.
pub fn period_matrix(frame: &HodgeFrame) -> Result<GSpMatrix> {
    frame.validate(FRAME_TOL)?;
    let classes: Vec<Vec<C64>> = frame.classes().map(CohClass::periods).collect();
    let n = classes.len();
    let p = CMatrix::from_fn(n, n, |i, j| classes[j][i]);
    GSpMatrix::new(p, FRAME_TOL)
}

/// `Pi = (N_2  Omega_2/2 pi i; N_1  Omega_1/2 pi i)`.
pub fn pi_matrix(p: &GSpMatrix) -> Result<SymplecticMatrix> {
    let b = p.blocks();
    let s = TWO_PI_I.inv();
    let m = block_join(&b.d, &b.c.scale(s), &b.b, &b.a.scale(s))?;
    let tol = FRAME_TOL;
    SymplecticMatrix::new(m, tol)
}

/// Re-normalises a frame so that its `eta` classes have periods `(0, e_j)`.
pub fn normalize_basis(frame: &HodgeFrame, p: &GSpMatrix) -> Result<HodgeFrame> {
    let scaled = p.matrix().scale(TWO_PI_I.inv());
    let s = GSpMatrix::new(scaled, FRAME_TOL)?;
    let factors = gsp_star_factor(&s)?;
    frame.act(&factors.p)
}

/// Largest deviation of the `eta` periods from `(0, e_j)`.
pub fn normalization_defect(frame: &HodgeFrame) -> f64 {
    let g = frame.g();
    (0..g)
        .map(|j| frame.eta[j].max_abs_diff(&unit_delta_class(g, j)))
        .fold(0.0, f64::max)
}

/// Matrix-level residual of `Pi(b . p) = Pi(b) p'`.
pub fn pi_equivariance_defect(frame: &HodgeFrame, p: &ParabolicElement) -> Result<f64> {
    let lhs = pi_matrix(&period_matrix(&frame.act(p)?)?)?;
    let rhs = pi_matrix(&period_matrix(frame)?)?.compose(&crate::sympgrp::p_to_pprime(p))?;
    Ok(lhs.matrix().max_abs_diff(rhs.matrix()) / scale_of(rhs.matrix()).sqrt())
}

#[derive(Serialize, Deserialize)]
struct ClassJson {
    gamma: Vec<[f64; 2]>,
    delta: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct FrameJson {
    tau: CMatrix,
    omega: Vec<ClassJson>,
    eta: Vec<ClassJson>,
}

fn to_pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn from_pairs(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|&[a, b]| c(a, b)).collect()
}

impl Serialize for CohClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ClassJson {
            gamma: to_pairs(&self.gamma),
            delta: to_pairs(&self.delta),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CohClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ClassJson::deserialize(d)?;
        CohClass::new(from_pairs(&raw.gamma), from_pairs(&raw.delta))
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for HodgeFrame {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let class = |k: &CohClass| ClassJson {
            gamma: to_pairs(&k.gamma),
            delta: to_pairs(&k.delta),
        };
        FrameJson {
            tau: self.tau.tau().clone(),
            omega: self.omega.iter().map(class).collect(),
            eta: self.eta.iter().map(class).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HodgeFrame {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = FrameJson::deserialize(d)?;
        let tau = SiegelPoint::new(raw.tau).map_err(D::Error::custom)?;
        let conv = |v: Vec<ClassJson>| -> std::result::Result<Vec<CohClass>, D::Error> {
            v.into_iter()
                .map(|k| {
                    CohClass::new(from_pairs(&k.gamma), from_pairs(&k.delta))
                        .map_err(D::Error::custom)
                })
                .collect()
        };
        HodgeFrame::new(tau, conv(raw.omega)?, conv(raw.eta)?).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tau_i(g: usize) -> SiegelPoint {
        SiegelPoint::scalar(c(0.0, 1.0), g).unwrap()
    }

    #[test]
    fn pairing_examples() {
        let f = canonical_frame(&tau_i(2));
        for i in 0..2 {
            assert_eq!(pairing(&f.omega[i], &f.omega[i]).unwrap(), C64::default());
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (pairing(&f.omega[i], &f.eta[j]).unwrap() - c(expected, 0.0)).norm() < 1e-15
                );
            }
        }
        // E(gamma_i, .) = (0, e_i), E(delta_j, .) = (-e_j, 0)
        let g = 2;
        for i in 0..g {
            for j in 0..g {
                let ei = unit_delta_class(g, i);
                let mut gamma = vec![C64::default(); g];
                gamma[j] = c(-1.0, 0.0);
                let dj = CohClass::new(gamma, vec![C64::default(); g]).unwrap();
                let expected = if i == j {
                    TWO_PI_I.inv()
                } else {
                    C64::default()
                };
                assert!((pairing(&ei, &dj).unwrap() - expected).norm() < 1e-16);
            }
        }
        assert!(pairing(&CohClass::zero(1), &CohClass::zero(2)).is_err());
    }

    #[test]
    fn canonical_frame_at_i() {
        let f = canonical_frame(&tau_i(1));
        assert_eq!(f.omega[0].gamma, vec![TWO_PI_I]);
        assert_eq!(f.omega[0].delta, vec![TWO_PI_I * c(0.0, 1.0)]);
        assert_eq!(f.eta[0].periods(), vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert!((pairing(&f.omega[0], &f.eta[0]).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn canonical_gram_is_j() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for g in 1..=3 {
            let f = canonical_frame(&sample::siegel_point(&mut rng, g));
            assert!(f.gram_defect() < 1e-14);
        }
    }

    #[test]
    fn eta_ij_periods() {
        let tau = tau_i(2);
        let f = canonical_frame(&tau);
        for k in 0..2 {
            assert_eq!(eta_ij(&tau, k + 1, k + 1).unwrap()[k], f.eta[k]);
        }
        let fam = eta_ij(&tau, 1, 2).unwrap();
        assert_eq!(fam[0], unit_delta_class(2, 1));
        assert_eq!(fam[1], unit_delta_class(2, 0));
        assert!(eta_ij(&tau, 2, 1).is_err());
    }

    #[test]
    fn gauss_manin_on_canonical_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for g in 1..=3 {
            let tau = sample::siegel_point(&mut rng, g);
            for k in 1..=g {
                for l in k..=g {
                    let gm = gauss_manin_fd(|t| Ok(canonical_frame(t)), &tau, k, l, 1e-5).unwrap();
                    let expected = eta_ij(&tau, k, l).unwrap();
                    for ((om, et), ex) in gm.omega.iter().zip(&gm.eta).zip(&expected) {
                        assert!(om.max_abs_diff(ex) < 1e-8);
                        assert!(et.max_abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn gauss_manin_of_constant_family_vanishes() {
        let tau = tau_i(2);
        let frozen = canonical_frame(&tau);
        let gm = gauss_manin_fd(
            |t| HodgeFrame::new(t.clone(), frozen.omega.clone(), frozen.eta.clone()),
            &tau,
            1,
            2,
            1e-5,
        )
        .unwrap();
        assert!(gm.omega.iter().chain(&gm.eta).all(|k| k.max_abs() == 0.0));
        assert!(gauss_manin_fd(|t| Ok(canonical_frame(t)), &tau, 1, 2, 0.0).is_err());
    }

    #[test]
    fn canonical_period_and_pi_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for g in 1..=3 {
            let tau = sample::siegel_point(&mut rng, g);
            let p = period_matrix(&canonical_frame(&tau)).unwrap();
            let b = p.blocks();
            assert!(b.a.max_abs_diff(&CMatrix::identity(g).scale(TWO_PI_I)) < 1e-14);
            assert!(b.c.max_abs_diff(&tau.tau().scale(TWO_PI_I)) < 1e-14);
            assert_eq!(b.b, CMatrix::zeros(g, g));
            assert_eq!(b.d, CMatrix::identity(g));
            assert!((p.nu() - TWO_PI_I).norm() < 1e-12);
            let ratio = &b.c * &b.a.inverse().unwrap();
            assert!(ratio.max_abs_diff(tau.tau()) < 1e-12);
            let pi = pi_matrix(&p).unwrap();
            assert!(
                pi.matrix()
                    .max_abs_diff(crate::flows::psi(tau.tau()).unwrap().matrix())
                    < 1e-14
            );
        }
    }

    #[test]
    fn acted_frames_keep_multiplier_and_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for trial in 0..20 {
            let g = 1 + trial % 3;
            let tau = sample::siegel_point(&mut rng, g);
            let p = sample::parabolic(&mut rng, g);
            let frame = canonical_frame(&tau).act(&p).unwrap();
            let pm = period_matrix(&frame).unwrap();
            assert!((pm.nu() - TWO_PI_I).norm() < 1e-9);
            let b = pm.blocks();
            let ratio = &b.c * &b.a.inverse().unwrap();
            assert!(crate::siegel::in_siegel(&ratio));
            assert!(ratio.max_abs_diff(tau.tau()) < 1e-9);
            let pi = pi_matrix(&pm).unwrap();
            assert!(crate::sympgrp::is_symplectic(pi.matrix(), 1e-10).unwrap());
            assert!(pi_equivariance_defect(&canonical_frame(&tau), &p).unwrap() < 1e-10);
        }
    }

    #[test]
    fn invalid_frame_is_rejected() {
        let tau = tau_i(1);
        let f = canonical_frame(&tau);
        let broken = HodgeFrame::new(tau, f.omega.clone(), vec![f.omega[0].clone()]).unwrap();
        assert!(matches!(
            period_matrix(&broken),
            Err(Error::InvalidFrame(_))
        ));
        assert!(HodgeFrame::new(tau_i(2), f.omega.clone(), f.eta.clone()).is_err());
    }

    #[test]
    fn normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for g in 1..=3 {
            let tau = sample::siegel_point(&mut rng, g);
            let canon = canonical_frame(&tau);
            let same = normalize_basis(&canon, &period_matrix(&canon).unwrap()).unwrap();
            for (a, b) in same.classes().zip(canon.classes()) {
                assert!(a.max_abs_diff(b) < 1e-10);
            }

            let moved = canon.act(&sample::parabolic(&mut rng, g)).unwrap();
            let once = normalize_basis(&moved, &period_matrix(&moved).unwrap()).unwrap();
            assert!(normalization_defect(&once) < 1e-9);
            let twice = normalize_basis(&once, &period_matrix(&once).unwrap()).unwrap();
            for (a, b) in once.classes().zip(twice.classes()) {
                assert!(a.max_abs_diff(b) < 1e-9);
            }
        }
    }

    #[test]
    fn frame_json_round_trip() {
        let f = canonical_frame(&tau_i(1));
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.starts_with(r#"{"tau":{"rows":1"#));
        assert!(s.contains(r#""eta":[{"gamma":[[0.0,0.0]],"delta":[[1.0,0.0]]}]"#));
        let back: HodgeFrame = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn class(g: usize) -> impl Strategy<Value = CohClass> {
            proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 2 * g).prop_map(move |v| {
                let z: Vec<C64> = v.into_iter().map(|(a, b)| c(a, b)).collect();
                CohClass::new(z[..g].to_vec(), z[g..].to_vec()).unwrap()
            })
        }

        proptest! {
            #[test]
            fn pairing_is_antisymmetric_and_bilinear(u in class(3), v in class(3), w in class(3), s in -3.0..3.0f64) {
                let scale = 1.0 + u.max_abs() * v.max_abs().max(w.max_abs());
                let uv = pairing(&u, &v).unwrap();
                prop_assert!((uv + pairing(&v, &u).unwrap()).norm() <= 1e-12 * scale);
                let lin = pairing(&u.scale(c(s, 1.0)).add(&w), &v).unwrap();
                let expected = uv * c(s, 1.0) + pairing(&w, &v).unwrap();
                prop_assert!((lin - expected).norm() <= 1e-12 * scale * (1.0 + s.abs()));
            }

            #[test]
            fn action_preserves_gram_and_is_an_action(seed in any::<u64>(), g in 1usize..=3) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let b = canonical_frame(&sample::siegel_point(&mut rng, g));
                let p1 = sample::parabolic(&mut rng, g);
                let p2 = sample::parabolic(&mut rng, g);
                let two_step = b.act(&p1).unwrap().act(&p2).unwrap();
                let one_step = b.act(&p1.compose(&p2)).unwrap();
                prop_assert!(two_step.gram_defect() <= 1e-10 * (1.0 + two_step.omega[0].max_abs()).powi(2));
                for (x, y) in two_step.classes().zip(one_step.classes()) {
                    prop_assert!(x.max_abs_diff(y) <= 1e-10 * (1.0 + x.max_abs()));
                }
            }

            #[test]
            fn pairings_of_canonical_family_are_flat(seed in any::<u64>(), g in 1usize..=3) {
                // theta <a, b> = <nabla a, b> + <a, nabla b>, and the left side is zero
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let tau = sample::siegel_point(&mut rng, g);
                let f = canonical_frame(&tau);
                let gm = gauss_manin_fd(|t| Ok(canonical_frame(t)), &tau, 1, g, 1e-5).unwrap();
                let base: Vec<&CohClass> = f.classes().collect();
                let der: Vec<&CohClass> = gm.omega.iter().chain(&gm.eta).collect();
                for i in 0..2 * g {
                    for j in 0..2 * g {
                        let r = pairing(der[i], base[j]).unwrap() + pairing(base[i], der[j]).unwrap();
                        prop_assert!(r.norm() <= 1e-7);
                    }
                }
            }
        }
    }
}
