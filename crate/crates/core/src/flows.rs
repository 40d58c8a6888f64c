//! The higher Ramanujan flows in group coordinates and their twisted leaves.
//!
//! A point of the moduli space is represented by a matrix `M` in `Sp_2g(C)`
//! standing for the coset `Sp_2g(Z) M`. Representatives are never reduced;
//! equality of points is always decided by [`same_coset_spz`].

use serde::Serialize;

use crate::derham::{canonical_frame, period_matrix, pi_matrix};
use crate::error::{Error, Result};
use crate::numerics::{block_join, c, Blocks, CMatrix, C64, TWO_PI_I};
use crate::qseries::{EisensteinTriple, RamanujanPoint, PHI1_ACCURACY};
use crate::siegel::{
    grassmann_act, in_siegel, moebius, u_delta_contains, SiegelPoint, SYMMETRY_TOL,
};
use crate::sympgrp::{
    e_basis, p_to_pprime, same_coset_spz, scale_of, IntMatrix, LieGenerator, ParabolicElement,
    SymplecticMatrix, GROUP_TOL, INTEGER_TOL,
};

/// `psi(Z) = (1 Z; 0 1)` for symmetric `Z`.
pub fn psi(z: &CMatrix) -> Result<SymplecticMatrix> {
    if !z.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "Z is {}x{}",
            z.rows(),
            z.cols()
        )));
    }
    let defect = z.symmetry_defect();
    if defect > SYMMETRY_TOL * z.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(defect));
    }
    Ok(psi_trusted(z))
}

fn psi_trusted(z: &CMatrix) -> SymplecticMatrix {
    let g = z.rows();
    let m = block_join(
        &CMatrix::identity(g),
        z,
        &CMatrix::zeros(g, g),
        &CMatrix::identity(g),
    )
    .expect("square");
    SymplecticMatrix::trusted(m)
}

fn symmetrize(z: &CMatrix) -> CMatrix {
    (z + &z.transpose()).scale(c(0.5, 0.0))
}

/// Membership in `B_g`: `D` invertible and `B D^-1` in `H_g`.
pub fn in_bg(s: &SymplecticMatrix) -> bool {
    let Blocks { b, d, .. } = s.blocks();
    let Ok(d_inv) = d.inverse() else { return false };
    let w = &b * &d_inv;
    w.symmetry_defect() <= 1e-9 * w.max_abs().max(1.0) && in_siegel(&symmetrize(&w))
}

/// A point `Sp_2g(Z) M` of the flow space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowState {
    m: SymplecticMatrix,
}

impl FlowState {
    pub fn new(m: SymplecticMatrix) -> Self {
        FlowState { m }
    }

    pub fn at(tau: &SiegelPoint) -> Self {
        FlowState {
            m: psi_trusted(tau.tau()),
        }
    }

    pub fn g(&self) -> usize {
        self.m.g()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.m.matrix()
    }

    pub fn symplectic(&self) -> &SymplecticMatrix {
        &self.m
    }
}

/// `T = sum_{k <= l} t_kl E^{kl}` read from the upper triangle of `t`.
fn coefficient_matrix(t: &CMatrix, g: usize) -> Result<CMatrix> {
    if (t.rows(), t.cols()) != (g, g) {
        return Err(Error::DimensionMismatch(format!(
            "flow times are {}x{}, expected {g}x{g}",
            t.rows(),
            t.cols()
        )));
    }
    Ok(CMatrix::from_fn(g, g, |i, j| {
        if i <= j {
            t[(i, j)]
        } else {
            t[(j, i)]
        }
    }))
}

/// Time-`t` map of the commuting flows: `M0 psi(T / 2 pi i)`.
pub fn exact_flow(m0: &FlowState, t: &CMatrix) -> Result<FlowState> {
    let tt = coefficient_matrix(t, m0.g())?.scale(TWO_PI_I.inv());
    Ok(FlowState {
        m: m0.m.compose(&psi_trusted(&tt))?,
    })
}

/// Endpoint of an RK4 integration together with the worst symplectic defect met on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Rk4Outcome {
    pub state: FlowState,
    pub max_defect: f64,
}

/// Integrates `M' = M A_kl` with `n` fixed RK4 steps (1-based `k <= l`).
pub fn rk4_flow(m0: &FlowState, k: usize, l: usize, t: C64, steps: usize) -> Result<Rk4Outcome> {
    if steps == 0 {
        return Err(Error::InvalidInput("rk4 needs at least one step".into()));
    }
    let a = LieGenerator::new(m0.g(), k, l)?;
    let a = a.matrix();
    let h = t / steps as f64;
    let mut m = m0.matrix().clone();
    let mut max_defect = 0.0f64;
    for _ in 0..steps {
        let k1 = &m * a;
        let k2 = &(&m + &k1.scale(h / 2.0)) * a;
        let k3 = &(&m + &k2.scale(h / 2.0)) * a;
        let k4 = &(&m + &k3.scale(h)) * a;
        let incr = &(&(&k1 + &k2.scale(c(2.0, 0.0))) + &k3.scale(c(2.0, 0.0))) + &k4;
        m = &m + &incr.scale(h / 6.0);
        let s = SymplecticMatrix::trusted(m.clone());
        max_defect = max_defect.max(s.defect() / scale_of(&m));
    }
    Ok(Rk4Outcome {
        state: FlowState {
            m: SymplecticMatrix::trusted(m),
        },
        max_defect,
    })
}

/// Residual of `(psi(tau + h E^kl) - psi(tau - h E^kl)) / (2 h 2 pi i) = psi(tau) A_kl`.
pub fn generator_fd_residual(tau: &SiegelPoint, k: usize, l: usize, h: f64) -> Result<f64> {
    let g = tau.g();
    let e = e_basis(k, l, g)?;
    let plus = psi(&(tau.tau() + &e.scale(c(h, 0.0))))?;
    let minus = psi(&(tau.tau() - &e.scale(c(h, 0.0))))?;
    let fd = (plus.matrix() - minus.matrix()).scale((TWO_PI_I * 2.0 * h).inv());
    let field = psi_trusted(tau.tau()).matrix() * LieGenerator::new(g, k, l)?.matrix();
    Ok(fd.max_abs_diff(&field))
}

/// A twisting element `delta` of `Sp_2g(C)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafSpec {
    delta: SymplecticMatrix,
}

impl LeafSpec {
    pub fn new(delta: SymplecticMatrix) -> Self {
        LeafSpec { delta }
    }

    pub fn identity(g: usize) -> Self {
        LeafSpec {
            delta: SymplecticMatrix::identity(g),
        }
    }

    pub fn g(&self) -> usize {
        self.delta.g()
    }

    pub fn delta(&self) -> &SymplecticMatrix {
        &self.delta
    }
}

/// `psi_delta(tau) = delta^-1 psi(delta . tau)`.
pub fn psi_delta(spec: &LeafSpec, tau: &SiegelPoint) -> Result<SymplecticMatrix> {
    if spec.g() != tau.g() {
        return Err(Error::DimensionMismatch(format!(
            "delta in Sp_{} at tau in H_{}",
            2 * spec.g(),
            tau.g()
        )));
    }
    if !u_delta_contains(&spec.delta, tau) {
        return Err(Error::OutsideDomain);
    }
    let w = grassmann_act(spec.delta.matrix(), tau.tau()).map_err(|e| match e {
        Error::OutOfChart => Error::OutsideDomain,
        other => other,
    })?;
    spec.delta.inverse().compose(&psi_trusted(&symmetrize(&w)))
}

/// `p_{delta, tau} = ((C tau + D)^-1, -C^T / 2 pi i)`.
pub fn p_delta(delta: &SymplecticMatrix, tau: &SiegelPoint) -> Result<ParabolicElement> {
    if !u_delta_contains(delta, tau) {
        return Err(Error::OutsideDomain);
    }
    let Blocks { c: cc, d, .. } = delta.blocks();
    let j = &(&cc * tau.tau()) + &d;
    let a = j.inverse().map_err(|_| Error::OutsideDomain)?;
    Ok(ParabolicElement::trusted(
        a,
        cc.transpose().scale(-TWO_PI_I.inv()),
    ))
}

/// `delta = (A^T, -A^T tau; -2 pi i B^T, A^-1 + 2 pi i B^T tau)`, for which `p_{delta, tau} = p`.
pub fn delta_from(tau: &SiegelPoint, p: &ParabolicElement) -> Result<SymplecticMatrix> {
    let g = tau.g();
    if p.g() != g {
        return Err(Error::DimensionMismatch(format!(
            "parabolic for g = {} at tau in H_{g}",
            p.g()
        )));
    }
    let at = p.a().transpose();
    let bt = p.b().transpose();
    let a_inv = p.a().inverse()?;
    let top_right = -&(&at * tau.tau());
    let bottom_left = bt.scale(-TWO_PI_I);
    let bottom_right = &a_inv + &(&bt * tau.tau()).scale(TWO_PI_I);
    SymplecticMatrix::new(
        block_join(&at, &top_right, &bottom_left, &bottom_right)?,
        GROUP_TOL,
    )
}

/// `|psi_delta(tau) - psi(tau) p'_{delta, tau}|`.
pub fn factorisation_residual(spec: &LeafSpec, tau: &SiegelPoint) -> Result<f64> {
    let lhs = psi_delta(spec, tau)?;
    let pp = p_to_pprime(&p_delta(&spec.delta, tau)?);
    let rhs = psi_trusted(tau.tau()).compose(&pp)?;
    Ok(lhs.matrix().max_abs_diff(rhs.matrix()))
}

/// `|p_{delta_from(tau, p), tau} - p|`.
pub fn delta_round_trip_residual(tau: &SiegelPoint, p: &ParabolicElement) -> Result<f64> {
    let delta = delta_from(tau, p)?;
    let back = p_delta(&delta, tau)?;
    Ok(back
        .a()
        .max_abs_diff(p.a())
        .max(back.b().max_abs_diff(p.b())))
}

/// Outcome of the equivariance identity `gamma psi_{delta gamma}(tau) = psi_delta(gamma . tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equivariance {
    pub residual: f64,
    pub same_coset: bool,
}

pub fn equivariance_check(
    delta: &SymplecticMatrix,
    gamma: &IntMatrix,
    tau: &SiegelPoint,
) -> Result<Equivariance> {
    let gamma = gamma.to_symplectic()?;
    let dg = LeafSpec::new(delta.compose(&gamma)?);
    let lhs_rep = psi_delta(&dg, tau)?;
    let moved = moebius(&gamma, tau)?;
    let rhs = psi_delta(&LeafSpec::new(delta.clone()), &moved)?;
    let lhs = gamma.compose(&lhs_rep)?;
    Ok(Equivariance {
        residual: lhs.matrix().max_abs_diff(rhs.matrix()),
        same_coset: same_coset_spz(&lhs_rep, &rhs, INTEGER_TOL),
    })
}

/// A sampled point of a leaf.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafSample {
    pub tau: SiegelPoint,
    pub state: SymplecticMatrix,
}

/// Points `(tau, psi_delta(tau))` over the grid points lying in `U_delta`.
pub fn sample_leaf(spec: &LeafSpec, grid: &[SiegelPoint]) -> Result<Vec<LeafSample>> {
    let mut out = Vec::new();
    for tau in grid {
        if !u_delta_contains(&spec.delta, tau) {
            continue;
        }
        match psi_delta(spec, tau) {
            Ok(state) => out.push(LeafSample {
                tau: tau.clone(),
                state,
            }),
            Err(Error::OutsideDomain) => continue,
            Err(e) => return Err(e),
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no grid point lies in U_delta".into()));
    }
    Ok(out)
}

/// Distance of `delta s1 s2^-1 delta^-1` from the unipotent group `{psi(W)}`.
pub fn same_leaf_defect(
    delta: &SymplecticMatrix,
    s1: &SymplecticMatrix,
    s2: &SymplecticMatrix,
) -> Result<f64> {
    let q = delta
        .compose(&s1.compose(&s2.inverse())?)?
        .compose(&delta.inverse())?;
    let Blocks { a, b, c: cc, d } = q.blocks();
    let g = q.g();
    let id = CMatrix::identity(g);
    Ok(a.max_abs_diff(&id)
        .max(d.max_abs_diff(&id))
        .max(cc.max_abs())
        .max(b.symmetry_defect()))
}

/// The family `{p_{delta gamma, tau}}` over the given integral `gamma`, skipping those with `tau` outside `U_{delta gamma}`.
pub fn sample_s(
    delta: &SymplecticMatrix,
    gammas: &[IntMatrix],
    tau: &SiegelPoint,
) -> Result<Vec<ParabolicElement>> {
    let mut out = Vec::new();
    for gamma in gammas {
        let dg = delta.compose(&gamma.to_symplectic()?)?;
        match p_delta(&dg, tau) {
            Ok(p) => out.push(p),
            Err(Error::OutsideDomain) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// `delta = (x 1, -1; 1, 0)`, whose leaf accumulates on points outside it for irrational `x`.
pub fn accumulating_delta(g: usize, x: f64) -> SymplecticMatrix {
    let id = CMatrix::identity(g);
    let m = block_join(&id.scale(c(x, 0.0)), &-&id, &id, &CMatrix::zeros(g, g)).expect("square");
    SymplecticMatrix::trusted(m)
}

/// `phi_g(tau + N) = phi_g(tau)` for integral symmetric `N`, witnessed by `psi(N)`.
pub fn translation_invariance_check(tau: &SiegelPoint, n: &CMatrix) -> Result<bool> {
    let shifted = psi(&(tau.tau() + n))?;
    let base = psi_trusted(tau.tau());
    if !same_coset_spz(&shifted, &base, INTEGER_TOL) {
        return Ok(false);
    }
    let q = shifted.compose(&base.inverse())?;
    let psi_n = psi(n)?;
    Ok(q.matrix().max_abs_diff(psi_n.matrix()) <= GROUP_TOL * scale_of(q.matrix()))
}

/// Necessary condition for `s` to lie in `Sp_2g(Z) U_g(C)`: the `A` and `C` blocks are integral.
/// A `true` answer does not certify membership.
pub fn closed_image_predicate(s: &SymplecticMatrix) -> bool {
    let Blocks { a, c: cc, .. } = s.blocks();
    IntMatrix::round_from(&a, INTEGER_TOL).is_some()
        && IntMatrix::round_from(&cc, INTEGER_TOL).is_some()
}

/// `|Pi(b_tau . p_{delta, tau}) - psi_delta(tau)|`.
pub fn frame_bridge_residual(spec: &LeafSpec, tau: &SiegelPoint) -> Result<f64> {
    let p = p_delta(&spec.delta, tau)?;
    let frame = canonical_frame(tau).act(&p)?;
    let pi = pi_matrix(&period_matrix(&frame)?)?;
    Ok(pi.matrix().max_abs_diff(psi_delta(spec, tau)?.matrix()))
}

/// For `g = 1`: the point of `B_1` carried by the frame `b_tau . p_{delta, tau}`.
///
/// The parabolic relating the acted frame to the canonical one is read off the
/// period matrices and then applied to `phi_1(tau)`.
pub fn twisted_frame_point(
    triple: &EisensteinTriple,
    delta: &SymplecticMatrix,
    tau: C64,
) -> Result<RamanujanPoint> {
    if delta.g() != 1 {
        return Err(Error::DimensionMismatch("the B_1 chart needs g = 1".into()));
    }
    let t = SiegelPoint::scalar(tau, 1)?;
    let canon = canonical_frame(&t);
    let acted = canon.act(&p_delta(delta, &t)?)?;
    let rel = &period_matrix(&canon)?.matrix().inverse()? * period_matrix(&acted)?.matrix();
    let (a, b) = (rel[(0, 0)], rel[(0, 1)]);
    if rel[(1, 0)].norm() > 1e-9 * scale_of(&rel) {
        return Err(Error::InvalidParabolic(format!(
            "relative frame change is not parabolic: {}",
            rel[(1, 0)]
        )));
    }
    Ok(triple.eval(tau, PHI1_ACCURACY)?.point.act_parabolic(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::twist_phi1_with;
    use crate::sample;
    use crate::sympgrp::is_symplectic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn psi_basics() {
        let mut r = rng(40);
        for g in 1..=3 {
            assert_eq!(
                psi(&CMatrix::zeros(g, g)).unwrap(),
                SymplecticMatrix::identity(g)
            );
            let z1 = sample::complex_symmetric(&mut r, g, 2.0);
            let z2 = sample::complex_symmetric(&mut r, g, 2.0);
            let prod = psi(&z1).unwrap().compose(&psi(&z2).unwrap()).unwrap();
            assert_eq!(prod.matrix(), psi(&(&z1 + &z2)).unwrap().matrix());
            assert_eq!(psi(&z1).unwrap().inverse(), psi(&-&z1).unwrap());
        }
        let asym = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(psi(&asym), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn bg_membership() {
        let mut r = rng(41);
        for g in 1..=3 {
            let tau = sample::siegel_point(&mut r, g);
            assert!(in_bg(&psi(tau.tau()).unwrap()));
            assert!(!in_bg(&psi(&tau.tau().real_part()).unwrap()));
            assert!(!in_bg(&SymplecticMatrix::j(g)));
        }
    }

    #[test]
    fn exact_flow_examples() {
        let mut r = rng(42);
        for g in 1..=3 {
            let tau = sample::siegel_point(&mut r, g);
            let m0 = FlowState::at(&tau);
            assert_eq!(exact_flow(&m0, &CMatrix::zeros(g, g)).unwrap(), m0);

            let n = sample::integer_symmetric(&mut r, g, 3).to_cmatrix();
            let moved = exact_flow(&m0, &n.scale(TWO_PI_I)).unwrap();
            assert!(
                moved
                    .matrix()
                    .max_abs_diff(psi(&(tau.tau() + &n)).unwrap().matrix())
                    <= 1e-14
            );

            let t1 = sample::complex_symmetric(&mut r, g, 2.0);
            let t2 = sample::complex_symmetric(&mut r, g, 2.0);
            let a = exact_flow(&exact_flow(&m0, &t1).unwrap(), &t2).unwrap();
            let b = exact_flow(&exact_flow(&m0, &t2).unwrap(), &t1).unwrap();
            assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-14);
        }
    }

    #[test]
    fn rk4_is_exact_for_the_square_zero_generator() {
        let m0 = FlowState::at(&SiegelPoint::scalar(c(0.0, 1.0), 2).unwrap());
        let out = rk4_flow(&m0, 1, 1, TWO_PI_I, 1).unwrap();
        let target =
            psi(&(&CMatrix::identity(2).scale(c(0.0, 1.0)) + &e_basis(1, 1, 2).unwrap())).unwrap();
        assert!(out.state.matrix().max_abs_diff(target.matrix()) <= 1e-12);

        let t = c(1.0, 0.0);
        let one = rk4_flow(&m0, 1, 2, t, 1).unwrap();
        let many = rk4_flow(&m0, 1, 2, t, 1000).unwrap();
        assert!(one.state.matrix().max_abs_diff(many.state.matrix()) <= 1e-11);
        assert!(many.max_defect <= 1e-10);
        let mut tm = CMatrix::zeros(2, 2);
        tm[(0, 1)] = t;
        let exact = exact_flow(&m0, &tm).unwrap();
        assert!(one.state.matrix().max_abs_diff(exact.matrix()) <= 1e-12);
        assert!(rk4_flow(&m0, 1, 1, t, 0).is_err());
    }

    #[test]
    fn generator_matches_finite_differences() {
        let mut r = rng(43);
        for g in 1..=3 {
            let tau = sample::siegel_point(&mut r, g);
            for gen in LieGenerator::all(g) {
                let (k, l) = gen.indices();
                assert!(generator_fd_residual(&tau, k, l, 1e-5).unwrap() <= 1e-9);
            }
        }
    }

    #[test]
    fn identity_and_unipotent_twists() {
        let mut r = rng(44);
        for g in 1..=3 {
            let tau = sample::siegel_point(&mut r, g);
            let plain = psi_delta(&LeafSpec::identity(g), &tau).unwrap();
            assert!(
                plain
                    .matrix()
                    .max_abs_diff(psi(tau.tau()).unwrap().matrix())
                    <= 1e-14
            );

            let w = sample::complex_symmetric(&mut r, g, 1.0);
            let spec = LeafSpec::new(psi(&w).unwrap());
            let twisted = psi_delta(&spec, &tau).unwrap();
            // psi_delta(tau) = psi(-W) psi(tau + W) = psi(tau)
            assert!(
                twisted
                    .matrix()
                    .max_abs_diff(psi(tau.tau()).unwrap().matrix())
                    <= 1e-13
            );
        }
    }

    #[test]
    fn p_delta_and_delta_from() {
        let mut r = rng(45);
        for g in 1..=3 {
            let tau = sample::siegel_point(&mut r, g);
            assert_eq!(
                p_delta(&SymplecticMatrix::identity(g), &tau).unwrap(),
                ParabolicElement::identity(g)
            );

            let delta = delta_from(&tau, &ParabolicElement::identity(g)).unwrap();
            let expected = block_join(
                &CMatrix::identity(g),
                &-tau.tau(),
                &CMatrix::zeros(g, g),
                &CMatrix::identity(g),
            )
            .unwrap();
            assert!(delta.matrix().max_abs_diff(&expected) <= 1e-15);

            for _ in 0..5 {
                let p = sample::parabolic(&mut r, g);
                let d = delta_from(&tau, &p).unwrap();
                assert!(is_symplectic(d.matrix(), 1e-10).unwrap());
                assert!(u_delta_contains(&d, &tau));
                assert!(delta_round_trip_residual(&tau, &p).unwrap() <= 1e-10);
            }
        }
    }

    #[test]
    fn g1_parabolic_of_sl2() {
        let tau = SiegelPoint::scalar(c(0.3, 1.2), 1).unwrap();
        let (a, b, cc) = (c(0.5, 0.2), c(-0.3, 0.7), c(1.1, -0.4));
        let d = (c(1.0, 0.0) + b * cc) / a;
        let delta = SymplecticMatrix::new(
            CMatrix::from_rows(&[vec![a, b], vec![cc, d]]).unwrap(),
            1e-12,
        )
        .unwrap();
        let p = p_delta(&delta, &tau).unwrap();
        let j = cc * tau.entry(0, 0) + d;
        assert!((p.a()[(0, 0)] - j.inv()).norm() <= 1e-14);
        assert!((p.b()[(0, 0)] + cc / TWO_PI_I).norm() <= 1e-14);
    }

    #[test]
    fn domain_errors() {
        let tau0 = c(0.2, 1.0);
        let delta = SymplecticMatrix::new(
            CMatrix::from_rows(&[vec![C64::default(), c(-1.0, 0.0)], vec![c(1.0, 0.0), -tau0]])
                .unwrap(),
            1e-12,
        )
        .unwrap();
        let tau = SiegelPoint::scalar(tau0, 1).unwrap();
        assert_eq!(
            psi_delta(&LeafSpec::new(delta.clone()), &tau),
            Err(Error::OutsideDomain)
        );
        assert_eq!(p_delta(&delta, &tau), Err(Error::OutsideDomain));
    }

    #[test]
    fn equivariance_identity_gamma() {
        let mut r = rng(46);
        let tau = sample::siegel_point(&mut r, 2);
        let delta = sample::leaf_delta(&mut r, 2);
        let e = equivariance_check(&delta, &IntMatrix::identity(4), &tau).unwrap();
        assert_eq!(e.residual, 0.0);
        assert!(e.same_coset);
    }

    #[test]
    fn leaves() {
        let mut r = rng(47);
        let grid: Vec<SiegelPoint> = (1..=5)
            .map(|k| SiegelPoint::scalar(c(0.0, k as f64), 2).unwrap())
            .collect();
        let samples = sample_leaf(&LeafSpec::identity(2), &grid).unwrap();
        assert_eq!(samples.len(), 5);
        assert!(samples.iter().all(|s| in_bg(&s.state)));

        let delta = sample::leaf_delta(&mut r, 2);
        let grid: Vec<SiegelPoint> = (0..8).map(|_| sample::siegel_point(&mut r, 2)).collect();
        let samples = sample_leaf(&LeafSpec::new(delta.clone()), &grid).unwrap();
        for s in &samples {
            assert!(in_bg(&s.state));
            for t in &samples {
                assert!(
                    same_leaf_defect(&delta, &s.state, &t.state).unwrap()
                        <= 1e-8 * scale_of(delta.matrix())
                );
            }
        }
    }

    #[test]
    fn accumulating_leaf_excludes_boundary() {
        let x = 2f64.sqrt();
        let delta = accumulating_delta(1, x);
        assert!(is_symplectic(delta.matrix(), 1e-14).unwrap());
        // C tau + D = tau never vanishes on H, so every grid point survives
        let grid: Vec<SiegelPoint> = (1..=4)
            .map(|k| SiegelPoint::scalar(c(0.1 * k as f64, 0.5 * k as f64), 1).unwrap())
            .collect();
        let samples = sample_leaf(&LeafSpec::new(delta.clone()), &grid).unwrap();
        assert_eq!(samples.len(), 4);
        let gammas = vec![IntMatrix::identity(2), IntMatrix::j(1)];
        let s = sample_s(&delta, &gammas, &grid[0]).unwrap();
        assert_eq!(s.len(), 2);
        let empty: Vec<SiegelPoint> = vec![];
        assert!(sample_leaf(&LeafSpec::new(delta), &empty).is_err());
    }

    #[test]
    fn translations() {
        let tau = SiegelPoint::scalar(c(0.1, 1.0), 2).unwrap();
        assert!(translation_invariance_check(&tau, &CMatrix::zeros(2, 2)).unwrap());
        assert!(translation_invariance_check(&tau, &e_basis(1, 2, 2).unwrap()).unwrap());
        let off = e_basis(1, 2, 2).unwrap().scale(c(0.5, 0.0));
        assert!(!translation_invariance_check(&tau, &off).unwrap());
    }

    #[test]
    fn closed_image() {
        let mut r = rng(48);
        let z = sample::complex_symmetric(&mut r, 2, 1.0);
        let gamma = sample::integer_symplectic(&mut r, 2, 4)
            .to_symplectic()
            .unwrap();
        assert!(closed_image_predicate(
            &gamma.compose(&psi(&z).unwrap()).unwrap()
        ));
        assert!(!closed_image_predicate(
            &psi(&z).unwrap().compose(&SymplecticMatrix::j(2)).unwrap()
        ));
        let half = ParabolicElement::new(
            CMatrix::identity(1).scale(c(0.5, 0.0)),
            CMatrix::zeros(1, 1),
            1e-12,
        )
        .unwrap();
        assert!(!closed_image_predicate(&half.embed()));
    }

    #[test]
    fn bridge_to_frames_and_twists() {
        let mut r = rng(49);
        let triple = EisensteinTriple::new(120).unwrap();
        for g in 1..=3 {
            let tau = sample::siegel_point(&mut r, g);
            let spec = LeafSpec::new(sample::leaf_delta(&mut r, g));
            assert!(
                frame_bridge_residual(&spec, &tau).unwrap()
                    <= 1e-9 * scale_of(spec.delta().matrix())
            );
        }
        for _ in 0..5 {
            let d = sample::sl2c(&mut r, 1.0);
            let tau = sample::upper_half_plane(&mut r, 1.0, 2.0);
            let delta = SymplecticMatrix::new(
                CMatrix::from_rows(&[vec![d[0], d[1]], vec![d[2], d[3]]]).unwrap(),
                1e-10,
            )
            .unwrap();
            let via_frame = twisted_frame_point(&triple, &delta, tau).unwrap();
            let direct = twist_phi1_with(&triple, d, tau).unwrap();
            assert!(via_frame.max_abs_diff(&direct) <= 1e-7);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(50))]

            #[test]
            fn rk4_matches_exact_flow(seed in any::<u64>(), g in 1usize..=3, steps in 1usize..20) {
                let mut r = rng(seed);
                let tau = sample::siegel_point(&mut r, g);
                let m0 = FlowState::new(psi(tau.tau()).unwrap().compose(&sample::leaf_delta(&mut r, g)).unwrap());
                let gens = LieGenerator::all(g);
                let (k, l) = gens[seed as usize % gens.len()].indices();
                let t = sample::complex_unit(&mut r, 3.0);
                let out = rk4_flow(&m0, k, l, t, steps).unwrap();
                let mut tm = CMatrix::zeros(g, g);
                tm[(k - 1, l - 1)] = t;
                let exact = exact_flow(&m0, &tm).unwrap();
                let scale = scale_of(exact.matrix()).sqrt() * (1.0 + t.norm());
                prop_assert!(out.state.matrix().max_abs_diff(exact.matrix()) <= 1e-12 * scale);
                prop_assert!(out.max_defect <= 1e-10);
            }

            #[test]
            fn exact_flow_is_an_action(seed in any::<u64>(), g in 1usize..=3) {
                let mut r = rng(seed);
                let m0 = FlowState::at(&sample::siegel_point(&mut r, g));
                let t1 = sample::complex_symmetric(&mut r, g, 3.0);
                let t2 = sample::complex_symmetric(&mut r, g, 3.0);
                let a = exact_flow(&exact_flow(&m0, &t1).unwrap(), &t2).unwrap();
                let b = exact_flow(&m0, &(&t1 + &t2)).unwrap();
                prop_assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-13 * scale_of(b.matrix()));
            }

            #[test]
            fn psi_delta_factorisation(seed in any::<u64>(), g in 1usize..=3) {
                let mut r = rng(seed);
                let tau = sample::siegel_point(&mut r, g);
                let spec = LeafSpec::new(sample::leaf_delta(&mut r, g));
                prop_assume!(u_delta_contains(spec.delta(), &tau));
                let scale = scale_of(spec.delta().matrix());
                prop_assert!(factorisation_residual(&spec, &tau).unwrap() <= 1e-10 * scale);
                let s = psi_delta(&spec, &tau).unwrap();
                prop_assert!(s.defect() <= 1e-10 * scale_of(s.matrix()));
                prop_assert!(in_bg(&s));
            }

            #[test]
            fn equivariance(seed in any::<u64>(), g in 1usize..=3) {
                let mut r = rng(seed);
                let tau = sample::siegel_point(&mut r, g);
                let delta = sample::leaf_delta(&mut r, g);
                let gamma = sample::integer_symplectic(&mut r, g, 3);
                let out = equivariance_check(&delta, &gamma, &tau);
                prop_assume!(out.is_ok());
                let out = out.unwrap();
                prop_assert!(out.residual <= 1e-9 * scale_of(delta.matrix()) * (gamma.max_abs() as f64).max(1.0));
                prop_assert!(out.same_coset);
            }
        }
    }
}
