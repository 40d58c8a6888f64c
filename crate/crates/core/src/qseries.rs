//! Exact q-expansions of the Eisenstein series and the Ramanujan vector field.
//!
//! Coefficients are arbitrary-precision rationals, so the Ramanujan relations
//! can be checked as exact identities. Floating point enters only in
//! [`eval_series`], which also certifies a bound on the discarded tail.

use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};
use std::sync::{Mutex, OnceLock};

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{c, C64, TWO_PI_I};

/// Accuracy requested by [`phi1`].
pub const PHI1_ACCURACY: f64 = 1e-12;

/// Smallest `Im tau` accepted by [`eval_series`]; there `|q| <= e^-pi`.
pub const MIN_IMAG_TAU: f64 = 0.5;

/// A truncated power series `a_0 + a_1 q + ... + a_N q^N` with exact coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSeries {
    coeffs: Vec<BigRational>,
}

impl QSeries {
    pub fn new(coeffs: Vec<BigRational>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput(
                "a q-series needs at least the constant term".into(),
            ));
        }
        Ok(QSeries { coeffs })
    }

    pub fn from_integers(coeffs: &[i64]) -> Result<Self> {
        QSeries::new(
            coeffs
                .iter()
                .map(|&a| BigRational::from_integer(a.into()))
                .collect(),
        )
    }

    pub fn zero(order: usize) -> Self {
        QSeries {
            coeffs: vec![BigRational::zero(); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        QSeries::monomial(0, order)
    }

    /// `q^n` truncated at `order` (zero when `n > order`).
    pub fn monomial(n: usize, order: usize) -> Self {
        let mut s = QSeries::zero(order);
        if n <= order {
            s.coeffs[n] = BigRational::one();
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &BigRational {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn set_coeff(&mut self, n: usize, value: BigRational) -> Result<()> {
        let order = self.order();
        let slot = self.coeffs.get_mut(n).ok_or_else(|| {
            Error::IndexOutOfRange(format!("coefficient {n} beyond order {order}"))
        })?;
        *slot = value;
        Ok(())
    }

    pub fn truncate(&self, order: usize) -> QSeries {
        QSeries {
            coeffs: self.coeffs[..=order.min(self.order())].to_vec(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Index of the first nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|a| !a.is_zero())
    }

    pub fn scale(&self, s: &BigRational) -> QSeries {
        QSeries {
            coeffs: self.coeffs.iter().map(|a| a * s).collect(),
        }
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|a| a.is_integer())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|a| a.to_f64().unwrap_or(f64::INFINITY))
            .collect()
    }

    fn zip(
        &self,
        other: &QSeries,
        f: impl Fn(&BigRational, &BigRational) -> BigRational,
    ) -> QSeries {
        let n = self.order().min(other.order());
        QSeries {
            coeffs: (0..=n)
                .map(|i| f(&self.coeffs[i], &other.coeffs[i]))
                .collect(),
        }
    }

    fn product(&self, other: &QSeries) -> QSeries {
        let n = self.order().min(other.order());
        let integral = self.coeffs[..=n]
            .iter()
            .chain(&other.coeffs[..=n])
            .all(|a| a.is_integer());
        if integral {
            // Integer convolution skips the gcd normalisation of every rational product.
            let a: Vec<&BigInt> = self.coeffs[..=n].iter().map(|x| x.numer()).collect();
            let b: Vec<&BigInt> = other.coeffs[..=n].iter().map(|x| x.numer()).collect();
            let coeffs = (0..=n)
                .map(|k| {
                    let s: BigInt = (0..=k)
                        .filter(|&i| !a[i].is_zero())
                        .map(|i| a[i] * b[k - i])
                        .sum();
                    BigRational::from_integer(s)
                })
                .collect();
            return QSeries { coeffs };
        }
        let coeffs = (0..=n)
            .map(|k| {
                (0..=k)
                    .map(|i| &self.coeffs[i] * &other.coeffs[k - i])
                    .sum()
            })
            .collect();
        QSeries { coeffs }
    }
}

impl Add for &QSeries {
    type Output = QSeries;
    fn add(self, rhs: &QSeries) -> QSeries {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &QSeries {
    type Output = QSeries;
    fn sub(self, rhs: &QSeries) -> QSeries {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul for &QSeries {
    type Output = QSeries;
    fn mul(self, rhs: &QSeries) -> QSeries {
        self.product(rhs)
    }
}

fn divisor_cache() -> &'static Mutex<HashMap<(u32, u64), u128>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u64), u128>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `sigma_k(n)`, the sum of the `k`-th powers of the divisors of `n`.
pub fn divisor_sum(k: u32, n: u64) -> u128 {
    if n == 0 {
        return 0;
    }
    if let Some(&v) = divisor_cache()
        .lock()
        .expect("divisor cache poisoned")
        .get(&(k, n))
    {
        return v;
    }
    let mut s: u128 = 0;
    let mut d = 1u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            s += (d as u128).pow(k);
            let e = n / d;
            if e != d {
                s += (e as u128).pow(k);
            }
        }
        d += 1;
    }
    divisor_cache()
        .lock()
        .expect("divisor cache poisoned")
        .insert((k, n), s);
    s
}

fn eisenstein_constant(weight: u32) -> Result<i64> {
    match weight {
        2 => Ok(-24),
        4 => Ok(240),
        6 => Ok(-504),
        w => Err(Error::UnsupportedWeight(w)),
    }
}

/// `E_w = 1 + c_w sum sigma_{w-1}(n) q^n` for `w` in `{2, 4, 6}`, through `q^order`.
pub fn eisenstein_series(weight: u32, order: usize) -> Result<QSeries> {
    let ck = BigInt::from(eisenstein_constant(weight)?);
    let coeffs = (0..=order)
        .map(|n| {
            if n == 0 {
                BigRational::one()
            } else {
                BigRational::from_integer(&ck * BigInt::from(divisor_sum(weight - 1, n as u64)))
            }
        })
        .collect();
    Ok(QSeries { coeffs })
}

/// `theta = q d/dq`.
pub fn theta_op(f: &QSeries) -> QSeries {
    QSeries {
        coeffs: f
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, a)| a * BigRational::from_integer(n.into()))
            .collect(),
    }
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// `12 theta E2 - (E2^2 - E4)`, `3 theta E4 - (E2 E4 - E6)`, `2 theta E6 - (E2 E6 - E4^2)`.
pub fn ramanujan_residuals_of(e2: &QSeries, e4: &QSeries, e6: &QSeries) -> [QSeries; 3] {
    let r2 = &theta_op(e2).scale(&int(12)) - &(&(e2 * e2) - e4);
    let r4 = &theta_op(e4).scale(&int(3)) - &(&(e2 * e4) - e6);
    let r6 = &theta_op(e6).scale(&int(2)) - &(&(e2 * e6) - &(e4 * e4));
    [r2, r4, r6]
}

pub fn ramanujan_residuals(order: usize) -> Result<[QSeries; 3]> {
    if order == 0 {
        return Err(Error::InvalidInput(
            "residual order must be at least 1".into(),
        ));
    }
    Ok(ramanujan_residuals_of(
        &eisenstein_series(2, order)?,
        &eisenstein_series(4, order)?,
        &eisenstein_series(6, order)?,
    ))
}

/// `Delta = (E4^3 - E6^2) / 1728`.
pub fn delta_series(order: usize) -> QSeries {
    let e4 = eisenstein_series(4, order).expect("weight 4");
    let e6 = eisenstein_series(6, order).expect("weight 6");
    (&(&(&e4 * &e4) * &e4) - &(&e6 * &e6)).scale(&BigRational::new(1.into(), 1728.into()))
}

/// A point `(e2, e4, e6)` of the chart `B_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RamanujanPoint {
    pub e2: C64,
    pub e4: C64,
    pub e6: C64,
}

impl RamanujanPoint {
    pub fn new(e2: C64, e4: C64, e6: C64) -> Self {
        RamanujanPoint { e2, e4, e6 }
    }

    /// `(e4^3 - e6^2) / 1728`.
    pub fn discriminant(&self) -> C64 {
        (self.e4 * self.e4 * self.e4 - self.e6 * self.e6) / 1728.0
    }

    /// `e4^3 != e6^2`, relative to the size of the terms.
    pub fn chart_valid(&self) -> bool {
        let scale = (self.e4.norm().powi(3)).max(self.e6.norm_sqr()).max(1.0);
        (self.e4 * self.e4 * self.e4 - self.e6 * self.e6).norm() > 1e-12 * scale
    }

    pub fn max_abs_diff(&self, other: &RamanujanPoint) -> f64 {
        [
            (self.e2 - other.e2).norm(),
            (self.e4 - other.e4).norm(),
            (self.e6 - other.e6).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn components(&self) -> [C64; 3] {
        [self.e2, self.e4, self.e6]
    }

    /// Right action of the parabolic `(a b; 0 1/a)` of `P_1` on `B_1`.
    pub fn act_parabolic(&self, a: C64, b: C64) -> RamanujanPoint {
        let a2 = a * a;
        RamanujanPoint {
            e2: (self.e2 - 12.0 * a * b) / a2,
            e4: self.e4 / (a2 * a2),
            e6: self.e6 / (a2 * a2 * a2),
        }
    }

    /// Coordinates `(E2, theta E2 / 2, theta^2 E2 / 6)` obtained through the Ramanujan relations.
    pub fn to_b_coordinates(&self) -> [C64; 3] {
        let th2 = (self.e2 * self.e2 - self.e4) / 12.0;
        let th4 = (self.e2 * self.e4 - self.e6) / 3.0;
        let thth2 = (2.0 * self.e2 * th2 - th4) / 12.0;
        [self.e2, th2 / 2.0, thth2 / 6.0]
    }

    pub fn from_b_coordinates(b: [C64; 3]) -> RamanujanPoint {
        let [e2, b2, b3] = b;
        let th2 = 2.0 * b2;
        let e4 = e2 * e2 - 12.0 * th2;
        let th4 = 2.0 * e2 * th2 - 72.0 * b3;
        let e6 = e2 * e4 - 3.0 * th4;
        RamanujanPoint { e2, e4, e6 }
    }
}

/// The Ramanujan vector field `((e2^2 - e4)/12, (e2 e4 - e6)/3, (e2 e6 - e4^2)/2)`.
pub fn v_field(pt: &RamanujanPoint) -> RamanujanPoint {
    RamanujanPoint {
        e2: (pt.e2 * pt.e2 - pt.e4) / 12.0,
        e4: (pt.e2 * pt.e4 - pt.e6) / 3.0,
        e6: (pt.e2 * pt.e6 - pt.e4 * pt.e4) / 2.0,
    }
}

/// Coefficient growth `|a_n| <= C max(n, 1)^p` assumed beyond the truncation order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailModel {
    pub c: f64,
    pub p: u32,
}

impl TailModel {
    /// Model for `E_w`: `C = 1000 |c_w|`, exponent `w`, a crude but safe cover of `sigma_{w-1}(n)`.
    pub fn eisenstein(weight: u32) -> Result<Self> {
        Ok(TailModel {
            c: 1000.0 * eisenstein_constant(weight)?.abs() as f64,
            p: weight,
        })
    }

    /// Each `theta` multiplies `a_n` by `n`.
    pub fn theta(self) -> Self {
        TailModel {
            c: self.c,
            p: self.p + 1,
        }
    }

    pub fn sum(self, other: TailModel) -> Self {
        TailModel {
            c: self.c + other.c,
            p: self.p.max(other.p),
        }
    }

    /// `|sum_{i+j=n} a_i b_j| <= (n+1) C1 C2 n^(p1+p2) <= 2 C1 C2 n^(p1+p2+1)` for `n >= 1`.
    pub fn product(self, other: TailModel) -> Self {
        TailModel {
            c: 2.0 * self.c * other.c,
            p: self.p + other.p + 1,
        }
    }

    /// Bound on `sum_{n > order} C n^p r^n`, or `None` when the geometric majorant diverges.
    pub fn bound(&self, order: usize, r: f64) -> Option<f64> {
        let n1 = (order + 1) as f64;
        let ratio = r * ((n1 + 1.0) / n1).powi(self.p as i32);
        if ratio >= 1.0 {
            return None;
        }
        let log_first = self.c.ln() + self.p as f64 * n1.ln() + n1 * r.ln();
        Some(log_first.exp() / (1.0 - ratio))
    }
}

/// A value with a certified bound on the truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certified {
    pub value: C64,
    pub tail_bound: f64,
}

fn nome(tau: C64) -> C64 {
    (TWO_PI_I * tau).exp()
}

/// Evaluates `f` at `q = e^{2 pi i tau}`; fails unless the tail bound is below `accuracy`.
pub fn eval_series(f: &QSeries, tau: C64, tail: &TailModel, accuracy: f64) -> Result<Certified> {
    if tau.im.is_nan() || tau.im < MIN_IMAG_TAU || !tau.re.is_finite() {
        return Err(Error::InvalidInput(format!(
            "Im tau = {} is below {MIN_IMAG_TAU}",
            tau.im
        )));
    }
    let q = nome(tau);
    let bound = tail.bound(f.order(), q.norm()).unwrap_or(f64::INFINITY);
    if bound.is_nan() || bound > accuracy {
        return Err(Error::TailBound { bound, accuracy });
    }
    let value = f
        .to_f64()
        .iter()
        .rev()
        .fold(C64::default(), |acc, &a| acc * q + a);
    Ok(Certified {
        value,
        tail_bound: bound,
    })
}

/// Evaluates a polynomial in `q` with no tail.
pub fn eval_polynomial(f: &QSeries, tau: C64) -> C64 {
    let q = nome(tau);
    f.to_f64()
        .iter()
        .rev()
        .fold(C64::default(), |acc, &a| acc * q + a)
}

/// `phi_1(tau)` together with the tail bound of each component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Phi1 {
    pub point: RamanujanPoint,
    pub tail_bounds: [f64; 3],
}

/// Cached f64 coefficients of `E2, E4, E6`, reused by repeated evaluations.
#[derive(Debug, Clone)]
pub struct EisensteinTriple {
    series: [QSeries; 3],
    models: [TailModel; 3],
}

impl EisensteinTriple {
    pub fn new(order: usize) -> Result<Self> {
        Ok(EisensteinTriple {
            series: [
                eisenstein_series(2, order)?,
                eisenstein_series(4, order)?,
                eisenstein_series(6, order)?,
            ],
            models: [
                TailModel::eisenstein(2)?,
                TailModel::eisenstein(4)?,
                TailModel::eisenstein(6)?,
            ],
        })
    }

    pub fn order(&self) -> usize {
        self.series[0].order()
    }

    pub fn eval(&self, tau: C64, accuracy: f64) -> Result<Phi1> {
        let mut vals = [C64::default(); 3];
        let mut bounds = [0.0; 3];
        for i in 0..3 {
            let r = eval_series(&self.series[i], tau, &self.models[i], accuracy)?;
            vals[i] = r.value;
            bounds[i] = r.tail_bound;
        }
        Ok(Phi1 {
            point: RamanujanPoint::new(vals[0], vals[1], vals[2]),
            tail_bounds: bounds,
        })
    }
}

/// `phi_1(tau) = (E2(tau), E4(tau), E6(tau))` from `order + 1` terms.
pub fn phi1(tau: C64, order: usize) -> Result<Phi1> {
    EisensteinTriple::new(order)?.eval(tau, PHI1_ACCURACY)
}

/// `j(delta, tau) = c tau + d` for a `2 x 2` matrix given by its entries.
fn twist_factor(delta: [C64; 4], tau: C64) -> Result<C64> {
    let [_, _, cc, d] = delta;
    let j = cc * tau + d;
    if j.norm() <= 1e-12 * (cc.norm() * tau.norm()).max(d.norm()).max(1.0) {
        return Err(Error::OutsideDomain);
    }
    Ok(j)
}

/// The twisted solution `phi_delta` for `delta = (a b; c d)` in `SL_2(C)`, given row-major.
pub fn twist_phi1_with(
    triple: &EisensteinTriple,
    delta: [C64; 4],
    tau: C64,
) -> Result<RamanujanPoint> {
    let [a, b, cc, d] = delta;
    let det = a * d - b * cc;
    if (det - c(1.0, 0.0)).norm() > 1e-10 * (1.0 + (a * d).norm() + (b * cc).norm()) {
        return Err(Error::NotSymplectic((det - c(1.0, 0.0)).norm()));
    }
    let j = twist_factor(delta, tau)?;
    let phi = triple.eval(tau, PHI1_ACCURACY)?.point;
    let j2 = j * j;
    Ok(RamanujanPoint {
        e2: j2 * phi.e2 + 12.0 * cc / TWO_PI_I * j,
        e4: j2 * j2 * phi.e4,
        e6: j2 * j2 * j2 * phi.e6,
    })
}

pub fn twist_phi1(delta: [C64; 4], tau: C64, order: usize) -> Result<RamanujanPoint> {
    twist_phi1_with(&EisensteinTriple::new(order)?, delta, tau)
}

/// Residual of `(1/2 pi i) d phi_delta / d tau = (c tau + d)^-2 v(phi_delta)` by central differences.
pub fn twisted_ode_residual(
    triple: &EisensteinTriple,
    delta: [C64; 4],
    tau: C64,
    h: f64,
) -> Result<f64> {
    let plus = twist_phi1_with(triple, delta, tau + h)?;
    let minus = twist_phi1_with(triple, delta, tau - h)?;
    let here = twist_phi1_with(triple, delta, tau)?;
    let j = twist_factor(delta, tau)?;
    let v = v_field(&here);
    let scale = (TWO_PI_I * 2.0 * h).inv();
    let lhs = plus
        .components()
        .iter()
        .zip(minus.components())
        .map(|(p, m)| (p - m) * scale)
        .collect::<Vec<_>>();
    let rhs = v.components().map(|x| x / (j * j));
    Ok(lhs
        .iter()
        .zip(rhs)
        .map(|(l, r)| (l - r).norm())
        .fold(0.0, f64::max))
}

/// Residual of `theta phi_1 = v(phi_1)` by central differences.
pub fn phi1_ode_residual(triple: &EisensteinTriple, tau: C64, h: f64) -> Result<f64> {
    twisted_ode_residual(
        triple,
        [c(1.0, 0.0), C64::default(), C64::default(), c(1.0, 0.0)],
        tau,
        h,
    )
}

/// `(E2, theta E2 / 2, theta^2 E2 / 6)` evaluated from the differentiated series themselves.
pub fn theta_e2_b_coordinates(tau: C64, order: usize) -> Result<[C64; 3]> {
    let e2 = eisenstein_series(2, order)?;
    let t1 = theta_op(&e2);
    let t2 = theta_op(&t1);
    let m = TailModel::eisenstein(2)?;
    let v0 = eval_series(&e2, tau, &m, PHI1_ACCURACY)?.value;
    let v1 = eval_series(&t1, tau, &m.theta(), PHI1_ACCURACY)?.value;
    let v2 = eval_series(&t2, tau, &m.theta().theta(), PHI1_ACCURACY)?.value;
    Ok([v0, v1 / 2.0, v2 / 6.0])
}
