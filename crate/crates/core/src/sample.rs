//! Seeded random instances for tests, benchmarks and the verification suites.
//!
//! Every generator takes the caller's RNG so that a run is reproducible from
//! one seed. Entries are kept modest so conditioning stays under control.

use rand::Rng;

use crate::numerics::{block_join, c, CMatrix, C64};
use crate::siegel::SiegelPoint;
use crate::sympgrp::{IntMatrix, ParabolicElement, SymplecticMatrix};

/// Largest entry accepted in a sampled group element before resampling.
pub const MAX_WORD_ENTRY: f64 = 40.0;

fn uniform<R: Rng + ?Sized>(rng: &mut R, range: f64) -> f64 {
    rng.gen_range(-range..=range)
}

/// A complex number with real and imaginary parts in `[-range, range]`.
pub fn complex_unit<R: Rng + ?Sized>(rng: &mut R, range: f64) -> C64 {
    c(uniform(rng, range), uniform(rng, range))
}

pub fn real_symmetric<R: Rng + ?Sized>(rng: &mut R, g: usize, range: f64) -> CMatrix {
    let mut m = CMatrix::zeros(g, g);
    for i in 0..g {
        for j in i..g {
            let x = c(uniform(rng, range), 0.0);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}

pub fn complex_symmetric<R: Rng + ?Sized>(rng: &mut R, g: usize, range: f64) -> CMatrix {
    let mut m = CMatrix::zeros(g, g);
    for i in 0..g {
        for j in i..g {
            let x = complex_unit(rng, range);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}

/// `tau = X + iY` with `X` in `[-1, 1]` and `Y = L L^T + (1/2) 1`.
pub fn siegel_point<R: Rng + ?Sized>(rng: &mut R, g: usize) -> SiegelPoint {
    let x = real_symmetric(rng, g, 1.0);
    let l = CMatrix::from_fn(g, g, |_, _| c(uniform(rng, 0.6), 0.0));
    let y = &(&l * &l.transpose()) + &CMatrix::identity(g).scale(c(0.5, 0.0));
    let tau = &x + &y.scale(c(0.0, 1.0));
    SiegelPoint::new(tau).expect("sampled point lies in H_g")
}

/// A point of the upper half plane with real part in `[-1/2, 1/2]`.
pub fn upper_half_plane<R: Rng + ?Sized>(rng: &mut R, im_min: f64, im_max: f64) -> C64 {
    c(uniform(rng, 0.5), rng.gen_range(im_min..=im_max))
}

fn invertible<R: Rng + ?Sized>(rng: &mut R, g: usize, complex: bool) -> CMatrix {
    loop {
        let a = CMatrix::from_fn(g, g, |i, j| {
            let base = if i == j { 1.0 } else { 0.0 };
            let im = if complex { uniform(rng, 0.4) } else { 0.0 };
            c(base + uniform(rng, 0.6), im)
        });
        if a.det().map(|d| d.norm() > 0.2).unwrap_or(false) {
            return a;
        }
    }
}

/// `(A, B)` with `A` invertible and `B = S A^-T` for symmetric `S`.
pub fn parabolic<R: Rng + ?Sized>(rng: &mut R, g: usize) -> ParabolicElement {
    parabolic_of(rng, g, true)
}

fn parabolic_of<R: Rng + ?Sized>(rng: &mut R, g: usize, complex: bool) -> ParabolicElement {
    let a = invertible(rng, g, complex);
    let s = if complex {
        complex_symmetric(rng, g, 1.0)
    } else {
        real_symmetric(rng, g, 1.0)
    };
    let b = &s * &a.inverse().expect("invertible").transpose();
    ParabolicElement::new(a, b, 1e-9).expect("sampled parabolic is valid")
}

fn unipotent(z: &CMatrix) -> SymplecticMatrix {
    let g = z.rows();
    let m = block_join(
        &CMatrix::identity(g),
        z,
        &CMatrix::zeros(g, g),
        &CMatrix::identity(g),
    )
    .expect("square");
    SymplecticMatrix::new(m, 1e-9).expect("psi(Z) is symplectic")
}

/// A product of up to `max_len` factors drawn from `psi(Z)`, `J` and embedded parabolics.
pub fn symplectic_word<R: Rng + ?Sized>(
    rng: &mut R,
    g: usize,
    max_len: usize,
    complex: bool,
) -> SymplecticMatrix {
    loop {
        let len = rng.gen_range(1..=max_len.max(1));
        let mut m = SymplecticMatrix::identity(g);
        for _ in 0..len {
            let factor = match rng.gen_range(0..3) {
                0 => unipotent(&if complex {
                    complex_symmetric(rng, g, 1.0)
                } else {
                    real_symmetric(rng, g, 1.0)
                }),
                1 => SymplecticMatrix::j(g),
                _ => parabolic_of(rng, g, complex).embed(),
            };
            m = m.compose(&factor).expect("same size");
        }
        if m.matrix().max_abs() <= MAX_WORD_ENTRY {
            return m;
        }
    }
}

pub fn real_symplectic<R: Rng + ?Sized>(rng: &mut R, g: usize) -> SymplecticMatrix {
    symplectic_word(rng, g, 4, false)
}

/// A twisting element `(A, 0; C, A^-T) psi(Z)` whose `C` block is small.
///
/// Such elements keep `C tau + D` well away from singular for typical `tau`.
pub fn leaf_delta<R: Rng + ?Sized>(rng: &mut R, g: usize) -> SymplecticMatrix {
    let a = invertible(rng, g, true);
    let a_inv_t = a.inverse().expect("invertible").transpose();
    let s = complex_symmetric(rng, g, 0.25);
    let lower = block_join(&a, &CMatrix::zeros(g, g), &(&a_inv_t * &s), &a_inv_t).expect("square");
    let lower = SymplecticMatrix::new(lower, 1e-9).expect("lower parabolic is symplectic");
    lower
        .compose(&unipotent(&complex_symmetric(rng, g, 0.5)))
        .expect("same size")
}

/// `(a, b, c, d)` in `SL_2(C)` with `a` bounded away from zero.
pub fn sl2c<R: Rng + ?Sized>(rng: &mut R, range: f64) -> [C64; 4] {
    loop {
        let a = complex_unit(rng, range);
        let b = complex_unit(rng, range);
        let cc = complex_unit(rng, range);
        if a.norm() < 0.3 {
            continue;
        }
        let d = (c(1.0, 0.0) + b * cc) / a;
        if d.norm() <= 4.0 * range.max(1.0) {
            return [a, b, cc, d];
        }
    }
}

/// Integral symmetric matrix with entries in `[-bound, bound]`.
pub fn integer_symmetric<R: Rng + ?Sized>(rng: &mut R, g: usize, bound: i64) -> IntMatrix {
    let mut data = vec![0i64; g * g];
    for i in 0..g {
        for j in i..g {
            let x = rng.gen_range(-bound..=bound);
            data[i * g + j] = x;
            data[j * g + i] = x;
        }
    }
    IntMatrix::from_vec(g, g, data).expect("shape")
}

/// A word of length `len` in `J` and integral translations.
pub fn integer_symplectic<R: Rng + ?Sized>(rng: &mut R, g: usize, len: usize) -> IntMatrix {
    let mut m = IntMatrix::identity(2 * g);
    for _ in 0..len {
        let factor = if rng.gen_bool(0.4) {
            IntMatrix::j(g)
        } else {
            IntMatrix::translation(&integer_symmetric(rng, g, 1)).expect("square")
        };
        m = m.mul(&factor).expect("no overflow for short words");
    }
    m
}
