//! Seeded random generators for matrices, vectors and group elements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{AlgebraElement, GroupElement, ProductGroupSpec};
use crate::linalg::{self, cr};
use crate::{CMat, CVec, C64};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian-ish entry (Box–Muller).
pub fn gauss(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn complex(rng: &mut impl Rng) -> C64 {
    C64::new(gauss(rng), gauss(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn matrix(rng: &mut impl Rng, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| complex(rng))
}

pub fn vector(rng: &mut impl Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| complex(rng))
}

pub fn hermitian(rng: &mut impl Rng, n: usize) -> CMat {
    linalg::herm_part(&matrix(rng, n, n))
}

pub fn skew(rng: &mut impl Rng, n: usize) -> CMat {
    linalg::skew_part(&matrix(rng, n, n))
}

/// Haar-like random unitary via QR of a Gaussian matrix.
pub fn unitary(rng: &mut impl Rng, n: usize) -> CMat {
    let m = matrix(rng, n, n);
    let qr = m.qr();
    let q = qr.q();
    let r = qr.r();
    let phases = CMat::from_fn(n, n, |i, j| {
        if i == j {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / cr(d.norm())
            } else {
                cr(1.0)
            }
        } else {
            cr(0.0)
        }
    });
    q * phases
}

pub fn compact_element(rng: &mut impl Rng, spec: &ProductGroupSpec) -> AlgebraElement {
    AlgebraElement::compact_unchecked(spec.dims().iter().map(|&n| skew(rng, n)).collect())
}

pub fn unitary_element(rng: &mut impl Rng, spec: &ProductGroupSpec) -> GroupElement {
    GroupElement::unitary_unchecked(spec.dims().iter().map(|&n| unitary(rng, n)).collect())
}

/// Random invertible element of the complexified group, well conditioned.
pub fn complex_element(rng: &mut impl Rng, spec: &ProductGroupSpec, scale: f64) -> GroupElement {
    GroupElement::complexified(
        spec.dims()
            .iter()
            .map(|&n| linalg::expm(&(matrix(rng, n, n) * cr(scale))))
            .collect(),
    )
}
