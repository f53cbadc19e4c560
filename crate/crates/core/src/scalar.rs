//! Scalar rings the radial formulas are written against.
//!
//! Every Lagrangian in the crate is generic over [`Scalar`]. Plain `f64`
//! evaluates a single map; [`Perturbation2`] evaluates a one-parameter family
//! `s -> α_s` and carries the value together with the first and second
//! derivatives in `s` at `s = 0`, so a single quadrature pass yields the
//! energy, its first variation and its second variation.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::Serialize;

pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    /// A value that does not depend on the variation parameter.
    fn constant(c: f64) -> Self;

    /// A value `value + s * tangent`, affine in the variation parameter.
    /// Rings without an `s` slot drop the tangent.
    fn seeded(value: f64, tangent: f64) -> Self;

    /// Value at `s = 0`.
    fn value(self) -> f64;

    fn scale(self, k: f64) -> Self;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn sqrt(self) -> Self;
    fn powf(self, p: f64) -> Self;

    /// Largest absolute component; used by convergence tests.
    fn max_abs(self) -> f64;

    /// Componentwise absolute value.
    fn abs_parts(self) -> Self;

    fn zero() -> Self {
        Self::constant(0.0)
    }

    fn one() -> Self {
        Self::constant(1.0)
    }

    fn square(self) -> Self {
        self * self
    }

    fn powi(self, k: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self;
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }

    fn seeded(value: f64, _tangent: f64) -> Self {
        value
    }

    fn value(self) -> f64 {
        self
    }

    fn scale(self, k: f64) -> Self {
        self * k
    }

    fn sin(self) -> Self {
        f64::sin(self)
    }

    fn cos(self) -> Self {
        f64::cos(self)
    }

    fn sinh(self) -> Self {
        f64::sinh(self)
    }

    fn cosh(self) -> Self {
        f64::cosh(self)
    }

    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }

    fn max_abs(self) -> f64 {
        self.abs()
    }

    fn abs_parts(self) -> Self {
        self.abs()
    }
}

/// Second-order truncated expansion in the variation parameter `s`.
///
/// `v0`, `v1`, `v2` are the value and the raw first and second `s`-derivatives
/// at `s = 0`. Products follow the Leibniz rule truncated at order two.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Perturbation2 {
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
}

impl Perturbation2 {
    pub const fn new(v0: f64, v1: f64, v2: f64) -> Self {
        Self { v0, v1, v2 }
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `v0` (chain rule through second order).
    #[inline]
    fn chain(self, g: f64, dg: f64, d2g: f64) -> Self {
        Self { v0: g, v1: dg * self.v1, v2: d2g * self.v1 * self.v1 + dg * self.v2 }
    }
}

impl Add for Perturbation2 {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.v0 + rhs.v0, self.v1 + rhs.v1, self.v2 + rhs.v2)
    }
}

impl AddAssign for Perturbation2 {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for Perturbation2 {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.v0 - rhs.v0, self.v1 - rhs.v1, self.v2 - rhs.v2)
    }
}

impl Neg for Perturbation2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.v0, -self.v1, -self.v2)
    }
}

impl Mul for Perturbation2 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.v0 * rhs.v0,
            self.v1 * rhs.v0 + self.v0 * rhs.v1,
            self.v2 * rhs.v0 + 2.0 * self.v1 * rhs.v1 + self.v0 * rhs.v2,
        )
    }
}

impl Div for Perturbation2 {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q0 = self.v0 / rhs.v0;
        let q1 = (self.v1 - q0 * rhs.v1) / rhs.v0;
        let q2 = (self.v2 - 2.0 * q1 * rhs.v1 - q0 * rhs.v2) / rhs.v0;
        Self::new(q0, q1, q2)
    }
}

impl Scalar for Perturbation2 {
    fn constant(c: f64) -> Self {
        Self::new(c, 0.0, 0.0)
    }

    fn seeded(value: f64, tangent: f64) -> Self {
        Self::new(value, tangent, 0.0)
    }

    fn value(self) -> f64 {
        self.v0
    }

    fn scale(self, k: f64) -> Self {
        Self::new(self.v0 * k, self.v1 * k, self.v2 * k)
    }

    fn sin(self) -> Self {
        let (s, c) = self.v0.sin_cos();
        self.chain(s, c, -s)
    }

    fn cos(self) -> Self {
        let (s, c) = self.v0.sin_cos();
        self.chain(c, -s, -c)
    }

    fn sinh(self) -> Self {
        let (s, c) = (self.v0.sinh(), self.v0.cosh());
        self.chain(s, c, s)
    }

    fn cosh(self) -> Self {
        let (s, c) = (self.v0.sinh(), self.v0.cosh());
        self.chain(c, s, c)
    }

    fn sqrt(self) -> Self {
        let r = self.v0.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.v0))
    }

    fn powf(self, p: f64) -> Self {
        let x = self.v0;
        self.chain(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0))
    }

    fn max_abs(self) -> f64 {
        self.v0.abs().max(self.v1.abs()).max(self.v2.abs())
    }

    fn abs_parts(self) -> Self {
        Self::new(self.v0.abs(), self.v1.abs(), self.v2.abs())
    }
}
