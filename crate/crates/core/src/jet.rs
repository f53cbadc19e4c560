//! Truncated Taylor jets in the radial variable.
//!
//! Convention: a [`Jet`] of order `K` stores **raw derivatives**
//! `[g(ρ₀), g'(ρ₀), …, g^{(K)}(ρ₀)]`, not Taylor coefficients divided by `i!`.
//! The Lagrangians are written in raw derivatives, so this avoids factorial
//! bookkeeping at every call site. Arithmetic is closed at fixed order:
//! anything above `K` is discarded and never read.
//!
//! Coefficients live in any [`Scalar`] ring, so a jet whose coefficients are
//! [`Perturbation2`](crate::Perturbation2) values carries ρ-derivatives and
//! s-derivatives at once.

use std::ops::{Add, Mul, Neg, Sub};

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_BINOM: usize = 32;

const fn binomial_table() -> [[f64; MAX_BINOM]; MAX_BINOM] {
    let mut t = [[0.0; MAX_BINOM]; MAX_BINOM];
    let mut n = 0;
    while n < MAX_BINOM {
        t[n][0] = 1.0;
        let mut k = 1;
        while k <= n {
            t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0.0 };
            k += 1;
        }
        n += 1;
    }
    t
}

static BINOM: [[f64; MAX_BINOM]; MAX_BINOM] = binomial_table();

/// Largest jet order the binomial table supports.
pub const MAX_ORDER: usize = MAX_BINOM - 1;

#[inline]
fn binom(n: usize, k: usize) -> f64 {
    BINOM[n][k]
}

type Coeffs<S> = SmallVec<[S; 12]>;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<S> {
    d: Coeffs<S>,
}

impl<S: Scalar> Jet<S> {
    /// Builds a jet from raw derivatives `[g, g', g'', …]`.
    pub fn from_derivatives(derivs: impl IntoIterator<Item = S>) -> Self {
        let d: Coeffs<S> = derivs.into_iter().collect();
        assert!(!d.is_empty(), "a jet needs at least the value");
        assert!(d.len() <= MAX_ORDER + 1, "jet order exceeds {MAX_ORDER}");
        Self { d }
    }

    pub fn constant(c: S, order: usize) -> Self {
        let mut d: Coeffs<S> = SmallVec::from_elem(S::zero(), order + 1);
        d[0] = c;
        Self { d }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(S::zero(), order)
    }

    /// The independent variable ρ itself, expanded at `x0`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut j = Self::constant(S::constant(x0), order);
        if order >= 1 {
            j.d[1] = S::one();
        }
        j
    }

    pub fn order(&self) -> usize {
        self.d.len() - 1
    }

    pub fn value(&self) -> S {
        self.d[0]
    }

    /// Raw `i`-th derivative.
    pub fn deriv(&self, i: usize) -> S {
        self.d[i]
    }

    pub fn derivatives(&self) -> &[S] {
        &self.d
    }

    pub fn truncate(&self, order: usize) -> Self {
        let k = order.min(self.order());
        Self { d: self.d[..=k].iter().copied().collect() }
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(S) -> T) -> Jet<T> {
        Jet { d: self.d.iter().map(|&c| f(c)).collect() }
    }

    /// Derivative jet of order `K − 1`.
    pub fn shift(&self) -> Result<Self> {
        if self.order() == 0 {
            return Err(Error::Arity("cannot differentiate an order-0 jet".into()));
        }
        Ok(Self { d: self.d[1..].iter().copied().collect() })
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { d: self.d.iter().map(|&c| c.scale(k)).collect() }
    }

    pub fn mul_scalar(&self, k: S) -> Self {
        Self { d: self.d.iter().map(|&c| c * k).collect() }
    }

    pub fn add_scalar(&self, k: S) -> Self {
        let mut out = self.clone();
        out.d[0] += k;
        out
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut acc = Self::constant(S::one(), self.order());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Quotient by the Leibniz recurrence `a = q·b`.
    ///
    /// Division by a jet whose value vanishes yields non-finite coefficients;
    /// use [`Jet::try_div`] where that must be reported.
    pub fn div(&self, rhs: &Self) -> Self {
        let k = self.order().min(rhs.order());
        let b0 = rhs.d[0];
        let mut q: Coeffs<S> = SmallVec::with_capacity(k + 1);
        for m in 0..=k {
            let mut acc = self.d[m];
            for j in 0..m {
                acc = acc - (q[j] * rhs.d[m - j]).scale(binom(m, j));
            }
            q.push(acc / b0);
        }
        Self { d: q }
    }

    pub fn try_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.d[0].value() == 0.0 {
            return Err(Error::Singularity("division by a jet with zero constant term".into()));
        }
        Ok(self.div(rhs))
    }

    pub fn recip(&self) -> Self {
        Self::constant(S::one(), self.order()).div(self)
    }

    /// `(sin u, cos u)` through the coupled recurrences
    /// `s' = c·u'`, `c' = −s·u'`.
    pub fn sin_cos(&self) -> (Self, Self) {
        let k = self.order();
        let mut s: Coeffs<S> = SmallVec::with_capacity(k + 1);
        let mut c: Coeffs<S> = SmallVec::with_capacity(k + 1);
        s.push(self.d[0].sin());
        c.push(self.d[0].cos());
        for m in 1..=k {
            let mut ds = S::zero();
            let mut dc = S::zero();
            for j in 0..m {
                let w = binom(m - 1, j);
                ds += (c[j] * self.d[m - j]).scale(w);
                dc += (s[j] * self.d[m - j]).scale(w);
            }
            s.push(ds);
            c.push(-dc);
        }
        (Self { d: s }, Self { d: c })
    }

    pub fn sin(&self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Self {
        self.sin_cos().1
    }

    /// `(sinh u, cosh u)`; same recurrence as [`Jet::sin_cos`] without the sign flip.
    pub fn sinh_cosh(&self) -> (Self, Self) {
        let k = self.order();
        let mut s: Coeffs<S> = SmallVec::with_capacity(k + 1);
        let mut c: Coeffs<S> = SmallVec::with_capacity(k + 1);
        s.push(self.d[0].sinh());
        c.push(self.d[0].cosh());
        for m in 1..=k {
            let mut ds = S::zero();
            let mut dc = S::zero();
            for j in 0..m {
                let w = binom(m - 1, j);
                ds += (c[j] * self.d[m - j]).scale(w);
                dc += (s[j] * self.d[m - j]).scale(w);
            }
            s.push(ds);
            c.push(dc);
        }
        (Self { d: s }, Self { d: c })
    }

    /// Square root via `y² = u`; the constant term must be positive.
    pub fn sqrt(&self) -> Result<Self> {
        let u0 = self.d[0].value();
        if !(u0 > 0.0) {
            return Err(Error::domain(format!("sqrt of jet with constant term {u0}")));
        }
        let k = self.order();
        let mut y: Coeffs<S> = SmallVec::with_capacity(k + 1);
        y.push(self.d[0].sqrt());
        let two_y0 = y[0].scale(2.0);
        for m in 1..=k {
            let mut acc = self.d[m];
            for j in 1..m {
                acc = acc - (y[j] * y[m - j]).scale(binom(m, j));
            }
            y.push(acc / two_y0);
        }
        Ok(Self { d: y })
    }

    /// `u^p` for real `p` via `u·y' = p·u'·y`; the constant term must be positive.
    pub fn powf(&self, p: f64) -> Result<Self> {
        let u0 = self.d[0].value();
        if !(u0 > 0.0) {
            return Err(Error::domain(format!("pow of jet with constant term {u0}")));
        }
        let k = self.order();
        let mut y: Coeffs<S> = SmallVec::with_capacity(k + 1);
        y.push(self.d[0].powf(p));
        for m in 1..=k {
            let mut acc = S::zero();
            for j in 0..m {
                acc += (self.d[j + 1] * y[m - 1 - j]).scale(p * binom(m - 1, j));
            }
            for j in 1..m {
                acc = acc - (self.d[j] * y[m - j]).scale(binom(m - 1, j));
            }
            y.push(acc / self.d[0]);
        }
        Ok(Self { d: y })
    }
}

impl Jet<f64> {
    /// Reinterprets an `s`-independent real jet in another ring.
    pub fn lift<S: Scalar>(&self) -> Jet<S> {
        self.map_coeffs(S::constant)
    }
}

fn zip_with<S: Scalar>(a: &Jet<S>, b: &Jet<S>, f: impl Fn(S, S) -> S) -> Jet<S> {
    let k = a.order().min(b.order());
    Jet { d: (0..=k).map(|i| f(a.d[i], b.d[i])).collect() }
}

impl<S: Scalar> Add for &Jet<S> {
    type Output = Jet<S>;
    fn add(self, rhs: Self) -> Jet<S> {
        zip_with(self, rhs, |x, y| x + y)
    }
}

impl<S: Scalar> Sub for &Jet<S> {
    type Output = Jet<S>;
    fn sub(self, rhs: Self) -> Jet<S> {
        zip_with(self, rhs, |x, y| x - y)
    }
}

impl<S: Scalar> Mul for &Jet<S> {
    type Output = Jet<S>;
    fn mul(self, rhs: Self) -> Jet<S> {
        let k = self.order().min(rhs.order());
        let mut d: Coeffs<S> = SmallVec::with_capacity(k + 1);
        for m in 0..=k {
            let mut acc = S::zero();
            for j in 0..=m {
                acc += (self.d[j] * rhs.d[m - j]).scale(binom(m, j));
            }
            d.push(acc);
        }
        Jet { d }
    }
}

impl<S: Scalar> Neg for &Jet<S> {
    type Output = Jet<S>;
    fn neg(self) -> Jet<S> {
        Jet { d: self.d.iter().map(|&c| -c).collect() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl<S: Scalar> $tr for Jet<S> {
            type Output = Jet<S>;
            fn $m(self, rhs: Self) -> Jet<S> {
                (&self).$m(&rhs)
            }
        }
        impl<S: Scalar> $tr<&Jet<S>> for Jet<S> {
            type Output = Jet<S>;
            fn $m(self, rhs: &Jet<S>) -> Jet<S> {
                (&self).$m(rhs)
            }
        }
        impl<S: Scalar> $tr<Jet<S>> for &Jet<S> {
            type Output = Jet<S>;
            fn $m(self, rhs: Jet<S>) -> Jet<S> {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl<S: Scalar> Neg for Jet<S> {
    type Output = Jet<S>;
    fn neg(self) -> Jet<S> {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Perturbation2;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol * (1.0 + y.abs()), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn square_of_variable() {
        let rho = Jet::<f64>::variable(2.0, 2);
        assert_eq!((&rho * &rho).derivatives(), &[4.0, 4.0, 2.0]);
    }

    #[test]
    fn reciprocal_of_variable_at_one() {
        let one = Jet::<f64>::constant(1.0, 2);
        let q = one.try_div(&Jet::variable(1.0, 2)).unwrap();
        assert_eq!(q.derivatives(), &[1.0, -1.0, 2.0]);
    }

    #[test]
    fn zero_annihilates() {
        let a = Jet::from_derivatives([3.0, -2.0, 7.5, 1.0]);
        let z = Jet::<f64>::zero(3);
        assert_eq!((&a * &z).derivatives(), &[0.0; 4]);
    }

    #[test]
    fn division_by_zero_constant_is_singular() {
        let a = Jet::<f64>::constant(1.0, 2);
        let b = Jet::from_derivatives([0.0, 1.0, 0.0]);
        assert!(matches!(a.try_div(&b), Err(Error::Singularity(_))));
    }

    #[test]
    fn sine_of_constant() {
        let j = Jet::<f64>::constant(std::f64::consts::FRAC_PI_6, 3).sin();
        close(j.derivatives(), &[0.5, 0.0, 0.0, 0.0], 1e-15);
    }

    #[test]
    fn sqrt_of_constant_and_domain() {
        let j = Jet::<f64>::constant(4.0, 2).sqrt().unwrap();
        assert_eq!(j.derivatives(), &[2.0, 0.0, 0.0]);
        assert!(matches!(Jet::<f64>::constant(0.0, 2).sqrt(), Err(Error::Domain(_))));
        assert!(Jet::<f64>::constant(-1.0, 2).sqrt().is_err());
    }

    #[test]
    fn sine_taylor_at_zero() {
        let j = Jet::<f64>::variable(0.0, 3).sin();
        assert_eq!(j.derivatives(), &[0.0, 1.0, 0.0, -1.0]);
    }

    #[test]
    fn shift_reindexes() {
        let a = Jet::from_derivatives([1.0, 2.0, 3.0]);
        assert_eq!(a.shift().unwrap().derivatives(), &[2.0, 3.0]);
        let c = Jet::<f64>::constant(5.0, 2).shift().unwrap();
        assert_eq!(c.derivatives(), &[0.0, 0.0]);
        assert!(matches!(Jet::<f64>::constant(1.0, 0).shift(), Err(Error::Arity(_))));
    }

    #[test]
    fn double_shift_of_cube() {
        // ρ³ at 1 -> (ρ³)'' = 6ρ with value 6 and slope 6.
        let rho = Jet::<f64>::variable(1.0, 3);
        let cube = rho.powi(3);
        let dd = cube.shift().unwrap().shift().unwrap();
        assert_eq!(dd.derivatives(), &[6.0, 6.0]);
    }

    #[test]
    fn pow_matches_sqrt() {
        let u = Jet::from_derivatives([2.0, 0.3, -1.0, 0.7]);
        let a = u.powf(0.5).unwrap();
        let b = u.sqrt().unwrap();
        close(a.derivatives(), b.derivatives(), 1e-14);
    }

    #[test]
    fn perturbation_coefficients_carry_s_derivatives() {
        // sin(a + s c) at s=0 in the coefficient ring.
        let (a, c) = (0.4, 1.7);
        let u = Jet::<Perturbation2>::constant(Perturbation2::seeded(a, c), 1);
        let s = u.sin().value();
        assert!((s.v1 - c * f64::cos(a)).abs() < 1e-15);
        assert!((s.v2 + c * c * f64::sin(a)).abs() < 1e-15);
    }
}
