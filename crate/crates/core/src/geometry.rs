//! Warping functions, model pairs and radial profiles.
//!
//! A rotationally symmetric map between the warped products
//! `(S^{n−1} × I, f²g + dρ²)` and `(S^{n−1} × I', h²g + dα²)` is determined by
//! the dimension `n`, the two warping functions and a radial profile `α(ρ)`.
//! Everything here is evaluated as jets at a base point.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quadrature::{RHO_MAX, RHO_MIN};
use crate::scalar::Scalar;

/// Clamps a radial point into the evaluation domain `[1e-9, 1 − 1e-12]`.
pub fn clamp_rho(rho: f64) -> f64 {
    rho.clamp(RHO_MIN, RHO_MAX)
}

/// Warping function of a model.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "String")]
pub enum WarpFn {
    /// `ρ`: flat space / the Euclidean ball.
    Identity,
    /// `sin ρ`: the round sphere, positive on `(0, π)`.
    Sine,
    /// `sinh ρ`: hyperbolic space.
    Sinh,
    /// `ρ + b₃ρ³ + b₅ρ⁵ + …`; entry `i` is the coefficient of `ρ^{2i+3}`.
    /// Odd by construction, so `f(0) = 0`, `f'(0) = 1` and every even
    /// derivative vanishes at the pole.
    Series(Vec<f64>),
}

impl WarpFn {
    fn check_point(&self, rho: f64) -> Result<()> {
        let ok = match self {
            WarpFn::Sine => rho > 0.0 && rho < std::f64::consts::PI,
            _ => rho > 0.0 && rho.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("{self} evaluated at ρ = {rho} outside its open interval")))
        }
    }

    /// Derivatives of the warping function at `rho`, orders `0..=order`.
    pub fn jet(&self, rho: f64, order: usize) -> Result<Jet<f64>> {
        self.check_point(rho)?;
        Ok(self.compose(&Jet::variable(rho, order)))
    }

    /// `w(u)` for a jet `u`.
    pub fn compose<S: Scalar>(&self, u: &Jet<S>) -> Jet<S> {
        self.compose_deriv(u, 0)
    }

    /// `w^{(d)}(u)`, the `d`-th derivative of the warping function composed
    /// with the jet `u`.
    pub fn compose_deriv<S: Scalar>(&self, u: &Jet<S>, d: usize) -> Jet<S> {
        let k = u.order();
        match self {
            WarpFn::Identity => match d {
                0 => u.clone(),
                1 => Jet::constant(S::one(), k),
                _ => Jet::zero(k),
            },
            WarpFn::Sine => {
                let (s, c) = u.sin_cos();
                match d % 4 {
                    0 => s,
                    1 => c,
                    2 => -s,
                    _ => -c,
                }
            }
            WarpFn::Sinh => {
                let (s, c) = u.sinh_cosh();
                if d.is_multiple_of(2) {
                    s
                } else {
                    c
                }
            }
            WarpFn::Series(b) => {
                if d == 0 {
                    // u + u³(b₃ + u²(b₅ + …)); exactly u when every b is zero.
                    let u2 = u.square();
                    let mut acc = Jet::zero(k);
                    for &c in b.iter().rev() {
                        acc = (&acc * &u2).add_scalar(S::constant(c));
                    }
                    let u3 = &u2 * u;
                    return u + &(&u3 * &acc);
                }
                let mut acc = Jet::zero(k);
                let terms =
                    std::iter::once((1u32, 1.0)).chain(b.iter().enumerate().map(|(i, &c)| (2 * i as u32 + 3, c)));
                for (p, c) in terms {
                    if (p as usize) < d || c == 0.0 {
                        continue;
                    }
                    let falling: f64 = (0..d as u32).map(|j| (p - j) as f64).product();
                    acc = &acc + &u.powi(p - d as u32).scale(c * falling);
                }
                acc
            }
        }
    }
}

impl fmt::Display for WarpFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WarpFn::Identity => write!(f, "identity"),
            WarpFn::Sine => write!(f, "sin"),
            WarpFn::Sinh => write!(f, "sinh"),
            WarpFn::Series(b) => {
                write!(f, "series:")?;
                for (i, c) in b.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "b{}={c}", 2 * i + 3)?;
                }
                Ok(())
            }
        }
    }
}

impl From<WarpFn> for String {
    fn from(w: WarpFn) -> String {
        w.to_string()
    }
}

impl FromStr for WarpFn {
    type Err = Error;

    /// Accepts `identity`, `sin`, `sinh` and `series:b3=…,b5=…`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "identity" | "rho" => return Ok(WarpFn::Identity),
            "sin" | "sine" => return Ok(WarpFn::Sine),
            "sinh" => return Ok(WarpFn::Sinh),
            _ => {}
        }
        let body = s.strip_prefix("series:").ok_or_else(|| Error::Parse(format!("unknown warping function `{s}`")))?;
        let mut coeffs: Vec<f64> = Vec::new();
        for item in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, val) =
                item.split_once('=').ok_or_else(|| Error::Parse(format!("expected bK=value, got `{item}`")))?;
            let p: usize = key
                .trim()
                .strip_prefix('b')
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad coefficient name `{key}`")))?;
            if p < 3 || p.is_multiple_of(2) {
                return Err(Error::Parse(format!("series coefficients are b3, b5, …; got b{p}")));
            }
            let v: f64 = val.trim().parse().map_err(|_| Error::Parse(format!("bad number `{val}`")))?;
            let idx = (p - 3) / 2;
            if coeffs.len() <= idx {
                coeffs.resize(idx + 1, 0.0);
            }
            coeffs[idx] = v;
        }
        Ok(WarpFn::Series(coeffs))
    }
}

/// Domain dimension together with domain and target warping functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelPair {
    pub n: u32,
    pub domain: WarpFn,
    pub target: WarpFn,
}

impl ModelPair {
    pub fn new(n: u32, domain: WarpFn, target: WarpFn) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("dimension n = {n} must be at least 2")));
        }
        Ok(Self { n, domain, target })
    }

    /// The Euclidean unit ball mapped into the round sphere.
    pub fn ball_to_sphere(n: u32) -> Result<Self> {
        Self::new(n, WarpFn::Identity, WarpFn::Sine)
    }
}

/// `v(ρ) = scale · ρ^m (1 − ρ)^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    pub scale: f64,
    pub m: u32,
    pub k: u32,
}

impl Bump {
    pub fn new(scale: f64, m: u32, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parse("bump exponent k must be at least 1".into()));
        }
        if !scale.is_finite() {
            return Err(Error::Parse("bump amplitude must be finite".into()));
        }
        Ok(Self { scale, m, k })
    }

    /// `(1 − ρ)^k`.
    pub fn power(k: u32) -> Self {
        Self { scale: 1.0, m: 0, k: k.max(1) }
    }

    pub fn scaled(self, lambda: f64) -> Self {
        Self { scale: self.scale * lambda, ..self }
    }

    pub fn jet(&self, rho: f64, order: usize) -> Jet<f64> {
        let x = Jet::<f64>::variable(rho, order);
        let one_minus = (-&x).add_scalar(1.0);
        let mut v = one_minus.powi(self.k);
        if self.m > 0 {
            v = &v * &x.powi(self.m);
        }
        v.scale(self.scale)
    }

    /// An order-`r` variation must vanish together with its first `r − 1`
    /// derivatives at `ρ = 1`, which for `(1 − ρ)^k` means `k ≥ r`.
    pub fn check_admissible(&self, r: u32) -> Result<()> {
        if self.k >= r {
            Ok(())
        } else {
            Err(Error::Admissibility(format!(
                "{self} does not vanish to order {} at ρ = 1 (needed for r = {r})",
                r - 1
            )))
        }
    }
}

impl fmt::Display for Bump {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale != 1.0 {
            write!(f, "{}*", self.scale)?;
        }
        match self.m {
            0 => {}
            1 => write!(f, "rho*")?,
            m => write!(f, "rho^{m}*")?,
        }
        write!(f, "(1-rho)^{}", self.k)
    }
}

impl FromStr for Bump {
    type Err = Error;

    /// Accepts `bump:(1-rho)^k`, `bump:rho^m*(1-rho)^k` and an optional
    /// leading amplitude such as `bump:2*(1-rho)^4`; the `bump:` prefix is
    /// optional.
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let body = compact.strip_prefix("bump:").unwrap_or(&compact);
        let bad = || Error::Parse(format!("unrecognised bump `{s}`"));
        let (mut scale, mut m, mut k) = (1.0, 0u32, None);
        for factor in body.split('*') {
            if let Some(rest) = factor.strip_prefix("(1-rho)") {
                let e = match rest.strip_prefix('^') {
                    Some(e) => e.parse().map_err(|_| bad())?,
                    None if rest.is_empty() => 1,
                    None => return Err(bad()),
                };
                k = Some(e);
            } else if let Some(rest) = factor.strip_prefix("rho") {
                m = match rest.strip_prefix('^') {
                    Some(e) => e.parse().map_err(|_| bad())?,
                    None if rest.is_empty() => 1,
                    None => return Err(bad()),
                };
            } else {
                scale = factor.parse().map_err(|_| bad())?;
            }
        }
        Bump::new(scale, m, k.ok_or_else(bad)?)
    }
}

/// A radial profile `α(ρ)` evaluated as a jet over any scalar ring.
pub trait RadialProfile: Sync {
    fn alpha_jet<S: Scalar>(&self, rho: f64, order: usize) -> Jet<S>;
}

/// `α_s(ρ) = a + (offset + s) · v(ρ)`.
///
/// In the [`Perturbation2`](crate::scalar::Perturbation2) ring the tangent
/// slot carries `v^{(i)}(ρ)` and the second slot is zero, since the family is
/// affine in `s`. In the `f64` ring the profile is the fixed map at
/// `s = 0`, i.e. `a + offset · v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileFamily {
    pub base: f64,
    pub bump: Option<Bump>,
    pub offset: f64,
}

impl ProfileFamily {
    /// A family around the constant profile `a`, `a ∈ (0, π/2)`.
    pub fn new(base: f64, bump: Option<Bump>) -> Result<Self> {
        if !(base > 0.0 && base < FRAC_PI_2) {
            return Err(Error::domain(format!("angle a = {base} outside (0, π/2)")));
        }
        Ok(Self { base, bump, offset: 0.0 })
    }

    pub fn constant(base: f64) -> Result<Self> {
        Self::new(base, None)
    }

    /// Same as [`new`](Self::new) without the range check on `a`.
    pub fn unchecked(base: f64, bump: Option<Bump>) -> Self {
        Self { base, bump, offset: 0.0 }
    }

    /// The family re-centred at `s = offset`.
    pub fn at(self, offset: f64) -> Self {
        Self { offset: self.offset + offset, ..self }
    }

    pub fn check_admissible(&self, r: u32) -> Result<()> {
        match &self.bump {
            Some(b) => b.check_admissible(r),
            None => Ok(()),
        }
    }
}

impl RadialProfile for ProfileFamily {
    fn alpha_jet<S: Scalar>(&self, rho: f64, order: usize) -> Jet<S> {
        match &self.bump {
            None => Jet::constant(S::constant(self.base), order),
            Some(b) => {
                let v = b.jet(rho, order);
                Jet::from_derivatives(v.derivatives().iter().enumerate().map(|(i, &vi)| {
                    let base = if i == 0 { self.base } else { 0.0 };
                    S::seeded(base + self.offset * vi, vi)
                }))
            }
        }
    }
}

/// `α(ρ) = c0 + c1 ρ`, constant in the variation parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineProfile {
    pub c0: f64,
    pub c1: f64,
}

impl RadialProfile for AffineProfile {
    fn alpha_jet<S: Scalar>(&self, rho: f64, order: usize) -> Jet<S> {
        Jet::from_derivatives((0..=order).map(|i| match i {
            0 => S::constant(self.c0 + self.c1 * rho),
            1 => S::constant(self.c1),
            _ => S::zero(),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Perturbation2;
    use std::f64::consts::PI;

    #[test]
    fn identity_jet() {
        let j = WarpFn::Identity.jet(0.5, 3).unwrap();
        assert_eq!(j.derivatives(), &[0.5, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn sine_jet_at_half_pi() {
        let j = WarpFn::Sine.jet(PI / 2.0, 2).unwrap();
        assert!((j.deriv(0) - 1.0).abs() < 1e-15);
        assert!(j.deriv(1).abs() < 1e-15);
        assert!((j.deriv(2) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn cubic_series_jet() {
        let j = WarpFn::Series(vec![1.0]).jet(0.1, 1).unwrap();
        assert!((j.deriv(0) - 0.101).abs() < 1e-15);
        assert!((j.deriv(1) - 1.03).abs() < 1e-15);
    }

    #[test]
    fn zero_series_is_identity_bitwise() {
        for rho in [1e-9, 0.1, 0.37, 0.999] {
            let a = WarpFn::Series(vec![0.0, 0.0, 0.0]).jet(rho, 5).unwrap();
            let b = WarpFn::Identity.jet(rho, 5).unwrap();
            for i in 0..=5 {
                assert_eq!(a.deriv(i).to_bits(), b.deriv(i).to_bits());
            }
        }
    }

    #[test]
    fn series_derivative_composition() {
        let w = WarpFn::Series(vec![0.5, -0.25]);
        let u = Jet::<f64>::variable(0.3, 2);
        let d1 = w.compose_deriv(&u, 1);
        let d2 = w.compose_deriv(&u, 2);
        let j = w.jet(0.3, 3).unwrap();
        assert!((d1.deriv(0) - j.deriv(1)).abs() < 1e-15);
        assert!((d2.deriv(0) - j.deriv(2)).abs() < 1e-15);
        assert!((d1.deriv(1) - j.deriv(2)).abs() < 1e-15);
    }

    #[test]
    fn points_outside_interval_are_rejected() {
        assert!(matches!(WarpFn::Identity.jet(0.0, 1), Err(Error::Domain(_))));
        assert!(matches!(WarpFn::Sine.jet(4.0, 1), Err(Error::Domain(_))));
        assert!(WarpFn::Sinh.jet(-0.1, 1).is_err());
    }

    #[test]
    fn parse_warp_functions() {
        assert_eq!("sin".parse::<WarpFn>().unwrap(), WarpFn::Sine);
        assert_eq!("series:b3=1,b7=-0.5".parse::<WarpFn>().unwrap(), WarpFn::Series(vec![1.0, 0.0, -0.5]));
        assert!("series:b4=1".parse::<WarpFn>().is_err());
        assert!("cosh".parse::<WarpFn>().is_err());
        let w = WarpFn::Series(vec![0.25, 2.0]);
        assert_eq!(w.to_string().parse::<WarpFn>().unwrap(), w);
    }

    #[test]
    fn parse_bumps() {
        assert_eq!("bump:(1-rho)^3".parse::<Bump>().unwrap(), Bump::power(3));
        assert_eq!("rho^2*(1-rho)^4".parse::<Bump>().unwrap(), Bump::new(1.0, 2, 4).unwrap());
        assert_eq!("bump: 2 * rho * (1-rho)^5".parse::<Bump>().unwrap(), Bump::new(2.0, 1, 5).unwrap());
        assert!("bump:rho^2".parse::<Bump>().is_err());
        assert!("bump:(1-rho)^0".parse::<Bump>().is_err());
        let b = Bump::new(0.5, 2, 3).unwrap();
        assert_eq!(b.to_string().parse::<Bump>().unwrap(), b);
    }

    #[test]
    fn constant_profile_jet() {
        let p = ProfileFamily::constant(PI / 3.0).unwrap();
        let j = p.alpha_jet::<f64>(0.4, 3);
        assert_eq!(j.derivatives(), &[PI / 3.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn bump_tangents_vanish_at_boundary() {
        let p = ProfileFamily::new(0.5, Some(Bump::power(3))).unwrap();
        let j = p.alpha_jet::<Perturbation2>(1.0, 2);
        for c in j.derivatives() {
            assert_eq!(c.v1, 0.0);
            assert_eq!(c.v2, 0.0);
        }
        assert_eq!(j.value().v0, 0.5);
    }

    #[test]
    fn bump_derivatives_at_origin() {
        let p = ProfileFamily::new(0.5, Some(Bump::power(3))).unwrap();
        let j = p.alpha_jet::<Perturbation2>(0.0, 2);
        let t: Vec<f64> = j.derivatives().iter().map(|c| c.v1).collect();
        assert_eq!(t, vec![1.0, -3.0, 6.0]);
    }

    #[test]
    fn admissibility_gate() {
        assert!(matches!(Bump::power(3).check_admissible(5), Err(Error::Admissibility(_))));
        assert!(Bump::power(7).check_admissible(5).is_ok());
        assert!(Bump::new(1.0, 1, 5).unwrap().check_admissible(5).is_ok());
    }

    #[test]
    fn angle_range_is_enforced() {
        assert!(ProfileFamily::constant(0.0).is_err());
        assert!(ProfileFamily::constant(FRAC_PI_2).is_err());
        assert!(ProfileFamily::constant(1.0).is_ok());
    }

    #[test]
    fn offset_shifts_value_in_f64_ring() {
        let p = ProfileFamily::new(0.5, Some(Bump::power(2))).unwrap().at(0.1);
        let j = p.alpha_jet::<f64>(0.0, 1);
        assert!((j.deriv(0) - 0.6).abs() < 1e-15);
        assert!((j.deriv(1) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn model_pair_requires_dimension_two() {
        assert!(ModelPair::ball_to_sphere(1).is_err());
        assert_eq!(ModelPair::ball_to_sphere(7).unwrap().n, 7);
    }
}
