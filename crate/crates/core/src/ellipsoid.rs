//! Maps from the unit ball into the ellipsoid `E^n(b) = {|x|² + y²/b² = 1}`.
//!
//! With `k(α) = √(cos²α + b² sin²α)` the radial tension is
//!
//! ```text
//! τ = α̈ + (n−1)α̇/ρ − (n−1) sinα cosα / (ρ² k²) + (k'/k) α̇²
//! ```
//!
//! and the energy densities are `L₂ = τ² k² ρ^{n−1}` and
//! `L₃ = ρ^{n−1} [(n−1) τ² cos²α / ρ² + (d(kτ)/dρ)²]`. Both carry no factor
//! ½, so at `b = 1` they are twice the spherical densities; only roots and
//! windows are scale-free.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Bump, ProfileFamily, RadialProfile};
use crate::jet::Jet;
use crate::quadrature::{Integral, TanhSinh};
use crate::roots::Polynomial;
use crate::scalar::{Perturbation2, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipsoidConfig {
    pub n: u32,
    pub b: f64,
}

impl EllipsoidConfig {
    pub fn new(n: u32, b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::domain(format!("semi-axis b = {b} must be positive")));
        }
        if n < 2 {
            return Err(Error::domain(format!("dimension n = {n} must be at least 2")));
        }
        Ok(Self { n, b })
    }

    /// `k(α)` as a jet.
    pub fn k<S: Scalar>(&self, alpha: &Jet<S>) -> Jet<S> {
        let (s, c) = alpha.sin_cos();
        let k2 = &c.square() + &s.square().scale(self.b * self.b);
        k2.sqrt().expect("cos²α + b² sin²α is positive")
    }

    /// `k'(α)/k(α) = (b² − 1) sinα cosα / k²(α)` as a jet.
    fn log_k_prime<S: Scalar>(&self, alpha: &Jet<S>) -> (Jet<S>, Jet<S>) {
        let (s, c) = alpha.sin_cos();
        let k2 = &c.square() + &s.square().scale(self.b * self.b);
        let sc = &s * &c;
        (sc.scale(self.b * self.b - 1.0).div(&k2), k2)
    }
}

/// Tension jet of order `alpha.order() − 2` at `rho`.
pub fn tension<S: Scalar>(rho: f64, alpha: &Jet<S>, config: &EllipsoidConfig) -> Result<Jet<S>> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::domain(format!("ρ = {rho} outside (0, ∞)")));
    }
    if alpha.order() < 2 {
        return Err(Error::Arity(format!("tension needs an α-jet of order ≥ 2, got {}", alpha.order())));
    }
    let n1 = (config.n - 1) as f64;
    let x: Jet<S> = Jet::variable(rho, alpha.order());
    let da = alpha.shift()?;
    let dda = da.shift()?;
    let (lkp, k2) = config.log_k_prime(alpha);
    let (s, c) = alpha.sin_cos();
    let x2 = x.square();
    let drift = &da.div(&x).scale(n1);
    let pull = (&s * &c).div(&(&x2 * &k2)).scale(n1);
    Ok(&(&(&dda + drift) - &pull) + &(&lkp * &da.square()))
}

/// Energy density of order 2 or 3 at `rho` for an α-jet of at least that order.
pub fn lagrangian_from_jet<S: Scalar>(rho: f64, alpha: &Jet<S>, config: &EllipsoidConfig, order: u32) -> Result<S> {
    let tau = tension(rho, alpha, config)?;
    let vol = S::constant(rho.powi(config.n as i32 - 1));
    match order {
        2 => {
            let k = config.k(alpha).value();
            let t = tau.value();
            Ok(t * t * k * k * vol)
        }
        3 => {
            if alpha.order() < 3 {
                return Err(Error::Arity("trienergy density needs an α-jet of order 3".into()));
            }
            let n1 = (config.n - 1) as f64;
            let k = config.k(alpha);
            let ktau = &k * &tau;
            let d = ktau.shift()?.value();
            let t = tau.value();
            let c = alpha.value().cos();
            let first = (t * t * c * c).scale(n1 / (rho * rho));
            Ok((first + d * d) * vol)
        }
        _ => Err(Error::Unsupported(format!("ellipsoid energy of order {order}"))),
    }
}

fn sobolev_threshold(order: u32) -> Result<u32> {
    match order {
        2 => Ok(5),
        3 => Ok(7),
        _ => Err(Error::Unsupported(format!("ellipsoid energy of order {order}"))),
    }
}

/// `∫₀¹ L dρ` for the bi- (order 2) or tri-energy (order 3).
pub fn energy<S, P>(profile: &P, config: &EllipsoidConfig, order: u32, quad: &TanhSinh) -> Result<Integral<S>>
where
    S: Scalar,
    P: RadialProfile + ?Sized,
{
    let nmin = sobolev_threshold(order)?;
    if config.n < nmin {
        return Err(Error::precondition(format!(
            "order-{order} energy on the ball needs n ≥ {nmin}, got {}",
            config.n
        )));
    }
    quad.integrate(|rho| lagrangian_from_jet(rho, &profile.alpha_jet::<S>(rho, order as usize), config, order))
}

/// Weak-form first variation along `a + s·v`.
pub fn first_variation(
    a: f64,
    bump: &Bump,
    config: &EllipsoidConfig,
    order: u32,
    quad: &TanhSinh,
) -> Result<Integral<f64>> {
    let family = ProfileFamily::new(a, Some(*bump))?;
    family.check_admissible(order)?;
    let e = energy::<Perturbation2, _>(&family, config, order, quad)?;
    Ok(Integral { value: e.value.v1, error: e.error.v1, levels: e.levels, evaluations: e.evaluations })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowReport {
    pub order: u32,
    pub n: u32,
    pub bound: f64,
    pub b2: f64,
    pub inside: bool,
}

/// Existence window for order 2: `0 < b² < (n−1)/(2(n−4))`.
pub fn biharmonic_window(n: u32, b: f64) -> Result<WindowReport> {
    window(2, n, b)
}

/// Existence window for order 3: `0 < b² < (n−1)/(4(n−6))`.
pub fn triharmonic_window(n: u32, b: f64) -> Result<WindowReport> {
    window(3, n, b)
}

pub fn window(order: u32, n: u32, b: f64) -> Result<WindowReport> {
    let nmin = sobolev_threshold(order)?;
    if n < nmin {
        return Err(Error::precondition(format!("order-{order} window needs n ≥ {nmin}, got {n}")));
    }
    EllipsoidConfig::new(n, b)?;
    let nf = n as f64;
    let bound = match order {
        2 => (nf - 1.0) / (2.0 * (nf - 4.0)),
        _ => (nf - 1.0) / (4.0 * (nf - 6.0)),
    };
    let b2 = b * b;
    Ok(WindowReport { order, n, bound, b2, inside: b2 > 0.0 && b2 < bound })
}

/// `P₂(y) = (2b²(n−4) − n + 1) y² + 4(n−4) y + 3(n−3)/b²` with `y = tan²a`.
pub fn biharmonic_polynomial(n: u32, b: f64) -> Polynomial {
    let nf = n as f64;
    let b2 = b * b;
    Polynomial::new(vec![3.0 * (nf - 3.0) / b2, 4.0 * (nf - 4.0), 2.0 * b2 * (nf - 4.0) - nf + 1.0])
}

/// Angles `arctan √y` for the positive roots of `P₂`.
pub fn biharmonic_angles(n: u32, b: f64) -> Vec<f64> {
    biharmonic_polynomial(n, b).real_roots().into_iter().filter(|&y| y > 0.0).map(|y| y.sqrt().atan()).collect()
}

/// Integer coefficients of `A₀ … A₃` as polynomials in `B = b²`:
/// `coeffs[i][j]` is the coefficient of `B^j` in `A_i`.
pub fn triharmonic_coefficients_exact(n: u32) -> [[i128; 4]; 4] {
    let n = n as i128;
    let mul = |p: &[i128], q: &[i128]| {
        let mut out = vec![0i128; p.len() + q.len() - 1];
        for (i, a) in p.iter().enumerate() {
            for (j, b) in q.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        out
    };
    let a3 = mul(&mul(&[-1, 1], &[-3 * (n - 3), 2 * (n - 4)]), &[-5 * (n - 5), 4 * (n - 6)]);
    let mut out = [[0i128; 4]; 4];
    out[3].copy_from_slice(&a3);
    out[2] = [0, -(41 * n * n - 332 * n + 651), -(-62 * n * n + 566 * n - 1224), -24 * (n - 4) * (n - 6)];
    out[1] = [0, 2 * (n - 1) * (2 * n - 5), 2 * (-17 * n * n + 149 * n - 312), 24 * (n - 4) * (n - 6)];
    out[0] = [0, 0, 2 * (n - 4) * (n - 1), -8 * (n - 4) * (n - 6)];
    out
}

/// `P_b(x) = A₃x³ + A₂x² + A₁x + A₀` at an exact rational `b²`.
pub fn triharmonic_polynomial_exact(n: u32, b2: Ratio<i128>) -> [Ratio<i128>; 4] {
    let c = triharmonic_coefficients_exact(n);
    let mut out = [Ratio::from_integer(0); 4];
    for (i, row) in c.iter().enumerate() {
        let mut acc = Ratio::from_integer(0);
        for &cj in row.iter().rev() {
            acc = acc * b2 + Ratio::from_integer(cj);
        }
        out[i] = acc;
    }
    out
}

/// `P_b(x)` in `x = cos²a`.
pub fn triharmonic_polynomial(n: u32, b: f64) -> Polynomial {
    let b2 = b * b;
    let c = triharmonic_coefficients_exact(n);
    Polynomial::new(c.iter().map(|row| row.iter().rev().fold(0.0, |acc, &cj| acc * b2 + cj as f64)).collect())
}

/// Angles `arccos √x` for the roots `x ∈ (0, 1)` of `P_b`.
pub fn triharmonic_angles(n: u32, b: f64) -> Vec<f64> {
    triharmonic_polynomial(n, b).roots_in(0.0, 1.0).into_iter().rev().map(|x| x.sqrt().acos()).collect()
}

/// Explicit critical angle of order 2 inside the window:
/// `a = arctan √(−(√(−(n−1)(2b²(n−4) − 3n + 9)) + 2b(n−4)) / (2b³(n−4) − bn + b))`.
pub fn closed_form_angle(n: u32, b: f64) -> Result<f64> {
    let w = biharmonic_window(n, b)?;
    if !w.inside {
        return Err(Error::domain(format!("b² = {} outside the window (0, {})", w.b2, w.bound)));
    }
    let nf = n as f64;
    let inner = -(nf - 1.0) * (2.0 * b * b * (nf - 4.0) - 3.0 * nf + 9.0);
    if inner <= 0.0 {
        return Err(Error::domain(format!("inner square-root argument {inner} is not positive")));
    }
    let y = -(inner.sqrt() + 2.0 * b * (nf - 4.0)) / (2.0 * b * b * b * (nf - 4.0) - b * nf + b);
    if y <= 0.0 {
        return Err(Error::domain(format!("outer square-root argument {y} is not positive")));
    }
    Ok(y.sqrt().atan())
}

/// One point of the window/root consistency grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowSample {
    pub order: u32,
    pub n: u32,
    pub b2: f64,
    pub inside: bool,
    pub has_root: bool,
}

impl WindowSample {
    pub fn consistent(&self) -> bool {
        self.inside == self.has_root
    }
}

/// Samples `b² = 0.05, 0.10, …, 2·bound` for every `n` in the range, skipping
/// points within `1e-6` of the bound, and records whether the criticality
/// polynomial has a root in its admissible range.
pub fn window_grid(order: u32, n_min: u32, n_max: u32) -> Result<Vec<WindowSample>> {
    let nmin = sobolev_threshold(order)?;
    if n_min < nmin || n_min > n_max {
        return Err(Error::precondition(format!("dimension range [{n_min}, {n_max}] must start at n ≥ {nmin}")));
    }
    let per_n: Vec<Vec<WindowSample>> = (n_min..=n_max)
        .into_par_iter()
        .map(|n| -> Result<Vec<WindowSample>> {
            let bound = window(order, n, 1.0)?.bound;
            let mut out = Vec::new();
            let mut i = 1;
            loop {
                let b2 = 0.05 * i as f64;
                i += 1;
                if b2 > 2.0 * bound {
                    break;
                }
                if (b2 - bound).abs() < 1e-6 {
                    continue;
                }
                let b = b2.sqrt();
                let inside = window(order, n, b)?.inside;
                let has_root = match order {
                    2 => !biharmonic_angles(n, b).is_empty(),
                    _ => !triharmonic_angles(n, b).is_empty(),
                };
                out.push(WindowSample { order, n, b2, inside, has_root });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_n.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{self, EnergySpec};
    use crate::geometry::{ModelPair, WarpFn};
    use std::f64::consts::PI;

    #[test]
    fn unit_axis_reduces_to_sphere_tension() {
        let p = ProfileFamily::new(0.7, Some(Bump::power(3))).unwrap().at(0.2);
        let cfg = EllipsoidConfig::new(7, 1.0).unwrap();
        for rho in [0.2, 0.6] {
            let alpha = p.alpha_jet::<f64>(rho, 4);
            let te = tension(rho, &alpha, &cfg).unwrap();
            let f = WarpFn::Identity.jet(rho, 4).unwrap();
            let ts = energy::tension(7, &f, &WarpFn::Sine, &alpha).unwrap();
            for i in 0..=2 {
                assert!((te.deriv(i) - ts.deriv(i)).abs() < 1e-12 * ts.deriv(i).abs().max(1.0));
            }
        }
    }

    #[test]
    fn constant_tension_example() {
        let cfg = EllipsoidConfig::new(5, 2.0).unwrap();
        let t = tension(1.0, &Jet::constant(PI / 4.0, 2), &cfg).unwrap();
        assert!((t.value() + 0.8).abs() < 1e-15);
    }

    #[test]
    fn tension_matches_finite_differences() {
        // α(ρ) = 0.4 + 0.3ρ², explicit τ differentiated numerically.
        let cfg = EllipsoidConfig::new(6, 1.7).unwrap();
        let explicit = |r: f64| {
            let (a, da, dda) = (0.4 + 0.3 * r * r, 0.6 * r, 0.6);
            let b2 = cfg.b * cfg.b;
            let k2 = a.cos().powi(2) + b2 * a.sin().powi(2);
            let kp_over_k = (b2 - 1.0) * a.sin() * a.cos() / k2;
            dda + 5.0 * da / r - 5.0 * a.sin() * a.cos() / (r * r * k2) + kp_over_k * da * da
        };
        let rho = 0.45;
        let alpha = Jet::from_derivatives([0.4 + 0.3 * rho * rho, 0.6 * rho, 0.6, 0.0]);
        let t = tension(rho, &alpha, &cfg).unwrap();
        let h = 1e-4;
        let fd = (explicit(rho + h) - explicit(rho - h)) / (2.0 * h);
        assert!((t.deriv(0) - explicit(rho)).abs() < 1e-12);
        assert!((t.deriv(1) - fd).abs() < 1e-6 * fd.abs());
    }

    #[test]
    fn constant_bienergy_at_unit_axis() {
        let cfg = EllipsoidConfig::new(5, 1.0).unwrap();
        let p = ProfileFamily::constant(PI / 3.0).unwrap();
        let e = energy::<f64, _>(&p, &cfg, 2, &TanhSinh::default()).unwrap();
        assert!((e.value - 3.0).abs() < 1e-12);
        let sphere = energy::energy::<f64, _>(
            &p,
            &ModelPair::ball_to_sphere(5).unwrap(),
            &EnergySpec::standard(2).unwrap(),
            &TanhSinh::default(),
        )
        .unwrap();
        assert!((e.value - 2.0 * sphere.value).abs() < 1e-12);
    }

    #[test]
    fn energy_below_threshold_is_rejected() {
        let cfg = EllipsoidConfig::new(6, 1.0).unwrap();
        let p = ProfileFamily::constant(0.5).unwrap();
        assert!(matches!(energy::<f64, _>(&p, &cfg, 3, &TanhSinh::default()), Err(Error::Precondition(_))));
        assert!(matches!(energy::<f64, _>(&p, &cfg, 4, &TanhSinh::default()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn window_examples() {
        let w = biharmonic_window(5, 1.0).unwrap();
        assert_eq!(w.bound, 2.0);
        assert!(w.inside);
        let w = biharmonic_window(7, 1.0).unwrap();
        assert_eq!(w.bound, 1.0);
        assert!(!w.inside);
        let w = triharmonic_window(7, 1.0).unwrap();
        assert_eq!(w.bound, 1.5);
        assert!(w.inside);
        assert!(matches!(triharmonic_window(6, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn biharmonic_polynomial_at_unit_axis() {
        let p = biharmonic_polynomial(5, 1.0);
        assert_eq!(p.coeffs, vec![6.0, 4.0, -2.0]);
        let a = biharmonic_angles(5, 1.0);
        assert_eq!(a.len(), 1);
        assert!((a[0] - PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn value_at_one_is_axis_independent() {
        for n in 7..=30u32 {
            let expected = -15 * (n as i128 * n as i128 - 8 * n as i128 + 15);
            let c = triharmonic_coefficients_exact(n);
            for j in 0..4 {
                let s: i128 = c.iter().map(|row| row[j]).sum();
                assert_eq!(s, if j == 0 { expected } else { 0 }, "n = {n}, B^{j}");
            }
            for b2 in [Ratio::new(1, 3), Ratio::new(7, 2), Ratio::new(1, 1)] {
                let p = triharmonic_polynomial_exact(n, b2);
                let total = p.iter().fold(Ratio::from_integer(0), |acc, c| acc + c);
                assert_eq!(total, Ratio::from_integer(expected));
            }
        }
    }

    #[test]
    fn triharmonic_root_at_unit_axis() {
        let a = triharmonic_angles(7, 1.0);
        assert_eq!(a.len(), 1);
        let a3 = 0.5 * ((2.0 * 10f64.sqrt() - 11.0) / 9.0).acos();
        assert!((a[0] - a3).abs() < 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        assert!((closed_form_angle(5, 1.0).unwrap() - PI / 3.0).abs() < 1e-15);
        assert!((closed_form_angle(6, 1.0).unwrap() - 0.5 * (-0.8f64).acos()).abs() < 1e-12);
        assert!(matches!(closed_form_angle(7, 1.0), Err(Error::Domain(_))));
        let a = closed_form_angle(10, 0.5).unwrap();
        let roots = biharmonic_angles(10, 0.5);
        assert!(roots.iter().any(|r| (r - a).abs() < 1e-12));
    }

    #[test]
    fn small_window_grid_is_consistent() {
        for s in window_grid(2, 5, 7).unwrap().iter().chain(&window_grid(3, 7, 8).unwrap()) {
            assert!(s.consistent(), "{s:?}");
        }
    }
}
