//! Critical constant profiles of the r-energies on the ball into the sphere.
//!
//! Criticality is decided in weak form. For a constant profile `α ≡ a` the
//! Euler–Lagrange residual is `c(a)·ρ^{n−1−2r}`, so the first variation
//! `F_v(a) = dE/ds` along `a + s·v` is `c(a)` times a bump-dependent moment.
//! Zeros of `F_v` in `a` are therefore independent of `v`; three bumps guard
//! against an accidental zero moment.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::ellipsoid;
use crate::energy::{energy, EnergySpec, Variant};
use crate::error::{Error, Result};
use crate::geometry::{Bump, ModelPair, ProfileFamily};
use crate::quadrature::{Integral, TanhSinh};
use crate::roots::{brent, dedup_sorted, sign_change_brackets, Polynomial};
use crate::scalar::Perturbation2;

/// `dE/ds` at `s = 0` along `a + s·v`, with its quadrature error estimate.
pub fn first_variation(
    a: f64,
    bump: &Bump,
    model: &ModelPair,
    spec: &EnergySpec,
    quad: &TanhSinh,
) -> Result<Integral<f64>> {
    let family = ProfileFamily::new(a, Some(*bump))?;
    family.check_admissible(spec.r)?;
    let e = energy::<Perturbation2, _>(&family, model, spec, quad)?;
    Ok(Integral { value: e.value.v1, error: e.error.v1, levels: e.levels, evaluations: e.evaluations })
}

/// The three test bumps `(1−ρ)^r`, `(1−ρ)^{r+1}` and `ρ(1−ρ)^r`.
pub fn test_bumps(r: u32) -> [Bump; 3] {
    [Bump::power(r), Bump::power(r + 1), Bump { scale: 1.0, m: 1, k: r }]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanOptions {
    pub grid: usize,
    pub lo: f64,
    pub hi: f64,
    /// Brent tolerance on the angle.
    pub xtol: f64,
    /// Maximal spread of the roots found with different bumps.
    pub agree_tol: f64,
    /// `|F_v(a)| ≤ residual_tol · max(1, max over the grid |F_v|)`.
    pub residual_tol: f64,
    pub quad: TanhSinh,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            grid: 512,
            lo: 1e-4,
            hi: FRAC_PI_2 - 1e-4,
            xtol: 1e-12,
            agree_tol: 1e-9,
            residual_tol: 1e-8,
            quad: TanhSinh::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpResidual {
    pub bump: String,
    /// The root located with this bump alone.
    pub root: f64,
    /// `F_v` at the reported angle.
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceMatch {
    pub source: String,
    pub value: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalAngleRecord {
    pub case: String,
    pub r: u32,
    pub variant: Variant,
    pub n: u32,
    pub a: f64,
    pub first_variation_residuals: Vec<BumpResidual>,
    pub residual_tolerance: f64,
    pub sobolev_ok: bool,
    pub references: Vec<ReferenceMatch>,
}

/// Outcome of a scan at one dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub r: u32,
    pub variant: Variant,
    pub n: u32,
    pub sobolev_ok: bool,
    pub grid_points: usize,
    pub roots: Vec<CriticalAngleRecord>,
}

fn grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| if i + 1 == count { hi } else { lo + step * i as f64 }).collect()
}

/// Locates the roots of `F_v(a)` on `(lo, hi)` for constant profiles.
///
/// The grid is scanned with the first test bump; each sign change is refined
/// by Brent's method separately for all three bumps, and a root is kept only
/// if the three refined roots agree and every residual passes the gate.
/// Returns an empty list (with `sobolev_ok = false`) below the integrability
/// threshold.
pub fn find_critical_angles(r: u32, variant: Variant, n: u32, opts: &ScanOptions) -> Result<ScanResult> {
    let spec = EnergySpec::new(r, variant)?;
    let sobolev = sobolev_check(r, n)?;
    let mut result =
        ScanResult { r, variant, n, sobolev_ok: sobolev.member, grid_points: opts.grid, roots: Vec::new() };
    if !sobolev.member {
        return Ok(result);
    }
    if opts.grid < 2 {
        return Err(Error::precondition("scan grid needs at least two points"));
    }
    let model = ModelPair::ball_to_sphere(n)?;
    let bumps = test_bumps(r);
    let eval = |b: &Bump, a: f64| first_variation(a, b, &model, &spec, &opts.quad);

    let xs = grid(opts.lo, opts.hi, opts.grid);
    let values: Vec<f64> = xs.par_iter().map(|&a| eval(&bumps[0], a).map(|i| i.value)).collect::<Result<_>>()?;
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let gate = opts.residual_tol * scale;

    let mut brackets = Vec::new();
    for (lo, hi) in sign_change_brackets(&xs, &values) {
        if lo < hi {
            brackets.push((lo, hi));
            continue;
        }
        // Exact zero on the grid: look for a sign change on a 4× finer grid
        // around it, offset so the zero itself is not resampled.
        let h = (opts.hi - opts.lo) / (opts.grid - 1) as f64;
        let fine: Vec<f64> = (0..8).map(|i| lo - h + (i as f64 + 0.5) * h / 4.0).collect();
        let fine: Vec<f64> = fine.into_iter().filter(|&x| x > opts.lo && x < opts.hi).collect();
        let fv: Vec<f64> = fine.iter().map(|&a| eval(&bumps[0], a).map(|i| i.value)).collect::<Result<_>>()?;
        match sign_change_brackets(&fine, &fv).into_iter().find(|(a, b)| a < b) {
            Some(br) => brackets.push(br),
            None => brackets.push((lo, lo)),
        }
    }

    let mut found = Vec::new();
    for (lo, hi) in brackets {
        let mut roots = Vec::with_capacity(bumps.len());
        let mut agreed = true;
        for b in &bumps {
            let root = if lo == hi { Ok(lo) } else { brent(|a| eval(b, a).map(|i| i.value), lo, hi, opts.xtol, 200) };
            match root {
                Ok(x) => roots.push(x),
                Err(Error::Precondition(_)) => {
                    agreed = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !agreed {
            continue;
        }
        let spread = roots.iter().fold(0.0f64, |m, &x| m.max((x - roots[0]).abs()));
        if spread > opts.agree_tol {
            continue;
        }
        let a = roots[0];
        let mut residuals = Vec::with_capacity(bumps.len());
        let mut ok = true;
        for (b, &root) in bumps.iter().zip(&roots) {
            let fv = eval(b, a)?;
            ok &= fv.value.abs() <= gate;
            residuals.push(BumpResidual { bump: b.to_string(), root, value: fv.value, error: fv.error });
        }
        if ok {
            found.push((a, residuals));
        }
    }

    let kept = dedup_sorted(found.iter().map(|(a, _)| *a).collect(), opts.agree_tol);
    for a in kept {
        let (_, residuals) = found.iter().find(|(x, _)| *x == a).expect("root taken from list").clone();
        let references = reference_angles(r, n)
            .into_iter()
            .map(|(source, value)| ReferenceMatch { source, value, deviation: (a - value).abs() })
            .collect();
        result.roots.push(CriticalAngleRecord {
            case: format!("critical/r{r}-n{n}-{variant}"),
            r,
            variant,
            n,
            a,
            first_variation_residuals: residuals,
            residual_tolerance: gate,
            sobolev_ok: true,
            references,
        });
    }
    Ok(result)
}

/// Runs [`find_critical_angles`] for every `n` in `n_min..=n_max`, which must
/// lie in `[2r+1, 40]`.
pub fn dimension_scan(r: u32, variant: Variant, n_min: u32, n_max: u32, opts: &ScanOptions) -> Result<Vec<ScanResult>> {
    if n_min < 2 * r + 1 || n_max > 40 || n_min > n_max {
        return Err(Error::precondition(format!("dimension range [{n_min}, {n_max}] must lie in [{}, 40]", 2 * r + 1)));
    }
    (n_min..=n_max).into_par_iter().map(|n| find_critical_angles(r, variant, n, opts)).collect()
}

/// Criticality polynomial in `x = cos²a` for `r ∈ {3, 5}`.
pub fn criticality_polynomial(r: u32, n: u32) -> Result<Polynomial> {
    let n = n as f64;
    let m = n - 1.0;
    match r {
        3 => Ok(Polynomial::new(vec![2.0 * (n - 4.0) * (3.0 * n - 23.0), 2.0 * m * (3.0 * n - 19.0), 3.0 * m * m])),
        5 => Ok(Polynomial::new(vec![2.0 * n - 8.0, m]).mul(&quintic_cubic_factor(n))),
        _ => Err(Error::Unsupported(format!("no explicit criticality polynomial for r = {r}"))),
    }
}

/// The cubic factor `P₃` of the `r = 5` polynomial.
pub fn quintic_cubic_factor(n: f64) -> Polynomial {
    let m = n - 1.0;
    Polynomial::new(vec![
        24.0 * (n - 6.0) * (n - 8.0) * (7.0 * n - 79.0),
        4.0 * m * (27.0 * n * n - 475.0 * n + 1984.0),
        2.0 * m * m * (17.0 * n - 138.0),
        5.0 * m * m * m,
    ])
}

/// Angles `a = arccos √x` for the roots `x ∈ (0, 1)` of the criticality
/// polynomial.
pub fn polynomial_angles(r: u32, n: u32) -> Result<Vec<f64>> {
    let p = criticality_polynomial(r, n)?;
    Ok(p.roots_in(0.0, 1.0).into_iter().map(|x| x.sqrt().acos()).rev().collect())
}

/// `(2r+1, a_r)` with `a_r = ½ arccos((√((r²−1)(2r−1)) − r² − r + 1)/r²)`.
pub fn conjecture_angle(r: u32) -> Result<(u32, f64)> {
    if r < 2 {
        return Err(Error::precondition(format!("conjectured angle needs r ≥ 2, got {r}")));
    }
    let arg = conjecture_argument(r);
    if !(arg > -1.0 && arg < 1.0) {
        return Err(Error::domain(format!("arccos argument {arg} outside (−1, 1)")));
    }
    Ok((2 * r + 1, 0.5 * arg.acos()))
}

/// The arccos argument of [`conjecture_angle`].
pub fn conjecture_argument(r: u32) -> f64 {
    let r = r as f64;
    (((r * r - 1.0) * (2.0 * r - 1.0)).sqrt() - r * r - r + 1.0) / (r * r)
}

/// Independent closed-form references for the critical angle at `(r, n)`.
pub fn reference_angles(r: u32, n: u32) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    if r == 2 {
        if let Ok(a) = ellipsoid::closed_form_angle(n, 1.0) {
            out.push(("ellipsoid closed form at b = 1".to_string(), a));
        }
    }
    if let Ok(angles) = polynomial_angles(r, n) {
        for a in angles {
            out.push((format!("criticality polynomial r = {r}"), a));
        }
    }
    if let Ok((nc, a)) = conjecture_angle(r) {
        if nc == n {
            out.push(("conjectured closed form".to_string(), a));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentConstraint {
    pub k: u32,
    /// Exponent `e` of `ρ^e` in the integrand; integrable iff `e > −1`.
    pub exponent: i64,
    pub description: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevReport {
    pub r: u32,
    pub n: u32,
    pub constraints: Vec<ExponentConstraint>,
    pub member: bool,
}

/// Whether a constant profile on the `n`-ball lies in `W^{r,2}`.
///
/// The squared norms of the iterated derivatives of a constant profile map are
/// combinations of `ρ^{n−4k−1}` and `ρ^{n−4k−3}`; membership requires every
/// exponent involved to exceed `−1`. For even `r` the range is `1 ≤ k ≤ r/2`
/// with the gradient term shifted to `k − 1`; for odd `r` it is
/// `0 ≤ k ≤ (r−1)/2`.
pub fn sobolev_check(r: u32, n: u32) -> Result<SobolevReport> {
    if r < 1 || n < 2 {
        return Err(Error::precondition(format!("Sobolev check needs r ≥ 1 and n ≥ 2, got r = {r}, n = {n}")));
    }
    let ni = n as i64;
    let mut constraints = Vec::new();
    let mut push = |k: u32, exponent: i64, form: &str| {
        constraints.push(ExponentConstraint { k, exponent, description: format!("{form} > -1"), holds: exponent > -1 });
    };
    if r.is_multiple_of(2) {
        for k in 1..=r / 2 {
            let ki = k as i64;
            push(k, ni - 4 * (ki - 1) - 3, &format!("n - 4({k}-1) - 3"));
            push(k, ni - 4 * ki - 1, &format!("n - 4*{k} - 1"));
        }
    } else {
        for k in 0..=(r - 1) / 2 {
            let ki = k as i64;
            push(k, ni - 4 * ki - 1, &format!("n - 4*{k} - 1"));
            push(k, ni - 4 * ki - 3, &format!("n - 4*{k} - 3"));
        }
    }
    let member = constraints.iter().all(|c| c.holds);
    Ok(SobolevReport { r, n, constraints, member })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn a3() -> f64 {
        0.5 * ((2.0 * 10f64.sqrt() - 11.0) / 9.0).acos()
    }

    #[test]
    fn first_variation_vanishes_at_known_angles() {
        let q = TanhSinh::default();
        let f = first_variation(
            PI / 3.0,
            &Bump::power(3),
            &ModelPair::ball_to_sphere(5).unwrap(),
            &EnergySpec::standard(2).unwrap(),
            &q,
        )
        .unwrap();
        assert!(f.value.abs() <= 1e-9, "{}", f.value);
        let f = first_variation(
            a3(),
            &Bump::power(3),
            &ModelPair::ball_to_sphere(7).unwrap(),
            &EnergySpec::standard(3).unwrap(),
            &q,
        )
        .unwrap();
        assert!(f.value.abs() <= 1e-9, "{}", f.value);
        let f = first_variation(
            PI / 4.0,
            &Bump::power(3),
            &ModelPair::ball_to_sphere(7).unwrap(),
            &EnergySpec::standard(3).unwrap(),
            &q,
        )
        .unwrap();
        assert!(f.value.abs() > 1e-3);
    }

    #[test]
    fn inadmissible_bump_is_rejected() {
        let err = first_variation(
            0.5,
            &Bump::power(3),
            &ModelPair::ball_to_sphere(11).unwrap(),
            &EnergySpec::standard(5).unwrap(),
            &TanhSinh::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Admissibility(_)));
    }

    #[test]
    fn r3_polynomial_at_n7() {
        let p = criticality_polynomial(3, 7).unwrap();
        assert_eq!(p.coeffs, vec![-12.0, 24.0, 108.0]);
        let x = p.roots_in(0.0, 1.0);
        assert_eq!(x.len(), 1);
        assert!((x[0] - (10f64.sqrt() - 1.0) / 9.0).abs() < 1e-15);
        assert!((0.5 * (2.0 * x[0] - 1.0).acos() - a3()).abs() < 1e-14);
    }

    #[test]
    fn r3_polynomial_has_no_admissible_root_beyond_eight() {
        assert!(polynomial_angles(3, 8).unwrap().is_empty());
        assert!(polynomial_angles(3, 9).unwrap().is_empty());
    }

    #[test]
    fn r5_cubic_factor_signs() {
        let p3 = quintic_cubic_factor(11.0);
        assert!(p3.eval(0.0) < 0.0);
        assert!(p3.eval(1.0) > 0.0);
        assert_eq!(p3.roots_in(0.0, 1.0).len(), 1);
        assert_eq!(polynomial_angles(5, 11).unwrap().len(), 1);
    }

    #[test]
    fn conjecture_examples() {
        assert_eq!(conjecture_argument(2), -0.5);
        let (n, a) = conjecture_angle(2).unwrap();
        assert_eq!(n, 5);
        assert!((a - PI / 3.0).abs() < 1e-15);
        assert!((conjecture_argument(4) - (105f64.sqrt() - 19.0) / 16.0).abs() < 1e-15);
        assert!((conjecture_argument(5) - (6.0 * 6f64.sqrt() - 29.0) / 25.0).abs() < 1e-15);
        assert!(conjecture_angle(1).is_err());
        for r in 2..=200 {
            assert!(conjecture_angle(r).is_ok());
        }
    }

    #[test]
    fn sobolev_examples() {
        assert!(sobolev_check(3, 7).unwrap().member);
        assert!(!sobolev_check(3, 6).unwrap().member);
        assert!(sobolev_check(2, 5).unwrap().member);
        assert!(sobolev_check(2, 1).is_err());
    }

    #[test]
    fn scan_finds_pi_over_three() {
        let res = find_critical_angles(2, Variant::Standard, 5, &ScanOptions::default()).unwrap();
        assert_eq!(res.roots.len(), 1);
        assert!((res.roots[0].a - PI / 3.0).abs() < 1e-9);
        assert!(res.roots[0].references.iter().all(|m| m.deviation < 1e-8));
    }

    #[test]
    fn scan_below_threshold_is_empty() {
        let res = find_critical_angles(3, Variant::Standard, 6, &ScanOptions::default()).unwrap();
        assert!(!res.sobolev_ok);
        assert!(res.roots.is_empty());
    }

    #[test]
    fn dimension_range_is_checked() {
        assert!(dimension_scan(3, Variant::Standard, 6, 8, &ScanOptions::default()).is_err());
        assert!(dimension_scan(3, Variant::Standard, 7, 41, &ScanOptions::default()).is_err());
    }
}
