//! Constant-profile maps from a warped geodesic ball `(S^{n−1} × (0,1], f²g + dρ²)`
//! into the sphere.
//!
//! For `α ≡ a` the bi- and triharmonicity conditions become ODEs in the
//! warping function `f`. Imposing the pole conditions `f(0) = 0`, `f'(0) = 1`,
//! `f''(0) = 0` pins the angle; the ODEs then force `f(ρ) = ρ`.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::WarpFn;
use crate::jet::Jet;
use crate::roots::quadratic_roots;

fn order_threshold(order: u32) -> Result<u32> {
    match order {
        2 => Ok(5),
        3 => Ok(7),
        _ => Err(Error::Unsupported(format!("warped-domain condition of order {order}"))),
    }
}

/// The angle forced by the pole conditions, if one exists in `(0, π/2)`.
///
/// Order 2: `cos 2a = 2(n−4)/(1−n)`. Order 3:
/// `8(n²−6n+5) cos 2a + (n−1)² cos²a (3 cos 2a − 1) + 20n² − 188n + 408 = 0`,
/// a quadratic in `x = cos²a`. When several roots qualify the smallest angle
/// is returned; for `7 ≤ n ≤ 40` there is never more than one.
pub fn pole_angle(order: u32, n: u32) -> Result<Option<f64>> {
    let nmin = order_threshold(order)?;
    if n < nmin {
        return Err(Error::precondition(format!("order-{order} pole condition needs n ≥ {nmin}, got {n}")));
    }
    let nf = n as f64;
    let m = nf - 1.0;
    if order == 2 {
        let c = 2.0 * (nf - 4.0) / (1.0 - nf);
        return Ok((c.abs() < 1.0).then(|| 0.5 * c.acos()));
    }
    let a2 = 6.0 * m * m;
    let a1 = 16.0 * m * (nf - 5.0) - 4.0 * m * m;
    let a0 = 20.0 * nf * nf - 188.0 * nf + 408.0 - 8.0 * m * (nf - 5.0);
    let mut angles: Vec<f64> =
        quadratic_roots(a2, a1, a0).into_iter().filter(|&x| x > 0.0 && x < 1.0).map(|x| x.sqrt().acos()).collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles.first().copied())
}

fn need(f: &Jet<f64>, order: usize) -> Result<()> {
    if f.order() < order {
        return Err(Error::Arity(format!("residual needs an f-jet of order {order}, got {}", f.order())));
    }
    Ok(())
}

/// `(n−1) cos 2a + 2 f f'' + 2(n−4) f'²`.
pub fn biharmonic_residual(n: u32, a: f64, f: &Jet<f64>) -> Result<f64> {
    need(f, 2)?;
    let (f0, f1, f2) = (f.deriv(0), f.deriv(1), f.deriv(2));
    let nf = n as f64;
    Ok((nf - 1.0) * (2.0 * a).cos() + 2.0 * f0 * f2 + 2.0 * (nf - 4.0) * f1 * f1)
}

/// The triharmonicity condition for general `n` and `a`.
pub fn triharmonic_residual(n: u32, a: f64, f: &Jet<f64>) -> Result<f64> {
    need(f, 4)?;
    let (f0, f1, f2, f3, f4) = (f.deriv(0), f.deriv(1), f.deriv(2), f.deriv(3), f.deriv(4));
    let nf = n as f64;
    let m = nf - 1.0;
    let c2 = (2.0 * a).cos();
    let c = a.cos();
    let ff2 = f0 * f2;
    let p1 = f1 * f1;
    Ok(4.0 * m * (2.0 * c2 + 1.0) * ff2
        + 4.0 * p1 * (m * (2.0 * (nf - 5.0) * c2 + nf - 6.0) + (-2.0 * nf * nf + 33.0 * nf - 103.0) * ff2)
        + m * m * c * c * (3.0 * c2 - 1.0)
        - 4.0 * f0.powi(3) * f4
        + 4.0 * (11.0 - 2.0 * nf) * ff2 * ff2
        + 16.0 * (nf * nf - 10.0 * nf + 24.0) * p1 * p1
        - 12.0 * (nf - 5.0) * f0 * f0 * f3 * f1)
}

/// The triharmonicity condition at `n = 7`, `a = a₃`, as a jet of order
/// `f.order() − 4`:
/// `−3f³f⁗ − 9(ff'')² + (8√10−26)ff'' + 36f'⁴ − 18f²f‴f' + 2f'²(45ff'' + 8√10 − 35) − 16√10 + 34`.
pub fn main_residual_jet(f: &Jet<f64>) -> Result<Jet<f64>> {
    need(f, 4)?;
    let s10 = 10f64.sqrt();
    let d1 = f.shift()?;
    let d2 = d1.shift()?;
    let d3 = d2.shift()?;
    let d4 = d3.shift()?;
    let ff2 = f * &d2;
    let p1 = d1.square();
    let terms = [
        (f.powi(3) * d4).scale(-3.0),
        ff2.square().scale(-9.0),
        ff2.scale(8.0 * s10 - 26.0),
        p1.square().scale(36.0),
        (&(&f.square() * &d3) * &d1).scale(-18.0),
        (&p1 * &ff2.scale(45.0).add_scalar(8.0 * s10 - 35.0)).scale(2.0),
    ];
    let sum = terms.iter().fold(Jet::zero(f.order() - 4), |acc, t| &acc + t);
    Ok(sum.add_scalar(-16.0 * s10 + 34.0))
}

pub fn main_residual(f: &Jet<f64>) -> Result<f64> {
    Ok(main_residual_jet(f)?.value())
}

/// Residual of the given order at `ρ` for a warping function, using the
/// pole angle for `n`.
pub fn ode_residual(order: u32, n: u32, a: f64, f: &Jet<f64>) -> Result<f64> {
    match order {
        2 => biharmonic_residual(n, a, f),
        3 => triharmonic_residual(n, a, f),
        _ => Err(Error::Unsupported(format!("warped-domain condition of order {order}"))),
    }
}

/// Result of integrating `f f'' + (n−4) f'² = n − 4`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootReport {
    pub n: u32,
    pub a: f64,
    pub rho0: f64,
    pub tolerance: f64,
    pub steps: usize,
    pub rejected: usize,
    /// `sup |f − ρ|` over accepted steps.
    pub max_deviation: f64,
    /// `sup |biharmonic residual|` over accepted steps.
    pub max_residual: f64,
    /// For `n = 5`: `sup |(f f' − ρ) − (f f' − ρ)(ρ₀)|`.
    pub first_integral_drift: Option<f64>,
    /// `(ρ, f, f')` at every accepted step.
    pub trajectory: Vec<[f64; 3]>,
}

/// One adaptive Dormand–Prince 5(4) integration of a two-dimensional system.
struct Dopri5<F> {
    rhs: F,
    atol: f64,
    rtol: f64,
}

impl<F: Fn(f64, [f64; 2]) -> Result<[f64; 2]>> Dopri5<F> {
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    /// Fifth-order weights minus the embedded fourth-order weights.
    const E: [f64; 7] =
        [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

    /// Integrates from `t0` to `t1`, calling `visit` at every accepted step.
    fn run(&self, t0: f64, y0: [f64; 2], t1: f64, mut visit: impl FnMut(f64, [f64; 2])) -> Result<(usize, usize)> {
        let (mut t, mut y) = (t0, y0);
        let mut h = (t1 - t0) * 1e-3;
        let (mut accepted, mut rejected) = (0usize, 0usize);
        visit(t, y);
        while t < t1 {
            if t + h > t1 {
                h = t1 - t;
            }
            if h < 1e-15 * t.abs().max(1.0) {
                return Err(Error::Accuracy { message: format!("step-size underflow at ρ = {t}"), estimate: h });
            }
            let mut k = [[0.0; 2]; 7];
            k[0] = (self.rhs)(t, y)?;
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    for d in 0..2 {
                        ys[d] += h * Self::A[s][j] * kj[d];
                    }
                }
                k[s] = (self.rhs)(t + Self::C[s] * h, ys)?;
            }
            // The seventh stage is evaluated at the fifth-order solution (FSAL).
            let mut y_new = y;
            for d in 0..2 {
                for (j, kj) in k.iter().enumerate().take(6) {
                    y_new[d] += h * Self::A[6][j] * kj[d];
                }
            }
            let mut err: f64 = 0.0;
            for d in 0..2 {
                let e: f64 = h * k.iter().zip(Self::E).map(|(kj, ej)| ej * kj[d]).sum::<f64>();
                let sc = self.atol + self.rtol * y[d].abs().max(y_new[d].abs());
                err = err.max((e / sc).abs());
            }
            if err <= 1.0 {
                t += h;
                y = y_new;
                accepted += 1;
                visit(t, y);
            } else {
                rejected += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        }
        Ok((accepted, rejected))
    }
}

/// Integrates `f'' = (n−4)(1 − f'²)/f` from `ρ₀` with `f = ρ₀`, `f' = 1`.
pub fn shoot_ode(n: u32, rho0: f64, tol: f64) -> Result<ShootReport> {
    if !(n == 5 || n == 6) {
        return Err(Error::precondition(format!("shooting is defined for n ∈ {{5, 6}}, got {n}")));
    }
    if !(rho0 > 0.0 && rho0 < 1.0) {
        return Err(Error::domain(format!("start point ρ₀ = {rho0} outside (0, 1)")));
    }
    let a = pole_angle(2, n)?.expect("n = 5, 6 have a pole angle");
    let c = (n - 4) as f64;
    let rhs = |_t: f64, y: [f64; 2]| -> Result<[f64; 2]> {
        if y[0] <= 0.0 {
            return Err(Error::Singularity("warping function reached zero".into()));
        }
        Ok([y[1], c * (1.0 - y[1] * y[1]) / y[0]])
    };
    let solver = Dopri5 { rhs, atol: tol, rtol: tol };
    let integral0 = rho0 * 1.0 - rho0;
    let mut trajectory = Vec::new();
    let (mut dev, mut res, mut drift) = (0.0f64, 0.0f64, 0.0f64);
    let (steps, rejected) = solver.run(rho0, [rho0, 1.0], 1.0, |t, y| {
        trajectory.push([t, y[0], y[1]]);
        dev = dev.max((y[0] - t).abs());
        let f2 = c * (1.0 - y[1] * y[1]) / y[0];
        let jet = Jet::from_derivatives([y[0], y[1], f2]);
        if let Ok(r) = biharmonic_residual(n, a, &jet) {
            res = res.max(r.abs());
        }
        drift = drift.max((y[0] * y[1] - t - integral0).abs());
    })?;
    Ok(ShootReport {
        n,
        a,
        rho0,
        tolerance: tol,
        steps,
        rejected,
        max_deviation: dev,
        max_residual: res,
        first_integral_drift: (n == 5).then_some(drift),
        trajectory,
    })
}

/// `α + β√10` with integer parts; equality and sign are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Q10 {
    pub rational: i128,
    pub irrational: i128,
}

impl Q10 {
    pub const fn new(rational: i128, irrational: i128) -> Self {
        Self { rational, irrational }
    }

    pub fn is_zero(&self) -> bool {
        self.rational == 0 && self.irrational == 0
    }

    /// Exact sign: compares `α²` with `10β²` when the parts disagree.
    pub fn signum(&self) -> Ordering {
        let (a, b) = (self.rational, self.irrational);
        match (a.cmp(&0), b.cmp(&0)) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (sa, sb) if sa == sb => sa,
            (sa, _) => {
                let lhs = a * a;
                let rhs = 10 * b * b;
                match lhs.cmp(&rhs) {
                    Ordering::Greater => sa,
                    Ordering::Less => sa.reverse(),
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.rational as f64 + self.irrational as f64 * 10f64.sqrt()
    }
}

impl std::ops::Sub for Q10 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.rational - rhs.rational, self.irrational - rhs.irrational)
    }
}

impl fmt::Display for Q10 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}*sqrt(10)",
            self.rational,
            if self.irrational < 0 { '-' } else { '+' },
            self.irrational.abs()
        )
    }
}

/// `q(j) = −6j³ − 27j² + (4√10 + 2)j + 12(2 + √10)`.
pub fn q(j: i64) -> Q10 {
    let j = j as i128;
    Q10::new(-6 * j * j * j - 27 * j * j + 2 * j + 24, 4 * j + 12)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QValue {
    pub j: i64,
    pub value: Q10,
    pub approx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesInductionReport {
    pub j_max: i64,
    pub all_nonzero: bool,
    /// Indices `j` with `q(j) = 0` (empty when `all_nonzero`).
    pub zeros: Vec<i64>,
    /// `j` such that `q(j)` and `q(j+1)` have opposite signs.
    pub sign_changes: Vec<i64>,
    /// `q(j+1) < q(j)` for all `2 ≤ j < j_max`.
    pub decreasing_from_two: bool,
    /// The first few values.
    pub values: Vec<QValue>,
}

/// Evaluates `q` exactly at `j = 1..=j_max`.
pub fn series_induction_check(j_max: i64) -> Result<SeriesInductionReport> {
    if j_max < 1 {
        return Err(Error::precondition(format!("J = {j_max} must be at least 1")));
    }
    const CHUNK: i64 = 1 << 14;
    let chunks: Vec<(i64, i64)> =
        (0..=(j_max - 1) / CHUNK).map(|c| (1 + c * CHUNK, (1 + (c + 1) * CHUNK - 1).min(j_max))).collect();
    let partial: Vec<(Vec<i64>, Vec<i64>, bool)> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let (mut zeros, mut changes, mut decreasing) = (Vec::new(), Vec::new(), true);
            for j in lo..=hi {
                let v = q(j);
                if v.is_zero() {
                    zeros.push(j);
                }
                if j < j_max {
                    let w = q(j + 1);
                    if v.signum() != w.signum() {
                        changes.push(j);
                    }
                    if j >= 2 && (w - v).signum() != Ordering::Less {
                        decreasing = false;
                    }
                }
            }
            (zeros, changes, decreasing)
        })
        .collect();
    let mut zeros = Vec::new();
    let mut sign_changes = Vec::new();
    let mut decreasing_from_two = true;
    for (z, c, d) in partial {
        zeros.extend(z);
        sign_changes.extend(c);
        decreasing_from_two &= d;
    }
    let values = (1..=j_max.min(16)).map(|j| QValue { j, value: q(j), approx: q(j).to_f64() }).collect();
    Ok(SeriesInductionReport { j_max, all_nonzero: zeros.is_empty(), zeros, sign_changes, decreasing_from_two, values })
}

/// Taylor expansion of the `n = 7`, `a = a₃` residual at the pole for a
/// series warping function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleSeriesReport {
    pub warp: String,
    /// Taylor coefficients of the residual in `ρ`, powers `0..=max_power`.
    pub coefficients: Vec<f64>,
    /// Lowest `j` with `b_{2j+3} ≠ 0`.
    pub lowest_index: Option<usize>,
    /// `4 b_{2j+3} (2j+3) q(j)` for that `j`: the predicted coefficient of
    /// `ρ^{2j+2}`.
    pub predicted: Option<f64>,
    /// Residual coefficients vanish through the checked order.
    pub satisfied: bool,
}

/// Expands the residual at `ρ = 0` through `ρ^{max_power}`.
pub fn pole_series_check(warp: &WarpFn, max_power: usize) -> Result<PoleSeriesReport> {
    let b = match warp {
        WarpFn::Series(b) => b.clone(),
        WarpFn::Identity => Vec::new(),
        other => return Err(Error::Unsupported(format!("pole expansion of `{other}`; use a series"))),
    };
    if max_power + 4 > crate::jet::MAX_ORDER {
        return Err(Error::precondition(format!("expansion order {max_power} too large")));
    }
    let f = warp.compose(&Jet::<f64>::variable(0.0, max_power + 4));
    let r = main_residual_jet(&f)?;
    let mut fact = 1.0;
    let coefficients: Vec<f64> = (0..=max_power)
        .map(|m| {
            if m > 0 {
                fact *= m as f64;
            }
            r.deriv(m) / fact
        })
        .collect();
    let lowest_index = b.iter().position(|&c| c != 0.0);
    let predicted = lowest_index.map(|j| 4.0 * b[j] * (2 * j + 3) as f64 * q(j as i64).to_f64());
    let scale = 1.0 + b.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let satisfied = coefficients.iter().all(|c| c.abs() <= 1e-9 * scale.powi(4));
    Ok(PoleSeriesReport { warp: warp.to_string(), coefficients, lowest_index, predicted, satisfied })
}
