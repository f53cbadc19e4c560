//! Double-exponential (tanh-sinh) quadrature on `(0, 1)`.
//!
//! The substitution `ρ = 1 / (1 + exp(−π sinh t))` maps the real line onto the
//! open unit interval and makes integrands with algebraic endpoint behaviour
//! decay doubly exponentially, so the trapezoidal rule in `t` converges fast
//! without special-casing the endpoint powers of `ρ` that the radial
//! Lagrangians carry. Each level halves the step and reuses every previous
//! node. Nodes are clamped into `[RHO_MIN, RHO_MAX]`, so the integrand is never
//! evaluated at an exact endpoint.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const RHO_MIN: f64 = 1e-9;
pub const RHO_MAX: f64 = 1.0 - 1e-12;

/// Half-width of the truncated `t` range. At `t = 4` the weight is below 1e-35.
const T_MAX: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TanhSinh {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_level: u32,
    /// Convergence is not declared before this level.
    pub min_level: u32,
}

impl Default for TanhSinh {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-10, max_level: 10, min_level: 3 }
    }
}

/// Result of an integration: the value, a componentwise error estimate (the
/// difference between the last two refinement levels) and bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral<S> {
    pub value: S,
    pub error: S,
    pub levels: u32,
    pub evaluations: usize,
}

/// Neumaier-style compensated accumulator for ring-valued sums.
#[derive(Debug, Clone, Copy)]
struct Compensated<S> {
    sum: S,
    comp: S,
}

impl<S: Scalar> Compensated<S> {
    fn new() -> Self {
        Self { sum: S::zero(), comp: S::zero() }
    }

    #[inline]
    fn add(&mut self, x: S) {
        // Kahan form: only ring operations, valid componentwise for any Scalar.
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    fn total(&self) -> S {
        self.sum
    }
}

#[inline]
fn node(t: f64) -> (f64, f64) {
    let u = PI * t.sinh();
    // x = 1/(1+e^{-u}), 1-x = 1/(1+e^{u}); dx/dt = π cosh t · x(1−x).
    let x = 1.0 / (1.0 + (-u).exp());
    let xc = 1.0 / (1.0 + u.exp());
    let w = PI * t.cosh() * x * xc;
    (x.clamp(RHO_MIN, RHO_MAX), w)
}

impl TanhSinh {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }

    /// A non-adaptive rule: every node through `level`, no convergence test.
    pub fn fixed(level: u32) -> Self {
        Self { abs_tol: f64::INFINITY, rel_tol: 0.0, max_level: level, min_level: level }
    }

    /// Integrates `f` over `(0, 1)`.
    ///
    /// Convergence is declared when the level-to-level change drops below
    /// `max(abs_tol, rel_tol · ∫|f|)`. Measuring against the L1 mass rather
    /// than `|∫f|` keeps integrals that cancel to zero (first variations at a
    /// critical point) from being reported as unconverged.
    pub fn integrate<S, F>(&self, f: F) -> Result<Integral<S>>
    where
        S: Scalar,
        F: Fn(f64) -> Result<S>,
    {
        let mut sum = Compensated::<S>::new();
        let mut mass = Compensated::<S>::new();
        let mut evaluations = 0usize;

        let mut eval = |t: f64, sum: &mut Compensated<S>, mass: &mut Compensated<S>| -> Result<()> {
            let (x, w) = node(t);
            if w == 0.0 {
                return Ok(());
            }
            let y = f(x)?;
            if !y.max_abs().is_finite() {
                return Err(Error::Singularity(format!("integrand not finite at ρ = {x:e}")));
            }
            evaluations += 1;
            sum.add(y.scale(w));
            mass.add(y.abs_parts().scale(w));
            Ok(())
        };

        // Level 0: unit step.
        let n0 = T_MAX as i64;
        for k in -n0..=n0 {
            eval(k as f64, &mut sum, &mut mass)?;
        }
        let mut h = 1.0;
        let mut prev = sum.total();
        let mut diff = S::zero();

        for level in 1..=self.max_level {
            h *= 0.5;
            let odd_max = (T_MAX / h) as i64;
            let mut k = 1;
            while k <= odd_max {
                let t = k as f64 * h;
                eval(t, &mut sum, &mut mass)?;
                eval(-t, &mut sum, &mut mass)?;
                k += 2;
            }
            let current = sum.total().scale(h);
            diff = (current - prev).abs_parts();
            prev = current;
            let scale = mass.total().scale(h).max_abs();
            let target = self.abs_tol.max(self.rel_tol * scale);
            if level >= self.min_level && diff.max_abs() <= target {
                return Ok(Integral { value: current, error: diff, levels: level, evaluations });
            }
        }

        Err(Error::Accuracy {
            message: format!("tanh-sinh did not converge in {} levels", self.max_level),
            estimate: diff.max_abs(),
        })
    }
}
