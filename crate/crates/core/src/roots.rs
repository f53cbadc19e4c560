//! One-dimensional root finding: Brent's method, grid bracketing, and real
//! roots of low-degree polynomials.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Brent's method on a bracket `[a, b]` with `f(a)·f(b) ≤ 0`.
pub fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::precondition(format!("root not bracketed in [{a}, {b}]")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::Accuracy {
        message: format!("Brent did not converge in {max_iter} iterations"),
        estimate: (c - b).abs(),
    })
}

/// Sign-change brackets of `values` sampled at `xs`.
///
/// Exact zeros on the grid produce a degenerate bracket `(x, x)`.
pub fn sign_change_brackets(xs: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..xs.len() {
        if values[i] == 0.0 {
            out.push((xs[i], xs[i]));
            continue;
        }
        if i + 1 < xs.len() && values[i + 1] != 0.0 && values[i].signum() != values[i + 1].signum() {
            out.push((xs[i], xs[i + 1]));
        }
    }
    out
}

/// Sorts and removes values closer than `tol` to their predecessor.
pub fn dedup_sorted(mut xs: Vec<f64>, tol: f64) -> Vec<f64> {
    xs.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::with_capacity(xs.len());
    for x in xs {
        if out.last().is_none_or(|&y| (x - y).abs() > tol) {
            out.push(x);
        }
    }
    out
}

/// Dense real polynomial, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self { coeffs };
        while p.coeffs.len() > 1 && *p.coeffs.last().unwrap() == 0.0 {
            p.coeffs.pop();
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::new(vec![0.0]);
        }
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(i, &c)| c * i as f64).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// All real roots, ascending. Linear and quadratic cases are solved in
    /// closed form (cancellation-free quadratic formula); higher degrees use
    /// the eigenvalues of the companion matrix followed by Newton polishing.
    pub fn real_roots(&self) -> Vec<f64> {
        let c = &self.coeffs;
        let mut roots = match self.degree() {
            0 => Vec::new(),
            1 => vec![-c[0] / c[1]],
            2 => quadratic_roots(c[2], c[1], c[0]),
            _ => self.companion_real_roots(),
        };
        roots.sort_by(|a, b| a.total_cmp(b));
        roots
    }

    /// Real roots strictly inside `(lo, hi)`.
    pub fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.real_roots().into_iter().filter(|&x| x > lo && x < hi).collect()
    }

    fn companion_real_roots(&self) -> Vec<f64> {
        let n = self.degree();
        let lead = self.coeffs[n];
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            m[(i, n - 1)] = -self.coeffs[i] / lead;
        }
        let eig = m.complex_eigenvalues();
        let dp = self.derivative();
        let mut out = Vec::new();
        for z in eig.iter() {
            if z.im.abs() > 1e-7 * z.norm().max(1.0) {
                continue;
            }
            let mut x = z.re;
            for _ in 0..8 {
                let d = dp.eval(x);
                if d == 0.0 {
                    break;
                }
                let step = self.eval(x) / d;
                x -= step;
                if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                    break;
                }
            }
            // Reject near-real conjugate pairs whose polish did not land on a root.
            let magnitude: f64 = self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x.abs() + c.abs());
            if self.eval(x).abs() <= 1e-8 * magnitude {
                out.push(x);
            }
        }
        out
    }
}

/// Real roots of `a x² + b x + c`.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { Vec::new() } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    let q = -0.5 * (b + disc.sqrt().copysign(b));
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}
