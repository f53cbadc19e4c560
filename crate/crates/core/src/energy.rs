//! Tension field, the T-recursion and the r-energy Lagrangians.
//!
//! For a radial profile `α` the reduced quantities are
//!
//! ```text
//! T₂      = τ = α̈ + (n−1)(ḟ/f)α̇ − (n−1)h(α)h'(α)/f²
//! T_{2k}  = T̈_{2k−2} + (n−1)(ḟ/f)Ṫ_{2k−2} − (n−1)(h'(α)²/f²)T_{2k−2}
//! T²_{2k+1} = Ṫ²_{2k} + (n−1)(h'(α)²/f²)T²_{2k}
//! L_r     = ½ T_r² f^{n−1}
//! ```
//!
//! Odd orders only ever enter squared, so the square root is taken only when
//! `T_{2k+1}` itself is requested.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ModelPair, RadialProfile, WarpFn};
use crate::jet::Jet;
use crate::quadrature::{Integral, TanhSinh};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[serde(rename = "std")]
    Standard,
    Es,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Standard => "std",
            Variant::Es => "es",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "std" | "standard" => Ok(Variant::Standard),
            "es" => Ok(Variant::Es),
            other => Err(Error::Parse(format!("unknown variant `{other}`"))),
        }
    }
}

/// Which functional to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct EnergySpec {
    pub r: u32,
    pub variant: Variant,
}

impl EnergySpec {
    /// The Eells–Sampson variant is available for `r ≤ 5`; for `r ∈ {2, 3}`
    /// it coincides with the standard energy.
    pub fn new(r: u32, variant: Variant) -> Result<Self> {
        if r < 2 {
            return Err(Error::domain(format!("energy order r = {r} must be at least 2")));
        }
        if variant == Variant::Es && r > 5 {
            return Err(Error::Unsupported(format!("Eells–Sampson energy for r = {r}")));
        }
        Ok(Self { r, variant })
    }

    pub fn standard(r: u32) -> Result<Self> {
        Self::new(r, Variant::Standard)
    }

    pub fn es(r: u32) -> Result<Self> {
        Self::new(r, Variant::Es)
    }

    /// Number of ρ-derivatives of `α` consumed by the Lagrangian.
    pub fn jet_order(&self) -> usize {
        self.r as usize
    }

    /// Whether this spec evaluates any term beyond the standard Lagrangian.
    pub fn has_es_terms(&self) -> bool {
        self.variant == Variant::Es && self.r >= 4
    }
}

fn check_domain<S: Scalar>(f: &Jet<S>) -> Result<()> {
    let f0 = f.value().value();
    if f0 > 0.0 && f0.is_finite() {
        Ok(())
    } else {
        Err(Error::Singularity(format!("domain warping function is {f0} at the base point")))
    }
}

/// Tension jet of order `alpha.order() − 2`.
pub fn tension<S: Scalar>(n: u32, f: &Jet<f64>, target: &WarpFn, alpha: &Jet<S>) -> Result<Jet<S>> {
    let f: Jet<S> = f.lift();
    check_domain(&f)?;
    let local = Local::new(n, &f, target, alpha)?;
    Ok(local.tau)
}

/// Per-point coefficient jets shared by the tension and the recursion.
struct Local<S> {
    n1: f64,
    /// `(n−1) ḟ/f`
    drift: Jet<S>,
    /// `(n−1) h'(α)²/f²`
    coupling: Jet<S>,
    tau: Jet<S>,
}

impl<S: Scalar> Local<S> {
    fn new(n: u32, f: &Jet<S>, target: &WarpFn, alpha: &Jet<S>) -> Result<Self> {
        if alpha.order() < 2 {
            return Err(Error::Arity(format!("tension needs an α-jet of order ≥ 2, got {}", alpha.order())));
        }
        let n1 = (n - 1) as f64;
        let f2 = f.square();
        let drift = f.shift()?.div(f).scale(n1);
        let h = target.compose(alpha);
        let hp = target.compose_deriv(alpha, 1);
        let coupling = hp.square().div(&f2).scale(n1);
        let da = alpha.shift()?;
        let dda = da.shift()?;
        let tau = &(&dda + &(&drift * &da)) - &(&h * &hp).div(&f2).scale(n1);
        Ok(Self { n1, drift, coupling, tau })
    }

    /// `T̈ + drift·Ṫ − coupling·T`, order reduced by two.
    fn step(&self, t: &Jet<S>) -> Result<Jet<S>> {
        let dt = t.shift()?;
        let ddt = dt.shift()?;
        Ok(&(&ddt + &(&self.drift * &dt)) - &(&self.coupling * t))
    }
}

/// The even members `T₂ = τ, T₄, …` as jets, plus what is needed to form the
/// odd members at the base point.
#[derive(Debug, Clone)]
pub struct TStack<S> {
    evens: Vec<Jet<S>>,
    coupling: S,
}

impl<S: Scalar> TStack<S> {
    /// Builds every member needed for `T_r`: evens through `T_r` for even
    /// `r`, and through `T_{r−1}` with one extra derivative for odd `r`.
    pub fn new(n: u32, f: &Jet<f64>, target: &WarpFn, alpha: &Jet<S>, r: u32) -> Result<Self> {
        if (alpha.order() as u32) < r.max(2) {
            return Err(Error::Arity(format!("T_{r} needs an α-jet of order {r}, got {}", alpha.order())));
        }
        let f: Jet<S> = f.lift();
        check_domain(&f)?;
        let local = Local::new(n, &f, target, alpha)?;
        Self::from_local(&local, (r / 2).max(1) as usize)
    }

    fn from_local(local: &Local<S>, count: usize) -> Result<Self> {
        let mut evens = Vec::with_capacity(count);
        evens.push(local.tau.clone());
        for i in 1..count {
            let next = local.step(&evens[i - 1])?;
            evens.push(next);
        }
        Ok(Self { evens, coupling: local.coupling.value() })
    }

    /// The jet of `T_k` for even `k ≥ 2`.
    pub fn even(&self, k: u32) -> Option<&Jet<S>> {
        if k < 2 || k % 2 == 1 {
            return None;
        }
        self.evens.get(k as usize / 2 - 1)
    }

    /// `T_k²` for odd `k ≥ 3`, formed without a square root.
    pub fn odd_squared(&self, k: u32) -> Option<S> {
        if k < 3 || k.is_multiple_of(2) {
            return None;
        }
        let t = self.even(k - 1)?;
        let dt = t.shift().ok()?.value();
        let t0 = t.value();
        Some(dt * dt + self.coupling * t0 * t0)
    }

    /// `T_k²` at the base point for any `k ≥ 2`.
    pub fn squared(&self, k: u32) -> Option<S> {
        if k.is_multiple_of(2) {
            self.even(k).map(|t| t.value().square())
        } else {
            self.odd_squared(k)
        }
    }
}

impl TStack<f64> {
    /// `T_k` for odd `k`, with rounding in `[−1e-15, 0)` clamped to zero.
    pub fn odd(&self, k: u32) -> Result<f64> {
        let sq = self.odd_squared(k).ok_or_else(|| Error::Arity(format!("T_{k} is not an available odd member")))?;
        if sq >= 0.0 {
            Ok(sq.sqrt())
        } else if sq >= -1e-15 {
            Ok(0.0)
        } else {
            Err(Error::domain(format!("T_{k}² = {sq:e} is negative")))
        }
    }
}

/// The Lagrangian at `rho` for the given profile.
pub fn lagrangian<S, P>(rho: f64, profile: &P, model: &ModelPair, spec: &EnergySpec) -> Result<S>
where
    S: Scalar,
    P: RadialProfile + ?Sized,
{
    let alpha = profile.alpha_jet::<S>(rho, spec.jet_order());
    let f = model.domain.jet(rho, spec.jet_order())?;
    lagrangian_from_jets(model, spec, &f, &alpha)
}

/// The Lagrangian from an `f`-jet and an `α`-jet at a common base point.
pub fn lagrangian_from_jets<S: Scalar>(
    model: &ModelPair,
    spec: &EnergySpec,
    f: &Jet<f64>,
    alpha: &Jet<S>,
) -> Result<S> {
    let r = spec.r;
    if (alpha.order() as u32) < r {
        return Err(Error::Arity(format!("L_{r} needs an α-jet of order {r}, got {}", alpha.order())));
    }
    let fj: Jet<S> = f.lift();
    check_domain(&fj)?;
    let local = Local::new(model.n, &fj, &model.target, alpha)?;
    let stack = TStack::from_local(&local, (r / 2) as usize)?;
    let volume = fj.value().powi(model.n - 1);
    let tr2 = stack.squared(r).expect("stack built through T_r");
    let base = (tr2 * volume).scale(0.5);
    if !spec.has_es_terms() {
        return Ok(base);
    }

    let target = &model.target;
    let n1 = local.n1;
    let f0 = fj.value();
    let f2 = f0 * f0;
    let da = alpha.shift()?;
    let a1 = da.value();
    let tau = local.tau.value();
    let hpp = target.compose_deriv(alpha, 2);
    let hpp0 = hpp.value();

    let extra = match r {
        4 => (a1 * a1 * tau * tau * hpp0 * hpp0 / f2).scale(n1),
        5 => {
            let h = target.compose(alpha);
            let h0 = h.value();
            let hp0 = target.compose_deriv(alpha, 1).value();
            let g = (&(&da * &local.tau) * &hpp).try_div(&h)?;
            let dg = g.shift()?.value();
            let fdot_over_f = local.drift.value().scale(1.0 / n1);
            let bracket = h0 * dg + a1 * a1 * tau * hp0 * hpp0 / h0 + (a1 * tau * hpp0 * fdot_over_f).scale(n1 - 2.0);
            let t4 = stack.even(4).expect("stack built through T_4").value();
            let cross =
                a1 * a1 * tau * ((tau * hp0 * hp0 * hpp0 * hpp0 / f2).scale(n1) - (t4 * hpp0 * hpp0).scale(2.0));
            (bracket * bracket / f2).scale(n1) + (cross / f2).scale(n1)
        }
        _ => unreachable!("Eells–Sampson terms only exist for r = 4, 5"),
    };
    Ok(base + (extra * volume).scale(0.5))
}

/// Checks the integrability threshold `n ≥ 2r + 1` of the ball domain.
pub fn check_integrable(model: &ModelPair, spec: &EnergySpec) -> Result<()> {
    if model.domain == WarpFn::Identity && model.n < 2 * spec.r + 1 {
        return Err(Error::precondition(format!(
            "E_{} on the {}-ball is finite only for n ≥ {}",
            spec.r,
            model.n,
            2 * spec.r + 1
        )));
    }
    Ok(())
}

/// `∫₀¹ L dρ` by tanh-sinh quadrature. Over [`Perturbation2`](crate::Perturbation2)
/// the value, first and second slots are the energy and its first and second
/// variations along the family.
pub fn energy<S, P>(profile: &P, model: &ModelPair, spec: &EnergySpec, quad: &TanhSinh) -> Result<Integral<S>>
where
    S: Scalar,
    P: RadialProfile + ?Sized,
{
    check_integrable(model, spec)?;
    quad.integrate(|rho| lagrangian::<S, P>(rho, profile, model, spec))
}

/// `max |α̇ · T_{2(k+1)} · h''(α)/h(α)|` over `k = 0..=r−4` and the sample
/// points. Zero exactly when the Eells–Sampson and standard Euler–Lagrange
/// operators agree on the samples.
pub fn es_equivalence_witness<P>(profile: &P, model: &ModelPair, r: u32, samples: &[f64]) -> Result<f64>
where
    P: RadialProfile + ?Sized,
{
    if r < 4 {
        return Err(Error::precondition(format!("the witness is defined for r ≥ 4, got {r}")));
    }
    let count = (r - 3) as usize;
    let order = 2 * count;
    let mut worst = 0.0f64;
    for &rho in samples {
        let alpha = profile.alpha_jet::<f64>(rho, order);
        let f = model.domain.jet(rho, order)?;
        check_domain(&f)?;
        let local = Local::new(model.n, &f, &model.target, &alpha)?;
        let stack = TStack::from_local(&local, count)?;
        let a1 = alpha.deriv(1);
        let h = model.target.compose(&alpha).value();
        let hpp = model.target.compose_deriv(&alpha, 2).value();
        if hpp == 0.0 || a1 == 0.0 {
            continue;
        }
        if h == 0.0 {
            return Err(Error::Singularity(format!("h(α) = 0 at ρ = {rho}")));
        }
        for t in &stack.evens {
            worst = worst.max((a1 * t.value() * hpp / h).abs());
        }
    }
    Ok(worst)
}
