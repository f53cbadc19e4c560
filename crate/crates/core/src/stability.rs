//! Second variation of the r-energies at critical constant profiles.
//!
//! Along `α_s = a + s·v` a single quadrature in the
//! [`Perturbation2`] ring yields `E`, `dE/ds` and `d²E/ds²` at `s = 0`. A
//! negative second variation along an admissible direction proves that the
//! critical point is unstable.

use rayon::prelude::*;
use serde::Serialize;

use crate::criticality::conjecture_angle;
use crate::energy::{energy, EnergySpec, Variant};
use crate::error::{Error, Result};
use crate::geometry::{Bump, ModelPair, ProfileFamily};
use crate::quadrature::{Integral, TanhSinh};
use crate::scalar::Perturbation2;

/// Energy and its first two variations along a family, each with its
/// quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Variations {
    pub energy: f64,
    pub first: f64,
    pub second: f64,
    pub energy_error: f64,
    pub first_error: f64,
    pub second_error: f64,
    pub evaluations: usize,
}

impl From<Integral<Perturbation2>> for Variations {
    fn from(i: Integral<Perturbation2>) -> Self {
        Self {
            energy: i.value.v0,
            first: i.value.v1,
            second: i.value.v2,
            energy_error: i.error.v0,
            first_error: i.error.v1,
            second_error: i.error.v2,
            evaluations: i.evaluations,
        }
    }
}

/// Energy, first and second variation along `a + s·v`.
pub fn variations(a: f64, bump: &Bump, model: &ModelPair, spec: &EnergySpec, quad: &TanhSinh) -> Result<Variations> {
    let family = ProfileFamily::new(a, Some(*bump))?;
    family.check_admissible(spec.r)?;
    Ok(energy::<Perturbation2, _>(&family, model, spec, quad)?.into())
}

/// `d²E/ds²` at `s = 0` along `a + s·v`.
pub fn second_variation(
    a: f64,
    bump: &Bump,
    model: &ModelPair,
    spec: &EnergySpec,
    quad: &TanhSinh,
) -> Result<Integral<f64>> {
    let family = ProfileFamily::new(a, Some(*bump))?;
    family.check_admissible(spec.r)?;
    let e = energy::<Perturbation2, _>(&family, model, spec, quad)?;
    Ok(Integral { value: e.value.v2, error: e.error.v2, levels: e.levels, evaluations: e.evaluations })
}

/// Central finite differences of `E(s)` in `s`, computed on a fixed
/// quadrature rule so that the discrete energy is a smooth function of `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteDifferenceCheck {
    pub step: f64,
    pub level: u32,
    pub ad_first: f64,
    pub fd_first: f64,
    pub ad_second: f64,
    pub fd_second: f64,
}

impl FiniteDifferenceCheck {
    pub fn first_rel_error(&self) -> f64 {
        (self.ad_first - self.fd_first).abs() / self.ad_first.abs().max(self.fd_first.abs()).max(1e-300)
    }

    pub fn second_rel_error(&self) -> f64 {
        (self.ad_second - self.fd_second).abs() / self.ad_second.abs().max(1e-300)
    }
}

/// Compares the ring-valued variations with central differences of step `h`
/// on the fixed tanh-sinh rule of the given level.
pub fn finite_difference_check(
    family: &ProfileFamily,
    model: &ModelPair,
    spec: &EnergySpec,
    h: f64,
    level: u32,
) -> Result<FiniteDifferenceCheck> {
    let quad = TanhSinh::fixed(level);
    let ad = energy::<Perturbation2, _>(family, model, spec, &quad)?.value;
    let at = |s: f64| energy::<f64, _>(&family.at(s), model, spec, &quad).map(|i| i.value);
    let (em, e0, ep) = (at(-h)?, at(0.0)?, at(h)?);
    Ok(FiniteDifferenceCheck {
        step: h,
        level,
        ad_first: ad.v1,
        fd_first: (ep - em) / (2.0 * h),
        ad_second: ad.v2,
        fd_second: (ep - 2.0 * e0 + em) / (h * h),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRecord {
    pub case: String,
    pub r: u32,
    pub variant: Variant,
    pub n: u32,
    pub a: f64,
    pub bump: String,
    pub energy: f64,
    pub first_variation: f64,
    pub first_variation_error: f64,
    /// Whether `|dE/ds| ≤ first_variation_gate`, i.e. `a` is critical.
    pub critical: bool,
    pub first_variation_gate: f64,
    /// Calibrated second variation, `calibration_constant × raw`.
    pub second_variation: f64,
    pub second_variation_error: f64,
    pub raw_second_variation: f64,
    pub calibration_constant: f64,
    pub reference: Option<f64>,
    pub relative_deviation: Option<f64>,
    pub verdict: Verdict,
}

/// Gate on `|dE/ds|` before a second variation is interpreted.
pub const FIRST_VARIATION_GATE: f64 = 1e-8;

impl StabilityRecord {
    fn build(
        case: String,
        r: u32,
        variant: Variant,
        n: u32,
        a: f64,
        bump: &Bump,
        v: &Variations,
        calibration: f64,
        reference: Option<f64>,
    ) -> Self {
        let second = calibration * v.second;
        let error = calibration.abs() * v.second_error;
        let critical = v.first.abs() <= FIRST_VARIATION_GATE;
        let verdict = if critical && second < -10.0 * error { Verdict::Unstable } else { Verdict::Inconclusive };
        Self {
            case,
            r,
            variant,
            n,
            a,
            bump: bump.to_string(),
            energy: v.energy,
            first_variation: v.first,
            first_variation_error: v.first_error,
            critical,
            first_variation_gate: FIRST_VARIATION_GATE,
            second_variation: second,
            second_variation_error: error,
            raw_second_variation: v.second,
            calibration_constant: calibration,
            reference,
            relative_deviation: reference.map(|x| ((second - x) / x).abs()),
            verdict,
        }
    }
}

/// A named destabilizing direction at a critical constant profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityCase {
    pub id: &'static str,
    pub r: u32,
    pub variant: Variant,
    pub n: u32,
    pub k: u32,
}

impl StabilityCase {
    pub fn angle(&self) -> f64 {
        match (self.r, self.n) {
            (2, 6) => 0.5 * (-0.8f64).acos(),
            _ => conjecture_angle(self.r).expect("r ≥ 2").1,
        }
    }

    pub fn bump(&self) -> Bump {
        Bump::power(self.k)
    }

    pub fn spec(&self) -> EnergySpec {
        EnergySpec::new(self.r, self.variant).expect("case specs are valid")
    }

    /// Closed-form second variation, when known.
    pub fn reference_value(&self) -> Option<f64> {
        match self.id {
            "r3-n7" => Some(ref_r3()),
            "r4-n9-std" => Some(ref_r4_std()),
            "r4-n9-es" => Some(ref_r4_es()),
            "r5-n11-std" => Some(ref_r5_std()),
            "r5-n11-es" => Some(ref_r5_es()),
            _ => None,
        }
    }
}

fn ref_r3() -> f64 {
    2948.0 * (2.0f64 / 5.0).sqrt() / 63.0 - 12812.0 / 315.0
}

fn ref_r4_std() -> f64 {
    9799.0 * 5f64.sqrt() / (12.0 * 21f64.sqrt()) - 43415.0 / 84.0
}

fn ref_r4_es() -> f64 {
    2546.0 * 5f64.sqrt() / (3.0 * 21f64.sqrt()) - 11090.0 / 21.0
}

fn ref_r5_std() -> f64 {
    48.0 * (47124133.0 * 6f64.sqrt() - 116365497.0) / 446875.0
}

fn ref_r5_es() -> f64 {
    let s6 = 6f64.sqrt();
    128.0 * (268481902.0 * s6 + 60060.0 * (86362.0 * s6 - 197208.0).sqrt() - 673907943.0) / 7596875.0
}

/// The five cases with closed-form values followed by the two `r = 2` cases.
/// At `n = 6` the direction `(1−ρ)²` has positive second variation (`1/6`),
/// so that case uses `(1−ρ)³`.
pub const CASES: [StabilityCase; 7] = [
    StabilityCase { id: "r3-n7", r: 3, variant: Variant::Standard, n: 7, k: 3 },
    StabilityCase { id: "r4-n9-std", r: 4, variant: Variant::Standard, n: 9, k: 4 },
    StabilityCase { id: "r4-n9-es", r: 4, variant: Variant::Es, n: 9, k: 4 },
    StabilityCase { id: "r5-n11-std", r: 5, variant: Variant::Standard, n: 11, k: 7 },
    StabilityCase { id: "r5-n11-es", r: 5, variant: Variant::Es, n: 11, k: 8 },
    StabilityCase { id: "r2-n5", r: 2, variant: Variant::Standard, n: 5, k: 2 },
    StabilityCase { id: "r2-n6", r: 2, variant: Variant::Standard, n: 6, k: 3 },
];

pub fn case_by_id(id: &str) -> Result<&'static StabilityCase> {
    CASES.iter().find(|c| c.id == id).ok_or_else(|| Error::Parse(format!("unknown stability case `{id}`")))
}

pub fn case_variations(case: &StabilityCase, quad: &TanhSinh) -> Result<Variations> {
    let model = ModelPair::ball_to_sphere(case.n)?;
    variations(case.angle(), &case.bump(), &model, &case.spec(), quad)
}

/// `reference / computed` for the `r = 3` case.
pub fn calibration_constant(quad: &TanhSinh) -> Result<f64> {
    let case = &CASES[0];
    let v = case_variations(case, quad)?;
    Ok(case.reference_value().expect("r = 3 has a reference") / v.second)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilitySuite {
    pub calibration_case: &'static str,
    pub calibration_constant: f64,
    pub records: Vec<StabilityRecord>,
}

/// Runs the given cases, calibrating on the `r = 3` case.
pub fn run_cases(cases: &[StabilityCase], quad: &TanhSinh) -> Result<StabilitySuite> {
    let calibration_case = &CASES[0];
    let mut todo: Vec<&StabilityCase> = vec![calibration_case];
    todo.extend(cases.iter().filter(|c| c.id != calibration_case.id));
    let raw: Vec<Variations> = todo.par_iter().map(|c| case_variations(c, quad)).collect::<Result<_>>()?;
    let calibration = calibration_case.reference_value().expect("r = 3 has a reference") / raw[0].second;
    let records = todo
        .iter()
        .zip(&raw)
        .filter(|(c, _)| cases.iter().any(|x| x.id == c.id))
        .map(|(c, v)| {
            StabilityRecord::build(
                format!("stability/{}", c.id),
                c.r,
                c.variant,
                c.n,
                c.angle(),
                &c.bump(),
                v,
                calibration,
                c.reference_value(),
            )
        })
        .collect();
    Ok(StabilitySuite { calibration_case: calibration_case.id, calibration_constant: calibration, records })
}

/// All seven cases.
pub fn reference_stability_suite(quad: &TanhSinh) -> Result<StabilitySuite> {
    run_cases(&CASES, quad)
}

/// A single generic evaluation with a supplied calibration constant.
pub fn generic_record(
    r: u32,
    variant: Variant,
    n: u32,
    a: f64,
    bump: &Bump,
    calibration: f64,
    quad: &TanhSinh,
) -> Result<StabilityRecord> {
    let spec = EnergySpec::new(r, variant)?;
    let model = ModelPair::ball_to_sphere(n)?;
    let v = variations(a, bump, &model, &spec, quad)?;
    Ok(StabilityRecord::build(
        format!("stability/r{r}-n{n}-{variant}-{bump}"),
        r,
        variant,
        n,
        a,
        bump,
        &v,
        calibration,
        None,
    ))
}
