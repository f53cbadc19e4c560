//! The acceptance criteria of the engine as runnable checks.
//!
//! Each criterion returns a list of sub-checks; [`criteria`] pairs them with
//! their ids and time budgets. The `acceptance` test target runs them all.

use std::f64::consts::PI;

use num_rational::Ratio;
use polyharm::criticality::{conjecture_angle, dimension_scan, find_critical_angles, sobolev_check, ScanOptions};
use polyharm::ellipsoid::{self, EllipsoidConfig};
use polyharm::energy::{energy, EnergySpec, Variant};
use polyharm::stability::{case_by_id, finite_difference_check, reference_stability_suite};
use polyharm::warped::{main_residual, pole_angle, series_induction_check, shoot_ode};
use polyharm::{AffineProfile, Jet, ModelPair, ProfileFamily, TanhSinh, WarpFn};

pub struct Check {
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn half_arccos(x: f64) -> f64 {
    0.5 * x.acos()
}

fn closed_forms() -> Vec<(u32, u32, f64)> {
    let s = f64::sqrt;
    vec![
        (2, 5, PI / 3.0),
        (2, 6, half_arccos(-0.8)),
        (3, 7, half_arccos((2.0 * s(10.0) - 11.0) / 9.0)),
        (4, 9, half_arccos((s(105.0) - 19.0) / 16.0)),
        (5, 11, half_arccos((6.0 * s(6.0) - 29.0) / 25.0)),
    ]
}

pub fn critical_angles() -> Vec<Check> {
    let opts = ScanOptions::default();
    closed_forms()
        .into_iter()
        .map(|(r, n, expected)| match find_critical_angles(r, Variant::Standard, n, &opts) {
            Ok(scan) => {
                let roots: Vec<f64> = scan.roots.iter().map(|c| c.a).collect();
                let pass = roots.len() == 1 && (roots[0] - expected).abs() <= 1e-8;
                let dev = roots.first().map_or(f64::NAN, |a| (a - expected).abs());
                Check::new(pass, format!("r={r} n={n}: roots {roots:?}, |Δ| = {dev:.2e}"))
            }
            Err(e) => Check::new(false, format!("r={r} n={n}: {e}")),
        })
        .collect()
}

pub fn dimension_exclusivity() -> Vec<Check> {
    let opts = ScanOptions::default();
    let expected = closed_forms();
    [(2, 5), (3, 7), (4, 9), (5, 11)]
        .into_iter()
        .map(|(r, n_min)| match dimension_scan(r, Variant::Standard, n_min, 20, &opts) {
            Ok(scans) => {
                let hits: Vec<(u32, usize)> =
                    scans.iter().filter(|s| !s.roots.is_empty()).map(|s| (s.n, s.roots.len())).collect();
                let want: Vec<(u32, usize)> =
                    expected.iter().filter(|(rr, _, _)| *rr == r).map(|&(_, n, _)| (n, 1)).collect();
                Check::new(hits == want, format!("r={r} n∈[{n_min},20]: roots at (n, count) {hits:?}"))
            }
            Err(e) => Check::new(false, format!("r={r}: {e}")),
        })
        .collect()
}

pub fn conjecture() -> Vec<Check> {
    let opts = ScanOptions::default();
    (6..=8)
        .map(|r| {
            let (n, a) = conjecture_angle(r).expect("r ≥ 2");
            match find_critical_angles(r, Variant::Standard, n, &opts) {
                Ok(scan) => {
                    let roots: Vec<f64> = scan.roots.iter().map(|c| c.a).collect();
                    let pass = roots.len() == 1 && (roots[0] - a).abs() <= 1e-7;
                    Check::new(pass, format!("r={r} n={n}: roots {roots:?}, conjectured {a:.15}"))
                }
                Err(e) => Check::new(false, format!("r={r}: {e}")),
            }
        })
        .collect()
}

pub fn instability() -> Vec<Check> {
    let suite = match reference_stability_suite(&TanhSinh::default()) {
        Ok(s) => s,
        Err(e) => return vec![Check::new(false, e.to_string())],
    };
    let mut out = vec![Check::new(
        suite.calibration_constant.is_finite(),
        format!("calibration constant {:.15} from {}", suite.calibration_constant, suite.calibration_case),
    )];
    for id in ["r3-n7", "r4-n9-std", "r4-n9-es", "r5-n11-std", "r5-n11-es"] {
        let case = format!("stability/{id}");
        let Some(rec) = suite.records.iter().find(|r| r.case == case) else {
            out.push(Check::new(false, format!("{id}: missing")));
            continue;
        };
        let dev = rec.relative_deviation.unwrap_or(f64::INFINITY);
        out.push(Check::new(
            dev <= 1e-6 && rec.second_variation < 0.0,
            format!(
                "{id}: d²E/ds² = {:.10}, reference {:.10}, relative deviation {dev:.2e}",
                rec.second_variation,
                rec.reference.unwrap_or(f64::NAN)
            ),
        ));
    }
    out
}

pub fn es_identities() -> Vec<Check> {
    let quad = TanhSinh::default();
    let mut out = Vec::new();
    for (r, n) in [(4, 9), (5, 11)] {
        let model = ModelPair::ball_to_sphere(n).unwrap();
        let mut worst: f64 = 0.0;
        for a in [0.3, 0.7, 1.1, 1.4] {
            let p = ProfileFamily::constant(a).unwrap();
            let std = energy::<f64, _>(&p, &model, &EnergySpec::standard(r).unwrap(), &quad).unwrap().value;
            let es = energy::<f64, _>(&p, &model, &EnergySpec::es(r).unwrap(), &quad).unwrap().value;
            worst = worst.max((std - es).abs() / std.abs());
        }
        out.push(Check::new(
            worst <= 1e-12,
            format!("E_{r}^ES = E_{r} on constant profiles, n={n}: worst relative {worst:.2e}"),
        ));

        let opts = ScanOptions::default();
        let roots = |v| find_critical_angles(r, v, n, &opts).map(|s| s.roots.iter().map(|c| c.a).collect::<Vec<_>>());
        match (roots(Variant::Standard), roots(Variant::Es)) {
            (Ok(s), Ok(e)) => {
                let pass = s.len() == e.len() && !s.is_empty() && s.iter().zip(&e).all(|(x, y)| (x - y).abs() <= 1e-9);
                out.push(Check::new(pass, format!("critical roots r={r} n={n}: standard {s:?}, es {e:?}")));
            }
            (s, e) => out.push(Check::new(false, format!("r={r} n={n}: {:?} / {:?}", s.err(), e.err()))),
        }
    }
    out
}

pub fn ad_correctness() -> Vec<Check> {
    let mut out = Vec::new();
    for id in ["r3-n7", "r4-n9-std", "r4-n9-es", "r5-n11-std", "r5-n11-es", "r2-n5", "r2-n6"] {
        let case = case_by_id(id).unwrap();
        let model = ModelPair::ball_to_sphere(case.n).unwrap();
        // At the critical angle dE/ds vanishes, so the first variation is
        // compared away from it as well.
        for (label, a) in [("critical", case.angle()), ("shifted", case.angle() - 0.1)] {
            let family = ProfileFamily::new(a, Some(case.bump())).unwrap();
            match finite_difference_check(&family, &model, &case.spec(), 1e-4, 7) {
                Ok(fd) => {
                    let (e1, e2) = (fd.first_rel_error(), fd.second_rel_error());
                    let pass = e2 <= 1e-6 && (label == "critical" || e1 <= 1e-6);
                    let first = if label == "critical" {
                        format!("|dE/ds| ad {:.1e} fd {:.1e}", fd.ad_first.abs(), fd.fd_first.abs())
                    } else {
                        format!("first rel {e1:.1e}")
                    };
                    out.push(Check::new(pass, format!("{id} {label}: {first}, second rel {e2:.1e}")));
                }
                Err(e) => out.push(Check::new(false, format!("{id} {label}: {e}"))),
            }
        }
    }
    let model = ModelPair::new(7, WarpFn::Identity, WarpFn::Identity).unwrap();
    let identity = AffineProfile { c0: 0.0, c1: 1.0 };
    for r in 2..=3 {
        let e = energy::<f64, _>(&identity, &model, &EnergySpec::standard(r).unwrap(), &TanhSinh::default());
        match e {
            Ok(i) => out
                .push(Check::new(i.value.abs() <= 1e-14, format!("harmonic identity map, r={r}: E = {:.1e}", i.value))),
            Err(e) => out.push(Check::new(false, format!("harmonic identity map, r={r}: {e}"))),
        }
    }
    out
}

pub fn ellipsoid_windows() -> Vec<Check> {
    let mut out = Vec::new();
    for (order, n_min) in [(2, 5), (3, 7)] {
        match ellipsoid::window_grid(order, n_min, 14) {
            Ok(grid) => {
                let bad: Vec<_> = grid.iter().filter(|s| !s.consistent()).map(|s| (s.n, s.b2)).collect();
                out.push(Check::new(
                    bad.is_empty(),
                    format!("order {order}, n∈[{n_min},14]: {} samples, inconsistent {bad:?}", grid.len()),
                ));
            }
            Err(e) => out.push(Check::new(false, format!("order {order}: {e}"))),
        }
    }

    let mut exact = true;
    for n in 7..=20u32 {
        let expected = Ratio::from_integer(-15 * (n as i128 * n as i128 - 8 * n as i128 + 15));
        for b2 in [Ratio::new(1, 7), Ratio::new(1, 1), Ratio::new(5, 3), Ratio::new(22, 9)] {
            let c = ellipsoid::triharmonic_polynomial_exact(n, b2);
            exact &= c.iter().sum::<Ratio<i128>>() == expected;
        }
    }
    out.push(Check::new(exact, "P_b(1) = −15(n²−8n+15) in exact arithmetic, n∈[7,20]"));

    let quad = TanhSinh::default();
    let s10 = 10f64.sqrt();
    for (order, n, a) in [(2, 5, PI / 3.0), (2, 6, half_arccos(-0.8)), (3, 7, half_arccos((2.0 * s10 - 11.0) / 9.0))] {
        let roots =
            if order == 2 { ellipsoid::biharmonic_angles(n, 1.0) } else { ellipsoid::triharmonic_angles(n, 1.0) };
        let config = EllipsoidConfig::new(n, 1.0).unwrap();
        let weak = ellipsoid::first_variation(a, &polyharm::Bump::power(order), &config, order, &quad);
        let dev = roots.iter().map(|x| (x - a).abs()).fold(f64::INFINITY, f64::min);
        let fv = weak.as_ref().map_or(f64::NAN, |i| i.value.abs());
        out.push(Check::new(
            roots.len() == 1 && dev <= 1e-10 && fv <= 1e-10,
            format!("b=1, order {order}, n={n}: roots {roots:?}, |Δ| = {dev:.1e}, |weak form| = {fv:.1e}"),
        ));
    }
    out
}

pub fn warped_rigidity() -> Vec<Check> {
    let mut out = Vec::new();
    for n in [5, 6] {
        match shoot_ode(n, 1e-6, 1e-12) {
            Ok(rep) => {
                let drift_ok = rep.first_integral_drift.is_none_or(|d| d <= 1e-10);
                out.push(Check::new(
                    rep.max_deviation <= 1e-8 && drift_ok,
                    format!(
                        "shooting n={n}: sup|f−ρ| = {:.1e}, residual {:.1e}, first integral drift {:?}",
                        rep.max_deviation, rep.max_residual, rep.first_integral_drift
                    ),
                ));
            }
            Err(e) => out.push(Check::new(false, format!("shooting n={n}: {e}"))),
        }
    }

    let worst =
        (1..100).map(|i| main_residual(&Jet::<f64>::variable(i as f64 / 100.0, 4)).unwrap().abs()).fold(0.0, f64::max);
    out.push(Check::new(worst <= 1e-12, format!("f = ρ in the n=7 equation: max residual {worst:.1e}")));

    let a3 = half_arccos((2.0 * 10f64.sqrt() - 11.0) / 9.0);
    let hits: Vec<(u32, f64)> = (7..=20).filter_map(|n| pole_angle(3, n).unwrap().map(|a| (n, a))).collect();
    let pass = hits.len() == 1 && hits[0].0 == 7 && (hits[0].1 - a3).abs() <= 1e-12;
    out.push(Check::new(pass, format!("triharmonic pole angles for n∈[7,20]: {hits:?}")));

    match series_induction_check(1_000_000) {
        Ok(rep) => out.push(Check::new(
            rep.all_nonzero,
            format!("q(j) ≠ 0 for j∈[1,10⁶] exactly; sign changes after j = {:?}", rep.sign_changes),
        )),
        Err(e) => out.push(Check::new(false, e.to_string())),
    }
    out
}

pub fn sobolev_table() -> Vec<Check> {
    let mut mismatches = Vec::new();
    for r in 2..=8 {
        for n in 3..=25 {
            let rep = sobolev_check(r, n).unwrap();
            let all = rep.constraints.iter().all(|c| c.holds);
            if rep.member != (n >= 2 * r + 1) || all != rep.member {
                mismatches.push((r, n));
            }
        }
    }
    vec![Check::new(mismatches.is_empty(), format!("r∈[2,8] × n∈[3,25]: mismatches {mismatches:?}"))]
}

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub run: fn() -> Vec<Check>,
    /// Wall-clock budget in seconds, when one is stated.
    pub budget: Option<u64>,
}

pub fn criteria() -> [Criterion; 9] {
    let c = |id, name, run, budget| Criterion { id, name, run, budget };
    [
        c(1, "critical angles", critical_angles as fn() -> Vec<Check>, Some(10)),
        c(2, "dimension exclusivity", dimension_exclusivity, Some(60)),
        c(3, "conjectured angles r=6,7,8", conjecture, Some(60)),
        c(4, "instability values", instability, Some(30)),
        c(5, "ES identities", es_identities, None),
        c(6, "AD correctness", ad_correctness, None),
        c(7, "ellipsoid windows", ellipsoid_windows, Some(60)),
        c(8, "warped-domain rigidity", warped_rigidity, Some(30)),
        c(9, "Sobolev truth table", sobolev_table, None),
    ]
}
