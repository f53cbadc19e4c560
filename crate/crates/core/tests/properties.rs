use std::f64::consts::PI;

use approx::relative_eq;
use proptest::prelude::*;

use polyharm::criticality::sobolev_check;
use polyharm::ellipsoid::{self, EllipsoidConfig};
use polyharm::energy::{energy, lagrangian, EnergySpec, TStack};
use polyharm::roots::Polynomial;
use polyharm::stability::second_variation;
use polyharm::warped::{biharmonic_residual, pole_angle, Q10};
use polyharm::{Bump, Jet, ModelPair, Perturbation2, ProfileFamily, Scalar, TanhSinh, WarpFn};

fn jet(d: &[f64]) -> Jet<f64> {
    Jet::from_derivatives(d.iter().copied())
}

fn jets(order: usize) -> impl Strategy<Value = Jet<f64>> {
    prop::collection::vec(-2.0..2.0f64, order + 1).prop_map(|d| jet(&d))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    relative_eq!(a, b, epsilon = tol, max_relative = tol)
}

fn composite(x: &Jet<f64>) -> Jet<f64> {
    &(&x.sin() * &x.square()) + &x.square().add_scalar(1.0).sqrt().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_laws(a in jets(5), b in jets(5), c in jets(5)) {
        let ab_c = &(&a * &b) * &c;
        let a_bc = &a * &(&b * &c);
        let dist = &a * &(&b + &c);
        let expanded = &(&a * &b) + &(&a * &c);
        for i in 0..=5 {
            prop_assert!(close(ab_c.deriv(i), a_bc.deriv(i), 1e-9));
            prop_assert!(close(dist.deriv(i), expanded.deriv(i), 1e-9));
            prop_assert!(close((&a * &b).deriv(i), (&b * &a).deriv(i), 1e-12));
        }
    }

    #[test]
    fn jet_derivatives_match_finite_differences(x0 in -1.5..1.5f64) {
        let h = 1e-4;
        let j = composite(&Jet::<f64>::variable(x0, 2));
        let val = |x: f64| composite(&Jet::<f64>::variable(x, 0)).value();
        let (m, z, p) = (val(x0 - h), val(x0), val(x0 + h));
        prop_assert!(close(j.deriv(1), (p - m) / (2.0 * h), 1e-7));
        prop_assert!(close(j.deriv(2), (p - 2.0 * z + m) / (h * h), 1e-5));
    }

    #[test]
    fn division_inverts_multiplication(a in jets(4), c in 0.5..2.0f64, tail in prop::collection::vec(-1.0..1.0f64, 4)) {
        let mut d = vec![c];
        d.extend(tail);
        let b = jet(&d);
        let q = (&a * &b).div(&b);
        for i in 0..=4 {
            prop_assert!(close(q.deriv(i), a.deriv(i), 1e-9));
        }
    }

    #[test]
    fn perturbation_chain_rule(x in -2.0..2.0f64, v in -2.0..2.0f64, w in -2.0..2.0f64) {
        let p = Perturbation2::new(x, v, w);
        let s = p.sin();
        prop_assert!(close(s.v0, x.sin(), 1e-15));
        prop_assert!(close(s.v1, x.cos() * v, 1e-14));
        prop_assert!(close(s.v2, -x.sin() * v * v + x.cos() * w, 1e-13));
        let q = p.square();
        prop_assert!(close(q.v2, 2.0 * v * v + 2.0 * x * w, 1e-13));
    }

    #[test]
    fn constant_lagrangian_power_law(r in 2u32..=5, extra in 0u32..4, a in 0.05..1.5f64, rho in 0.01..1.0f64) {
        let n = 2 * r + 1 + extra;
        let model = ModelPair::ball_to_sphere(n).unwrap();
        let spec = EnergySpec::standard(r).unwrap();
        let p = ProfileFamily::constant(a).unwrap();
        let at = |x: f64| lagrangian::<f64, _>(x, &p, &model, &spec).unwrap();
        let expected = at(1.0) * rho.powi(n as i32 - 1 - 2 * r as i32);
        prop_assert!(close(at(rho), expected, 1e-10));
    }

    #[test]
    fn reflection_symmetry(r in 2u32..=4, a in 0.1..1.45f64) {
        let n = 2 * r + 2;
        let model = ModelPair::ball_to_sphere(n).unwrap();
        let spec = EnergySpec::standard(r).unwrap();
        let quad = TanhSinh::default();
        let e = |x: f64| energy::<f64, _>(&ProfileFamily::unchecked(x, None), &model, &spec, &quad).unwrap().value;
        prop_assert!(close(e(a), e(PI - a), 1e-10));
    }

    #[test]
    fn es_matches_standard_on_constants(r in 4u32..=5, a in 0.05..1.5f64, rho in 0.05..1.0f64) {
        let model = ModelPair::ball_to_sphere(2 * r + 1).unwrap();
        let p = ProfileFamily::constant(a).unwrap();
        let s = lagrangian::<f64, _>(rho, &p, &model, &EnergySpec::standard(r).unwrap()).unwrap();
        let e = lagrangian::<f64, _>(rho, &p, &model, &EnergySpec::es(r).unwrap()).unwrap();
        prop_assert!(close(s, e, 1e-12));
    }

    #[test]
    fn odd_tensions_dominate_derivative(a in 0.1..1.4f64, c in -0.5..0.5f64, rho in 0.05..0.95f64) {
        // α = a + cρ² keeps all T_k finite; T_3² = Ṫ² + coupling·T² ≥ Ṫ².
        let n = 7;
        let alpha = Jet::from_derivatives([a + c * rho * rho, 2.0 * c * rho, 2.0 * c, 0.0]);
        let f = WarpFn::Identity.jet(rho, 3).unwrap();
        let stack = TStack::new(n, &f, &WarpFn::Sine, &alpha, 3).unwrap();
        let tau = stack.even(2).unwrap();
        let t3 = stack.odd(3).unwrap();
        prop_assert!(t3 + 1e-12 * t3.abs().max(1.0) >= tau.deriv(1).abs());
    }

    #[test]
    fn sobolev_membership(r in 2u32..=8, n in 3u32..=40) {
        let rep = sobolev_check(r, n).unwrap();
        prop_assert_eq!(rep.member, n >= 2 * r + 1);
        prop_assert_eq!(rep.member, rep.constraints.iter().all(|c| c.holds));
    }

    #[test]
    fn polynomial_roots_are_recovered(mut roots in prop::collection::vec(-3.0..3.0f64, 1..5)) {
        roots.sort_by(f64::total_cmp);
        prop_assume!(roots.windows(2).all(|w| w[1] - w[0] > 1e-2));
        let p = roots.iter().fold(Polynomial::new(vec![1.0]), |acc, &x| acc.mul(&Polynomial::new(vec![-x, 1.0])));
        let found = p.real_roots();
        prop_assert_eq!(found.len(), roots.len());
        for (x, y) in found.iter().zip(&roots) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn q10_sign_matches_float(a in -1_000_000i128..1_000_000, b in -300_000i128..300_000) {
        let z = Q10::new(a, b);
        let x = z.to_f64();
        prop_assume!(x.abs() > 1e-6);
        prop_assert_eq!(z.signum(), x.partial_cmp(&0.0).unwrap());
    }

    #[test]
    fn ellipsoid_roots_iff_window(n in 5u32..=16, b2 in 0.01..3.0f64) {
        let b = b2.sqrt();
        let w = ellipsoid::window(2, n, b).unwrap();
        prop_assume!((w.b2 - w.bound).abs() > 1e-6);
        prop_assert_eq!(w.inside, !ellipsoid::biharmonic_angles(n, b).is_empty());
        if n >= 7 {
            let w3 = ellipsoid::window(3, n, b).unwrap();
            prop_assume!((w3.b2 - w3.bound).abs() > 1e-6);
            prop_assert_eq!(w3.inside, !ellipsoid::triharmonic_angles(n, b).is_empty());
        }
    }

    #[test]
    fn ellipsoid_unit_axis_is_twice_the_sphere(a in 0.1..1.4f64, rho in 0.05..1.0f64) {
        let config = EllipsoidConfig::new(7, 1.0).unwrap();
        let model = ModelPair::ball_to_sphere(7).unwrap();
        let p = ProfileFamily::constant(a).unwrap();
        let alpha = Jet::constant(a, 3);
        for order in [2u32, 3] {
            let ell = ellipsoid::lagrangian_from_jet(rho, &alpha, &config, order).unwrap();
            let sph: f64 = lagrangian(rho, &p, &model, &EnergySpec::standard(order).unwrap()).unwrap();
            prop_assert!(close(ell, 2.0 * sph, 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn second_variation_scales_quadratically(k in 3u32..=5, lambda in 0.2..3.0f64) {
        let model = ModelPair::ball_to_sphere(7).unwrap();
        let spec = EnergySpec::standard(3).unwrap();
        let quad = TanhSinh::default();
        let a = 0.8;
        let base = second_variation(a, &Bump::power(k), &model, &spec, &quad).unwrap().value;
        let scaled = second_variation(a, &Bump::power(k).scaled(lambda), &model, &spec, &quad).unwrap().value;
        prop_assert!(close(scaled, lambda * lambda * base, 1e-9));
    }

    #[test]
    fn biharmonic_pole_angle_solves_flat_residual(n in 5u32..=6, rho in 0.01..1.0f64) {
        let a = pole_angle(2, n).unwrap().unwrap();
        let f = Jet::<f64>::variable(rho, 2);
        prop_assert!(biharmonic_residual(n, a, &f).unwrap().abs() < 1e-13);
    }
}

#[test]
fn harmonic_identity_has_zero_energy() {
    let model = ModelPair::new(9, WarpFn::Identity, WarpFn::Identity).unwrap();
    let p = polyharm::AffineProfile { c0: 0.0, c1: 1.0 };
    for r in 2..=4 {
        let e = energy::<f64, _>(&p, &model, &EnergySpec::standard(r).unwrap(), &TanhSinh::default()).unwrap();
        assert!(e.value.abs() <= 1e-14);
    }
}
