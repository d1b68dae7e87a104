use std::f64::consts::PI;

use proptest::prelude::*;

use convexq::inequality::{
    self, AreaMeasure, CircleMeasure, InequalityReport, TrigSeries, Verdict,
};
use convexq::sphere::{build_rule, QuadratureRule, SphereField};
use convexq::suite::{random_bodies, random_symmetric_bodies, FieldSpec};
use convexq::{body::SupportFunction, Error};

fn rule3() -> QuadratureRule {
    build_rule(3, 24).unwrap()
}

fn field(seed: u64, n: usize) -> SphereField {
    FieldSpec::Random { seed, max_degree: 4, scale: 1.0 }.build(n).unwrap()
}

fn assert_nonnegative(r: &InequalityReport) -> Result<(), TestCaseError> {
    prop_assert!(r.gap >= -1e-6, "gap {} in {:?}", r.gap, r.metadata);
    prop_assert_eq!(r.verdict, Verdict::Pass);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn sphere_and_boundary_gaps(seed in 0u64..10_000, j in 1usize..3) {
        let rule = rule3();
        let h = random_bodies(3, 4, seed)[(seed % 4) as usize].build(3).unwrap();
        let phi = field(seed, 3);
        assert_nonnegative(&inequality::poincare_sphere(j, &h, &phi, &rule, 1e-6).unwrap())?;
        let b = inequality::poincare_boundary(j, &h, &phi, &rule, 1e-6).unwrap();
        assert_nonnegative(&b)?;
        prop_assert!(b.residual("cross_formulation").unwrap() <= 1e-8);
    }

    #[test]
    fn area_measure_and_radial_gaps(seed in 0u64..10_000) {
        let rule = rule3();
        let h = random_symmetric_bodies(3, 2, seed)[(seed % 2) as usize].build(3).unwrap();
        let phi = field(seed, 3);
        assert_nonnegative(&inequality::poincare_area_measure(AreaMeasure::Body(&h), &phi, &rule, 1e-6).unwrap())?;
        assert_nonnegative(&inequality::poincare_radial(&h, &phi, &rule, 1e-6).unwrap())?;
    }

    #[test]
    fn wirtinger_for_balanced_atoms(offset in 0.0f64..(2.0 * PI), m in 3usize..7, c in -1.0f64..1.0, s in -1.0f64..1.0) {
        // m equal atoms at the vertices of a regular polygon
        let angles: Vec<f64> = (0..m).map(|k| offset + 2.0 * PI * k as f64 / m as f64).collect();
        let nu = CircleMeasure::equal_atoms(&angles);
        let phi = TrigSeries { a0: 0.2, cos: vec![c, 0.0, 0.5], sin: vec![0.0, s] };
        let r = inequality::wirtinger(&nu, &phi, 512, 1e-10).unwrap();
        prop_assert!(r.gap >= -1e-10);
    }
}

#[test]
fn ball_reduces_to_classic_poincare() {
    let rule = rule3();
    let ball = SupportFunction::ball(1.0, 3).unwrap();
    for j in 1..3 {
        let r = inequality::poincare_sphere(j, &ball, &SphereField::linear(&[0.3, -1.0, 0.2]), &rule, 1e-10).unwrap();
        assert!(r.gap.abs() < 1e-10 * r.lhs);
    }
    let r = inequality::poincare_radial(&ball, &SphereField::linear(&[0.0, 0.0, 1.0]), &rule, 1e-10).unwrap();
    assert!(r.gap.abs() < 1e-12);
}

#[test]
fn constant_field_projects_to_trivial_pass() {
    let rule = rule3();
    let e = SupportFunction::ellipsoid_axes(&[2.0, 1.0, 1.0]).unwrap();
    let r = inequality::poincare_sphere(1, &e, &SphereField::constant(3.0), &rule, 1e-8).unwrap();
    assert!(r.lhs.abs() < 1e-20 && r.rhs.abs() < 1e-20 && r.passed());
}

#[test]
fn sharpness_on_ellipsoid_and_perturbed_ball() {
    let rule = build_rule(3, 48).unwrap();
    let e = SupportFunction::ellipsoid_axes(&[2.0, 1.0, 1.0]).unwrap();
    for j in 1..3 {
        assert!(inequality::sharpness_scan(j, &e, &rule, 1e-7, 1).unwrap().worst_relative_gap <= 1e-7);
    }
    let g = FieldSpec::Harmonic { coefficients: vec![0.0, 0.0, 0.0, 0.0, 1.0] }.build(3).unwrap();
    let pb = SupportFunction::perturbed_ball(3, 0.05, &g).unwrap();
    assert!(inequality::sharpness_scan(1, &pb, &rule, 1e-6, 2).unwrap().worst_relative_gap <= 1e-6);
}

#[test]
fn polygon_area_measure_on_the_circle() {
    // A₁ of a regular hexagon: equal masses at the edge normals
    let rule = build_rule(2, 256).unwrap();
    let normals: Vec<f64> = (0..6).map(|k| PI / 6.0 + k as f64 * PI / 3.0).collect();
    let nu = CircleMeasure::equal_atoms(&normals);
    let phi = field(4, 2);
    let r = inequality::poincare_area_measure(AreaMeasure::Circle(&nu), &phi, &rule, 1e-7).unwrap();
    assert!(r.passed() && r.gap >= 0.0);
    // a segment has two antipodal normals
    let seg = CircleMeasure::equal_atoms(&[0.0, PI]);
    assert!(matches!(inequality::poincare_area_measure(AreaMeasure::Circle(&seg), &phi, &rule, 1e-7), Err(Error::TwoPointMasses)));
    let sphere_rule = rule3();
    assert!(inequality::poincare_area_measure(AreaMeasure::Circle(&nu), &field(4, 3), &sphere_rule, 1e-7).is_err());
}

#[test]
fn lemma_and_divergence_reports() {
    let rule = rule3();
    let e = SupportFunction::ellipsoid_axes(&[1.5, 1.0, 0.8]).unwrap();
    let phi = field(8, 3);
    for j in 1..3 {
        let l = inequality::lemma_rhs_report(j, &e, &phi, &rule, 1e-9).unwrap();
        assert!(l.residual("pointwise").unwrap() <= 1e-9 && l.passed());
        let d = inequality::divergence_report(j, &e, &phi, &rule, 1e-7).unwrap();
        assert!(d.residual("by_parts").unwrap() <= 1e-7 && d.passed());
    }
}

#[test]
fn uncertified_body_is_rejected() {
    let rule = rule3();
    let g = FieldSpec::Harmonic { coefficients: vec![0.0, 0.0, 0.0, 0.0, 1.0] }.build(3).unwrap();
    let bad = SupportFunction::perturbed_ball(3, 10.0, &g).unwrap();
    let phi = field(1, 3);
    assert!(matches!(inequality::poincare_sphere(1, &bad, &phi, &rule, 1e-6), Err(Error::NotCertified { .. })));
}
