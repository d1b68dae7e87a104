use proptest::prelude::*;

use convexq::body::{minkowski_combination, SupportFunction};
use convexq::inequality::project_side_condition;
use convexq::quermass::{first_variation, functional_f, quermassintegral, second_variation, variation_report};
use convexq::sphere::{build_rule, QuadratureRule, SphereField};
use convexq::suite::{random_bodies, FieldSpec};
use convexq::symmfunc::elem_sym;

fn rule3() -> QuadratureRule {
    build_rule(3, 24).unwrap()
}

fn body(seed: u64, n: usize) -> SupportFunction {
    random_bodies(n, 4, seed)[(seed % 4) as usize].build(n).unwrap()
}

fn field(seed: u64, n: usize, scale: f64) -> SphereField {
    FieldSpec::Random { seed, max_degree: 3, scale }.build(n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn analytic_variations_match_differences(seed in 0u64..10_000, k in 0usize..3) {
        let rule = rule3();
        let v = variation_report(k, &body(seed, 3), &field(seed + 1, 3, 0.5), &rule).unwrap();
        prop_assert!(v.prime_discrepancy <= 1e-5, "{v:?}");
        prop_assert!(v.second_discrepancy <= 1e-4, "{v:?}");
    }

    /// `f(s) = F_k(h + sφ)` is a polynomial of degree `n − k`, so its
    /// `(n−k+1)`-th difference vanishes.
    #[test]
    fn functional_is_polynomial_in_s(seed in 0u64..10_000, k in 0usize..3) {
        let rule = rule3();
        let h = body(seed, 3);
        let phi = field(seed + 2, 3, 0.3);
        let step = 0.05;
        let order = 3 - k + 1;
        let values: Vec<f64> = (0..=order).map(|j| functional_f(k, &h.perturbed(j as f64 * step, &phi), &rule).unwrap()).collect();
        let mut diff = values.clone();
        for _ in 0..order {
            diff = diff.windows(2).map(|w| w[1] - w[0]).collect();
        }
        prop_assert!(diff[0].abs() <= 1e-10 * values[0].abs(), "{diff:?}");
    }

    #[test]
    fn brunn_minkowski_map_is_concave(seed in 0u64..10_000, i in 0usize..3) {
        let rule = rule3();
        let (k, l) = (body(seed, 3), body(seed + 1, 3));
        let p = 1.0 / (3 - i) as f64;
        let g = |t: f64| quermassintegral(i, &minkowski_combination(t, &k, &l).unwrap(), &rule).unwrap().powf(p);
        for t in [0.2, 0.5, 0.8] {
            let d = 0.1;
            prop_assert!(g(t - d) - 2.0 * g(t) + g(t + d) <= 1e-10);
        }
    }

    /// With `f'(0) = 0` enforced by projection, concavity of `f^{1/(n−k)}`
    /// forces `f''(0) ≤ 0`.
    #[test]
    fn second_variation_nonpositive_under_side_condition(seed in 0u64..10_000, k in 0usize..2) {
        let rule = rule3();
        let h = body(seed, 3);
        let samples = h.sample(&rule).unwrap();
        let weights: Vec<f64> = samples.iter().map(|s| elem_sym(&s.hessian_1hom, 3 - k - 1).unwrap()).collect();
        let phi = project_side_condition(&field(seed + 3, 3, 1.0), &weights, &rule).unwrap().field;
        let fp = first_variation(k, &h, &phi, 0.0, &rule).unwrap();
        let fs = second_variation(k, &h, &phi, &rule).unwrap();
        let scale = functional_f(k, &h, &rule).unwrap();
        prop_assert!(fp.abs() <= 1e-10 * scale);
        prop_assert!(fs <= 1e-8 * scale, "f''(0) = {fs}");
    }
}

#[test]
fn circle_variations() {
    let rule = build_rule(2, 256).unwrap();
    for seed in 0..6 {
        for k in 0..2 {
            let v = variation_report(k, &body(seed, 2), &field(seed + 9, 2, 0.5), &rule).unwrap();
            assert!(v.prime_discrepancy <= 1e-5 && v.second_discrepancy <= 1e-4, "{v:?}");
        }
    }
}
