use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use convexq::symmfunc::{cofactor_matrix, elem_sym, SymMatrix};

/// Determinant by the Leibniz expansion over permutations.
fn leibniz(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    loop {
        let inversions = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| perm[i] > perm[j]).count();
        let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * (0..n).map(|i| m[i][perm[i]]).product::<f64>();
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
            return total;
        };
        let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
}

/// `S_k` as the sum of `k×k` principal minors, each by Leibniz.
fn elem_sym_leibniz(a: &[Vec<f64>], k: usize) -> f64 {
    let n = a.len();
    if k == 0 {
        return 1.0;
    }
    (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| {
            let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let sub: Vec<Vec<f64>> = idx.iter().map(|&i| idx.iter().map(|&j| a[i][j]).collect()).collect();
            leibniz(&sub)
        })
        .sum()
}

fn random_rows(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let a = &g * g.transpose() + DMatrix::identity(n, n) * 0.5;
    (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect()
}

#[test]
fn elem_sym_matches_leibniz_minors() {
    for seed in 0..30 {
        let n = 2 + (seed as usize) % 5;
        let rows = random_rows(n, seed);
        let a = SymMatrix::from_rows(&rows).unwrap();
        for k in 0..=n {
            let oracle = elem_sym_leibniz(&rows, k);
            assert!((elem_sym(&a, k).unwrap() - oracle).abs() <= 1e-10 * oracle.abs().max(1.0), "n={n} k={k}");
        }
    }
}

/// Entries perturbed one at a time, with `a_ij` and `a_ji` independent.
#[test]
fn cofactor_matches_independent_entry_differences() {
    let delta = 1e-6;
    for seed in 100..120 {
        let n = 2 + (seed as usize) % 5;
        let rows = random_rows(n, seed);
        let a = SymMatrix::from_rows(&rows).unwrap();
        for k in 1..=n {
            let cof = cofactor_matrix(&a, k).unwrap();
            let scale = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).fold(1.0f64, |m, (i, j)| m.max(cof.get(i, j).abs()));
            for i in 0..n {
                for j in 0..n {
                    let bump = |s: f64| {
                        let mut m = rows.clone();
                        m[i][j] += s;
                        elem_sym_leibniz(&m, k)
                    };
                    let fd = (bump(delta) - bump(-delta)) / (2.0 * delta);
                    assert!((fd - cof.get(i, j)).abs() <= 1e-6 * scale, "n={n} k={k} ({i},{j}): {fd} vs {}", cof.get(i, j));
                }
            }
        }
    }
}

#[test]
fn top_cofactor_is_leibniz_adjugate() {
    let rows = random_rows(4, 7);
    let a = SymMatrix::from_rows(&rows).unwrap();
    let adj = cofactor_matrix(&a, 4).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let minor: Vec<Vec<f64>> = (0..4)
                .filter(|&r| r != j)
                .map(|r| (0..4).filter(|&c| c != i).map(|c| rows[r][c]).collect())
                .collect();
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            assert!((adj.get(i, j) - sign * leibniz(&minor)).abs() < 1e-10);
        }
    }
}

fn spd() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=6, any::<u64>()).prop_map(|(n, seed)| random_rows(n, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn newton_identity_for_power_sums(rows in spd()) {
        // k S_k = Σ_{i=1}^{k} (−1)^{i−1} S_{k−i} p_i with p_i = tr(A^i)
        let n = rows.len();
        let a = SymMatrix::from_rows(&rows).unwrap();
        let m = a.as_matrix();
        let mut powers = vec![DMatrix::identity(n, n)];
        for i in 1..=n {
            powers.push(&powers[i - 1] * m);
        }
        for k in 1..=n {
            let rhs: f64 = (1..=k)
                .map(|i| {
                    let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                    sign * elem_sym(&a, k - i).unwrap() * powers[i].trace()
                })
                .sum();
            let lhs = k as f64 * elem_sym(&a, k).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn cofactors_positive_definite_for_spd(rows in spd()) {
        let a = SymMatrix::from_rows(&rows).unwrap();
        for k in 1..=a.dim() {
            let ev = cofactor_matrix(&a, k).unwrap().eigenvalues();
            prop_assert!(ev[0] > 0.0);
        }
    }

    #[test]
    fn homogeneity(rows in spd(), c in 0.1f64..3.0) {
        let a = SymMatrix::from_rows(&rows).unwrap();
        let ca = a.scale(c);
        for k in 0..=a.dim() {
            let lhs = elem_sym(&ca, k).unwrap();
            let rhs = c.powi(k as i32) * elem_sym(&a, k).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
        }
    }
}
