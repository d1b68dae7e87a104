use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;

use super::field::{dot, norm};

/// Seed used by [`build_rule`] for the Monte Carlo fallback.
pub const DEFAULT_MC_SEED: u64 = 0x5eed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleKind {
    /// `count` equispaced angles on the circle.
    Trapezoid { count: usize },
    /// Gauss–Legendre in the polar cosine times equispaced longitudes.
    GaussProduct { polar: usize, azimuthal: usize },
    /// Uniform random directions with equal weights.
    MonteCarlo { count: usize, seed: u64 },
}

/// Nodes, weights and orthonormal tangent frames on `S^{n−1}`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    dim: usize,
    kind: RuleKind,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    frames: Vec<Vec<Vec<f64>>>,
    execution: Execution,
}

/// Surface area of `S^{n−1}`.
pub fn sphere_area(n: usize) -> f64 {
    // ω_1 = 2, ω_2 = 2π, ω_{m+2} = 2π ω_m / m
    let (mut w, mut m) = if n.is_multiple_of(2) { (2.0 * PI, 2) } else { (2.0, 1) };
    while m < n {
        w = 2.0 * PI * w / m as f64;
        m += 2;
    }
    w
}

/// Volume of the unit ball in `R^n`.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

/// Deterministic rules for `n ∈ {2, 3}`, seeded Monte Carlo for `n ≥ 4`.
///
/// `n = 2`: `resolution` equispaced angles. `n = 3`: `resolution`
/// Gauss–Legendre nodes in `cos θ` times `2·resolution` longitudes.
/// `n ≥ 4`: `resolution` random directions.
pub fn build_rule(n: usize, resolution: usize) -> Result<QuadratureRule> {
    build_rule_seeded(n, resolution, DEFAULT_MC_SEED)
}

pub fn build_rule_seeded(n: usize, resolution: usize, seed: u64) -> Result<QuadratureRule> {
    if resolution < 4 {
        return Err(Error::domain(format!("resolution {resolution} < 4")));
    }
    match n {
        0 | 1 => Err(Error::domain(format!("dimension {n} < 2"))),
        2 => Ok(QuadratureRule::circle(resolution)),
        3 => Ok(QuadratureRule::gauss_product(resolution, 2 * resolution)),
        _ => Ok(QuadratureRule::monte_carlo(n, resolution, seed)),
    }
}

impl QuadratureRule {
    fn circle(count: usize) -> Self {
        let w = 2.0 * PI / count as f64;
        let mut nodes = Vec::with_capacity(count);
        let mut frames = Vec::with_capacity(count);
        for k in 0..count {
            let t = w * k as f64;
            let (s, c) = t.sin_cos();
            nodes.push(vec![c, s]);
            frames.push(vec![vec![-s, c]]);
        }
        QuadratureRule {
            dim: 2,
            kind: RuleKind::Trapezoid { count },
            nodes,
            weights: vec![w; count],
            frames,
            execution: Execution::default(),
        }
    }

    fn gauss_product(polar: usize, azimuthal: usize) -> Self {
        let (z, wz) = gauss_legendre(polar);
        let dphi = 2.0 * PI / azimuthal as f64;
        let mut nodes = Vec::with_capacity(polar * azimuthal);
        let mut weights = Vec::with_capacity(polar * azimuthal);
        let mut frames = Vec::with_capacity(polar * azimuthal);
        for (zi, wi) in z.iter().zip(&wz) {
            let s = (1.0 - zi * zi).max(0.0).sqrt();
            for j in 0..azimuthal {
                let (sp, cp) = (dphi * j as f64).sin_cos();
                let u = vec![s * cp, s * sp, *zi];
                frames.push(frame3(&u));
                nodes.push(u);
                weights.push(wi * dphi);
            }
        }
        QuadratureRule {
            dim: 3,
            kind: RuleKind::GaussProduct { polar, azimuthal },
            nodes,
            weights,
            frames,
            execution: Execution::default(),
        }
    }

    pub fn monte_carlo(n: usize, count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nodes = Vec::with_capacity(count);
        while nodes.len() < count {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r = norm(&v);
            if r > 1e-12 {
                nodes.push(v.into_iter().map(|x| x / r).collect::<Vec<_>>());
            }
        }
        let frames = nodes.iter().map(|u| frame_gram_schmidt(u)).collect();
        QuadratureRule {
            dim: n,
            kind: RuleKind::MonteCarlo { count, seed },
            nodes,
            weights: vec![sphere_area(n) / count as f64; count],
            frames,
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_monte_carlo(&self) -> bool {
        matches!(self.kind, RuleKind::MonteCarlo { .. })
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn frame(&self, i: usize) -> &[Vec<f64>] {
        &self.frames[i]
    }

    pub fn describe(&self) -> String {
        match self.kind {
            RuleKind::Trapezoid { count } => format!("trapezoid-{count}"),
            RuleKind::GaussProduct { polar, azimuthal } => format!("gauss-{polar}x{azimuthal}"),
            RuleKind::MonteCarlo { count, seed } => format!("montecarlo-{}d-{count}-seed{seed}", self.dim),
        }
    }

    /// Evaluates `f` at every node index, in node order.
    pub fn map<T: Send>(&self, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        self.execution.map(self.len(), f)
    }

    /// `Σ w_i v_i`, summed sequentially in node order.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn integrate_fn(&self, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
        self.integrate(&self.map(f))
    }
}

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[−1, 1]`,
/// ascending, via Newton iteration on `P_m`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// Frame at a node of `S²`: Gram–Schmidt of `e_z` (or `e_x` when
/// `|u_z| > 0.9`) against `u`, completed by `u × E_1`.
fn frame3(u: &[f64]) -> Vec<Vec<f64>> {
    let axis = if u[2].abs() > 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 0.0, 1.0] };
    let a = dot(&axis, u);
    let mut e1: Vec<f64> = (0..3).map(|i| axis[i] - a * u[i]).collect();
    let r = norm(&e1);
    e1.iter_mut().for_each(|v| *v /= r);
    let e2 = vec![
        u[1] * e1[2] - u[2] * e1[1],
        u[2] * e1[0] - u[0] * e1[2],
        u[0] * e1[1] - u[1] * e1[0],
    ];
    vec![e1, e2]
}

/// Orthonormal complement of `u` from coordinate axes, least aligned first.
pub(super) fn frame_gram_schmidt(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    let un = norm(u);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()));
    let mut basis: Vec<Vec<f64>> = vec![u.iter().map(|x| x / un).collect()];
    for &k in &order {
        if basis.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let r = norm(&v);
        if r > 1e-8 {
            v.iter_mut().for_each(|x| *x /= r);
            basis.push(v);
        }
    }
    basis.remove(0);
    basis
}
