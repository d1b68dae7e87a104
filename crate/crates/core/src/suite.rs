//! Run configuration, body/field specification files and the batch suites
//! behind the command line.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::body::{minkowski_combination, SupportFunction, DEFAULT_PD_EPS};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::inequality::{self, AreaMeasure, CircleField, CircleMeasure, InequalityReport, Verdict};
use crate::quermass::{quermassintegrals, steiner_check};
use crate::sphere::{
    ball_volume, build_rule_seeded, harmonic_basis, sphere_area, Polynomial, QuadratureRule, SphereField,
};
use crate::symmfunc::{elem_sym, elem_sym_all, SymMatrix};

/// Highest degree of the harmonic basis used by field specifications.
pub const FIELD_MAX_DEGREE: u32 = 6;

/// Default resolution: trapezoid nodes for `n = 2`, Gauss–Legendre
/// latitudes for `n = 3`, Monte Carlo samples above.
pub fn default_resolution(n: usize) -> usize {
    match n {
        2 => 256,
        3 => 64,
        _ => 20_000,
    }
}

// ---------------------------------------------------------------------------
// Specifications

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// Coefficients over [`harmonic_basis`]`(n, 6)`, in basis order.
    Harmonic { coefficients: Vec<f64> },
    Linear { direction: Vec<f64> },
    Constant { value: f64 },
    /// Gaussian coefficients on the harmonics of degree `≤ max_degree`,
    /// damped by `1/(1+d)`.
    Random {
        seed: u64,
        #[serde(default = "default_random_degree")]
        max_degree: u32,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn default_random_degree() -> u32 {
    4
}

fn one() -> f64 {
    1.0
}

impl FieldSpec {
    pub fn build(&self, n: usize) -> Result<SphereField> {
        match self {
            FieldSpec::Constant { value } => Ok(SphereField::constant(*value)),
            FieldSpec::Linear { direction } => {
                if direction.len() != n {
                    return Err(Error::Spec(format!("direction has {} entries, expected {n}", direction.len())));
                }
                Ok(SphereField::linear(direction))
            }
            FieldSpec::Harmonic { coefficients } => {
                let basis = harmonic_basis(n, FIELD_MAX_DEGREE);
                if coefficients.len() > basis.len() {
                    return Err(Error::Spec(format!(
                        "{} coefficients given, basis has {} elements",
                        coefficients.len(),
                        basis.len()
                    )));
                }
                let p = basis
                    .iter()
                    .zip(coefficients)
                    .filter(|(_, c)| **c != 0.0)
                    .fold(Polynomial::zero(n), |acc, (b, c)| acc.add(&b.scaled(*c)));
                Ok(SphereField::polynomial(p))
            }
            FieldSpec::Random { seed, max_degree, scale } => {
                if *max_degree > FIELD_MAX_DEGREE {
                    return Err(Error::Spec(format!("max_degree {max_degree} > {FIELD_MAX_DEGREE}")));
                }
                FieldSpec::Harmonic { coefficients: random_coefficients(n, *max_degree, *scale, *seed) }.build(n)
            }
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Harmonic { coefficients } => write!(f, "harmonic{coefficients:?}"),
            FieldSpec::Linear { direction } => write!(f, "linear{direction:?}"),
            FieldSpec::Constant { value } => write!(f, "constant({value})"),
            FieldSpec::Random { seed, max_degree, scale } => {
                write!(f, "random(seed={seed},degree={max_degree},scale={scale})")
            }
        }
    }
}

/// Coefficients over the degree-6 basis with only degrees `≤ max_degree`
/// populated.
pub fn random_coefficients(n: usize, max_degree: u32, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = harmonic_basis(n, FIELD_MAX_DEGREE);
    basis
        .iter()
        .map(|p| {
            let d = p.degree();
            let z: f64 = StandardNormal.sample(&mut rng);
            if d <= max_degree {
                scale * z / (1.0 + d as f64)
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Ball {
        radius: f64,
    },
    /// Either semi-axes or a symmetric positive definite matrix `Q` with
    /// `h(u) = √⟨Qu, u⟩`.
    Ellipsoid {
        #[serde(default)]
        axes: Option<Vec<f64>>,
        #[serde(default)]
        matrix: Option<Vec<Vec<f64>>>,
    },
    Translate {
        offset: Vec<f64>,
        body: Box<BodySpec>,
    },
    Minkowski {
        t: f64,
        first: Box<BodySpec>,
        second: Box<BodySpec>,
    },
    PerturbedBall {
        eps: f64,
        field: FieldSpec,
    },
}

impl BodySpec {
    /// Dimension fixed by the specification itself, if any.
    pub fn natural_dim(&self) -> Option<usize> {
        match self {
            BodySpec::Ball { .. } | BodySpec::PerturbedBall { .. } => None,
            BodySpec::Ellipsoid { axes, matrix } => {
                axes.as_ref().map(Vec::len).or_else(|| matrix.as_ref().map(Vec::len))
            }
            BodySpec::Translate { offset, .. } => Some(offset.len()),
            BodySpec::Minkowski { first, second, .. } => first.natural_dim().or_else(|| second.natural_dim()),
        }
    }

    pub fn build(&self, n: usize) -> Result<SupportFunction> {
        let h = match self {
            BodySpec::Ball { radius } => SupportFunction::ball(*radius, n)?,
            BodySpec::Ellipsoid { axes, matrix } => match (axes, matrix) {
                (Some(a), None) => SupportFunction::ellipsoid_axes(a)?,
                (None, Some(rows)) => {
                    let m = rows.len();
                    if rows.iter().any(|r| r.len() != m) {
                        return Err(Error::Spec("ellipsoid matrix must be square".into()));
                    }
                    SupportFunction::ellipsoid(DMatrix::from_fn(m, m, |i, j| rows[i][j]))?
                }
                _ => return Err(Error::Spec("ellipsoid needs exactly one of `axes`, `matrix`".into())),
            },
            BodySpec::Translate { offset, body } => body.build(n)?.translate(offset)?,
            BodySpec::Minkowski { t, first, second } => minkowski_combination(*t, &first.build(n)?, &second.build(n)?)?,
            BodySpec::PerturbedBall { eps, field } => SupportFunction::perturbed_ball(n, *eps, &field.build(n)?)?,
        };
        if h.dim() != n {
            return Err(Error::Spec(format!("body has dimension {}, run uses n = {n}", h.dim())));
        }
        Ok(h)
    }
}

impl fmt::Display for BodySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodySpec::Ball { radius } => write!(f, "ball({radius})"),
            BodySpec::Ellipsoid { axes: Some(a), .. } => write!(f, "ellipsoid{a:?}"),
            BodySpec::Ellipsoid { matrix: Some(m), .. } => {
                let diag: Vec<f64> = m.iter().enumerate().map(|(i, r)| r.get(i).copied().unwrap_or(f64::NAN)).collect();
                write!(f, "ellipsoid(diag={diag:?})")
            }
            BodySpec::Ellipsoid { .. } => write!(f, "ellipsoid(?)"),
            BodySpec::Translate { offset, body } => write!(f, "translate({offset:?},{body})"),
            BodySpec::Minkowski { t, first, second } => write!(f, "minkowski({t},{first},{second})"),
            BodySpec::PerturbedBall { eps, field } => write!(f, "perturbed_ball({eps},{field})"),
        }
    }
}

/// Reads TOML, or JSON when the text starts with `{`.
pub fn parse_text<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }
}

pub fn read_spec<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    parse_text(&text).map_err(|e| match e {
        Error::Spec(msg) => Error::Spec(format!("{}: {msg}", path.display())),
        other => other,
    })
}

// ---------------------------------------------------------------------------
// Run configuration

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    /// `None` selects [`default_resolution`].
    pub resolution: Option<usize>,
    /// `None` selects [`inequality::default_tolerance`].
    pub tolerance: Option<f64>,
    pub seed: u64,
    pub bodies: Vec<BodySpec>,
    pub fields: Vec<FieldSpec>,
    /// Measures on the circle for the wirtinger and area-measure suites.
    pub measures: Vec<CircleMeasure>,
    /// Random bodies generated when `bodies` is empty.
    pub random_bodies: usize,
    /// Random fields generated when `fields` is empty.
    pub random_fields: usize,
    /// Minkowski parameters for the bm suite.
    pub t_grid: Vec<f64>,
    pub execution: Execution,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 3,
            resolution: None,
            tolerance: None,
            seed: 1,
            bodies: Vec::new(),
            fields: Vec::new(),
            measures: Vec::new(),
            random_bodies: 4,
            random_fields: 3,
            t_grid: (0..=10).map(|k| k as f64 / 10.0).collect(),
            execution: Execution::default(),
        }
    }
}

impl RunConfig {
    pub fn resolution(&self) -> usize {
        self.resolution.unwrap_or_else(|| default_resolution(self.n))
    }

    pub fn rule(&self) -> Result<QuadratureRule> {
        Ok(build_rule_seeded(self.n, self.resolution(), self.seed)?.with_execution(self.execution))
    }

    pub fn tolerance_for(&self, rule: &QuadratureRule) -> f64 {
        self.tolerance.unwrap_or_else(|| inequality::default_tolerance(rule))
    }

    /// Configured bodies, or `random_bodies` seeded random ones.
    pub fn body_specs(&self) -> Vec<BodySpec> {
        if self.bodies.is_empty() {
            random_bodies(self.n, self.random_bodies, self.seed)
        } else {
            self.bodies.clone()
        }
    }

    /// Configured fields, or `random_fields` seeded random ones.
    pub fn field_specs(&self) -> Vec<FieldSpec> {
        if self.fields.is_empty() {
            (0..self.random_fields as u64)
                .map(|k| FieldSpec::Random {
                    seed: self.seed.wrapping_mul(1000).wrapping_add(k),
                    max_degree: default_random_degree(),
                    scale: 1.0,
                })
                .collect()
        } else {
            self.fields.clone()
        }
    }

    pub fn measure_specs(&self) -> Vec<CircleMeasure> {
        if self.measures.is_empty() {
            let third = 2.0 * std::f64::consts::PI / 3.0;
            vec![CircleMeasure::lebesgue(self.resolution()), CircleMeasure::equal_atoms(&[0.0, third, 2.0 * third])]
        } else {
            self.measures.clone()
        }
    }
}

fn random_axes(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.6..1.8)).collect()
}

fn random_rotation(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    g.qr().q()
}

fn random_ellipsoid(n: usize, rng: &mut ChaCha8Rng) -> BodySpec {
    let axes = random_axes(n, rng);
    let r = random_rotation(n, rng);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, axes.iter().map(|a| a * a)));
    let q = &r * d * r.transpose();
    let q = (&q + q.transpose()) * 0.5;
    BodySpec::Ellipsoid {
        axes: None,
        matrix: Some((0..n).map(|i| (0..n).map(|j| q[(i, j)]).collect()).collect()),
    }
}

fn random_even_field(n: usize, rng: &mut ChaCha8Rng) -> FieldSpec {
    let basis = harmonic_basis(n, FIELD_MAX_DEGREE);
    let coefficients = basis
        .iter()
        .map(|p| {
            let z: f64 = StandardNormal.sample(rng);
            if p.degree() == 2 || p.degree() == 4 {
                z
            } else {
                0.0
            }
        })
        .collect();
    FieldSpec::Harmonic { coefficients }
}

/// Perturbed ball `1 + ε g` with `ε` scaled so that the worst
/// eigenvalue of `ε Ξ⁻¹(g)` on a coarse rule stays below one half.
fn random_perturbed_ball(n: usize, rng: &mut ChaCha8Rng) -> BodySpec {
    let field = random_even_field(n, rng);
    let g = field.build(n).expect("basis coefficients are valid");
    let coarse = build_rule_seeded(n, if n <= 3 { 12 } else { 2000 }, 7).expect("valid rule");
    let worst = crate::sphere::sample_jets(&g, &coarse)
        .iter()
        .map(|j| {
            let e = j.hessian_1hom.eigenvalues();
            e.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .fold(0.0f64, f64::max);
    let eps = rng.random_range(0.2..0.5) / worst.max(1e-12);
    BodySpec::PerturbedBall { eps, field }
}

/// Seeded random certified bodies, cycling through rotated ellipsoids,
/// perturbed balls with even perturbations, translated ellipsoids and
/// Minkowski combinations. The first two kinds are centrally symmetric.
pub fn random_bodies(n: usize, count: usize, seed: u64) -> Vec<BodySpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| match k % 4 {
            0 => random_ellipsoid(n, &mut rng),
            1 => random_perturbed_ball(n, &mut rng),
            2 => BodySpec::Translate {
                offset: (0..n).map(|_| rng.random_range(-0.5..0.5)).collect(),
                body: Box::new(random_ellipsoid(n, &mut rng)),
            },
            _ => BodySpec::Minkowski {
                t: rng.random_range(0.2..0.8),
                first: Box::new(random_ellipsoid(n, &mut rng)),
                second: Box::new(random_perturbed_ball(n, &mut rng)),
            },
        })
        .collect()
}

/// Seeded random centrally symmetric bodies (ellipsoids and evenly
/// perturbed balls), for which the radial barycenter vanishes.
pub fn random_symmetric_bodies(n: usize, count: usize, seed: u64) -> Vec<BodySpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| if k % 2 == 0 { random_ellipsoid(n, &mut rng) } else { random_perturbed_ball(n, &mut rng) })
        .collect()
}

// ---------------------------------------------------------------------------
// Suites

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Bm,
    PoincareSphere,
    PoincareBoundary,
    AreaMeasure,
    Radial,
    Wirtinger,
    Sharpness,
    LemmaRhs,
    Divergence,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Bm,
        Suite::PoincareSphere,
        Suite::PoincareBoundary,
        Suite::AreaMeasure,
        Suite::Radial,
        Suite::Wirtinger,
        Suite::Sharpness,
        Suite::LemmaRhs,
        Suite::Divergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Bm => "bm",
            Suite::PoincareSphere => "poincare-sphere",
            Suite::PoincareBoundary => "poincare-boundary",
            Suite::AreaMeasure => "area-measure",
            Suite::Radial => "radial",
            Suite::Wirtinger => "wirtinger",
            Suite::Sharpness => "sharpness",
            Suite::LemmaRhs => "lemma-rhs",
            Suite::Divergence => "divergence",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Spec(format!("unknown suite `{s}`")))
    }
}

fn built_bodies(cfg: &RunConfig, specs: &[BodySpec]) -> Result<Vec<(String, SupportFunction)>> {
    specs.iter().map(|b| Ok((b.to_string(), b.build(cfg.n)?))).collect()
}

fn built_fields(n: usize, specs: &[FieldSpec]) -> Result<Vec<(String, SphereField)>> {
    specs.iter().map(|f| Ok((f.to_string(), f.build(n)?))).collect()
}

fn labelled(mut r: InequalityReport, body: &str, field: &str) -> InequalityReport {
    r.metadata.body = body.to_string();
    r.metadata.field = field.to_string();
    r
}

/// Runs one suite over the bodies, fields and indices of `cfg`. Reports
/// come out in a fixed order: bodies, then fields, then indices.
pub fn run_suite(suite: Suite, cfg: &RunConfig) -> Result<Vec<InequalityReport>> {
    let n = cfg.n;
    let rule = cfg.rule()?;
    let tol = cfg.tolerance_for(&rule);
    let mut out = Vec::new();
    match suite {
        Suite::Bm => {
            let bodies = built_bodies(cfg, &cfg.body_specs())?;
            let mut pairs = Vec::new();
            for (a, k) in bodies.iter().enumerate() {
                for l in &bodies[a + 1..] {
                    pairs.push((k.clone(), l.clone()));
                }
            }
            if bodies.len() == 1 {
                let (label, h) = &bodies[0];
                let mut x0 = vec![0.0; n];
                x0[0] = 0.25;
                let homothet = h.scaled(2.0)?.translate(&x0)?;
                pairs.push((bodies[0].clone(), (format!("translate({x0:?},2*{label})"), homothet)));
            }
            for ((lk, hk), (ll, hl)) in &pairs {
                let label = format!("{lk} | {ll}");
                for r in inequality::bm_scan(hk, hl, &cfg.t_grid, &rule, tol)? {
                    out.push(labelled(r, &label, ""));
                }
            }
        }
        Suite::PoincareSphere | Suite::PoincareBoundary | Suite::LemmaRhs | Suite::Divergence => {
            let bodies = built_bodies(cfg, &cfg.body_specs())?;
            let fields = built_fields(n, &cfg.field_specs())?;
            for (bl, h) in &bodies {
                for (fl, phi) in &fields {
                    for j in 1..n {
                        let r = match suite {
                            Suite::PoincareSphere => inequality::poincare_sphere(j, h, phi, &rule, tol)?,
                            Suite::PoincareBoundary => inequality::poincare_boundary(j, h, phi, &rule, tol)?,
                            Suite::LemmaRhs => inequality::lemma_rhs_report(j, h, phi, &rule, tol)?,
                            _ => inequality::divergence_report(j, h, phi, &rule, tol)?,
                        };
                        out.push(labelled(r, bl, fl));
                    }
                }
            }
        }
        Suite::AreaMeasure => {
            let bodies = built_bodies(cfg, &cfg.body_specs())?;
            let fields = built_fields(n, &cfg.field_specs())?;
            for (bl, h) in &bodies {
                for (fl, phi) in &fields {
                    let r = inequality::poincare_area_measure(AreaMeasure::Body(h), phi, &rule, tol)?;
                    out.push(labelled(r, bl, fl));
                }
            }
            if n == 2 {
                for nu in cfg.measure_specs() {
                    for (fl, phi) in &fields {
                        let r = inequality::poincare_area_measure(AreaMeasure::Circle(&nu), phi, &rule, tol)?;
                        let bl = r.metadata.body.clone();
                        out.push(labelled(r, &bl, fl));
                    }
                }
            }
        }
        Suite::Radial => {
            let specs = if cfg.bodies.is_empty() {
                random_symmetric_bodies(n, cfg.random_bodies, cfg.seed)
            } else {
                cfg.bodies.clone()
            };
            let bodies = built_bodies(cfg, &specs)?;
            let fields = built_fields(n, &cfg.field_specs())?;
            for (bl, h) in &bodies {
                let w = inequality::RadialWeight::new(h, &rule)?;
                for (fl, phi) in &fields {
                    out.push(labelled(inequality::poincare_radial_with(&w, phi, &rule, tol)?, bl, fl));
                }
            }
        }
        Suite::Wirtinger => {
            let grid = if n == 2 { cfg.resolution() } else { default_resolution(2) };
            let fields = built_fields(2, &cfg.field_specs())?;
            for nu in cfg.measure_specs() {
                for (fl, phi) in &fields {
                    let r = inequality::wirtinger(&nu, &CircleField(phi), grid, tol)?;
                    let bl = r.metadata.body.clone();
                    out.push(labelled(r, &bl, fl));
                }
            }
        }
        Suite::Sharpness => {
            let bodies = built_bodies(cfg, &cfg.body_specs())?;
            for (bl, h) in &bodies {
                for j in 1..n {
                    for r in inequality::sharpness_scan(j, h, &rule, tol, cfg.seed)?.reports {
                        let fl = r.metadata.field.clone();
                        out.push(labelled(r, bl, &fl));
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub withheld: usize,
    /// Index of the worst report: the first non-passing one with the
    /// smallest gap, or the passing one with the smallest gap.
    pub worst: Option<usize>,
}

pub fn summarize(suite: Suite, reports: &[InequalityReport]) -> SuiteSummary {
    let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
    let key = |r: &InequalityReport| (r.verdict == Verdict::Pass, r.gap);
    let worst = (0..reports.len()).min_by(|&a, &b| {
        let (ka, kb) = (key(&reports[a]), key(&reports[b]));
        ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    SuiteSummary {
        suite: suite.name().into(),
        total: reports.len(),
        passed: count(Verdict::Pass),
        failed: count(Verdict::Fail),
        withheld: count(Verdict::Withheld),
        worst,
    }
}

impl SuiteSummary {
    pub fn all_pass(&self) -> bool {
        self.passed == self.total
    }

    pub fn line(&self, reports: &[InequalityReport]) -> String {
        let mut s = format!(
            "verify {}: {} reports, {} pass, {} fail, {} withheld",
            self.suite, self.total, self.passed, self.failed, self.withheld
        );
        if let Some(w) = self.worst {
            let r = &reports[w];
            s.push_str(&format!(
                "; worst #{w} gap {:e} (body {}, field {}, index {})",
                r.gap,
                r.metadata.body,
                if r.metadata.field.is_empty() { "-" } else { &r.metadata.field },
                r.metadata.index.map_or("-".to_string(), |i| i.to_string())
            ));
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Output

pub fn reports_to_json(reports: &[InequalityReport]) -> Result<String> {
    serde_json::to_string_pretty(reports).map_err(|e| Error::Spec(e.to_string()))
}

const CSV_HEADER: [&str; 13] = [
    "check", "body", "field", "rule", "index", "parameter", "lhs", "rhs", "gap", "relative_gap", "tolerance", "verdict",
    "residuals",
];

pub fn reports_to_csv(reports: &[InequalityReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Spec(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in reports {
        let residuals: Vec<String> = r.side_condition_residuals.iter().map(|x| format!("{}={:e}", x.name, x.value)).collect();
        w.write_record([
            r.metadata.check.clone(),
            r.metadata.body.clone(),
            r.metadata.field.clone(),
            r.metadata.rule.clone(),
            r.metadata.index.map_or(String::new(), |i| i.to_string()),
            r.metadata.parameter.map_or(String::new(), |t| t.to_string()),
            format!("{:e}", r.lhs),
            format!("{:e}", r.rhs),
            format!("{:e}", r.gap),
            format!("{:e}", r.relative_gap),
            format!("{:e}", r.tolerance),
            r.verdict.to_string(),
            residuals.join(";"),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Spec(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `<suite>.json` and `<suite>.csv` into `dir`.
pub fn write_reports(dir: &Path, suite: Suite, reports: &[InequalityReport]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{suite}.json")), reports_to_json(reports)?)?;
    fs::write(dir.join(format!("{suite}.csv")), reports_to_csv(reports)?)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuermassTable {
    pub body: String,
    pub rule: String,
    pub values: Vec<f64>,
    pub steiner_residual: f64,
}

pub fn quermass_table(h: &SupportFunction, rule: &QuadratureRule) -> Result<QuermassTable> {
    h.certify(rule, DEFAULT_PD_EPS)?;
    Ok(QuermassTable {
        body: h.label().into(),
        rule: rule.describe(),
        values: quermassintegrals(h, rule)?,
        steiner_residual: steiner_check(h, rule, &[0.1, 0.5, 1.0])?,
    })
}

impl QuermassTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,W_i,steiner_residual\n");
        for (i, w) in self.values.iter().enumerate() {
            s.push_str(&format!("{i},{w:e},{:e}\n", self.steiner_residual));
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Self-check

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub resolution: usize,
    pub nodes: usize,
    pub error: f64,
    /// `log2(e_{r/2} / e_r)`; absent on the first row.
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelfCheck {
    /// Worst relative residual of the Euler, trace and inverse identities.
    pub identity_residual: f64,
    /// `|Σw − |S^{n−1}||` for the circle and sphere rules.
    pub weight_residuals: Vec<(String, f64)>,
    /// Worst error integrating the monomials of degree `≤ 2r−1` (sphere)
    /// or `≤ m−1` (circle) exactly.
    pub exactness_residual: f64,
    /// `W_0` of the ellipsoid with semi-axes `(2, 1, 1)` against `8π/3`.
    pub convergence: Vec<ConvergenceRow>,
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Result<SymMatrix> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    SymMatrix::from_matrix(&(&g * g.transpose() + DMatrix::identity(n, n) * 0.5))
}

/// Worst relative residual of `S_k(A) = (1/k) Σ S_k^{ij} a_ij`,
/// `Σ S_k^{ii} = (N−k+1) S_{k−1}` and `S_N^{ij} = det(A) (A⁻¹)_{ij}` over
/// `count` random SPD matrices with `N ∈ 2..=6`.
pub fn symmfunc_identity_residual(count: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for c in 0..count {
        let n = 2 + c % 5;
        let a = random_spd(n, &mut rng)?;
        let s = elem_sym_all(&a)?;
        for k in 1..=n {
            let cof = a.cofactor(k)?;
            let euler = cof.contract(&a) / k as f64;
            worst = worst.max((euler - s[k]).abs() / s[k].abs());
            let tr = cof.trace();
            let expect = (n - k + 1) as f64 * s[k - 1];
            worst = worst.max((tr - expect).abs() / expect.abs());
        }
        let adj = a.inverse()?.scale(a.determinant());
        let top = a.cofactor(n)?;
        worst = worst.max(top.max_abs_diff(&adj) / adj.max_abs_diff(&SymMatrix::zeros(n)));
        debug_assert!((elem_sym(&a, n)? - a.determinant()).abs() <= 1e-9 * a.determinant().abs());
    }
    Ok(worst)
}

fn exactness_residual() -> Result<f64> {
    let mut worst: f64 = 0.0;
    // circle: cos^a sin^b with a + b ≤ m − 1
    let m = 16;
    let rule = build_rule_seeded(2, m, 0)?;
    for a in 0..m as i32 {
        for b in 0..(m as i32 - a) {
            let v = rule.integrate_fn(|i| rule.node(i)[0].powi(a) * rule.node(i)[1].powi(b));
            worst = worst.max((v - monomial_sphere_integral(&[a as u32, b as u32])).abs());
        }
    }
    let r = 8;
    let rule = build_rule_seeded(3, r, 0)?;
    let top = 2 * r as u32 - 1;
    for a in 0..=top {
        for b in 0..=(top - a) {
            for c in 0..=(top - a - b) {
                let v = rule.integrate_fn(|i| {
                    let u = rule.node(i);
                    u[0].powi(a as i32) * u[1].powi(b as i32) * u[2].powi(c as i32)
                });
                worst = worst.max((v - monomial_sphere_integral(&[a, b, c])).abs());
            }
        }
    }
    Ok(worst)
}

/// `∫_{S^{n−1}} u^α`: zero unless every exponent is even, otherwise
/// `2 Π Γ(β_i) / Γ(Σ β_i)` with `β_i = (α_i + 1)/2`.
pub fn monomial_sphere_integral(alpha: &[u32]) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    // Γ of half-integers via Γ(1/2) = √π and Γ(x+1) = xΓ(x)
    fn gamma_half(twice: u32) -> f64 {
        let (mut g, mut x) = if twice.is_multiple_of(2) { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
        while 2.0 * x < twice as f64 {
            g *= x;
            x += 1.0;
        }
        g
    }
    let num: f64 = alpha.iter().map(|a| gamma_half(a + 1)).product();
    let total: u32 = alpha.iter().map(|a| a + 1).sum();
    2.0 * num / gamma_half(total)
}

pub fn selfcheck(seed: u64) -> Result<SelfCheck> {
    let identity_residual = symmfunc_identity_residual(100, seed)?;
    let mut weight_residuals = Vec::new();
    for (n, res) in [(2, 256), (3, 64)] {
        let rule = build_rule_seeded(n, res, seed)?;
        let total: f64 = rule.weights().iter().sum();
        weight_residuals.push((rule.describe(), (total - sphere_area(n)).abs()));
    }
    let exact = 8.0 * std::f64::consts::PI / 3.0;
    let h = SupportFunction::ellipsoid_axes(&[2.0, 1.0, 1.0])?;
    let mut convergence: Vec<ConvergenceRow> = Vec::new();
    for res in [4, 8, 16, 32, 64] {
        let rule = build_rule_seeded(3, res, seed)?;
        let error = (quermassintegrals(&h, &rule)?[0] - exact).abs();
        let order = convergence.last().map(|prev| (prev.error / error).log2());
        convergence.push(ConvergenceRow { resolution: res, nodes: rule.len(), error, order });
    }
    debug_assert!(ball_volume(3) > 0.0);
    Ok(SelfCheck { identity_residual, weight_residuals, exactness_residual: exactness_residual()?, convergence })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn body_spec_toml() {
        let text = r#"
kind = "minkowski"
t = 0.5
[first]
kind = "ball"
radius = 1.0
[second]
kind = "translate"
offset = [0.1, 0.0, 0.0]
[second.body]
kind = "ellipsoid"
axes = [2.0, 1.0, 1.0]
"#;
        let spec: BodySpec = parse_text(text).unwrap();
        assert_eq!(spec.natural_dim(), Some(3));
        let h = spec.build(3).unwrap();
        let u = [1.0, 0.0, 0.0];
        assert!((h.value(&u) - 0.5 * (1.0 + 2.1)).abs() < 1e-14);
    }

    #[test]
    fn body_spec_json_and_errors() {
        let spec: BodySpec = parse_text(r#"{"kind":"ball","radius":2}"#).unwrap();
        assert!((spec.build(2).unwrap().value(&[0.0, 1.0]) - 2.0).abs() < 1e-15);
        assert!(parse_text::<BodySpec>("kind = \"cube\"").is_err());
        assert!(parse_text::<BodySpec>("kind = \"ellipsoid\"").unwrap().build(3).is_err());
        let e: BodySpec = parse_text("kind = \"ellipsoid\"\naxes = [1.0, 2.0]").unwrap();
        assert!(e.build(3).is_err());
    }

    #[test]
    fn field_specs() {
        let f = FieldSpec::Harmonic { coefficients: vec![2.0] }.build(3).unwrap();
        assert!((f.value(&[0.0, 0.6, 0.8]) - 2.0).abs() < 1e-15);
        let too_many = FieldSpec::Harmonic { coefficients: vec![1.0; 100] };
        assert!(too_many.build(3).is_err());
        let r = FieldSpec::Random { seed: 3, max_degree: 2, scale: 1.0 };
        assert_eq!(r.build(3).unwrap().value(&[1.0, 0.0, 0.0]), r.build(3).unwrap().value(&[1.0, 0.0, 0.0]));
    }

    #[test]
    fn random_bodies_certify() {
        let rule = build_rule_seeded(3, 16, 0).unwrap();
        for spec in random_bodies(3, 8, 11) {
            let h = spec.build(3).unwrap();
            assert!(h.validate_c2plus(&rule, DEFAULT_PD_EPS).unwrap().pass, "{spec:?}");
        }
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn monomial_integrals() {
        use std::f64::consts::PI;
        assert!((monomial_sphere_integral(&[0, 0, 0]) - 4.0 * PI).abs() < 1e-14);
        assert!((monomial_sphere_integral(&[2, 0, 0]) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((monomial_sphere_integral(&[0, 0]) - 2.0 * PI).abs() < 1e-14);
        assert!((monomial_sphere_integral(&[2, 2]) - PI / 4.0).abs() < 1e-14);
    }

    #[test]
    fn config_defaults_parse() {
        let cfg: RunConfig = parse_text("n = 2\nseed = 9").unwrap();
        assert_eq!(cfg.resolution(), 256);
        assert_eq!(cfg.t_grid.len(), 11);
        assert!(parse_text::<RunConfig>("bogus = 1").is_err());
    }
}
