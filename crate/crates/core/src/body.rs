//! Convex bodies given by their support functions.
//!
//! A [`SupportFunction`] is a field on the sphere together with the ambient
//! dimension. Whether it really is the support function of a C²₊ body is
//! checked a posteriori by [`SupportFunction::validate_c2plus`], which scans
//! the radii-of-curvature matrix `(h_ij + h δ_ij)` over a quadrature rule.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sphere::{self, dot, norm, QuadratureRule, SphereField, TangentJet};

/// Default positive-definiteness threshold, relative to the mean eigenvalue.
pub const DEFAULT_PD_EPS: f64 = 1e-8;

#[derive(Clone)]
pub struct SupportFunction {
    dim: usize,
    field: SphereField,
    label: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BodyCertificate {
    pub body: String,
    pub rule: String,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub mean_eigenvalue: f64,
    pub threshold: f64,
    pub worst_node: usize,
    pub analytic: bool,
    pub pass: bool,
}

impl SupportFunction {
    /// Wraps an arbitrary field; nothing is certified.
    pub fn from_field(dim: usize, field: SphereField, label: impl Into<String>) -> Self {
        SupportFunction { dim, field, label: label.into() }
    }

    pub fn ball(r: f64, n: usize) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("ball radius {r} must be positive")));
        }
        if n < 2 {
            return Err(Error::domain(format!("dimension {n} < 2")));
        }
        Ok(Self::from_field(n, SphereField::constant(r), format!("ball({r})")))
    }

    /// `h(u) = sqrt(⟨u, Q u⟩)` for symmetric positive definite `Q`.
    pub fn ellipsoid(q: DMatrix<f64>) -> Result<Self> {
        let n = q.nrows();
        if n < 2 || q.ncols() != n {
            return Err(Error::domain("ellipsoid matrix must be square of size >= 2"));
        }
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-12 * q.amax() {
            return Err(Error::domain("ellipsoid matrix is not symmetric"));
        }
        if q.clone().cholesky().is_none() {
            return Err(Error::domain("ellipsoid matrix is not positive definite"));
        }
        let label = format!("ellipsoid({})", matrix_label(&q));
        Ok(Self::from_field(n, SphereField::quadratic_root(q), label))
    }

    /// Axis-aligned ellipsoid with the given semi-axes.
    pub fn ellipsoid_axes(axes: &[f64]) -> Result<Self> {
        if axes.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::domain("semi-axes must be positive"));
        }
        let q = DMatrix::from_diagonal(&DVector::from_iterator(axes.len(), axes.iter().map(|a| a * a)));
        let mut h = Self::ellipsoid(q)?;
        h.label = format!("ellipsoid{axes:?}");
        Ok(h)
    }

    /// `1 + ε g`. Must be certified before use.
    pub fn perturbed_ball(n: usize, eps: f64, g: &SphereField) -> Result<Self> {
        let ball = Self::ball(1.0, n)?;
        Ok(Self::from_field(
            n,
            ball.field.combine(1.0, g, eps),
            format!("perturbed_ball({eps},{g})"),
        ))
    }

    pub fn translate(&self, x0: &[f64]) -> Result<Self> {
        self.check_vec(x0)?;
        if x0.iter().all(|v| *v == 0.0) {
            return Ok(self.clone());
        }
        Ok(Self::from_field(
            self.dim,
            self.field.combine(1.0, &SphereField::linear(x0), 1.0),
            format!("translate({},{x0:?})", self.label),
        ))
    }

    /// `λ K` for `λ > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::domain(format!("scale {lambda} must be positive")));
        }
        Ok(Self::from_field(
            self.dim,
            SphereField::combination(vec![(lambda, self.field.clone())]),
            format!("{lambda}*{}", self.label),
        ))
    }

    /// `h + s φ`.
    pub fn perturbed(&self, s: f64, phi: &SphereField) -> Self {
        Self::from_field(self.dim, self.field.combine(1.0, phi, s), format!("{}+{s}*{phi}", self.label))
    }

    /// Outer parallel body `K + tB`.
    pub fn parallel_body(&self, t: f64) -> Self {
        Self::from_field(
            self.dim,
            self.field.combine(1.0, &SphereField::constant(1.0), t),
            format!("{}+{t}B", self.label),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> &SphereField {
        &self.field
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        self.field.value(u)
    }

    pub fn is_analytic(&self) -> bool {
        self.field.is_analytic()
    }

    /// Tangent jets (value, gradient, `Ξ⁻¹`) at every node.
    pub fn sample(&self, rule: &QuadratureRule) -> Result<Vec<TangentJet>> {
        self.check_rule(rule)?;
        Ok(sphere::sample_jets(&self.field, rule))
    }

    /// Scans `Ξ⁻¹ = (h_ij + h δ_ij)` over the rule.
    pub fn validate_c2plus(&self, rule: &QuadratureRule, eps_pd: f64) -> Result<BodyCertificate> {
        self.check_rule(rule)?;
        let extremes = rule.map(|i| {
            let ev = sphere::tangent_hessian_1hom(&self.field, rule, i).eigenvalues();
            let mean = ev.iter().sum::<f64>() / ev.len() as f64;
            (ev[0], ev[ev.len() - 1], mean)
        });
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut worst = 0;
        let mut mean = 0.0;
        for (i, (lo, hi, m)) in extremes.iter().enumerate() {
            if *lo < min {
                min = *lo;
                worst = i;
            }
            max = max.max(*hi);
            mean += m * rule.weight(i);
        }
        mean /= rule.weights().iter().sum::<f64>();
        let threshold = eps_pd * mean.abs();
        Ok(BodyCertificate {
            body: self.label.clone(),
            rule: rule.describe(),
            min_eigenvalue: min,
            max_eigenvalue: max,
            mean_eigenvalue: mean,
            threshold,
            worst_node: worst,
            analytic: self.is_analytic(),
            pass: mean > 0.0 && min > threshold && min.is_finite(),
        })
    }

    /// Certificate that errors when the body fails.
    pub fn certify(&self, rule: &QuadratureRule, eps_pd: f64) -> Result<BodyCertificate> {
        let cert = self.validate_c2plus(rule, eps_pd)?;
        if !cert.pass {
            return Err(Error::NotCertified { min_eigenvalue: cert.min_eigenvalue, threshold: cert.threshold });
        }
        Ok(cert)
    }

    /// Boundary point with outer normal `u`: `∇H(u)`.
    pub fn inverse_gauss(&self, u: &[f64]) -> Vec<f64> {
        self.field.jet(u).gradient.iter().copied().collect()
    }

    /// Radial function at `u`: `min_{⟨u,v⟩>0} h(v)/⟨u,v⟩`, first over the
    /// rule nodes and then refined locally. Equals `1/h_{K°}(u)`.
    pub fn radial_function(&self, u: &[f64], rule: &QuadratureRule) -> Result<f64> {
        let values = self.interior_values(rule)?;
        Ok(self.radial_from_values(u, rule, &values))
    }

    /// Radial function at every node of `rule`.
    pub fn radial_at_nodes(&self, rule: &QuadratureRule) -> Result<Vec<f64>> {
        let values = self.interior_values(rule)?;
        Ok(rule.map(|i| self.radial_from_values(rule.node(i), rule, &values)))
    }

    fn interior_values(&self, rule: &QuadratureRule) -> Result<Vec<f64>> {
        self.check_rule(rule)?;
        let values = sphere::sample_values(&self.field, rule);
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::OriginNotInterior { node, value });
        }
        Ok(values)
    }

    fn radial_from_values(&self, u: &[f64], rule: &QuadratureRule, values: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        let mut arg = None;
        for (i, v) in rule.nodes().iter().enumerate() {
            let c = dot(u, v);
            if c > 1e-12 {
                let r = values[i] / c;
                if r < best {
                    best = r;
                    arg = Some(i);
                }
            }
        }
        let Some(arg) = arg else { return best };
        // On the affine plane {⟨u,x⟩ = 1}, h(v)/⟨u,v⟩ = H(x) with H convex.
        let start: Vec<f64> = rule.node(arg).iter().map(|x| x / dot(u, rule.node(arg))).collect();
        let frame = sphere::orthonormal_complement(u);
        let s0: Vec<f64> = frame.iter().map(|e| dot(e, &start)).collect();
        let refined = if self.is_analytic() {
            newton_on_plane(&self.field, u, &frame, s0)
        } else {
            let spacing = 4.0 * (sphere::sphere_area(rule.dim()) / rule.len() as f64).powf(1.0 / (rule.dim() - 1) as f64);
            golden_on_plane(&self.field, u, &frame, s0, spacing)
        };
        refined.min(best)
    }

    fn check_rule(&self, rule: &QuadratureRule) -> Result<()> {
        if rule.dim() != self.dim {
            return Err(Error::domain(format!(
                "body in R^{} evaluated on a rule for S^{}",
                self.dim,
                rule.dim() - 1
            )));
        }
        Ok(())
    }

    fn check_vec(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::domain(format!("vector of length {} in R^{}", x.len(), self.dim)));
        }
        Ok(())
    }
}

/// `(1−t) h_K + t h_L`.
pub fn minkowski_combination(t: f64, hk: &SupportFunction, hl: &SupportFunction) -> Result<SupportFunction> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("combination parameter {t} outside [0,1]")));
    }
    if hk.dim != hl.dim {
        return Err(Error::domain("bodies live in different dimensions"));
    }
    Ok(SupportFunction::from_field(
        hk.dim,
        hk.field.combine(1.0 - t, &hl.field, t),
        format!("mix({t};{},{})", hk.label, hl.label),
    ))
}

impl fmt::Debug for SupportFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SupportFunction[R^{}]({})", self.dim, self.label)
    }
}

impl fmt::Display for SupportFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn matrix_label(q: &DMatrix<f64>) -> String {
    let rows: Vec<String> = (0..q.nrows())
        .map(|i| (0..q.ncols()).map(|j| format!("{}", q[(i, j)])).collect::<Vec<_>>().join(","))
        .collect();
    format!("[{}]", rows.join(";"))
}

fn plane_point(u: &[f64], frame: &[Vec<f64>], s: &[f64]) -> Vec<f64> {
    let mut x = u.to_vec();
    for (e, si) in frame.iter().zip(s) {
        x.iter_mut().zip(e).for_each(|(xi, ei)| *xi += si * ei);
    }
    x
}

/// Damped Newton for `min_s H(u + E s)`.
fn newton_on_plane(f: &SphereField, u: &[f64], frame: &[Vec<f64>], mut s: Vec<f64>) -> f64 {
    let m = frame.len();
    let mut x = plane_point(u, frame, &s);
    let mut val = f.extension_value(&x);
    for _ in 0..50 {
        let jet = f.jet(&x);
        let ev: Vec<DVector<f64>> = frame.iter().map(|e| DVector::from_column_slice(e)).collect();
        let g = DVector::from_fn(m, |a, _| ev[a].dot(&jet.gradient));
        let h = DMatrix::from_fn(m, m, |a, b| ev[a].dot(&(&jet.hessian * &ev[b])));
        let Some(step) = h.clone().cholesky().map(|c| c.solve(&g)) else { break };
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = s.iter().zip(step.iter()).map(|(si, di)| si - lambda * di).collect();
            let xt = plane_point(u, frame, &trial);
            let vt = f.extension_value(&xt);
            if vt <= val {
                improved = vt < val;
                s = trial;
                x = xt;
                val = vt;
                break;
            }
            lambda *= 0.5;
        }
        if !improved || step.norm() * lambda < 1e-15 * (1.0 + norm(&s)) {
            break;
        }
    }
    val
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Cyclic golden-section line searches along the frame directions.
fn golden_on_plane(f: &SphereField, u: &[f64], frame: &[Vec<f64>], mut s: Vec<f64>, width: f64) -> f64 {
    let eval = |s: &[f64]| f.extension_value(&plane_point(u, frame, s));
    let mut val = eval(&s);
    for _ in 0..200 {
        let before = val;
        for a in 0..frame.len() {
            let line = |t: f64| {
                let mut st = s.clone();
                st[a] = t;
                eval(&st)
            };
            let (mut lo, mut hi) = (s[a] - width, s[a] + width);
            // widen until the minimum is bracketed
            while line(lo) < line(s[a]).min(line(hi)) {
                lo -= width;
            }
            while line(hi) < line(s[a]).min(line(lo)) {
                hi += width;
            }
            let mut c = hi - INV_PHI * (hi - lo);
            let mut d = lo + INV_PHI * (hi - lo);
            let (mut fc, mut fd) = (line(c), line(d));
            while (hi - lo) > 1e-10 * (1.0 + s[a].abs()) {
                if fc < fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - INV_PHI * (hi - lo);
                    fc = line(c);
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + INV_PHI * (hi - lo);
                    fd = line(d);
                }
            }
            let t = 0.5 * (lo + hi);
            let ft = line(t);
            if ft < val {
                s[a] = t;
                val = ft;
            }
        }
        if before - val <= 1e-15 * val.abs() {
            break;
        }
    }
    val
}
