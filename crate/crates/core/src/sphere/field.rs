//! Scalar fields on the sphere, evaluated through their 1-homogeneous
//! extension `F(x) = |x|·f(x/|x|)`.
//!
//! At a unit vector `u`, the Euclidean Hessian of `F` restricted to the
//! tangent space is `(f_ij + f δ_ij)` and the tangential part of `∇F` is the
//! spherical gradient of `f`, so covariant calculus on the sphere reduces to
//! Euclidean derivatives of `F`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::poly::Polynomial;

/// Value, gradient and Hessian of the 1-homogeneous extension at a point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl Jet {
    fn zero(n: usize) -> Self {
        Jet { value: 0.0, gradient: DVector::zeros(n), hessian: DMatrix::zeros(n, n) }
    }

    fn axpy(&mut self, a: f64, other: &Jet) {
        self.value += a * other.value;
        self.gradient.axpy(a, &other.gradient, 1.0);
        self.hessian += &other.hessian * a;
    }
}

type FieldFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// User-supplied field. Derivatives come from central differences.
pub struct CustomField {
    name: String,
    f: Box<FieldFn>,
}

/// A polynomial restricted to the sphere, pre-split into homogeneous parts.
#[derive(Clone, Debug)]
pub struct PolyField {
    poly: Polynomial,
    parts: Vec<(u32, Polynomial)>,
}

impl PolyField {
    pub fn new(poly: Polynomial) -> Self {
        let parts = poly.homogeneous_parts().into_iter().collect();
        PolyField { poly, parts }
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }
}

#[derive(Clone)]
pub enum SphereField {
    Constant(f64),
    /// `⟨a, u⟩`.
    Linear(Arc<[f64]>),
    Polynomial(Arc<PolyField>),
    /// `sqrt(⟨u, Q u⟩)` for a symmetric positive definite `Q`.
    QuadraticRoot(Arc<DMatrix<f64>>),
    /// Finite linear combination `Σ c_i f_i`.
    Combination(Arc<[(f64, SphereField)]>),
    Custom(Arc<CustomField>),
}

impl SphereField {
    pub fn constant(c: f64) -> Self {
        SphereField::Constant(c)
    }

    pub fn linear(a: &[f64]) -> Self {
        SphereField::Linear(a.into())
    }

    pub fn polynomial(p: Polynomial) -> Self {
        SphereField::Polynomial(Arc::new(PolyField::new(p)))
    }

    pub fn quadratic_root(q: DMatrix<f64>) -> Self {
        SphereField::QuadraticRoot(Arc::new(q))
    }

    pub fn combination(terms: Vec<(f64, SphereField)>) -> Self {
        SphereField::Combination(terms.into())
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        SphereField::Custom(Arc::new(CustomField { name: name.into(), f: Box::new(f) }))
    }

    /// `self + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self::combination(vec![(1.0, self.clone()), (1.0, Self::constant(c))])
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SphereField, b: f64) -> Self {
        Self::combination(vec![(a, self.clone()), (b, other.clone())])
    }

    /// False when any component falls back to finite differences.
    pub fn is_analytic(&self) -> bool {
        match self {
            SphereField::Custom(_) => false,
            SphereField::Combination(terms) => terms.iter().all(|(_, f)| f.is_analytic()),
            _ => true,
        }
    }

    /// Value of the 1-homogeneous extension at `x`; equals `f(x)` for unit `x`.
    pub fn extension_value(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        match self {
            SphereField::Constant(c) => c * r,
            SphereField::Linear(a) => dot(a, x),
            SphereField::Polynomial(p) => {
                p.parts.iter().map(|(d, q)| r.powi(1 - *d as i32) * q.eval(x)).sum()
            }
            SphereField::QuadraticRoot(q) => quad(q, x).sqrt(),
            SphereField::Combination(terms) => {
                terms.iter().map(|(c, f)| c * f.extension_value(x)).sum()
            }
            SphereField::Custom(cf) => {
                let u: Vec<f64> = x.iter().map(|v| v / r).collect();
                r * (cf.f)(&u)
            }
        }
    }

    /// Value of the field at a unit vector.
    pub fn value(&self, u: &[f64]) -> f64 {
        self.extension_value(u)
    }

    /// Value, gradient and Hessian of the 1-homogeneous extension at `x`.
    pub fn jet(&self, x: &[f64]) -> Jet {
        let n = x.len();
        match self {
            SphereField::Constant(c) => {
                let mut j = radial_power_jet(x, 0);
                j.value *= c;
                j.gradient *= *c;
                j.hessian *= *c;
                j
            }
            SphereField::Linear(a) => Jet {
                value: dot(a, x),
                gradient: DVector::from_column_slice(a),
                hessian: DMatrix::zeros(n, n),
            },
            SphereField::Polynomial(p) => {
                let mut out = Jet::zero(n);
                for (d, q) in &p.parts {
                    out.axpy(1.0, &homogeneous_extension_jet(q, *d, x));
                }
                out
            }
            SphereField::QuadraticRoot(q) => {
                let xv = DVector::from_column_slice(x);
                let qx = q.as_ref() * &xv;
                let f = xv.dot(&qx).sqrt();
                let hess = (q.as_ref() - &qx * qx.transpose() / (f * f)) / f;
                Jet { value: f, gradient: qx / f, hessian: hess }
            }
            SphereField::Combination(terms) => {
                let mut out = Jet::zero(n);
                for (c, f) in terms.iter() {
                    out.axpy(*c, &f.jet(x));
                }
                out
            }
            SphereField::Custom(_) => finite_difference_jet(self, x),
        }
    }
}

impl fmt::Debug for SphereField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for SphereField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SphereField::Constant(c) => write!(f, "{c}"),
            SphereField::Linear(a) => write!(f, "<{a:?},u>"),
            SphereField::Polynomial(p) => write!(f, "poly[{}]", p.poly),
            SphereField::QuadraticRoot(q) => {
                let rows: Vec<Vec<f64>> =
                    (0..q.nrows()).map(|i| (0..q.ncols()).map(|j| q[(i, j)]).collect()).collect();
                write!(f, "sqrt(<u,{rows:?}u>)")
            }
            SphereField::Combination(terms) => {
                write!(f, "(")?;
                for (i, (c, t)) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{c}*{t}")?;
                }
                write!(f, ")")
            }
            SphereField::Custom(cf) => write!(f, "custom:{}", cf.name),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn quad(q: &DMatrix<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += x[i] * q[(i, j)] * x[j];
        }
    }
    s
}

/// Jet of `r^{1−d}` (times nothing); used for constants (`d = 0`).
fn radial_power_jet(x: &[f64], d: u32) -> Jet {
    let n = x.len();
    let poly = Polynomial::constant(n, 1.0);
    homogeneous_extension_jet(&poly, d, x)
}

/// Jet of `F(x) = r^{1−d} p(x)` for `p` homogeneous of degree `d`.
fn homogeneous_extension_jet(p: &Polynomial, d: u32, x: &[f64]) -> Jet {
    let n = x.len();
    let (pv, pg, ph) = p.jet(x);
    let xv = DVector::from_column_slice(x);
    let r = xv.norm();
    let a = 1.0 - d as f64;
    let r_a = r.powf(a);
    let r_a2 = r_a / (r * r);
    let r_a4 = r_a2 / (r * r);

    let value = r_a * pv;
    let gradient = &pg * r_a + &xv * (a * r_a2 * pv);
    let cross = &pg * xv.transpose() + &xv * pg.transpose();
    let hessian = ph * r_a
        + cross * (a * r_a2)
        + DMatrix::identity(n, n) * (a * pv * r_a2)
        + &xv * xv.transpose() * (a * (a - 2.0) * pv * r_a4);
    Jet { value, gradient, hessian }
}

/// Central differences on the 1-homogeneous extension: step
/// `ε^{1/3}·max(1,|x|)` for the gradient and `ε^{1/4}·max(1,|x|)` for the
/// Hessian.
fn finite_difference_jet(f: &SphereField, x: &[f64]) -> Jet {
    let n = x.len();
    let scale = norm(x).max(1.0);
    let h1 = f64::EPSILON.cbrt() * scale;
    let h2 = f64::EPSILON.powf(0.25) * scale;
    let eval = |dx: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, d) in dx {
            y[i] += d;
        }
        f.extension_value(&y)
    };
    let value = f.extension_value(x);
    let gradient =
        DVector::from_fn(n, |i, _| (eval(&[(i, h1)]) - eval(&[(i, -h1)])) / (2.0 * h1));
    let mut hessian = DMatrix::zeros(n, n);
    for i in 0..n {
        hessian[(i, i)] = (eval(&[(i, h2)]) - 2.0 * value + eval(&[(i, -h2)])) / (h2 * h2);
        for j in (i + 1)..n {
            let v = (eval(&[(i, h2), (j, h2)]) - eval(&[(i, h2), (j, -h2)])
                - eval(&[(i, -h2), (j, h2)])
                + eval(&[(i, -h2), (j, -h2)]))
                / (4.0 * h2 * h2);
            hessian[(i, j)] = v;
            hessian[(j, i)] = v;
        }
    }
    Jet { value, gradient, hessian }
}
