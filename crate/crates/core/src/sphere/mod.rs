//! Quadrature on `S^{n−1}` and covariant derivatives of scalar fields.

mod field;
pub mod poly;
mod rule;

pub use field::{CustomField, Jet, PolyField, SphereField};
pub use poly::{harmonic_basis, harmonic_dimension, Polynomial};
pub use rule::{
    ball_volume, build_rule, build_rule_seeded, gauss_legendre, sphere_area, QuadratureRule,
    RuleKind, DEFAULT_MC_SEED,
};

pub(crate) use field::{dot, norm};

use crate::symmfunc::SymMatrix;

/// Derivatives of a field at one point of the sphere, in a tangent frame.
#[derive(Clone, Debug)]
pub struct TangentJet {
    pub value: f64,
    /// Spherical gradient in frame coordinates.
    pub gradient: Vec<f64>,
    /// `(f_ij + f δ_ij)`: Hessian of the 1-homogeneous extension restricted
    /// to the frame.
    pub hessian_1hom: SymMatrix,
    /// Full Euclidean gradient of the 1-homogeneous extension.
    pub ambient_gradient: Vec<f64>,
}

impl TangentJet {
    /// `(f_ij)` alone.
    pub fn covariant_hessian(&self) -> SymMatrix {
        self.hessian_1hom.combine(1.0, &SymMatrix::identity(self.gradient.len()), -self.value)
    }
}

/// Orthonormal basis of `u^⊥`, built from the coordinate axes least
/// aligned with `u`.
pub fn orthonormal_complement(u: &[f64]) -> Vec<Vec<f64>> {
    rule::frame_gram_schmidt(u)
}

/// Evaluates `f` at unit vector `u` in the given orthonormal tangent frame.
pub fn tangent_jet(f: &SphereField, u: &[f64], frame: &[Vec<f64>]) -> TangentJet {
    let jet = f.jet(u);
    let n = u.len();
    let m = frame.len();
    let proj: Vec<Vec<f64>> = frame
        .iter()
        .map(|e| (0..n).map(|i| (0..n).map(|j| jet.hessian[(i, j)] * e[j]).sum()).collect())
        .collect();
    let hessian_1hom = SymMatrix::from_fn(m, |a, b| dot(&frame[a], &proj[b]));
    let gradient = frame.iter().map(|e| e.iter().zip(jet.gradient.iter()).map(|(x, y)| x * y).sum()).collect();
    TangentJet {
        value: jet.value,
        gradient,
        hessian_1hom,
        ambient_gradient: jet.gradient.iter().copied().collect(),
    }
}

/// [`tangent_jet`] at node `i` of `rule`.
pub fn node_jet(f: &SphereField, rule: &QuadratureRule, i: usize) -> TangentJet {
    tangent_jet(f, rule.node(i), rule.frame(i))
}

/// `(f_ij + f δ_ij)` at node `i`.
pub fn tangent_hessian_1hom(f: &SphereField, rule: &QuadratureRule, i: usize) -> SymMatrix {
    node_jet(f, rule, i).hessian_1hom
}

/// Spherical gradient at node `i`, in frame coordinates.
pub fn spherical_gradient(f: &SphereField, rule: &QuadratureRule, i: usize) -> Vec<f64> {
    node_jet(f, rule, i).gradient
}

/// Covariant Hessian `(f_ij)` at node `i`.
pub fn covariant_hessian(f: &SphereField, rule: &QuadratureRule, i: usize) -> SymMatrix {
    node_jet(f, rule, i).covariant_hessian()
}

/// Tangent jets at every node, in node order.
pub fn sample_jets(f: &SphereField, rule: &QuadratureRule) -> Vec<TangentJet> {
    rule.map(|i| node_jet(f, rule, i))
}

/// Values at every node, in node order.
pub fn sample_values(f: &SphereField, rule: &QuadratureRule) -> Vec<f64> {
    rule.map(|i| f.value(rule.node(i)))
}
