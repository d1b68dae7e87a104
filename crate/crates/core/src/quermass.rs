//! Quermassintegrals from the support-function integral representation
//!
//! `W_i(K) = (1/n) C(n−1, n−i−1)^{−1} ∫ h S_{n−i−1}(Ξ⁻¹) dH^{n−1}`,
//!
//! the functionals `F_k(h) = ∫ h S_{n−k−1}(Ξ⁻¹)`, their first and second
//! variations along `h + sφ`, and the density of the area measure of order
//! one.

use serde::Serialize;

use crate::body::{SupportFunction, DEFAULT_PD_EPS};
use crate::error::{Error, Result};
use crate::sphere::{self, ball_volume, QuadratureRule, SphereField, TangentJet};
use crate::symmfunc::{binomial, cofactor_or_zero, elem_sym};

/// Step of the central first difference used as oracle for `f'(0)`.
pub const FD_FIRST_STEP: f64 = 1e-3;
/// Base step of the second difference (refined once by Richardson).
pub const FD_SECOND_STEP: f64 = 1e-2;
/// Relative accuracy assumed for quadrature values of `F_k` when bounding
/// the resolution of the difference quotients.
pub const ORACLE_NOISE: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct VariationReport {
    pub k: usize,
    pub f_value: f64,
    pub f_prime: f64,
    pub f_second: f64,
    pub fd_prime: f64,
    pub fd_second: f64,
    /// `|f' − fd'|` relative to `max(|f'|, |fd'|)`, floored at the
    /// round-off level of the difference quotient.
    pub prime_discrepancy: f64,
    pub second_discrepancy: f64,
    pub analytic: bool,
}

fn check_index(k: usize, n: usize) -> Result<()> {
    if k >= n {
        return Err(Error::domain(format!("index {k} outside 0..{n}")));
    }
    Ok(())
}

/// `F_k` from pre-sampled jets of `h`.
pub fn functional_from_samples(k: usize, n: usize, samples: &[TangentJet], rule: &QuadratureRule) -> Result<f64> {
    check_index(k, n)?;
    let order = n - k - 1;
    let values = rule.map(|i| {
        let s = &samples[i];
        s.value * elem_sym(&s.hessian_1hom, order).unwrap_or(f64::NAN)
    });
    Ok(rule.integrate(&values))
}

/// `F_k(h) = ∫ h S_{n−k−1}(Ξ⁻¹) dH^{n−1}`, `0 ≤ k ≤ n−1`.
pub fn functional_f(k: usize, h: &SupportFunction, rule: &QuadratureRule) -> Result<f64> {
    check_index(k, h.dim())?;
    functional_from_samples(k, h.dim(), &h.sample(rule)?, rule)
}

/// `1 / (n C(n−1, n−i−1))`.
pub fn quermass_constant(n: usize, i: usize) -> f64 {
    1.0 / (n as f64 * binomial(n - 1, n - i - 1))
}

/// `W_i(K)` for `0 ≤ i ≤ n−1`.
pub fn quermassintegral(i: usize, h: &SupportFunction, rule: &QuadratureRule) -> Result<f64> {
    Ok(quermass_constant(h.dim(), i) * functional_f(i, h, rule)?)
}

/// `W_0(K), …, W_{n−1}(K)` from one sampling pass.
pub fn quermassintegrals(h: &SupportFunction, rule: &QuadratureRule) -> Result<Vec<f64>> {
    let n = h.dim();
    let samples = h.sample(rule)?;
    (0..n)
        .map(|i| Ok(quermass_constant(n, i) * functional_from_samples(i, n, &samples, rule)?))
        .collect()
}

/// Worst relative residual between `W_0(K + tB)` computed directly and the
/// Steiner polynomial `Σ_i t^i C(n,i) W_i(K)` (with `W_n` the volume of the
/// unit ball), over the given `t ≥ 0`.
pub fn steiner_check(h: &SupportFunction, rule: &QuadratureRule, t_values: &[f64]) -> Result<f64> {
    if let Some(t) = t_values.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::domain(format!("parallel distance {t} must be nonnegative")));
    }
    let n = h.dim();
    let mut w = quermassintegrals(h, rule)?;
    w.push(ball_volume(n));
    let mut worst: f64 = 0.0;
    for &t in t_values {
        let direct = quermassintegral(0, &h.parallel_body(t), rule)?;
        let poly: f64 = (0..=n).map(|i| t.powi(i as i32) * binomial(n, i) * w[i]).sum();
        let resid = (direct - poly).abs() / direct.abs().max(poly.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max(resid);
    }
    Ok(worst)
}

/// `f'(s) = (n−k) ∫ φ S_{n−k−1}(Ξ⁻¹_s)` for `f(s) = F_k(h + sφ)`.
pub fn first_variation(
    k: usize,
    h: &SupportFunction,
    phi: &SphereField,
    s: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let n = h.dim();
    check_index(k, n)?;
    let hs = h.perturbed(s, phi);
    hs.certify(rule, DEFAULT_PD_EPS)?;
    let samples = hs.sample(rule)?;
    let phi_values = sphere::sample_values(phi, rule);
    Ok(first_variation_from_samples(k, n, &samples, &phi_values, rule))
}

pub(crate) fn first_variation_from_samples(
    k: usize,
    n: usize,
    samples: &[TangentJet],
    phi_values: &[f64],
    rule: &QuadratureRule,
) -> f64 {
    let order = n - k - 1;
    let v = rule.map(|i| phi_values[i] * elem_sym(&samples[i].hessian_1hom, order).unwrap_or(f64::NAN));
    (n - k) as f64 * rule.integrate(&v)
}

/// `f''(0) = (n−k) ∫ φ Σ_ij S^{ij}_{n−k−1}(Ξ⁻¹) (φ_ij + φ δ_ij)`.
pub fn second_variation(k: usize, h: &SupportFunction, phi: &SphereField, rule: &QuadratureRule) -> Result<f64> {
    let n = h.dim();
    check_index(k, n)?;
    h.certify(rule, DEFAULT_PD_EPS)?;
    let samples = h.sample(rule)?;
    let order = n - k - 1;
    let v = rule.map(|i| {
        let pj = sphere::node_jet(phi, rule, i);
        let cof = cofactor_or_zero(&samples[i].hessian_1hom, order).unwrap_or_else(|_| samples[i].hessian_1hom.scale(f64::NAN));
        pj.value * cof.contract(&pj.hessian_1hom)
    });
    Ok((n - k) as f64 * rule.integrate(&v))
}

fn relative(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Analytic variations of `F_k` at `h` along `φ` next to central
/// finite differences of `F_k` itself.
pub fn variation_report(k: usize, h: &SupportFunction, phi: &SphereField, rule: &QuadratureRule) -> Result<VariationReport> {
    let f_prime = first_variation(k, h, phi, 0.0, rule)?;
    let f_second = second_variation(k, h, phi, rule)?;
    let f = |s: f64| functional_f(k, &h.perturbed(s, phi), rule);
    let f_value = f(0.0)?;
    let d = FD_FIRST_STEP;
    let fd_prime = (f(d)? - f(-d)?) / (2.0 * d);
    let second_diff = |d: f64| -> Result<f64> { Ok((f(d)? - 2.0 * f_value + f(-d)?) / (d * d)) };
    let coarse = second_diff(FD_SECOND_STEP)?;
    let fine = second_diff(FD_SECOND_STEP / 2.0)?;
    let fd_second = (4.0 * fine - coarse) / 3.0;
    // resolution of each difference quotient when F carries relative error
    // ORACLE_NOISE; a derivative that vanishes identically compares against it
    let noise = ORACLE_NOISE * f_value.abs();
    Ok(VariationReport {
        k,
        f_value,
        f_prime,
        f_second,
        fd_prime,
        fd_second,
        prime_discrepancy: relative(f_prime, fd_prime, noise / FD_FIRST_STEP),
        second_discrepancy: relative(f_second, fd_second, 68.0 / 3.0 * noise / (FD_SECOND_STEP * FD_SECOND_STEP)),
        analytic: h.is_analytic() && phi.is_analytic(),
    })
}

/// Density of `A_1(K,·)` at `u`: `trace(Ξ⁻¹(u)) / (n−1)`.
pub fn area_measure_one_density(h: &SupportFunction, u: &[f64]) -> f64 {
    let frame = sphere::orthonormal_complement(u);
    let jet = sphere::tangent_jet(h.field(), u, &frame);
    jet.hessian_1hom.trace() / (h.dim() - 1) as f64
}

/// [`area_measure_one_density`] at every node.
pub fn area_measure_one_densities(h: &SupportFunction, rule: &QuadratureRule) -> Result<Vec<f64>> {
    let n = h.dim();
    Ok(h.sample(rule)?.iter().map(|s| s.hessian_1hom.trace() / (n - 1) as f64).collect())
}
