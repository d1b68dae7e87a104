//! Real polynomials in `n` variables and the fixed harmonic basis used for
//! reproducible test fields.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};

/// Sparse polynomial, keyed by exponent vector.
#[derive(Clone, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(vec![0; n], c);
        p
    }

    pub fn monomial(exponents: Vec<u32>, coeff: f64) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, coeff);
        p
    }

    /// `Σ c_i x_i`.
    pub fn linear(c: &[f64]) -> Self {
        let n = c.len();
        let mut p = Self::zero(n);
        for (i, &ci) in c.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(e, ci);
        }
        p
    }

    /// `|x|²`.
    pub fn norm_squared(n: usize) -> Self {
        let mut p = Self::zero(n);
        for i in 0..n {
            let mut e = vec![0; n];
            e[i] = 2;
            p.add_term(e, 1.0);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, exponents: Vec<u32>, coeff: f64) {
        assert_eq!(exponents.len(), self.n, "exponent arity mismatch");
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(exponents).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.retain(|_, c| *c != 0.0);
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut p = Self::zero(self.n);
        for (e, c) in &self.terms {
            p.add_term(e.clone(), c * s);
        }
        p
    }

    pub fn add(&self, other: &Polynomial) -> Self {
        let mut p = self.clone();
        for (e, c) in &other.terms {
            p.add_term(e.clone(), *c);
        }
        p
    }

    pub fn mul(&self, other: &Polynomial) -> Self {
        let mut p = Self::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                p.add_term(e, ca * cb);
            }
        }
        p
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut p = Self::zero(self.n);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                p.add_term(d, c * e[i] as f64);
            }
        }
        p
    }

    pub fn laplacian(&self) -> Self {
        (0..self.n).fold(Self::zero(self.n), |acc, i| acc.add(&self.partial(i).partial(i)))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * monomial_value(e, x)).sum()
    }

    /// Splits into homogeneous components, keyed by degree.
    pub fn homogeneous_parts(&self) -> BTreeMap<u32, Polynomial> {
        let mut parts: BTreeMap<u32, Polynomial> = BTreeMap::new();
        for (e, c) in &self.terms {
            let d = e.iter().sum();
            parts.entry(d).or_insert_with(|| Self::zero(self.n)).add_term(e.clone(), *c);
        }
        parts
    }

    /// Value, gradient and Hessian at `x`.
    pub fn jet(&self, x: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let top = self.degree() as usize;
        // pw[i][k] = x_i^k
        let pw: Vec<Vec<f64>> = x
            .iter()
            .map(|&xi| {
                let mut row = Vec::with_capacity(top + 1);
                let mut acc = 1.0;
                for _ in 0..=top {
                    row.push(acc);
                    acc *= xi;
                }
                row
            })
            .collect();
        let mono = |e: &[u32], skip: &[usize]| -> f64 {
            let mut v = 1.0;
            for (i, &k) in e.iter().enumerate() {
                let k = k as usize - skip.iter().filter(|&&s| s == i).count();
                v *= pw[i][k];
            }
            v
        };
        let mut v = 0.0;
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        for (e, c) in &self.terms {
            v += c * mono(e, &[]);
            for i in 0..n {
                if e[i] == 0 {
                    continue;
                }
                let ei = e[i] as f64;
                g[i] += c * ei * mono(e, &[i]);
                for j in i..n {
                    let dj = if j == i { e[j] as f64 - 1.0 } else { e[j] as f64 };
                    if dj <= 0.0 {
                        continue;
                    }
                    let val = c * ei * dj * mono(e, &[i, j]);
                    h[(i, j)] += val;
                    if j != i {
                        h[(j, i)] += val;
                    }
                }
            }
        }
        (v, g, h)
    }
}

fn monomial_value(e: &[u32], x: &[f64]) -> f64 {
    e.iter().zip(x).fold(1.0, |acc, (&k, &xi)| if k == 0 { acc } else { acc * xi.powi(k as i32) })
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*x{i}")?,
                    _ => write!(f, "*x{i}^{k}")?,
                }
            }
        }
        Ok(())
    }
}

/// Projection of a homogeneous polynomial of degree `d` onto harmonic
/// polynomials: `Σ_j c_j |x|^{2j} Δ^j p` with `c_0 = 1` and
/// `c_j = −c_{j−1} / (2j (n + 2d − 2j − 2))`.
pub fn harmonic_projection(p: &Polynomial, d: u32) -> Polynomial {
    let n = p.nvars() as f64;
    let r2 = Polynomial::norm_squared(p.nvars());
    let mut out = p.clone();
    let mut lap = p.laplacian();
    let mut rpow = Polynomial::constant(p.nvars(), 1.0);
    let mut c = 1.0;
    let mut j = 1u32;
    while !lap.is_zero() {
        c = -c / (2.0 * j as f64 * (n + 2.0 * d as f64 - 2.0 * j as f64 - 2.0));
        rpow = rpow.mul(&r2);
        out = out.add(&rpow.mul(&lap).scaled(c));
        lap = lap.laplacian();
        j += 1;
    }
    out
}

/// Exponent vectors of degree `d` in `n` variables whose first exponent is
/// 0 or 1, in descending lexicographic order.
fn basis_exponents(n: usize, d: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n - 1 {
            prefix.push(d);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=d).rev() {
            if prefix.is_empty() && k > 1 {
                continue;
            }
            prefix.push(k);
            rec(n, d - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 1 {
        if d <= 1 {
            out.push(vec![d]);
        }
        return out;
    }
    rec(n, d, &mut Vec::new(), &mut out);
    out
}

/// The fixed harmonic basis up to `max_degree`.
///
/// For each degree `d = 0, 1, …, max_degree` in turn, the basis lists the
/// harmonic projections of the monomials `x^α` with `|α| = d` and
/// `α_0 ∈ {0, 1}`, in descending lexicographic order of `α`. These span the
/// degree-`d` spherical harmonics, so field coefficient lists over this
/// basis are portable between runs.
pub fn harmonic_basis(n: usize, max_degree: u32) -> Vec<Polynomial> {
    let mut out = Vec::new();
    for d in 0..=max_degree {
        for e in basis_exponents(n, d) {
            out.push(harmonic_projection(&Polynomial::monomial(e, 1.0), d));
        }
    }
    out
}

/// Number of basis elements of degree exactly `d`.
pub fn harmonic_dimension(n: usize, d: u32) -> usize {
    basis_exponents(n, d).len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_match_spherical_harmonics() {
        // n=3: 2d+1; n=2: 1,2,2,...
        for d in 0..=6 {
            assert_eq!(harmonic_dimension(3, d), 2 * d as usize + 1);
            assert_eq!(harmonic_dimension(2, d), if d == 0 { 1 } else { 2 });
        }
        // n=4: (d+1)^2
        for d in 0..=4 {
            assert_eq!(harmonic_dimension(4, d), (d as usize + 1).pow(2));
        }
    }

    #[test]
    fn basis_is_harmonic() {
        for n in 2..=4 {
            for p in harmonic_basis(n, 6) {
                let lap = p.laplacian();
                let worst = lap.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max);
                assert!(worst < 1e-12, "n={n} {p} has laplacian {lap}");
            }
        }
    }

    #[test]
    fn projection_of_square() {
        let p = Polynomial::monomial(vec![2, 0, 0], 1.0);
        let h = harmonic_projection(&p, 2);
        let x = [0.3, -0.4, 0.5];
        let r2: f64 = x.iter().map(|v| v * v).sum();
        assert!((h.eval(&x) - (0.09 - r2 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn jet_matches_partials() {
        let p = harmonic_basis(3, 4).pop().unwrap();
        let x = [0.2, 0.7, -0.1];
        let (v, g, h) = p.jet(&x);
        assert!((v - p.eval(&x)).abs() < 1e-14);
        for i in 0..3 {
            assert!((g[i] - p.partial(i).eval(&x)).abs() < 1e-13);
            for j in 0..3 {
                assert!((h[(i, j)] - p.partial(i).partial(j).eval(&x)).abs() < 1e-13);
            }
        }
    }
}
