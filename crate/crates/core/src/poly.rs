//! Sparse multivariate polynomials in the position coordinates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A polynomial `sum_k c_k x^{e_k}` stored as a map from exponent vectors to
/// coefficients. Duplicate exponents are merged and zero coefficients pruned
/// on construction.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolyField {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl PolyField {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::from_terms(nvars, [(vec![0; nvars], c)])
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs.
    ///
    /// Panics if an exponent vector does not have `nvars` entries.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (exps, coef) in terms {
            assert_eq!(exps.len(), nvars, "exponent vector length must equal nvars");
            *map.entry(exps).or_insert(0.0) += coef;
        }
        map.retain(|_, c| *c != 0.0);
        Self { nvars, terms: map }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every monomial is constant.
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k == 0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_terms(self.nvars, self.terms.iter().map(|(e, c)| (e.clone(), c * s)))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms.iter().map(|(e, c)| c * monomial(e, x)).sum()
    }

    /// Value and exact gradient.
    pub fn eval_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.nvars];
        let mut value = 0.0;
        for (e, c) in &self.terms {
            value += c * monomial(e, x);
            for (s, g) in grad.iter_mut().enumerate() {
                if e[s] > 0 {
                    *g += c * partial(e, x, &[s]);
                }
            }
        }
        (value, grad)
    }

    /// Exact Hessian, row-major `n x n`.
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let n = self.nvars;
        let mut h = vec![0.0; n * n];
        for (e, c) in &self.terms {
            for s in 0..n {
                for t in s..n {
                    let need_s = if s == t { 2 } else { 1 };
                    if e[s] < need_s || e[t] == 0 {
                        continue;
                    }
                    let v = c * partial(e, x, &[s, t]);
                    h[s * n + t] += v;
                    if s != t {
                        h[t * n + s] += v;
                    }
                }
            }
        }
        h
    }

    pub fn add(&self, other: &PolyField) -> PolyField {
        assert_eq!(self.nvars, other.nvars);
        Self::from_terms(
            self.nvars,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(e, c)| (e.clone(), *c)),
        )
    }
}

fn monomial(e: &[u32], x: &[f64]) -> f64 {
    e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product()
}

/// Partial derivative of the monomial `x^e` with respect to the listed
/// variables (repeats allowed).
fn partial(e: &[u32], x: &[f64], vars: &[usize]) -> f64 {
    let mut e = e.to_vec();
    let mut factor = 1.0;
    for &v in vars {
        if e[v] == 0 {
            return 0.0;
        }
        factor *= e[v] as f64;
        e[v] -= 1;
    }
    factor * monomial(&e, x)
}

/// Value and gradient of `f` at `x`.
pub fn poly_eval_grad(f: &PolyField, x: &[f64]) -> (f64, Vec<f64>) {
    f.eval_grad(x)
}
