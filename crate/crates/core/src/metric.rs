//! Metric-level quantities of an m-th root Cartan metric
//! `K(x,p) = (a^{i_1...i_m}(x) p_{i_1} ... p_{i_m})^{1/m}` at a single point of
//! the punctured cotangent bundle.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{checked_inverse, matrix_of};
use crate::poly::PolyField;
use crate::symtensor::{DenseTensor, SymCoeffTensor, SymValueTensor};

/// `a^{ij}` is treated as singular above this condition number.
pub const MAX_CONDITION: f64 = 1e12;

/// An m-th root metric together with an optional reference volume density.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    a: SymCoeffTensor,
    sigma: Option<PolyField>,
    name: Option<String>,
}

impl MetricSpec {
    pub fn new(a: SymCoeffTensor, sigma: Option<PolyField>) -> Result<Self> {
        if a.n() < 2 {
            return Err(Error::InvalidSpec(format!("dimension must be at least 2, got {}", a.n())));
        }
        if a.m() < 2 {
            return Err(Error::InvalidSpec(format!("degree must be at least 2, got {}", a.m())));
        }
        if let Some(s) = &sigma {
            if s.nvars() != a.n() {
                return Err(Error::InvalidSpec("sigma has the wrong number of variables".into()));
            }
        }
        Ok(Self { a, sigma, name: None })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn m(&self) -> usize {
        self.a.m()
    }

    pub fn coefficients(&self) -> &SymCoeffTensor {
        &self.a
    }

    pub fn sigma(&self) -> Option<&PolyField> {
        self.sigma.as_ref()
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Reference volume density, defaulting to the constant 1.
    pub fn sigma_or_one(&self) -> PolyField {
        self.sigma.clone().unwrap_or_else(|| PolyField::constant(self.n(), 1.0))
    }

    /// Same metric with `a` multiplied by `s` (so `K` scales by `s^{1/m}`).
    pub fn scaled(&self, s: f64) -> Self {
        Self { a: self.a.scaled(s), sigma: self.sigma.clone(), name: self.name.clone() }
    }

    /// True when no coefficient depends on position.
    pub fn is_locally_minkowski(&self) -> bool {
        self.a.is_constant()
    }
}

/// `a^{i_1...i_m}(x) p_{i_1} ... p_{i_m}`.
pub fn radicand(spec: &MetricSpec, x: &[f64], p: &[f64]) -> f64 {
    spec.a.eval(x).contract_momenta(p, spec.m()).map(|t| t.as_scalar()).unwrap_or(f64::NAN)
}

/// An admissible point `(x, p)`: nonzero momentum and positive radicand.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    x: Vec<f64>,
    p: Vec<f64>,
}

impl EvalPoint {
    pub fn new(spec: &MetricSpec, x: &[f64], p: &[f64]) -> Result<Self> {
        let n = spec.n();
        if x.len() != n || p.len() != n {
            return Err(Error::InvalidSpec(format!(
                "point has lengths ({}, {}), expected {n}",
                x.len(),
                p.len()
            )));
        }
        if p.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroMomentum);
        }
        let r = radicand(spec, x, p);
        if !(r > 0.0) {
            return Err(Error::NonPositiveRadicand { radicand: r });
        }
        Ok(Self { x: x.to_vec(), p: p.to_vec() })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Same position, momentum scaled by `lambda > 0`.
    pub fn scaled(&self, spec: &MetricSpec, lambda: f64) -> Result<Self> {
        let p: Vec<f64> = self.p.iter().map(|v| v * lambda).collect();
        Self::new(spec, &self.x, &p)
    }
}

/// Raw momentum contractions `T_r = a^{i_1..i_r j_1..j_{m-r}} p_{j_1}..p_{j_{m-r}}`
/// for every `r = 0..=m`, plus `K`.
#[derive(Debug, Clone)]
pub(crate) struct Contractions {
    pub m: usize,
    pub k: f64,
    pub t: Vec<SymValueTensor>,
}

impl Contractions {
    pub fn of(coeffs: &SymValueTensor, p: &[f64]) -> Self {
        let m = coeffs.order();
        let t: Vec<SymValueTensor> = (0..=m)
            .map(|r| coeffs.contract_momenta(p, m - r).expect("r <= m"))
            .collect();
        let k = t[0].as_scalar().powf(1.0 / m as f64);
        Self { m, k, t }
    }

    pub fn at(spec: &MetricSpec, pt: &EvalPoint) -> Self {
        Self::of(&spec.a.eval(&pt.x), &pt.p)
    }

    /// `a^{i_1..i_r} = T_r / K^{m-r}`.
    pub fn a_tensor(&self, r: usize) -> SymValueTensor {
        self.t[r].scale(self.k.powi(-((self.m - r) as i32)))
    }
}

/// The fundamental function `K(x,p)`.
pub fn fundamental(spec: &MetricSpec, pt: &EvalPoint) -> Result<f64> {
    let r = radicand(spec, &pt.x, &pt.p);
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadicand { radicand: r });
    }
    Ok(r.powf(1.0 / spec.m() as f64))
}

/// The normalized order-`r` tensor `a^{i_1..i_r}(x,p)`, `1 <= r <= m`.
pub fn a_tensor(spec: &MetricSpec, pt: &EvalPoint, r: usize) -> Result<SymValueTensor> {
    if r == 0 || r > spec.m() {
        return Err(Error::OrderOutOfRange { order: r, min: 1, max: spec.m() });
    }
    Ok(Contractions::at(spec, pt).a_tensor(r))
}

/// Every metric-level tensor at one point.
#[derive(Debug, Clone)]
pub struct MetricBundle {
    pub k: f64,
    /// `a_tensors[r - 1]` holds `a^{i_1..i_r}` for `r = 1..=min(m, 4)`.
    pub a_tensors: Vec<SymValueTensor>,
    /// Supporting element `l^i = a^i`.
    pub l: Vec<f64>,
    pub g_up: SymValueTensor,
    pub g_down: SymValueTensor,
    pub h: SymValueTensor,
    pub c: SymValueTensor,
    pub i: Vec<f64>,
    /// Condition number of `a^{ij}`.
    pub condition: f64,
}

impl MetricBundle {
    pub fn new(spec: &MetricSpec, pt: &EvalPoint) -> Result<Self> {
        let ctr = Contractions::at(spec, pt);
        Self::from_contractions(&ctr, &pt.p)
    }

    pub(crate) fn from_contractions(ctr: &Contractions, p: &[f64]) -> Result<Self> {
        let m = ctr.m;
        let n = p.len();
        let a_tensors: Vec<SymValueTensor> = (1..=m.min(4)).map(|r| ctr.a_tensor(r)).collect();
        let a1 = &a_tensors[0];
        let a2 = &a_tensors[1];
        let l: Vec<f64> = (0..n).map(|i| a1.get(&[i])).collect();
        let (g_up, g_down, condition) = metric_pair_from(ctr.k, m, a1, a2, p)?;
        let mf = m as f64;
        let h = SymValueTensor::from_fn(n, 2, |ij| (mf - 1.0) * (a2.get(ij) - l[ij[0]] * l[ij[1]]));
        let c = if m == 2 {
            SymValueTensor::zeros(n, 3)
        } else {
            let q = reducibility_from(a1, a2, &a_tensors[2]);
            q.scale(-(mf - 1.0) * (mf - 2.0) / (2.0 * ctr.k))
        };
        let i = mean_cartan_from(&c, &g_down);
        Ok(Self { k: ctr.k, a_tensors, l, g_up, g_down, h, c, i, condition })
    }

    pub fn a(&self, r: usize) -> &SymValueTensor {
        &self.a_tensors[r - 1]
    }
}

fn metric_pair_from(
    k: f64,
    m: usize,
    a1: &SymValueTensor,
    a2: &SymValueTensor,
    p: &[f64],
) -> Result<(SymValueTensor, SymValueTensor, f64)> {
    let n = p.len();
    let mf = m as f64;
    let g_up = SymValueTensor::from_fn(n, 2, |ij| {
        (mf - 1.0) * a2.get(ij) - (mf - 2.0) * a1.get(&ij[..1]) * a1.get(&ij[1..])
    });
    let (a_low, condition) = checked_inverse(&matrix_of(a2), MAX_CONDITION)?;
    let g_down = SymValueTensor::from_fn(n, 2, |ij| {
        let (i, j) = (ij[0], ij[1]);
        let sym = 0.5 * (a_low[(i, j)] + a_low[(j, i)]);
        sym / (mf - 1.0) + (mf - 2.0) / (mf - 1.0) * (p[i] / k) * (p[j] / k)
    });
    Ok((g_up, g_down, condition))
}

/// `g^{ij}` and its inverse `g_{ij}`.
pub fn metric_pair(spec: &MetricSpec, pt: &EvalPoint) -> Result<(SymValueTensor, SymValueTensor)> {
    let ctr = Contractions::at(spec, pt);
    let (up, down, _) = metric_pair_from(ctr.k, ctr.m, &ctr.a_tensor(1), &ctr.a_tensor(2), &pt.p)?;
    Ok((up, down))
}

/// Angular metric `h^{ij} = (m-1)(a^{ij} - a^i a^j)`.
pub fn angular(spec: &MetricSpec, pt: &EvalPoint) -> Result<SymValueTensor> {
    Ok(MetricBundle::new(spec, pt)?.h)
}

/// Cartan torsion `C^{ijk} = -1/2 d g^{ij} / d p_k`.
pub fn cartan_torsion(spec: &MetricSpec, pt: &EvalPoint) -> Result<SymValueTensor> {
    Ok(MetricBundle::new(spec, pt)?.c)
}

/// Mean Cartan torsion `I^i = g_{jk} C^{ijk}`.
pub fn mean_cartan(spec: &MetricSpec, pt: &EvalPoint) -> Result<Vec<f64>> {
    Ok(MetricBundle::new(spec, pt)?.i)
}

pub(crate) fn mean_cartan_from(c: &SymValueTensor, g_down: &SymValueTensor) -> Vec<f64> {
    let n = c.n();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += g_down.get(&[j, k]) * c.get(&[i, j, k]);
                }
            }
            acc
        })
        .collect()
}

/// `a^{ijk} - a^{ij}a^k - a^{jk}a^i - a^{ki}a^j + 2 a^i a^j a^k`; its vanishing
/// is equivalent to `C = 0` for `m >= 3`.
fn reducibility_from(a1: &SymValueTensor, a2: &SymValueTensor, a3: &SymValueTensor) -> SymValueTensor {
    SymValueTensor::from_fn(a1.n(), 3, |ijk| {
        let (i, j, k) = (ijk[0], ijk[1], ijk[2]);
        let (ai, aj, ak) = (a1.get(&[i]), a1.get(&[j]), a1.get(&[k]));
        a3.get(ijk) - a2.get(&[i, j]) * ak - a2.get(&[j, k]) * ai - a2.get(&[k, i]) * aj
            + 2.0 * ai * aj * ak
    })
}

/// The combination whose vanishing characterizes Riemannian reducibility.
/// `None` for `m = 2`, where `a^{ijk}` does not exist.
pub fn reducibility_combination(spec: &MetricSpec, pt: &EvalPoint) -> Option<SymValueTensor> {
    if spec.m() < 3 {
        return None;
    }
    let ctr = Contractions::at(spec, pt);
    Some(reducibility_from(&ctr.a_tensor(1), &ctr.a_tensor(2), &ctr.a_tensor(3)))
}

/// Closed-form momentum derivatives of `a^{ij}`, `a^i` and `a^i a^j`.
/// The last slot of each tensor is the derivative index `k`.
#[derive(Debug, Clone)]
pub struct VerticalDerivatives {
    pub d_aij: DenseTensor,
    pub d_ai: DenseTensor,
    pub d_aiaj: DenseTensor,
}

pub fn vertical_derivatives(spec: &MetricSpec, pt: &EvalPoint) -> VerticalDerivatives {
    let ctr = Contractions::at(spec, pt);
    let (m, k, n) = (ctr.m as f64, ctr.k, spec.n());
    let a1 = ctr.a_tensor(1);
    let a2 = ctr.a_tensor(2);
    let d_aij = if spec.m() == 2 {
        DenseTensor::zeros(n, 3)
    } else {
        let a3 = ctr.a_tensor(3);
        DenseTensor::from_fn(n, 3, |ijk| {
            (m - 2.0) / k * (a3.get(ijk) - a2.get(&ijk[..2]) * a1.get(&ijk[2..]))
        })
    };
    let d_ai = DenseTensor::from_fn(n, 2, |ik| {
        (m - 1.0) / k * (a2.get(ik) - a1.get(&ik[..1]) * a1.get(&ik[1..]))
    });
    let d_aiaj = DenseTensor::from_fn(n, 3, |ijk| {
        let (i, j, kk) = (ijk[0], ijk[1], ijk[2]);
        let (ai, aj, ak) = (a1.get(&[i]), a1.get(&[j]), a1.get(&[kk]));
        (m - 1.0) / k * (a2.get(&[i, kk]) * aj + a2.get(&[j, kk]) * ai - 2.0 * ai * aj * ak)
    });
    VerticalDerivatives { d_aij, d_ai, d_aiaj }
}

/// Directional position derivative `v^s d g^{ij} / d x_s` at fixed `p`,
/// exact through the polynomial coefficients.
pub fn g_up_x_derivative(spec: &MetricSpec, pt: &EvalPoint, v: &[f64]) -> SymValueTensor {
    let n = spec.n();
    let m = spec.m();
    let mf = m as f64;
    let grads = spec.a.eval_gradient(&pt.x);
    let mut da = SymValueTensor::zeros(n, m);
    for (s, g) in grads.iter().enumerate() {
        if v[s] != 0.0 {
            da = da.zip_with(g, |acc, gs| acc + v[s] * gs);
        }
    }
    let ctr = Contractions::at(spec, pt);
    let dctr = Contractions::of(&da, &pt.p);
    let k = ctr.k;
    // D_v K = D_v(K^m) / (m K^{m-1})
    let dk = dctr.t[0].as_scalar() / (mf * k.powi(m as i32 - 1));
    let da_r = |r: usize| -> SymValueTensor {
        let scale = k.powi(-((m - r) as i32));
        let base = ctr.t[r].scale(scale);
        let shift = (m - r) as f64 * dk / k;
        dctr.t[r].scale(scale).zip_with(&base, |d, b| d - shift * b)
    };
    let a1 = ctr.a_tensor(1);
    let da1 = da_r(1);
    let da2 = da_r(2);
    SymValueTensor::from_fn(n, 2, |ij| {
        let (i, j) = (ij[0], ij[1]);
        (mf - 1.0) * da2.get(ij)
            - (mf - 2.0) * (da1.get(&[i]) * a1.get(&[j]) + a1.get(&[i]) * da1.get(&[j]))
    })
}

/// Frobenius-type helper: `T^{ij} x_j`.
pub fn mat_vec(t: &SymValueTensor, v: &[f64]) -> Vec<f64> {
    let n = t.n();
    (0..n).map(|i| (0..n).map(|j| t.get(&[i, j]) * v[j]).sum()).collect()
}

pub fn determinant(t: &SymValueTensor) -> f64 {
    let m: DMatrix<f64> = matrix_of(t);
    m.determinant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn cubic_fundamental_function() {
        let spec = fixtures::m_cub();
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert!(close(fundamental(&spec, &pt).unwrap(), 9f64.cbrt(), 1e-15));
    }

    #[test]
    fn euclidean_quartic_fundamental_function() {
        let spec = fixtures::m_euc4();
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!(close(fundamental(&spec, &pt).unwrap(), 5.0, 1e-15));
    }

    #[test]
    fn berwald_moor_outside_domain() {
        let spec = fixtures::m_bm();
        let err = EvalPoint::new(&spec, &[0.0; 3], &[1.0, 1.0, -1.0]).unwrap_err();
        assert_eq!(err, Error::NonPositiveRadicand { radicand: -6.0 });
    }

    #[test]
    fn zero_momentum_rejected() {
        let spec = fixtures::m_cub();
        assert_eq!(EvalPoint::new(&spec, &[0.0, 0.0], &[0.0, 0.0]), Err(Error::ZeroMomentum));
    }

    #[test]
    fn cubic_a_vector() {
        let spec = fixtures::m_cub();
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        let a1 = a_tensor(&spec, &pt, 1).unwrap();
        let k2 = 9f64.powf(2.0 / 3.0);
        assert!(close(a1.get(&[0]), 1.0 / k2, 1e-14));
        assert!(close(a1.get(&[1]), 4.0 / k2, 1e-14));
        assert!(close(a1.get(&[0]), 0.231120, 1e-6));
        assert!(close(a1.get(&[1]), 0.924481, 1e-6));
    }

    #[test]
    fn euclidean_quartic_off_diagonal() {
        let spec = fixtures::m_euc4();
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let a2 = a_tensor(&spec, &pt, 2).unwrap();
        // T^{12} = 2 a^{1122} p1 p2 = 2/3, K^2 = 2
        assert!(close(a2.get(&[0, 1]), 1.0 / 3.0, 1e-14));
    }

    #[test]
    fn a_tensor_order_range() {
        let spec = fixtures::m_cub();
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert!(matches!(a_tensor(&spec, &pt, 0), Err(Error::OrderOutOfRange { .. })));
        assert!(matches!(a_tensor(&spec, &pt, 4), Err(Error::OrderOutOfRange { .. })));
        assert!(a_tensor(&spec, &pt, 3).is_ok());
    }

    #[test]
    fn cubic_metric_pair_values() {
        let spec = fixtures::m_cub();
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        let (up, down) = metric_pair(&spec, &pt).unwrap();
        // independently: g^{ij} = 1/2 Hess(K^2) of (p1^3 + p2^3)^{2/3}, evaluated symbolically
        assert!(close(up.get(&[0, 0]), 0.908083063, 1e-8));
        assert!(close(up.get(&[0, 1]), -0.213666603, 1e-8));
        assert!(close(up.get(&[1, 1]), 1.06833302, 1e-8));
        let prod = matrix_of(&up) * matrix_of(&down);
        assert!((prod - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn euclidean_quartic_metric_is_identity() {
        let spec = fixtures::m_euc4();
        for p in [[1.0, 0.0], [0.3, -1.7], [2.0, 5.0]] {
            let pt = EvalPoint::new(&spec, &[0.0, 0.0], &p).unwrap();
            let (up, down) = metric_pair(&spec, &pt).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let d = if i == j { 1.0 } else { 0.0 };
                    assert!((up.get(&[i, j]) - d).abs() < 1e-12);
                    assert!((down.get(&[i, j]) - d).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn riemannian_identity_metric() {
        let spec = fixtures::identity_quadratic(3);
        let pt = EvalPoint::new(&spec, &[0.1, 0.2, 0.3], &[0.5, -1.0, 2.0]).unwrap();
        let b = MetricBundle::new(&spec, &pt).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                assert!((b.g_up.get(&[i, j]) - d).abs() < 1e-14);
                assert!((b.g_down.get(&[i, j]) - d).abs() < 1e-14);
            }
        }
        assert_eq!(b.c.max_abs(), 0.0);
    }

    #[test]
    fn angular_metric_values() {
        let spec = fixtures::m_euc4();
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        let h = angular(&spec, &pt).unwrap();
        assert!(h.get(&[0, 0]).abs() < 1e-14);
        assert!(h.get(&[0, 1]).abs() < 1e-14);
        assert!((h.get(&[1, 1]) - 1.0).abs() < 1e-14);

        let spec = fixtures::m_cub();
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        let b = MetricBundle::new(&spec, &pt).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let oracle = b.g_up.get(&[i, j]) - b.l[i] * b.l[j];
                assert!((b.h.get(&[i, j]) - oracle).abs() < 1e-12);
            }
        }
        assert!(close(b.h.get(&[0, 0]), 0.854666412, 1e-8));
        let hp = mat_vec(&b.h, pt.p());
        assert!(hp.iter().all(|v| v.abs() < 1e-12 * b.h.max_abs()));
    }

    #[test]
    fn cubic_cartan_torsion() {
        let spec = fixtures::m_cub();
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        let c = cartan_torsion(&spec, &pt).unwrap();
        let k = 9f64.cbrt();
        let u = 1.0 / 9.0;
        let expected = -(1.0 / k) * (1.0 - 3.0 * u + 2.0 * u * u);
        assert!(close(c.get(&[0, 0, 0]), expected, 1e-13));
        assert!(close(c.get(&[0, 0, 0]), -0.332370271, 1e-8));

        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(cartan_torsion(&spec, &pt).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn euclidean_quartic_has_no_torsion() {
        let spec = fixtures::m_euc4();
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[0.4, 1.3]).unwrap();
        assert!(cartan_torsion(&spec, &pt).unwrap().max_abs() < 1e-12);
        assert!(mean_cartan(&spec, &pt).unwrap().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn quadratic_vertical_derivative_vanishes() {
        let spec = fixtures::identity_quadratic(2);
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert_eq!(vertical_derivatives(&spec, &pt).d_aij.max_abs(), 0.0);
    }

    #[test]
    fn singular_a_matrix_rejected() {
        // K^3 = p1^3: a^{ij} has rank one
        let a = crate::symtensor::build_from_representatives(
            2,
            3,
            vec![(crate::symtensor::MultiIndex(vec![0, 0, 0]), PolyField::constant(2, 1.0))],
        )
        .unwrap();
        let spec = MetricSpec::new(a, None).unwrap();
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[1.0, 0.5]).unwrap();
        assert!(matches!(metric_pair(&spec, &pt), Err(Error::SingularMetric { .. })));
    }
}
