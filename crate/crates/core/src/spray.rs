//! Christoffel contractions, spray coefficients and the Berwald hierarchy.
//!
//! Differentiating `a^{hr0..0} G_r = (1/m) {0..0,h}` repeatedly in `p` gives,
//! at every level `k`, a linear system with the same matrix
//! `M^{hr} = a^{hr0..0} = K^{m-2} a^{hr}`:
//!
//! ```text
//! M G^{(I)} = (m)_k / m {I 0..0, h} - sum_{S nonempty subset of I} (m-2)_{|S|} a^{h r S 0..0} G^{(I\S)}_r
//! ```
//!
//! where `(q)_s` is the falling factorial. Terms whose factor vanishes are
//! skipped before any tensor of order `> m` would be needed.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};
use crate::linalg::{condition_number, matrix_of, relative_residual};
use crate::metric::{Contractions, EvalPoint, MetricSpec, MAX_CONDITION};
use crate::symtensor::{canonical_indices, increment, sorted_rank, DenseTensor, SymValueTensor};

/// Residual bound for the level-0..2 solves.
pub const RESIDUAL_LOW_LEVELS: f64 = 1e-10;
/// Hard failure bound for any level.
pub const RESIDUAL_FAIL: f64 = 1e-8;

/// Falling factorial `q (q-1) ... (q-s+1)`.
fn falling(q: i64, s: usize) -> f64 {
    (0..s as i64).map(|j| (q - j) as f64).product()
}

/// Christoffel symbol `{i_1..i_m, j}` at `x` (0-based indices).
pub fn christoffel(spec: &MetricSpec, x: &[f64], indices: &[usize], j: usize) -> f64 {
    let m = spec.m();
    assert_eq!(indices.len(), m, "christoffel needs m upper indices");
    let grads = spec.coefficients().eval_gradient(x);
    let mut acc = 0.0;
    let mut rest = Vec::with_capacity(m);
    for t in 0..m {
        rest.clear();
        rest.extend(indices.iter().enumerate().filter(|&(s, _)| s != t).map(|(_, &i)| i));
        rest.push(j);
        acc += grads[indices[t]].get(&rest);
    }
    acc -= grads[j].get(indices);
    acc / (2.0 * (m as f64 - 1.0))
}

/// `{i_1..i_k 0..0, h}`: Christoffel symbols with `m - k` slots contracted with `p`.
#[derive(Debug, Clone)]
pub struct ChristoffelContraction {
    pub level: usize,
    /// Order `level + 1`; the last slot is `h`.
    pub values: DenseTensor,
}

/// Contracted Christoffel symbols built from the position gradients of the
/// coefficient tensor. Linear in `grads`, so it also produces position
/// derivatives when fed differentiated gradients.
fn gamma_level(grads: &[SymValueTensor], p: &[f64], k: usize) -> DenseTensor {
    let n = p.len();
    let m = grads[0].order();
    let tk: Vec<SymValueTensor> =
        grads.iter().map(|g| g.contract_momenta(p, m - k).expect("k <= m")).collect();
    let tk1_dp = (k < m).then(|| {
        let dp = directional(grads, p);
        dp.contract_momenta(p, m - k - 1).expect("k < m")
    });
    let scale = 1.0 / (2.0 * (m as f64 - 1.0));
    let mut buf = Vec::with_capacity(k + 1);
    DenseTensor::from_fn(n, k + 1, |idx| {
        let (free, h) = (&idx[..k], idx[k]);
        let mut acc = 0.0;
        for t in 0..k {
            buf.clear();
            buf.extend(free.iter().enumerate().filter(|&(s, _)| s != t).map(|(_, &i)| i));
            buf.push(h);
            acc += tk[free[t]].get(&buf);
        }
        if let Some(t) = &tk1_dp {
            acc += (m - k) as f64 * t.get(idx);
        }
        acc -= tk[h].get(free);
        acc * scale
    })
}

/// `{i_1..i_k 0..0, 0}` from one-slot-lower contractions, independent of
/// `gamma_level`.
fn gamma_level_contracted(grads: &[SymValueTensor], p: &[f64], k: usize) -> DenseTensor {
    let n = p.len();
    let m = grads[0].order();
    let scale = 1.0 / (2.0 * (m as f64 - 1.0));
    let dp = directional(grads, p);
    let tk_dp = dp.contract_momenta(p, m - k).expect("k <= m");
    let tkm1: Vec<Option<SymValueTensor>> = grads
        .iter()
        .map(|g| (k >= 1).then(|| g.contract_momenta(p, m - k + 1).expect("k >= 1")))
        .collect();
    let mut buf = Vec::with_capacity(k);
    DenseTensor::from_fn(n, k, |free| {
        let mut acc = (m - k) as f64 * tk_dp.get(free) - tk_dp.get(free);
        for t in 0..k {
            buf.clear();
            buf.extend(free.iter().enumerate().filter(|&(s, _)| s != t).map(|(_, &i)| i));
            acc += tkm1[free[t]].as_ref().expect("k >= 1").get(&buf);
        }
        acc * scale
    })
}

/// `sum_s v_s T_s`.
fn directional(ts: &[SymValueTensor], v: &[f64]) -> SymValueTensor {
    let mut out = SymValueTensor::zeros(ts[0].n(), ts[0].order());
    for (t, &vs) in ts.iter().zip(v) {
        if vs != 0.0 {
            out = out.zip_with(t, |a, b| a + vs * b);
        }
    }
    out
}

pub fn christoffel_contracted(spec: &MetricSpec, pt: &EvalPoint, level: usize) -> Result<ChristoffelContraction> {
    if level > spec.m() {
        return Err(Error::ArityExceeded { requested: level, order: spec.m() });
    }
    let grads = spec.coefficients().eval_gradient(pt.x());
    Ok(ChristoffelContraction { level, values: gamma_level(&grads, pt.p(), level) })
}

/// Per-point solver state: momentum contractions of `a` and a single LU
/// factorization of `M^{hr}`, shared by every level.
pub struct SprayContext {
    m: usize,
    n: usize,
    x: Vec<f64>,
    p: Vec<f64>,
    ctr: Contractions,
    grads: Vec<SymValueTensor>,
    matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
    condition: f64,
    solves: std::cell::Cell<usize>,
}

impl SprayContext {
    pub fn new(spec: &MetricSpec, pt: &EvalPoint) -> Result<Self> {
        let ctr = Contractions::at(spec, pt);
        let matrix = matrix_of(&ctr.t[2]);
        let condition = condition_number(&matrix);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::SingularMetric { condition });
        }
        let lu = matrix.clone().lu();
        Ok(Self {
            m: spec.m(),
            n: spec.n(),
            x: pt.x().to_vec(),
            p: pt.p().to_vec(),
            grads: spec.coefficients().eval_gradient(pt.x()),
            ctr,
            matrix,
            lu,
            condition,
            solves: std::cell::Cell::new(0),
        })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Number of right-hand sides solved against the shared factorization.
    pub fn solve_count(&self) -> usize {
        self.solves.get()
    }

    /// The shared coefficient matrix `M^{hr} = K^{m-2} a^{hr}`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn t(&self, r: usize) -> &SymValueTensor {
        &self.ctr.t[r]
    }

    /// Solves every level `0..=depth` given per-level sources
    /// (`source(k)` has order `k + 1`, last slot `h`).
    fn cascade(&self, depth: usize, mut source: impl FnMut(usize, &[DenseTensor]) -> DenseTensor) -> (Vec<DenseTensor>, Vec<f64>) {
        let (n, m) = (self.n, self.m);
        let mut levels: Vec<DenseTensor> = Vec::with_capacity(depth + 1);
        let mut residuals = Vec::with_capacity(depth + 1);
        let mut idx = Vec::with_capacity(depth + 2);
        for k in 0..=depth {
            let src = source(k, &levels);
            let canon = canonical_indices(n, k);
            let mut sol: Vec<DVector<f64>> = Vec::with_capacity(canon.len());
            let mut worst = 0.0f64;
            for big_i in &canon {
                let mut b = DVector::from_fn(n, |h, _| {
                    idx.clear();
                    idx.extend_from_slice(big_i);
                    idx.push(h);
                    src.get(&idx)
                });
                for mask in 1u32..(1 << k) {
                    let s = mask.count_ones() as usize;
                    let w = falling(m as i64 - 2, s);
                    if w == 0.0 {
                        continue;
                    }
                    let (chosen, rest): (Vec<usize>, Vec<usize>) = {
                        let mut c = Vec::new();
                        let mut r = Vec::new();
                        for (bit, &i) in big_i.iter().enumerate() {
                            if mask & (1 << bit) != 0 { c.push(i) } else { r.push(i) }
                        }
                        (c, r)
                    };
                    let t = self.t(2 + s);
                    let lower = &levels[k - s];
                    for h in 0..n {
                        let mut acc = 0.0;
                        for r in 0..n {
                            idx.clear();
                            idx.push(h);
                            idx.push(r);
                            idx.extend_from_slice(&chosen);
                            let tv = t.get(&idx);
                            if tv == 0.0 {
                                continue;
                            }
                            idx.clear();
                            idx.extend_from_slice(&rest);
                            idx.push(r);
                            acc += tv * lower.get(&idx);
                        }
                        b[h] -= w * acc;
                    }
                }
                let u = self.lu.solve(&b).expect("factorization checked nonsingular");
                self.solves.set(self.solves.get() + 1);
                worst = worst.max(relative_residual(&self.matrix, &u, &b));
                sol.push(u);
            }
            // spread the solution over every ordering of the upper indices
            let mut level = DenseTensor::zeros(n, k + 1);
            let mut full = vec![0usize; k];
            for _ in 0..n.pow(k as u32) {
                let u = &sol[sorted_rank(&full)];
                for r in 0..n {
                    idx.clear();
                    idx.extend_from_slice(&full);
                    idx.push(r);
                    level.set(&idx, u[r]);
                }
                increment(&mut full, n);
            }
            levels.push(level);
            residuals.push(worst);
        }
        (levels, residuals)
    }

    /// Spray coefficients and their vertical derivatives up to `depth`.
    pub fn hierarchy(&self, depth: usize) -> Result<SprayJet> {
        let m = self.m;
        let (levels, residuals) = self.cascade(depth, |k, _| {
            let c = falling(m as i64, k) / m as f64;
            if c == 0.0 {
                DenseTensor::zeros(self.n, k + 1)
            } else {
                gamma_level(&self.grads, &self.p, k).scale(c)
            }
        });
        for (level, &r) in residuals.iter().enumerate() {
            if !(r <= RESIDUAL_FAIL) {
                return Err(Error::ResidualTooLarge { level, residual: r, bound: RESIDUAL_FAIL });
            }
        }
        Ok(SprayJet { levels, residuals })
    }

    /// Position derivative of every hierarchy level along `v`, at fixed `p`.
    /// Reuses the same factorization; the source terms carry the derivatives
    /// of the Christoffel contractions and of the `a^{hr..}` coefficients.
    pub fn x_derivative(&self, spec: &MetricSpec, jet: &SprayJet, v: &[f64]) -> Vec<DenseTensor> {
        let (n, m) = (self.n, self.m);
        let depth = jet.depth();
        let hess = spec.coefficients().eval_hessian(&self.x);
        // d/dv of d a/dx_s
        let dgrads: Vec<SymValueTensor> = (0..n)
            .map(|s| directional(&hess[s * n..(s + 1) * n], v))
            .collect();
        let da = directional(&self.grads, v);
        let dt: Vec<SymValueTensor> =
            (0..=m).map(|r| da.contract_momenta(&self.p, m - r).expect("r <= m")).collect();
        let (levels, _) = self.cascade(depth, |k, _| {
            let c = falling(m as i64, k) / m as f64;
            let mut src = if c == 0.0 {
                DenseTensor::zeros(n, k + 1)
            } else {
                gamma_level(&dgrads, &self.p, k).scale(c)
            };
            // - sum over all subsets (including the empty one) of dT * G
            let canon_all = n.pow(k as u32);
            let mut big_i = vec![0usize; k];
            let mut idx = Vec::with_capacity(k + 2);
            for _ in 0..canon_all {
                for mask in 0u32..(1 << k) {
                    let s = mask.count_ones() as usize;
                    let w = if s == 0 { 1.0 } else { falling(m as i64 - 2, s) };
                    if w == 0.0 {
                        continue;
                    }
                    let mut chosen = Vec::new();
                    let mut rest = Vec::new();
                    for (bit, &i) in big_i.iter().enumerate() {
                        if mask & (1 << bit) != 0 { chosen.push(i) } else { rest.push(i) }
                    }
                    let t = &dt[2 + s];
                    let lower = &jet.levels[k - s];
                    for h in 0..n {
                        let mut acc = 0.0;
                        for r in 0..n {
                            idx.clear();
                            idx.push(h);
                            idx.push(r);
                            idx.extend_from_slice(&chosen);
                            let tv = t.get(&idx);
                            if tv == 0.0 {
                                continue;
                            }
                            idx.clear();
                            idx.extend_from_slice(&rest);
                            idx.push(r);
                            acc += tv * lower.get(&idx);
                        }
                        idx.clear();
                        idx.extend_from_slice(&big_i);
                        idx.push(h);
                        src.add_at(&idx, -w * acc);
                    }
                }
                increment(&mut big_i, n);
            }
            src
        });
        levels
    }

    /// Residual of the level-`k` equation contracted with `p_h`, assembled
    /// from one-order-lower contractions and an independently contracted
    /// Christoffel term. For `k = 3` this is the p-contracted Berwald
    /// curvature identity.
    pub fn contracted_identity_residual(&self, jet: &SprayJet, k: usize) -> f64 {
        let (n, m) = (self.n, self.m);
        let c = falling(m as i64, k) / m as f64;
        let rhs = if c == 0.0 {
            DenseTensor::zeros(n, k)
        } else {
            gamma_level_contracted(&self.grads, &self.p, k).scale(c)
        };
        let mut worst = 0.0f64;
        let mut big_i = vec![0usize; k];
        let mut idx = Vec::with_capacity(k + 2);
        for _ in 0..n.pow(k as u32) {
            let mut lhs = 0.0;
            let mut scale = rhs.get(&big_i).abs();
            for mask in 0u32..(1 << k) {
                let s = mask.count_ones() as usize;
                let w = if s == 0 { 1.0 } else { falling(m as i64 - 2, s) };
                if w == 0.0 {
                    continue;
                }
                let mut chosen = Vec::new();
                let mut rest = Vec::new();
                for (bit, &i) in big_i.iter().enumerate() {
                    if mask & (1 << bit) != 0 { chosen.push(i) } else { rest.push(i) }
                }
                let t = self.t(1 + s);
                let lower = &jet.levels[k - s];
                for r in 0..n {
                    idx.clear();
                    idx.push(r);
                    idx.extend_from_slice(&chosen);
                    let tv = t.get(&idx);
                    idx.clear();
                    idx.extend_from_slice(&rest);
                    idx.push(r);
                    let term = w * tv * lower.get(&idx);
                    lhs += term;
                    scale = scale.max(term.abs());
                }
            }
            let diff = (lhs - rhs.get(&big_i)).abs();
            if scale > 0.0 {
                worst = worst.max(diff / scale);
            }
            increment(&mut big_i, n);
        }
        worst
    }
}

/// `G_r` and its vertical derivatives. Level `k` has order `k + 1` with the
/// lower index `r` in the last slot: `G^{i_1..i_k}_r`.
#[derive(Debug, Clone)]
pub struct SprayJet {
    pub levels: Vec<DenseTensor>,
    /// Per-level relative residual of the linear solves.
    pub residuals: Vec<f64>,
}

impl SprayJet {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn g(&self) -> &[f64] {
        self.levels[0].data()
    }

    pub fn g1(&self) -> &DenseTensor {
        &self.levels[1]
    }

    pub fn g2(&self) -> &DenseTensor {
        &self.levels[2]
    }

    pub fn g3(&self) -> &DenseTensor {
        &self.levels[3]
    }

    pub fn g4(&self) -> Option<&DenseTensor> {
        self.levels.get(4)
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|l| l.max_abs() == 0.0)
    }
}

/// Spray coefficients `G_r` from `a^{hr0..0} G_r = (1/m) {0..0,h}`.
pub fn spray_coeffs(spec: &MetricSpec, pt: &EvalPoint) -> Result<Vec<f64>> {
    Ok(SprayContext::new(spec, pt)?.hierarchy(0)?.g().to_vec())
}

/// `G_r`, `G^i_r`, `G^{ij}_r` and `G^{ijk}_r`.
pub fn berwald_hierarchy(spec: &MetricSpec, pt: &EvalPoint) -> Result<SprayJet> {
    SprayContext::new(spec, pt)?.hierarchy(3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn falling_factorials() {
        assert_eq!(falling(1, 1), 1.0);
        assert_eq!(falling(0, 1), 0.0);
        assert_eq!(falling(4, 3), 24.0);
        assert_eq!(falling(2, 3), 0.0);
        assert_eq!(falling(5, 0), 1.0);
    }

    #[test]
    fn christoffel_of_m_x() {
        let spec = fixtures::m_x();
        // (1/4)(1 + 1 + 1 - 1): only d a^{111} / d x1 = 1 is nonzero
        assert_eq!(christoffel(&spec, &[0.0, 0.0], &[0, 0, 0], 0), 0.5);
        assert_eq!(christoffel(&spec, &[0.0, 0.0], &[1, 1, 1], 0), 0.0);
    }

    #[test]
    fn christoffel_of_constant_coefficients_vanishes() {
        let spec = fixtures::m_cub();
        for idx in [[0, 0, 0], [0, 1, 1], [1, 0, 1]] {
            for j in 0..2 {
                assert_eq!(christoffel(&spec, &[0.7, -0.2], &idx, j), 0.0);
            }
        }
    }

    #[test]
    fn level_zero_contraction_of_m_x() {
        let spec = fixtures::m_x();
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let g0 = christoffel_contracted(&spec, &pt, 0).unwrap();
        assert!((g0.values.get(&[0]) - 0.5).abs() < 1e-15);
        assert_eq!(g0.values.get(&[1]), 0.0);
    }

    #[test]
    fn spray_of_m_x() {
        let spec = fixtures::m_x();
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let g = spray_coeffs(&spec, &pt).unwrap();
        assert!((g[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!(g[1].abs() < 1e-15);
    }

    #[test]
    fn hierarchy_of_m_x() {
        let spec = fixtures::m_x();
        let pt = EvalPoint::new(&spec, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let jet = berwald_hierarchy(&spec, &pt).unwrap();
        assert!((jet.g1().get(&[0, 0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!((jet.g2().get(&[0, 0, 0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!(jet.g3().max_abs() < 1e-14);
    }

    #[test]
    fn constant_coefficients_give_zero_jet() {
        for spec in [fixtures::m_cub(), fixtures::m_bm(), fixtures::m_euc4()] {
            let p = fixtures::default_momentum(spec.n());
            let x = vec![0.3; spec.n()];
            let pt = EvalPoint::new(&spec, &x, &p).unwrap();
            let ctx = SprayContext::new(&spec, &pt).unwrap();
            let jet = ctx.hierarchy(4).unwrap();
            assert!(jet.is_zero());
        }
    }

    #[test]
    fn one_factorization_serves_all_levels() {
        let spec = fixtures::m_qx();
        let pt = EvalPoint::new(&spec, &[0.1, -0.2], &[0.8, 1.1]).unwrap();
        let ctx = SprayContext::new(&spec, &pt).unwrap();
        let jet = ctx.hierarchy(3).unwrap();
        // one solve per canonical upper multi-index: 1 + 2 + 3 + 4
        assert_eq!(ctx.solve_count(), 10);
        for (k, r) in jet.residuals.iter().enumerate() {
            let bound = if k <= 2 { RESIDUAL_LOW_LEVELS } else { RESIDUAL_FAIL };
            assert!(*r <= bound, "level {k}: {r}");
        }
    }

    #[test]
    fn contracted_identities_hold() {
        for spec in [fixtures::m_qx(), fixtures::m_q3(), fixtures::m_x(), fixtures::m_riem2()] {
            let n = spec.n();
            let pt = EvalPoint::new(&spec, &vec![0.1; n], &fixtures::default_momentum(n)).unwrap();
            let ctx = SprayContext::new(&spec, &pt).unwrap();
            let jet = ctx.hierarchy(3).unwrap();
            for k in 0..=3 {
                let r = ctx.contracted_identity_residual(&jet, k);
                assert!(r < 1e-12, "{:?} level {k}: {r}", spec.name());
            }
        }
    }

    fn richardson(f: impl Fn(f64) -> Vec<f64>, h: f64) -> Vec<f64> {
        let d = |h: f64| -> Vec<f64> {
            let (a, b) = (f(h), f(-h));
            a.iter().zip(&b).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        };
        let (d1, d2) = (d(h), d(h / 2.0));
        d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect()
    }

    #[test]
    fn vertical_levels_match_finite_differences() {
        let spec = fixtures::m_q3();
        let (x, p) = (vec![0.2, -0.1, 0.3], vec![1.0, 0.7, 1.2]);
        let jet = berwald_hierarchy(&spec, &EvalPoint::new(&spec, &x, &p).unwrap()).unwrap();
        let n = 3;
        for k in 1..=3 {
            for i in 0..n {
                let fd = richardson(
                    |t| {
                        let mut q = p.clone();
                        q[i] += t;
                        let pt = EvalPoint::new(&spec, &x, &q).unwrap();
                        SprayContext::new(&spec, &pt).unwrap().hierarchy(k - 1).unwrap().levels[k - 1]
                            .data()
                            .to_vec()
                    },
                    1e-4,
                );
                // level k with the new index in front equals d/dp_i of level k-1
                let lvl = &jet.levels[k];
                let stride = lvl.data().len() / n;
                let exact = &lvl.data()[i * stride..(i + 1) * stride];
                for (a, b) in exact.iter().zip(&fd) {
                    assert!((a - b).abs() < 1e-8, "level {k} index {i}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn position_derivative_matches_finite_differences() {
        let spec = fixtures::m_q3();
        let (x, p) = (vec![0.2, -0.1, 0.3], vec![1.0, 0.7, 1.2]);
        let v = [0.3, -0.5, 0.8];
        let pt = EvalPoint::new(&spec, &x, &p).unwrap();
        let ctx = SprayContext::new(&spec, &pt).unwrap();
        let jet = ctx.hierarchy(3).unwrap();
        let dx = ctx.x_derivative(&spec, &jet, &v);
        for (k, dxk) in dx.iter().enumerate() {
            let fd = richardson(
                |t| {
                    let y: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + t * b).collect();
                    let pt = EvalPoint::new(&spec, &y, &p).unwrap();
                    berwald_hierarchy(&spec, &pt).unwrap().levels[k].data().to_vec()
                },
                1e-3,
            );
            for (a, b) in dxk.data().iter().zip(&fd) {
                assert!((a - b).abs() < 1e-9, "level {k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn levels_are_symmetric_in_upper_indices() {
        let spec = fixtures::m_qx();
        let pt = EvalPoint::new(&spec, &[0.4, 0.1], &[1.0, -0.6]).unwrap();
        let jet = SprayContext::new(&spec, &pt).unwrap().hierarchy(4).unwrap();
        for k in 2..=4 {
            assert!(jet.levels[k].asymmetry(k) < 1e-13);
        }
    }
}
