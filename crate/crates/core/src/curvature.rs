//! Landsberg, mean Landsberg, E, S and H curvatures and the index-lowering norm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{flow_derivative, Flow, FlowField};
use crate::linalg::{is_positive_definite, matrix_of};
use crate::metric::{g_up_x_derivative, EvalPoint, MetricBundle, MetricSpec};
use crate::poly::PolyField;
use crate::spray::{SprayContext, SprayJet};
use crate::symtensor::{increment, DenseTensor, SymValueTensor};

/// Reference density `sigma(x)` entering the distortion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeForm {
    pub sigma: PolyField,
}

impl VolumeForm {
    pub fn new(sigma: PolyField) -> Self {
        Self { sigma }
    }

    pub fn unit(n: usize) -> Self {
        Self { sigma: PolyField::constant(n, 1.0) }
    }

    /// The volume form declared by a metric (unit when absent).
    pub fn of(spec: &MetricSpec) -> Self {
        Self { sigma: spec.sigma_or_one() }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let value = self.sigma.eval(x);
        if !(value > 0.0) {
            return Err(Error::NonPositiveVolume { value });
        }
        Ok(value)
    }

    /// `d ln sigma / dx`.
    pub fn log_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (value, grad) = self.sigma.eval_grad(x);
        if !(value > 0.0) {
            return Err(Error::NonPositiveVolume { value });
        }
        Ok(grad.into_iter().map(|g| g / value).collect())
    }
}

/// `L^{ijk} = -1/2 K a^s G^{ijk}_s`.
pub fn landsberg(bundle: &MetricBundle, jet: &SprayJet) -> SymValueTensor {
    let n = bundle.l.len();
    let g3 = jet.g3();
    let mut idx = [0usize; 4];
    SymValueTensor::from_fn(n, 3, |ijk| {
        idx[..3].copy_from_slice(ijk);
        let mut acc = 0.0;
        for s in 0..n {
            idx[3] = s;
            acc += bundle.l[s] * g3.get(&idx);
        }
        -0.5 * bundle.k * acc
    })
}

/// `J^i = g_{jk} L^{ijk}`.
pub fn mean_landsberg(l: &SymValueTensor, g_down: &SymValueTensor) -> Vec<f64> {
    crate::metric::mean_cartan_from(l, g_down)
}

/// `E^{ij} = 1/2 G^{ijr}_r`.
pub fn e_curvature(jet: &SprayJet) -> SymValueTensor {
    half_trace(jet.g3())
}

/// Half trace over the last two slots of an order-4 tensor, symmetric in the
/// remaining two.
fn half_trace(t: &DenseTensor) -> SymValueTensor {
    let n = t.n();
    SymValueTensor::from_fn(n, 2, |ij| 0.5 * (0..n).map(|r| t.get(&[ij[0], ij[1], r, r])).sum::<f64>())
}

/// `tau = 1/2 ln |det g^{ij}| - ln sigma`, the log-ratio of the momentum
/// volume induced by `K` to the reference density.
pub fn distortion(spec: &MetricSpec, pt: &EvalPoint, vol: &VolumeForm) -> Result<f64> {
    let bundle = MetricBundle::new(spec, pt)?;
    distortion_from(&bundle, pt.x(), vol)
}

fn distortion_from(bundle: &MetricBundle, x: &[f64], vol: &VolumeForm) -> Result<f64> {
    let det = matrix_of(&bundle.g_up).determinant();
    Ok(0.5 * det.abs().ln() - vol.eval(x)?.ln())
}

/// The distortion as a field with exact derivatives: `d tau / dp = -I` and
/// the position derivative from the polynomial coefficients.
pub struct TauField<'a> {
    pub spec: &'a MetricSpec,
    pub vol: &'a VolumeForm,
}

impl FlowField for TauField<'_> {
    fn eval(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![distortion(self.spec, &EvalPoint::new(self.spec, x, p)?, self.vol)?])
    }

    fn x_directional(&self, x: &[f64], p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let pt = EvalPoint::new(self.spec, x, p)?;
        let bundle = MetricBundle::new(self.spec, &pt)?;
        let dg = g_up_x_derivative(self.spec, &pt, v);
        let n = p.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += bundle.g_down.get(&[i, j]) * dg.get(&[i, j]);
            }
        }
        let dlog: f64 = self.vol.log_gradient(x)?.iter().zip(v).map(|(a, b)| a * b).sum();
        Ok(vec![0.5 * acc - dlog])
    }

    fn p_directional(&self, x: &[f64], p: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let bundle = MetricBundle::new(self.spec, &EvalPoint::new(self.spec, x, p)?)?;
        Ok(vec![-bundle.i.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()])
    }
}

/// Rate of change of the distortion along the spray flow.
pub fn s_curvature(spec: &MetricSpec, pt: &EvalPoint, vol: &VolumeForm) -> Result<f64> {
    Ok(flow_derivative(spec, pt, Flow::Spray, &TauField { spec, vol })?[0])
}

/// The E-curvature as a field; position and momentum derivatives come from
/// the Berwald hierarchy (one level deeper for the momentum direction).
pub struct EField<'a>(pub &'a MetricSpec);

impl FlowField for EField<'_> {
    fn eval(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        let ctx = SprayContext::new(self.0, &EvalPoint::new(self.0, x, p)?)?;
        Ok(e_curvature(&ctx.hierarchy(3)?).to_dense().data().to_vec())
    }

    fn x_directional(&self, x: &[f64], p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let ctx = SprayContext::new(self.0, &EvalPoint::new(self.0, x, p)?)?;
        let jet = ctx.hierarchy(3)?;
        let d = ctx.x_derivative(self.0, &jet, v);
        Ok(half_trace(&d[3]).to_dense().data().to_vec())
    }

    fn p_directional(&self, x: &[f64], p: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let ctx = SprayContext::new(self.0, &EvalPoint::new(self.0, x, p)?)?;
        let jet = ctx.hierarchy(4)?;
        let g4 = jet.g4().expect("depth 4");
        Ok(half_trace(&g4.contract_slot(0, w)).to_dense().data().to_vec())
    }
}

/// `H^{ij} = (p_s d/dx_s - 2 G_r d/dp_r) E^{ij} - E^{rj} G^i_r - E^{ir} G^j_r`.
pub fn h_curvature(
    spec: &MetricSpec,
    pt: &EvalPoint,
    jet: &SprayJet,
    e_field: &dyn FlowField,
) -> Result<SymValueTensor> {
    let h = h_curvature_raw(spec, pt, jet, e_field)?;
    Ok(SymValueTensor::from_fn(spec.n(), 2, |ij| 0.5 * (h.get(ij) + h.get(&[ij[1], ij[0]]))))
}

/// `h_curvature` before symmetrization, for checking that it is symmetric.
pub fn h_curvature_raw(
    spec: &MetricSpec,
    pt: &EvalPoint,
    jet: &SprayJet,
    e_field: &dyn FlowField,
) -> Result<DenseTensor> {
    let n = spec.n();
    let de = flow_derivative(spec, pt, Flow::Spray, e_field)?;
    let e = e_field.eval(pt.x(), pt.p())?;
    let g1 = jet.g1();
    let mut h = DenseTensor::from_vec(n, 2, de);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for r in 0..n {
                acc += e[r * n + j] * g1.get(&[i, r]) + e[i * n + r] * g1.get(&[j, r]);
            }
            h.add_at(&[i, j], -acc);
        }
    }
    Ok(h)
}

/// Norm used for a tensor at one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// Every index lowered with a positive-definite `g_{ij}`.
    Metric,
    /// Plain Euclidean sum of squares, used when `g_{ij}` is indefinite.
    Frobenius,
}

pub fn norm_kind(g_down: &SymValueTensor) -> NormKind {
    if is_positive_definite(&matrix_of(g_down)) {
        NormKind::Metric
    } else {
        NormKind::Frobenius
    }
}

/// `|T|^2 = g_{i_1 j_1} .. g_{i_r j_r} T^{i_1..i_r} T^{j_1..j_r}`, falling
/// back to the Frobenius norm for indefinite `g_{ij}`.
pub fn g_norm(t: &DenseTensor, g_down: &SymValueTensor) -> f64 {
    match norm_kind(g_down) {
        NormKind::Frobenius => t.data().iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormKind::Metric => g_norm_with(t, g_down),
    }
}

/// `g_{i_1 j_1} .. g_{i_r j_r} A^{i_1..i_r} B^{j_1..j_r}`, Euclidean for
/// indefinite `g_{ij}`.
pub fn g_inner(a: &DenseTensor, b: &DenseTensor, g_down: &SymValueTensor) -> f64 {
    g_inner_as(norm_kind(g_down), a, b, g_down)
}

/// `g_inner` with the norm kind decided by the caller.
pub fn g_inner_as(kind: NormKind, a: &DenseTensor, b: &DenseTensor, g_down: &SymValueTensor) -> f64 {
    match kind {
        NormKind::Frobenius => a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum(),
        NormKind::Metric => {
            let low = lower_all(b, g_down);
            a.data().iter().zip(low.data()).map(|(x, y)| x * y).sum()
        }
    }
}

fn g_norm_with(t: &DenseTensor, g_down: &SymValueTensor) -> f64 {
    let low = lower_all(t, g_down);
    let sq: f64 = t.data().iter().zip(low.data()).map(|(a, b)| a * b).sum();
    sq.max(0.0).sqrt()
}

/// Lowers every index with `g_{ij}`.
fn lower_all(t: &DenseTensor, g_down: &SymValueTensor) -> DenseTensor {
    let n = t.n();
    let order = t.order();
    let mut low = t.clone();
    let mut idx = vec![0usize; order];
    let mut full = vec![0usize; order];
    for slot in 0..order {
        let src = low.clone();
        for _ in 0..src.data().len() {
            full.copy_from_slice(&idx);
            let mut acc = 0.0;
            for j in 0..n {
                full[slot] = j;
                acc += g_down.get(&[idx[slot], j]) * src.get(&full);
            }
            low.set(&idx, acc);
            increment(&mut idx, n);
        }
    }
    low
}

pub fn g_norm_vec(v: &[f64], g_down: &SymValueTensor) -> f64 {
    g_norm(&DenseTensor::from_vec(v.len(), 1, v.to_vec()), g_down)
}

pub fn g_norm_sym(t: &SymValueTensor, g_down: &SymValueTensor) -> f64 {
    g_norm(&t.to_dense(), g_down)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureNorms {
    pub kind: NormKind,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "H")]
    pub h: f64,
}

#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub l: SymValueTensor,
    pub j: Vec<f64>,
    pub e: SymValueTensor,
    pub tau: f64,
    pub s: f64,
    pub h: SymValueTensor,
    pub norms: CurvatureNorms,
}

/// Every curvature at one point, together with the metric bundle and jet it
/// was computed from.
pub fn curvatures(
    spec: &MetricSpec,
    pt: &EvalPoint,
    vol: &VolumeForm,
) -> Result<(MetricBundle, SprayJet, CurvatureReport)> {
    let bundle = MetricBundle::new(spec, pt)?;
    let jet = SprayContext::new(spec, pt)?.hierarchy(3)?;
    let l = landsberg(&bundle, &jet);
    let j = mean_landsberg(&l, &bundle.g_down);
    let e = e_curvature(&jet);
    let tau = distortion_from(&bundle, pt.x(), vol)?;
    let s = s_curvature(spec, pt, vol)?;
    let h = h_curvature(spec, pt, &jet, &EField(spec))?;
    let g = &bundle.g_down;
    let norms = CurvatureNorms {
        kind: norm_kind(g),
        c: g_norm_sym(&bundle.c, g),
        i: g_norm_vec(&bundle.i, g),
        l: g_norm_sym(&l, g),
        j: g_norm_vec(&j, g),
        e: g_norm_sym(&e, g),
        h: g_norm_sym(&h, g),
    };
    Ok((bundle, jet, CurvatureReport { l, j, e, tau, s, h, norms }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::metric::metric_pair;
    use crate::spray::berwald_hierarchy;

    fn at(spec: &MetricSpec, x: &[f64], p: &[f64]) -> EvalPoint {
        EvalPoint::new(spec, x, p).unwrap()
    }

    #[test]
    fn berwald_fixture_has_no_curvature() {
        let spec = fixtures::m_x();
        let vol = VolumeForm::unit(2);
        for (x, p) in [([0.0, 0.0], [1.0, 1.0]), ([0.4, -0.3], [0.7, 1.2])] {
            let (_, _, r) = curvatures(&spec, &at(&spec, &x, &p), &vol).unwrap();
            let n = r.norms;
            for v in [n.l, n.j, n.e, n.h] {
                assert!(v <= 1e-12, "{v}");
            }
        }
    }

    #[test]
    fn landsberg_via_raised_momentum() {
        let spec = fixtures::m_q3();
        let pt = at(&spec, &[0.2, 0.1, -0.3], &[1.0, 0.6, 0.9]);
        let bundle = MetricBundle::new(&spec, &pt).unwrap();
        let jet = berwald_hierarchy(&spec, &pt).unwrap();
        let l = landsberg(&bundle, &jet);
        let (g_up, _) = metric_pair(&spec, &pt).unwrap();
        let p_up = crate::metric::mat_vec(&g_up, pt.p());
        let alt = jet.g3().contract_slot(3, &p_up).scale(-0.5);
        for (a, b) in l.to_dense().data().iter().zip(alt.data()) {
            assert!((a - b).abs() <= 1e-12 * l.max_abs().max(1.0));
        }
        // L annihilates p in any slot, and so does J
        let lp = l.to_dense().contract_slot(2, pt.p());
        assert!(lp.max_abs() <= 1e-10 * l.max_abs());
        let j = mean_landsberg(&l, &bundle.g_down);
        let jp: f64 = j.iter().zip(pt.p()).map(|(a, b)| a * b).sum();
        assert!(jp.abs() <= 1e-10 * j.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }

    #[test]
    fn distortion_examples() {
        let vol = VolumeForm::unit(2);
        let id = fixtures::identity_quadratic(2);
        assert_eq!(distortion(&id, &at(&id, &[0.3, 0.1], &[1.0, 2.0]), &vol).unwrap(), 0.0);
        let euc = fixtures::m_euc4();
        assert!(distortion(&euc, &at(&euc, &[0.0, 0.0], &[3.0, 4.0]), &vol).unwrap().abs() < 1e-14);
        let cub = fixtures::m_cub();
        let pt = at(&cub, &[0.0, 0.0], &[1.0, 2.0]);
        let tau = distortion(&cub, &pt, &vol).unwrap();
        let (_, g_down) = metric_pair(&cub, &pt).unwrap();
        let down = 0.5 * crate::metric::determinant(&g_down).ln();
        assert!((tau + down).abs() < 1e-12);
        assert!((tau + 0.0392610118855).abs() < 1e-12);
    }

    #[test]
    fn non_positive_volume_is_rejected() {
        let spec = fixtures::m_x();
        let vol = VolumeForm::new(PolyField::from_terms(2, [(vec![1, 0], 1.0)]));
        let r = distortion(&spec, &at(&spec, &[-0.5, 0.0], &[1.0, 1.0]), &vol);
        assert!(matches!(r, Err(Error::NonPositiveVolume { .. })));
    }

    #[test]
    fn locally_minkowski_s_vanishes() {
        for spec in [fixtures::m_cub(), fixtures::m_bm()] {
            let n = spec.n();
            let vol = VolumeForm::unit(n);
            let s = s_curvature(&spec, &at(&spec, &vec![0.2; n], &fixtures::default_momentum(n)), &vol).unwrap();
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn s_matches_trace_identity() {
        let spec = fixtures::m_q3();
        let sigma = PolyField::from_terms(3, [(vec![0, 0, 0], 2.0), (vec![1, 0, 0], 0.3), (vec![0, 1, 1], 0.2)]);
        let vol = VolumeForm::new(sigma);
        let pt = at(&spec, &[0.1, -0.2, 0.3], &[1.0, 0.4, 0.7]);
        let s = s_curvature(&spec, &pt, &vol).unwrap();
        let jet = berwald_hierarchy(&spec, &pt).unwrap();
        let trace: f64 = (0..3).map(|i| jet.g1().get(&[i, i])).sum();
        let dlog: f64 = vol.log_gradient(pt.x()).unwrap().iter().zip(pt.p()).map(|(a, b)| a * b).sum();
        assert!((s - (trace - dlog)).abs() < 1e-12 * s.abs().max(1.0), "{s} vs {}", trace - dlog);
    }

    #[test]
    fn s_matches_flow_difference_of_tau() {
        use crate::geodesic::integrate;
        let spec = fixtures::m_x();
        let vol = VolumeForm::unit(2);
        let (x, p) = ([0.1, 0.2], [1.0, 0.8]);
        let s = s_curvature(&spec, &at(&spec, &x, &p), &vol).unwrap();
        let h = 1e-4;
        let tau_at = |t: f64| {
            let traj = integrate(&spec, Flow::Spray, &x, &p, t, &Default::default()).unwrap();
            let end = traj.last();
            distortion(&spec, &at(&spec, &end.x, &end.p), &vol).unwrap()
        };
        let fd = (tau_at(h) - tau_at(-h)) / (2.0 * h);
        assert!((s - fd).abs() <= 1e-5 * s.abs(), "{s} vs {fd}");
    }

    #[test]
    fn exact_tau_derivatives_match_differences() {
        struct Plain<'a>(TauField<'a>);
        impl FlowField for Plain<'_> {
            fn eval(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
                self.0.eval(x, p)
            }
        }
        let spec = fixtures::m_q3();
        let sigma = PolyField::from_terms(3, [(vec![0, 0, 0], 1.5), (vec![0, 1, 0], 0.4)]);
        let vol = VolumeForm::new(sigma);
        let field = TauField { spec: &spec, vol: &vol };
        let (x, p, v) = ([0.1, 0.2, -0.1], [1.0, 0.5, 0.8], [0.4, -0.7, 0.2]);
        let plain = Plain(TauField { spec: &spec, vol: &vol });
        let a = field.x_directional(&x, &p, &v).unwrap()[0];
        let b = plain.x_directional(&x, &p, &v).unwrap()[0];
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        let a = field.p_directional(&x, &p, &v).unwrap()[0];
        let b = plain.p_directional(&x, &p, &v).unwrap()[0];
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn exact_e_derivatives_match_differences() {
        struct Plain<'a>(&'a MetricSpec);
        impl FlowField for Plain<'_> {
            fn eval(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
                EField(self.0).eval(x, p)
            }
        }
        let spec = fixtures::m_qx();
        let (x, p, v) = ([0.1, 0.2], [1.0, 0.5], [0.4, -0.7]);
        for (a, b) in EField(&spec)
            .x_directional(&x, &p, &v)
            .unwrap()
            .iter()
            .zip(Plain(&spec).x_directional(&x, &p, &v).unwrap())
        {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        for (a, b) in EField(&spec)
            .p_directional(&x, &p, &v)
            .unwrap()
            .iter()
            .zip(Plain(&spec).p_directional(&x, &p, &v).unwrap())
        {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn e_is_half_second_vertical_derivative_of_s() {
        let spec = fixtures::m_qx();
        let vol = VolumeForm::unit(2);
        let (x, p) = ([0.2, -0.1], [1.0, 0.7]);
        let e = e_curvature(&berwald_hierarchy(&spec, &at(&spec, &x, &p)).unwrap());
        let s = |q: [f64; 2]| s_curvature(&spec, &at(&spec, &x, &q), &vol).unwrap();
        let h = 1e-3;
        let second = |i: usize, j: usize, h: f64| {
            let shift = |di: f64, dj: f64| {
                let mut q = p;
                q[i] += di;
                q[j] += dj;
                s(q)
            };
            (shift(h, h) - shift(h, -h) - shift(-h, h) + shift(-h, -h)) / (4.0 * h * h)
        };
        for i in 0..2 {
            for j in 0..2 {
                let fd = (4.0 * second(i, j, h / 2.0) - second(i, j, h)) / 3.0;
                let exact = e.get(&[i, j]);
                assert!((0.5 * fd - exact).abs() <= 1e-4 * e.max_abs(), "{i}{j}: {} vs {exact}", 0.5 * fd);
            }
        }
    }

    #[test]
    fn h_is_symmetric_and_zero_homogeneous() {
        let spec = fixtures::m_q3();
        let (x, p) = ([0.1, 0.2, -0.1], [1.0, 0.5, 0.8]);
        let pt = at(&spec, &x, &p);
        let jet = berwald_hierarchy(&spec, &pt).unwrap();
        let h = h_curvature(&spec, &pt, &jet, &EField(&spec)).unwrap();
        assert!(h.max_abs() > 1e-6);
        let pt2 = pt.scaled(&spec, 2.0).unwrap();
        let jet2 = berwald_hierarchy(&spec, &pt2).unwrap();
        let h2 = h_curvature(&spec, &pt2, &jet2, &EField(&spec)).unwrap();
        for (a, b) in h.values().iter().zip(h2.values()) {
            assert!((a - b).abs() <= 1e-8 * h.max_abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn g_norm_matches_brute_force() {
        let spec = fixtures::m_cub();
        let pt = at(&spec, &[0.0, 0.0], &[1.0, 2.0]);
        let b = MetricBundle::new(&spec, &pt).unwrap();
        let g = &b.g_down;
        let mut sq = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for a in 0..2 {
                        for bb in 0..2 {
                            for c in 0..2 {
                                sq += g.get(&[i, a]) * g.get(&[j, bb]) * g.get(&[k, c])
                                    * b.c.get(&[i, j, k]) * b.c.get(&[a, bb, c]);
                            }
                        }
                    }
                }
            }
        }
        let norm = g_norm_sym(&b.c, g);
        assert!(norm > 0.0);
        assert!((norm - sq.sqrt()).abs() < 1e-12);
        assert_eq!(g_norm(&DenseTensor::zeros(2, 3), g), 0.0);
    }

    #[test]
    fn indefinite_metric_uses_frobenius() {
        let spec = fixtures::m_bm();
        let pt = at(&spec, &[0.0; 3], &[1.0, 1.2, 0.9]);
        let b = MetricBundle::new(&spec, &pt).unwrap();
        assert_eq!(norm_kind(&b.g_down), NormKind::Frobenius);
        let direct = b.c.to_dense().data().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert_eq!(g_norm_sym(&b.c, &b.g_down), direct);
    }
}
