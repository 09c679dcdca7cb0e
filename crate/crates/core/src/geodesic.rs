//! Geodesic flows on the punctured cotangent bundle and flow derivatives of
//! fields along them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{fundamental, g_up_x_derivative, mat_vec, Contractions, EvalPoint, MetricSpec};
use crate::ode::{dopri5, IntegratorConfig};
use crate::spray::spray_coeffs;

/// Which vector field drives `(x, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Flow {
    /// `x' = g^{ij} p_j`, `p' = -d(K^2/2)/dx`.
    #[default]
    Hamiltonian,
    /// `x' = p`, `p' = -2 G(x, p)`: the second-order geodesic equation.
    Spray,
}

impl std::str::FromStr for Flow {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hamiltonian" => Ok(Flow::Hamiltonian),
            "spray" => Ok(Flow::Spray),
            other => Err(Error::InvalidSpec(format!("unknown flow `{other}`"))),
        }
    }
}

impl Flow {
    pub fn rhs(self, spec: &MetricSpec, x: &[f64], p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            Flow::Hamiltonian => flow_rhs(spec, x, p),
            Flow::Spray => spray_rhs(spec, x, p),
        }
    }
}

/// Position gradient of `K` at fixed `p`.
fn k_x_gradient(spec: &MetricSpec, pt: &EvalPoint) -> Vec<f64> {
    let m = spec.m();
    let k = fundamental(spec, pt).expect("admissible point");
    let denom = m as f64 * k.powi(m as i32 - 1);
    spec.coefficients()
        .eval_gradient(pt.x())
        .iter()
        .map(|g| g.contract_momenta(pt.p(), m).expect("full contraction").as_scalar() / denom)
        .collect()
}

/// Hamiltonian vector field of `K^2/2`.
pub fn flow_rhs(spec: &MetricSpec, x: &[f64], p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let pt = EvalPoint::new(spec, x, p)?;
    let ctr = Contractions::at(spec, &pt);
    let a2 = ctr.a_tensor(2);
    let cond = crate::linalg::condition_number(&crate::linalg::matrix_of(&a2));
    if !(cond <= crate::metric::MAX_CONDITION) {
        return Err(Error::SingularMetric { condition: cond });
    }
    let a1 = ctr.a_tensor(1);
    let xdot: Vec<f64> = (0..spec.n()).map(|i| ctr.k * a1.get(&[i])).collect();
    let pdot: Vec<f64> = k_x_gradient(spec, &pt).iter().map(|d| -ctr.k * d).collect();
    Ok((xdot, pdot))
}

/// `x' = p`, `p' = -2G`.
pub fn spray_rhs(spec: &MetricSpec, x: &[f64], p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let pt = EvalPoint::new(spec, x, p)?;
    let g = spray_coeffs(spec, &pt)?;
    Ok((p.to_vec(), g.iter().map(|v| -2.0 * v).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub t: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    #[serde(rename = "K0")]
    pub k0: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// `|K - K0| / K0`.
    pub drift: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub flow: Flow,
    pub states: Vec<GeodesicState>,
    pub max_drift: f64,
    pub drift_within_bound: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &GeodesicState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Adaptive trajectory from `(x0, p0)` to parameter `t_end`.
pub fn integrate(
    spec: &MetricSpec,
    flow: Flow,
    x0: &[f64],
    p0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let n = spec.n();
    let pt = EvalPoint::new(spec, x0, p0)?;
    let k0 = fundamental(spec, &pt)?;
    let mut states = vec![GeodesicState { t: 0.0, x: x0.to_vec(), p: p0.to_vec(), k0, k: k0, drift: 0.0 }];
    let y0: Vec<f64> = x0.iter().chain(p0).copied().collect();
    let rhs = |_t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let (dx, dp) = flow.rhs(spec, &y[..n], &y[n..])?;
        Ok(dx.into_iter().chain(dp).collect())
    };
    let stats = dopri5(rhs, 0.0, &y0, t_end, cfg, |t, y| {
        let pt = EvalPoint::new(spec, &y[..n], &y[n..])
            .map_err(|e| Error::StepFailure { t, reason: e.to_string() })?;
        let k = fundamental(spec, &pt)?;
        states.push(GeodesicState {
            t,
            x: y[..n].to_vec(),
            p: y[n..].to_vec(),
            k0,
            k,
            drift: (k - k0).abs() / k0,
        });
        Ok(())
    })?;
    let max_drift = states.iter().map(|s| s.drift).fold(0.0, f64::max);
    Ok(Trajectory {
        flow,
        states,
        max_drift,
        drift_within_bound: max_drift <= cfg.drift_bound,
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
    })
}

/// `max |x'' + 2 G(x, p)|` over a trajectory, with `x''` evaluated exactly
/// from the flow. Zero for the spray flow by construction; a diagnostic only
/// for the Hamiltonian flow.
pub fn spray_consistency(spec: &MetricSpec, traj: &Trajectory) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in &traj.states {
        let pt = EvalPoint::new(spec, &s.x, &s.p)?;
        let g = spray_coeffs(spec, &pt)?;
        let accel = match traj.flow {
            Flow::Spray => g.iter().map(|v| -2.0 * v).collect::<Vec<_>>(),
            Flow::Hamiltonian => {
                let (xdot, pdot) = flow_rhs(spec, &s.x, &s.p)?;
                let bundle = crate::metric::MetricBundle::new(spec, &pt)?;
                let dg = g_up_x_derivative(spec, &pt, &xdot);
                let a = mat_vec(&dg, &s.p);
                let b = mat_vec(&bundle.g_up, &pdot);
                a.iter().zip(&b).map(|(a, b)| a + b).collect()
            }
        };
        for (acc, gi) in accel.iter().zip(&g) {
            worst = worst.max((acc + 2.0 * gi).abs());
        }
    }
    Ok(worst)
}

/// Distance between the start of `traj` and the end of the trajectory that
/// integrates back from its final state, relative to the size of the start.
pub fn reversibility_error(spec: &MetricSpec, traj: &Trajectory, cfg: &IntegratorConfig) -> Result<f64> {
    let end = traj.last();
    let back = integrate(spec, traj.flow, &end.x, &end.p, -end.t, cfg)?;
    let start = &traj.states[0];
    let fin = back.last();
    let diff = start.x.iter().zip(&fin.x).chain(start.p.iter().zip(&fin.p));
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (a, b) in diff {
        num = num.max((a - b).abs());
        den = den.max(a.abs());
    }
    Ok(num / den.max(1.0))
}

/// A scalar or tensor field on the cotangent bundle, flattened into a vector.
/// Directional derivatives default to Richardson-extrapolated central
/// differences; implementors override them with exact forms where known.
pub trait FlowField {
    fn eval(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>>;

    /// `v^s d/dx_s` at fixed `p`.
    fn x_directional(&self, x: &[f64], p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        directional_fd(|t| {
            let y: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + t * b).collect();
            self.eval(&y, p)
        }, x, v)
    }

    /// `w_s d/dp_s` at fixed `x`.
    fn p_directional(&self, x: &[f64], p: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        directional_fd(|t| {
            let q: Vec<f64> = p.iter().zip(w).map(|(a, b)| a + t * b).collect();
            self.eval(x, &q)
        }, p, w)
    }
}

/// Central difference with one Richardson step along `dir`, base step
/// `1e-5 max(1, |base|)` measured in the ambient space.
pub fn directional_fd(
    f: impl Fn(f64) -> Result<Vec<f64>>,
    base: &[f64],
    dir: &[f64],
) -> Result<Vec<f64>> {
    let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if dn == 0.0 {
        let len = f(0.0)?.len();
        return Ok(vec![0.0; len]);
    }
    let bn = base.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = 1e-5 * bn.max(1.0) / dn;
    let central = |h: f64| -> Result<Vec<f64>> {
        let (a, b) = (f(h)?, f(-h)?);
        Ok(a.iter().zip(&b).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let (d1, d2) = (central(h)?, central(h / 2.0)?);
    Ok(d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect())
}

/// `x' . d_x field + p' . d_p field` along the chosen flow.
pub fn flow_derivative(spec: &MetricSpec, pt: &EvalPoint, flow: Flow, field: &dyn FlowField) -> Result<Vec<f64>> {
    let (xdot, pdot) = flow.rhs(spec, pt.x(), pt.p())?;
    let a = field.x_directional(pt.x(), pt.p(), &xdot)?;
    let b = field.p_directional(pt.x(), pt.p(), &pdot)?;
    Ok(a.iter().zip(&b).map(|(a, b)| a + b).collect())
}

/// The fundamental function as a field, with exact derivatives.
pub struct KField<'a>(pub &'a MetricSpec);

impl FlowField for KField<'_> {
    fn eval(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![fundamental(self.0, &EvalPoint::new(self.0, x, p)?)?])
    }

    fn x_directional(&self, x: &[f64], p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let grad = k_x_gradient(self.0, &EvalPoint::new(self.0, x, p)?);
        Ok(vec![grad.iter().zip(v).map(|(a, b)| a * b).sum()])
    }

    fn p_directional(&self, x: &[f64], p: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let pt = EvalPoint::new(self.0, x, p)?;
        let a1 = Contractions::at(self.0, &pt).a_tensor(1);
        Ok(vec![(0..w.len()).map(|i| a1.get(&[i]) * w[i]).sum()])
    }
}

/// A field with a fixed value everywhere.
pub struct ConstantField(pub Vec<f64>);

impl FlowField for ConstantField {
    fn eval(&self, _x: &[f64], _p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.0.clone())
    }
}
