//! Finite-difference cross-checks of the closed-form formulas.
//!
//! Every comparison reports `max |closed - fd| / max(|closed|, |fd|, floor)`
//! over the samples, where the floor is the size of the differentiated
//! quantity divided by `|p|`, so that zero-against-noise comparisons do not
//! inflate the error. Steps scale with `min(|p|, K / |dK/dp|)`, the
//! distance over which `K` changes by order one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::SampleSet;
use crate::curvature::{e_curvature, s_curvature, VolumeForm};
use crate::error::Result;
use crate::metric::{fundamental, vertical_derivatives, Contractions, EvalPoint, MetricBundle, MetricSpec};
use crate::spray::SprayContext;

pub const TOL_G_UP: f64 = 1e-6;
pub const TOL_CARTAN: f64 = 1e-5;
pub const TOL_VERTICAL: f64 = 1e-6;
pub const TOL_BERWALD: f64 = 1e-5;
pub const TOL_E_FROM_S: f64 = 1e-4;

/// Relative step for first derivatives.
const STEP1: f64 = 1e-5;
/// Relative step for second derivatives; larger to keep cancellation down.
const STEP2: f64 = 3e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub evaluated: usize,
    /// Samples whose difference stencil left the admissible region.
    pub skipped: usize,
}

impl Comparison {
    fn new(tolerance: f64) -> Self {
        Self { max_rel_error: 0.0, max_abs_error: 0.0, tolerance, pass: true, evaluated: 0, skipped: 0 }
    }

    fn record(&mut self, closed: &[f64], fd: &[f64], floor: f64) {
        let size = |v: &[f64]| v.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let abs = closed.iter().zip(fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let denom = size(closed).max(size(fd)).max(floor);
        let rel = if abs == 0.0 { 0.0 } else { abs / denom };
        self.max_abs_error = self.max_abs_error.max(abs);
        self.max_rel_error = self.max_rel_error.max(rel);
        self.evaluated += 1;
        self.pass = self.max_rel_error <= self.tolerance;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub comparisons: BTreeMap<String, Comparison>,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.comparisons.values().all(|c| c.pass)
    }
}


type VerticalCheck<'a> = (&'static str, &'a dyn Fn(&[f64]) -> Result<Vec<f64>>, &'a [f64], usize);
fn shifted(p: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut q = p.to_vec();
    for &(i, d) in moves {
        q[i] += d;
    }
    q
}

/// Richardson-extrapolated central first derivative along `e_i` of a
/// vector-valued function of `p`.
fn d1(f: &dyn Fn(&[f64]) -> Result<Vec<f64>>, p: &[f64], i: usize, h: f64) -> Result<Vec<f64>> {
    let central = |h: f64| -> Result<Vec<f64>> {
        let (a, b) = (f(&shifted(p, &[(i, h)]))?, f(&shifted(p, &[(i, -h)]))?);
        Ok(a.iter().zip(&b).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let (a, b) = (central(h)?, central(h / 2.0)?);
    Ok(a.iter().zip(&b).map(|(a, b)| (4.0 * b - a) / 3.0).collect())
}

/// Richardson-extrapolated mixed second derivative of a scalar function.
fn d2(f: &dyn Fn(&[f64]) -> Result<f64>, p: &[f64], i: usize, j: usize, h: f64) -> Result<f64> {
    let stencil = |h: f64| -> Result<f64> {
        let v = |a: f64, b: f64| f(&shifted(p, &[(i, a), (j, b)]));
        Ok((v(h, h)? - v(h, -h)? - v(-h, h)? + v(-h, -h)?) / (4.0 * h * h))
    };
    Ok((4.0 * stencil(h / 2.0)? - stencil(h)?) / 3.0)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Runs every comparison at every sample.
pub fn fd_oracle(spec: &MetricSpec, samples: &SampleSet) -> Result<OracleReport> {
    let n = spec.n();
    let x = samples.x.clone();
    let unit = VolumeForm::unit(n);
    let mut cmp: BTreeMap<String, Comparison> = BTreeMap::new();
    let mut entry = |name: &str, tol: f64| -> Comparison {
        cmp.remove(name).unwrap_or_else(|| Comparison::new(tol))
    };
    let mut out: Vec<(String, Comparison)> = Vec::new();
    let names = [
        ("g_up", TOL_G_UP),
        ("cartan", TOL_CARTAN),
        ("vertical_a_ij", TOL_VERTICAL),
        ("vertical_a_i", TOL_VERTICAL),
        ("vertical_a_i_a_j", TOL_VERTICAL),
        ("berwald_level_1", TOL_BERWALD),
        ("berwald_level_2", TOL_BERWALD),
        ("berwald_level_3", TOL_BERWALD),
        ("e_from_s", TOL_E_FROM_S),
    ];
    for (name, tol) in names {
        out.push((name.to_string(), entry(name, tol)));
    }
    let slot = |out: &mut Vec<(String, Comparison)>, name: &str| -> usize {
        out.iter().position(|(n, _)| n == name).expect("registered comparison")
    };

    let k2 = |q: &[f64]| -> Result<f64> { Ok(fundamental(spec, &EvalPoint::new(spec, &x, q)?)?.powi(2)) };
    let g_up_of = |q: &[f64]| -> Result<Vec<f64>> {
        Ok(MetricBundle::new(spec, &EvalPoint::new(spec, &x, q)?)?.g_up.to_dense().data().to_vec())
    };
    let a_of = |r: usize| {
        let x = x.clone();
        move |q: &[f64]| -> Result<Vec<f64>> {
            let pt = EvalPoint::new(spec, &x, q)?;
            Ok(Contractions::at(spec, &pt).a_tensor(r).to_dense().data().to_vec())
        }
    };
    let aa_of = |q: &[f64]| -> Result<Vec<f64>> {
        let a = a_of(1)(q)?;
        Ok((0..n * n).map(|ij| a[ij / n] * a[ij % n]).collect())
    };
    let level_of = |k: usize| {
        let x = x.clone();
        move |q: &[f64]| -> Result<Vec<f64>> {
            let pt = EvalPoint::new(spec, &x, q)?;
            Ok(SprayContext::new(spec, &pt)?.hierarchy(k)?.levels[k].data().to_vec())
        }
    };
    let s_of = |q: &[f64]| -> Result<f64> { s_curvature(spec, &EvalPoint::new(spec, &x, q)?, &unit) };

    for p in &samples.momenta {
        let pt = EvalPoint::new(spec, &x, p)?;
        let pn = norm(p);
        let bundle = MetricBundle::new(spec, &pt)?;
        // K / |dK/dp| shrinks near the boundary of the admissible cone
        let local = pn.min(bundle.k / norm(&bundle.l));
        let (h1, h2) = (STEP1 * local, STEP2 * local);
        let g_up = bundle.g_up.to_dense();

        // g^{ij} = 1/2 d^2 K^2 / dp_i dp_j
        let fd: Result<Vec<f64>> =
            (0..n * n).map(|ij| Ok(0.5 * d2(&k2, p, ij / n, ij % n, h2)?)).collect();
        let s = slot(&mut out, "g_up");
        match fd {
            Ok(fd) => out[s].1.record(g_up.data(), &fd, bundle.k.powi(2) / (pn * pn)),
            Err(_) => out[s].1.skipped += 1,
        }

        // C^{ijk} = -1/2 d g^{ij} / dp_k, last slot k
        let fd: Result<Vec<Vec<f64>>> = (0..n).map(|k| d1(&g_up_of, p, k, h1)).collect();
        let s = slot(&mut out, "cartan");
        match fd {
            Ok(cols) => {
                let fd: Vec<f64> = (0..n * n * n).map(|ijk| -0.5 * cols[ijk % n][ijk / n]).collect();
                out[s].1.record(bundle.c.to_dense().data(), &fd, max_abs(g_up.data()) / pn);
            }
            Err(_) => out[s].1.skipped += 1,
        }

        let vd = vertical_derivatives(spec, &pt);
        let a2 = a_of(2);
        let a1 = a_of(1);
        let checks: [VerticalCheck; 3] = [
            ("vertical_a_ij", &a2, vd.d_aij.data(), n * n),
            ("vertical_a_i", &a1, vd.d_ai.data(), n),
            ("vertical_a_i_a_j", &aa_of, vd.d_aiaj.data(), n * n),
        ];
        for (name, f, closed, len) in checks {
            let fd: Result<Vec<Vec<f64>>> = (0..n).map(|k| d1(f, p, k, h1)).collect();
            let s = slot(&mut out, name);
            match fd {
                Ok(cols) => {
                    let fd: Vec<f64> = (0..len * n).map(|ik| cols[ik % n][ik / n]).collect();
                    let base = max_abs(&f(p)?);
                    out[s].1.record(closed, &fd, base / pn);
                }
                Err(_) => out[s].1.skipped += 1,
            }
        }

        // level k with the new upper index in front is d/dp of level k-1
        let jet = SprayContext::new(spec, &pt)?.hierarchy(3)?;
        for k in 1..=3 {
            let below = level_of(k - 1);
            let fd: Result<Vec<Vec<f64>>> = (0..n).map(|i| d1(&below, p, i, h1)).collect();
            let s = slot(&mut out, &format!("berwald_level_{k}"));
            match fd {
                Ok(rows) => {
                    let fd: Vec<f64> = rows.concat();
                    out[s].1.record(jet.levels[k].data(), &fd, max_abs(jet.levels[k - 1].data()) / pn);
                }
                Err(_) => out[s].1.skipped += 1,
            }
        }

        // E = 1/2 d^2 S / dp dp with unit volume
        let e = e_curvature(&jet).to_dense();
        let fd: Result<Vec<f64>> = (0..n * n).map(|ij| Ok(0.5 * d2(&s_of, p, ij / n, ij % n, h2)?)).collect();
        let s = slot(&mut out, "e_from_s");
        match fd {
            Ok(fd) => {
                let floor = max_abs(jet.levels[1].data()) / (pn * pn);
                out[s].1.record(e.data(), &fd, floor);
            }
            Err(_) => out[s].1.skipped += 1,
        }
    }
    Ok(OracleReport { comparisons: out.into_iter().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::DEFAULT_SEED;
    use crate::fixtures;

    fn run(spec: &MetricSpec, count: usize) -> OracleReport {
        let s = SampleSet::generate(spec, &vec![0.1; spec.n()], count, DEFAULT_SEED).unwrap();
        fd_oracle(spec, &s).unwrap()
    }

    #[test]
    fn every_fixture_passes() {
        for spec in fixtures::all() {
            let r = run(&spec, 12);
            for (name, c) in &r.comparisons {
                assert!(c.pass, "{:?} {name}: {c:?}", spec.name());
                assert!(c.evaluated > 0, "{:?} {name}", spec.name());
            }
        }
    }

    #[test]
    fn euclidean_cartan_is_zero_on_both_sides() {
        let r = run(&fixtures::m_euc4(), 12);
        assert!(r.comparisons["cartan"].max_abs_error <= 1e-9);
    }
}
