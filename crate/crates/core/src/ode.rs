//! Dormand–Prince 5(4) with PI step-size control.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Relative `K` drift above which a trajectory is flagged.
    pub drift_bound: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_step: f64::INFINITY, max_steps: 100_000, drift_bound: 1e-8 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.max_step > 0.0 && self.max_steps > 0) {
            return Err(Error::InvalidSpec("integrator tolerances and limits must be positive".into()));
        }
        Ok(())
    }
}

const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [&[f64]; 6] = [
    &[0.2],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

fn err_norm(e: &[f64], y0: &[f64], y1: &[f64], cfg: &IntegratorConfig) -> f64 {
    let s: f64 = e
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = cfg.atol + cfg.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / e.len() as f64).sqrt()
}

fn initial_step<F>(f: &mut F, t0: f64, y0: &[f64], f0: &[f64], dir: f64, cfg: &IntegratorConfig) -> f64
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let scaled = |v: &[f64]| -> f64 {
        let s: f64 = v
            .iter()
            .zip(y0)
            .map(|(v, y)| (v / (cfg.atol + cfg.rtol * y.abs())).powi(2))
            .sum();
        (s / v.len() as f64).sqrt()
    };
    let (d0, d1) = (scaled(y0), scaled(f0));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(cfg.max_step);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + dir * h0 * f).collect();
    let d2 = match f(t0 + dir * h0, &y1) {
        Ok(f1) => {
            let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
            scaled(&diff) / h0
        }
        Err(_) => return h0 * 1e-3,
    };
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
    (100.0 * h0).min(h1).min(cfg.max_step)
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction), calling
/// `observe` after every accepted step. An error from `f` counts as a
/// rejected step; the integration fails once the step underflows.
pub fn dopri5<F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
    mut observe: O,
) -> Result<OdeStats>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    O: FnMut(f64, &[f64]) -> Result<()>,
{
    cfg.validate()?;
    let mut stats = OdeStats::default();
    if t_end == t0 {
        return Ok(stats);
    }
    let dir = (t_end - t0).signum();
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k0 = f(t, &y)?;
    let mut h = initial_step(&mut f, t, &y, &k0, dir, cfg);
    let mut facold: f64 = 1e-4;
    let (beta, safe) = (0.04, 0.9);
    let expo1 = 0.2 - beta * 0.75;
    let mut last_reason = String::new();
    let mut rejected_prev = false;
    loop {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(Error::StepFailure { t, reason: format!("exceeded {} steps", cfg.max_steps) });
        }
        let remaining = (t_end - t) * dir;
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let floor = 1e-14 * t.abs().max(1.0);
        if h < floor {
            let reason =
                if last_reason.is_empty() { "step size underflow".to_string() } else { last_reason.clone() };
            return Err(Error::StepFailure { t, reason });
        }
        let mut ks: Vec<Vec<f64>> = Vec::with_capacity(7);
        ks.push(k0.clone());
        let mut ynew = vec![0.0; n];
        let mut ok = true;
        for (s, row) in A.iter().enumerate() {
            for i in 0..n {
                let incr: f64 = row.iter().zip(&ks).map(|(a, k)| a * k[i]).sum();
                ynew[i] = y[i] + dir * h * incr;
            }
            match f(t + dir * C[s] * h, &ynew) {
                Ok(k) => ks.push(k),
                Err(e) => {
                    last_reason = e.to_string();
                    ok = false;
                    break;
                }
            }
        }
        let err = if ok {
            let e: Vec<f64> =
                (0..n).map(|i| dir * h * E.iter().zip(&ks).map(|(c, k)| c * k[i]).sum::<f64>()).collect();
            err_norm(&e, &y, &ynew, cfg)
        } else {
            f64::INFINITY
        };
        if err <= 1.0 {
            let fac11 = err.powf(expo1);
            let mut fac = fac11 / facold.powf(beta);
            fac = (fac / safe).clamp(0.2, 10.0);
            let mut hnew = h / fac;
            if rejected_prev {
                hnew = hnew.min(h);
            }
            facold = err.max(1e-4);
            t = if last { t_end } else { t + dir * h };
            y = ynew;
            k0 = ks.pop().expect("seven stages");
            stats.accepted += 1;
            observe(t, &y)?;
            if last {
                return Ok(stats);
            }
            h = hnew.min(cfg.max_step);
            rejected_prev = false;
        } else {
            stats.rejected += 1;
            h = if err.is_finite() { h / (err.powf(expo1) / safe).min(5.0) } else { h * 0.25 };
            rejected_prev = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let cfg = IntegratorConfig::default();
        let mut last = vec![];
        dopri5(|_, y| Ok(vec![-y[0]]), 0.0, &[1.0], 2.0, &cfg, |_, y| {
            last = y.to_vec();
            Ok(())
        })
        .unwrap();
        assert!((last[0] - (-2.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let cfg = IntegratorConfig::default();
        let mut last = vec![];
        dopri5(|_, y| Ok(vec![y[1], -y[0]]), 0.0, &[0.0, 1.0], -3.0, &cfg, |_, y| {
            last = y.to_vec();
            Ok(())
        })
        .unwrap();
        assert!((last[0] - (-3.0f64).sin()).abs() < 1e-9);
        assert!((last[1] - (-3.0f64).cos()).abs() < 1e-9);
    }

    #[test]
    fn domain_exit_reports_step_failure() {
        let cfg = IntegratorConfig::default();
        let r = dopri5(
            |t, _| if t > 0.5 { Err(Error::NonPositiveRadicand { radicand: -1.0 }) } else { Ok(vec![1.0]) },
            0.0,
            &[0.0],
            1.0,
            &cfg,
            |_, _| Ok(()),
        );
        assert!(matches!(r, Err(Error::StepFailure { .. })));
    }
}
