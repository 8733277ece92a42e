//! One semi-adaptive Crank-Nicolson step with predictor linearization.
//!
//! The implicit half of the source is linearized through an explicit Euler
//! predictor w = v + tau (Mv + g(v)), so each step costs one tridiagonal
//! solve. Under the step ceiling tau < a^2 beta_min both factors
//! (I -/+ tau/2 M) keep the sign structure that makes the update
//! inverse-positive and monotone.

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::operator::{beta_min, DiscreteOperator, Tridiagonal};
use crate::source::{g_eval, SourceModel};

/// Step-size policy: a fixed base step until the solution nears unity, then
/// source-magnitude inverse scaling between a hard floor and the ceiling.
#[derive(Debug, Clone, Copy)]
pub struct StepConfig {
    /// Pre-trigger step.
    pub tau_base: f64,
    /// Hard floor c * 1e-6; adaptation never goes below it.
    pub tau_min: f64,
    /// Max-norm level that switches adaptation on (0.90 unless reconfigured).
    pub trigger_level: f64,
    /// Safety multiplier on the ceiling, strictly inside (0, 1].
    pub safety: f64,
}

impl StepConfig {
    /// Defaults tied to a concrete ceiling: run at the safety-scaled ceiling
    /// until triggered, with floor scale `c` in units of 1e-6.
    pub fn defaults(ceiling: f64, c: f64) -> StepConfig {
        let safety = 0.9;
        StepConfig {
            tau_base: safety * ceiling,
            tau_min: c * 1e-6,
            trigger_level: 0.90,
            safety,
        }
    }
}

/// Outcome of one step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub v_next: Vec<f64>,
    pub w_pred: Vec<f64>,
    pub tau_used: f64,
    pub cfl_ceiling: f64,
}

/// a^2 beta_min, clamped to 1: the structure-preserving step ceiling.
pub fn cfl_ceiling(op: &DiscreteOperator, g: &Grid1D) -> f64 {
    (op.a * op.a * beta_min(g, &op.sigma)).min(1.0)
}

/// Explicit Euler predictor w = v + tau (M v + g(v)).
pub fn predictor(
    v: &[f64],
    tau: f64,
    op: &DiscreteOperator,
    model: &SourceModel,
) -> Result<Vec<f64>> {
    let g = g_eval(v, model)?;
    let mut w = vec![0.0; v.len()];
    op.apply_m(v, &mut w);
    for i in 0..v.len() {
        w[i] = v[i] + tau * (w[i] + g[i]);
    }
    Ok(w)
}

/// I + s*M as explicit tridiagonal storage.
pub(crate) fn shifted_identity(m: &Tridiagonal, s: f64) -> Tridiagonal {
    Tridiagonal {
        sub: m.sub.iter().map(|x| s * x).collect(),
        diag: m.diag.iter().map(|x| 1.0 + s * x).collect(),
        sup: m.sup.iter().map(|x| s * x).collect(),
    }
}

/// One Crank-Nicolson step:
///
///   (I - tau/2 M) v_next = (I + tau/2 M)(v + tau/2 g(v)) + (I - tau/2 M)(tau/2 g(w))
///
/// with w the predictor. If the predictor itself reaches unity the step is
/// accepted as a final explicit Euler step (v_next = w), so the caller's
/// quench detection fires on it; unity is the terminal event, not an error
/// to retry.
pub fn cn_step(
    v: &[f64],
    tau: f64,
    op: &DiscreteOperator,
    model: &SourceModel,
    ceiling: f64,
) -> Result<StepResult> {
    if tau >= ceiling {
        return Err(Error::CflViolation { tau, ceiling });
    }
    let n = v.len();
    let gv = g_eval(v, model)?;
    let m = op.m_tridiagonal();

    let mut w = vec![0.0; n];
    op.apply_m(v, &mut w);
    for i in 0..n {
        w[i] = v[i] + tau * (w[i] + gv[i]);
    }
    if w.iter().cloned().fold(f64::NEG_INFINITY, f64::max) >= 1.0 {
        return Ok(StepResult {
            v_next: w.clone(),
            w_pred: w,
            tau_used: tau,
            cfl_ceiling: ceiling,
        });
    }

    let gw = g_eval(&w, model)?;
    let plus = shifted_identity(&m, 0.5 * tau);
    let minus = shifted_identity(&m, -0.5 * tau);

    let mut rhs = vec![0.0; n];
    let loaded: Vec<f64> = (0..n).map(|i| v[i] + 0.5 * tau * gv[i]).collect();
    plus.apply(&loaded, &mut rhs);
    let half_gw: Vec<f64> = gw.iter().map(|x| 0.5 * tau * x).collect();
    let mut tail = vec![0.0; n];
    minus.apply(&half_gw, &mut tail);
    for i in 0..n {
        rhs[i] += tail[i];
    }

    let v_next = minus.solve(&rhs)?;
    Ok(StepResult {
        v_next,
        w_pred: w,
        tau_used: tau,
        cfl_ceiling: ceiling,
    })
}

/// Step-size policy. Before the trigger the step is the base step (never above
/// the safety-scaled ceiling); after it, the step shrinks inversely with the
/// source magnitude, clamped between the floor and the safety-scaled ceiling.
pub fn adapt_tau(max_v: f64, g_norm_inf: f64, cfg: &StepConfig, ceiling: f64) -> f64 {
    let cap = cfg.safety * ceiling;
    if max_v < cfg.trigger_level {
        cfg.tau_base.min(cap)
    } else {
        (cap / (1.0 + g_norm_inf)).clamp(cfg.tau_min, cap)
    }
}
