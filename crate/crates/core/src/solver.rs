//! Time integration driver for the one-dimensional problem.
//!
//! Runs the semi-adaptive scheme from an initial state until the solution
//! reaches unity (quench) or a final time, recording a thinned history and a
//! dense tail window for rate estimation near the end.

use crate::error::Result;
use crate::grid::Grid1D;
use crate::operator::{assemble_m, DiscreteOperator};
use crate::source::{g_eval, SourceModel};
use crate::stepper::{adapt_tau, cfl_ceiling, cn_step, StepConfig};

/// Number of trailing steps kept densely for end-of-run diagnostics.
pub const TAIL_WINDOW: usize = 105;

/// One retained history row.
#[derive(Debug, Clone, Copy)]
pub struct HistoryRow {
    pub t: f64,
    pub max_u: f64,
    pub max_ut: f64,
}

/// Thinned time series plus a dense tail.
///
/// Early rows are kept at geometrically growing stride (doubling whenever the
/// retained count hits the cap), so million-step runs stay at a few thousand
/// rows. The final [`TAIL_WINDOW`] steps are always present in full.
#[derive(Debug, Clone)]
pub struct RunHistory {
    pub rows: Vec<HistoryRow>,
    stride: usize,
    counter: usize,
    cap: usize,
    tail: Vec<HistoryRow>,
    tail_start: usize,
}

impl RunHistory {
    pub fn new(cap: usize) -> RunHistory {
        RunHistory {
            rows: Vec::new(),
            stride: 1,
            counter: 0,
            cap: cap.max(16),
            tail: Vec::with_capacity(TAIL_WINDOW),
            tail_start: 0,
        }
    }

    pub(crate) fn push(&mut self, row: HistoryRow) {
        if self.counter.is_multiple_of(self.stride) {
            self.rows.push(row);
            if self.rows.len() >= self.cap {
                // Re-thin in place: keep every other row, double the stride.
                let mut keep = 0;
                for i in (0..self.rows.len()).step_by(2) {
                    self.rows[keep] = self.rows[i];
                    keep += 1;
                }
                self.rows.truncate(keep);
                self.stride *= 2;
            }
        }
        self.counter += 1;

        if self.tail.len() < TAIL_WINDOW {
            self.tail.push(row);
        } else {
            self.tail[self.tail_start] = row;
            self.tail_start = (self.tail_start + 1) % TAIL_WINDOW;
        }
    }

    /// Dense trailing rows in chronological order.
    pub fn tail_rows(&self) -> Vec<HistoryRow> {
        let mut out = Vec::with_capacity(self.tail.len());
        for k in 0..self.tail.len() {
            out.push(self.tail[(self.tail_start + k) % self.tail.len()]);
        }
        out
    }
}

/// Snapshot of the full state at one instant.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

/// Outcome of a run.
///
/// Invariant: `quenched` implies the final state has max >= 1 and `t_quench`
/// equals the final time.
#[derive(Debug, Clone)]
pub struct QuenchReport {
    pub quenched: bool,
    pub t_quench: f64,
    pub x_quench: f64,
    pub max_ut: f64,
    pub steps: u64,
    pub final_state: Vec<f64>,
    pub history: RunHistory,
    pub snapshots: Vec<Snapshot>,
}

/// Index of the first maximal entry at or above one, if any.
///
/// Ties resolve to the smallest index, so a symmetric profile reports its
/// left-of-center node when the discrete maximum is shared.
pub fn check_quench(v: &[f64]) -> Option<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > best {
            best = x;
            arg = i;
        }
    }
    if best >= 1.0 {
        Some(arg)
    } else {
        None
    }
}

/// Max-norm time-derivative estimate (v_new - v_old) / tau with the rescaled
/// form g(v)/sigma's scale guarding tau at the floor: when tau underflows the
/// difference quotient, fall back to the instantaneous rate M v + g(v).
pub fn estimate_ut(
    v_old: &[f64],
    v_new: &[f64],
    tau: f64,
    op: &DiscreteOperator,
    model: &SourceModel,
) -> f64 {
    if tau > 1e-13 {
        let mut m = 0.0f64;
        for i in 0..v_old.len() {
            m = m.max(((v_new[i] - v_old[i]) / tau).abs());
        }
        return m;
    }
    let mut rate = vec![0.0; v_old.len()];
    op.apply_m(v_old, &mut rate);
    if let Ok(g) = g_eval(v_old, model) {
        for i in 0..rate.len() {
            rate[i] += g[i];
        }
    }
    rate.iter().cloned().fold(0.0, |a, b| a.max(b.abs()))
}

/// Default initial profile 0.001 (1 - cos 2 pi x) sampled at interior nodes.
pub fn default_initial_condition(g: &Grid1D) -> Vec<f64> {
    g.interior()
        .iter()
        .map(|&x| 0.001 * (1.0 - (2.0 * std::f64::consts::PI * x).cos()))
        .collect()
}

/// Run controls not tied to step-size policy.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub t_end: f64,
    /// Retained-row cap before stride doubling.
    pub history_cap: usize,
    /// Number of geometrically spaced snapshots (0 disables).
    pub snapshot_count: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            t_end: f64::INFINITY,
            history_cap: 200_000,
            snapshot_count: 12,
        }
    }
}

/// Integrate from `u0` (or the default profile) until quench or `t_end`.
///
/// The adaptation trigger latches: once the max norm crosses the trigger
/// level the source-scaled step policy stays active even if the norm dips
/// back below it.
pub fn run_1d(
    grid: &Grid1D,
    model: &SourceModel,
    a: f64,
    step_cfg: &StepConfig,
    run_cfg: &RunConfig,
    u0: Option<&[f64]>,
) -> Result<QuenchReport> {
    let op = assemble_m(grid, &model.sigma, a)?;
    run_with_operator(grid, model, &op, step_cfg, run_cfg, u0)
}

/// Same as [`run_1d`] but with a caller-assembled operator (the operator is
/// reused across runs in scans).
pub fn run_with_operator(
    grid: &Grid1D,
    model: &SourceModel,
    op: &DiscreteOperator,
    step_cfg: &StepConfig,
    run_cfg: &RunConfig,
    u0: Option<&[f64]>,
) -> Result<QuenchReport> {
    let mut v = match u0 {
        Some(s) => s.to_vec(),
        None => default_initial_condition(grid),
    };
    let ceiling = cfl_ceiling(op, grid);
    let mut t = 0.0f64;
    let mut steps: u64 = 0;
    let mut triggered = false;
    let mut history = RunHistory::new(run_cfg.history_cap);
    let mut snapshots = Vec::new();
    let mut next_snap = 1e-4f64;
    let mut max_ut_seen = 0.0f64;
    let mut v_old = v.clone();

    let initial_max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    history.push(HistoryRow {
        t: 0.0,
        max_u: initial_max,
        max_ut: 0.0,
    });
    if run_cfg.snapshot_count > 0 {
        snapshots.push(Snapshot {
            t: 0.0,
            u: v.clone(),
        });
    }

    loop {
        let max_v = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if let Some(idx) = check_quench(&v) {
            return Ok(finish(
                true,
                t,
                grid.interior()[idx],
                max_ut_seen,
                steps,
                v,
                history,
                snapshots,
            ));
        }
        if t >= run_cfg.t_end {
            return Ok(finish(
                false,
                t,
                f64::NAN,
                max_ut_seen,
                steps,
                v,
                history,
                snapshots,
            ));
        }

        if max_v >= step_cfg.trigger_level {
            triggered = true;
        }
        let g_now = g_eval(&v, model)?;
        let g_norm = g_now.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut tau = if triggered {
            adapt_tau(step_cfg.trigger_level.max(max_v), g_norm, step_cfg, ceiling)
        } else {
            adapt_tau(max_v, g_norm, step_cfg, ceiling)
        };
        // Land exactly on t_end when it is finite and close.
        if t + tau > run_cfg.t_end {
            tau = (run_cfg.t_end - t).max(step_cfg.tau_min.min(1e-12));
        }
        // Keep strictly below the ceiling even when safety = 1.
        if tau >= ceiling {
            tau = ceiling * (1.0 - 1e-12);
        }

        v_old.clone_from(&v);
        let r = cn_step(&v, tau, op, model, ceiling)?;
        v = r.v_next;
        t += tau;
        steps += 1;

        let max_u = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ut = estimate_ut(&v_old, &v, tau, op, model);
        max_ut_seen = max_ut_seen.max(ut);
        history.push(HistoryRow {
            t,
            max_u,
            max_ut: ut,
        });

        if run_cfg.snapshot_count > 0 && t >= next_snap && snapshots.len() < run_cfg.snapshot_count
        {
            snapshots.push(Snapshot { t, u: v.clone() });
            next_snap *= 2.5;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    quenched: bool,
    t: f64,
    x_quench: f64,
    max_ut: f64,
    steps: u64,
    final_state: Vec<f64>,
    mut history: RunHistory,
    mut snapshots: Vec<Snapshot>,
) -> QuenchReport {
    let final_max = final_state
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    // The final row bypasses thinning so the end state is always recorded.
    if history.rows.last().map(|r| r.t) != Some(t) {
        history.rows.push(HistoryRow {
            t,
            max_u: final_max,
            max_ut,
        });
    }
    // Snapshots disabled (never seeded) stay disabled; otherwise the end
    // state joins the geometric schedule.
    if !snapshots.is_empty() {
        snapshots.push(Snapshot {
            t,
            u: final_state.clone(),
        });
    }
    QuenchReport {
        quenched,
        t_quench: t,
        x_quench,
        max_ut,
        steps,
        final_state,
        history,
        snapshots,
    }
}
