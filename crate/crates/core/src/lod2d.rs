//! Locally one-dimensional splitting for the two-dimensional problem.
//!
//! Each step factors the plane problem into a Crank-Nicolson half-problem
//! along x (every grid row solved independently) followed by one along y,
//! with the linearized source split evenly between the two sweeps: each
//! sweep's right-hand side carries tau/4 (g(v) + g(w)), so a full step
//! applies the same trapezoidal source load as the unsplit scheme.
//!
//! Interior states are stored row-major with x fastest: node (i, j) lives at
//! flat index j * nx + i.

use crate::error::{Error, Result};
use crate::grid::{grid_extremal_steps, Grid2D};
use crate::operator::{assemble_p, Tridiagonal};
use crate::solver::{check_quench, HistoryRow, RunConfig, RunHistory, Snapshot};
use crate::source::{g_eval, SourceModel};
use crate::stepper::{adapt_tau, StepConfig};

/// Directional second-difference operators plus the shared density weight.
#[derive(Debug, Clone)]
pub struct Operator2D {
    pub px: Tridiagonal,
    pub py: Tridiagonal,
    /// Per-node density, row-major.
    pub sigma: Vec<f64>,
    pub a: f64,
    pub b: f64,
    nx: usize,
    ny: usize,
}

impl Operator2D {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// out = (1/a^2) B Px v, rows of the plane solved independently.
    pub fn apply_mx(&self, v: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        let inv_a2 = 1.0 / (self.a * self.a);
        for j in 0..ny {
            let base = j * nx;
            for i in 0..nx {
                let mut acc = self.px.diag[i] * v[base + i];
                if i > 0 {
                    acc += self.px.sub[i - 1] * v[base + i - 1];
                }
                if i + 1 < nx {
                    acc += self.px.sup[i] * v[base + i + 1];
                }
                out[base + i] = acc * inv_a2 / self.sigma[base + i];
            }
        }
    }

    /// out = (1/b^2) B Py v, columns of the plane solved independently.
    pub fn apply_my(&self, v: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        let inv_b2 = 1.0 / (self.b * self.b);
        for j in 0..ny {
            let base = j * nx;
            for i in 0..nx {
                let mut acc = self.py.diag[j] * v[base + i];
                if j > 0 {
                    acc += self.py.sub[j - 1] * v[base - nx + i];
                }
                if j + 1 < ny {
                    acc += self.py.sup[j] * v[base + nx + i];
                }
                out[base + i] = acc * inv_b2 / self.sigma[base + i];
            }
        }
    }
}

/// Assemble both directional operators; `sigma` is per-node, row-major, with
/// nx*ny entries, all strictly positive.
pub fn assemble_2d(grid: &Grid2D, sigma: &[f64], a: f64, b: f64) -> Result<Operator2D> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "half-widths must be positive, got a = {a}, b = {b}"
        )));
    }
    let nx = grid.gx.n_interior;
    let ny = grid.gy.n_interior;
    if sigma.len() != nx * ny {
        return Err(Error::InvalidArgument(format!(
            "sigma has {} entries, expected {}",
            sigma.len(),
            nx * ny
        )));
    }
    for (k, &s) in sigma.iter().enumerate() {
        if !(s > 0.0) {
            return Err(Error::DegenerateInterior { index: k, value: s });
        }
    }
    Ok(Operator2D {
        px: assemble_p(&grid.gx),
        py: assemble_p(&grid.gy),
        sigma: sigma.to_vec(),
        a,
        b,
        nx,
        ny,
    })
}

/// Structure-preserving step ceiling: the tighter of the two axis ceilings
/// a^2 h_x,min^2 sigma_min / 2 and b^2 h_y,min^2 sigma_min / 2, clamped to 1.
pub fn cfl_ceiling_2d(op: &Operator2D, grid: &Grid2D) -> f64 {
    let smin = op.sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    let (hx, _) = grid_extremal_steps(&grid.gx);
    let (hy, _) = grid_extremal_steps(&grid.gy);
    let cx = op.a * op.a * hx * hx * smin / 2.0;
    let cy = op.b * op.b * hy * hy * smin / 2.0;
    cx.min(cy).min(1.0)
}

/// Default plane profile 0.001 (1 - cos 2 pi x)(1 - cos 2 pi y).
pub fn default_initial_condition_2d(grid: &Grid2D) -> Vec<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let xs = grid.gx.interior();
    let ys = grid.gy.interior();
    let mut u = Vec::with_capacity(xs.len() * ys.len());
    for &y in ys {
        let fy = 1.0 - (two_pi * y).cos();
        for &x in xs {
            u.push(0.001 * (1.0 - (two_pi * x).cos()) * fy);
        }
    }
    u
}

/// Outcome of a plane run; layout of `final_state` and snapshot fields is
/// row-major with x fastest, matching the solver state.
#[derive(Debug, Clone)]
pub struct QuenchReport2D {
    pub quenched: bool,
    pub t_quench: f64,
    pub x_quench: f64,
    pub y_quench: f64,
    pub max_ut: f64,
    pub steps: u64,
    pub final_state: Vec<f64>,
    pub history: RunHistory,
    pub snapshots: Vec<Snapshot>,
}

/// Outcome of a single split step.
#[derive(Debug, Clone)]
pub struct LodStepResult {
    pub v_next: Vec<f64>,
    pub w_pred: Vec<f64>,
    pub tau_used: f64,
    pub cfl_ceiling: f64,
}

/// One Crank-Nicolson line problem:
///
///   (I - tau/2 Md) out = (I + tau/2 Md) line_in + line_src
///
/// where Md is the directional tridiagonal `p` scaled per row by `weights`
/// (= 1/(axis^2 sigma) along the line). Scratch slices must be at least as
/// long as the line.
#[allow(clippy::too_many_arguments)]
fn cn_line(
    p: &Tridiagonal,
    line_in: &[f64],
    line_src: &[f64],
    weights: &[f64],
    tau: f64,
    csub: &mut [f64],
    cdiag: &mut [f64],
    rhs: &mut [f64],
    cp: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    let n = line_in.len();
    let ht = 0.5 * tau;
    for i in 0..n {
        let w = weights[i];
        let md = p.diag[i] * w;
        let ms = if i > 0 { p.sub[i - 1] * w } else { 0.0 };
        let mu = if i + 1 < n { p.sup[i] * w } else { 0.0 };
        let mut acc = (1.0 + ht * md) * line_in[i];
        if i > 0 {
            acc += ht * ms * line_in[i - 1];
        }
        if i + 1 < n {
            acc += ht * mu * line_in[i + 1];
        }
        rhs[i] = acc + line_src[i];
        cdiag[i] = 1.0 - ht * md;
        if i > 0 {
            csub[i - 1] = -ht * ms;
        }
        // The superdiagonal entry -ht*mu is reconstructed in the elimination
        // below from p and weights, so it needs no dedicated scratch row.
        cp[i] = -ht * mu;
    }
    // Thomas elimination: cp[i] holds the raw superdiagonal on entry and the
    // normalized multiplier afterwards.
    let mut beta = cdiag[0];
    if beta == 0.0 {
        return Err(Error::Structure("zero pivot in line solve".into()));
    }
    out[0] = rhs[0] / beta;
    let mut sup_prev = cp[0];
    for i in 1..n {
        let m = sup_prev / beta;
        sup_prev = cp[i];
        cp[i - 1] = m;
        beta = cdiag[i] - csub[i - 1] * m;
        if beta == 0.0 {
            return Err(Error::Structure("zero pivot in line solve".into()));
        }
        out[i] = (rhs[i] - csub[i - 1] * out[i - 1]) / beta;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        out[i] -= cp[i] * out[i + 1];
    }
    Ok(())
}

/// One split step. The same overshoot rule as the line scheme applies: a
/// predictor that reaches unity is accepted as the final explicit step so
/// quench detection fires on it.
pub fn lod_step(
    v: &[f64],
    tau: f64,
    op: &Operator2D,
    model: &SourceModel,
    ceiling: f64,
) -> Result<LodStepResult> {
    if tau >= ceiling {
        return Err(Error::CflViolation { tau, ceiling });
    }
    let n = v.len();
    let gv = g_eval(v, model)?;
    let mut w = vec![0.0; n];
    let mut scratch_m = vec![0.0; n];
    op.apply_mx(v, &mut scratch_m);
    for i in 0..n {
        w[i] = v[i] + tau * (scratch_m[i] + gv[i]);
    }
    op.apply_my(v, &mut scratch_m);
    for i in 0..n {
        w[i] += tau * scratch_m[i];
    }
    if w.iter().cloned().fold(f64::NEG_INFINITY, f64::max) >= 1.0 {
        return Ok(LodStepResult {
            v_next: w.clone(),
            w_pred: w,
            tau_used: tau,
            cfl_ceiling: ceiling,
        });
    }

    let gw = g_eval(&w, model)?;
    let src: Vec<f64> = (0..n).map(|i| 0.25 * tau * (gv[i] + gw[i])).collect();

    let (nx, ny) = (op.nx, op.ny);
    let nmax = nx.max(ny);
    let mut csub = vec![0.0; nmax];
    let mut cdiag = vec![0.0; nmax];
    let mut rhs = vec![0.0; nmax];
    let mut cp = vec![0.0; nmax];
    let mut lw = vec![0.0; nmax];
    let mut line_in = vec![0.0; nmax];
    let mut line_src = vec![0.0; nmax];
    let mut line_out = vec![0.0; nmax];

    let inv_a2 = 1.0 / (op.a * op.a);
    let mut v1 = vec![0.0; n];
    for j in 0..ny {
        let base = j * nx;
        for (l, &sigma) in lw.iter_mut().zip(&op.sigma[base..base + nx]) {
            *l = inv_a2 / sigma;
        }
        cn_line(
            &op.px,
            &v[base..base + nx],
            &src[base..base + nx],
            &lw[..nx],
            tau,
            &mut csub,
            &mut cdiag,
            &mut rhs,
            &mut cp,
            &mut line_out,
        )?;
        v1[base..base + nx].copy_from_slice(&line_out[..nx]);
    }

    let inv_b2 = 1.0 / (op.b * op.b);
    let mut v2 = vec![0.0; n];
    for i in 0..nx {
        for j in 0..ny {
            line_in[j] = v1[j * nx + i];
            line_src[j] = src[j * nx + i];
            lw[j] = inv_b2 / op.sigma[j * nx + i];
        }
        cn_line(
            &op.py,
            &line_in[..ny],
            &line_src[..ny],
            &lw[..ny],
            tau,
            &mut csub,
            &mut cdiag,
            &mut rhs,
            &mut cp,
            &mut line_out,
        )?;
        for j in 0..ny {
            v2[j * nx + i] = line_out[j];
        }
    }

    Ok(LodStepResult {
        v_next: v2,
        w_pred: w,
        tau_used: tau,
        cfl_ceiling: ceiling,
    })
}

fn rate_norm_2d(v: &[f64], op: &Operator2D, model: &SourceModel) -> f64 {
    let mut rate = vec![0.0; v.len()];
    let mut tmp = vec![0.0; v.len()];
    op.apply_mx(v, &mut rate);
    op.apply_my(v, &mut tmp);
    for i in 0..v.len() {
        rate[i] += tmp[i];
    }
    if let Ok(g) = g_eval(v, model) {
        for i in 0..v.len() {
            rate[i] += g[i];
        }
    }
    rate.iter().cloned().fold(0.0, |a, b| a.max(b.abs()))
}

/// Integrate the plane problem until quench or `t_end` with the same
/// latched-trigger step policy as the line solver. Quench location ties
/// resolve to the smallest flat index (smallest y, then smallest x).
pub fn run_2d_lod(
    grid: &Grid2D,
    model: &SourceModel,
    a: f64,
    b: f64,
    step_cfg: &StepConfig,
    run_cfg: &RunConfig,
    u0: Option<&[f64]>,
) -> Result<QuenchReport2D> {
    let op = assemble_2d(grid, &model.sigma, a, b)?;
    let nx = op.nx;
    let mut v = match u0 {
        Some(s) => s.to_vec(),
        None => default_initial_condition_2d(grid),
    };
    if v.len() != op.nx * op.ny {
        return Err(Error::InvalidArgument(format!(
            "initial state has {} entries, expected {}",
            v.len(),
            op.nx * op.ny
        )));
    }
    let ceiling = cfl_ceiling_2d(&op, grid);
    let mut t = 0.0f64;
    let mut steps: u64 = 0;
    let mut triggered = false;
    let mut history = RunHistory::new(run_cfg.history_cap);
    let mut snapshots = Vec::new();
    let mut next_snap = 1e-4f64;
    let mut max_ut_seen = 0.0f64;
    let mut v_old = v.clone();

    history.push(HistoryRow {
        t: 0.0,
        max_u: v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        max_ut: 0.0,
    });
    if run_cfg.snapshot_count > 0 {
        snapshots.push(Snapshot {
            t: 0.0,
            u: v.clone(),
        });
    }

    loop {
        if let Some(idx) = check_quench(&v) {
            return Ok(finish_2d(
                true,
                t,
                grid.gx.interior()[idx % nx],
                grid.gy.interior()[idx / nx],
                max_ut_seen,
                steps,
                v,
                history,
                snapshots,
            ));
        }
        if t >= run_cfg.t_end {
            return Ok(finish_2d(
                false,
                t,
                f64::NAN,
                f64::NAN,
                max_ut_seen,
                steps,
                v,
                history,
                snapshots,
            ));
        }

        let max_v = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
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
        if t + tau > run_cfg.t_end {
            tau = (run_cfg.t_end - t).max(step_cfg.tau_min.min(1e-12));
        }
        if tau >= ceiling {
            tau = ceiling * (1.0 - 1e-12);
        }

        v_old.clone_from(&v);
        let r = lod_step(&v, tau, &op, model, ceiling)?;
        v = r.v_next;
        t += tau;
        steps += 1;

        let max_u = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ut = if tau > 1e-13 {
            let mut m = 0.0f64;
            for i in 0..v.len() {
                m = m.max(((v[i] - v_old[i]) / tau).abs());
            }
            m
        } else {
            rate_norm_2d(&v_old, &op, model)
        };
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
fn finish_2d(
    quenched: bool,
    t: f64,
    x_quench: f64,
    y_quench: f64,
    max_ut: f64,
    steps: u64,
    final_state: Vec<f64>,
    mut history: RunHistory,
    mut snapshots: Vec<Snapshot>,
) -> QuenchReport2D {
    let final_max = final_state
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if history.rows.last().map(|r| r.t) != Some(t) {
        history.rows.push(HistoryRow {
            t,
            max_u: final_max,
            max_ut,
        });
    }
    if !snapshots.is_empty() {
        snapshots.push(Snapshot {
            t,
            u: final_state.clone(),
        });
    }
    QuenchReport2D {
        quenched,
        t_quench: t,
        x_quench,
        y_quench,
        max_ut,
        steps,
        final_state,
        history,
        snapshots,
    }
}
