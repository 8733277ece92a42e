//! CSV serialization for run artifacts, with atomic file writes.
//!
//! Floats use the default shortest round-trip formatting, so identical runs
//! produce byte-identical files.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::diagnostics::{ScanRow, StabilityProbeResult};
use crate::error::Result;
use crate::grid::{Grid1D, Grid2D};
use crate::lod2d::QuenchReport2D;
use crate::solver::{QuenchReport, RunHistory, Snapshot};

/// Write via a temp file in the target directory plus rename, so readers
/// never observe a partial file.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => Path::new(".").to_path_buf(),
    };
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(
        ".{name}.tmp.{}.{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::write(&tmp, content)?;
    match std::fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e.into())
        }
    }
}

/// `t,max_u,max_ut` rows: the thinned series merged with the dense tail,
/// strictly increasing in t (overlapping rows collapse to one).
pub fn history_csv(h: &RunHistory) -> String {
    let tail = h.tail_rows();
    let rows = &h.rows;
    let mut out = String::from("t,max_u,max_ut\n");
    let mut i = 0;
    let mut j = 0;
    let mut last_t = f64::NEG_INFINITY;
    while i < rows.len() || j < tail.len() {
        let take_thinned = match (rows.get(i), tail.get(j)) {
            (Some(r), Some(s)) => r.t <= s.t,
            (Some(_), None) => true,
            _ => false,
        };
        let row = if take_thinned {
            i += 1;
            rows[i - 1]
        } else {
            j += 1;
            tail[j - 1]
        };
        if row.t > last_t {
            out.push_str(&format!("{},{},{}\n", row.t, row.max_u, row.max_ut));
            last_t = row.t;
        }
    }
    out
}

/// `t,x,u` rows; each snapshot block covers the full node set including the
/// zero boundary values.
pub fn snapshots_csv_1d(snaps: &[Snapshot], grid: &Grid1D) -> String {
    let mut out = String::from("t,x,u\n");
    let last = grid.nodes.len() - 1;
    for s in snaps {
        out.push_str(&format!("{},{},0\n", s.t, grid.nodes[0]));
        for (k, &x) in grid.interior().iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", s.t, x, s.u[k]));
        }
        out.push_str(&format!("{},{},0\n", s.t, grid.nodes[last]));
    }
    out
}

/// `t,x,y,u` rows over the full lattice (boundary values zero), x fastest.
pub fn snapshots_csv_2d(snaps: &[Snapshot], grid: &Grid2D) -> String {
    let nx = grid.gx.n_interior;
    let xs = &grid.gx.nodes;
    let ys = &grid.gy.nodes;
    let mut out = String::from("t,x,y,u\n");
    for s in snaps {
        for (jj, &y) in ys.iter().enumerate() {
            for (ii, &x) in xs.iter().enumerate() {
                let interior = jj > 0 && jj < ys.len() - 1 && ii > 0 && ii < xs.len() - 1;
                let u = if interior {
                    s.u[(jj - 1) * nx + (ii - 1)]
                } else {
                    0.0
                };
                out.push_str(&format!("{},{},{},{}\n", s.t, x, y, u));
            }
        }
    }
    out
}

/// Single-row `quenched,t_quench,x_quench,max_ut,steps`. For a run that hit
/// the horizon instead of unity, t_quench holds the final time and x_quench
/// is NaN.
pub fn report_csv_1d(rep: &QuenchReport) -> String {
    format!(
        "quenched,t_quench,x_quench,max_ut,steps\n{},{},{},{},{}\n",
        rep.quenched, rep.t_quench, rep.x_quench, rep.max_ut, rep.steps
    )
}

/// Single-row `quenched,t_quench,x_quench,y_quench,max_ut,steps`.
pub fn report_csv_2d(rep: &QuenchReport2D) -> String {
    format!(
        "quenched,t_quench,x_quench,y_quench,max_ut,steps\n{},{},{},{},{},{}\n",
        rep.quenched, rep.t_quench, rep.x_quench, rep.y_quench, rep.max_ut, rep.steps
    )
}

/// `a,quenched,t_quench` rows; a failed row writes the literal `error` in the
/// quenched column with t_quench NaN.
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("a,quenched,t_quench\n");
    for r in rows {
        if r.error.is_some() {
            out.push_str(&format!("{},error,NaN\n", r.a));
        } else {
            out.push_str(&format!("{},{},{}\n", r.a, r.quenched, r.t_quench));
        }
    }
    out
}

/// `i,x` rows over all nodes including the endpoints.
pub fn grid_csv(grid: &Grid1D) -> String {
    let mut out = String::from("i,x\n");
    for (i, &x) in grid.nodes.iter().enumerate() {
        out.push_str(&format!("{i},{x}\n"));
    }
    out
}

/// `index,epsilon` rows of the raw noise draws, enough to replay a run.
pub fn noise_csv(epsilon: &[f64]) -> String {
    let mut out = String::from("index,epsilon\n");
    for (i, &e) in epsilon.iter().enumerate() {
        out.push_str(&format!("{i},{e}\n"));
    }
    out
}

/// Single-row `mode,delta,t_final,amplification,bound` record of a
/// perturbation probe against its stability bound.
pub fn probe_csv(probe: &StabilityProbeResult, delta: f64, bound: f64) -> String {
    let mode = if probe.frozen_source {
        "frozen"
    } else {
        "nonlinear"
    };
    format!(
        "mode,delta,t_final,amplification,bound\n{mode},{delta},{},{},{bound}\n",
        probe.t_final, probe.amplification
    )
}
