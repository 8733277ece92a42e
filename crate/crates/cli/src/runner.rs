//! Experiment execution: builds the discrete problem from a resolved config,
//! runs it (or a parameter scan), and writes every artifact atomically.

use std::path::Path;

use rayon::prelude::*;

use kawarada::csvio::{
    grid_csv, history_csv, noise_csv, report_csv_1d, report_csv_2d, snapshots_csv_1d,
    snapshots_csv_2d, write_atomic,
};
use kawarada::grid::{make_parabolic_arclength_grid, make_uniform_grid, Grid1D, Grid2D};
use kawarada::lod2d::{assemble_2d, cfl_ceiling_2d, run_2d_lod};
use kawarada::operator::assemble_m;
use kawarada::solver::{run_1d, run_with_operator, RunConfig};
use kawarada::source::{sample_noise, sigma_degenerate, NoiseSpec, SourceModel};
use kawarada::stepper::{cfl_ceiling, StepConfig};

use crate::config::{ExperimentConfig, GridKind, ScanAxis, ScanSpec};

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad or inconsistent configuration (exit 3).
    Config(String),
    /// Solver-level failure during a run (exit 2).
    Numerical(String),
    /// Filesystem trouble writing artifacts (exit 4).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

fn build<T>(r: kawarada::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(e.to_string()))
}

fn run<T>(r: kawarada::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match e {
        kawarada::Error::Io(io) => CliError::Io(io.to_string()),
        other => CliError::Numerical(other.to_string()),
    })
}

fn write(path: &Path, content: &str) -> Result<(), CliError> {
    write_atomic(path, content).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn make_grid(cfg: &ExperimentConfig) -> Result<Grid1D, CliError> {
    build(match cfg.grid {
        GridKind::Uniform => make_uniform_grid(cfg.n_interior),
        GridKind::Parabolic => {
            make_parabolic_arclength_grid(cfg.n_interior, cfg.refinement_ratio, 0.0)
        }
    })
}

fn degenerate_sigma(grid: &Grid1D, p: f64) -> Result<Vec<f64>, CliError> {
    grid.interior()
        .iter()
        .map(|&x| build(sigma_degenerate(x, p)))
        .collect()
}

/// Noise draws and the squared weights they induce; `phi = 1` when `eps` is
/// absent.
struct Weights {
    eps: Option<Vec<f64>>,
    phi: Vec<f64>,
}

fn make_weights(n: usize, stochastic: bool, seed: u64) -> Result<Weights, CliError> {
    if !stochastic {
        return Ok(Weights {
            eps: None,
            phi: vec![1.0; n],
        });
    }
    let eps = build(sample_noise(
        n,
        &NoiseSpec {
            seed,
            lo: 0.01,
            hi: 1.0,
        },
    ))?;
    let phi = eps.iter().map(|e| e * e).collect();
    Ok(Weights {
        eps: Some(eps),
        phi,
    })
}

fn step_config(cfg: &ExperimentConfig, ceiling: f64) -> StepConfig {
    let mut sc = StepConfig::defaults(ceiling, cfg.tau_min_c);
    sc.trigger_level = cfg.trigger_level;
    if let Some(tb) = cfg.tau_base {
        sc.tau_base = tb.min(sc.safety * ceiling);
    }
    sc
}

fn manifest(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    line("library", format!("kawarada {}", kawarada::VERSION));
    line("preset", cfg.preset.name().into());
    line("a", format!("{}", cfg.a));
    if cfg.preset.is_plane() {
        line("b", format!("{}", cfg.b));
    }
    line("theta", format!("{}", cfg.theta));
    line(
        "p",
        match cfg.p {
            Some(p) => format!("{p}"),
            None => "none".into(),
        },
    );
    line("n", format!("{}", cfg.n_interior));
    line("grid", cfg.grid.name().into());
    line("ratio", format!("{}", cfg.refinement_ratio));
    line("seed", format!("{}", cfg.seed));
    line("t_end", format!("{}", cfg.t_end));
    line("trigger", format!("{}", cfg.trigger_level));
    line(
        "tau_base",
        match cfg.tau_base {
            Some(tb) => format!("{tb}"),
            None => "auto".into(),
        },
    );
    line("tau_min_c", format!("{}", cfg.tau_min_c));
    line(
        "noise",
        if cfg.preset.stochastic() {
            "phi = epsilon^2, epsilon ~ U[0.01, 1], generator splitmix64".into()
        } else {
            "phi = 1".into()
        },
    );
    line(
        "u0",
        if cfg.preset.is_plane() {
            "0.001 (1 - cos(2 pi x)) (1 - cos(2 pi y))".into()
        } else {
            "0.001 (1 - cos(2 pi x))".into()
        },
    );
    line(
        "sigma",
        match cfg.p {
            Some(p) => format!("(x+1)^p (1-x)^(1-p) with p = {p}"),
            None => "1".into(),
        },
    );
    line("out", cfg.output_dir.display().to_string());
    line(
        "scan",
        match &cfg.scan {
            Some(s) => format!("{}:{}:{}:{}", s.axis.name(), s.lo, s.hi, s.count),
            None => "none".into(),
        },
    );
    out
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", cfg.output_dir.display())))?;
    let out = |name: &str| cfg.output_dir.join(name);
    write(&out("manifest.txt"), &manifest(cfg))?;

    if cfg.preset.is_plane() {
        let gx = make_grid(cfg)?;
        let grid2 = Grid2D {
            gx: gx.clone(),
            gy: gx.clone(),
        };
        let nn = cfg.n_interior * cfg.n_interior;
        let weights = make_weights(nn, cfg.preset.stochastic(), cfg.seed)?;
        let model = build(SourceModel::new(cfg.theta, weights.phi, vec![1.0; nn]))?;
        let op = build(assemble_2d(&grid2, &model.sigma, cfg.a, cfg.b))?;
        let ceiling = cfl_ceiling_2d(&op, &grid2);
        let step_cfg = step_config(cfg, ceiling);
        let run_cfg = RunConfig {
            t_end: cfg.t_end,
            ..RunConfig::default()
        };
        let rep = run(run_2d_lod(
            &grid2, &model, cfg.a, cfg.b, &step_cfg, &run_cfg, None,
        ))?;

        write(&out("grid_x.csv"), &grid_csv(&grid2.gx))?;
        write(&out("grid_y.csv"), &grid_csv(&grid2.gy))?;
        if let Some(eps) = &weights.eps {
            write(&out("noise.csv"), &noise_csv(eps))?;
        }
        write(&out("report.csv"), &report_csv_2d(&rep))?;
        write(&out("history.csv"), &history_csv(&rep.history))?;
        write(
            &out("snapshots.csv"),
            &snapshots_csv_2d(&rep.snapshots, &grid2),
        )?;
        if rep.quenched {
            println!(
                "{}: quenched at t = {} near (x, y) = ({}, {}) after {} steps; artifacts in {}",
                cfg.preset.name(),
                rep.t_quench,
                rep.x_quench,
                rep.y_quench,
                rep.steps,
                cfg.output_dir.display()
            );
        } else {
            println!(
                "{}: no quench by t = {} after {} steps; artifacts in {}",
                cfg.preset.name(),
                rep.t_quench,
                rep.steps,
                cfg.output_dir.display()
            );
        }
        return Ok(());
    }

    let grid = make_grid(cfg)?;
    let n = cfg.n_interior;
    let sigma = match cfg.p {
        Some(p) => degenerate_sigma(&grid, p)?,
        None => vec![1.0; n],
    };
    let weights = make_weights(n, cfg.preset.stochastic(), cfg.seed)?;
    let model = build(SourceModel::new(cfg.theta, weights.phi, sigma))?;
    let op = build(assemble_m(&grid, &model.sigma, cfg.a))?;
    let ceiling = cfl_ceiling(&op, &grid);
    let step_cfg = step_config(cfg, ceiling);
    let run_cfg = RunConfig {
        t_end: cfg.t_end,
        ..RunConfig::default()
    };
    let rep = run(run_with_operator(
        &grid, &model, &op, &step_cfg, &run_cfg, None,
    ))?;

    write(&out("grid.csv"), &grid_csv(&grid))?;
    if let Some(eps) = &weights.eps {
        write(&out("noise.csv"), &noise_csv(eps))?;
    }
    write(&out("report.csv"), &report_csv_1d(&rep))?;
    write(&out("history.csv"), &history_csv(&rep.history))?;
    write(
        &out("snapshots.csv"),
        &snapshots_csv_1d(&rep.snapshots, &grid),
    )?;
    if rep.quenched {
        println!(
            "{}: quenched at t = {} at x = {} after {} steps; artifacts in {}",
            cfg.preset.name(),
            rep.t_quench,
            rep.x_quench,
            rep.steps,
            cfg.output_dir.display()
        );
    } else {
        let last = rep.history.rows.last().map(|r| r.max_u).unwrap_or(0.0);
        println!(
            "{}: no quench by t = {} (max u = {last}) after {} steps; artifacts in {}",
            cfg.preset.name(),
            rep.t_quench,
            rep.steps,
            cfg.output_dir.display()
        );
    }
    Ok(())
}

/// One scan result row; `error` isolates per-row failures without aborting
/// the table.
struct ScanOutcome {
    param: f64,
    quenched: bool,
    t_quench: f64,
    x_quench: f64,
    error: Option<String>,
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

fn scan_table_csv(rows: &[ScanOutcome]) -> String {
    let mut out = String::from("param,quenched,t_quench,x_quench\n");
    for r in rows {
        if r.error.is_some() {
            out.push_str(&format!("{},error,NaN,NaN\n", r.param));
        } else {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.param, r.quenched, r.t_quench, r.x_quench
            ));
        }
    }
    out
}

fn scan_row_1d(
    cfg: &ExperimentConfig,
    axis: ScanAxis,
    value: f64,
) -> kawarada::Result<ScanOutcome> {
    let grid = match cfg.grid {
        GridKind::Uniform => make_uniform_grid(cfg.n_interior)?,
        GridKind::Parabolic => {
            make_parabolic_arclength_grid(cfg.n_interior, cfg.refinement_ratio, 0.0)?
        }
    };
    let n = cfg.n_interior;
    let a = if axis == ScanAxis::A { value } else { cfg.a };
    let p = if axis == ScanAxis::P {
        Some(value)
    } else {
        cfg.p
    };
    let seed = if axis == ScanAxis::Seed {
        value as u64
    } else {
        cfg.seed
    };
    let sigma = match p {
        Some(p) => grid
            .interior()
            .iter()
            .map(|&x| sigma_degenerate(x, p))
            .collect::<kawarada::Result<Vec<f64>>>()?,
        None => vec![1.0; n],
    };
    let phi = if cfg.preset.stochastic() {
        sample_noise(
            n,
            &NoiseSpec {
                seed,
                lo: 0.01,
                hi: 1.0,
            },
        )?
        .iter()
        .map(|e| e * e)
        .collect()
    } else {
        vec![1.0; n]
    };
    let model = SourceModel::new(cfg.theta, phi, sigma)?;
    let op = assemble_m(&grid, &model.sigma, a)?;
    let ceiling = cfl_ceiling(&op, &grid);
    let step_cfg = step_config(cfg, ceiling);
    let run_cfg = RunConfig {
        t_end: cfg.t_end,
        history_cap: 1024,
        snapshot_count: 0,
    };
    let rep = run_1d(&grid, &model, a, &step_cfg, &run_cfg, None)?;
    Ok(ScanOutcome {
        param: value,
        quenched: rep.quenched,
        t_quench: rep.t_quench,
        x_quench: rep.x_quench,
        error: None,
    })
}

fn scan_row_2d(cfg: &ExperimentConfig, seed: u64) -> kawarada::Result<ScanOutcome> {
    let gx = make_uniform_grid(cfg.n_interior)?;
    let grid2 = Grid2D {
        gx: gx.clone(),
        gy: gx,
    };
    let nn = cfg.n_interior * cfg.n_interior;
    let phi: Vec<f64> = sample_noise(
        nn,
        &NoiseSpec {
            seed,
            lo: 0.01,
            hi: 1.0,
        },
    )?
    .iter()
    .map(|e| e * e)
    .collect();
    let model = SourceModel::new(cfg.theta, phi, vec![1.0; nn])?;
    let op = assemble_2d(&grid2, &model.sigma, cfg.a, cfg.b)?;
    let ceiling = cfl_ceiling_2d(&op, &grid2);
    let step_cfg = step_config(cfg, ceiling);
    let run_cfg = RunConfig {
        t_end: cfg.t_end,
        history_cap: 1024,
        snapshot_count: 0,
    };
    let rep = run_2d_lod(&grid2, &model, cfg.a, cfg.b, &step_cfg, &run_cfg, None)?;
    Ok(ScanOutcome {
        param: seed as f64,
        quenched: rep.quenched,
        t_quench: rep.t_quench,
        x_quench: rep.x_quench,
        error: None,
    })
}

pub fn run_scan(cfg: &ExperimentConfig, spec: &ScanSpec) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", cfg.output_dir.display())))?;
    if cfg.preset.is_plane() && spec.axis != ScanAxis::Seed {
        return Err(CliError::Config(
            "plane runs only scan over seeds".to_string(),
        ));
    }
    let out = |name: &str| cfg.output_dir.join(name);
    write(&out("manifest.txt"), &manifest(cfg))?;

    let values = linspace(spec.lo, spec.hi, spec.count);
    let rows: Vec<ScanOutcome> = values
        .par_iter()
        .map(|&value| {
            let result = if cfg.preset.is_plane() {
                scan_row_2d(cfg, value.round() as u64)
            } else {
                scan_row_1d(cfg, spec.axis, value)
            };
            result.unwrap_or_else(|e| ScanOutcome {
                param: value,
                quenched: false,
                t_quench: f64::NAN,
                x_quench: f64::NAN,
                error: Some(e.to_string()),
            })
        })
        .collect();

    write(&out("scan.csv"), &scan_table_csv(&rows))?;

    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    let quenched = rows.iter().filter(|r| r.quenched).count();
    println!(
        "{} scan over {}: {} rows ({} quenched, {} failed); artifacts in {}",
        cfg.preset.name(),
        spec.axis.name(),
        rows.len(),
        quenched,
        failures,
        cfg.output_dir.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Preset;
    use std::path::PathBuf;

    fn tiny_cfg() -> ExperimentConfig {
        ExperimentConfig {
            preset: Preset::Exp1Quench,
            a: 2.0,
            b: 2.0,
            theta: 1.0,
            p: None,
            n_interior: 11,
            grid: GridKind::Uniform,
            refinement_ratio: 4.0,
            seed: 1,
            t_end: f64::INFINITY,
            trigger_level: 0.9,
            tau_base: None,
            tau_min_c: 1.0,
            output_dir: PathBuf::from("unused"),
            scan: None,
        }
    }

    #[test]
    fn linspace_hits_both_endpoints_exactly() {
        let v = linspace(0.5, 2.5, 5);
        assert_eq!(v.first().copied(), Some(0.5));
        assert_eq!(v.last().copied(), Some(2.5));
        assert_eq!(v.len(), 5);
    }

    #[test]
    fn manifest_records_every_parameter_once() {
        let cfg = tiny_cfg();
        let m = manifest(&cfg);
        for key in [
            "library",
            "preset",
            "a",
            "theta",
            "p",
            "n",
            "grid",
            "ratio",
            "seed",
            "t_end",
            "trigger",
            "tau_base",
            "tau_min_c",
            "noise",
            "u0",
            "sigma",
            "out",
            "scan",
        ] {
            let hits = m
                .lines()
                .filter(|l| l.starts_with(&format!("{key} = ")))
                .count();
            assert_eq!(hits, 1, "key {key} appears {hits} times:\n{m}");
        }
        assert!(m.contains("t_end = inf"));
        assert!(m.contains("tau_base = auto"));
    }

    #[test]
    fn scan_rows_isolate_failures_without_poisoning_neighbors() {
        let mut cfg = tiny_cfg();
        cfg.t_end = 0.05;
        // A degenerate configuration cannot be produced through validated
        // config parsing, so exercise the row isolation directly.
        let bad = scan_row_1d(&cfg, ScanAxis::P, f64::NAN);
        assert!(bad.is_err());
        let good = scan_row_1d(&cfg, ScanAxis::A, 2.0).unwrap();
        assert!(!good.quenched);
        assert!(good.error.is_none());
    }

    #[test]
    fn scan_table_renders_error_rows_inline() {
        let rows = vec![
            ScanOutcome {
                param: 1.0,
                quenched: true,
                t_quench: 0.5,
                x_quench: 0.0,
                error: None,
            },
            ScanOutcome {
                param: 2.0,
                quenched: false,
                t_quench: f64::NAN,
                x_quench: f64::NAN,
                error: Some("boom".into()),
            },
        ];
        assert_eq!(
            scan_table_csv(&rows),
            "param,quenched,t_quench,x_quench\n1,true,0.5,0\n2,error,NaN,NaN\n"
        );
    }
}
