//! Experiment configuration: presets, config-file parsing, and the
//! flags > file > preset precedence chain.

use std::path::PathBuf;

use clap::Parser;

/// Named experiment families. Each fills defaults that explicit flags or
/// config-file entries override.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Exp1Global,
    Exp1Quench,
    Exp1Scan,
    Exp2Degenerate,
    Exp2Sweep,
    Exp3Stochastic,
    Exp4Plane,
    Custom,
}

impl Preset {
    pub fn parse(s: &str) -> Option<Preset> {
        Some(match s {
            "exp1-global" => Preset::Exp1Global,
            "exp1-quench" => Preset::Exp1Quench,
            "exp1-scan" => Preset::Exp1Scan,
            "exp2-degenerate" => Preset::Exp2Degenerate,
            "exp2-sweep" => Preset::Exp2Sweep,
            "exp3-stochastic" => Preset::Exp3Stochastic,
            "exp4-2d" => Preset::Exp4Plane,
            "custom" => Preset::Custom,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Exp1Global => "exp1-global",
            Preset::Exp1Quench => "exp1-quench",
            Preset::Exp1Scan => "exp1-scan",
            Preset::Exp2Degenerate => "exp2-degenerate",
            Preset::Exp2Sweep => "exp2-sweep",
            Preset::Exp3Stochastic => "exp3-stochastic",
            Preset::Exp4Plane => "exp4-2d",
            Preset::Custom => "custom",
        }
    }

    /// Plane (two-axis) problem rather than a line problem.
    pub fn is_plane(self) -> bool {
        self == Preset::Exp4Plane
    }

    /// Source weights phi = epsilon^2 from seeded noise instead of phi = 1.
    pub fn stochastic(self) -> bool {
        matches!(self, Preset::Exp3Stochastic | Preset::Exp4Plane)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Uniform,
    Parabolic,
}

impl GridKind {
    fn parse(s: &str) -> Option<GridKind> {
        match s {
            "uniform" => Some(GridKind::Uniform),
            "parabolic" => Some(GridKind::Parabolic),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GridKind::Uniform => "uniform",
            GridKind::Parabolic => "parabolic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxis {
    A,
    P,
    Seed,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::A => "a",
            ScanAxis::P => "p",
            ScanAxis::Seed => "seed",
        }
    }
}

/// `<axis>:<lo>:<hi>:<count>` parameter sweep request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    pub axis: ScanAxis,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Fully resolved run request.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    /// Degeneracy exponent for sigma(x) = (x+1)^p (1-x)^(1-p); None keeps
    /// sigma = 1.
    pub p: Option<f64>,
    pub n_interior: usize,
    pub grid: GridKind,
    pub refinement_ratio: f64,
    pub seed: u64,
    pub t_end: f64,
    pub trigger_level: f64,
    /// None lets the step policy run at the safety-scaled ceiling.
    pub tau_base: Option<f64>,
    pub tau_min_c: f64,
    pub output_dir: PathBuf,
    pub scan: Option<ScanSpec>,
}

/// One source of optional settings (flags or a config file).
#[derive(Debug, Clone, Default)]
struct PartialConfig {
    preset: Option<String>,
    a: Option<f64>,
    b: Option<f64>,
    theta: Option<f64>,
    p: Option<f64>,
    n: Option<usize>,
    grid: Option<String>,
    ratio: Option<f64>,
    seed: Option<u64>,
    t_end: Option<f64>,
    trigger: Option<f64>,
    tau_base: Option<f64>,
    tau_min_c: Option<f64>,
    out: Option<PathBuf>,
    scan: Option<String>,
}

#[derive(Parser, Debug)]
#[command(
    name = "kawarada",
    version,
    about = "Quenching-combustion PDE experiments: single runs and parameter scans with CSV output",
    disable_help_subcommand = true
)]
struct Cli {
    /// Experiment preset: exp1-global, exp1-quench, exp1-scan,
    /// exp2-degenerate, exp2-sweep, exp3-stochastic, exp4-2d, custom
    #[arg(long)]
    preset: Option<String>,
    /// Config file of `key = value` lines (# comments); flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Domain half-width along x
    #[arg(long)]
    a: Option<f64>,
    /// Domain half-width along y (plane runs)
    #[arg(long)]
    b: Option<f64>,
    /// Blow-up exponent of the source (1 - u)^(-theta)
    #[arg(long)]
    theta: Option<f64>,
    /// Degeneracy exponent in sigma(x) = (x+1)^p (1-x)^(1-p)
    #[arg(long)]
    p: Option<f64>,
    /// Interior nodes per axis
    #[arg(long)]
    n: Option<usize>,
    /// Grid family: uniform or parabolic
    #[arg(long)]
    grid: Option<String>,
    /// Refinement ratio of the parabolic grid (>= 1)
    #[arg(long)]
    ratio: Option<f64>,
    /// Noise seed for stochastic presets
    #[arg(long)]
    seed: Option<u64>,
    /// Stop time when no quench occurs (inf allowed)
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Max-norm level that switches on step adaptation
    #[arg(long)]
    trigger: Option<f64>,
    /// Fixed pre-trigger step (default: safety-scaled ceiling)
    #[arg(long = "tau-base")]
    tau_base: Option<f64>,
    /// Step floor scale c in tau_min = c * 1e-6
    #[arg(long = "tau-min-c")]
    tau_min_c: Option<f64>,
    /// Output directory for CSV artifacts
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parameter sweep `<axis>:<lo>:<hi>:<count>` with axis in {a, p, seed}
    #[arg(long)]
    scan: Option<String>,
}

/// Outcome of argument handling before any run starts.
pub enum ParseOutcome {
    Run(Box<ExperimentConfig>),
    /// Help or version text was printed; exit cleanly.
    Exit,
}

pub fn parse_args<I, T>(argv: I) -> Result<ParseOutcome, String>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e)
            if e.kind() == clap::error::ErrorKind::DisplayHelp
                || e.kind() == clap::error::ErrorKind::DisplayVersion =>
        {
            print!("{e}");
            return Ok(ParseOutcome::Exit);
        }
        Err(e) => return Err(e.to_string()),
    };

    let from_file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
            parse_config_file(&text)?
        }
        None => PartialConfig::default(),
    };
    let from_flags = PartialConfig {
        preset: cli.preset,
        a: cli.a,
        b: cli.b,
        theta: cli.theta,
        p: cli.p,
        n: cli.n,
        grid: cli.grid,
        ratio: cli.ratio,
        seed: cli.seed,
        t_end: cli.t_end,
        trigger: cli.trigger,
        tau_base: cli.tau_base,
        tau_min_c: cli.tau_min_c,
        out: cli.out,
        scan: cli.scan,
    };
    resolve(from_flags, from_file).map(|c| ParseOutcome::Run(Box::new(c)))
}

fn parse_config_file(text: &str) -> Result<PartialConfig, String> {
    let mut p = PartialConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| format!("config line {}: bad {what} value `{value}`", lineno + 1);
        match key {
            "preset" => p.preset = Some(value.to_string()),
            "a" => p.a = Some(value.parse().map_err(|_| bad("a"))?),
            "b" => p.b = Some(value.parse().map_err(|_| bad("b"))?),
            "theta" => p.theta = Some(value.parse().map_err(|_| bad("theta"))?),
            "p" => p.p = Some(value.parse().map_err(|_| bad("p"))?),
            "n" => p.n = Some(value.parse().map_err(|_| bad("n"))?),
            "grid" => p.grid = Some(value.to_string()),
            "ratio" => p.ratio = Some(value.parse().map_err(|_| bad("ratio"))?),
            "seed" => p.seed = Some(value.parse().map_err(|_| bad("seed"))?),
            "t_end" => p.t_end = Some(value.parse().map_err(|_| bad("t_end"))?),
            "trigger" => p.trigger = Some(value.parse().map_err(|_| bad("trigger"))?),
            "tau_base" => p.tau_base = Some(value.parse().map_err(|_| bad("tau_base"))?),
            "tau_min_c" => p.tau_min_c = Some(value.parse().map_err(|_| bad("tau_min_c"))?),
            "out" => p.out = Some(PathBuf::from(value)),
            "scan" => p.scan = Some(value.to_string()),
            other => return Err(format!("config line {}: unknown key `{other}`", lineno + 1)),
        }
    }
    Ok(p)
}

fn parse_scan_spec(s: &str) -> Result<ScanSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 {
        return Err(format!("scan spec `{s}` must be <axis>:<lo>:<hi>:<count>"));
    }
    let axis = match parts[0] {
        "a" => ScanAxis::A,
        "p" => ScanAxis::P,
        "seed" => ScanAxis::Seed,
        other => return Err(format!("unknown scan axis `{other}` (use a, p, or seed)")),
    };
    let lo: f64 = parts[1]
        .parse()
        .map_err(|_| format!("bad scan lower bound `{}`", parts[1]))?;
    let hi: f64 = parts[2]
        .parse()
        .map_err(|_| format!("bad scan upper bound `{}`", parts[2]))?;
    let count: usize = parts[3]
        .parse()
        .map_err(|_| format!("bad scan count `{}`", parts[3]))?;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(format!(
            "scan range [{lo}, {hi}] must be finite with lo <= hi"
        ));
    }
    if count < 2 {
        return Err("scan needs at least 2 points".into());
    }
    if lo == hi && count > 1 {
        return Err("scan range has zero width".into());
    }
    Ok(ScanSpec {
        axis,
        lo,
        hi,
        count,
    })
}

fn resolve(flags: PartialConfig, file: PartialConfig) -> Result<ExperimentConfig, String> {
    let preset_name = flags
        .preset
        .or(file.preset)
        .ok_or("missing preset: pass --preset or set it in the config file")?;
    let preset =
        Preset::parse(&preset_name).ok_or_else(|| format!("unknown preset `{preset_name}`"))?;

    // Preset-pinned defaults; everything unpinned falls through to generics.
    let mut a = 2.0;
    let mut p: Option<f64> = None;
    let n = if preset.is_plane() { 81 } else { 201 };
    let mut t_end = f64::INFINITY;
    match preset {
        Preset::Exp1Global => {
            a = 0.5;
            t_end = 1.0529;
        }
        Preset::Exp1Scan => t_end = 12.0,
        Preset::Exp2Degenerate => p = Some((5.0f64.sqrt() - 1.0) / 2.0),
        Preset::Exp2Sweep => p = Some(0.5),
        _ => {}
    }

    let pick_f = |fl: Option<f64>, fi: Option<f64>, d: f64| fl.or(fi).unwrap_or(d);
    let a = pick_f(flags.a, file.a, a);
    let b = pick_f(flags.b, file.b, 2.0);
    let theta = pick_f(flags.theta, file.theta, 1.0);
    let p = flags.p.or(file.p).or(p);
    let n_interior = flags.n.or(file.n).unwrap_or(n);
    let grid_name = flags
        .grid
        .or(file.grid)
        .unwrap_or_else(|| "uniform".to_string());
    let grid =
        GridKind::parse(&grid_name).ok_or_else(|| format!("unknown grid kind `{grid_name}`"))?;
    let refinement_ratio = pick_f(flags.ratio, file.ratio, 4.0);
    let seed = flags.seed.or(file.seed).unwrap_or(1);
    let t_end = pick_f(flags.t_end, file.t_end, t_end);
    let trigger_level = pick_f(flags.trigger, file.trigger, 0.90);
    let tau_base = flags.tau_base.or(file.tau_base);
    let tau_min_c = pick_f(flags.tau_min_c, file.tau_min_c, 1.0);
    let output_dir = flags
        .out
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}", preset.name())));
    let scan = match flags.scan.or(file.scan) {
        Some(s) => Some(parse_scan_spec(&s)?),
        None => None,
    };

    let cfg = ExperimentConfig {
        preset,
        a,
        b,
        theta,
        p,
        n_interior,
        grid,
        refinement_ratio,
        seed,
        t_end,
        trigger_level,
        tau_base,
        tau_min_c,
        output_dir,
        scan,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<(), String> {
    if !(cfg.a > 0.0) || !cfg.a.is_finite() {
        return Err(format!("a must be positive and finite, got {}", cfg.a));
    }
    if !(cfg.b > 0.0) || !cfg.b.is_finite() {
        return Err(format!("b must be positive and finite, got {}", cfg.b));
    }
    if !(cfg.theta > 0.0) {
        return Err(format!("theta must be positive, got {}", cfg.theta));
    }
    if let Some(p) = cfg.p {
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("p must lie in [0, 1], got {p}"));
        }
        if cfg.preset.is_plane() {
            return Err("the degeneracy exponent p applies to line runs only".into());
        }
    }
    if cfg.n_interior < 3 {
        return Err(format!("n must be at least 3, got {}", cfg.n_interior));
    }
    if !(cfg.refinement_ratio >= 1.0) {
        return Err(format!(
            "ratio must be at least 1, got {}",
            cfg.refinement_ratio
        ));
    }
    if !(cfg.t_end > 0.0) {
        return Err(format!("t-end must be positive, got {}", cfg.t_end));
    }
    if !(cfg.trigger_level > 0.0 && cfg.trigger_level < 1.0) {
        return Err(format!(
            "trigger must lie strictly inside (0, 1), got {}",
            cfg.trigger_level
        ));
    }
    if let Some(tb) = cfg.tau_base {
        if !(tb > 0.0) || !tb.is_finite() {
            return Err(format!("tau-base must be positive and finite, got {tb}"));
        }
    }
    if !(cfg.tau_min_c > 0.0) {
        return Err(format!("tau-min-c must be positive, got {}", cfg.tau_min_c));
    }
    if let Some(scan) = &cfg.scan {
        match scan.axis {
            ScanAxis::A => {
                if !(scan.lo > 0.0) {
                    return Err("a-scan bounds must be positive".into());
                }
            }
            ScanAxis::P => {
                if cfg.preset.is_plane() {
                    return Err("p-scan applies to line runs only".into());
                }
                if scan.lo < 0.0 || scan.hi > 1.0 {
                    return Err("p-scan bounds must lie in [0, 1]".into());
                }
            }
            ScanAxis::Seed => {
                if !cfg.preset.stochastic() {
                    return Err(
                        "seed-scan needs a stochastic preset (exp3-stochastic or exp4-2d)".into(),
                    );
                }
                if scan.lo < 0.0 || scan.lo.fract() != 0.0 || scan.hi.fract() != 0.0 {
                    return Err("seed-scan bounds must be nonnegative integers".into());
                }
            }
        }
    }
    Ok(())
}
