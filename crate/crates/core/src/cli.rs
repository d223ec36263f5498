//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 when the config or flags are invalid, 3 when a
//! numerical step fails (the output still carries per-eps detail where it
//! applies), 1 when output cannot be written.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::ScenarioConfig;
use crate::error::Error;
use crate::green::{green_matrix, solve_bvp, wellposedness};
use crate::lab::{run_sweep, FamilyScenario};
use crate::report::fmt_num;
use crate::registry::registry_list;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "parabvp", version, about = "Parameter sweeps for linear boundary value problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario config (JSON).
    config: PathBuf,
    /// Override the integrator tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full convergence report over the config's eps values.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Cells per side of the Green comparison grid.
        #[arg(long)]
        grid: Option<usize>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Green matrix on a midpoint grid at one eps.
    Green {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: f64,
        /// Cells per side.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Solution trace at one eps.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: f64,
        /// Number of trace points, endpoints included.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Well-posedness determinant at eps = 0 and every configured eps.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Registered families and building blocks.
    List,
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Numerical(_) => EXIT_NUMERICAL,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn io_failure(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn load(common: &Common) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Failure::Validation(format!("{}: {e}", common.config.display())))?;
    let mut cfg = ScenarioConfig::from_json(&text)?;
    if let Some(tol) = common.tol {
        cfg.tolerances.ode = tol;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn check_epsilon(cfg: &ScenarioConfig, eps: f64) -> Result<(), Failure> {
    let len = cfg.interval[1] - cfg.interval[0];
    if !(eps.is_finite() && eps >= 0.0 && eps <= len) {
        return Err(Failure::Validation(format!(
            "--epsilon: {eps} must lie in [0, {len}]"
        )));
    }
    Ok(())
}

/// Writes `body` to `path`, or to `stdout` when no path is given.
fn emit(path: Option<&Path>, stdout: &mut dyn Write, body: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, body).map_err(io_failure(p)),
        None => stdout.write_all(body).map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn sweep(common: &Common, grid: Option<usize>, jobs: usize, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let mut cfg = load(common)?;
    if let Some(n) = grid {
        cfg.grids.green = n;
        cfg.validate()?;
    }
    let mut scenario = cfg.build()?;
    scenario.settings.jobs = jobs;
    let report = run_sweep(&scenario)?;
    let csv = report.to_csv_string();
    let json = report.to_json();
    match (&common.out, &cfg.outputs.csv, &cfg.outputs.json) {
        (Some(out), _, _) => {
            emit(Some(out), stdout, csv.as_bytes())?;
            let json_path = out.with_extension("json");
            if json_path != *out {
                emit(Some(&json_path), stdout, json.as_bytes())?;
            }
        }
        (None, None, None) => emit(None, stdout, csv.as_bytes())?,
        (None, csv_path, json_path) => {
            if let Some(p) = csv_path {
                emit(Some(Path::new(p)), stdout, csv.as_bytes())?;
            }
            if let Some(p) = json_path {
                emit(Some(Path::new(p)), stdout, json.as_bytes())?;
            }
        }
    }
    Ok(if report.has_errors() { EXIT_NUMERICAL } else { EXIT_OK })
}

fn scenario_at(common: &Common, eps: f64) -> Result<(ScenarioConfig, FamilyScenario), Failure> {
    let cfg = load(common)?;
    check_epsilon(&cfg, eps)?;
    let scenario = cfg.resolve()?;
    Ok((cfg, scenario))
}

fn green(common: &Common, eps: f64, grid: Option<usize>, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let (cfg, scenario) = scenario_at(common, eps)?;
    let n = grid.unwrap_or(cfg.grids.green);
    if !(2..=2000).contains(&n) {
        return Err(Failure::Validation("--grid: must lie in 2..=2000".into()));
    }
    let p = scenario.problem(eps)?;
    let g = green_matrix(&p.a, &p.u, p.interval, scenario.settings.tol)?;
    let pts = p.interval.midpoints(n);
    let mut buf = Vec::new();
    g.write_grid_csv(&mut buf, &pts, &pts)?
        .map_err(|e| Failure::Io(e.to_string()))?;
    emit(common.out.as_deref(), stdout, &buf)?;
    Ok(EXIT_OK)
}

fn solve(common: &Common, eps: f64, grid: Option<usize>, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let (cfg, scenario) = scenario_at(common, eps)?;
    let n = grid.unwrap_or(cfg.grids.trace);
    if !(2..=1_000_000).contains(&n) {
        return Err(Failure::Validation("--grid: must lie in 2..=1000000".into()));
    }
    let p = scenario.problem(eps)?;
    let sol = solve_bvp(&p, scenario.settings.tol)?;
    let mut body = String::from("t");
    for i in 1..=p.dim() {
        body.push_str(&format!(",y_{i}_re,y_{i}_im"));
    }
    body.push('\n');
    for t in p.interval.grid(n) {
        body.push_str(&fmt_num(t));
        for z in sol.eval(t).as_slice() {
            body.push(',');
            body.push_str(&fmt_num(z.re));
            body.push(',');
            body.push_str(&fmt_num(z.im));
        }
        body.push('\n');
    }
    emit(common.out.as_deref(), stdout, body.as_bytes())?;
    Ok(EXIT_OK)
}

fn check(common: &Common, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = load(common)?;
    let scenario = cfg.resolve()?;
    let tol = scenario.settings.tol;
    let mut body = String::from("epsilon,det_re,det_im,det_abs,threshold,wellposed,error\n");
    let mut ok = true;
    for eps in std::iter::once(0.0).chain(scenario.epsilons.iter().copied()) {
        let w = scenario
            .problem(eps)
            .and_then(|p| wellposedness(&p.a, &p.u, p.interval, tol));
        match w {
            Ok(w) => {
                ok &= w.is_wellposed();
                body.push_str(&format!(
                    "{},{},{},{},{},{},\n",
                    fmt_num(eps),
                    fmt_num(w.det.re),
                    fmt_num(w.det.im),
                    fmt_num(w.det.norm()),
                    fmt_num(w.threshold),
                    w.is_wellposed()
                ));
            }
            Err(e) => {
                ok = false;
                let msg = e.to_string().replace('"', "\"\"");
                body.push_str(&format!("{},,,,,false,\"{msg}\"\n", fmt_num(eps)));
            }
        }
    }
    emit(common.out.as_deref(), stdout, body.as_bytes())?;
    Ok(if ok { EXIT_OK } else { EXIT_NUMERICAL })
}

fn list(stdout: &mut dyn Write) -> Result<i32, Failure> {
    let mut body = String::new();
    for e in registry_list() {
        body.push_str(&format!("{:<12} {:<20} {}\n", e.kind, e.name, e.summary));
        for (p, doc) in e.params {
            body.push_str(&format!("{:<12} {:<20}   {p}: {doc}\n", "", ""));
        }
    }
    emit(None, stdout, body.as_bytes())?;
    Ok(EXIT_OK)
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Sweep { common, grid, jobs } => sweep(common, *grid, *jobs, stdout),
        Command::Green { common, epsilon, grid } => green(common, *epsilon, *grid, stdout),
        Command::Solve { common, epsilon, grid } => solve(common, *epsilon, *grid, stdout),
        Command::Check { common } => check(common, stdout),
        Command::List => list(stdout),
    };
    match result {
        Ok(code) => {
            if code == EXIT_NUMERICAL {
                let _ = writeln!(stderr, "error: numerical failure in one or more rows (see output)");
            }
            code
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}
