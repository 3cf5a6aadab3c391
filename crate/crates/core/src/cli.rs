//! Command-line front end. Settings resolve as flags, then a `key = value`
//! config file, then built-in defaults.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::adapt::{adapt_loop_with, report_of, solve_and_measure, AdaptConfig, DEFAULT_MAX_DOFS, DEFAULT_THETA};
use crate::assembly::{SolverConfig, DEFAULT_MU};
use crate::error::{invalid, Error, Result};
use crate::mesh::Mesh;
use crate::problems::{cordes_check, CordesReport, ProblemCase, DEFAULT_ALPHA};
use crate::report::{ErrorReport, ErrorRow};
use crate::vtk;

pub const DEFAULT_LEVELS: usize = 4;
pub const DEFAULT_SAMPLES: usize = 200;

#[derive(Debug, Parser)]
#[command(name = "nondiv-lsq", version, about = "Least-squares finite elements for A:D²u = f in 2D")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// One two-stage solve on a uniform mesh.
    Solve,
    /// Uniform refinement study with observed rates.
    Convergence,
    /// Adaptive solve-estimate-mark-refine loop.
    Adapt,
    /// Sample the Cordes condition of a case's coefficient.
    CheckCordes,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// ex1, ex2, ex4, patch_linear or patch_quadratic.
    #[arg(long, global = true)]
    pub case: Option<String>,
    #[arg(long, global = true)]
    pub degree: Option<usize>,
    /// Cells per side of the (initial) uniform mesh.
    #[arg(long, global = true)]
    pub nx: Option<usize>,
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Exponent of the corner singularity in ex4.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long = "max-dofs", global = true)]
    pub max_dofs: Option<usize>,
    #[arg(long = "max-rounds", global = true)]
    pub max_rounds: Option<usize>,
    /// Grid points per direction for check-cordes.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Directory for VTK output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CSV file for error tables.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Single-threaded, deterministic execution.
    #[arg(long, global = true)]
    pub serial: bool,
    /// `key = value` file supplying defaults for the flags above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub case: String,
    pub degree: usize,
    pub nx: Option<usize>,
    pub levels: usize,
    pub mu: f64,
    pub theta: f64,
    pub alpha: f64,
    pub max_dofs: usize,
    pub max_rounds: Option<usize>,
    pub samples: usize,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub serial: bool,
}

const CONFIG_KEYS: [&str; 14] = [
    "case", "degree", "nx", "levels", "mu", "theta", "alpha", "max_dofs", "max_rounds", "samples", "tol", "out",
    "csv", "serial",
];

/// Parses `key = value` lines; `#` starts a comment, dashes in keys read as
/// underscores.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(invalid(format!("config line {}: unknown key '{key}'", n + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn pick<T: FromStr>(flag: Option<T>, file: &HashMap<String, String>, key: &str) -> Result<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|_| invalid(format!("config value for '{key}' is malformed: '{v}'"))))
        .transpose()
}

impl Settings {
    pub fn resolve(opts: &Options) -> Result<Self> {
        let file = match &opts.config {
            Some(path) => parse_config(&fs::read_to_string(path)?)?,
            None => HashMap::new(),
        };
        let serial_file: Option<bool> = pick(None, &file, "serial")?;
        Ok(Self {
            case: pick(opts.case.clone(), &file, "case")?.unwrap_or_else(|| "ex1".into()),
            degree: pick(opts.degree, &file, "degree")?.unwrap_or(1),
            nx: pick(opts.nx, &file, "nx")?,
            levels: pick(opts.levels, &file, "levels")?.unwrap_or(DEFAULT_LEVELS),
            mu: pick(opts.mu, &file, "mu")?.unwrap_or(DEFAULT_MU),
            theta: pick(opts.theta, &file, "theta")?.unwrap_or(DEFAULT_THETA),
            alpha: pick(opts.alpha, &file, "alpha")?.unwrap_or(DEFAULT_ALPHA),
            max_dofs: pick(opts.max_dofs, &file, "max_dofs")?.unwrap_or(DEFAULT_MAX_DOFS),
            max_rounds: pick(opts.max_rounds, &file, "max_rounds")?,
            samples: pick(opts.samples, &file, "samples")?.unwrap_or(DEFAULT_SAMPLES),
            tol: pick(opts.tol, &file, "tol")?.unwrap_or(crate::linsolve::DEFAULT_TOLERANCE),
            out: pick(opts.out.clone(), &file, "out")?,
            csv: pick(opts.csv.clone(), &file, "csv")?,
            serial: opts.serial || serial_file.unwrap_or(false),
        })
    }

    pub fn problem(&self) -> Result<ProblemCase> {
        ProblemCase::with_alpha(&self.case, self.alpha)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { mu: self.mu, degree: self.degree, tol: self.tol, ..SolverConfig::default() }
    }
}

fn uniform_mesh(case: &ProblemCase, nx: usize) -> Result<Mesh> {
    let d = case.domain();
    let ny = ((nx as f64) * d.height() / d.width()).round().max(1.0) as usize;
    Mesh::rect(d.xmin, d.ymin, d.xmax, d.ymax, nx, ny)
}

fn write_csv_file(path: &Path, report: &ErrorReport) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    report.write_csv(fs::File::create(path)?)
}

pub fn summary_line(case: &ProblemCase, degree: usize, row: &ErrorRow) -> String {
    format!(
        "case={} degree={} h_max={:.4e} dofs_p={} dofs_u={} err_p_L2={:.6e} err_p_energy={:.6e} err_u_L2={:.6e} err_u_energy={:.6e} eta={:.6e} cg_p={} cg_u={}",
        case.name(),
        degree,
        row.h_max,
        row.dofs_p,
        row.dofs_u,
        row.err_p_l2,
        row.err_p_energy,
        row.err_u_l2,
        row.err_u_energy,
        row.eta_total,
        row.cg_iters_p,
        row.cg_iters_u
    )
}

pub fn cmd_solve(s: &Settings, out: &mut dyn Write) -> Result<ErrorRow> {
    let case = s.problem()?;
    let cfg = s.solver();
    let mesh = uniform_mesh(&case, s.nx.unwrap_or_else(|| case.default_cells()))?;
    let (sol, eta, _, row) = solve_and_measure(&mesh, &case, &cfg, 0)?;
    writeln!(out, "{}", summary_line(&case, cfg.degree, &row))?;
    if let Some(dir) = &s.out {
        fs::create_dir_all(dir)?;
        vtk::write_solution(&dir.join(format!("{}_m{}.vtk", case.name(), cfg.degree)), &mesh, &sol, Some(&eta))?;
    }
    if let Some(path) = &s.csv {
        let mut report = ErrorReport::uniform();
        report.rows.push(row.clone());
        write_csv_file(path, &report)?;
    }
    Ok(row)
}

pub fn cmd_convergence(s: &Settings, out: &mut dyn Write) -> Result<ErrorReport> {
    if s.levels < 2 {
        return Err(invalid(format!("convergence needs at least 2 levels, got {}", s.levels)));
    }
    let case = s.problem()?;
    let cfg = s.solver();
    let base = s.nx.unwrap_or_else(|| case.default_cells());
    let mut report = ErrorReport::uniform();
    for level in 0..s.levels {
        let mesh = uniform_mesh(&case, base << level)?;
        let (sol, eta, _, row) = solve_and_measure(&mesh, &case, &cfg, level)?;
        log::info!("{}", summary_line(&case, cfg.degree, &row));
        if let Some(dir) = &s.out {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("{}_m{}_level{level}.vtk", case.name(), cfg.degree));
            vtk::write_solution(&path, &mesh, &sol, Some(&eta))?;
        }
        report.rows.push(row);
    }
    write!(out, "{}", report.to_csv_string()?)?;
    if let Some(path) = &s.csv {
        write_csv_file(path, &report)?;
    }
    Ok(report)
}

pub fn cmd_adapt(s: &Settings, out: &mut dyn Write) -> Result<ErrorReport> {
    let case = s.problem()?;
    let cfg = AdaptConfig {
        theta: s.theta,
        max_dofs: s.max_dofs,
        max_rounds: s.max_rounds,
        initial_cells: s.nx,
        solver: s.solver(),
        ..AdaptConfig::default()
    };
    if let Some(dir) = &s.out {
        fs::create_dir_all(dir)?;
    }
    let mut rows = Vec::new();
    adapt_loop_with(&case, &cfg, |round| {
        if let Some(dir) = &s.out {
            let path = dir.join(format!("{}_round{:02}.vtk", case.name(), round.row.level));
            vtk::write_solution(&path, &round.mesh, &round.solution, Some(&round.estimator))?;
        }
        rows.push(round.clone());
        Ok(())
    })?;
    let report = report_of(&rows);
    write!(out, "{}", report.to_csv_string()?)?;
    if let Some(path) = &s.csv {
        write_csv_file(path, &report)?;
    }
    Ok(report)
}

pub fn cmd_check_cordes(s: &Settings, out: &mut dyn Write) -> Result<CordesReport> {
    let case = s.problem()?;
    let r = cordes_check(&case.coefficient(), case.domain(), s.samples)?;
    writeln!(out, "case={} samples={}x{} skipped={}", case.name(), s.samples, s.samples, r.points_skipped)?;
    writeln!(out, "max |A|^2/(tr A)^2 = {:.12}", r.max_ratio)?;
    writeln!(out, "epsilon = {:.12}", r.epsilon)?;
    writeln!(out, "gamma in [{:.12}, {:.12}]", r.gamma_min, r.gamma_max)?;
    writeln!(out, "min eigenvalue of A = {:.12}", r.min_eigenvalue)?;
    writeln!(
        out,
        "|gamma A:B - tr B| <= sqrt(1 - epsilon)|B|: {} checks, {} violations, worst margin {:.3e}",
        r.gamma_checks, r.gamma_violations, r.gamma_worst_margin
    )?;
    Ok(r)
}

/// Dispatches a parsed command line.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let settings = Settings::resolve(&cli.opts)?;
    let go = |out: &mut dyn Write| -> Result<()> {
        match cli.command {
            Command::Solve => cmd_solve(&settings, out).map(drop),
            Command::Convergence => cmd_convergence(&settings, out).map(drop),
            Command::Adapt => cmd_adapt(&settings, out).map(drop),
            Command::CheckCordes => cmd_check_cordes(&settings, out).map(drop),
        }
    };
    if settings.serial {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        // The writer may not be Send; buffer inside the pool.
        let mut buf = Vec::new();
        let result = pool.install(|| go(&mut buf));
        out.write_all(&buf)?;
        result
    } else {
        go(out)
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => 2,
        Error::Io(_) => 74,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let map = parse_config("# comment\ncase = ex2\nmax-dofs=1000 # trailing\n\n").unwrap();
        assert_eq!(map["case"], "ex2");
        assert_eq!(map["max_dofs"], "1000");
        assert!(parse_config("bogus = 1").is_err());
        assert!(parse_config("case ex1").is_err());
    }

    #[test]
    fn precedence_flags_over_file_over_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "degree = 2\nmu = 3.5\n").unwrap();
        let opts = Options { mu: Some(7.0), config: Some(path), ..Default::default() };
        let s = Settings::resolve(&opts).unwrap();
        assert_eq!(s.degree, 2);
        assert_eq!(s.mu, 7.0);
        assert_eq!(s.theta, DEFAULT_THETA);
        assert_eq!(s.case, "ex1");
    }

    #[test]
    fn malformed_value_is_invalid_argument() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cfg");
        fs::write(&path, "degree = two\n").unwrap();
        let opts = Options { config: Some(path), ..Default::default() };
        assert!(matches!(Settings::resolve(&opts), Err(Error::InvalidArgument(_))));
    }
}
