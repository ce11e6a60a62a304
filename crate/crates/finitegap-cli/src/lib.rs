//! Command-line front end: sampling, Dubrovin integration and verification suites.

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use finitegap::curves::{Sheet, SpectralPoint};
use finitegap::dubrovin::{dubrovin_flow, initial_state};
use finitegap::potentials::{potential_value, trace_formula, PotentialSpec};
use finitegap::psi::{fit_nonelliptic_psi, nonelliptic_psi_solution, PsiSolution, QuadratureBase};
use finitegap::text::parse_complex;
use finitegap::theta::{jacobi_theta, theta_char, Modulus};
use finitegap::verify::{run_suite, Suite, SuiteOptions};
use finitegap::{Complex64 as C64, Tolerance};

use config::{Format, Grid, OutputSpec, RunConfig};
use report::{emit_report, write_table, Cell, Table};

/// Failure classes with their exit codes.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("check failure: {0}")]
    Check(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

/// Parameter and domain errors are configuration errors; numerical breakdowns are check failures.
fn lib_err(e: finitegap::Error) -> CliError {
    use finitegap::Error as E;
    match e {
        E::InvalidParameter(_) | E::UnsupportedVariant(_) | E::ArityMismatch { .. } | E::FitNotProvided => {
            CliError::Config(e.to_string())
        }
        _ => CliError::Check(e.to_string()),
    }
}

#[derive(Debug, Parser)]
#[command(name = "finitegap", version, about = "Finite-gap potentials, Baker-Akhiezer functions and identity checks")]
pub struct Cli {
    /// key=value configuration file; command-line values take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Potential catalog file (defaults to the shipped fixtures).
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    /// Output format: csv or jsonl.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Output file (defaults to stdout).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Tolerance; overrides the config file and FINITEGAP_TOL.
    #[arg(long, global = true)]
    pub tol: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Jacobi theta functions.
    #[command(subcommand)]
    Theta(ThetaCmd),
    /// Potentials from the catalog.
    #[command(subcommand)]
    Potential(PotentialCmd),
    /// Baker-Akhiezer functions.
    #[command(subcommand)]
    Psi(PsiCmd),
    /// Dubrovin flows.
    #[command(subcommand)]
    Dubrovin(DubrovinCmd),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum ThetaCmd {
    /// Evaluate θ_k or θ[ε;δ] (or a derivative) on a real grid or at one point.
    Eval(ThetaEvalArgs),
}

#[derive(Debug, Args)]
pub struct ThetaEvalArgs {
    /// Jacobi index 1..4.
    #[arg(long)]
    pub which: Option<u8>,
    /// Integer characteristic "eps,delta" instead of --which.
    #[arg(long, value_name = "EPS,DELTA", conflicts_with = "which")]
    pub char: Option<String>,
    /// Modulus τ with Im τ > 0, e.g. 0+2i.
    #[arg(long)]
    pub tau: Option<String>,
    /// A single complex point instead of a grid.
    #[arg(long, conflicts_with = "grid")]
    pub z: Option<String>,
    /// Real sample grid start:stop:count.
    #[arg(long)]
    pub grid: Option<String>,
    /// Derivative order (Jacobi thetas only).
    #[arg(long, default_value_t = 0)]
    pub deriv: usize,
}

#[derive(Debug, Args)]
pub struct VariantArgs {
    /// Catalog variant name, e.g. two-gap-lame.
    #[arg(long)]
    pub variant: Option<String>,
    /// Shorthand for --set tau=...
    #[arg(long)]
    pub tau: Option<String>,
    /// Parameter override key=value (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Sample grid start:stop:count along the real axis.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum PotentialCmd {
    /// Rows (x, Re u, Im u) on a grid.
    Sample(VariantArgs),
}

#[derive(Debug, Args)]
pub struct PsiArgs {
    #[command(flatten)]
    pub variant: VariantArgs,
    /// Spectral parameter, e.g. 1.2+0.5i.
    #[arg(long)]
    pub lambda: Option<String>,
    /// + or -.
    #[arg(long)]
    pub sheet: Option<String>,
    /// quadrature or auto (theta, pencil or fitted form as the variant allows).
    #[arg(long)]
    pub form: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum PsiCmd {
    /// Rows (x, Re Ψ, Im Ψ, residual).
    Sample(PsiArgs),
    /// As sample, failing if any residual reaches the tolerance.
    Verify(PsiArgs),
}

#[derive(Debug, Subcommand)]
pub enum DubrovinCmd {
    /// Rows (x, Re γ_k, Im γ_k, sheet_k, trace residual) along the grid.
    Integrate(DubrovinArgs),
}

#[derive(Debug, Args)]
pub struct DubrovinArgs {
    #[command(flatten)]
    pub variant: VariantArgs,
    /// Constant imaginary part of x along the flow.
    #[arg(long, allow_hyphen_values = true)]
    pub x_imag: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// trivial, theta, elliptic, curves, potentials, psi, dubrovin, theta-ode or all.
    #[arg(long)]
    pub suite: Option<String>,
    /// Append a wall_time footer line (the only part that varies between runs).
    #[arg(long)]
    pub wall_time: bool,
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("finitegap: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Theta(ThetaCmd::Eval(a)) => emit_table(&theta_eval(&cfg, a)?, &cfg.output),
        Command::Potential(PotentialCmd::Sample(a)) => emit_table(&potential_sample(&cfg, a)?, &cfg.output),
        Command::Psi(PsiCmd::Sample(a)) => emit_table(&psi_table(&cfg, a)?.0, &cfg.output),
        Command::Psi(PsiCmd::Verify(a)) => {
            let (table, worst, tol) = psi_table(&cfg, a)?;
            emit_table(&table, &cfg.output)?;
            if worst < tol {
                Ok(())
            } else {
                Err(CliError::Check(format!("largest Schrödinger residual {worst:e} ≥ {tol:e}")))
            }
        }
        Command::Dubrovin(DubrovinCmd::Integrate(a)) => emit_table(&dubrovin_integrate(&cfg, a)?, &cfg.output),
        Command::Verify(a) => verify(&cfg, a),
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let file = match &cli.config {
        Some(p) => config::read_config_file(p)?,
        None => Default::default(),
    };
    let get = |cli: Option<String>, key: &str| cli.or_else(|| file.get(key).cloned());
    let format = match get(cli.format.clone(), "format") {
        Some(f) => f.parse()?,
        None => Format::Csv,
    };
    let tol = match get(cli.tol.clone(), "tol") {
        Some(t) => Some(config::parse_tol(&t)?),
        None => config::env_tolerance()?,
    };
    let (args_grid, args_params) = match &cli.command {
        Command::Potential(PotentialCmd::Sample(v)) => (v.grid.clone(), variant_params(v)?),
        Command::Psi(PsiCmd::Sample(a) | PsiCmd::Verify(a)) => (a.variant.grid.clone(), variant_params(&a.variant)?),
        Command::Dubrovin(DubrovinCmd::Integrate(a)) => (a.variant.grid.clone(), variant_params(&a.variant)?),
        Command::Theta(ThetaCmd::Eval(a)) => (a.grid.clone(), Vec::new()),
        Command::Verify(_) => (None, Vec::new()),
    };
    let grid = get(args_grid, "grid").map(|g| g.parse::<Grid>()).transpose()?;
    // Non-reserved file keys are potential parameters; command-line overrides come last.
    let mut params: Vec<(String, String)> =
        file.iter().filter(|(k, _)| !config::RESERVED_KEYS.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect();
    params.extend(args_params);
    Ok(RunConfig {
        catalog_path: cli.catalog.clone().or_else(|| file.get("catalog").map(PathBuf::from)),
        params,
        grid,
        tol,
        output: OutputSpec { path: cli.output.clone().or_else(|| file.get("output").map(PathBuf::from)), format },
        file,
    })
}

fn variant_params(v: &VariantArgs) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    if let Some(t) = &v.tau {
        out.push(("tau".to_string(), t.clone()));
    }
    for s in &v.set {
        let (k, val) = s.split_once('=').ok_or_else(|| CliError::Config(format!("--set {s:?}: expected key=value")))?;
        out.push((k.to_string(), val.to_string()));
    }
    Ok(out)
}

fn emit_table(t: &Table, out: &OutputSpec) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_table(t, out.format, &mut buf).map_err(|e| CliError::Io(e.to_string()))?;
    write_bytes(&buf, out)
}

fn write_bytes(buf: &[u8], out: &OutputSpec) -> Result<(), CliError> {
    match &out.path {
        Some(p) => std::fs::write(p, buf).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(buf).and_then(|_| so.flush()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn complex_arg(s: &str, what: &str) -> Result<C64, CliError> {
    parse_complex(s).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

fn need_grid(cfg: &RunConfig) -> Result<Grid, CliError> {
    cfg.grid.ok_or_else(|| CliError::Config("a grid start:stop:count is required".into()))
}

fn variant_spec(cfg: &RunConfig, v: &VariantArgs) -> Result<PotentialSpec, CliError> {
    let name = cfg.pick(v.variant.clone(), "variant").ok_or_else(|| CliError::Config("--variant is required".into()))?;
    let catalog = config::catalog_text(cfg.catalog_path.as_deref())?;
    config::resolve_variant(&catalog, &name, &cfg.params)
}

fn theta_eval(cfg: &RunConfig, a: &ThetaEvalArgs) -> Result<Table, CliError> {
    let tau_s = cfg.pick(a.tau.clone(), "tau").ok_or_else(|| CliError::Config("--tau is required".into()))?;
    let tau = Modulus::new(complex_arg(&tau_s, "tau")?).map_err(lib_err)?;
    let chr = match &a.char {
        Some(s) => {
            let parts: Vec<i64> = s.split(',').map(|p| p.trim().parse::<i64>()).collect::<Result<_, _>>().map_err(|_| CliError::Config(format!("--char {s:?}: expected eps,delta")))?;
            match parts[..] {
                [e, d] => Some((e, d)),
                _ => return Err(CliError::Config(format!("--char {s:?}: expected eps,delta"))),
            }
        }
        None => None,
    };
    if chr.is_some() && a.deriv > 0 {
        return Err(CliError::Config("--deriv applies to --which only".into()));
    }
    let which = match (chr, cfg.pick(a.which.map(|w| w.to_string()), "which")) {
        (Some(_), _) => 0,
        (None, Some(w)) => match w.parse::<u8>() {
            Ok(k @ 1..=4) => k,
            _ => return Err(CliError::Config(format!("--which {w}: expected 1..4"))),
        },
        (None, None) => return Err(CliError::Config("--which or --char is required".into())),
    };
    let zs: Vec<C64> = match &a.z {
        Some(z) => vec![complex_arg(z, "z")?],
        None => need_grid(cfg)?.points().into_iter().map(|x| C64::new(x, 0.0)).collect(),
    };
    let mut t = Table::new(&["z", "theta"]);
    for z in zs {
        let v = match chr {
            Some((e, d)) => theta_char(e, d, z, &tau),
            None => jacobi_theta(which, z, &tau, a.deriv),
        }
        .map_err(lib_err)?;
        t.rows.push(vec![Cell::Complex(z), Cell::Complex(v)]);
    }
    Ok(t)
}

fn potential_sample(cfg: &RunConfig, v: &VariantArgs) -> Result<Table, CliError> {
    let spec = variant_spec(cfg, v)?;
    let mut t = Table::new(&["x", "u"]);
    for x in need_grid(cfg)?.points() {
        let u = potential_value(&spec, C64::new(x, 0.0), 0).map_err(lib_err)?;
        t.rows.push(vec![Cell::Real(x), Cell::Complex(u)]);
    }
    Ok(t)
}

fn parse_sheet(s: &str) -> Result<Sheet, CliError> {
    match s {
        "+" | "plus" | "+1" | "1" => Ok(Sheet::Plus),
        "-" | "minus" | "-1" => Ok(Sheet::Minus),
        _ => Err(CliError::Config(format!("sheet {s:?}: expected + or -"))),
    }
}

/// The Ψ table with its largest residual and the tolerance it is held to.
fn psi_table(cfg: &RunConfig, a: &PsiArgs) -> Result<(Table, f64, f64), CliError> {
    let spec = variant_spec(cfg, &a.variant)?;
    let grid = need_grid(cfg)?;
    let lambda_s = cfg.pick(a.lambda.clone(), "lambda").ok_or_else(|| CliError::Config("--lambda is required".into()))?;
    let lambda = complex_arg(&lambda_s, "lambda")?;
    let sheet = parse_sheet(&cfg.pick(a.sheet.clone(), "sheet").unwrap_or_else(|| "+".into()))?;
    let form = cfg.pick(a.form.clone(), "form").unwrap_or_else(|| "auto".into());
    let (sol, default_tol) = match (form.as_str(), &spec) {
        ("quadrature", _) | ("auto", PotentialSpec::ZeroGap { .. }) => {
            (PsiSolution::quadrature(&spec, lambda, sheet, QuadratureBase::new(C64::new(grid.start, 0.0))), 1e-8)
        }
        ("auto", PotentialSpec::PencilV(p)) => (PsiSolution::pencil(p, lambda, sheet), 1e-7),
        ("auto", PotentialSpec::NonElliptic2Gap(p)) => {
            let probes = [0.40, 0.45, 0.50].map(|x| C64::new(x, 0.0));
            let fit = fit_nonelliptic_psi(p, lambda, sheet, &probes).map_err(lib_err)?;
            (nonelliptic_psi_solution(p, &fit), 1e-6)
        }
        ("auto", PotentialSpec::ModifiedLame { .. }) => {
            let point = SpectralPoint { lambda, mu: C64::new(0.0, 0.0), sheet, ramified: false };
            (PsiSolution::theta(&spec, &point), 1e-8)
        }
        ("auto", _) => {
            let point = spec.curve().map_err(lib_err)?.mu(lambda, sheet);
            (PsiSolution::theta(&spec, &point), 1e-8)
        }
        _ => return Err(CliError::Config(format!("form {form:?}: expected auto or quadrature"))),
    };
    let sol = sol.map_err(lib_err)?;
    let mut t = Table::new(&["x", "psi", "residual"]);
    let mut worst: f64 = 0.0;
    for x in grid.points() {
        let xc = C64::new(x, 0.0);
        let s = sol.sample(xc).map_err(lib_err)?;
        let r = sol.schrodinger_residual(xc).map_err(lib_err)?.relative();
        worst = if r.is_nan() { f64::INFINITY } else { worst.max(r) };
        t.rows.push(vec![Cell::Real(x), Cell::Complex(s.psi), Cell::Real(r)]);
    }
    Ok((t, worst, cfg.tol.unwrap_or(default_tol)))
}

fn dubrovin_integrate(cfg: &RunConfig, a: &DubrovinArgs) -> Result<Table, CliError> {
    let spec = variant_spec(cfg, &a.variant)?;
    let grid = need_grid(cfg)?;
    let y = match a.x_imag {
        Some(y) => y,
        None => match cfg.file.get("x_imag") {
            Some(s) => s.parse().map_err(|_| CliError::Config(format!("x_imag {s:?}")))?,
            None => 0.0,
        },
    };
    let curve = spec.curve().map_err(lib_err)?;
    let init = initial_state(&spec, C64::new(grid.start, y)).map_err(lib_err)?;
    let tol = Tolerance::new(1e-13, 1e-13, 200_000).map_err(lib_err)?;
    let traj = dubrovin_flow(&curve, &init, (grid.start, grid.stop), &tol).map_err(lib_err)?;
    let g = curve.genus();
    let mut cols = Vec::new();
    for k in 1..=g {
        cols.push(format!("gamma_{k}"));
        cols.push(format!("sheet_{k}"));
    }
    let mut t = Table { columns: std::iter::once("x".to_string()).chain(cols).chain(["trace_residual".to_string()]).collect(), rows: Vec::new() };
    for x in grid.points() {
        let st = traj.state_at(x).map_err(lib_err)?;
        let u = potential_value(&spec, C64::new(x, y), 0).map_err(lib_err)?;
        let tr = trace_formula(&st.gammas, &curve).map_err(lib_err)?;
        let mut row = vec![Cell::Real(x)];
        for (gk, sk) in st.gammas.iter().zip(&st.sheets) {
            row.push(Cell::Complex(*gk));
            row.push(Cell::Int(sk.sign() as i64));
        }
        row.push(Cell::Real((tr - u).norm() / u.norm().max(1.0)));
        t.rows.push(row);
    }
    Ok(t)
}

fn verify(cfg: &RunConfig, a: &VerifyArgs) -> Result<(), CliError> {
    let name = cfg.pick(a.suite.clone(), "suite").ok_or_else(|| CliError::Config("--suite is required".into()))?;
    let suite: Suite = name.parse().map_err(lib_err)?;
    let wall = a.wall_time || cfg.file.get("wall_time").is_some_and(|v| v == "true");
    let report = run_suite(suite, &SuiteOptions { tol_override: cfg.tol });
    write_bytes(&emit_report(&report, cfg.output.format, wall), &cfg.output)?;
    let failed: Vec<String> = report.failures().map(|c| format!("{}/{}", c.suite, c.id)).collect();
    eprintln!("{}: {} checks, {} failed", report.suite, report.checks.len(), failed.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failed.join(", ")))
    }
}
