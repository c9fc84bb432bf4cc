//! The `ncdirac` command line: thin wrappers that parse arguments, call the library and print
//! JSON. Exit codes: 0 every check passed, 1 some check failed, 2 bad arguments or unknown
//! system, 3 the output path cannot be written.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::fock::QFockSpace;
use crate::linalg::{self, DEFAULT_TOL};
use crate::metric::{LipSeminormSpec, MatrixState, MatrixStateJson};
use crate::report::{self, CheckReport};
use crate::suite::{self, Suite, VerifyConfig, DEFAULT_Q_GRID};
use crate::system::{System, SystemError};
use crate::wick;

/// Environment variable overriding the base tolerance.
pub const TOL_ENV: &str = "NCDIRAC_TOL";
/// Systems covered by `report` when none are given.
pub const REPORT_SYSTEMS: [&str; 5] = ["heat:2", "heat:3", "poisson:3", "donut:8:1:1", "Zn:4"];
/// Hodge-Dirac matrices up to this size are embedded in JSON reports.
pub const MAX_DUMPED_DIRAC: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Pass = 0,
    Fail = 1,
    Usage = 2,
    Unwritable = 3,
}

#[derive(Debug, Parser)]
#[command(name = "ncdirac", version, about = "q-Gaussian gradients, Schur and Fourier multipliers, Hodge-Dirac operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Vacuum moment of a word of q-Gaussians via the Wick formula.
    Wick(WickArgs),
    /// Dimensions of a truncated q-Fock space and its q-relation residual.
    Fock(FockArgs),
    /// Run verification suites on a system.
    Verify(VerifyArgs),
    /// Gap constants of a system.
    Gap(SystemArgs),
    /// Kato and Khintchine ratios ‖∂x‖_p / ‖A^{1/2}x‖_p.
    Kato(KatoArgs),
    /// Seminorm kernel, Leibniz inequality and Monge-Kantorovich lower bounds.
    Metric(MetricArgs),
    /// Aggregated report over several systems.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct WickArgs {
    #[arg(long, allow_hyphen_values = true)]
    q: f64,
    /// Comma-separated letters; distinct letters become orthonormal basis vectors.
    #[arg(long, value_delimiter = ',', conflicts_with = "vectors", required_unless_present = "vectors")]
    word: Vec<String>,
    /// Dimension of H for `--word` (defaults to the number of distinct letters).
    #[arg(long)]
    dim: Option<usize>,
    /// Inline JSON list of vectors, or a path to a file holding one.
    #[arg(long)]
    vectors: Option<String>,
    /// Also compute the moment on the truncated Fock space.
    #[arg(long)]
    oracle: bool,
}

#[derive(Debug, Args)]
struct FockArgs {
    #[arg(long, allow_hyphen_values = true)]
    q: f64,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Debug, Args)]
struct SystemArgs {
    /// Built-in name (heat:N, poisson:N, random:N:D:SEED, Zn:N, donut:N:P:Q, levy:N, regular:N,
    /// dihedral:N) or a JSON file.
    #[arg(long)]
    system: String,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q: Vec<f64>,
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    samples: usize,
    /// Also write the JSON array to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KatoArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    q: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 4.0, 6.0])]
    p: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct MetricArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Density matrix JSON files of two states for a Monge-Kantorovich lower bound.
    #[arg(long, requires = "psi")]
    phi: Option<PathBuf>,
    #[arg(long, requires = "phi")]
    psi: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, value_delimiter = ',')]
    systems: Vec<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    samples: usize,
}

/// A failure that maps to an exit code.
#[derive(Debug)]
struct Failure {
    code: ExitCode,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: ExitCode::Usage, message: message.into() }
    }

    fn fail(message: impl Into<String>) -> Self {
        Self { code: ExitCode::Fail, message: message.into() }
    }
}

impl From<SystemError> for Failure {
    fn from(e: SystemError) -> Self {
        Self::usage(e.to_string())
    }
}

fn computation<E: std::fmt::Display>(e: E) -> Failure {
    Failure::fail(e.to_string())
}

type Outcome = Result<(Value, bool), Failure>;

/// Parses `args` (including the program name), runs the command and returns the exit code.
/// `tol_env` is the value of [`TOL_ENV`], if set.
pub fn run<I, T>(args: I, tol_env: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::Usage } else { ExitCode::Pass };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code as i32;
        }
    };
    let tol = match tol_env.map(str::trim) {
        None | Some("") => DEFAULT_TOL,
        Some(s) => match s.parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => t,
            _ => {
                let _ = writeln!(err, "error: {TOL_ENV} must be a positive number, got '{s}'");
                return ExitCode::Usage as i32;
            }
        },
    };
    let outcome = match cli.command {
        Command::Wick(a) => cmd_wick(a),
        Command::Fock(a) => cmd_fock(a, tol),
        Command::Verify(a) => cmd_verify(a, tol),
        Command::Gap(a) => cmd_gap(a, tol),
        Command::Kato(a) => cmd_kato(a, tol),
        Command::Metric(a) => cmd_metric(a, tol),
        Command::Report(a) => cmd_report(a, tol),
    };
    match outcome {
        Ok((value, pass)) => {
            let text = serde_json::to_string_pretty(&value).unwrap_or_else(|_| value.to_string());
            if writeln!(out, "{text}").is_err() {
                return ExitCode::Unwritable as i32;
            }
            if pass { ExitCode::Pass as i32 } else { ExitCode::Fail as i32 }
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code as i32
        }
    }
}

fn read_json_arg(arg: &str) -> Result<Value, Failure> {
    let text = if arg.trim_start().starts_with('[') || arg.trim_start().starts_with('{') {
        arg.to_owned()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Failure::usage(format!("cannot read '{arg}': {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("malformed JSON: {e}")))
}

/// Distinct letters of the word, in order of first appearance, become `e_1, e_2, …`.
fn word_vectors(word: &[String], dim: Option<usize>) -> Result<Vec<Vec<f64>>, Failure> {
    let mut letters: Vec<&str> = Vec::new();
    for w in word {
        let w = w.trim();
        if w.is_empty() {
            return Err(Failure::usage("empty letter in --word"));
        }
        if !letters.contains(&w) {
            letters.push(w);
        }
    }
    let d = dim.unwrap_or(letters.len().max(1));
    if d < letters.len() {
        return Err(Failure::usage(format!("{} distinct letters do not fit in dimension {d}", letters.len())));
    }
    Ok(word
        .iter()
        .map(|w| {
            let k = letters.iter().position(|l| *l == w.trim()).expect("letter was recorded");
            (0..d).map(|i| if i == k { 1.0 } else { 0.0 }).collect()
        })
        .collect())
}

fn cmd_wick(a: WickArgs) -> Outcome {
    let vectors: Vec<Vec<f64>> = match &a.vectors {
        Some(v) => serde_json::from_value(read_json_arg(v)?)
            .map_err(|e| Failure::usage(format!("--vectors must be a list of real vectors: {e}")))?,
        None => word_vectors(&a.word, a.dim)?,
    };
    let trace = wick::wick_trace(a.q, &vectors).map_err(|e| Failure::usage(e.to_string()))?;
    let mut value = json!({ "q": a.q, "length": vectors.len(), "trace": trace });
    if a.oracle {
        let d = vectors.first().map_or(1, Vec::len);
        let fock = QFockSpace::new(a.q, d, (vectors.len() / 2).max(1)).map_err(computation)?;
        let oracle = fock.word_vacuum_trace(&vectors).map_err(computation)?.re;
        value["fock_trace"] = json!(oracle);
        value["difference"] = json!((oracle - trace).abs());
    }
    Ok((value, true))
}

fn cmd_fock(a: FockArgs, tol: f64) -> Outcome {
    let cap = a.cap.unwrap_or(a.dim.max(4));
    let fock = QFockSpace::new(a.q, a.dim, cap).map_err(|e| Failure::usage(e.to_string()))?;
    let mut rng = linalg::random::rng(0);
    let e = linalg::random::unit_vector(a.dim, &mut rng);
    let g = linalg::random::unit_vector(a.dim, &mut rng);
    let r = fock.q_relation_residual(&e, &g).map_err(computation)?;
    let value = json!({
        "q": a.q,
        "h_dim": a.dim,
        "level_cap": cap,
        "level_dims": fock.level_dims(),
        "total_dim": fock.total_dim(),
        "q_relation_residual": r,
    });
    Ok((value, r <= tol))
}

fn q_grid(q: &[f64]) -> Vec<f64> {
    if q.is_empty() { DEFAULT_Q_GRID.to_vec() } else { q.to_vec() }
}

fn cmd_verify(a: VerifyArgs, tol: f64) -> Outcome {
    let suite: Suite = a.suite.parse().map_err(|e: suite::SuiteError| Failure::usage(e.to_string()))?;
    let system = System::from_name(&a.system.system)?;
    let cfg = VerifyConfig { q_grid: q_grid(&a.q), suite, seed: a.seed, tol, samples: a.samples };
    let reports = suite::verify(&system, &a.system.system, &cfg).map_err(computation)?;
    let value = serde_json::to_value(&reports).map_err(computation)?;
    if let Some(path) = &a.out {
        write_file(path, |w| serde_json::to_writer_pretty(w, &value).map_err(std::io::Error::other))?;
    }
    Ok((value, report::all_pass(&reports)))
}

fn cmd_gap(a: SystemArgs, tol: f64) -> Outcome {
    let system = System::from_name(&a.system)?;
    let cfg = VerifyConfig { suite: Suite::Gap, tol, ..Default::default() };
    let reports = suite::verify(&system, &a.system, &cfg).map_err(computation)?;
    let mut value = json!({ "system": a.system, "reports": reports });
    match &system {
        System::Schur(s) => value["g_alpha"] = json!(s.gap().map_err(computation)?),
        System::Fourier(_) => {
            let r = &reports[0];
            value["g_alpha"] = r.params["g_alpha"].clone();
            value["g_psi"] = r.params["g_psi"].clone();
            value["strict"] = r.params["strict"].clone();
        }
    }
    Ok((value, report::all_pass(&reports)))
}

fn cmd_kato(a: KatoArgs, tol: f64) -> Outcome {
    let system = System::from_name(&a.system.system)?;
    let fock = system.default_fock(a.q)?;
    let gs = system.gradient_system(&fock)?;
    let r = crate::dirac::kato_ratio_report(&gs, &a.p, a.samples, a.seed, tol)
        .map_err(computation)?
        .param("system", &a.system.system)
        .param("q", a.q);
    let pass = r.pass;
    Ok((serde_json::to_value(r).map_err(computation)?, pass))
}

fn read_state(path: &Path) -> Result<MatrixState, Failure> {
    let v = read_json_arg(path.to_str().ok_or_else(|| Failure::usage("state path is not UTF-8"))?)?;
    let json: MatrixStateJson = serde_json::from_value(v).map_err(|e| Failure::usage(format!("malformed state: {e}")))?;
    MatrixState::from_json(&json).map_err(|e| Failure::usage(e.to_string()))
}

fn cmd_metric(a: MetricArgs, tol: f64) -> Outcome {
    let system = System::from_name(&a.system.system)?;
    let spec = LipSeminormSpec::new(system, a.p).map_err(|e| Failure::usage(e.to_string()))?;
    let scale = tol / DEFAULT_TOL;
    let mut leibniz = spec.leibniz_check(a.samples, a.seed).map_err(computation)?;
    leibniz.tolerance *= scale;
    leibniz.pass = leibniz.residual <= leibniz.tolerance;
    let reports: Vec<CheckReport> = vec![spec.kernel_check().map_err(computation)?, leibniz]
        .into_iter()
        .map(|r| r.param("system", &a.system.system))
        .collect();
    let mut value = json!({ "system": a.system.system, "p": a.p, "reports": reports });
    if let (Some(phi), Some(psi)) = (&a.phi, &a.psi) {
        let (phi, psi) = (read_state(phi)?, read_state(psi)?);
        let bound = spec.mk_lower_bound(&phi, &psi, a.samples, a.seed).map_err(computation)?;
        value["mk_lower_bound"] = json!({ "value": bound, "samples": a.samples, "seed": a.seed });
    }
    Ok((value, report::all_pass(&reports)))
}

fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), Failure> {
    let unwritable = |e: std::io::Error| Failure {
        code: ExitCode::Unwritable,
        message: format!("cannot write '{}': {e}", path.display()),
    };
    let file = std::fs::File::create(path).map_err(unwritable)?;
    let mut w = std::io::BufWriter::new(file);
    body(&mut w).map_err(unwritable)?;
    w.flush().map_err(unwritable)
}

fn cmd_report(a: ReportArgs, tol: f64) -> Outcome {
    // Fail on an unwritable path before doing any work.
    write_file(&a.out, |_| Ok(()))?;
    let names: Vec<String> =
        if a.systems.is_empty() { REPORT_SYSTEMS.iter().map(|s| s.to_string()).collect() } else { a.systems.clone() };
    let grid = q_grid(&a.q);
    let mut reports = Vec::new();
    let mut spectra = Vec::new();
    let mut matrices = Vec::new();
    for name in &names {
        let system = System::from_name(name)?;
        let cfg = VerifyConfig { q_grid: grid.clone(), suite: Suite::All, seed: a.seed, tol, samples: a.samples };
        reports.extend(suite::verify(&system, name, &cfg).map_err(computation)?);
        for &q in &grid {
            let fock = system.default_fock(q)?;
            let gs = system.gradient_system(&fock)?;
            let kato = crate::dirac::kato_ratio_report(&gs, &[2.0, 4.0], a.samples, a.seed, tol)
                .map_err(computation)?
                .param("system", name)
                .param("q", q)
                .param("p", "2,4");
            reports.push(kato);
            let d = crate::dirac::assemble_hodge_dirac(&gs).map_err(computation)?;
            spectra.push(json!({ "system": name, "q": q, "eigenvalues": d.spectrum().map_err(computation)? }));
            if d.dim() <= MAX_DUMPED_DIRAC {
                matrices.push(json!({ "system": name, "q": q, "matrix": linalg::matrix_to_json(d.matrix()) }));
            }
        }
    }
    let pass = report::all_pass(&reports);
    match a.format {
        Format::Csv => write_file(&a.out, |w| report::write_csv(&reports, w))?,
        Format::Json => {
            let doc = json!({ "reports": reports, "spectra": spectra, "dirac_matrices": matrices });
            write_file(&a.out, |w| serde_json::to_writer_pretty(w, &doc).map_err(std::io::Error::other))?
        }
    }
    let summary = json!({
        "out": a.out.display().to_string(),
        "checks": reports.len(),
        "failed": reports.iter().filter(|r| !r.pass).map(|r| r.line()).collect::<Vec<_>>(),
    });
    Ok((summary, pass))
}
