//! Command-line frontend: every invocation is resolved into a [`RunConfig`]
//! with all defaults filled in, executed, and echoed next to its output so the
//! run can be replayed exactly.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lfvqe::circuit::synthesize_params;
use lfvqe::estimator::{EstimatorMode, DEFAULT_SHOTS_PER_TERM};
use lfvqe::observables::{exact_ground_state, scan_to_csv, ChargeRadius, DEFAULT_RADIUS_WINDOW};
use lfvqe::readout::{calibrate_with, DEFAULT_FLIP_PROBABILITY};
use lfvqe::vqe::OptimizerMethod;
use lfvqe::{
    charge_radius, evaluate_observable, form_factor_scan, pion_hamiltonian, try_encode, vqe_minimize, AnsatzParams, EncodingKind,
    EstimatorConfig, FormFactorScan, ModeOperator, ObservableSpec, OptimizerConfig, ReadoutNoise, StateVector,
};
use serde::{Deserialize, Serialize};

/// Failure of a run, split by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, files or values: exit 1.
    Validation(String),
    /// Divergence, singular fits and the like: exit 2.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }

    fn field(field: &str, e: impl fmt::Display) -> CliError {
        CliError::Validation(format!("{field}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<lfvqe::Error> for CliError {
    fn from(e: lfvqe::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Decompose,
    Vqe,
    Observe,
    Formfactor,
    Calibrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EncodingArg {
    Direct,
    Compact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OptimizerArg {
    Spsa,
    Neldermead,
    Pshift,
}

/// Everything a run depends on, with defaults materialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    /// `builtin:pion` or a mode-operator JSON file.
    pub hamiltonian: String,
    pub encoding: EncodingKind,
    pub estimator: EstimatorConfig,
    pub optimizer: Option<OptimizerConfig>,
    pub initial: Option<AnsatzParams>,
    pub observable: Option<String>,
    pub scan: Option<String>,
    pub radius_window: Option<usize>,
    pub out: Option<String>,
    pub format: Format,
}

#[derive(Parser, Debug)]
#[command(name = "lfvqe", version, about = "Variational eigensolver for light-front valence Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Print the Pauli decomposition of an encoded operator
    Decompose(Common),
    /// Minimize the energy with the variational loop
    Vqe(Common),
    /// Evaluate an observable in the exact ground state
    Observe(Common),
    /// Evaluate a form-factor scan and the charge radius
    Formfactor(Common),
    /// Build a readout calibration matrix
    Calibrate(Common),
    /// Re-run a resolved config echoed by an earlier run
    Replay {
        config: PathBuf,
        /// Write results here instead of the recorded path
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// `builtin:pion` or a mode-operator JSON file
    #[arg(long, visible_alias = "input", default_value = "builtin:pion")]
    hamiltonian: String,
    #[arg(long, value_enum, default_value = "compact")]
    encoding: EncodingArg,
    /// Defaults to sampled for vqe, exact otherwise
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Shots per Pauli term (per prepared state for `calibrate`)
    #[arg(long, default_value_t = DEFAULT_SHOTS_PER_TERM)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Readout noise JSON file
    #[arg(long)]
    noise: Option<PathBuf>,
    #[arg(long)]
    mitigate: bool,
    /// Estimate the mitigation matrix with this many shots per basis state
    /// instead of using the exact one
    #[arg(long)]
    calibration_shots: Option<u64>,
    #[arg(long, value_enum)]
    optimizer: Option<OptimizerArg>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Observable JSON file (defaults to the Hamiltonian)
    #[arg(long)]
    observable: Option<PathBuf>,
    /// Form-factor scan JSON file
    #[arg(long)]
    scan: Option<PathBuf>,
    /// Lowest Q² points used by the charge-radius fit
    #[arg(long)]
    radius_window: Option<usize>,
    /// Qubit count for `calibrate` without a noise file
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn path_string(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn read_file(field: &str, path: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::field(field, format!("cannot read `{path}`: {e}")))
}

fn resolve(command: Command, a: Common) -> CliResult<RunConfig> {
    let encoding = match a.encoding {
        EncodingArg::Direct => EncodingKind::Direct,
        EncodingArg::Compact => EncodingKind::Compact,
    };
    let mode = match a.mode {
        Some(ModeArg::Exact) => EstimatorMode::Exact,
        Some(ModeArg::Sampled) => EstimatorMode::Sampled,
        None if command == Command::Vqe => EstimatorMode::Sampled,
        None => EstimatorMode::Exact,
    };
    let mut estimator = EstimatorConfig {
        mode,
        shots_per_term: a.shots,
        seed: a.seed,
        mitigation: a.mitigate,
        calibration_shots: a.calibration_shots,
        ..EstimatorConfig::default()
    };
    if let Some(path) = &a.noise {
        let text = read_file("noise", &path_string(path))?;
        estimator.noise = Some(ReadoutNoise::from_json_str(&text).map_err(|e| CliError::field("noise", e))?);
    }
    if command == Command::Calibrate {
        if estimator.noise.is_none() {
            let n = a.qubits.ok_or_else(|| CliError::field("qubits", "calibrate needs --noise or --qubits"))?;
            estimator.noise = Some(ReadoutNoise::uniform(n, DEFAULT_FLIP_PROBABILITY)?);
        }
        estimator.calibration_shots = Some(a.shots);
    } else if a.qubits.is_some() {
        return Err(CliError::field("qubits", "only used by calibrate"));
    }
    if a.mitigate && estimator.noise.is_none() {
        return Err(CliError::field("mitigate", "requires --noise"));
    }
    if estimator.noise.is_some() && mode == EstimatorMode::Exact && command != Command::Calibrate {
        return Err(CliError::field("noise", "readout noise needs --mode sampled"));
    }
    let optimizer = if command == Command::Vqe {
        let mut o = OptimizerConfig::for_mode(mode);
        o.seed = a.seed;
        if let Some(m) = a.optimizer {
            o.method = match m {
                OptimizerArg::Spsa => OptimizerMethod::Spsa,
                OptimizerArg::Neldermead => OptimizerMethod::NelderMead,
                OptimizerArg::Pshift => OptimizerMethod::ParameterShift,
            };
        }
        if let Some(n) = a.max_iter {
            o.max_iterations = n;
        }
        Some(o)
    } else {
        if a.optimizer.is_some() || a.max_iter.is_some() {
            return Err(CliError::field("optimizer", "only used by vqe"));
        }
        None
    };
    let observable = a.observable.as_deref().map(path_string);
    if observable.is_some() && command != Command::Observe {
        return Err(CliError::field("observable", "only used by observe"));
    }
    let scan = a.scan.as_deref().map(path_string);
    if command == Command::Formfactor && scan.is_none() {
        return Err(CliError::field("scan", "formfactor needs --scan FILE"));
    }
    if scan.is_some() && command != Command::Formfactor {
        return Err(CliError::field("scan", "only used by formfactor"));
    }
    let radius_window = match command {
        Command::Formfactor => Some(a.radius_window.unwrap_or(DEFAULT_RADIUS_WINDOW)),
        _ if a.radius_window.is_some() => return Err(CliError::field("radius_window", "only used by formfactor")),
        _ => None,
    };
    let format = match (command, a.format) {
        (Command::Decompose, f) => f.unwrap_or(Format::Text),
        (_, Some(Format::Text)) => return Err(CliError::field("format", "text output is only available for decompose")),
        (Command::Formfactor, f) => f.unwrap_or(Format::Csv),
        (_, f) => f.unwrap_or(Format::Json),
    };
    Ok(RunConfig {
        command,
        hamiltonian: a.hamiltonian,
        encoding,
        estimator,
        optimizer,
        initial: None,
        observable,
        scan,
        radius_window,
        out: a.out.as_deref().map(path_string),
        format,
    })
}

fn load_hamiltonian(src: &str) -> CliResult<ModeOperator> {
    match src.strip_prefix("builtin:") {
        Some("pion") => Ok(pion_hamiltonian().matrix),
        Some(other) => Err(CliError::field("hamiltonian", format!("unknown builtin `{other}` (available: pion)"))),
        None => ModeOperator::from_json_str(&read_file("hamiltonian", src)?).map_err(|e| CliError::field("hamiltonian", e)),
    }
}

fn json_text(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

/// Exact ground state of `h`, expressed through the ansatz so the state is
/// one the circuit can prepare.
fn ground_state(h: &ModeOperator, encoding: EncodingKind) -> CliResult<StateVector> {
    let (_, psi) = exact_ground_state(h, encoding)?;
    let params = synthesize_params(&psi, encoding)?;
    Ok(lfvqe::circuit::prepare(psi.n_qubits(), &params)?)
}

#[derive(Serialize)]
struct ObservableReport<'a> {
    name: &'a str,
    units: String,
    include_constant: bool,
    value: f64,
    std_error: f64,
    value_with_constant: f64,
    value_without_constant: f64,
    constant: f64,
    shots_used: u64,
    exact_with_constant: f64,
    exact_without_constant: f64,
}

#[derive(Serialize)]
struct ScanReport {
    points: Vec<lfvqe::observables::FormFactorPoint>,
    charge_radius: Option<ChargeRadius>,
}

fn finite(values: &[f64]) -> CliResult<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Numerical("expectation value is not finite".into()))
    }
}

/// Executes a resolved config and returns the output document.
pub fn execute(cfg: &RunConfig) -> CliResult<String> {
    cfg.estimator.validate()?;
    if cfg.command == Command::Calibrate {
        let noise = cfg.estimator.noise.as_ref().ok_or_else(|| CliError::field("noise", "missing"))?;
        let shots = cfg.estimator.calibration_shots.unwrap_or(cfg.estimator.shots_per_term);
        let cal = calibrate_with(noise, shots, cfg.estimator.seed, cfg.estimator.calibration_scope, cfg.estimator.parallelism)?;
        return Ok(match cfg.format {
            Format::Csv => cal.matrix.iter().map(|row| row.iter().map(f64::to_string).collect::<Vec<_>>().join(",") + "\n").collect(),
            _ => json_text(&cal),
        });
    }
    let h = load_hamiltonian(&cfg.hamiltonian)?;
    match cfg.command {
        Command::Decompose => {
            let s = try_encode(&h, cfg.encoding)?;
            Ok(match cfg.format {
                Format::Text => s.to_text(),
                Format::Csv => {
                    let mut out = String::from("term,coefficient\n");
                    for (t, c) in s.iter() {
                        out.push_str(&format!("{t},{c}\n"));
                    }
                    out
                }
                Format::Json => json_text(&s.iter().map(|(t, c)| (t.to_string(), c)).collect::<std::collections::BTreeMap<_, _>>()),
            })
        }
        Command::Vqe => {
            let opt = cfg.optimizer.as_ref().ok_or_else(|| CliError::field("optimizer", "missing"))?;
            let op = try_encode(&h, cfg.encoding)?;
            let trace = vqe_minimize(&op, cfg.encoding, &cfg.estimator, opt, cfg.initial.clone())?;
            Ok(match cfg.format {
                Format::Csv => trace.to_csv(),
                _ => json_text(&trace),
            })
        }
        Command::Observe => {
            let spec = match &cfg.observable {
                Some(path) => ObservableSpec::from_json_str(&read_file("observable", path)?).map_err(|e| CliError::field("observable", e))?,
                None => ObservableSpec::new("hamiltonian", h.clone(), true),
            };
            let psi = ground_state(&h, cfg.encoding)?;
            let e = evaluate_observable(&psi, &spec, cfg.encoding, &cfg.estimator)?;
            let exact = evaluate_observable(&psi, &spec, cfg.encoding, &EstimatorConfig::exact())?;
            finite(&[e.value, e.std_error, exact.value])?;
            let report = ObservableReport {
                name: &spec.name,
                units: spec.units.to_string(),
                include_constant: spec.include_constant,
                value: e.value,
                std_error: e.std_error,
                value_with_constant: e.value_with_constant(),
                value_without_constant: e.value_without_constant(),
                constant: e.constant,
                shots_used: e.shots_used,
                exact_with_constant: exact.value_with_constant(),
                exact_without_constant: exact.value_without_constant(),
            };
            Ok(match cfg.format {
                Format::Csv => format!(
                    "name,units,value,std_error,value_with_constant,value_without_constant,constant,shots_used\n{},{},{},{},{},{},{},{}\n",
                    report.name,
                    report.units,
                    report.value,
                    report.std_error,
                    report.value_with_constant,
                    report.value_without_constant,
                    report.constant,
                    report.shots_used
                ),
                _ => json_text(&report),
            })
        }
        Command::Formfactor => {
            let path = cfg.scan.as_deref().ok_or_else(|| CliError::field("scan", "missing"))?;
            let scan = FormFactorScan::from_json_str(&read_file("scan", path)?).map_err(|e| CliError::field("scan", e))?;
            let psi = ground_state(&h, cfg.encoding)?;
            let points = form_factor_scan(&psi, &scan, cfg.encoding, &cfg.estimator)?;
            finite(&points.iter().flat_map(|p| [p.f, p.std_error]).collect::<Vec<_>>())?;
            Ok(match cfg.format {
                Format::Csv => scan_to_csv(&points),
                _ => {
                    let window = cfg.radius_window.unwrap_or(DEFAULT_RADIUS_WINDOW);
                    let radius = if points.len() >= 3 { Some(charge_radius(&points, window)?) } else { None };
                    json_text(&ScanReport { points, charge_radius: radius })
                }
            })
        }
        Command::Calibrate => unreachable!(),
    }
}

fn config_path(out: &str) -> String {
    format!("{out}.config.json")
}

fn run_config(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let output = execute(cfg)?;
    let echo = json_text(cfg);
    let io = |e: std::io::Error| CliError::field("out", e);
    match &cfg.out {
        Some(out) => {
            fs::write(out, output).map_err(io)?;
            fs::write(config_path(out), echo).map_err(io)?;
        }
        None => {
            stdout.write_all(output.as_bytes()).map_err(io)?;
            stderr.write_all(echo.as_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

/// Runs one command; `argv[0]` is the program name.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = stderr.flush();
                    0
                }
                _ => 1,
            };
        }
    };
    let resolved = match cli.command {
        Sub::Decompose(a) => resolve(Command::Decompose, a),
        Sub::Vqe(a) => resolve(Command::Vqe, a),
        Sub::Observe(a) => resolve(Command::Observe, a),
        Sub::Formfactor(a) => resolve(Command::Formfactor, a),
        Sub::Calibrate(a) => resolve(Command::Calibrate, a),
        Sub::Replay { config, out } => read_file("config", &path_string(&config)).and_then(|text| {
            let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::field("config", e))?;
            if let Some(o) = out {
                cfg.out = Some(path_string(&o));
            }
            Ok(cfg)
        }),
    };
    match resolved.and_then(|cfg| run_config(&cfg, stdout, stderr)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// [`run_with`] on the process's standard streams.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
