//! Command-line front end: calibrate a model, sweep fields, hunt resonances,
//! or report a single cross-section point.
//!
//! Exit codes: 0 success, 1 bad configuration, 2 solver failure,
//! 3 calibration/resonance target not found.

use clap::{Args, Parser, Subcommand};
use efield_scatter::scan::{
    calibrate_auto, write_csv, write_jsonl, FieldGrid, GridScale, OutputFormat,
};
use efield_scatter::{
    find_rc, find_resonance, sweep_field, Error, NumericalParams, PotentialModel, ScanConfig,
    Statistics,
};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "efield-scatter",
    about = "Elastic scattering of ultracold atoms under a dc electric field",
    version
)]
struct Cli {
    /// Flat `key = value` config file; command-line flags win on conflict.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the cutoff radius reproducing a target zero-field scattering length.
    Calibrate(CalibrateArgs),
    /// Scan the electric field and emit one record per grid point.
    Sweep(SweepArgs),
    /// Locate a field-induced zero-energy resonance inside a field bracket.
    Resonance(ResonanceArgs),
    /// Cross-section report at a single field point.
    Xsection(XsectionArgs),
}

#[derive(Args, Clone, Default)]
struct ModelFlags {
    /// C6 dispersion coefficient, a.u.
    #[arg(long)]
    c6: Option<f64>,
    /// C8 dispersion coefficient, a.u.
    #[arg(long)]
    c8: Option<f64>,
    /// C10 dispersion coefficient, a.u.
    #[arg(long)]
    c10: Option<f64>,
    /// Cutoff radius R_c (inner hard wall), a.u.
    #[arg(long)]
    rcut: Option<f64>,
    /// Reduced mass, a.u.
    #[arg(long)]
    mu: Option<f64>,
    /// Static polarizability of atom A, a.u.
    #[arg(long)]
    alpha_a: Option<f64>,
    /// Static polarizability of atom B, a.u.
    #[arg(long)]
    alpha_b: Option<f64>,
    /// Calibrate R_c to this zero-field scattering length before running, a.u.
    #[arg(long, allow_hyphen_values = true)]
    target_a: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct NumericFlags {
    /// Largest partial wave per block.
    #[arg(long)]
    lmax: Option<u32>,
    /// Largest |m| block.
    #[arg(long)]
    mmax: Option<u32>,
    /// Collision wavenumber, a.u.
    #[arg(long)]
    k: Option<f64>,
    /// Collision temperature in microkelvin; sets k = sqrt(2 mu k_B T)
    /// unless --k is given.
    #[arg(long)]
    temp_uk: Option<f64>,
    /// Sectors per local de Broglie wavelength (>= 10).
    #[arg(long)]
    eta: Option<f64>,
    /// Largest propagation sector, a.u.
    #[arg(long)]
    hmax: Option<f64>,
    /// Worker threads for the field grid (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// R_c bracket LO:HI on one branch; omitted = automatic scan around R_c.
    #[arg(long, value_name = "LO:HI")]
    bracket: Option<String>,
    #[command(flatten)]
    model: ModelFlags,
    /// Write the calibrated model as a config fragment here.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Field grid START:STOP:COUNT in kV/cm.
    #[arg(long, value_name = "A:B:N")]
    field_kvcm: Option<String>,
    /// Grid spacing: linear or log.
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    statistics: Option<String>,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    numeric: NumericFlags,
    /// Output path (default stdout).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// csv or jsonl.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct ResonanceArgs {
    /// Field bracket LO:HI in kV/cm.
    #[arg(long, value_name = "LO:HI")]
    field_bracket: Option<String>,
    #[arg(long)]
    statistics: Option<String>,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    numeric: NumericFlags,
}

#[derive(Args)]
struct XsectionArgs {
    /// Field strength in kV/cm (default 0).
    #[arg(long)]
    field_kvcm: Option<f64>,
    #[arg(long)]
    statistics: Option<String>,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    numeric: NumericFlags,
    /// Output path (default stdout).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// csv or jsonl.
    #[arg(long)]
    format: Option<String>,
}

/// Values read from the flat config file. Every key is optional; unknown
/// keys are an error.
#[derive(Default, Clone)]
struct FileConfig {
    c6: Option<f64>,
    c8: Option<f64>,
    c10: Option<f64>,
    r_cut: Option<f64>,
    reduced_mass: Option<f64>,
    alpha_a: Option<f64>,
    alpha_b: Option<f64>,
    target_a: Option<f64>,
    statistics: Option<String>,
    field_start_kvcm: Option<f64>,
    field_stop_kvcm: Option<f64>,
    field_count: Option<usize>,
    field_scale: Option<String>,
    l_max: Option<u32>,
    m_max: Option<u32>,
    k: Option<f64>,
    eta: Option<f64>,
    h_max: Option<f64>,
    h0: Option<f64>,
    sigma_tol: Option<f64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    format: Option<String>,
}

#[derive(Debug)]
enum CliError {
    BadConfig(String),
    Solver(Error),
    SolverFailure(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::BadConfig(m) => write!(f, "{m}"),
            CliError::Solver(e) => write!(f, "{e}"),
            CliError::SolverFailure(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Solver(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::BadConfig(format!("io error: {e}"))
    }
}

fn exit_code_for(err: &CliError) -> u8 {
    match err {
        CliError::BadConfig(_) => 1,
        CliError::SolverFailure(_) => 2,
        CliError::Solver(e) => match e {
            Error::InvalidInput { .. }
            | Error::EmptyBasis { .. }
            | Error::MagneticNumberOutOfRange { .. } => 1,
            Error::NearResonance { .. }
            | Error::PoleInBracket { .. }
            | Error::TargetOutsideBranch { .. }
            | Error::CalibrationStalled { .. }
            | Error::NoResonanceFound => 3,
            _ => 2,
        },
    }
}

fn parse_kv_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::BadConfig(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::BadConfig(format!(
                "{}:{}: expected `key = value`, got {raw:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| {
            CliError::BadConfig(format!(
                "{}:{}: bad value for {what}: {value:?}",
                path.display(),
                lineno + 1
            ))
        };
        macro_rules! num {
            ($t:ty) => {
                Some(value.parse::<$t>().map_err(|_| bad(key))?)
            };
        }
        match key {
            "c6" => cfg.c6 = num!(f64),
            "c8" => cfg.c8 = num!(f64),
            "c10" => cfg.c10 = num!(f64),
            "r_cut" => cfg.r_cut = num!(f64),
            "reduced_mass" => cfg.reduced_mass = num!(f64),
            "alpha_a" => cfg.alpha_a = num!(f64),
            "alpha_b" => cfg.alpha_b = num!(f64),
            "target_a" => cfg.target_a = num!(f64),
            "statistics" => cfg.statistics = Some(value.to_string()),
            "field_start_kvcm" => cfg.field_start_kvcm = num!(f64),
            "field_stop_kvcm" => cfg.field_stop_kvcm = num!(f64),
            "field_count" => cfg.field_count = num!(usize),
            "field_scale" => cfg.field_scale = Some(value.to_string()),
            "l_max" => cfg.l_max = num!(u32),
            "m_max" => cfg.m_max = num!(u32),
            "k" => cfg.k = num!(f64),
            "eta" => cfg.eta = num!(f64),
            "h_max" => cfg.h_max = num!(f64),
            "h0" => cfg.h0 = num!(f64),
            "sigma_tol" => cfg.sigma_tol = num!(f64),
            "workers" => cfg.workers = num!(usize),
            "out" => cfg.out = Some(PathBuf::from(value)),
            "format" => cfg.format = Some(value.to_string()),
            other => {
                return Err(CliError::BadConfig(format!(
                    "{}:{}: unknown config key {other:?}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok(cfg)
}

fn parse_pair(text: &str, what: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::BadConfig(format!(
            "{what}: expected LO:HI, got {text:?}"
        )));
    }
    let lo = parts[0]
        .parse::<f64>()
        .map_err(|_| CliError::BadConfig(format!("{what}: bad number {:?}", parts[0])))?;
    let hi = parts[1]
        .parse::<f64>()
        .map_err(|_| CliError::BadConfig(format!("{what}: bad number {:?}", parts[1])))?;
    Ok((lo, hi))
}

fn parse_grid(text: &str) -> Result<(f64, f64, usize), CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::BadConfig(format!(
            "--field-kvcm: expected START:STOP:COUNT, got {text:?}"
        )));
    }
    let a = parts[0]
        .parse::<f64>()
        .map_err(|_| CliError::BadConfig(format!("--field-kvcm: bad number {:?}", parts[0])))?;
    let b = parts[1]
        .parse::<f64>()
        .map_err(|_| CliError::BadConfig(format!("--field-kvcm: bad number {:?}", parts[1])))?;
    let n = parts[2]
        .parse::<usize>()
        .map_err(|_| CliError::BadConfig(format!("--field-kvcm: bad count {:?}", parts[2])))?;
    Ok((a, b, n))
}

fn parse_statistics(s: &str) -> Result<Statistics, CliError> {
    Statistics::from_str(s).map_err(|e| CliError::BadConfig(e.to_string()))
}

fn parse_format(s: &str) -> Result<OutputFormat, CliError> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "jsonl" => Ok(OutputFormat::Jsonl),
        other => Err(CliError::BadConfig(format!(
            "format: expected csv|jsonl, got {other:?}"
        ))),
    }
}

fn parse_scale(s: &str) -> Result<GridScale, CliError> {
    match s {
        "linear" => Ok(GridScale::Linear),
        "log" => Ok(GridScale::Log),
        other => Err(CliError::BadConfig(format!(
            "field_scale: expected linear|log, got {other:?}"
        ))),
    }
}

/// defaults <- config file <- flags, then validate.
fn resolve(
    file: &FileConfig,
    model: &ModelFlags,
    numeric: &NumericFlags,
    statistics: Option<&str>,
) -> Result<ScanConfig, CliError> {
    let stats_name = statistics
        .map(str::to_string)
        .or_else(|| file.statistics.clone())
        .unwrap_or_else(|| "boson".to_string());
    let statistics = parse_statistics(&stats_name)?;

    let mut config = ScanConfig::new(statistics);
    let m = &config.model;
    config.model = PotentialModel::new(
        model.c6.or(file.c6).unwrap_or(m.c6),
        model.c8.or(file.c8).unwrap_or(m.c8),
        model.c10.or(file.c10).unwrap_or(m.c10),
        model.rcut.or(file.r_cut).unwrap_or(m.r_cut),
        model.mu.or(file.reduced_mass).unwrap_or(m.reduced_mass),
    )?;
    config.alpha_a = model.alpha_a.or(file.alpha_a).unwrap_or(config.alpha_a);
    config.alpha_b = model.alpha_b.or(file.alpha_b).unwrap_or(config.alpha_b);
    config.target_a = model.target_a.or(file.target_a);

    let mut params = NumericalParams::for_statistics(statistics);
    if let Some(l) = numeric.lmax.or(file.l_max) {
        params.l_max = l;
    }
    if let Some(mm) = numeric.mmax.or(file.m_max) {
        params.m_max = mm;
    }
    if let Some(k) = numeric.k.or(file.k) {
        params.k = k;
    } else if let Some(t) = numeric.temp_uk {
        let energy = efield_scatter::units::temperature_to_energy(t * 1e-6);
        params.k = efield_scatter::units::wavenumber(energy, config.model.reduced_mass)?;
    }
    if let Some(eta) = numeric.eta.or(file.eta) {
        params.step.eta = eta;
    }
    if let Some(h) = numeric.hmax.or(file.h_max) {
        params.step.h_max = h;
    }
    if let Some(h0) = file.h0 {
        params.step.h0 = h0;
    }
    if let Some(t) = file.sigma_tol {
        params.sigma_tol = t;
    }
    config.params = params;
    config.workers = numeric.workers.or(file.workers).unwrap_or(0);

    if let (Some(start), Some(stop)) = (file.field_start_kvcm, file.field_stop_kvcm) {
        config.grid.start_kvcm = start;
        config.grid.stop_kvcm = stop;
    }
    if let Some(count) = file.field_count {
        config.grid.count = count;
    }
    if let Some(scale) = &file.field_scale {
        config.grid.scale = parse_scale(scale)?;
    }

    config.validate()?;
    Ok(config)
}

fn calibrated_model(config: &ScanConfig) -> Result<(PotentialModel, Option<f64>), CliError> {
    match config.target_a {
        Some(target) => {
            let cal = calibrate_auto(&config.model, target)?;
            Ok((config.model.with_r_cut(cal.r_cut)?, Some(cal.achieved_a)))
        }
        None => Ok((config.model, None)),
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => Ok(Box::new(fs::File::create(p)?)),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn run_calibrate(file: &FileConfig, args: &CalibrateArgs) -> Result<(), CliError> {
    let config = resolve(file, &args.model, &NumericFlags::default(), None)?;
    let target = args
        .model
        .target_a
        .or(file.target_a)
        .ok_or_else(|| CliError::BadConfig("calibrate needs --target-a".to_string()))?;
    let cal = match &args.bracket {
        Some(text) => {
            let (lo, hi) = parse_pair(text, "--bracket")?;
            find_rc(&config.model, target, (lo, hi))?
        }
        None => calibrate_auto(&config.model, target)?,
    };
    println!(
        "r_cut = {:.8} a.u.  (a = {:.6} a.u., |a - target| = {:.3e}, nodes = {}, iterations = {})",
        cal.r_cut, cal.achieved_a, cal.residual, cal.nodes, cal.iterations
    );
    if let Some(path) = &args.out {
        let mut f = fs::File::create(path)?;
        writeln!(f, "# calibrated to a_sc = {target} a.u.")?;
        writeln!(f, "r_cut = {:.10}", cal.r_cut)?;
        writeln!(f, "c6 = {}", config.model.c6)?;
        writeln!(f, "c8 = {}", config.model.c8)?;
        writeln!(f, "c10 = {}", config.model.c10)?;
        writeln!(f, "reduced_mass = {}", config.model.reduced_mass)?;
        writeln!(f, "alpha_a = {}", config.alpha_a)?;
        writeln!(f, "alpha_b = {}", config.alpha_b)?;
    }
    Ok(())
}

fn run_sweep(file: &FileConfig, args: &SweepArgs) -> Result<(), CliError> {
    let mut config = resolve(file, &args.model, &args.numeric, args.statistics.as_deref())?;
    if let Some(text) = &args.field_kvcm {
        let (a, b, n) = parse_grid(text)?;
        config.grid.start_kvcm = a;
        config.grid.stop_kvcm = b;
        config.grid.count = n;
    }
    if let Some(scale) = &args.scale {
        config.grid.scale = parse_scale(scale)?;
    }
    config.validate()?;

    let records = sweep_field(&config)?;
    // Stamp the calibrated wall position on the header, not the template's.
    if let Some(first) = records.first() {
        config.model = config.model.with_r_cut(first.fingerprint.r_cut)?;
        config.target_a = None;
    }
    let format = match args.format.as_deref().or(file.format.as_deref()) {
        Some(s) => parse_format(s)?,
        None => OutputFormat::Csv,
    };
    let out_path = args.out.clone().or_else(|| file.out.clone());
    let mut out = open_out(&out_path)?;
    match format {
        OutputFormat::Csv => write_csv(&mut out, &config, &records)?,
        OutputFormat::Jsonl => write_jsonl(&mut out, &records)?,
    }
    Ok(())
}

fn run_resonance(file: &FileConfig, args: &ResonanceArgs) -> Result<(), CliError> {
    let config = resolve(file, &args.model, &args.numeric, args.statistics.as_deref())?;
    let bracket = match &args.field_bracket {
        Some(text) => parse_pair(text, "--field-bracket")?,
        None => (config.grid.start_kvcm.max(1e-3), config.grid.stop_kvcm),
    };
    let (model, _) = calibrated_model(&config)?;
    let report = find_resonance(
        &model,
        config.statistics,
        bracket,
        config.alpha_a,
        config.alpha_b,
        &config.params,
    )?;
    println!(
        "resonance_field_kvcm = {:.6}  a_eff_flanks = ({:.4e}, {:.4e})  asymmetry_flanks = ({:.4}, {:.4})  evaluations = {}",
        report.field_kvcm,
        report.a_eff_flanks.0,
        report.a_eff_flanks.1,
        report.asymmetry_flanks.0,
        report.asymmetry_flanks.1,
        report.evaluations
    );
    Ok(())
}

fn run_xsection(file: &FileConfig, args: &XsectionArgs) -> Result<(), CliError> {
    let mut config = resolve(file, &args.model, &args.numeric, args.statistics.as_deref())?;
    let field = args.field_kvcm.unwrap_or(0.0);
    config.grid = FieldGrid {
        start_kvcm: field,
        stop_kvcm: field,
        count: 1,
        scale: GridScale::Linear,
    };
    config.validate()?;
    let records = sweep_field(&config)?;
    let record = records.into_iter().next().expect("one grid point");
    if record.sigma_au.is_none() {
        return Err(CliError::SolverFailure(record.status));
    }
    if let Some(first) = Some(&record) {
        config.model = config.model.with_r_cut(first.fingerprint.r_cut)?;
        config.target_a = None;
    }
    let format = match args.format.as_deref().or(file.format.as_deref()) {
        Some(s) => parse_format(s)?,
        None => OutputFormat::Csv,
    };
    let out_path = args.out.clone().or_else(|| file.out.clone());
    let mut out = open_out(&out_path)?;
    match format {
        OutputFormat::Csv => write_csv(&mut out, &config, std::slice::from_ref(&record))?,
        OutputFormat::Jsonl => write_jsonl(&mut out, std::slice::from_ref(&record))?,
    }
    Ok(())
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(path) => parse_kv_file(path)?,
        None => FileConfig::default(),
    };
    match &cli.command {
        Command::Calibrate(args) => run_calibrate(&file, args),
        Command::Sweep(args) => run_sweep(&file, args),
        Command::Resonance(args) => run_resonance(&file, args),
        Command::Xsection(args) => run_xsection(&file, args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
