//! Command-line front end: file formats, the four verbs and exit codes.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoy_lp::estimate_bounds;
use crate::error::Error;
use crate::optimizer::{optimize, parameters_to_candidate, OptimizationProblem, OptimizerSettings};
use crate::physics::{detuning_map, drift_to_qber_series, simulate_measurements, SystemModel, FIBRE_LOSS_DB_PER_KM};
use crate::protocol::{
    secure_key_rate, AnalysisVariant, KeyRateReport, LeakNormalization, MeasurementSet, ProtocolParameters,
    ReportedPrecision, SecurityAnalysis, YieldBounds,
};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: u8 = 0;
pub const EXIT_SCHEMA: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;

/// Below this total loss the detectors saturate and simulated rows are flagged.
pub const SATURATION_LOSS_DB: f64 = 30.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible(_) => CliError::Infeasible(e.to_string()),
            Error::InvalidParameters(_)
            | Error::InvalidMeasurements(_)
            | Error::InvalidAnalysis(_)
            | Error::InvalidModel(_)
            | Error::InvalidInput(_) => CliError::Schema(e.to_string()),
            Error::Domain { .. } | Error::Solver(_) => CliError::Numeric(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

// ---------------------------------------------------------------- file formats

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZBlock {
    pub flux: f64,
    pub prob: f64,
    pub gain: f64,
    pub qber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XBlock {
    /// `[u, v, w]`
    pub fluxes: [f64; 3],
    pub probs: [f64; 3],
    pub gain: [[f64; 3]; 3],
    pub qber: [[f64; 3]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub n_total: f64,
    pub clock_hz: f64,
    pub z: ZBlock,
    pub x: XBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<ReportedPrecision>,
}

impl MeasurementFile {
    pub fn to_measurements(&self) -> crate::Result<MeasurementSet> {
        let [u, v, w] = self.x.fluxes;
        let [pu, pv, pw] = self.x.probs;
        let params = ProtocolParameters::new([self.z.flux, u, v, w], [self.z.prob, pu, pv, pw])?;
        let m = MeasurementSet {
            n_total: self.n_total,
            clock_hz: self.clock_hz,
            params,
            z_gain: self.z.gain,
            z_qber: self.z.qber,
            x_gain: self.x.gain,
            x_qber: self.x.qber,
            precision: self.precision,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_measurements(m: &MeasurementSet, label: Option<String>) -> Self {
        let p = &m.params;
        Self {
            label,
            n_total: m.n_total,
            clock_hz: m.clock_hz,
            z: ZBlock {
                flux: p.s,
                prob: p.p_z_s,
                gain: m.z_gain,
                qber: m.z_qber,
            },
            x: XBlock {
                fluxes: p.x_intensities(),
                probs: p.x_probabilities(),
                gain: m.x_gain,
                qber: m.x_qber,
            },
            precision: m.precision,
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Schema(format!("measurement file: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisStatus {
    Ok,
    NoKey,
    Infeasible,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisResult {
    pub analysis: String,
    pub status: AnalysisStatus,
    pub settings: SecurityAnalysis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_per_clock: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_rate_per_clock: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<YieldBounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_z_11: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ec_leak: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AnalysisResult {
    fn from_report(r: &KeyRateReport) -> Self {
        Self {
            analysis: r.analysis.variant.name().to_string(),
            status: if r.no_key { AnalysisStatus::NoKey } else { AnalysisStatus::Ok },
            settings: r.analysis,
            rate_bps: Some(r.rate_bps),
            rate_per_clock: Some(r.rate_per_clock),
            raw_rate_per_clock: Some(r.raw_rate_per_clock),
            bounds: Some(r.bounds),
            q_z_11: Some(r.q_z_11),
            ec_leak: Some(r.ec_leak),
            delta: Some(r.delta),
            error: None,
        }
    }

    fn from_error(settings: SecurityAnalysis, e: &Error) -> Self {
        Self {
            analysis: settings.variant.name().to_string(),
            status: if matches!(e, Error::Infeasible(_)) {
                AnalysisStatus::Infeasible
            } else {
                AnalysisStatus::Failed
            },
            settings,
            rate_bps: None,
            rate_per_clock: None,
            raw_rate_per_clock: None,
            bounds: None,
            q_z_11: None,
            ec_leak: None,
            delta: None,
            error: Some(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub tool: String,
    pub version: String,
    pub timestamp: String,
    /// The measurement file exactly as analysed (after any command-line overrides).
    pub input: MeasurementFile,
    pub results: Vec<AnalysisResult>,
}

/// Runs one analysis on a measurement set.
pub fn analyse(m: &MeasurementSet, settings: &SecurityAnalysis) -> crate::Result<KeyRateReport> {
    let bounds = estimate_bounds(m, settings)?;
    secure_key_rate(m, &bounds, settings)
}

/// Recomputes every result of a report from its echoed input and settings.
pub fn rerun(report: &ReportFile) -> crate::Result<Vec<AnalysisResult>> {
    let m = report.input.to_measurements()?;
    Ok(report
        .results
        .iter()
        .map(|r| match analyse(&m, &r.settings) {
            Ok(k) => AnalysisResult::from_report(&k),
            Err(e) => AnalysisResult::from_error(r.settings, &e),
        })
        .collect())
}

/// Model, protocol parameters and sample size for `simulate` and `optimize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_model")]
    pub model: SystemModel,
    #[serde(default = "default_params")]
    pub params: ProtocolParameters,
    #[serde(default = "default_n_total")]
    pub n_total: f64,
}

fn default_model() -> SystemModel {
    SystemModel::calibrated(0.0)
}

/// Protocol parameters tabulated for 30 dB.
pub fn default_params() -> ProtocolParameters {
    ProtocolParameters {
        s: 0.55,
        u: 0.24,
        v: 0.047,
        w: 2e-4,
        p_z_s: 0.85,
        p_x_u: 0.01,
        p_x_v: 0.093,
        p_x_w: 0.047,
    }
}

fn default_n_total() -> f64 {
    8.64e13
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            model: default_model(),
            params: default_params(),
            n_total: default_n_total(),
        }
    }
}

// ---------------------------------------------------------------- arguments

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalysisChoice {
    Asymptotic,
    Gaussian,
    Composable,
    All,
}

impl AnalysisChoice {
    pub fn variants(self) -> Vec<AnalysisVariant> {
        match self {
            AnalysisChoice::Asymptotic => vec![AnalysisVariant::Asymptotic],
            AnalysisChoice::Gaussian => vec![AnalysisVariant::FiniteGaussian],
            AnalysisChoice::Composable => vec![AnalysisVariant::FiniteComposable],
            AnalysisChoice::All => AnalysisVariant::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LeakChoice {
    PerClock,
    PerSignalPair,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Input file (measurement file for `keyrate`, simulation config otherwise)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file; standard output when omitted
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub analysis: Option<AnalysisChoice>,
    #[arg(long, default_value_t = OptimizerSettings::default().seed)]
    pub seed: u64,
    #[arg(long)]
    pub quadrature_points: Option<usize>,
    #[arg(long, default_value_t = SecurityAnalysis::DEFAULT_S_CUT)]
    pub s_cut: usize,
    #[arg(long, default_value_t = SecurityAnalysis::DEFAULT_EPSILON_0)]
    pub epsilon0: f64,
    #[arg(long)]
    pub clock_hz: Option<f64>,
    #[arg(long, value_enum, default_value_t = LeakChoice::PerClock)]
    pub leak: LeakChoice,
}

impl CommonArgs {
    fn settings(&self, variant: AnalysisVariant) -> SecurityAnalysis {
        SecurityAnalysis {
            s_cut: self.s_cut,
            epsilon_0: self.epsilon0,
            leak: match self.leak {
                LeakChoice::PerClock => LeakNormalization::PerClock,
                LeakChoice::PerSignalPair => LeakNormalization::PerSignalPair,
            },
            ..SecurityAnalysis::new(variant)
        }
    }

    fn simulation_config(&self) -> CliResult<SimulationConfig> {
        let mut config = match &self.input {
            Some(path) => serde_json::from_str(&read_input(path)?)
                .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?,
            None => SimulationConfig::default(),
        };
        if let Some(k) = self.quadrature_points {
            config.model.quadrature_points = k;
        }
        if let Some(c) = self.clock_hz {
            config.model.clock_hz = c;
        }
        config.model.validate()?;
        config.params.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Parser)]
#[command(name = "mdiqkd", version, about = "Decoy-state MDI-QKD key-rate analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Key rates of a measurement file under the selected analyses (JSON report)
    Keyrate {
        #[command(flatten)]
        common: CommonArgs,
        /// Treat tabulated values as exact even if the file states a rounding precision
        #[arg(long)]
        ignore_precision: bool,
    },
    /// Simulated gains, QBERs and key rates over a loss sweep (CSV)
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Total losses in dB, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        losses: Vec<f64>,
    },
    /// Optimised protocol parameters per loss (CSV)
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        /// Total losses in dB, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        losses: Vec<f64>,
        #[arg(long, default_value_t = OptimizerSettings::default().starts)]
        starts: usize,
        #[arg(long, default_value_t = OptimizerSettings::default().max_evaluations)]
        max_evaluations: usize,
        /// Also start from the configuration's protocol parameters
        #[arg(long)]
        from_config: bool,
    },
    /// X-basis QBER over clock rate and detuning, and penalties for a beat-note series (CSV)
    Detuning {
        #[command(flatten)]
        common: CommonArgs,
        /// Clock rates in Hz, comma separated
        #[arg(long, value_delimiter = ',')]
        clocks: Vec<f64>,
        /// Detunings in Hz, comma separated
        #[arg(long, value_delimiter = ',')]
        detunings: Vec<f64>,
        /// CSV with columns time_s, delta_f_hz
        #[arg(long)]
        beat_note: Option<PathBuf>,
        /// Where to write the penalty series; standard output when omitted
        #[arg(long)]
        series_output: Option<PathBuf>,
    },
}

// ---------------------------------------------------------------- I/O helpers

fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))
}

/// Writes `contents` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

fn emit(output: Option<&Path>, contents: &str) -> CliResult<()> {
    match output {
        Some(path) => write_atomic(path, contents.as_bytes())
            .map_err(|e| CliError::Numeric(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .map_err(|e| CliError::Numeric(format!("cannot write to stdout: {e}")))
        }
    }
}

/// Locale-independent float formatting that round-trips: plain decimals for
/// moderate magnitudes, scientific notation otherwise.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let a = x.abs();
    if x == 0.0 || (1e-4..1e7).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| CliError::Numeric(format!("csv: {e}"));
    w.write_record(header).map_err(to_err)?;
    for r in rows {
        w.write_record(r).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Numeric(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Numeric(e.to_string()))
}

// ---------------------------------------------------------------- commands

pub fn cmd_keyrate(common: &CommonArgs, ignore_precision: bool) -> CliResult<ReportFile> {
    let path = common
        .input
        .as_ref()
        .ok_or_else(|| CliError::Schema("keyrate needs --input <measurement file>".into()))?;
    let mut file = MeasurementFile::parse(&read_input(path)?)?;
    if let Some(c) = common.clock_hz {
        file.clock_hz = c;
    }
    if ignore_precision {
        file.precision = None;
    }
    let m = file.to_measurements()?;
    let choice = common.analysis.unwrap_or(AnalysisChoice::All);
    let mut results = Vec::new();
    for variant in choice.variants() {
        let settings = common.settings(variant);
        settings.validate()?;
        results.push(match analyse(&m, &settings) {
            Ok(r) => AnalysisResult::from_report(&r),
            Err(e) => AnalysisResult::from_error(settings, &e),
        });
    }
    Ok(ReportFile {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        input: file,
        results,
    })
}

const PAIR_NAMES: [&str; 3] = ["u", "v", "w"];

pub fn simulate_header(variants: &[AnalysisVariant]) -> Vec<String> {
    let mut h: Vec<String> = vec!["loss_db".into(), "distance_km".into(), "saturation_caveat".into()];
    for v in variants {
        h.push(format!("rate_{}_bps", v.name()));
    }
    h.push("q_z_ss".into());
    h.push("e_z_ss".into());
    for a in PAIR_NAMES {
        for b in PAIR_NAMES {
            h.push(format!("q_x_{a}{b}"));
            h.push(format!("e_x_{a}{b}"));
        }
    }
    h
}

pub fn cmd_simulate(common: &CommonArgs, losses: &[f64]) -> CliResult<String> {
    if losses.is_empty() {
        return Err(CliError::Schema("simulate needs at least one loss".into()));
    }
    let config = common.simulation_config()?;
    let variants = common.analysis.unwrap_or(AnalysisChoice::All).variants();
    for v in &variants {
        common.settings(*v).validate()?;
    }
    use rayon::prelude::*;
    let rows: Vec<CliResult<Vec<String>>> = losses
        .par_iter()
        .map(|&loss| {
            if !(loss >= 0.0 && loss.is_finite()) {
                return Err(CliError::Schema(format!("loss {loss} dB must be finite and >= 0")));
            }
            let model = config.model.with_total_loss(loss);
            let m = simulate_measurements(&config.params, &model, config.n_total)?;
            let mut row = vec![
                format_float(loss),
                format_float(loss / FIBRE_LOSS_DB_PER_KM),
                (loss < SATURATION_LOSS_DB).to_string(),
            ];
            for v in &variants {
                row.push(match analyse(&m, &common.settings(*v)) {
                    Ok(r) => format_float(r.rate_bps),
                    Err(Error::Infeasible(_)) => "nan".into(),
                    Err(e) => return Err(e.into()),
                });
            }
            row.push(format_float(m.z_gain));
            row.push(format_float(m.z_qber));
            for i in 0..3 {
                for j in 0..3 {
                    row.push(format_float(m.x_gain[i][j]));
                    row.push(format_float(m.x_qber[i][j]));
                }
            }
            Ok(row)
        })
        .collect();
    let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;
    csv_string(&simulate_header(&variants), &rows)
}

pub const OPTIMIZE_HEADER: [&str; 14] = [
    "loss_db",
    "distance_km",
    "analysis",
    "s",
    "u",
    "v",
    "w",
    "p_z_s",
    "p_x_u",
    "p_x_v",
    "p_x_w",
    "rate_bps",
    "no_key",
    "evaluations",
];

pub fn cmd_optimize(
    common: &CommonArgs,
    losses: &[f64],
    starts: usize,
    max_evaluations: usize,
    from_config: bool,
) -> CliResult<String> {
    if losses.is_empty() {
        return Err(CliError::Schema("optimize needs at least one loss".into()));
    }
    let variant = match common.analysis.unwrap_or(AnalysisChoice::Composable) {
        AnalysisChoice::All => {
            return Err(CliError::Schema("optimize takes a single --analysis".into()));
        }
        c => c.variants()[0],
    };
    let config = common.simulation_config()?;
    let settings = OptimizerSettings {
        starts,
        seed: common.seed,
        max_evaluations,
        initial_guess: from_config.then(|| parameters_to_candidate(&config.params)),
        ..OptimizerSettings::default()
    };
    let mut rows = Vec::new();
    for &loss in losses {
        if !(loss >= 0.0 && loss.is_finite()) {
            return Err(CliError::Schema(format!("loss {loss} dB must be finite and >= 0")));
        }
        let problem = OptimizationProblem::new(
            config.model.with_total_loss(loss),
            config.n_total,
            common.settings(variant),
        );
        let r = optimize(&problem, &settings)?;
        let p = r.params;
        let evaluations: usize = r.runs.iter().map(|x| x.evaluations).sum();
        rows.push(vec![
            format_float(loss),
            format_float(loss / FIBRE_LOSS_DB_PER_KM),
            variant.name().to_string(),
            format_float(p.s),
            format_float(p.u),
            format_float(p.v),
            format_float(p.w),
            format_float(p.p_z_s),
            format_float(p.p_x_u),
            format_float(p.p_x_v),
            format_float(p.p_x_w),
            format_float(r.rate_bps),
            r.no_key.to_string(),
            evaluations.to_string(),
        ]);
    }
    let header: Vec<String> = OPTIMIZE_HEADER.iter().map(|s| s.to_string()).collect();
    csv_string(&header, &rows)
}

pub const DETUNING_HEADER: [&str; 5] = ["clock_hz", "delta_f_hz", "delta_phi_rad", "qber", "qber_raw"];
pub const SERIES_HEADER: [&str; 3] = ["time_s", "delta_f_hz", "qber_penalty"];

pub fn cmd_detuning_map(clocks: &[f64], detunings: &[f64]) -> CliResult<String> {
    for &c in clocks {
        if !(c > 0.0 && c.is_finite()) {
            return Err(CliError::Schema(format!("clock rate {c} must be positive")));
        }
    }
    let map = detuning_map(clocks, detunings)?;
    let rows: Vec<Vec<String>> = map
        .iter()
        .flatten()
        .map(|p| {
            vec![
                format_float(p.clock_hz),
                format_float(p.delta_f_hz),
                format_float(p.delta_phi_rad),
                format_float(p.qber),
                format_float(p.qber_raw),
            ]
        })
        .collect();
    let header: Vec<String> = DETUNING_HEADER.iter().map(|s| s.to_string()).collect();
    csv_string(&header, &rows)
}

#[derive(Debug, Deserialize)]
struct BeatNoteRow {
    time_s: f64,
    delta_f_hz: f64,
}

pub fn read_beat_note(text: &str) -> CliResult<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (k, rec) in reader.deserialize::<BeatNoteRow>().enumerate() {
        // data rows are numbered from 1, after the header
        let row = rec.map_err(|e| CliError::Schema(format!("beat note row {}: {e}", k + 1)))?;
        if !row.time_s.is_finite() || !row.delta_f_hz.is_finite() {
            return Err(CliError::Schema(format!("beat note row {}: non-finite sample", k + 1)));
        }
        out.push((row.time_s, row.delta_f_hz));
    }
    Ok(out)
}

pub fn cmd_detuning_series(text: &str, clock_hz: f64) -> CliResult<String> {
    let samples = read_beat_note(text)?;
    let df: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let penalty = drift_to_qber_series(&df, clock_hz)?;
    let rows: Vec<Vec<String>> = samples
        .iter()
        .zip(&penalty)
        .map(|((t, f), p)| vec![format_float(*t), format_float(*f), format_float(*p)])
        .collect();
    let header: Vec<String> = SERIES_HEADER.iter().map(|s| s.to_string()).collect();
    csv_string(&header, &rows)
}

/// Parses `args` (including the program name) and runs the command, returning
/// the process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_SCHEMA } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: &Command) -> CliResult<u8> {
    match command {
        Command::Keyrate {
            common,
            ignore_precision,
        } => {
            let report = cmd_keyrate(common, *ignore_precision)?;
            let mut text =
                serde_json::to_string_pretty(&report).map_err(|e| CliError::Numeric(e.to_string()))?;
            text.push('\n');
            emit(common.output.as_deref(), &text)?;
            let mut code = EXIT_OK;
            for r in &report.results {
                match r.status {
                    AnalysisStatus::Infeasible => {
                        eprintln!("{}: {}", r.analysis, r.error.as_deref().unwrap_or("infeasible"));
                        code = code.max(EXIT_INFEASIBLE);
                    }
                    AnalysisStatus::Failed => {
                        eprintln!("{}: {}", r.analysis, r.error.as_deref().unwrap_or("failed"));
                        code = code.max(EXIT_NUMERIC);
                    }
                    _ => {}
                }
            }
            Ok(code)
        }
        Command::Simulate { common, losses } => {
            emit(common.output.as_deref(), &cmd_simulate(common, losses)?)?;
            Ok(EXIT_OK)
        }
        Command::Optimize {
            common,
            losses,
            starts,
            max_evaluations,
            from_config,
        } => {
            let csv = cmd_optimize(common, losses, *starts, *max_evaluations, *from_config)?;
            emit(common.output.as_deref(), &csv)?;
            Ok(EXIT_OK)
        }
        Command::Detuning {
            common,
            clocks,
            detunings,
            beat_note,
            series_output,
        } => {
            if beat_note.is_none() && (clocks.is_empty() || detunings.is_empty()) {
                return Err(CliError::Schema(
                    "detuning needs --clocks and --detunings, or --beat-note".into(),
                ));
            }
            if !clocks.is_empty() && !detunings.is_empty() {
                emit(common.output.as_deref(), &cmd_detuning_map(clocks, detunings)?)?;
            }
            if let Some(path) = beat_note {
                let series = cmd_detuning_series(&read_input(path)?, common.clock_hz.unwrap_or(1e9))?;
                emit(series_output.as_deref(), &series)?;
            }
            Ok(EXIT_OK)
        }
    }
}
