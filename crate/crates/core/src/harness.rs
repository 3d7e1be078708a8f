//! Monte-Carlo experiment driver.
//!
//! An [`ExperimentSpec`] names a base configuration, one swept parameter,
//! the schemes to compare and the number of channel draws. Every
//! `(sweep value, seed)` pair is an independent job; jobs run in parallel
//! and results are written in a fixed order.
//!
//! The four schemes differ in which blocks are optimized:
//!
//! | scheme  | IRS phases | antenna positions |
//! |---------|------------|-------------------|
//! | MA-OPS  | optimized  | optimized         |
//! | FPA-OPS | optimized  | grid              |
//! | MA-RPS  | random     | optimized         |
//! | FPA-RPS | random     | grid              |
//!
//! All schemes of one job start from the same initial point. Each scheme is
//! warm-started from the best result of the schemes whose variables it
//! contains (FPA-RPS, then FPA-OPS and MA-RPS, then MA-OPS), so a larger
//! variable set never ends below a smaller one on the same draw.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{self, Verdict};
use crate::scenario::{synthesize_scenario_at, ChannelSet, DistanceRange, ScenarioConfig, SolverSettings};
use crate::system::{constraint_report, DesignPoint};
use crate::units::dbm_to_watts;
use crate::wmmse::{self, BcdTrace, BlockMask, StopRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "MA-OPS")]
    MaOps,
    #[serde(rename = "FPA-OPS")]
    FpaOps,
    #[serde(rename = "MA-RPS")]
    MaRps,
    #[serde(rename = "FPA-RPS")]
    FpaRps,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::MaOps, Scheme::FpaOps, Scheme::MaRps, Scheme::FpaRps];

    pub fn label(&self) -> &'static str {
        match self {
            Scheme::MaOps => "MA-OPS",
            Scheme::FpaOps => "FPA-OPS",
            Scheme::MaRps => "MA-RPS",
            Scheme::FpaRps => "FPA-RPS",
        }
    }

    pub fn blocks(&self) -> BlockMask {
        match self {
            Scheme::MaOps => BlockMask { phases: true, positions: true },
            Scheme::FpaOps => BlockMask { phases: true, positions: false },
            Scheme::MaRps => BlockMask { phases: false, positions: true },
            Scheme::FpaRps => BlockMask { phases: false, positions: false },
        }
    }

    /// Schemes whose variable set is contained in this one's.
    fn predecessors(&self) -> &'static [Scheme] {
        match self {
            Scheme::MaOps => &[Scheme::FpaOps, Scheme::MaRps],
            Scheme::FpaOps | Scheme::MaRps => &[Scheme::FpaRps],
            Scheme::FpaRps => &[],
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme '{s}' (expected MA-OPS, FPA-OPS, MA-RPS or FPA-RPS)")))
    }
}

/// The swept parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Transmit power budget in dBm.
    PowerDbm,
    /// Side of the antenna region in wavelengths.
    ArraySize,
    /// Number of BS antennas.
    NumAntennas,
    /// IRS-IDR distance in meters (all IDRs at the same distance).
    IdrDistance,
}

impl SweepKind {
    pub fn name(&self) -> &'static str {
        match self {
            SweepKind::PowerDbm => "power_dbm",
            SweepKind::ArraySize => "array_size",
            SweepKind::NumAntennas => "num_antennas",
            SweepKind::IdrDistance => "idr_distance",
        }
    }
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "power_dbm" | "power" => Ok(SweepKind::PowerDbm),
            "array_size" => Ok(SweepKind::ArraySize),
            "num_antennas" => Ok(SweepKind::NumAntennas),
            "idr_distance" => Ok(SweepKind::IdrDistance),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep '{other}' (expected power_dbm, array_size, num_antennas or idr_distance)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub kind: SweepKind,
    pub values: Vec<f64>,
}

impl Sweep {
    /// Parses `kind=v1,v2,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, values) = text
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("sweep '{text}' must look like kind=v1,v2")))?;
        let values = values
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| Error::InvalidConfig(format!("bad sweep value '{v}'"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind: kind.parse()?, values })
    }

    /// `base` with the swept parameter set to `value`.
    pub fn apply(&self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        match self.kind {
            SweepKind::PowerDbm => cfg.power_budget = dbm_to_watts(value),
            SweepKind::ArraySize => cfg.region_size = value * cfg.carrier_wavelength,
            SweepKind::NumAntennas => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidConfig(format!("antenna count must be a positive integer, got {value}")));
                }
                cfg.num_bs_antennas = value as usize;
            }
            SweepKind::IdrDistance => cfg.idr_distance = DistanceRange::fixed(value),
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A complete experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub base: ScenarioConfig,
    pub sweep: Sweep,
    pub schemes: Vec<Scheme>,
    pub num_seeds: usize,
    /// Results CSV; the summary goes next to it as `<stem>_summary.csv`.
    pub output_path: PathBuf,
    /// Directory for per-run BCD traces, if wanted.
    pub trace_dir: Option<PathBuf>,
    /// Record wall-clock seconds; when off the column is zero and reruns
    /// produce identical files.
    pub record_timing: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sweep.values.is_empty() {
            return Err(Error::InvalidConfig("sweep has no values".into()));
        }
        if self.num_seeds == 0 {
            return Err(Error::InvalidConfig("num_seeds must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("no schemes selected".into()));
        }
        for v in &self.sweep.values {
            self.sweep.apply(&self.base, *v)?;
        }
        Ok(())
    }

    pub fn summary_path(&self) -> PathBuf {
        sibling(&self.output_path, "_summary")
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    path.with_file_name(format!("{stem}{suffix}.csv"))
}

/// Scenario section of the experiment file. Powers are in dBm and lengths
/// in meters unless noted; anything omitted keeps the preset's value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// `reference` (default) or `desk`.
    pub preset: Option<String>,
    pub num_bs_antennas: Option<usize>,
    pub num_irs_elements: Option<usize>,
    pub num_idrs: Option<usize>,
    pub num_ehrs: Option<usize>,
    pub carrier_wavelength: Option<f64>,
    /// In wavelengths.
    pub region_size_wavelengths: Option<f64>,
    /// In wavelengths.
    pub min_spacing_wavelengths: Option<f64>,
    pub power_budget_dbm: Option<f64>,
    pub ehr_threshold_dbm: Option<f64>,
    pub noise_power_dbm: Option<f64>,
    pub rate_weights: Option<Vec<f64>>,
    pub paths_per_link: Option<usize>,
    pub bs_irs_distance: Option<f64>,
    pub idr_distance: Option<[f64; 2]>,
    pub ehr_distance: Option<[f64; 2]>,
    pub path_loss_exponent: Option<f64>,
    pub rng_seed: Option<u64>,
}

impl ScenarioFile {
    pub fn to_config(&self, solver: SolverSettings) -> Result<ScenarioConfig> {
        let mut cfg = match self.preset.as_deref().unwrap_or("reference") {
            "reference" => ScenarioConfig::reference(),
            "desk" => ScenarioConfig::desk(),
            other => return Err(Error::InvalidConfig(format!("unknown preset '{other}' (expected reference or desk)"))),
        };
        if let Some(v) = self.carrier_wavelength {
            let ratio = v / cfg.carrier_wavelength;
            cfg.carrier_wavelength = v;
            cfg.region_size *= ratio;
            cfg.min_spacing *= ratio;
        }
        if let Some(v) = self.num_bs_antennas {
            cfg.num_bs_antennas = v;
        }
        if let Some(v) = self.num_irs_elements {
            cfg.num_irs_elements = v;
        }
        if let Some(v) = self.noise_power_dbm {
            cfg.noise_powers = vec![dbm_to_watts(v); cfg.num_idrs];
        }
        if let Some(v) = self.ehr_threshold_dbm {
            cfg.set_ehr_threshold(dbm_to_watts(v));
        }
        cfg.set_users(self.num_idrs.unwrap_or(cfg.num_idrs), self.num_ehrs.unwrap_or(cfg.num_ehrs));
        if let Some(v) = &self.rate_weights {
            cfg.rate_weights = v.clone();
        }
        if let Some(v) = self.region_size_wavelengths {
            cfg.region_size = v * cfg.carrier_wavelength;
        }
        if let Some(v) = self.min_spacing_wavelengths {
            cfg.min_spacing = v * cfg.carrier_wavelength;
        }
        if let Some(v) = self.power_budget_dbm {
            cfg.power_budget = dbm_to_watts(v);
        }
        if let Some(v) = self.paths_per_link {
            cfg.paths_per_link = v;
        }
        if let Some(v) = self.bs_irs_distance {
            cfg.bs_irs_distance = v;
        }
        if let Some([a, b]) = self.idr_distance {
            cfg.idr_distance = DistanceRange { min: a, max: b };
        }
        if let Some([a, b]) = self.ehr_distance {
            cfg.ehr_distance = DistanceRange { min: a, max: b };
        }
        if let Some(v) = self.path_loss_exponent {
            cfg.path_loss.bs_irs = v;
            cfg.path_loss.irs_idr = v;
            cfg.path_loss.irs_ehr = v;
        }
        if let Some(v) = self.rng_seed {
            cfg.rng_seed = v;
        }
        cfg.solver = solver;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// On-disk experiment description (TOML).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub seeds: Option<usize>,
    pub schemes: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub trace_dir: Option<PathBuf>,
    #[serde(default)]
    pub record_timing: bool,
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub scenario: ScenarioFile,
    #[serde(default)]
    pub solver: SolverSettings,
}

pub const DEFAULT_NUM_SEEDS: usize = 50;

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Builds the spec; a missing sweep defaults to the base power budget
    /// alone.
    pub fn to_spec(&self) -> Result<ExperimentSpec> {
        let base = self.scenario.to_config(self.solver)?;
        let sweep = match &self.sweep {
            Some(s) => s.clone(),
            None => Sweep { kind: SweepKind::PowerDbm, values: vec![crate::units::watts_to_dbm(base.power_budget)] },
        };
        let schemes = match &self.schemes {
            Some(list) => list.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?,
            None => Scheme::ALL.to_vec(),
        };
        let spec = ExperimentSpec {
            base,
            sweep,
            schemes,
            num_seeds: self.seeds.unwrap_or(DEFAULT_NUM_SEEDS),
            output_path: self.out.clone().unwrap_or_else(|| PathBuf::from("results.csv")),
            trace_dir: self.trace_dir.clone(),
            record_timing: self.record_timing,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// One scheme's result on one channel draw.
#[derive(Clone, Debug)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    /// `None` if no feasible starting point was found for this scheme.
    pub point: Option<DesignPoint>,
    pub trace: BcdTrace,
    pub sum_rate: f64,
    pub iterations: usize,
    pub seconds: f64,
}

impl SchemeOutcome {
    pub fn feasible(&self) -> bool {
        self.point.is_some()
    }
}

fn feasible_start(
    initial: &DesignPoint,
    channels: &ChannelSet,
    config: &ScenarioConfig,
    blocks: BlockMask,
) -> Result<Option<DesignPoint>> {
    if constraint_report(initial, channels, config).is_feasible(config) {
        return Ok(Some(initial.clone()));
    }
    let verdict = feasibility::run_feasibility_from(initial, channels, config, &feasibility::stop_rule(config), blocks)?;
    Ok((verdict.verdict == Verdict::Feasible).then_some(verdict.witness))
}

fn optimize(
    scheme: Scheme,
    start: Option<DesignPoint>,
    channels: &ChannelSet,
    config: &ScenarioConfig,
    started: Instant,
) -> Result<SchemeOutcome> {
    let Some(start) = start else {
        return Ok(SchemeOutcome {
            scheme,
            point: None,
            trace: BcdTrace::default(),
            sum_rate: 0.0,
            iterations: 0,
            seconds: started.elapsed().as_secs_f64(),
        });
    };
    let out = wmmse::run_with_blocks(&start, channels, config, &StopRule::from_config(config), scheme.blocks())?;
    let sum_rate = out.trace.records.last().map_or(out.trace.initial_rate, |r| r.true_rate);
    Ok(SchemeOutcome {
        scheme,
        iterations: out.iterations(),
        point: Some(out.point),
        trace: out.trace,
        sum_rate,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Runs one scheme on its own from the shared initializer of draw
/// `scenario_index`.
pub fn run_scheme(scheme: Scheme, channels: &ChannelSet, config: &ScenarioConfig, scenario_index: u64) -> Result<SchemeOutcome> {
    let started = Instant::now();
    let initial = wmmse::initial_point(channels, config, scenario_index);
    let start = feasible_start(&initial, channels, config, scheme.blocks())?;
    optimize(scheme, start, channels, config, started)
}

/// Runs `schemes` (and the schemes they are warm-started from) on one draw.
/// Results come back in the order of `schemes`.
pub fn run_schemes(
    schemes: &[Scheme],
    channels: &ChannelSet,
    config: &ScenarioConfig,
    scenario_index: u64,
) -> Result<Vec<SchemeOutcome>> {
    let initial = wmmse::initial_point(channels, config, scenario_index);
    let mut needed: Vec<Scheme> = Vec::new();
    fn require(s: Scheme, needed: &mut Vec<Scheme>) {
        for p in s.predecessors() {
            require(*p, needed);
        }
        if !needed.contains(&s) {
            needed.push(s);
        }
    }
    for s in schemes {
        require(*s, &mut needed);
    }
    // Smaller variable sets first.
    needed.sort_by_key(|s| std::cmp::Reverse(*s));

    let mut done: Vec<SchemeOutcome> = Vec::new();
    for scheme in needed {
        let started = Instant::now();
        let warm = done
            .iter()
            .filter(|o| scheme.predecessors().contains(&o.scheme) && o.feasible())
            .max_by(|a, b| a.sum_rate.total_cmp(&b.sum_rate))
            .and_then(|o| o.point.clone());
        let start = match warm {
            Some(p) => Some(p),
            None => feasible_start(&initial, channels, config, scheme.blocks())?,
        };
        done.push(optimize(scheme, start, channels, config, started)?);
    }
    Ok(schemes
        .iter()
        .map(|s| done.iter().find(|o| o.scheme == *s).cloned().expect("every requested scheme was run"))
        .collect())
}

/// One line of the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub sweep_value: f64,
    pub seed: u64,
    pub sum_rate_nats: f64,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub feasible: bool,
}

/// Mean and standard error over the feasible rows of one
/// `(scheme, sweep value)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub sweep_value: f64,
    pub num_feasible: usize,
    pub num_seeds: usize,
    pub mean_sum_rate_nats: f64,
    pub stderr_sum_rate_nats: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentResults {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResults {
    pub fn all_infeasible(&self) -> bool {
        self.rows.iter().all(|r| !r.feasible)
    }

    /// Feasible rates of `scheme` at `sweep_value`, indexed by seed.
    pub fn rates(&self, scheme: Scheme, sweep_value: f64) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme && r.sweep_value == sweep_value)
            .map(|r| r.feasible.then_some(r.sum_rate_nats))
            .collect()
    }
}

pub fn summarize(rows: &[ResultRow], schemes: &[Scheme], values: &[f64]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for value in values {
        for scheme in schemes {
            let cell: Vec<&ResultRow> = rows.iter().filter(|r| r.scheme == *scheme && r.sweep_value == *value).collect();
            let rates: Vec<f64> = cell.iter().filter(|r| r.feasible).map(|r| r.sum_rate_nats).collect();
            let n = rates.len();
            let mean = if n > 0 { rates.iter().sum::<f64>() / n as f64 } else { f64::NAN };
            let stderr = if n > 1 {
                let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                f64::NAN
            };
            out.push(SummaryRow {
                scheme: *scheme,
                sweep_value: *value,
                num_feasible: n,
                num_seeds: cell.len(),
                mean_sum_rate_nats: mean,
                stderr_sum_rate_nats: stderr,
            });
        }
    }
    out
}

fn trace_path(dir: &Path, scheme: Scheme, value: f64, seed: u64) -> PathBuf {
    dir.join(format!("{}_{}_{seed}.csv", scheme.label(), value))
}

/// Runs every job of `spec` and returns the rows without touching disk.
pub fn run_jobs(spec: &ExperimentSpec) -> Result<ExperimentResults> {
    spec.validate()?;
    let jobs: Vec<(f64, u64)> = spec
        .sweep
        .values
        .iter()
        .flat_map(|v| (0..spec.num_seeds as u64).map(move |s| (*v, s)))
        .collect();
    let per_job: Vec<Result<Vec<(SchemeOutcome, f64, u64)>>> = jobs
        .par_iter()
        .map(|(value, seed)| {
            let cfg = spec.sweep.apply(&spec.base, *value)?;
            let channels = synthesize_scenario_at(&cfg, *seed)?;
            let outcomes = run_schemes(&spec.schemes, &channels, &cfg, *seed)?;
            if let Some(dir) = &spec.trace_dir {
                for o in outcomes.iter().filter(|o| o.feasible()) {
                    o.trace.save_csv(&trace_path(dir, o.scheme, *value, *seed))?;
                }
            }
            Ok(outcomes.into_iter().map(|o| (o, *value, *seed)).collect())
        })
        .collect();
    let mut rows = Vec::new();
    for job in per_job {
        for (o, value, seed) in job? {
            rows.push(ResultRow {
                scheme: o.scheme,
                sweep_value: value,
                seed,
                sum_rate_nats: o.sum_rate,
                iterations: o.iterations,
                wall_seconds: if spec.record_timing { o.seconds } else { 0.0 },
                feasible: o.feasible(),
            });
        }
    }
    let summary = summarize(&rows, &spec.schemes, &spec.sweep.values);
    Ok(ExperimentResults { rows, summary })
}

fn open_output(path: &Path) -> Result<std::fs::File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(std::fs::File::create(path)?)
}

pub fn write_rows<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "sweep_value", "seed", "sum_rate_nats", "iterations", "wall_seconds", "feasible"])?;
    for r in rows {
        w.write_record([
            r.scheme.label().to_string(),
            r.sweep_value.to_string(),
            r.seed.to_string(),
            format!("{:.12e}", r.sum_rate_nats),
            r.iterations.to_string(),
            format!("{:.6}", r.wall_seconds),
            r.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "sweep_value", "num_feasible", "num_seeds", "mean_sum_rate_nats", "stderr_sum_rate_nats"])?;
    for r in rows {
        w.write_record([
            r.scheme.label().to_string(),
            r.sweep_value.to_string(),
            r.num_feasible.to_string(),
            r.num_seeds.to_string(),
            format!("{:.12e}", r.mean_sum_rate_nats),
            format!("{:.6e}", r.stderr_sum_rate_nats),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the experiment and writes the results and summary CSVs. Output
/// files are created before any computation so that bad paths fail fast.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResults> {
    spec.validate()?;
    let results_file = open_output(&spec.output_path)?;
    let summary_file = open_output(&spec.summary_path())?;
    if let Some(dir) = &spec.trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    let results = run_jobs(spec)?;
    write_rows(&results.rows, results_file)?;
    write_summary(&results.summary, summary_file)?;
    Ok(results)
}

/// Feasibility-only run for one `(sweep value, seed)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityRow {
    pub sweep_value: f64,
    pub seed: u64,
    pub verdict: Verdict,
    pub beta_star: f64,
    pub iterations: usize,
    pub screened: bool,
}

/// Runs the feasibility search on every job of `spec` and writes
/// `sweep_value,seed,verdict,beta_star,iterations,screened`.
pub fn run_feasibility_experiment(spec: &ExperimentSpec) -> Result<Vec<FeasibilityRow>> {
    spec.validate()?;
    let file = open_output(&spec.output_path)?;
    if let Some(dir) = &spec.trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    let jobs: Vec<(f64, u64)> = spec
        .sweep
        .values
        .iter()
        .flat_map(|v| (0..spec.num_seeds as u64).map(move |s| (*v, s)))
        .collect();
    let rows: Vec<Result<FeasibilityRow>> = jobs
        .par_iter()
        .map(|(value, seed)| {
            let cfg = spec.sweep.apply(&spec.base, *value)?;
            let channels = synthesize_scenario_at(&cfg, *seed)?;
            let start = feasibility::feasibility_start(&channels, &cfg, *seed);
            let v = feasibility::run_feasibility_from(&start, &channels, &cfg, &feasibility::stop_rule(&cfg), BlockMask::ALL)?;
            if let Some(dir) = &spec.trace_dir {
                v.save_csv(&dir.join(format!("feasibility_{value}_{seed}.csv")))?;
            }
            Ok(FeasibilityRow {
                sweep_value: *value,
                seed: *seed,
                verdict: v.verdict,
                beta_star: v.beta_star,
                iterations: v.trace.last().map_or(0, |r| r.iteration),
                screened: v.screened,
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["sweep_value", "seed", "verdict", "beta_star", "iterations", "screened"])?;
    for r in &rows {
        w.write_record([
            r.sweep_value.to_string(),
            r.seed.to_string(),
            r.verdict.as_str().to_string(),
            format!("{:.9e}", r.beta_star),
            r.iterations.to_string(),
            r.screened.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}
