//! Command-line front end.
//!
//! Every subcommand reads an optional TOML config, overlays its flags, and
//! writes plain CSV/JSON/text artifacts into `--out`. The effective config is
//! echoed into each manifest. Stage seeds derive from one master seed.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dataset::{self, DatasetFiles, MadelonParams};
use crate::encoding::{self, DriveConfig, MaskDistribution};
use crate::error::{Error, Result};
use crate::eval::{self, CvConfig, EvalResult, SweepConfig, SweepResult};
use crate::reservoir::{self, Integrator, NeuronParams, SpikeRaster};
use crate::seed;
use crate::training::{self, Method, TrainingSet, BINARY_CLASSES};

pub const DATASET_STEM: &str = "madelon";
pub const RASTER_FILE: &str = "raster.csv";
pub const RASTER_LABELS_FILE: &str = "raster.labels";

#[derive(Debug, Parser)]
#[command(
    name = "spikeres",
    version,
    about = "Time-multiplexed spiking reservoir: data generation, simulation, readout training and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a MADELON-style dataset.
    Generate(GenerateArgs),
    /// Import NIPS-2003 MADELON files.
    Load(LoadArgs),
    /// Encode a dataset and simulate the reservoir.
    Run(Box<RunArgs>),
    /// Random cross-validation of one or both trainers.
    Eval(EvalArgs),
    /// Grid over training-set size and training node number.
    Sweep(SweepArgs),
    /// Temporal map, significance table and result summary.
    Report(ReportArgs),
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub clusters_per_class: Option<usize>,
    #[arg(long)]
    pub informative: Option<usize>,
    #[arg(long)]
    pub combination: Option<usize>,
    #[arg(long)]
    pub distractors: Option<usize>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub cluster_noise: Option<f64>,
    /// Allow unequal class counts.
    #[arg(long)]
    pub unbalanced: bool,
}

#[derive(Debug, Args)]
pub struct LoadArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directory holding madelon.data / madelon.labels.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub nv: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub n_pad: Option<usize>,
    #[arg(long)]
    pub mask_dist: Option<String>,
    #[arg(long)]
    pub mask_seed: Option<u64>,
    /// Feed raw features to the mask instead of standardised ones.
    #[arg(long)]
    pub no_standardize: bool,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Fixed firing threshold; calibrated when absent.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub target_density: Option<f64>,
    #[arg(long)]
    pub refractory: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gain: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub bias: Option<f64>,
    #[arg(long)]
    pub neuron_noise: Option<f64>,
    #[arg(long)]
    pub integrator: Option<String>,
    /// Export drive, membrane and output traces of the first K datapoints.
    #[arg(long)]
    pub traces: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directory holding raster.csv / raster.labels.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// ols, significance or both.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long)]
    pub nn: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<String>,
    /// Grid: `a..b`, `a..b:step`, `a,b,c` or a single value.
    #[arg(long)]
    pub nt: Option<String>,
    #[arg(long)]
    pub nn: Option<String>,
    #[arg(long)]
    pub repeats: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub input: Option<PathBuf>,
}

/// Serializable experiment description; the config file format.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub dataset: DatasetSection,
    pub encoding: EncodingSection,
    pub neuron: NeuronSection,
    pub training: TrainingSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSection {
    #[serde(flatten)]
    pub params: MadelonParams,
    /// Overrides the seed derived from the master seed.
    pub seed_override: Option<u64>,
    #[serde(skip_serializing)]
    pub input_dir: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub data_path: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub labels_path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncodingSection {
    pub n_v: usize,
    pub mask_distribution: MaskDistribution,
    pub mask_seed: Option<u64>,
    pub standardize: bool,
    #[serde(flatten)]
    pub drive: DriveConfig,
}

impl Default for EncodingSection {
    fn default() -> Self {
        EncodingSection {
            n_v: 2048,
            mask_distribution: MaskDistribution::Uniform01,
            mask_seed: None,
            standardize: true,
            drive: DriveConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeuronSection {
    #[serde(flatten)]
    pub params: NeuronParams,
    /// Calibrate the threshold instead of using `threshold` as given.
    pub calibrate: bool,
    pub target_density: f64,
    pub density_window: (f64, f64),
    /// Export traces for this many leading datapoints.
    pub traces: usize,
}

impl Default for NeuronSection {
    fn default() -> Self {
        NeuronSection {
            params: NeuronParams::default(),
            calibrate: true,
            target_density: 0.15,
            density_window: (0.05, 0.25),
            traces: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingSection {
    pub methods: Vec<Method>,
    pub n_t: usize,
    pub n_n: usize,
    pub n_t_grid: Vec<usize>,
    pub n_n_grid: Vec<usize>,
    pub repeats: usize,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            methods: vec![Method::Ols, Method::Significance],
            n_t: 15,
            n_n: 20,
            n_t_grid: (1..=100).collect(),
            n_n_grid: (1..=64).collect(),
            repeats: 10,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    fn from_common(common: &CommonArgs) -> Result<Self> {
        let mut cfg = match &common.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = common.seed {
            cfg.seed = s;
        }
        if let Some(o) = &common.out {
            cfg.out = Some(o.clone());
        }
        Ok(cfg)
    }

    fn out_dir(&self) -> Result<PathBuf> {
        let out = self
            .out
            .clone()
            .ok_or_else(|| Error::param("an output directory is required (--out)"))?;
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        Ok(out)
    }

    pub fn dataset_seed(&self) -> u64 {
        self.dataset
            .seed_override
            .unwrap_or_else(|| seed::derive(self.seed, "dataset"))
    }

    pub fn mask_seed(&self) -> u64 {
        self.encoding
            .mask_seed
            .unwrap_or_else(|| seed::derive(self.seed, "mask"))
    }

    pub fn noise_seed(&self) -> u64 {
        seed::derive(self.seed, "neuron-noise")
    }

    pub fn cv_seed(&self) -> u64 {
        seed::derive(self.seed, "cv")
    }
}

/// Parse `a..b` (inclusive), `a..b:step`, `a,b,c` or `a`.
pub fn parse_grid(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::param(format!("cannot parse grid {spec:?}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let grid: Vec<usize> = if let Some((a, rest)) = spec.split_once("..") {
        let (b, step) = match rest.split_once(':') {
            Some((b, st)) => (num(b)?, num(st)?),
            None => (num(rest)?, 1),
        };
        let a = num(a)?;
        if step == 0 || b < a {
            return Err(bad());
        }
        (a..=b).step_by(step).collect()
    } else {
        spec.split(',').map(num).collect::<Result<_>>()?
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

fn parse_methods(s: &str) -> Result<Vec<Method>> {
    match s {
        "both" => Ok(vec![Method::Ols, Method::Significance]),
        other => Ok(vec![other.parse()?]),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => cmd_generate(a),
        Command::Load(a) => cmd_load(a),
        Command::Run(a) => cmd_run(*a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
    }
}

#[derive(Serialize)]
struct GenerateManifest<'a> {
    command: &'static str,
    version: &'static str,
    master_seed: u64,
    dataset_seed: u64,
    n_points: usize,
    n_features: usize,
    class_counts: [usize; 2],
    files: [String; 3],
    config: &'a ExperimentConfig,
}

pub fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_common(&a.common)?;
    let p = &mut cfg.dataset.params;
    if let Some(v) = a.points {
        p.n_points = v;
    }
    if let Some(v) = a.clusters_per_class {
        p.n_clusters_per_class = v;
    }
    if let Some(v) = a.informative {
        p.n_informative = v;
    }
    if let Some(v) = a.combination {
        p.n_combination = v;
    }
    if let Some(v) = a.distractors {
        p.n_distractor = v;
    }
    if let Some(v) = a.separation {
        p.cluster_separation = v;
    }
    if let Some(v) = a.cluster_noise {
        p.noise_sigma = v;
    }
    if a.unbalanced {
        p.balanced = false;
    }
    let params = MadelonParams {
        seed: cfg.dataset_seed(),
        ..cfg.dataset.params.clone()
    };
    params.validate()?;
    let out = cfg.out_dir()?;
    let ds = dataset::generate_madelon(&params)?;
    let files = DatasetFiles::in_dir(&out, DATASET_STEM);
    dataset::write_dataset(&ds, &files)?;
    write_json(
        &out.join("generate_manifest.json"),
        &GenerateManifest {
            command: "generate",
            version: env!("CARGO_PKG_VERSION"),
            master_seed: cfg.seed,
            dataset_seed: params.seed,
            n_points: ds.n_points(),
            n_features: ds.n_features(),
            class_counts: [ds.class_count(-1), ds.class_count(1)],
            files: [
                file_name(&files.data),
                file_name(&files.labels),
                file_name(&files.meta),
            ],
            config: &cfg,
        },
    )
}

pub fn cmd_load(a: LoadArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_common(&a.common)?;
    if a.data.is_some() {
        cfg.dataset.data_path = a.data;
    }
    if a.labels.is_some() {
        cfg.dataset.labels_path = a.labels;
    }
    let (Some(data), Some(labels)) = (&cfg.dataset.data_path, &cfg.dataset.labels_path) else {
        return Err(Error::param("load needs --data and --labels"));
    };
    let ds = dataset::load_madelon_files(data, labels)?;
    let out = cfg.out_dir()?;
    dataset::write_dataset(&ds, &DatasetFiles::in_dir(&out, DATASET_STEM))?;
    write_json(
        &out.join("load_manifest.json"),
        &serde_json::json!({
            "command": "load",
            "version": env!("CARGO_PKG_VERSION"),
            "source_data": file_name(data),
            "source_labels": file_name(labels),
            "n_points": ds.n_points(),
            "n_features": ds.n_features(),
            "class_counts": [ds.class_count(-1), ds.class_count(1)],
        }),
    )
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    version: &'static str,
    master_seed: u64,
    mask_seed: u64,
    noise_seed: u64,
    source_data: String,
    n_points: usize,
    n_features: usize,
    n_v: usize,
    n_pad: usize,
    theta_s: f64,
    datapoint_duration_s: f64,
    active_duration_s: f64,
    reset_duration_s: f64,
    total_simulated_time_s: f64,
    drive_scale: encoding::DriveScale,
    neuron: &'a NeuronParams,
    calibration: Option<reservoir::Calibration>,
    spike_density: f64,
    standardize_warnings: usize,
    config: &'a ExperimentConfig,
}

pub fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_common(&a.common)?;
    if a.input.is_some() {
        cfg.dataset.input_dir = a.input;
    }
    if a.data.is_some() {
        cfg.dataset.data_path = a.data;
    }
    if a.labels.is_some() {
        cfg.dataset.labels_path = a.labels;
    }
    let enc = &mut cfg.encoding;
    if let Some(v) = a.nv {
        enc.n_v = v;
    }
    if let Some(v) = a.theta {
        enc.drive.theta_s = v;
    }
    if let Some(v) = a.n_pad {
        enc.drive.n_pad = v;
    }
    if let Some(v) = &a.mask_dist {
        enc.mask_distribution = v.parse()?;
    }
    if a.mask_seed.is_some() {
        enc.mask_seed = a.mask_seed;
    }
    if a.no_standardize {
        enc.standardize = false;
    }
    let nr = &mut cfg.neuron;
    if let Some(v) = a.tau {
        nr.params.tau_s = v;
    }
    if let Some(v) = a.threshold {
        nr.params.threshold = v;
        nr.calibrate = false;
    }
    if let Some(v) = a.target_density {
        nr.target_density = v;
    }
    if let Some(v) = a.refractory {
        nr.params.refractory_s = v;
    }
    if let Some(v) = a.dt {
        nr.params.dt_s = v;
    }
    if let Some(v) = a.gain {
        nr.params.input_gain = v;
    }
    if let Some(v) = a.bias {
        nr.params.bias = v;
    }
    if let Some(v) = a.neuron_noise {
        nr.params.noise_sigma = v;
    }
    if let Some(v) = &a.integrator {
        nr.params.integrator = v.parse::<Integrator>()?;
    }
    if let Some(v) = a.traces {
        nr.traces = v;
    }

    let files = match (
        &cfg.dataset.data_path,
        &cfg.dataset.labels_path,
        &cfg.dataset.input_dir,
    ) {
        (Some(d), Some(l), _) => DatasetFiles {
            data: d.clone(),
            labels: l.clone(),
            meta: d.with_extension("meta"),
        },
        (_, _, Some(dir)) => DatasetFiles::in_dir(dir, DATASET_STEM),
        _ => return Err(Error::param("run needs --input DIR or --data and --labels")),
    };
    let raw = dataset::read_dataset(&files)?;
    let (ds, std_warnings) = if cfg.encoding.standardize {
        dataset::standardize(&raw)
    } else {
        (raw, Vec::new())
    };
    cfg.encoding.drive.validate()?;
    cfg.neuron
        .params
        .validate(cfg.encoding.drive.theta_s)
        .or_else(|e| {
            // The threshold is replaced by calibration, so only its ordering
            // against reset may be off here.
            if cfg.neuron.calibrate {
                let probe = NeuronParams {
                    threshold: cfg.neuron.params.reset_value + 1.0,
                    ..cfg.neuron.params.clone()
                };
                probe.validate(cfg.encoding.drive.theta_s)
            } else {
                Err(e)
            }
        })?;

    let mask = encoding::make_mask(
        ds.n_features(),
        cfg.encoding.n_v,
        cfg.encoding.mask_distribution,
        cfg.mask_seed(),
    )?;
    let encoded = encoding::encode_dataset(&ds, &mask, &cfg.encoding.drive)?;
    let noise_seed = cfg.noise_seed();

    let mut neuron = cfg.neuron.params.clone();
    let calibration = if cfg.neuron.calibrate && !encoded.signals.is_empty() {
        let cal = reservoir::calibrate_threshold(
            &encoded.signals,
            &neuron,
            noise_seed,
            cfg.neuron.target_density,
            cfg.neuron.density_window,
        )?;
        neuron.threshold = cal.threshold;
        Some(cal)
    } else {
        None
    };
    let raster = reservoir::run_reservoir(&encoded.signals, &neuron, noise_seed)?;

    let out = cfg.out_dir()?;
    raster.write_csv(&out.join(RASTER_FILE))?;
    write_text(
        &out.join(RASTER_LABELS_FILE),
        &ds.labels
            .iter()
            .map(|l| format!("{l}\n"))
            .collect::<String>(),
    )?;
    for i in 0..cfg.neuron.traces.min(encoded.signals.len()) {
        let signal = &encoded.signals[i];
        let sim = reservoir::simulate(
            signal,
            &neuron,
            reservoir::datapoint_noise_seed(noise_seed, i),
        )?;
        encoding::write_drive_csv(
            &out.join(format!("drive_{i}.csv")),
            std::slice::from_ref(signal),
        )?;
        reservoir::write_trace_csv(
            &out.join(format!("membrane_{i}.csv")),
            neuron.dt_s,
            &sim.trace,
        )?;
        let pulses = reservoir::render_output(&sim.spike_times, signal.duration_s(), &neuron);
        reservoir::write_trace_csv(&out.join(format!("output_{i}.csv")), neuron.dt_s, &pulses)?;
    }

    let per_point =
        (cfg.encoding.n_v + cfg.encoding.drive.n_pad) as f64 * cfg.encoding.drive.theta_s;
    let mut effective = cfg.clone();
    effective.neuron.params = neuron.clone();
    write_json(
        &out.join("run_manifest.json"),
        &RunManifest {
            command: "run",
            version: env!("CARGO_PKG_VERSION"),
            master_seed: cfg.seed,
            mask_seed: mask.seed,
            noise_seed,
            source_data: file_name(&files.data),
            n_points: ds.n_points(),
            n_features: ds.n_features(),
            n_v: cfg.encoding.n_v,
            n_pad: cfg.encoding.drive.n_pad,
            theta_s: cfg.encoding.drive.theta_s,
            datapoint_duration_s: per_point,
            active_duration_s: cfg.encoding.n_v as f64 * cfg.encoding.drive.theta_s,
            reset_duration_s: cfg.encoding.drive.reset_duration_s(),
            total_simulated_time_s: ds.n_points() as f64 * per_point,
            drive_scale: encoded.scale,
            neuron: &neuron,
            calibration,
            spike_density: raster.density(),
            standardize_warnings: std_warnings.len(),
            config: &effective,
        },
    )
}

fn read_raster_dir(dir: &Path) -> Result<(SpikeRaster, Vec<i32>)> {
    let raster = SpikeRaster::read_csv(&dir.join(RASTER_FILE))?;
    let labels_path = dir.join(RASTER_LABELS_FILE);
    let text = fs::read_to_string(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
    let labels = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| match l.trim().parse::<i32>() {
            Ok(v @ (-1 | 1)) => Ok(v),
            _ => Err(Error::format(&labels_path, format!("bad label {l:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if labels.len() != raster.n_rows() {
        return Err(Error::format(
            &labels_path,
            format!(
                "{} labels for {} raster rows",
                labels.len(),
                raster.n_rows()
            ),
        ));
    }
    Ok((raster, labels))
}

fn input_dir(cfg: &ExperimentConfig, flag: Option<PathBuf>) -> Result<PathBuf> {
    flag.or_else(|| cfg.dataset.input_dir.clone())
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| Error::param("--input is required"))
}

pub fn write_eval(out: &Path, r: &EvalResult) -> Result<()> {
    let stem = format!("eval_{}", r.method);
    write_json(&out.join(format!("{stem}.json")), r)?;
    let mut w = csv::Writer::from_path(out.join(format!("{stem}.csv")))?;
    w.write_record(["repeat", "accuracy"])?;
    for (i, a) in r.per_repeat_accuracies.iter().enumerate() {
        w.write_record([i.to_string(), a.to_string()])?;
    }
    w.write_record(["mean".to_string(), r.mean_accuracy.to_string()])?;
    w.write_record(["max".to_string(), r.max_accuracy.to_string()])?;
    w.write_record(["pooled".to_string(), r.accuracy.to_string()])?;
    w.flush().map_err(|e| Error::io(out, e))?;

    let mut w = csv::Writer::from_path(out.join(format!("confusion_{}.csv", r.method)))?;
    let mut header = vec!["true\\pred".to_string()];
    header.extend(r.class_order.iter().map(|c| c.to_string()));
    w.write_record(&header)?;
    for (i, c) in r.class_order.iter().enumerate() {
        let mut rec = vec![c.to_string()];
        rec.extend(r.confusion[i].iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;

    let mut text = format!(
        "method {}  n_t {}  n_n {}  repeats {}\naccuracy {:.4} (mean {:.4}, max {:.4})\n\n",
        r.method,
        r.n_t,
        r.n_n.map_or("-".to_string(), |n| n.to_string()),
        r.repeats,
        r.accuracy,
        r.mean_accuracy,
        r.max_accuracy
    );
    text.push_str(&eval::render_confusion(&r.confusion, &r.class_order));
    write_text(&out.join(format!("confusion_{}.txt", r.method)), &text)
}

pub fn cmd_eval(a: EvalArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_common(&a.common)?;
    let dir = input_dir(&cfg, a.input)?;
    if let Some(m) = &a.method {
        cfg.training.methods = parse_methods(m)?;
    }
    if let Some(v) = a.nt {
        cfg.training.n_t = v;
    }
    if let Some(v) = a.nn {
        cfg.training.n_n = v;
    }
    if let Some(v) = a.repeats {
        cfg.training.repeats = v;
    }
    let (raster, labels) = read_raster_dir(&dir)?;
    let out = cfg.out_dir()?;
    for &method in &cfg.training.methods {
        let r = eval::cross_validate(
            &raster,
            &labels,
            &CvConfig {
                method,
                n_t: cfg.training.n_t,
                n_n: (method == Method::Significance).then_some(cfg.training.n_n),
                repeats: cfg.training.repeats,
                seed: cfg.cv_seed(),
            },
        )?;
        write_eval(&out, &r)?;
    }
    write_json(
        &out.join("eval_manifest.json"),
        &serde_json::json!({
            "command": "eval",
            "version": env!("CARGO_PKG_VERSION"),
            "master_seed": cfg.seed,
            "cv_seed": cfg.cv_seed(),
            "n_points": raster.n_rows(),
            "n_v": raster.n_v(),
            "config": cfg,
        }),
    )
}

pub fn write_sweep(out: &Path, r: &SweepResult) -> Result<()> {
    let stem = format!("sweep_{}", r.method);
    write_json(&out.join(format!("{stem}.json")), r)?;
    let mut w = csv::Writer::from_path(out.join(format!("{stem}.csv")))?;
    w.write_record([
        "n_t",
        "best_mean_accuracy",
        "best_n_n",
        "best_cell_max_accuracy",
        "peak_max_accuracy",
    ])?;
    for row in &r.rows {
        w.write_record([
            row.n_t.to_string(),
            row.best_accuracy.to_string(),
            row.best_n_n.map_or(String::new(), |n| n.to_string()),
            row.best_cell_max_accuracy.to_string(),
            row.peak_max_accuracy.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    let mut w = csv::Writer::from_path(out.join(format!("{stem}_cells.csv")))?;
    w.write_record(["n_t", "n_n", "mean_accuracy", "max_accuracy"])?;
    for c in &r.cells {
        w.write_record([
            c.n_t.to_string(),
            c.n_n.map_or(String::new(), |n| n.to_string()),
            c.mean_accuracy.to_string(),
            c.max_accuracy.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    Ok(())
}

pub fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_common(&a.common)?;
    let dir = input_dir(&cfg, a.input)?;
    if let Some(m) = &a.method {
        cfg.training.methods = parse_methods(m)?;
    }
    if let Some(g) = &a.nt {
        cfg.training.n_t_grid = parse_grid(g)?;
    }
    if let Some(g) = &a.nn {
        cfg.training.n_n_grid = parse_grid(g)?;
    }
    if let Some(v) = a.repeats {
        cfg.training.repeats = v;
    }
    let (raster, labels) = read_raster_dir(&dir)?;
    let out = cfg.out_dir()?;
    for &method in &cfg.training.methods {
        let r = eval::sweep(
            &raster,
            &labels,
            &SweepConfig {
                method,
                n_t_grid: cfg.training.n_t_grid.clone(),
                n_n_grid: cfg.training.n_n_grid.clone(),
                repeats: cfg.training.repeats,
                seed: cfg.cv_seed(),
            },
        )?;
        write_sweep(&out, &r)?;
    }
    write_json(
        &out.join("sweep_manifest.json"),
        &serde_json::json!({
            "command": "sweep",
            "version": env!("CARGO_PKG_VERSION"),
            "master_seed": cfg.seed,
            "cv_seed": cfg.cv_seed(),
            "n_points": raster.n_rows(),
            "n_v": raster.n_v(),
            "config": cfg,
        }),
    )
}

pub fn cmd_report(a: ReportArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_common(&a.common)?;
    let dir = input_dir(&cfg, a.input)?;
    let (raster, labels) = read_raster_dir(&dir)?;
    let out = cfg.out_dir()?;

    let map = eval::temporal_map(&raster, &labels)?;
    map.write_csv(&out.join("temporal_map.csv"))?;
    write_json(
        &out.join("temporal_map.json"),
        &serde_json::json!({
            "n_rows": map.raster.n_rows(),
            "n_v": map.raster.n_v(),
            "boundary": map.boundary,
            "class_order": BINARY_CLASSES,
        }),
    )?;

    // Significance table and binary weights over the whole raster.
    let all = TrainingSet::new(raster.clone(), labels.clone(), BINARY_CLASSES.to_vec())?;
    let table = training::score(training::count_spikes(&all));
    let mut w = csv::Writer::from_path(out.join("significance_table.csv"))?;
    w.write_record(["node", "s_neg", "s_pos", "z_neg", "z_pos"])?;
    for n in 0..table.n_v() {
        w.write_record([
            n.to_string(),
            table.s[(n, 0)].to_string(),
            table.s[(n, 1)].to_string(),
            table.z[(n, 0)].to_string(),
            table.z[(n, 1)].to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&out, e))?;
    if raster.n_v() > 0 {
        let n_n = cfg.training.n_n.clamp(1, raster.n_v());
        let weights = training::weights_from_table(&table, n_n)?;
        let mut w = csv::Writer::from_path(out.join("significance_weights.csv"))?;
        w.write_record(["node", "w_neg", "w_pos"])?;
        for n in 0..weights.n_v() {
            if weights.w.row(n).iter().any(|&x| x != 0.0) {
                w.write_record([
                    n.to_string(),
                    weights.w[(n, 0)].to_string(),
                    weights.w[(n, 1)].to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(&out, e))?;
    }

    let mut summary = format!(
        "raster: {} datapoints x {} nodes, spike density {:.4}\nclass boundary at map row {}\n",
        raster.n_rows(),
        raster.n_v(),
        raster.density(),
        map.boundary
    );
    for method in [Method::Ols, Method::Significance] {
        let p = dir.join(format!("eval_{method}.json"));
        if p.exists() {
            let r: EvalResult = read_json(&p)?;
            summary.push_str(&format!(
                "\neval {}: n_t {} n_n {} repeats {} -> accuracy {:.4} (max {:.4})\n",
                method,
                r.n_t,
                r.n_n.map_or("-".into(), |n| n.to_string()),
                r.repeats,
                r.accuracy,
                r.max_accuracy
            ));
            summary.push_str(&eval::render_confusion(&r.confusion, &r.class_order));
        }
        let p = dir.join(format!("sweep_{method}.json"));
        if p.exists() {
            let r: SweepResult = read_json(&p)?;
            if let Some(best) = r.rows.iter().max_by(|a, b| {
                a.best_accuracy
                    .total_cmp(&b.best_accuracy)
                    .then(b.n_t.cmp(&a.n_t))
            }) {
                summary.push_str(&format!(
                    "\nsweep {}: best mean accuracy {:.4} at n_t {} n_n {}\n",
                    method,
                    best.best_accuracy,
                    best.n_t,
                    best.best_n_n.map_or("-".into(), |n| n.to_string())
                ));
            }
        }
    }
    write_text(&out.join("summary.txt"), &summary)
}
