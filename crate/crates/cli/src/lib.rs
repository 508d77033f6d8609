//! Command-line front end: `track`, `eval`, `tune`, `bench` and `synth`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use eotrack::image::RgbImage;
use eotrack::metrics::{self, RunSummary, Spread};
use eotrack::sequence::{
    self, Annotations, RunReport, Sequence, SequenceError, SequenceSpec, SyntheticSequence,
    SyntheticSpec,
};
use eotrack::tracker::{self, TrackRun, TrackerConfig};
use serde::{Deserialize, Serialize};

/// Default number of repetitions for `eval`, `tune` and `bench`.
pub const DEFAULT_REPS: usize = 10;

#[derive(Debug, Parser)]
#[command(name = "eotrack", version, about = "Detection-free EO object tracker")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track a sequence once (or `--reps` times) and write outputs.
    Track(RunArgs),
    /// Repeated seeded runs (default 10) with mean and max-min spread.
    Eval(RunArgs),
    /// Sweep population size x iteration count, reporting median/max/min overlap.
    Tune(TuneArgs),
    /// Compare EO and EO_LR tracking speed.
    Bench(BenchArgs),
    /// Write a synthetic sequence to disk.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Full resolution.
    Eo,
    /// Downscale objects at or above the size threshold.
    #[value(name = "eo_lr", alias = "eo-lr")]
    EoLr,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Eo => "EO",
            Mode::EoLr => "EO_LR",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SourceArgs {
    /// Sequence file (TOML) describing frames and ground truth.
    #[arg(long, conflicts_with = "synthetic")]
    pub seq: Option<PathBuf>,
    /// Synthetic spec (TOML) rendered in memory instead of reading frames.
    #[arg(long)]
    pub synthetic: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrackerArgs {
    /// Tracker settings (TOML); flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Population size per object.
    #[arg(long)]
    pub n: Option<usize>,
    /// EO iterations per frame.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub resize_threshold: Option<f64>,
    #[arg(long)]
    pub resize_scale: Option<f64>,
    /// Search objects one after another instead of concurrently.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub tracker: TrackerArgs,
    /// Seeded repetitions (seed, seed+1, ...). Defaults: track 1, eval 10.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, env = "EOTRACK_OUT_DIR", default_value = "eotrack-out")]
    pub out: PathBuf,
    /// Also write PNG frames with predicted boxes.
    #[arg(long)]
    pub annotate: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub tracker: TrackerArgs,
    /// Population sizes to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [6, 8, 10, 12, 14, 16, 18, 20, 22, 24])]
    pub pops: Vec<usize>,
    /// Iteration counts to sweep.
    #[arg(long = "iter-grid", value_delimiter = ',', default_values_t = [1, 2, 3, 4, 5, 6])]
    pub iter_grid: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long, env = "EOTRACK_OUT_DIR", default_value = "eotrack-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub tracker: TrackerArgs,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long, env = "EOTRACK_OUT_DIR", default_value = "eotrack-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Synthetic spec (TOML); the built-in spec is used when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Override the spec's noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "EOTRACK_OUT_DIR", default_value = "eotrack-out")]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Track(args) => cmd_track(&args, 1).map(drop),
        Command::Eval(args) => cmd_track(&args, DEFAULT_REPS).map(drop),
        Command::Tune(args) => cmd_tune(&args).map(drop),
        Command::Bench(args) => cmd_bench(&args).map(drop),
        Command::Synth(args) => cmd_synth(&args).map(drop),
    }
}

/// Frames plus ground truth, from disk or rendered in memory.
pub enum Source {
    Disk(Sequence),
    Memory(SyntheticSequence),
}

impl Source {
    pub fn load(args: &SourceArgs) -> Result<Self> {
        match (&args.seq, &args.synthetic) {
            (Some(path), _) => Ok(Source::Disk(
                sequence::load_sequence(path)
                    .with_context(|| format!("loading sequence {}", path.display()))?,
            )),
            (None, Some(path)) => {
                let spec = read_toml::<SyntheticSpec>(path)?;
                Ok(Source::Memory(sequence::generate_synthetic(&spec)?))
            }
            (None, None) => bail!("either --seq or --synthetic is required"),
        }
    }

    pub fn spec(&self) -> &SequenceSpec {
        match self {
            Source::Disk(s) => &s.spec,
            Source::Memory(s) => &s.spec,
        }
    }

    pub fn frames(&self) -> Box<dyn Iterator<Item = Result<RgbImage, SequenceError>> + '_> {
        match self {
            Source::Disk(s) => Box::new(s.frames()),
            Source::Memory(s) => Box::new(s.frames.iter().cloned().map(Ok)),
        }
    }
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Effective tracker configuration: preset by object count, overlaid by the
/// config file's keys, then by flags. A missing seed is drawn once and reported.
pub fn resolve_config(args: &TrackerArgs, objects: usize) -> Result<TrackerConfig> {
    let mut config = TrackerConfig::preset_for(objects);
    if let Some(path) = &args.config {
        let overrides: toml::Table = read_toml(path)?;
        let mut merged = toml::Table::try_from(&config).context("encoding preset")?;
        merged.extend(overrides);
        config = merged.try_into().with_context(|| format!("parsing {}", path.display()))?;
    }
    if let Some(mode) = args.mode {
        config.lower_resolution = mode == Mode::EoLr;
    }
    if let Some(n) = args.n {
        config.population_size = n;
    }
    if let Some(iters) = args.iters {
        config.iterations = iters;
    }
    if let Some(t) = args.resize_threshold {
        config.resize_threshold = t;
    }
    if let Some(s) = args.resize_scale {
        config.resize_scale = s;
    }
    if args.sequential {
        config.parallel = false;
    }
    config.rng_seed = Some(args.seed.or(config.rng_seed).unwrap_or_else(rand_seed));
    config.validate().context("invalid tracker configuration")?;
    Ok(config)
}

fn rand_seed() -> u64 {
    use std::hash::{BuildHasher, RandomState};
    RandomState::new().hash_one(std::time::SystemTime::now())
}

/// Runs one seeded pass and scores it against the ground truth.
pub fn run_once(source: &Source, config: &TrackerConfig) -> Result<(TrackRun, RunSummary)> {
    let spec = source.spec();
    let run = tracker::track_sequence(source.frames(), &spec.objects, config)?;
    let scores = metrics::score_trajectories(&run.trajectories, &spec.ground_truth);
    let summary = metrics::summarize(&scores, &run.frame_times)?;
    Ok((run, summary))
}

fn config_echo(config: &TrackerConfig, mode: Mode) -> serde_json::Value {
    let mut value = serde_json::to_value(config).expect("config serializes");
    value["mode"] = serde_json::to_value(mode).expect("mode serializes");
    value
}

fn mode_of(config: &TrackerConfig) -> Mode {
    if config.lower_resolution {
        Mode::EoLr
    } else {
        Mode::Eo
    }
}

/// Per-object aggregate over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectAggregate {
    pub object_id: u32,
    pub iou: Spread,
    pub center_error: Spread,
    pub fn_rate: Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub sequence: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub objects: Vec<ObjectAggregate>,
    pub mean_iou: Spread,
    pub mean_center_error: Spread,
    pub fn_rate: Spread,
    pub fps: Spread,
}

fn aggregate(
    source: &Source,
    config: &TrackerConfig,
    seeds: Vec<u64>,
    summaries: &[RunSummary],
) -> Aggregate {
    let spread = |f: &dyn Fn(&RunSummary) -> f64| {
        Spread::of(&summaries.iter().map(f).collect::<Vec<_>>()).expect("at least one run")
    };
    let objects = summaries[0]
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| ObjectAggregate {
            object_id: o.object_id,
            iou: spread(&|s| s.objects[i].mean_iou),
            center_error: spread(&|s| s.objects[i].mean_center_error),
            fn_rate: spread(&|s| s.objects[i].fn_rate),
        })
        .collect();
    Aggregate {
        sequence: source.spec().name.clone(),
        config: config_echo(config, mode_of(config)),
        seeds,
        objects,
        mean_iou: spread(&|s| s.mean_iou),
        mean_center_error: spread(&|s| s.mean_center_error),
        fn_rate: spread(&|s| s.fn_rate),
        fps: spread(&|s| s.fps),
    }
}

fn print_aggregate(agg: &Aggregate, reps: usize) {
    println!("sequence {}  runs {}  config {}", agg.sequence, reps, agg.config);
    println!(
        "{:>6}  {:>9} {:>9}  {:>9} {:>9}  {:>9}",
        "object", "avg IoU", "max-min", "avg E-D", "max-min", "FN rate %"
    );
    for o in &agg.objects {
        println!(
            "{:>6}  {:>9.3} {:>9.3}  {:>9.2} {:>9.2}  {:>9.2}",
            o.object_id,
            o.iou.mean,
            o.iou.range(),
            o.center_error.mean,
            o.center_error.range(),
            o.fn_rate.mean
        );
    }
    println!(
        "{:>6}  {:>9.3} {:>9.3}  {:>9.2} {:>9.2}  {:>9.2}",
        "all",
        agg.mean_iou.mean,
        agg.mean_iou.range(),
        agg.mean_center_error.mean,
        agg.mean_center_error.range(),
        agg.fn_rate.mean
    );
    println!("FPS {:.2} (min {:.2}, max {:.2})", agg.fps.mean, agg.fps.min, agg.fps.max);
}

/// `track` / `eval`: `reps` seeded runs (seed, seed+1, ...). A single run
/// writes straight into the output directory; repeated runs write one
/// sub-directory per run plus `aggregate.json`.
pub fn cmd_track(args: &RunArgs, default_reps: usize) -> Result<Aggregate> {
    let source = Source::load(&args.source)?;
    let config = resolve_config(&args.tracker, source.spec().objects.len())?;
    let reps = args.reps.unwrap_or(default_reps);
    if reps == 0 {
        bail!("--reps must be at least 1");
    }
    let base = config.rng_seed.expect("resolved config has a seed");
    let mut seeds = Vec::with_capacity(reps);
    let mut summaries = Vec::with_capacity(reps);
    for r in 0..reps {
        let seed = base.wrapping_add(r as u64);
        let rep_config = TrackerConfig { rng_seed: Some(seed), ..config.clone() };
        let (run, summary) = run_once(&source, &rep_config)?;
        let dir = if reps == 1 { args.out.clone() } else { args.out.join(format!("run_{r:02}")) };
        let spec = source.spec();
        let report = RunReport {
            sequence: spec.name.clone(),
            seed,
            config: config_echo(&rep_config, mode_of(&rep_config)),
            frames: run.trajectories.first().map_or(0, |t| t.boxes.len()),
            evaluations_per_object_frame: rep_config.evaluations_per_object(),
            summary: summary.clone(),
        };
        let records =
            sequence::build_records(&run.trajectories, &spec.ground_truth, &run.frame_times);
        let annotations = args
            .annotate
            .then(|| Annotations { frames: source.frames(), trajectories: &run.trajectories });
        sequence::write_outputs(&dir, &report, &records, annotations)
            .with_context(|| format!("writing outputs to {}", dir.display()))?;
        seeds.push(seed);
        summaries.push(summary);
    }
    let agg = aggregate(&source, &config, seeds, &summaries);
    if reps > 1 {
        let path = args.out.join("aggregate.json");
        fs::write(&path, serde_json::to_string_pretty(&agg)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    print_aggregate(&agg, reps);
    Ok(agg)
}

/// One cell of the tuning grid: mean overlap statistics over seeded runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneCell {
    pub iterations: usize,
    pub population: usize,
    pub median: f64,
    pub max: f64,
    pub min: f64,
}

/// Runs `reps` seeded passes per (population, iterations) cell. Cells are
/// ordered iteration-major, population-minor.
pub fn tune_grid(
    source: &Source,
    config: &TrackerConfig,
    pops: &[usize],
    iter_grid: &[usize],
    reps: usize,
) -> Result<Vec<TuneCell>> {
    let base = config.rng_seed.expect("resolved config has a seed");
    let jobs: Vec<(usize, usize, usize)> = iter_grid
        .iter()
        .flat_map(|&it| pops.iter().flat_map(move |&n| (0..reps).map(move |r| (it, n, r))))
        .collect();
    for &(it, n, _) in &jobs {
        TrackerConfig { population_size: n, iterations: it, ..config.clone() }
            .validate()
            .with_context(|| format!("grid cell n={n}, iterations={it}"))?;
    }
    let run_job = |&(it, n, r): &(usize, usize, usize)| -> Result<f64> {
        let cfg = TrackerConfig {
            population_size: n,
            iterations: it,
            rng_seed: Some(base.wrapping_add(r as u64)),
            parallel: false,
            ..config.clone()
        };
        Ok(run_once(source, &cfg)?.1.mean_iou)
    };
    #[cfg(feature = "parallel")]
    let overlaps: Vec<f64> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run_job).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let overlaps: Vec<f64> = jobs.iter().map(run_job).collect::<Result<_>>()?;

    Ok(overlaps
        .chunks(reps)
        .zip(jobs.chunks(reps))
        .map(|(values, job)| {
            let spread = Spread::of(values).expect("reps >= 1");
            TuneCell {
                iterations: job[0].0,
                population: job[0].1,
                median: metrics::median(values).expect("reps >= 1"),
                max: spread.max,
                min: spread.min,
            }
        })
        .collect())
}

pub fn write_tune_csv(path: &Path, cells: &[TuneCell]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for cell in cells {
        w.serialize(cell)?;
    }
    w.flush()?;
    Ok(())
}

/// `tune`: the population x iteration sweep, written to `tune.csv`.
pub fn cmd_tune(args: &TuneArgs) -> Result<Vec<TuneCell>> {
    if args.reps == 0 || args.pops.is_empty() || args.iter_grid.is_empty() {
        bail!("tune needs at least one population size, one iteration count and one repetition");
    }
    let source = Source::load(&args.source)?;
    let config = resolve_config(&args.tracker, source.spec().objects.len())?;
    let cells = tune_grid(&source, &config, &args.pops, &args.iter_grid, args.reps)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_tune_csv(&args.out.join("tune.csv"), &cells)?;
    fs::write(
        args.out.join("tune_config.json"),
        serde_json::to_string_pretty(&config_echo(&config, mode_of(&config)))?,
    )?;

    print!("{:<10}{:<8}", "", "n");
    args.pops.iter().for_each(|n| print!("{n:>7}"));
    println!();
    for row in cells.chunks(args.pops.len()) {
        for (label, pick) in [
            ("median", (|c: &TuneCell| c.median) as fn(&TuneCell) -> f64),
            ("max", |c| c.max),
            ("min", |c| c.min),
        ] {
            print!("Iter={:<5}{:<8}", row[0].iterations, label);
            row.iter().for_each(|c| print!("{:>7.3}", pick(c)));
            println!();
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeBench {
    pub mode: Mode,
    pub scales: Vec<f64>,
    pub fps: Vec<f64>,
    pub mean_iou: Vec<f64>,
    pub evaluations_per_object_frame: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub sequence: String,
    pub config: serde_json::Value,
    pub eo: ModeBench,
    pub eo_lr: ModeBench,
}

impl BenchReport {
    /// Repetitions in which EO_LR ran faster than EO.
    pub fn lr_faster_count(&self) -> usize {
        self.eo.fps.iter().zip(&self.eo_lr.fps).filter(|(eo, lr)| lr > eo).count()
    }
}

/// Runs EO and EO_LR back to back for each seed so both see the same load.
pub fn bench_modes(source: &Source, config: &TrackerConfig, reps: usize) -> Result<BenchReport> {
    let base = config.rng_seed.expect("resolved config has a seed");
    let mut modes = [Mode::Eo, Mode::EoLr].map(|mode| ModeBench {
        mode,
        scales: Vec::new(),
        fps: Vec::new(),
        mean_iou: Vec::new(),
        evaluations_per_object_frame: config.evaluations_per_object(),
    });
    for r in 0..reps {
        for bench in modes.iter_mut() {
            let cfg = TrackerConfig {
                lower_resolution: bench.mode == Mode::EoLr,
                rng_seed: Some(base.wrapping_add(r as u64)),
                ..config.clone()
            };
            let (run, summary) = run_once(source, &cfg)?;
            bench.scales = run.trajectories.iter().map(|t| t.scale).collect();
            bench.fps.push(summary.fps);
            bench.mean_iou.push(summary.mean_iou);
        }
    }
    let [eo, eo_lr] = modes;
    Ok(BenchReport {
        sequence: source.spec().name.clone(),
        config: config_echo(config, mode_of(config)),
        eo,
        eo_lr,
    })
}

/// `bench`: FPS of both modes over `reps` seeded runs, written to `bench.json`.
pub fn cmd_bench(args: &BenchArgs) -> Result<BenchReport> {
    if args.reps == 0 {
        bail!("--reps must be at least 1");
    }
    let source = Source::load(&args.source)?;
    let config = resolve_config(&args.tracker, source.spec().objects.len())?;
    let report = bench_modes(&source, &config, args.reps)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    fs::write(args.out.join("bench.json"), serde_json::to_string_pretty(&report)?)?;

    let sizes: Vec<String> =
        source.spec().objects.iter().map(|(_, b)| format!("({}*{})", b.width, b.height)).collect();
    println!("sequence {}  object size {}  runs {}", report.sequence, sizes.join("+"), args.reps);
    println!(
        "{:<6} {:>10} {:>10} {:>10} {:>9} {:>14}  scales",
        "mode", "avg FPS", "min FPS", "max FPS", "avg IoU", "evals/obj/frm"
    );
    for bench in [&report.eo, &report.eo_lr] {
        let fps = Spread::of(&bench.fps).expect("reps >= 1");
        let iou = Spread::of(&bench.mean_iou).expect("reps >= 1");
        println!(
            "{:<6} {:>10.2} {:>10.2} {:>10.2} {:>9.3} {:>14}  {:?}",
            bench.mode.label(),
            fps.mean,
            fps.min,
            fps.max,
            iou.mean,
            bench.evaluations_per_object_frame,
            bench.scales
        );
    }
    println!("EO_LR faster in {}/{} runs", report.lr_faster_count(), args.reps);
    Ok(report)
}

/// `synth`: renders a synthetic spec into a sequence directory.
pub fn cmd_synth(args: &SynthArgs) -> Result<PathBuf> {
    let mut spec = match &args.spec {
        Some(path) => read_toml::<SyntheticSpec>(path)?,
        None => SyntheticSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let seq = sequence::generate_synthetic(&spec)?;
    let path = sequence::write_sequence_dir(&args.out, &seq)?;
    fs::write(args.out.join("synthetic.toml"), toml::to_string(&spec)?)?;
    println!(
        "wrote {} frames, {} objects: {}",
        seq.frames.len(),
        seq.spec.objects.len(),
        path.display()
    );
    Ok(path)
}
