//! Command-line front end. Every command is a pure function of the config
//! file, flags and seed; the only wall-clock data lands in `run_summary.json`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{generate_dataset, load_manifest, GenerationConfig, Split, SplitView};
use crate::detector::{
    evaluate, load_model, save_model, train, DetectorModel, JnetHeader, NetworkSpec, TrainConfig,
    JNET_MAGIC,
};
use crate::error::{Error, Result};
use crate::hopsim::{
    run_simulation, ChannelPlan, HopPolicyConfig, JammerProcess, ModelPredictor, PredictionSource,
    SimulationReport,
};
use crate::raster::{JgrdHeader, RasterProfile, JGRD_MAGIC};
use crate::rng;
use crate::synth::{
    gen_ofdm, BroadbandParams, ChirpParams, EnvelopeMode, JammerSpec, JsiqHeader, MultiToneParams,
    OfdmConfig, SampleBuffer, SawtoothSweepParams, SingleToneParams, DEFAULT_SAMPLE_RATE_HZ,
    DEFAULT_SLOT_DURATION_S, JSIQ_MAGIC,
};

/// Default output directory when neither `--out` nor the config sets one.
pub const OUT_DIR_ENV: &str = "JAMLAB_OUT";
const FALLBACK_OUT_DIR: &str = "jamlab-out";
const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "jamlab", version, about = "Jamming synthesis, detection and hopping workbench")]
pub struct Cli {
    /// TOML file with per-command sections; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render one waveform to a JSIQ file, optionally with raster and spectrum.
    Synth(SynthArgs),
    /// Generate a labelled dataset (manifest plus grids).
    Dataset(DatasetArgs),
    /// Train the detector on a dataset's train split.
    Train(TrainArgs),
    /// Score a checkpoint on one split of a dataset.
    Eval(EvalArgs),
    /// Replay a jammer against the hopping policy.
    Simulate(SimulateArgs),
    /// Print the header of a JSIQ, JGRD or JNET file.
    Inspect { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Canonical,
    Reduced,
}

impl Profile {
    fn raster(self) -> RasterProfile {
        match self {
            Profile::Canonical => RasterProfile::CANONICAL,
            Profile::Reduced => RasterProfile::REDUCED,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(subcommand)]
    pub kind: SynthKind,
    #[arg(long, global = true)]
    pub sample_rate: Option<f64>,
    #[arg(long, global = true, value_name = "SECONDS")]
    pub duration: Option<f64>,
    /// Also render the waveform to a JGRD grid.
    #[arg(long, global = true)]
    pub raster: bool,
    #[arg(long, global = true, value_enum)]
    pub profile: Option<Profile>,
    /// Also write a frequency/power table.
    #[arg(long, global = true)]
    pub spectrum: bool,
    /// Output file stem; defaults to the waveform kind.
    #[arg(long, global = true)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum SynthKind {
    SingleTone {
        #[arg(long, default_value_t = 1.0)]
        power: f64,
        #[arg(long)]
        freq: f64,
        #[arg(long, default_value_t = 0.0)]
        phase: f64,
    },
    MultiTone {
        /// Comma-separated tone frequencies in Hz.
        #[arg(long, value_delimiter = ',', required = true)]
        freqs: Vec<f64>,
        /// Power of each tone.
        #[arg(long, default_value_t = 1.0)]
        power: f64,
    },
    Chirp {
        #[arg(long, default_value_t = 1.0)]
        power: f64,
        #[arg(long, default_value_t = 0.0)]
        f0: f64,
        /// Hz per second.
        #[arg(long, allow_negative_numbers = true)]
        slope: f64,
        #[arg(long, default_value_t = 0.0)]
        phase: f64,
    },
    Sawtooth {
        #[arg(long, default_value_t = 1.0)]
        power: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        carrier: f64,
        #[arg(long, allow_negative_numbers = true)]
        slope: f64,
        /// Sweep period in seconds.
        #[arg(long)]
        period: f64,
        #[arg(long, value_enum, default_value_t = Envelope::Constant)]
        envelope: Envelope,
        #[arg(long, default_value_t = 0.0)]
        phase: f64,
    },
    Broadband {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        jam_center: f64,
        #[arg(long)]
        jam_bandwidth: f64,
        #[arg(long, default_value_t = 1e5)]
        channel_bandwidth: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        comm_center: f64,
    },
    /// Clean QPSK-OFDM traffic.
    Ofdm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Envelope {
    Constant,
    GaussianNoise,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory or manifest file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JammerArg {
    Static,
    Sweep,
    Random,
    Broadband,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorArg {
    Oracle,
    AlwaysClear,
    Random,
    Model,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub jammer: Option<JammerArg>,
    /// Static jammer channels, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub channels: Vec<usize>,
    #[arg(long)]
    pub period: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Channels taken per slot by the random hopper.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub jam_center_hz: Option<f64>,
    #[arg(long)]
    pub jam_width_hz: Option<f64>,
    #[arg(long, value_enum)]
    pub predictor: Option<PredictorArg>,
    /// Checkpoint for the model predictor.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dataset whose generation settings and statistics the model was trained on.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub p_jammed: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Channels per hop, or "none" for unlimited.
    #[arg(long, value_parser = parse_limit)]
    pub shift_limit: Option<ShiftLimit>,
    #[arg(long)]
    pub initial_channel: Option<usize>,
    #[arg(long)]
    pub n_channels: Option<usize>,
    #[arg(long)]
    pub slots: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct ShiftLimit(Option<usize>);

fn parse_limit(s: &str) -> std::result::Result<ShiftLimit, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(ShiftLimit(None));
    }
    s.parse().map(|n| ShiftLimit(Some(n))).map_err(|_| format!("expected a channel count or 'none', got '{s}'"))
}

/// Contents of the `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub synth: SynthSection,
    pub dataset: GenerationConfig,
    pub train: TrainConfig,
    pub eval: EvalSection,
    pub simulate: SimulateSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub sample_rate_hz: Option<f64>,
    pub duration_s: Option<f64>,
    pub profile: Option<Profile>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub split: Split,
    pub threshold: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { split: Split::Test, threshold: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub plan: ChannelPlan,
    pub jammer: JammerProcess,
    pub policy: HopPolicyConfig,
    pub n_slots: usize,
    pub predictor: PredictorArg,
    pub p_jammed: f64,
    pub threshold: f64,
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            plan: ChannelPlan::default(),
            jammer: JammerProcess::Sweep { period_slots: 16, width: 1 },
            policy: HopPolicyConfig::default(),
            n_slots: 1000,
            predictor: PredictorArg::Oracle,
            p_jammed: 0.1,
            threshold: 0.5,
            model: None,
            data: None,
        }
    }
}

impl SimulateSection {
    /// Builds the prediction source and replays the configured slots.
    pub fn run(&self, seed: u64) -> Result<SimulationReport> {
        let source = match self.predictor {
            PredictorArg::Oracle => PredictionSource::Oracle,
            PredictorArg::AlwaysClear => PredictionSource::AlwaysClear,
            PredictorArg::Random => PredictionSource::Random { p_jammed: self.p_jammed, seed: rng::derive(seed, 2) },
            PredictorArg::Model => {
                let (Some(model), Some(data)) = (&self.model, &self.data) else {
                    return Err(Error::config("the model predictor needs a checkpoint and a dataset"));
                };
                let manifest = load_manifest(data)?;
                let p = ModelPredictor::new(load_model(model)?, manifest.generation_config, manifest.norm_stats, self.threshold)?;
                PredictionSource::TrainedModel(Box::new(p))
            }
        };
        run_simulation(&self.plan, &self.jammer, &source, &self.policy, self.n_slots, seed)
    }
}

/// Why a run failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Run(e.into())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 runtime or validation failure, 2 usage.
pub fn main_from<I, T>(args: I) -> i32
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
    match run(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

struct Ctx {
    seed: u64,
    out: PathBuf,
    quiet: bool,
    file: FileConfig,
}

impl Ctx {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        Ok(&self.out)
    }

    fn snapshot<S: Serialize>(&self, name: &str, command: &str, resolved: &S) -> Result<()> {
        #[derive(Serialize)]
        struct Snapshot<'a, S> {
            command: &'a str,
            seed: u64,
            out: &'a Path,
            config: &'a S,
        }
        let snap = Snapshot { command, seed: self.seed, out: &self.out, config: resolved };
        write_text(&self.out_dir()?.join(name), &(serde_json::to_string_pretty(&snap)? + "\n"))
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", p.display())))?
        }
        None => FileConfig::default(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| file.out.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR));
    let ctx = Ctx { seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED), out, quiet: cli.quiet, file };
    match cli.command {
        Command::Synth(a) => cmd_synth(&ctx, a),
        Command::Dataset(a) => cmd_dataset(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Eval(a) => cmd_eval(&ctx, a),
        Command::Simulate(a) => cmd_simulate(&ctx, a),
        Command::Inspect { file } => {
            println!("{}", inspect(&file)?);
            Ok(())
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize)]
struct SynthResolved {
    sample_rate_hz: f64,
    duration_s: f64,
    waveform: Waveform,
    raster: Option<RasterProfile>,
    spectrum: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Waveform {
    Jammer(JammerSpec),
    Ofdm(OfdmConfig),
}

fn synth_waveform(kind: &SynthKind, duration_s: f64, seed: u64) -> Waveform {
    let jam = match kind.clone() {
        SynthKind::SingleTone { power, freq, phase } => {
            JammerSpec::SingleTone(SingleToneParams { power_j: power, freq_hz: freq, phase_rad: phase })
        }
        SynthKind::MultiTone { freqs, power } => {
            JammerSpec::MultiTone(MultiToneParams::random_phases(&freqs, power, seed))
        }
        SynthKind::Chirp { power, f0, slope, phase } => JammerSpec::Chirp(ChirpParams {
            amplitude: power.max(0.0).sqrt(),
            f0_hz: f0,
            slope_hz_per_s: slope,
            phase_rad: phase,
            duration_s,
        }),
        SynthKind::Sawtooth { power, carrier, slope, period, envelope, phase } => {
            JammerSpec::Sawtooth(SawtoothSweepParams {
                amplitude_uj: power.max(0.0).sqrt(),
                carrier_hz: carrier,
                sweep_slope_hz_per_s: slope,
                sweep_period_s: period,
                envelope_mode: match envelope {
                    Envelope::Constant => EnvelopeMode::Constant,
                    Envelope::GaussianNoise => EnvelopeMode::GaussianNoise,
                },
                init_phase_rad: phase,
            })
        }
        SynthKind::Broadband { jam_center, jam_bandwidth, channel_bandwidth, comm_center } => {
            JammerSpec::Broadband(BroadbandParams {
                jam_center_hz: jam_center,
                jam_bandwidth_hz: jam_bandwidth,
                channel_bandwidth_hz: channel_bandwidth,
                comm_center_hz: comm_center,
            })
        }
        SynthKind::Ofdm => return Waveform::Ofdm(OfdmConfig::default()),
    };
    Waveform::Jammer(jam)
}

fn kind_stem(kind: &SynthKind) -> &'static str {
    match kind {
        SynthKind::SingleTone { .. } => "single_tone",
        SynthKind::MultiTone { .. } => "multi_tone",
        SynthKind::Chirp { .. } => "chirp",
        SynthKind::Sawtooth { .. } => "sawtooth",
        SynthKind::Broadband { .. } => "broadband",
        SynthKind::Ofdm => "ofdm",
    }
}

/// Two-column `frequency power` table, one DFT bin per line.
pub fn spectrum_table(buf: &SampleBuffer) -> String {
    let mut s = String::from("# freq_hz power\n");
    for (f, p) in buf.power_spectrum() {
        let _ = writeln!(s, "{f} {p:e}");
    }
    s
}

fn cmd_synth(ctx: &Ctx, a: SynthArgs) -> CliResult<()> {
    let sec = &ctx.file.synth;
    let fs_hz = a.sample_rate.or(sec.sample_rate_hz).unwrap_or(DEFAULT_SAMPLE_RATE_HZ);
    let duration_s = a.duration.or(sec.duration_s).unwrap_or(DEFAULT_SLOT_DURATION_S);
    let profile = a.profile.or(sec.profile).unwrap_or(Profile::Canonical);
    let waveform = synth_waveform(&a.kind, duration_s, ctx.seed);
    let buf = match &waveform {
        Waveform::Jammer(j) => j.generate(fs_hz, duration_s, ctx.seed)?,
        Waveform::Ofdm(cfg) => gen_ofdm(cfg, fs_hz, duration_s, ctx.seed)?,
    };
    let stem = a.name.clone().unwrap_or_else(|| kind_stem(&a.kind).to_string());
    let dir = ctx.out_dir()?;
    let iq = dir.join(format!("{stem}.jsiq"));
    buf.save(&iq)?;
    ctx.say(format!("wrote {} ({} samples at {fs_hz} Hz)", iq.display(), buf.len()));
    if a.raster {
        let path = dir.join(format!("{stem}.jgrd"));
        profile.raster().render(&buf)?.save(&path)?;
        ctx.say(format!("wrote {}", path.display()));
    }
    if a.spectrum {
        let path = dir.join(format!("{stem}_spectrum.txt"));
        write_text(&path, &spectrum_table(&buf))?;
        ctx.say(format!("wrote {}", path.display()));
    }
    let resolved = SynthResolved {
        sample_rate_hz: fs_hz,
        duration_s,
        waveform,
        raster: a.raster.then(|| profile.raster()),
        spectrum: a.spectrum,
    };
    ctx.snapshot(&format!("{stem}.resolved.json"), "synth", &resolved)?;
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn cmd_dataset(ctx: &Ctx, a: DatasetArgs) -> CliResult<()> {
    let mut cfg = ctx.file.dataset.clone();
    if let Some(n) = a.count {
        cfg.count = n;
    }
    if let Some(p) = a.profile {
        cfg.raster = p.raster();
    }
    if let Some(f) = a.train_fraction {
        cfg.train_fraction = f;
    }
    cfg.validate()?;
    let dir = ctx.out_dir()?;
    let m = generate_dataset(&cfg, ctx.seed, dir)?;
    ctx.snapshot("dataset.resolved.json", "dataset", &cfg)?;
    let (train_n, train_pos) = m.split_counts(Split::Train);
    let (test_n, test_pos) = m.split_counts(Split::Test);
    let manifest = dir.join(crate::dataset::MANIFEST_FILE);
    let bytes = fs::read(&manifest).map_err(|e| Error::io(&manifest, e))?;
    ctx.say(format!("{train_n} train / {test_n} test"));
    ctx.say(format!("jammed: {train_pos} train, {test_pos} test"));
    ctx.say(format!("manifest {} sha256 {}", manifest.display(), sha256_hex(&bytes)));
    Ok(())
}

fn dataset_root(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

#[derive(Debug, Serialize)]
struct TrainResolved<'a> {
    data: &'a Path,
    init_seed: u64,
    network: &'a NetworkSpec,
    train: &'a TrainConfig,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    started_unix_s: u64,
    finished_unix_s: u64,
    elapsed_s: f64,
    train_examples: usize,
    epochs: usize,
    final_mean_loss: f64,
    min_batch_loss: f64,
    fingerprint: String,
    checkpoint: PathBuf,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn cmd_train(ctx: &Ctx, a: TrainArgs) -> CliResult<()> {
    let mut cfg = ctx.file.train.clone();
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.lr {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.momentum {
        cfg.momentum = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    cfg.validate()?;
    let manifest = load_manifest(&a.data)?;
    let root = dataset_root(&a.data);
    let spec = NetworkSpec::for_input(manifest.generation_config.raster.crop_to);
    let view = SplitView::new(&manifest, &root, Split::Train);

    let dir = ctx.out_dir()?.to_path_buf();
    ctx.snapshot(
        "train.resolved.json",
        "train",
        &TrainResolved { data: &a.data, init_seed: ctx.seed, network: &spec, train: &cfg },
    )?;
    let started = unix_now();
    let clock = Instant::now();
    let mut model = DetectorModel::<f32>::init(spec, ctx.seed)?;
    ctx.say(format!("{:>5} {:>12} {:>14}", "epoch", "mean_loss", "min_batch_loss"));
    let history = train(&mut model, &view, &cfg, |e| {
        ctx.say(format!("{:>5} {:>12.6} {:>14.6}", e.epoch, e.mean_loss, e.min_batch_loss));
    })?;

    let ckpt = dir.join("model.jnet");
    save_model(&model, &ckpt)?;
    let mut table = String::from("epoch\tmean_loss\tmin_batch_loss\n");
    for e in &history.epochs {
        let _ = writeln!(table, "{}\t{}\t{}", e.epoch, e.mean_loss, e.min_batch_loss);
    }
    write_text(&dir.join("loss.tsv"), &table)?;
    let summary = RunSummary {
        started_unix_s: started,
        finished_unix_s: unix_now(),
        elapsed_s: clock.elapsed().as_secs_f64(),
        train_examples: view.records().len(),
        epochs: cfg.epochs,
        final_mean_loss: history.final_loss(),
        min_batch_loss: history.min_batch_loss(),
        fingerprint: format!("{:016x}", model.spec().fingerprint()),
        checkpoint: ckpt.clone(),
    };
    write_text(&dir.join("run_summary.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    ctx.say(format!(
        "wrote {} (final mean loss {:.6}, min batch loss {:.6})",
        ckpt.display(),
        summary.final_mean_loss,
        summary.min_batch_loss
    ));
    Ok(())
}

fn cmd_eval(ctx: &Ctx, a: EvalArgs) -> CliResult<()> {
    let split = a.split.map_or(ctx.file.eval.split, Split::from);
    let threshold = a.threshold.unwrap_or(ctx.file.eval.threshold);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::config(format!("threshold {threshold} outside [0, 1]")).into());
    }
    let model = load_model(&a.model)?;
    let manifest = load_manifest(&a.data)?;
    let view = SplitView::new(&manifest, &dataset_root(&a.data), split);
    let report = evaluate(&model, &view, threshold)?;

    #[derive(Serialize)]
    struct EvalResolved<'a> {
        model: &'a Path,
        data: &'a Path,
        split: Split,
        threshold: f64,
    }
    let resolved = EvalResolved { model: &a.model, data: &a.data, split, threshold };
    ctx.snapshot("eval.resolved.json", "eval", &resolved)?;
    let path = ctx.out_dir()?.join(format!("metrics_{}.json", split.as_str()));
    write_text(&path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    ctx.say(report.to_string());
    ctx.say(format!("wrote {}", path.display()));
    Ok(())
}

fn resolve_simulation(ctx: &Ctx, a: &SimulateArgs) -> CliResult<SimulateSection> {
    let mut s = ctx.file.simulate.clone();
    if let Some(n) = a.n_channels {
        s.plan.n_channels = n;
    }
    if let Some(kind) = a.jammer {
        let plan = &s.plan;
        s.jammer = match kind {
            JammerArg::Static => JammerProcess::StaticBand {
                channels: if a.channels.is_empty() { vec![0] } else { a.channels.clone() },
            },
            JammerArg::Sweep => JammerProcess::Sweep {
                period_slots: a.period.unwrap_or(16),
                width: a.width.unwrap_or(1),
            },
            JammerArg::Random => JammerProcess::RandomHopper {
                seed: rng::derive(ctx.seed, 1),
                count: a.count.unwrap_or(1),
            },
            JammerArg::Broadband => JammerProcess::Broadband {
                center_hz: a.jam_center_hz.unwrap_or_else(|| plan.center_hz(plan.n_channels / 2)),
                width_hz: a.jam_width_hz.unwrap_or(4.0 * plan.channel_bandwidth_hz),
            },
        };
    } else if !a.channels.is_empty()
        || a.period.is_some()
        || a.width.is_some()
        || a.count.is_some()
        || a.jam_center_hz.is_some()
        || a.jam_width_hz.is_some()
    {
        return Err(Failure::Usage("jammer parameters need --jammer".into()));
    }
    if let Some(p) = a.predictor {
        s.predictor = p;
    }
    if let Some(p) = a.p_jammed {
        s.p_jammed = p;
    }
    if let Some(t) = a.threshold {
        s.threshold = t;
    }
    if let Some(ShiftLimit(l)) = a.shift_limit {
        s.policy.shift_limit_channels = l;
    }
    if let Some(c) = a.initial_channel {
        s.policy.initial_channel = c;
    }
    if let Some(n) = a.slots {
        s.n_slots = n;
    }
    if a.model.is_some() {
        s.model = a.model.clone();
    }
    if a.data.is_some() {
        s.data = a.data.clone();
    }
    if s.predictor == PredictorArg::Model && (s.model.is_none() || s.data.is_none()) {
        return Err(Failure::Usage("the model predictor needs --model and --data".into()));
    }
    Ok(s)
}

fn cmd_simulate(ctx: &Ctx, a: SimulateArgs) -> CliResult<()> {
    let s = resolve_simulation(ctx, &a)?;
    let report = s.run(ctx.seed)?;
    ctx.snapshot("simulate.resolved.json", "simulate", &s)?;
    let dir = ctx.out_dir()?;
    write_text(&dir.join("slots.jsonl"), &report.slots_jsonl()?)?;
    write_text(&dir.join("summary.json"), &(report.summary_json()? + "\n"))?;
    let m = &report.summary;
    ctx.say(format!(
        "{} vs {}: delivered {}/{} (ratio {:.4}), {} hops, max hop {}, precision {:.3}, recall {:.3}",
        m.source,
        m.jammer,
        m.delivered,
        m.n_slots,
        m.delivery_ratio,
        m.hop_count,
        m.max_hop_distance,
        m.prediction.precision,
        m.prediction.recall
    ));
    Ok(())
}

/// Human-readable header of a JSIQ, JGRD or JNET file.
pub fn inspect(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let magic = bytes.get(..4).unwrap_or(&[]);
    let mut s = String::new();
    if magic == JSIQ_MAGIC {
        let h = JsiqHeader::parse(&bytes)?;
        let _ = writeln!(s, "format: JSIQ");
        let _ = writeln!(s, "version: {}", h.version);
        let _ = writeln!(s, "sample_rate_hz: {}", h.sample_rate_hz);
        let _ = writeln!(s, "samples: {}", h.n_samples);
        let _ = write!(s, "duration_s: {}", h.n_samples as f64 / h.sample_rate_hz);
    } else if magic == JGRD_MAGIC {
        let h = JgrdHeader::parse(&bytes)?;
        let _ = writeln!(s, "format: JGRD");
        let _ = writeln!(s, "version: {}", h.version);
        let _ = write!(s, "shape: {} x {} x {}", h.channels, h.height, h.width);
    } else if magic == JNET_MAGIC {
        let h = JnetHeader::parse(&bytes)?;
        let _ = writeln!(s, "format: JNET");
        let _ = writeln!(s, "version: {}", h.version);
        let _ = writeln!(s, "fingerprint: {:016x}", h.fingerprint);
        let _ = writeln!(s, "init_seed: {}", h.init_seed);
        let _ = writeln!(s, "parameters: {}", h.param_count);
        let _ = write!(s, "network: {}", serde_json::to_string(&h.spec)?);
    } else {
        return Err(Error::Format(format!("{}: not a JSIQ, JGRD or JNET file", path.display())));
    }
    Ok(s)
}
