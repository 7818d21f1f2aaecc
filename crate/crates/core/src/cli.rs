//! The `dpd-doa` command line.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 when the input data
//! or files are invalid.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::doa::{pick_doa, ArrayGeometry, Localizer, Method};
use crate::error::{Error, Result};
use crate::eval::{
    dpd_bins, run_condition, AccuracyReport, Condition, ConditionId, EvalMethod, EvalOptions,
    SAMPLE_RATE, SEGMENT_LEN,
};
use crate::io::{
    read_msk, read_wav, real_map_spectrogram, write_json, write_msk, write_spectrum_csv, write_spx,
    write_wav,
};
use crate::masking::{oracle_masks, DpdParams, MaskPair, DEFAULT_IRM0, DEFAULT_N_SELECT, DEFAULT_XI_N};
use crate::room::{
    noise_source, perturb_scene, render_scene, speech_shaped_source, SceneComponents, SceneConfig,
};
use crate::signal::TimeSignal;
use crate::stft::{band_bins, log_magnitude, stft, StftConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dpd-doa", version, about = "Direct-path dominance DOA estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene to mixture, direct, reverb and noise WAVs.
    Simulate(SimulateArgs),
    /// Compute oracle masks from rendered components.
    MaskOracle(MaskOracleArgs),
    /// Refine masks and write the selected bin set.
    Dpd(DpdArgs),
    /// Estimate the speaker DOA of a multichannel recording.
    Doa(DoaArgs),
    /// Run the evaluation protocol for one test condition.
    Eval(EvalArgs),
    /// Export the normalised log-magnitude map of one channel as `.spx`.
    ExportSpec(ExportSpecArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene description (JSON).
    #[arg(long)]
    pub scene: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scene's `rng_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Geometry perturbation fraction; 0 renders the scene as written.
    #[arg(long, default_value_t = 0.1)]
    pub perturb: f64,
    /// Mono speech WAV; defaults to a seeded speech-shaped source of 2.072 s.
    #[arg(long)]
    pub speech: Option<PathBuf>,
    /// Mono noise WAV for directional noise; defaults to seeded pink noise.
    #[arg(long)]
    pub noise: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MaskOracleArgs {
    /// Directory holding direct.wav, reverb.wav and noise.wav.
    #[arg(long)]
    pub components: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Reference microphone.
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
    #[arg(long, default_value_t = DEFAULT_XI_N)]
    pub xi: f64,
}

#[derive(Debug, Clone, Args)]
pub struct DpdFlags {
    /// Analysis band in Hz, `lo:hi`.
    #[arg(long, default_value = "1000:8000", value_parser = parse_band)]
    pub band: (f64, f64),
    #[arg(long, default_value_t = DEFAULT_N_SELECT)]
    pub n_select: usize,
    #[arg(long, default_value_t = DEFAULT_IRM0)]
    pub irm0: f64,
    #[arg(long, default_value_t = DEFAULT_XI_N)]
    pub xi: f64,
}

impl DpdFlags {
    fn params(&self, cfg: &StftConfig) -> Result<DpdParams> {
        let p = DpdParams {
            xi_n: self.xi,
            irm0: self.irm0,
            n_select: self.n_select,
            band: band_bins(cfg, self.band.0, self.band.1)?,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct DpdArgs {
    #[arg(long)]
    pub masks: PathBuf,
    /// Bin set (JSON).
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub dpd: DpdFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeometryArg {
    Ula,
    Uca,
}

impl GeometryArg {
    fn geometry(self) -> ArrayGeometry {
        match self {
            GeometryArg::Ula => ArrayGeometry::default_ula(),
            GeometryArg::Uca => ArrayGeometry::default_uca(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    SrpPhat,
    Music,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::SrpPhat => Method::SrpPhat,
            MethodArg::Music => Method::Music,
        }
    }
}

#[derive(Debug, Args)]
pub struct DoaArgs {
    /// Multichannel mixture WAV.
    #[arg(long)]
    pub input: PathBuf,
    /// Mask pair; without it every in-band bin is used.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "srp-phat")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "ula")]
    pub geometry: GeometryArg,
    /// Spectrum CSV; a JSON sidecar is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub dpd: DpdFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Test condition, I to VI.
    #[arg(long)]
    pub condition: String,
    /// SNR in dB; repeat for several.
    #[arg(long = "snr", allow_negative_numbers = true, conflicts_with = "clean")]
    pub snr: Vec<f64>,
    /// Disable noise instead of setting an SNR.
    #[arg(long)]
    pub clean: bool,
    #[arg(long, default_value_t = crate::eval::DEFAULT_TRIALS)]
    pub trials: usize,
    /// Comma-separated methods, e.g. `srp_phat_all,srp_phat_oracle`.
    #[arg(long, value_delimiter = ',', default_value = "srp_phat_all,music_all,srp_phat_oracle,music_oracle")]
    pub methods: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory of `.msk` files for the estimated variants.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// Replace the room with fully absorbing walls.
    #[arg(long)]
    pub anechoic: bool,
    #[arg(long, default_value_t = 0.1)]
    pub perturb: f64,
    /// Output directory for report.csv, summary.json and trials.jsonl.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub dpd: DpdFlags,
}

#[derive(Debug, Args)]
pub struct ExportSpecArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
}

fn parse_band(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo >= 0.0 && hi > lo) {
        return Err(format!("band {lo}:{hi} is empty"));
    }
    Ok((lo, hi))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::MaskOracle(a) => mask_oracle(&a),
        Command::Dpd(a) => dpd(&a),
        Command::Doa(a) => doa(&a),
        Command::Eval(a) => eval(&a),
        Command::ExportSpec(a) => export_spec(&a),
    }
}

fn mono(path: &Path) -> Result<TimeSignal> {
    let sig = read_wav(path)?;
    if sig.num_channels() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} has {} channels, expected mono",
            path.display(),
            sig.num_channels()
        )));
    }
    Ok(sig)
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let mut scene: SceneConfig = serde_json::from_str(&fs::read_to_string(&a.scene)?)?;
    if let Some(seed) = a.seed {
        scene.rng_seed = seed;
    }
    scene.validate()?;
    let seed = scene.rng_seed;
    let scene = perturb_scene(&scene, a.perturb, seed)?;
    let speech = match &a.speech {
        Some(p) => mono(p)?,
        None => speech_shaped_source(SEGMENT_LEN, SAMPLE_RATE, seed)?,
    };
    let noise = match &a.noise {
        Some(p) => mono(p)?,
        None => noise_source(speech.len(), speech.sample_rate(), seed.wrapping_add(1))?,
    };
    let c = quantized(render_scene(&scene, &speech, &noise)?)?;
    fs::create_dir_all(&a.out)?;
    for (name, sig) in [
        ("mixture", &c.mixture),
        ("direct", &c.direct),
        ("reverb", &c.reverb),
        ("noise", &c.noise),
    ] {
        write_wav(a.out.join(format!("{name}.wav")), sig)?;
    }
    write_json(a.out.join("scene.json"), &scene)?;
    println!("wrote {} samples x {} channels to {}", c.mixture.len(), c.mixture.num_channels(), a.out.display());
    Ok(())
}

/// Rounds the components to `f32` and re-forms the mixture in `f32`, so the
/// written mixture equals the sum of the written components exactly.
fn quantized(c: SceneComponents) -> Result<SceneComponents> {
    let round = |s: &TimeSignal| -> Result<TimeSignal> {
        TimeSignal::new(
            s.sample_rate(),
            s.channels()
                .iter()
                .map(|ch| ch.iter().map(|&v| f64::from(v as f32)).collect())
                .collect(),
        )
    };
    let (direct, reverb, noise) = (round(&c.direct)?, round(&c.reverb)?, round(&c.noise)?);
    let mixture = TimeSignal::new(
        direct.sample_rate(),
        (0..direct.num_channels())
            .map(|m| {
                direct
                    .channel(m)
                    .iter()
                    .zip(reverb.channel(m))
                    .zip(noise.channel(m))
                    .map(|((&d, &r), &n)| f64::from(d as f32 + r as f32 + n as f32))
                    .collect()
            })
            .collect(),
    )?;
    Ok(SceneComponents {
        direct,
        reverb,
        noise,
        mixture,
    })
}

fn mask_oracle(a: &MaskOracleArgs) -> Result<()> {
    let load = |name: &str| read_wav(a.components.join(format!("{name}.wav")));
    let (direct, reverb, noise) = (load("direct")?, load("reverb")?, load("noise")?);
    if [&reverb, &noise]
        .iter()
        .any(|s| s.len() != direct.len() || s.num_channels() != direct.num_channels())
    {
        return Err(Error::DimensionMismatch(
            "component files differ in length or channel count".into(),
        ));
    }
    let mixture = direct.add(&reverb)?.add(&noise)?;
    let components = SceneComponents {
        direct,
        reverb,
        noise,
        mixture,
    };
    let cfg = StftConfig {
        sample_rate: components.direct.sample_rate(),
        ..StftConfig::default()
    };
    let masks = oracle_masks(&components, &cfg, a.channel, a.xi)?;
    write_msk(&a.out, &masks)?;
    println!("wrote {} x {} masks to {}", masks.frames(), masks.bins(), a.out.display());
    Ok(())
}

fn load_masks(path: &Path, cfg: &StftConfig) -> Result<MaskPair> {
    read_msk(path)?.with_dc_restored(cfg.fft_size)
}

fn dpd(a: &DpdArgs) -> Result<()> {
    let cfg = StftConfig::default();
    let masks = load_masks(&a.masks, &cfg)?;
    let bins = dpd_bins(&masks, &a.dpd.params(&cfg)?)?;
    write_json(
        &a.out,
        &json!({ "n_bins": bins.len(), "bins": bins.as_slice() }),
    )?;
    println!("{} bins selected", bins.len());
    Ok(())
}

fn doa(a: &DoaArgs) -> Result<()> {
    let signal = read_wav(&a.input)?;
    let geometry = a.geometry.geometry();
    if signal.num_channels() != geometry.num_mics() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} channels, {:?} array has {} microphones",
            signal.num_channels(),
            a.geometry,
            geometry.num_mics()
        )));
    }
    let cfg = StftConfig {
        sample_rate: signal.sample_rate(),
        ..StftConfig::default()
    };
    let params = a.dpd.params(&cfg)?;
    let spec = stft(&signal, &cfg)?;
    let bins = match &a.masks {
        Some(p) => {
            let masks = load_masks(p, &cfg)?;
            if masks.frames() != spec.frames() {
                return Err(Error::DimensionMismatch(format!(
                    "masks have {} frames, input has {}",
                    masks.frames(),
                    spec.frames()
                )));
            }
            dpd_bins(&masks, &params)?
        }
        None => crate::masking::BinSet::full_band(spec.frames(), &params.band),
    };
    let method = Method::from(a.method);
    let loc = Localizer::new(geometry, cfg);
    let spectrum = loc.estimate(&spec, &bins, method)?;
    let est = pick_doa(&spectrum);
    println!("{est}");
    if let Some(out) = &a.out {
        write_spectrum_csv(out, &spectrum)?;
        write_json(
            out.with_extension("json"),
            &json!({
                "method": method.as_str(),
                "geometry": loc.geometry,
                "doa_deg": est,
                "n_bins": bins.len(),
                "masks": a.masks.as_ref().map(|p| p.display().to_string()),
                "band_hz": [params.band.f_lo, params.band.f_hi],
                "n_select": params.n_select,
                "irm0": params.irm0,
            }),
        )?;
    }
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let id: ConditionId = a.condition.parse()?;
    let methods = a
        .methods
        .iter()
        .map(|m| m.trim().parse::<EvalMethod>())
        .collect::<Result<Vec<_>>>()?;
    let mut opts = EvalOptions::new(methods, a.trials, a.seed)?;
    opts.perturbation = a.perturb;
    opts.anechoic = a.anechoic;
    opts.mask_dir = a.masks.clone();
    opts.dpd = a.dpd.params(&opts.stft)?;
    let snrs: Vec<Option<f64>> = if a.clean || (a.snr.is_empty() && a.anechoic) {
        vec![None]
    } else if a.snr.is_empty() {
        vec![Some(0.0)]
    } else {
        a.snr.iter().copied().map(Some).collect()
    };
    let cond = Condition::get(id);
    let mut report = AccuracyReport::default();
    for snr in snrs {
        report.merge(run_condition(&cond, snr, &opts)?);
    }
    fs::create_dir_all(&a.out)?;
    report.write_csv(a.out.join("report.csv"))?;
    report.write_trials_jsonl(a.out.join("trials.jsonl"))?;
    write_json(
        a.out.join("summary.json"),
        &json!({
            "condition": id,
            "seed": a.seed,
            "perturbation": a.perturb,
            "anechoic": a.anechoic,
            "entries": report.entries,
        }),
    )?;
    for e in &report.entries {
        let snr = e.snr_db.map_or("clean".to_string(), |s| format!("{s} dB"));
        println!("{} {snr} {}: {:.3} ({} trials)", e.condition, e.method, e.accuracy, e.n_trials);
    }
    Ok(())
}

fn export_spec(a: &ExportSpecArgs) -> Result<()> {
    let signal = read_wav(&a.input)?;
    let cfg = StftConfig {
        sample_rate: signal.sample_rate(),
        ..StftConfig::default()
    };
    let map = log_magnitude(&stft(&signal.select(a.channel)?, &cfg)?, 0)?;
    if map.degenerate {
        eprintln!("warning: constant input, exported map is all zeros");
    }
    write_spx(&a.out, &real_map_spectrogram(&map.values))?;
    let (l, k) = map.values.dim();
    println!("wrote {l} x {k} map to {}", a.out.display());
    Ok(())
}
