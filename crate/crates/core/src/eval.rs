//! Evaluation protocol: the two rooms, the six test conditions, the training
//! scene sampler, and paired accuracy runs over seeded trials.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::doa::{pick_doa, ArrayGeometry, Localizer, Method};
use crate::error::{Error, Result};
use crate::io::read_msk;
use crate::masking::{oracle_masks, refine_dpd, select_bins, BinSet, DpdParams, MaskPair};
use crate::room::{
    noise_source, perturb_scene, render_scene, speech_shaped_source, ArrayPose, NoiseKind,
    RoomConfig, SceneComponents, SceneConfig,
};
use crate::signal::TimeSignal;
use crate::stft::{stft, StftConfig};

/// An estimate within this many degrees of the truth counts as correct.
pub const TOLERANCE_DEG: f64 = 5.0;

/// 2.072 s at 16 kHz: 256 STFT frames.
pub const SEGMENT_LEN: usize = 33_152;

pub const SAMPLE_RATE: u32 = 16_000;

pub const DEFAULT_TRIALS: usize = 50;

pub const DEFAULT_PERTURBATION: f64 = 0.1;

/// Caps the number of worker threads used for trials.
pub const THREADS_ENV: &str = "DPD_DOA_THREADS";

pub fn is_correct(est_deg: f64, truth_deg: f64) -> bool {
    (est_deg - truth_deg).abs() <= TOLERANCE_DEG
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoomPreset {
    pub id: u8,
    pub room: RoomConfig,
    pub array_center: [f64; 3],
    pub distance: f64,
}

/// Room 1 (T60 0.32 s) and room 2 (T60 0.65 s).
pub fn room_presets() -> [RoomPreset; 2] {
    [
        RoomPreset {
            id: 1,
            room: RoomConfig::new([7.32, 5.5, 3.0], 0.32),
            array_center: [3.0, 2.1, 1.2],
            distance: 3.0,
        },
        RoomPreset {
            id: 2,
            room: RoomConfig::new([5.9, 4.2, 3.3], 0.65),
            array_center: [2.5, 1.8, 1.5],
            distance: 2.0,
        },
    ]
}

pub fn room_preset(id: u8) -> Result<RoomPreset> {
    room_presets()
        .into_iter()
        .find(|p| p.id == id)
        .ok_or_else(|| Error::InvalidConfig(format!("no room preset {id}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionId {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl ConditionId {
    pub const ALL: [ConditionId; 6] = [Self::I, Self::II, Self::III, Self::IV, Self::V, Self::VI];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::I => "I",
            Self::II => "II",
            Self::III => "III",
            Self::IV => "IV",
            Self::V => "V",
            Self::VI => "VI",
        }
    }

    fn index(self) -> u64 {
        Self::ALL.iter().position(|&c| c == self).expect("listed") as u64
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConditionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown condition {s:?}, expected I-VI")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayChoice {
    Ula,
    Uca,
}

impl ArrayChoice {
    pub fn geometry(self) -> ArrayGeometry {
        match self {
            ArrayChoice::Ula => ArrayGeometry::default_ula(),
            ArrayChoice::Uca => ArrayGeometry::default_uca(),
        }
    }
}

/// One evaluation condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub id: ConditionId,
    pub array: ArrayChoice,
    pub room: u8,
    pub speaker_doa: f64,
    pub noise: NoiseKind,
}

impl Condition {
    pub fn get(id: ConditionId) -> Self {
        let dir = |doa| NoiseKind::Directional { doa, distance: None };
        let (array, room, speaker_doa, noise) = match id {
            ConditionId::I => (ArrayChoice::Ula, 1, 30.0, dir(-30.0)),
            ConditionId::II => (ArrayChoice::Ula, 1, 60.0, dir(-30.0)),
            ConditionId::III => (ArrayChoice::Ula, 2, 30.0, dir(-30.0)),
            ConditionId::IV => (ArrayChoice::Ula, 2, 30.0, NoiseKind::Diffuse),
            ConditionId::V => (ArrayChoice::Uca, 2, 30.0, dir(-30.0)),
            ConditionId::VI => (ArrayChoice::Uca, 2, 30.0, NoiseKind::Diffuse),
        };
        Self {
            id,
            array,
            room,
            speaker_doa,
            noise,
        }
    }

    pub fn all() -> Vec<Self> {
        ConditionId::ALL.into_iter().map(Self::get).collect()
    }

    /// The unperturbed scene.
    pub fn scene(&self, snr_db: Option<f64>, rng_seed: u64) -> SceneConfig {
        let preset = room_preset(self.room).expect("condition rooms exist");
        SceneConfig {
            room: preset.room,
            array: ArrayPose {
                center: preset.array_center,
                geometry: self.array.geometry(),
            },
            speaker_doa: self.speaker_doa,
            speaker_distance: preset.distance,
            noise_kind: self.noise.clone(),
            snr_db,
            rng_seed,
        }
    }
}

/// Draws a training scene: room size in [6, 8] x [4, 6] x [2.8, 3.6] m,
/// source distance in [1.5, 2.5] m, T60 in [0.16, 2.1] s, SNR in [-5, 20] dB
/// and DOA in [-90, 90] degrees, all uniform and independent.
///
/// The array centre is drawn uniformly at least 0.5 m from every wall and
/// redrawn until the source fits in the room. Noise is diffuse.
pub fn sample_training_scene(seed: u64) -> SceneConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = [
        rng.random_range(6.0..=8.0),
        rng.random_range(4.0..=6.0),
        rng.random_range(2.8..=3.6),
    ];
    let speaker_distance = rng.random_range(1.5..=2.5);
    let t60 = rng.random_range(0.16..=2.1);
    let snr_db = rng.random_range(-5.0..=20.0);
    let speaker_doa = rng.random_range(-90.0..=90.0);
    let mut scene = SceneConfig {
        room: RoomConfig::new(dims, t60),
        array: ArrayPose {
            center: [0.0; 3],
            geometry: ArrayGeometry::default_ula(),
        },
        speaker_doa,
        speaker_distance,
        noise_kind: NoiseKind::Diffuse,
        snr_db: Some(snr_db),
        rng_seed: seed,
    };
    loop {
        scene.array.center = [0, 1, 2].map(|k| rng.random_range(0.5..=dims[k] - 0.5));
        if scene.validate().is_ok() {
            return scene;
        }
    }
}

/// Which bins a method localises on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinSource {
    /// Every in-band bin.
    All,
    /// DPD selection from oracle masks.
    Oracle,
    /// DPD selection from `.msk` files.
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMethod {
    SrpPhatAll,
    MusicAll,
    SrpPhatOracle,
    MusicOracle,
    SrpPhatEstimated,
    MusicEstimated,
}

impl EvalMethod {
    pub const ALL: [EvalMethod; 6] = [
        Self::SrpPhatAll,
        Self::MusicAll,
        Self::SrpPhatOracle,
        Self::MusicOracle,
        Self::SrpPhatEstimated,
        Self::MusicEstimated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SrpPhatAll => "srp_phat_all",
            Self::MusicAll => "music_all",
            Self::SrpPhatOracle => "srp_phat_oracle",
            Self::MusicOracle => "music_oracle",
            Self::SrpPhatEstimated => "srp_phat_estimated",
            Self::MusicEstimated => "music_estimated",
        }
    }

    pub fn estimator(self) -> Method {
        match self {
            Self::SrpPhatAll | Self::SrpPhatOracle | Self::SrpPhatEstimated => Method::SrpPhat,
            Self::MusicAll | Self::MusicOracle | Self::MusicEstimated => Method::Music,
        }
    }

    pub fn bins(self) -> BinSource {
        match self {
            Self::SrpPhatAll | Self::MusicAll => BinSource::All,
            Self::SrpPhatOracle | Self::MusicOracle => BinSource::Oracle,
            Self::SrpPhatEstimated | Self::MusicEstimated => BinSource::Estimated,
        }
    }
}

impl fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown evaluation method {s:?}")))
    }
}

/// Dry source signal for each trial.
#[derive(Debug, Clone, Default)]
pub enum SpeechSource {
    /// [`speech_shaped_source`] seeded per trial.
    #[default]
    SpeechShaped,
    /// Mono recordings used in turn, each cut to [`SEGMENT_LEN`] samples.
    Recordings(Vec<TimeSignal>),
}

impl SpeechSource {
    fn signal(&self, trial: usize, seed: u64) -> Result<TimeSignal> {
        match self {
            SpeechSource::SpeechShaped => speech_shaped_source(SEGMENT_LEN, SAMPLE_RATE, seed),
            SpeechSource::Recordings(list) => {
                let rec = list.get(trial % list.len().max(1)).ok_or_else(|| {
                    Error::InvalidConfig("recording list is empty".into())
                })?;
                if rec.num_channels() != 1 || rec.sample_rate() != SAMPLE_RATE {
                    return Err(Error::DimensionMismatch(format!(
                        "recordings must be mono at {SAMPLE_RATE} Hz"
                    )));
                }
                if rec.len() < SEGMENT_LEN {
                    return Err(Error::SignalTooShort {
                        len: rec.len(),
                        needed: SEGMENT_LEN,
                    });
                }
                TimeSignal::mono(SAMPLE_RATE, rec.channel(0)[..SEGMENT_LEN].to_vec())
            }
        }
    }
}

/// Settings shared by every trial of a run.
#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub n_trials: usize,
    pub methods: Vec<EvalMethod>,
    pub seed: u64,
    pub perturbation: f64,
    /// Replaces the room with fully absorbing walls.
    pub anechoic: bool,
    /// Directory of `.msk` files for the estimated variants.
    pub mask_dir: Option<PathBuf>,
    pub speech: SpeechSource,
    pub stft: StftConfig,
    pub dpd: DpdParams,
}

impl EvalOptions {
    pub fn new(methods: Vec<EvalMethod>, n_trials: usize, seed: u64) -> Result<Self> {
        let stft = StftConfig::default();
        Ok(Self {
            n_trials,
            methods,
            seed,
            perturbation: DEFAULT_PERTURBATION,
            anechoic: false,
            mask_dir: None,
            speech: SpeechSource::default(),
            dpd: DpdParams::defaults(&stft)?,
            stft,
        })
    }
}

/// `{condition}_{snr}_{trial:04}.msk`, with `clean` for a noise-free run.
pub fn mask_file_name(cond: ConditionId, snr_db: Option<f64>, trial: usize) -> String {
    format!("{cond}_{}_{trial:04}.msk", snr_label(snr_db))
}

fn snr_label(snr_db: Option<f64>) -> String {
    match snr_db {
        Some(s) => format!("{s}"),
        None => "clean".into(),
    }
}

/// Seed of one trial, a SplitMix64 hash of its coordinates.
pub fn trial_seed(base: u64, cond: ConditionId, snr_db: Option<f64>, trial: usize) -> u64 {
    let snr_bits = snr_db.map_or(u64::MAX, f64::to_bits);
    [cond.index(), snr_bits, trial as u64]
        .into_iter()
        .fold(splitmix64(base), |h, v| splitmix64(h ^ v))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub condition: ConditionId,
    pub snr_db: Option<f64>,
    pub method: EvalMethod,
    pub trial: usize,
    pub true_doa: f64,
    /// `None` when the estimator had nothing to work with.
    pub est_doa: Option<f64>,
    pub correct: bool,
    pub n_bins: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyEntry {
    pub condition: ConditionId,
    pub snr_db: Option<f64>,
    pub method: EvalMethod,
    pub n_trials: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub entries: Vec<AccuracyEntry>,
    #[serde(skip)]
    pub trials: Vec<TrialResult>,
}

impl AccuracyReport {
    fn from_trials(
        cond: ConditionId,
        snr_db: Option<f64>,
        methods: &[EvalMethod],
        trials: Vec<TrialResult>,
    ) -> Self {
        let mut entries = Vec::new();
        for &method in methods {
            let n = trials.iter().filter(|t| t.method == method).count();
            if n == 0 {
                continue;
            }
            let hits = trials.iter().filter(|t| t.method == method && t.correct).count();
            entries.push(AccuracyEntry {
                condition: cond,
                snr_db,
                method,
                n_trials: n,
                accuracy: hits as f64 / n as f64,
            });
        }
        Self { entries, trials }
    }

    pub fn merge(&mut self, other: AccuracyReport) {
        self.entries.extend(other.entries);
        self.trials.extend(other.trials);
    }

    pub fn accuracy(&self, cond: ConditionId, snr_db: Option<f64>, method: EvalMethod) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.condition == cond && e.snr_db == snr_db && e.method == method)
            .map(|e| e.accuracy)
    }

    /// `condition,snr_db,method,n_trials,accuracy`; a clean run has an empty SNR.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["condition", "snr_db", "method", "n_trials", "accuracy"])?;
        for e in &self.entries {
            w.write_record([
                e.condition.to_string(),
                e.snr_db.map(|s| s.to_string()).unwrap_or_default(),
                e.method.to_string(),
                e.n_trials.to_string(),
                e.accuracy.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One JSON object per trial.
    pub fn write_trials_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for t in &self.trials {
            serde_json::to_writer(&mut w, t)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `opts.n_trials` paired trials of one condition at one SNR.
///
/// Each trial perturbs the scene, renders it once, and scores every method
/// on that same rendering. Trials run in parallel; results are ordered by
/// trial and method so the report is reproducible.
pub fn run_condition(cond: &Condition, snr_db: Option<f64>, opts: &EvalOptions) -> Result<AccuracyReport> {
    opts.dpd.validate()?;
    if opts.methods.iter().any(|m| m.bins() == BinSource::Estimated) {
        check_mask_files(cond.id, snr_db, opts)?;
    }
    let run = || {
        (0..opts.n_trials)
            .into_par_iter()
            .map(|i| run_trial(cond, snr_db, i, opts))
            .collect::<Result<Vec<_>>>()
    };
    let per_trial = match thread_cap()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    Ok(AccuracyReport::from_trials(
        cond.id,
        snr_db,
        &opts.methods,
        per_trial.into_iter().flatten().collect(),
    ))
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::InvalidConfig(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

fn check_mask_files(cond: ConditionId, snr_db: Option<f64>, opts: &EvalOptions) -> Result<()> {
    let Some(dir) = &opts.mask_dir else {
        return Err(Error::InvalidConfig(
            "estimated-mask methods need a mask directory".into(),
        ));
    };
    let missing: Vec<String> = (0..opts.n_trials)
        .map(|i| dir.join(mask_file_name(cond, snr_db, i)))
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingMasks(missing))
    }
}

/// The perturbed scene and rendering used by trial `i`.
pub fn trial_scene(
    cond: &Condition,
    snr_db: Option<f64>,
    i: usize,
    opts: &EvalOptions,
) -> Result<(SceneConfig, SceneComponents)> {
    let seed = trial_seed(opts.seed, cond.id, snr_db, i);
    let mut nominal = cond.scene(snr_db, seed);
    nominal.room.anechoic = opts.anechoic;
    let scene = perturb_scene(&nominal, opts.perturbation, seed)?;
    let speech = opts.speech.signal(i, splitmix64(seed ^ 1))?;
    let noise = noise_source(SEGMENT_LEN, SAMPLE_RATE, splitmix64(seed ^ 2))?;
    let components = render_scene(&scene, &speech, &noise)?;
    Ok((scene, components))
}

fn run_trial(cond: &Condition, snr_db: Option<f64>, i: usize, opts: &EvalOptions) -> Result<Vec<TrialResult>> {
    let seed = trial_seed(opts.seed, cond.id, snr_db, i);
    let (scene, components) = trial_scene(cond, snr_db, i, opts)?;
    let spec = stft(&components.mixture, &opts.stft)?;
    let loc = Localizer::new(scene.array.geometry.clone(), opts.stft);

    let mut oracle: Option<BinSet> = None;
    let mut estimated: Option<BinSet> = None;
    let mut results = Vec::with_capacity(opts.methods.len());
    for &method in &opts.methods {
        let bins = match method.bins() {
            BinSource::All => BinSet::full_band(spec.frames(), &opts.dpd.band),
            BinSource::Oracle => match &oracle {
                Some(b) => b.clone(),
                None => {
                    let masks = oracle_masks(&components, &opts.stft, 0, opts.dpd.xi_n)?;
                    oracle.insert(dpd_bins(&masks, &opts.dpd)?).clone()
                }
            },
            BinSource::Estimated => match &estimated {
                Some(b) => b.clone(),
                None => {
                    let dir = opts.mask_dir.as_ref().expect("checked before the run");
                    let masks = read_msk(dir.join(mask_file_name(cond.id, snr_db, i)))?
                        .with_dc_restored(opts.stft.fft_size)?;
                    if masks.frames() != spec.frames() {
                        return Err(Error::DimensionMismatch(format!(
                            "mask for trial {i} has {} frames, mixture has {}",
                            masks.frames(),
                            spec.frames()
                        )));
                    }
                    estimated.insert(dpd_bins(&masks, &opts.dpd)?).clone()
                }
            },
        };
        let (est_doa, error) = match loc.estimate(&spec, &bins, method.estimator()) {
            Ok(s) => (Some(pick_doa(&s)), None),
            Err(e @ (Error::NoBins | Error::InsufficientSnapshots)) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        };
        results.push(TrialResult {
            condition: cond.id,
            snr_db,
            method,
            trial: i,
            true_doa: scene.speaker_doa,
            est_doa,
            correct: est_doa.is_some_and(|e| is_correct(e, scene.speaker_doa)),
            n_bins: bins.len(),
            seed,
            error,
        });
    }
    Ok(results)
}

/// DPD refinement followed by top-N selection.
pub fn dpd_bins(masks: &MaskPair, params: &DpdParams) -> Result<BinSet> {
    select_bins(&refine_dpd(masks, params.irm0), params)
}
