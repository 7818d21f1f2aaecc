use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("signal too short: {len} samples, need at least {needed}")]
    SignalTooShort { len: usize, needed: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty band: no bin centre lies in [{f_lo}, {f_hi}] Hz")]
    EmptyBand { f_lo: f64, f_hi: f64 },

    #[error("position {0:?} is outside the room")]
    OutsideRoom([f64; 3]),

    #[error("t60 of {t60} s is unreachable for this room (Sabine absorption {absorption:.3} > 1)")]
    T60Unreachable { t60: f64, absorption: f64 },

    #[error("noise has zero energy")]
    ZeroNoise,

    #[error("scene geometry still invalid after {0} perturbation attempts")]
    PerturbationFailed(usize),

    #[error("no bins passed DPD test")]
    NoBins,

    #[error("insufficient snapshots for MUSIC")]
    InsufficientSnapshots,

    #[error("frequency bin {0} excluded: no selected bins at this frequency")]
    FrequencyExcluded(usize),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    #[error("malformed {kind} file: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error("missing estimated mask files: {}", .0.join(", "))]
    MissingMasks(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
