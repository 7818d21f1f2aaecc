//! Acoustic scene generation: image-method room impulse responses, spherically
//! isotropic noise, and rendering of the separate direct, reverberant and noise
//! components heard by a microphone array.

mod conv;
mod diffuse;
mod rir;
mod scene;
mod source;

pub use conv::convolve;
pub use diffuse::{diffuse_noise, DIFFUSE_PLANE_WAVES};
pub use rir::{
    schroeder_t60, simulate_rir, simulate_rir_parts, split_rir, Rir, RirParts, DIRECT_WINDOW_MS,
    HIGHPASS_HZ, SINC_TAPS,
};
pub use scene::{mix_at_snr, perturb_scene, render_scene, SceneComponents};
pub use source::{noise_source, speech_shaped_source};

use serde::{Deserialize, Serialize};

use crate::doa::ArrayGeometry;
use crate::error::{Error, Result};

pub const SPEED_OF_SOUND: f64 = 343.0;

fn default_speed_of_sound() -> f64 {
    SPEED_OF_SOUND
}

/// Shoebox room with uniform wall absorption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomConfig {
    /// Lx, Ly, Lz in metres.
    pub dims: [f64; 3],
    /// Reverberation time in seconds.
    pub t60: f64,
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound: f64,
    /// Forces fully absorbing walls regardless of `t60`.
    #[serde(default)]
    pub anechoic: bool,
}

impl RoomConfig {
    pub fn new(dims: [f64; 3], t60: f64) -> Self {
        Self {
            dims,
            t60,
            speed_of_sound: SPEED_OF_SOUND,
            anechoic: false,
        }
    }

    pub fn volume(&self) -> f64 {
        self.dims.iter().product()
    }

    pub fn surface(&self) -> f64 {
        let [x, y, z] = self.dims;
        2.0 * (x * y + x * z + y * z)
    }

    /// Sabine absorption coefficient for the configured T60.
    pub fn sabine_absorption(&self) -> f64 {
        24.0 * std::f64::consts::LN_10 * self.volume()
            / (self.speed_of_sound * self.surface() * self.t60)
    }

    /// Pressure reflection coefficient shared by all six walls.
    pub fn reflection_coefficient(&self) -> Result<f64> {
        self.validate()?;
        if self.anechoic {
            return Ok(0.0);
        }
        let absorption = self.sabine_absorption();
        if absorption > 1.0 {
            return Err(Error::T60Unreachable {
                t60: self.t60,
                absorption,
            });
        }
        Ok((1.0 - absorption).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "room dims must be positive, got {:?}",
                self.dims
            )));
        }
        if !(self.t60.is_finite() && self.t60 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "t60 must be positive, got {}",
                self.t60
            )));
        }
        if !(self.speed_of_sound > 0.0) {
            return Err(Error::InvalidConfig("speed of sound must be positive".into()));
        }
        Ok(())
    }

    /// Strictly inside the room.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        p.iter()
            .zip(&self.dims)
            .all(|(x, d)| x.is_finite() && *x > 0.0 && x < d)
    }

    /// RIR length in samples, `ceil(1.2 * t60 * fs)`.
    pub fn rir_len(&self, fs: u32) -> usize {
        (1.2 * self.t60 * fs as f64).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayPose {
    /// Array centre in room coordinates (metres).
    pub center: [f64; 3],
    pub geometry: ArrayGeometry,
}

impl ArrayPose {
    /// Microphone positions in room coordinates.
    pub fn mic_positions(&self) -> Vec<[f64; 3]> {
        self.geometry
            .positions()
            .iter()
            .map(|p| add(self.center, *p))
            .collect()
    }

    /// Point at `distance` metres from the centre in the direction `doa_deg`.
    pub fn point_at(&self, doa_deg: f64, distance: f64) -> [f64; 3] {
        let u = self.geometry.direction(doa_deg);
        add(self.center, [u[0] * distance, u[1] * distance, u[2] * distance])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Point noise source; `distance` defaults to the speaker distance.
    Directional {
        doa: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distance: Option<f64>,
    },
    Diffuse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub room: RoomConfig,
    pub array: ArrayPose,
    /// Degrees, in `[-90, 90]`.
    pub speaker_doa: f64,
    /// Metres from the array centre.
    pub speaker_distance: f64,
    pub noise_kind: NoiseKind,
    /// `None` disables the noise component.
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub rng_seed: u64,
}

impl SceneConfig {
    pub fn speaker_position(&self) -> [f64; 3] {
        self.array.point_at(self.speaker_doa, self.speaker_distance)
    }

    /// Position of the directional noise source, if any.
    pub fn noise_position(&self) -> Option<[f64; 3]> {
        match self.noise_kind {
            NoiseKind::Directional { doa, distance } => Some(
                self.array
                    .point_at(doa, distance.unwrap_or(self.speaker_distance)),
            ),
            NoiseKind::Diffuse => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.room.validate()?;
        if !(-90.0..=90.0).contains(&self.speaker_doa) {
            return Err(Error::InvalidConfig(format!(
                "speaker doa {} outside [-90, 90]",
                self.speaker_doa
            )));
        }
        if !(self.speaker_distance > 0.0) {
            return Err(Error::InvalidConfig("speaker distance must be positive".into()));
        }
        for p in self.array.mic_positions() {
            if !self.room.contains(p) {
                return Err(Error::OutsideRoom(p));
            }
        }
        let speaker = self.speaker_position();
        if !self.room.contains(speaker) {
            return Err(Error::OutsideRoom(speaker));
        }
        if let Some(p) = self.noise_position() {
            if !self.room.contains(p) {
                return Err(Error::OutsideRoom(p));
            }
        }
        Ok(())
    }
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}
