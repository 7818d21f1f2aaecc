//! Array geometry, steering vectors, and SRP-PHAT / MUSIC spatial spectra
//! computed over a selected set of time-frequency bins.

mod geometry;
mod music;
mod spectrum;
mod srp;

pub use geometry::{steering, AngleGrid, ArrayGeometry, ArrayKind, SteeringVector};
pub use music::{FreqCovariance, MUSIC_EPS};
pub use spectrum::{pick_doa, Method, SpatialSpectrum};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::masking::BinSet;
use crate::room::SPEED_OF_SOUND;
use crate::stft::{Spectrogram, StftConfig};

/// Everything the estimators need besides the data: array, grid, the STFT
/// configuration that maps bins to frequencies, and the speed of sound.
#[derive(Debug, Clone)]
pub struct Localizer {
    pub geometry: ArrayGeometry,
    pub grid: AngleGrid,
    pub stft: StftConfig,
    pub speed_of_sound: f64,
}

impl Localizer {
    pub fn new(geometry: ArrayGeometry, stft: StftConfig) -> Self {
        Self {
            geometry,
            grid: AngleGrid::default(),
            stft,
            speed_of_sound: SPEED_OF_SOUND,
        }
    }

    pub fn estimate(&self, spec: &Spectrogram, bins: &BinSet, method: Method) -> Result<SpatialSpectrum> {
        match method {
            Method::SrpPhat => self.srp_phat(spec, bins),
            Method::Music => self.music(spec, bins, MUSIC_EPS),
        }
    }

    fn check_input(&self, spec: &Spectrogram, bins: &BinSet) -> Result<()> {
        if spec.channels() != self.geometry.num_mics() {
            return Err(Error::DimensionMismatch(format!(
                "spectrogram has {} channels, array has {} microphones",
                spec.channels(),
                self.geometry.num_mics()
            )));
        }
        if spec.bins() != self.stft.num_bins() {
            return Err(Error::DimensionMismatch(format!(
                "spectrogram has {} bins, STFT config implies {}",
                spec.bins(),
                self.stft.num_bins()
            )));
        }
        if let Some((t, f)) = bins
            .iter()
            .find(|&(t, f)| t >= spec.frames() || f >= spec.bins())
        {
            return Err(Error::DimensionMismatch(format!(
                "bin ({t}, {f}) outside {}x{} spectrogram",
                spec.frames(),
                spec.bins()
            )));
        }
        Ok(())
    }

    /// Steering vectors for every grid angle at bin `f`, flattened angle-major.
    fn steering_table(&self, f: usize) -> Vec<Complex64> {
        let freq = self.stft.bin_frequency(f);
        self.grid
            .angles()
            .iter()
            .flat_map(|&th| steering(&self.geometry, freq, th, self.speed_of_sound).entries)
            .collect()
    }
}
