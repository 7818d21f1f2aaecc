//! Short-time Fourier analysis and synthesis.
//!
//! Frames are taken without any padding: a signal of `N` samples yields
//! `floor((N - fft_size) / hop) + 1` frames and the trailing samples that do
//! not fill a frame are dropped. Synthesis is weighted overlap-add with the
//! analysis window applied a second time and the per-sample window-square sum
//! divided out, which makes `istft(stft(x))` exact wherever the window sum is
//! non-zero.

use std::f64::consts::PI;

use ndarray::{Array2, Array3, ArrayView1};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::TimeSignal;

/// Magnitudes are clamped to this value before the logarithm.
pub const LOG_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// Periodic Hann window, `0.5 - 0.5 cos(2 pi n / N)`.
    #[default]
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub sample_rate: u32,
    pub fft_size: usize,
    pub hop: usize,
    #[serde(default)]
    pub window: WindowKind,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            fft_size: 512,
            hop: 128,
            window: WindowKind::Hann,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        if !self.fft_size.is_power_of_two() || self.fft_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "fft size {} is not a power of two",
                self.fft_size
            )));
        }
        if self.hop == 0 || !self.fft_size.is_multiple_of(self.hop) {
            return Err(Error::InvalidConfig(format!(
                "hop {} does not divide fft size {}",
                self.hop, self.fft_size
            )));
        }
        Ok(())
    }

    /// Number of one-sided bins, `fft_size / 2 + 1`.
    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn bin_spacing(&self) -> f64 {
        self.sample_rate as f64 / self.fft_size as f64
    }

    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.bin_spacing()
    }

    /// Frame count for a signal of `len` samples, or `None` if shorter than one frame.
    pub fn num_frames(&self, len: usize) -> Option<usize> {
        (len >= self.fft_size).then(|| (len - self.fft_size) / self.hop + 1)
    }

    /// Signal length produced by synthesis from `frames` frames.
    pub fn synthesis_len(&self, frames: usize) -> usize {
        if frames == 0 {
            0
        } else {
            (frames - 1) * self.hop + self.fft_size
        }
    }

    pub fn window(&self) -> Vec<f64> {
        match self.window {
            WindowKind::Hann => (0..self.fft_size)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / self.fft_size as f64).cos())
                .collect(),
        }
    }
}

/// Complex multichannel time-frequency data indexed `(frame, bin, channel)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Array3<Complex64>,
}

impl Spectrogram {
    pub fn new(data: Array3<Complex64>) -> Result<Self> {
        let (l, k, m) = data.dim();
        if l == 0 || k == 0 || m == 0 {
            return Err(Error::DimensionMismatch(format!(
                "spectrogram dims must be non-zero, got {l}x{k}x{m}"
            )));
        }
        Ok(Self { data })
    }

    pub fn zeros(frames: usize, bins: usize, channels: usize) -> Self {
        Self {
            data: Array3::zeros((frames, bins, channels)),
        }
    }

    pub fn frames(&self) -> usize {
        self.data.dim().0
    }

    pub fn bins(&self) -> usize {
        self.data.dim().1
    }

    pub fn channels(&self) -> usize {
        self.data.dim().2
    }

    pub fn data(&self) -> &Array3<Complex64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array3<Complex64> {
        &mut self.data
    }

    pub fn get(&self, t: usize, f: usize, m: usize) -> Complex64 {
        self.data[[t, f, m]]
    }

    /// The array snapshot `x(t, f)` across all channels.
    pub fn snapshot(&self, t: usize, f: usize) -> ArrayView1<'_, Complex64> {
        self.data.slice(ndarray::s![t, f, ..])
    }

    /// Power `|X(t, f)|^2` of one channel as an `L x K` map.
    pub fn power_map(&self, m: usize) -> Array2<f64> {
        self.data
            .slice(ndarray::s![.., .., m])
            .mapv(|z| z.norm_sqr())
    }
}

/// Forward STFT of every channel.
pub fn stft(signal: &TimeSignal, cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let n = cfg.fft_size;
    let frames = cfg.num_frames(signal.len()).ok_or(Error::SignalTooShort {
        len: signal.len(),
        needed: n,
    })?;
    let bins = cfg.num_bins();
    let window = cfg.window();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut data = Array3::zeros((frames, bins, signal.num_channels()));
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (m, ch) in signal.channels().iter().enumerate() {
        for t in 0..frames {
            let start = t * cfg.hop;
            for ((b, x), w) in buf.iter_mut().zip(&ch[start..start + n]).zip(&window) {
                *b = Complex64::new(x * w, 0.0);
            }
            fft.process(&mut buf);
            for (f, z) in buf[..bins].iter().enumerate() {
                data[[t, f, m]] = *z;
            }
        }
    }
    Ok(Spectrogram { data })
}

/// Weighted overlap-add synthesis, inverse of [`stft`] for the same config.
pub fn istft(spec: &Spectrogram, cfg: &StftConfig) -> Result<TimeSignal> {
    cfg.validate()?;
    let n = cfg.fft_size;
    if spec.bins() != cfg.num_bins() {
        return Err(Error::DimensionMismatch(format!(
            "spectrogram has {} bins, config expects {}",
            spec.bins(),
            cfg.num_bins()
        )));
    }
    let frames = spec.frames();
    let out_len = cfg.synthesis_len(frames);
    let window = cfg.window();
    let ifft = FftPlanner::new().plan_fft_inverse(n);

    let mut norm = vec![0.0; out_len];
    for t in 0..frames {
        for (i, w) in window.iter().enumerate() {
            norm[t * cfg.hop + i] += w * w;
        }
    }

    let mut channels = Vec::with_capacity(spec.channels());
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for m in 0..spec.channels() {
        let mut out = vec![0.0; out_len];
        for t in 0..frames {
            for f in 0..cfg.num_bins() {
                buf[f] = spec.data[[t, f, m]];
            }
            // Hermitian completion of the one-sided spectrum.
            for f in cfg.num_bins()..n {
                buf[f] = spec.data[[t, n - f, m]].conj();
            }
            ifft.process(&mut buf);
            let start = t * cfg.hop;
            for (i, (z, w)) in buf.iter().zip(&window).enumerate() {
                out[start + i] += z.re / n as f64 * w;
            }
        }
        for (x, s) in out.iter_mut().zip(&norm) {
            *x = if *s > 1e-10 { *x / s } else { 0.0 };
        }
        channels.push(out);
    }
    TimeSignal::new(cfg.sample_rate, channels)
}

/// Normalised log-magnitude map of one channel, shaped for the mask network.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMagnitude {
    /// `L x (K - 1)` values in `[-1, 1]`; the DC bin is dropped.
    pub values: Array2<f64>,
    /// Set when every input magnitude was equal and the map is all zeros.
    pub degenerate: bool,
}

/// Log-magnitude of `channel`, DC bin dropped, min-max rescaled to `[-1, 1]`.
pub fn log_magnitude(spec: &Spectrogram, channel: usize) -> Result<LogMagnitude> {
    if channel >= spec.channels() {
        return Err(Error::DimensionMismatch(format!(
            "channel {channel} requested from a {}-channel spectrogram",
            spec.channels()
        )));
    }
    if spec.bins() < 2 {
        return Err(Error::DimensionMismatch(
            "need at least two bins to drop DC".into(),
        ));
    }
    let logs = spec
        .data
        .slice(ndarray::s![.., 1.., channel])
        .mapv(|z| z.norm().max(LOG_FLOOR).ln());
    let (lo, hi) = logs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi <= lo {
        return Ok(LogMagnitude {
            values: Array2::zeros(logs.dim()),
            degenerate: true,
        });
    }
    let span = hi - lo;
    let values = logs.mapv(|v| (2.0 * (v - lo) / span - 1.0).clamp(-1.0, 1.0));
    Ok(LogMagnitude {
        values,
        degenerate: false,
    })
}

/// Inclusive range of bins whose centre frequency lies in a band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSelection {
    pub f_lo: f64,
    pub f_hi: f64,
    pub bin_lo: usize,
    pub bin_hi: usize,
}

impl BandSelection {
    pub fn len(&self) -> usize {
        self.bin_hi - self.bin_lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, bin: usize) -> bool {
        (self.bin_lo..=self.bin_hi).contains(&bin)
    }

    pub fn bins(&self) -> std::ops::RangeInclusive<usize> {
        self.bin_lo..=self.bin_hi
    }
}

pub fn band_bins(cfg: &StftConfig, f_lo: f64, f_hi: f64) -> Result<BandSelection> {
    let nyquist = cfg.sample_rate as f64 / 2.0;
    if !(0.0..nyquist).contains(&f_lo) || f_hi <= f_lo || f_hi > nyquist {
        return Err(Error::EmptyBand { f_lo, f_hi });
    }
    let df = cfg.bin_spacing();
    // Tolerate rounding when a band edge sits exactly on a bin centre.
    let bin_lo = (f_lo / df - 1e-9).ceil().max(0.0) as usize;
    let bin_hi = ((f_hi / df + 1e-9).floor() as usize).min(cfg.num_bins() - 1);
    if bin_lo > bin_hi {
        return Err(Error::EmptyBand { f_lo, f_hi });
    }
    Ok(BandSelection {
        f_lo,
        f_hi,
        bin_lo,
        bin_hi,
    })
}
