use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::Result;
use crate::signal::TimeSignal;

const SOURCE_RMS: f64 = 0.1;
const PINK_CORNER_HZ: f64 = 50.0;
const MODULATION_HZ: f64 = 4.0;

/// Seeded stand-in for a speech recording: pink Gaussian noise under a
/// full-depth 4 Hz raised-cosine envelope, scaled to an RMS of 0.1.
pub fn speech_shaped_source(len: usize, fs: u32, seed: u64) -> Result<TimeSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = pink(len, fs, &mut rng);
    let phase = rng.random_range(0.0..2.0 * PI);
    for (i, v) in x.iter_mut().enumerate() {
        let t = i as f64 / fs as f64;
        *v *= 0.5 * (1.0 - (2.0 * PI * MODULATION_HZ * t + phase).cos());
    }
    normalize_rms(&mut x);
    TimeSignal::mono(fs, x)
}

/// Seeded stationary pink Gaussian noise with an RMS of 0.1.
pub fn noise_source(len: usize, fs: u32, seed: u64) -> Result<TimeSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = pink(len, fs, &mut rng);
    normalize_rms(&mut x);
    TimeSignal::mono(fs, x)
}

/// White Gaussian noise shaped by `1 / sqrt(f)` above a 50 Hz corner.
fn pink(len: usize, fs: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if len == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(StandardNormal.sample(&mut *rng), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let bin = k.min(len - k);
        let f = bin as f64 * fs as f64 / len as f64;
        *z *= (PINK_CORNER_HZ / f.max(PINK_CORNER_HZ)).sqrt();
    }
    buf[0] = Complex64::new(0.0, 0.0);
    planner.plan_fft_inverse(len).process(&mut buf);
    buf.iter().map(|z| z.re / len as f64).collect()
}

fn normalize_rms(x: &mut [f64]) {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
    if rms > 0.0 {
        let g = SOURCE_RMS / rms;
        x.iter_mut().for_each(|v| *v *= g);
    }
}
