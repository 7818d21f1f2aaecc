use std::f64::consts::PI;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::TimeSignal;

/// Number of independent plane waves superposed by [`diffuse_noise`].
pub const DIFFUSE_PLANE_WAVES: usize = 256;

/// Spherically isotropic noise at the given microphone positions.
///
/// The field is a superposition of [`DIFFUSE_PLANE_WAVES`] independent white
/// Gaussian plane waves whose directions form a Fibonacci lattice on the unit
/// sphere under a seed-dependent random rotation. Between two microphones
/// `d` metres apart the expected coherence is `sin(kd) / kd`, `k = 2 pi f / c`.
/// The generator works on one FFT of the whole duration, so the noise is
/// periodic with that period. Realisations shorter than a few seconds give
/// noisy coherence estimates.
///
/// Each channel has unit expected variance.
pub fn diffuse_noise(
    mic_positions: &[[f64; 3]],
    duration: f64,
    fs: u32,
    seed: u64,
    speed_of_sound: f64,
) -> Result<TimeSignal> {
    if mic_positions.len() < 2 {
        return Err(Error::InvalidConfig(
            "diffuse noise needs at least two microphones".into(),
        ));
    }
    let n = (duration * fs as f64).round() as usize;
    if n < 2 {
        return Err(Error::InvalidConfig("duration too short".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let directions = lattice_directions(DIFFUSE_PLANE_WAVES, &mut rng);
    let half = (n - 1) / 2; // positive-frequency bins below Nyquist
    let df = fs as f64 / n as f64;
    let mut spectra = vec![vec![Complex64::new(0.0, 0.0); n]; mic_positions.len()];
    let mut wave = vec![Complex64::new(0.0, 0.0); half + 1];
    let std = std::f64::consts::FRAC_1_SQRT_2;
    for u in &directions {
        for z in wave.iter_mut().skip(1) {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *z = Complex64::new(re * std, im * std);
        }
        for (spec, p) in spectra.iter_mut().zip(mic_positions) {
            // Mic displaced along u hears the wave early: phase +w p.u / c.
            let lead = (p[0] * u[0] + p[1] * u[1] + p[2] * u[2]) / speed_of_sound;
            let step = Complex64::from_polar(1.0, 2.0 * PI * df * lead);
            let mut ph = step;
            for k in 1..=half {
                spec[k] += wave[k] * ph;
                ph *= step;
            }
        }
    }

    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let scale = (n as f64 / DIFFUSE_PLANE_WAVES as f64).sqrt() / n as f64;
    let channels = spectra
        .into_iter()
        .map(|mut spec| {
            for k in 1..=half {
                spec[n - k] = spec[k].conj();
            }
            ifft.process(&mut spec);
            spec.iter().map(|z| z.re * scale).collect()
        })
        .collect();
    TimeSignal::new(fs, channels)
}

fn lattice_directions(count: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut *rng));
    let rot = UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]));
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            let v = rot * Vector3::new(r * phi.cos(), r * phi.sin(), z);
            [v.x, v.y, v.z]
        })
        .collect()
}
