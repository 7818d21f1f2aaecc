//! Reference computations written independently of the library code paths.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use dpd_doa::masking::BinSet;
use dpd_doa::stft::Spectrogram;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(len: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    // Box-Muller, kept local so the oracle does not share the library's sampler.
    (0..len)
        .map(|_| {
            let u1: f64 = r.random_range(f64::EPSILON..1.0);
            let u2: f64 = r.random();
            (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
        })
        .collect()
}

/// `(irm_s, irm_d)` evaluated one scalar at a time.
pub fn scalar_irm(pd: f64, pr: f64, pn: f64, xi: f64) -> (f64, f64) {
    let total = pd + pr + pn;
    let denom = if total > xi { total } else { xi };
    ((pd + pr) / denom, pd / denom)
}

/// Top-`n` positive entries of `map` restricted to columns `lo..=hi`, by a
/// full sort with the documented tie order.
pub fn full_sort_select(map: &ndarray::Array2<f64>, lo: usize, hi: usize, n: usize) -> Vec<(usize, usize)> {
    let mut all: Vec<(f64, usize, usize)> = Vec::new();
    for t in 0..map.nrows() {
        for f in lo..=hi {
            if map[[t, f]] > 0.0 {
                all.push((map[[t, f]], t, f));
            }
        }
    }
    all.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    all.into_iter().take(n).map(|(_, t, f)| (t, f)).collect()
}

/// Sample covariance at bin `f` by explicit summation.
pub fn brute_covariance(spec: &Spectrogram, bins: &BinSet, f: usize) -> Vec<Vec<Complex64>> {
    let m = spec.channels();
    let frames: Vec<usize> = bins.iter().filter(|b| b.1 == f).map(|b| b.0).collect();
    let mut r = vec![vec![Complex64::new(0.0, 0.0); m]; m];
    for &t in &frames {
        for i in 0..m {
            for j in 0..m {
                r[i][j] += spec.get(t, f, i) * spec.get(t, f, j).conj() / frames.len() as f64;
            }
        }
    }
    r
}

/// Energy of one windowed frame computed from its one-sided spectrum.
pub fn onesided_energy(bins: &[Complex64], n: usize) -> f64 {
    let k = bins.len();
    let mut e = bins[0].norm_sqr() + bins[k - 1].norm_sqr();
    for z in &bins[1..k - 1] {
        e += 2.0 * z.norm_sqr();
    }
    e / n as f64
}

/// Real part of the Welch coherence between `x` and `y` (Hann, 50% overlap).
/// Returns `(frequency, coherence)` for every one-sided bin.
pub fn welch_real_coherence(x: &[f64], y: &[f64], fs: f64, nfft: usize) -> Vec<(f64, f64)> {
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let w: Vec<f64> = (0..nfft)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / nfft as f64).cos())
        .collect();
    let k = nfft / 2 + 1;
    let mut sxx = vec![0.0; k];
    let mut syy = vec![0.0; k];
    let mut sxy = vec![Complex64::new(0.0, 0.0); k];
    let mut start = 0;
    while start + nfft <= x.len() {
        let mut a: Vec<Complex64> = (0..nfft).map(|i| Complex64::new(x[start + i] * w[i], 0.0)).collect();
        let mut b: Vec<Complex64> = (0..nfft).map(|i| Complex64::new(y[start + i] * w[i], 0.0)).collect();
        fft.process(&mut a);
        fft.process(&mut b);
        for f in 0..k {
            sxx[f] += a[f].norm_sqr();
            syy[f] += b[f].norm_sqr();
            sxy[f] += a[f] * b[f].conj();
        }
        start += nfft / 2;
    }
    (0..k)
        .map(|f| (f as f64 * fs / nfft as f64, sxy[f].re / (sxx[f] * syy[f]).sqrt()))
        .collect()
}

/// Delay of `b` relative to `a` in samples, from the peak of their cross
/// correlation interpolated by zero-padding the cross spectrum.
pub fn upsampled_delay(a: &[f64], b: &[f64], factor: usize) -> f64 {
    let n = (a.len() + b.len()).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let big = n * factor;
    let inv = planner.plan_fft_inverse(big);
    let pad = |s: &[f64]| {
        let mut v: Vec<Complex64> = s.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        v.resize(n, Complex64::new(0.0, 0.0));
        v
    };
    let (mut fa, mut fb) = (pad(a), pad(b));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    let mut cross = vec![Complex64::new(0.0, 0.0); big];
    for k in 0..n / 2 {
        cross[k] = fb[k] * fa[k].conj();
    }
    for k in n / 2 + 1..n {
        cross[big - n + k] = fb[k] * fa[k].conj();
    }
    inv.process(&mut cross);
    let (best, _) = cross
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.re.partial_cmp(&y.1.re).unwrap())
        .unwrap();
    let lag = if best > big / 2 { best as f64 - big as f64 } else { best as f64 };
    lag / factor as f64
}

/// `sin(x) / x` with the removable singularity filled.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Random shoebox room with source and microphone at least 0.5 m from every
/// wall and at least 1 m apart.
pub fn random_geometry(seed: u64) -> (dpd_doa::room::RoomConfig, [f64; 3], [f64; 3]) {
    let mut r = rng(seed);
    loop {
        let dims = [
            r.random_range(3.0..9.0),
            r.random_range(3.0..7.0),
            r.random_range(2.5..4.0),
        ];
        let room = dpd_doa::room::RoomConfig::new(dims, r.random_range(0.15..0.5));
        let mut point = || [0, 1, 2].map(|k| r.random_range(0.5..dims[k] - 0.5));
        let (src, mic) = (point(), point());
        let d = distance(src, mic);
        if d >= 1.0 && room.reflection_coefficient().is_ok() {
            return (room, src, mic);
        }
    }
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Index of the largest-magnitude tap.
pub fn peak_index(taps: &[f64]) -> usize {
    taps.iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .unwrap()
        .0
}

/// Mean absolute deviation of the measured real coherence of every mic pair
/// from `sin(kd) / kd` over `[f_lo, f_hi]`.
pub fn diffuse_coherence_error(
    signal: &dpd_doa::TimeSignal,
    positions: &[[f64; 3]],
    f_lo: f64,
    f_hi: f64,
) -> f64 {
    let fs = signal.sample_rate() as f64;
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let d = distance(positions[i], positions[j]);
            for (f, coh) in welch_real_coherence(signal.channel(i), signal.channel(j), fs, 512) {
                if (f_lo..=f_hi).contains(&f) {
                    sum += (coh - sinc(2.0 * PI * f * d / 343.0)).abs();
                    count += 1;
                }
            }
        }
    }
    sum / count as f64
}
