use std::f64::consts::PI;

use super::{distance, RoomConfig};
use crate::error::{Error, Result};

/// Length of the windowed-sinc kernel used for fractional delays.
pub const SINC_TAPS: usize = 81;

/// Default span of the direct-path window past the first arrival.
pub const DIRECT_WINDOW_MS: f64 = 1.0;

const HALF_TAPS: i64 = (SINC_TAPS / 2) as i64;

/// Impulse response from one source position to one microphone.
#[derive(Debug, Clone, PartialEq)]
pub struct Rir {
    pub taps: Vec<f64>,
    pub sample_rate: u32,
    /// `round(distance / c * fs)` for the line-of-sight path.
    pub direct_arrival_index: usize,
}

impl Rir {
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|x| x * x).sum()
    }
}

/// A room impulse response separated by image: the line-of-sight image alone
/// and the sum of every reflected image.
#[derive(Debug, Clone, PartialEq)]
pub struct RirParts {
    pub direct: Rir,
    pub reverb: Rir,
}

impl RirParts {
    /// `direct + reverb`, tap by tap.
    pub fn combined(&self) -> Rir {
        Rir {
            taps: self
                .direct
                .taps
                .iter()
                .zip(&self.reverb.taps)
                .map(|(d, r)| d + r)
                .collect(),
            ..self.direct.clone()
        }
    }
}

/// Image-method impulse response between `source` and `mic`.
pub fn simulate_rir(room: &RoomConfig, source: [f64; 3], mic: [f64; 3], fs: u32) -> Result<Rir> {
    simulate_rir_parts(room, source, mic, fs).map(|p| p.combined())
}

/// Image-method impulse response, split into line-of-sight and reflections.
///
/// All walls share the reflection coefficient `sqrt(1 - alpha)` with `alpha`
/// from Sabine's formula. Each image contributes `beta^order / (4 pi r)` at a
/// fractional delay `r / c * fs`, rendered with an 81-tap Hann-windowed sinc.
/// Images are enumerated until their delay passes the end of the response
/// (`ceil(1.2 * t60 * fs)` samples). The reflected part is then high-passed
/// at [`HIGHPASS_HZ`].
pub fn simulate_rir_parts(
    room: &RoomConfig,
    source: [f64; 3],
    mic: [f64; 3],
    fs: u32,
) -> Result<RirParts> {
    let beta = room.reflection_coefficient()?;
    check_positions(room, source, mic, fs)?;
    let fs_f = fs as f64;
    let c = room.speed_of_sound;
    let direct_delay = distance(source, mic) / c * fs_f;
    let len = room
        .rir_len(fs)
        .max(direct_delay.ceil() as usize + HALF_TAPS as usize + 2);

    let mut direct = vec![0.0; len];
    let mut reverb = vec![0.0; len];
    add_fractional_impulse(
        &mut direct,
        direct_delay,
        1.0 / (4.0 * PI * distance(source, mic)),
    );

    if beta > 0.0 {
        let max_dist = (len as f64 + HALF_TAPS as f64) / fs_f * c;
        for_each_image(room.dims, source, mic, max_dist, |dist, order| {
            if order > 0 {
                let gain = beta.powi(order) / (4.0 * PI * dist);
                add_fractional_impulse(&mut reverb, dist / c * fs_f, gain);
            }
        });
    }

    highpass(&mut reverb, fs_f);

    let arrival = direct_delay.round() as usize;
    Ok(RirParts {
        direct: Rir {
            taps: direct,
            sample_rate: fs,
            direct_arrival_index: arrival,
        },
        reverb: Rir {
            taps: reverb,
            sample_rate: fs,
            direct_arrival_index: arrival,
        },
    })
}

fn check_positions(room: &RoomConfig, source: [f64; 3], mic: [f64; 3], fs: u32) -> Result<()> {
    for p in [source, mic] {
        if !room.contains(p) {
            return Err(Error::OutsideRoom(p));
        }
    }
    if fs == 0 {
        return Err(Error::InvalidConfig("sample rate must be positive".into()));
    }
    Ok(())
}

/// Calls `visit(distance, reflection_order)` for every image source within
/// `max_dist` of `mic`, the line-of-sight image (order 0) included.
fn for_each_image(
    dims: [f64; 3],
    source: [f64; 3],
    mic: [f64; 3],
    max_dist: f64,
    mut visit: impl FnMut(f64, i32),
) {
    // Per-axis candidates: (offset from mic, reflection count).
    let axis = |k: usize| -> Vec<(f64, i32)> {
        let (s, m, l) = (source[k], mic[k], dims[k]);
        let b = (max_dist / (2.0 * l)).ceil() as i64 + 1;
        let mut v = Vec::with_capacity((4 * b + 2) as usize);
        for n in -b..=b {
            for q in 0..=1i64 {
                let d = (1 - 2 * q) as f64 * s + 2.0 * n as f64 * l - m;
                if d.abs() <= max_dist {
                    v.push((d, ((n - q).abs() + n.abs()) as i32));
                }
            }
        }
        v
    };
    let (xs, ys, zs) = (axis(0), axis(1), axis(2));
    let max_d2 = max_dist * max_dist;
    for &(dx, rx) in &xs {
        let dx2 = dx * dx;
        for &(dy, ry) in &ys {
            let dxy2 = dx2 + dy * dy;
            if dxy2 > max_d2 {
                continue;
            }
            for &(dz, rz) in &zs {
                let d2 = dxy2 + dz * dz;
                if d2 <= max_d2 {
                    visit(d2.sqrt(), rx + ry + rz);
                }
            }
        }
    }
}

/// Cutoff of the high-pass applied to the reflected part.
pub const HIGHPASS_HZ: f64 = 100.0;

/// Allen and Berkley's second-order high-pass at [`HIGHPASS_HZ`], in place.
///
/// Late images arrive densely with positive gains and pile up into a
/// low-frequency offset that is not part of the room's reverberant decay.
fn highpass(x: &mut [f64], fs: f64) {
    let w = 2.0 * PI * HIGHPASS_HZ / fs;
    let r1 = (-w).exp();
    let b1 = 2.0 * r1 * w.cos();
    let b2 = -r1 * r1;
    let a1 = -(1.0 + r1);
    let (mut y1, mut y2) = (0.0, 0.0);
    for v in x.iter_mut() {
        let y0 = b1 * y1 + b2 * y2 + *v;
        *v = y0 + a1 * y1 + r1 * y2;
        y2 = y1;
        y1 = y0;
    }
}

/// Adds `gain * w(n - delay) * sinc(n - delay)` over the 81 taps around `delay`.
fn add_fractional_impulse(buf: &mut [f64], delay: f64, gain: f64) {
    let n0 = delay.floor() as i64;
    let frac = delay - n0 as f64;
    if n0 - HALF_TAPS >= buf.len() as i64 {
        return;
    }
    // sin(pi (k - frac)) = -(-1)^k sin(pi frac) for integer k.
    let sin_frac = (PI * frac).sin();
    // Window phase pi t / (HALF_TAPS + 1) advanced by rotation.
    let step = PI / (HALF_TAPS + 1) as f64;
    let (step_sin, step_cos) = step.sin_cos();
    let start = (-HALF_TAPS as f64 - frac) * step;
    let (mut ws, mut wc) = start.sin_cos();
    for k in -HALF_TAPS..=HALF_TAPS {
        let n = n0 + k;
        if n >= 0 && (n as usize) < buf.len() {
            let t = k as f64 - frac;
            let sinc = if t == 0.0 {
                1.0
            } else {
                let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                sign * sin_frac / (PI * t)
            };
            buf[n as usize] += gain * 0.5 * (1.0 + wc) * sinc;
        }
        let c = wc * step_cos - ws * step_sin;
        ws = ws * step_cos + wc * step_sin;
        wc = c;
    }
}

/// Splits taps at `direct_arrival_index + window`: everything up to and
/// including that tap is direct, the remainder reverberant.
pub fn split_rir(rir: &Rir, direct_window_ms: f64) -> (Rir, Rir) {
    let window = (direct_window_ms.max(0.0) * rir.sample_rate as f64 / 1000.0).round() as usize;
    let cut = rir.direct_arrival_index + window;
    let mut direct = rir.clone();
    let mut reverb = rir.clone();
    for (i, (d, r)) in direct.taps.iter_mut().zip(reverb.taps.iter_mut()).enumerate() {
        if i <= cut {
            *r = 0.0;
        } else {
            *d = 0.0;
        }
    }
    (direct, reverb)
}

/// Reverberation time from Schroeder backward integration, extrapolated from
/// a line fit of the energy decay curve between -5 and -25 dB.
pub fn schroeder_t60(taps: &[f64], fs: u32) -> Option<f64> {
    let mut edc = vec![0.0; taps.len()];
    let mut acc = 0.0;
    for (e, x) in edc.iter_mut().zip(taps).rev() {
        acc += x * x;
        *e = acc;
    }
    let total = *edc.first()?;
    if total <= 0.0 {
        return None;
    }
    let pts: Vec<(f64, f64)> = edc
        .iter()
        .enumerate()
        .map(|(i, e)| (i as f64, 10.0 * (e / total).log10()))
        .filter(|(_, db)| (-25.0..=-5.0).contains(db))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -60.0 / slope / fs as f64)
}
