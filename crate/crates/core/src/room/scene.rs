use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{convolve, diffuse_noise, simulate_rir, simulate_rir_parts, NoiseKind, SceneConfig};
use crate::error::{Error, Result};
use crate::signal::TimeSignal;

const PERTURB_ATTEMPTS: usize = 100;

/// Separately rendered parts of the array signal; `mixture` is their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneComponents {
    pub direct: TimeSignal,
    pub reverb: TimeSignal,
    pub noise: TimeSignal,
    pub mixture: TimeSignal,
}

impl SceneComponents {
    /// `direct + reverb`: the speech reference used for SNR.
    pub fn speech(&self) -> Result<TimeSignal> {
        self.direct.add(&self.reverb)
    }
}

/// Renders direct-path speech, reverberant speech and noise at every
/// microphone of the scene.
///
/// The speech source is convolved with the line-of-sight image and with the
/// sum of reflected images separately. A directional noise source is
/// convolved with its full impulse response; diffuse noise comes from
/// [`diffuse_noise`] seeded with `scene.rng_seed`, and `noise_src` is then
/// unused. Noise is scaled with [`mix_at_snr`]. Output length equals the
/// speech length.
pub fn render_scene(
    scene: &SceneConfig,
    speech: &TimeSignal,
    noise_src: &TimeSignal,
) -> Result<SceneComponents> {
    scene.validate()?;
    if speech.num_channels() != 1 {
        return Err(Error::DimensionMismatch("speech source must be mono".into()));
    }
    let fs = speech.sample_rate();
    let len = speech.len();
    let room = &scene.room;
    let mics = scene.array.mic_positions();
    let speaker = scene.speaker_position();

    let mut direct = Vec::with_capacity(mics.len());
    let mut reverb = Vec::with_capacity(mics.len());
    for &mic in &mics {
        let parts = simulate_rir_parts(room, speaker, mic, fs)?;
        direct.push(convolve(speech.channel(0), &parts.direct.taps, len));
        reverb.push(convolve(speech.channel(0), &parts.reverb.taps, len));
    }
    let direct = TimeSignal::new(fs, direct)?;
    let reverb = TimeSignal::new(fs, reverb)?;

    let noise = match scene.snr_db {
        None => TimeSignal::zeros(fs, mics.len(), len)?,
        Some(snr_db) => {
            let mut noise = match scene.noise_kind {
                NoiseKind::Directional { .. } => {
                    if noise_src.num_channels() != 1 || noise_src.sample_rate() != fs {
                        return Err(Error::DimensionMismatch(
                            "noise source must be mono at the speech sample rate".into(),
                        ));
                    }
                    if noise_src.len() < len {
                        return Err(Error::DimensionMismatch(format!(
                            "noise source has {} samples, speech has {len}",
                            noise_src.len()
                        )));
                    }
                    let pos = scene.noise_position().expect("directional noise");
                    let channels = mics
                        .iter()
                        .map(|&mic| {
                            simulate_rir(room, pos, mic, fs)
                                .map(|rir| convolve(noise_src.channel(0), &rir.taps, len))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    TimeSignal::new(fs, channels)?
                }
                NoiseKind::Diffuse => diffuse_noise(
                    scene.array.geometry.positions(),
                    len as f64 / fs as f64,
                    fs,
                    scene.rng_seed,
                    room.speed_of_sound,
                )?,
            };
            let speech_ref = direct.add(&reverb)?;
            let gain = mix_at_snr(&speech_ref, &noise, snr_db)?;
            noise.scale(gain);
            noise
        }
    };

    let mixture = TimeSignal::new(
        fs,
        (0..mics.len())
            .map(|m| {
                direct
                    .channel(m)
                    .iter()
                    .zip(reverb.channel(m))
                    .zip(noise.channel(m))
                    .map(|((d, r), n)| d + r + n)
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

/// Gain for `noise` so that the speech-to-noise power ratio at the first
/// microphone equals `snr_db`.
pub fn mix_at_snr(speech_ref: &TimeSignal, noise: &TimeSignal, snr_db: f64) -> Result<f64> {
    let noise_power = noise.power(0);
    if noise_power <= 0.0 {
        return Err(Error::ZeroNoise);
    }
    let target = 10f64.powf(snr_db / 10.0);
    Ok((speech_ref.power(0) / (noise_power * target)).sqrt())
}

/// Scales room dims, array centre and source distances by independent
/// uniform factors in `[1 - fraction, 1 + fraction]`, redrawing until the
/// geometry is valid. DOAs are unchanged.
pub fn perturb_scene(scene: &SceneConfig, fraction: f64, seed: u64) -> Result<SceneConfig> {
    if !(0.0..0.5).contains(&fraction) {
        return Err(Error::InvalidConfig(format!(
            "perturbation fraction {fraction} outside [0, 0.5)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factor = |rng: &mut ChaCha8Rng| 1.0 + fraction * rng.random_range(-1.0..=1.0);
    for _ in 0..PERTURB_ATTEMPTS {
        let mut s = scene.clone();
        for d in s.room.dims.iter_mut() {
            *d *= factor(&mut rng);
        }
        for c in s.array.center.iter_mut() {
            *c *= factor(&mut rng);
        }
        s.speaker_distance *= factor(&mut rng);
        if let NoiseKind::Directional {
            distance: Some(d), ..
        } = &mut s.noise_kind
        {
            *d *= factor(&mut rng);
        }
        if s.validate().is_ok() && s.room.reflection_coefficient().is_ok() {
            return Ok(s);
        }
    }
    Err(Error::PerturbationFailed(PERTURB_ATTEMPTS))
}
