mod common;

use proptest::prelude::*;

use dpd_doa::doa::ArrayGeometry;
use dpd_doa::eval::{room_presets, SEGMENT_LEN};
use dpd_doa::room::{
    diffuse_noise, mix_at_snr, noise_source, render_scene, schroeder_t60, simulate_rir, simulate_rir_parts,
    speech_shaped_source, ArrayPose, NoiseKind, RoomConfig, SceneConfig,
};
use dpd_doa::TimeSignal;

fn room1_scene(snr_db: Option<f64>) -> SceneConfig {
    SceneConfig {
        room: RoomConfig::new([7.32, 5.5, 3.0], 0.32),
        array: ArrayPose {
            center: [3.0, 2.1, 1.2],
            geometry: ArrayGeometry::default_ula(),
        },
        speaker_doa: 30.0,
        speaker_distance: 3.0,
        noise_kind: NoiseKind::Directional { doa: -30.0, distance: None },
        snr_db,
        rng_seed: 17,
    }
}

#[test]
fn direct_arrival_timing() {
    for seed in 0..25 {
        let (room, src, mic) = common::random_geometry(seed);
        let parts = simulate_rir_parts(&room, src, mic, 16_000).unwrap();
        let expected = common::distance(src, mic) / 343.0 * 16_000.0;
        assert!((parts.direct.direct_arrival_index as f64 - expected).abs() <= 1.0);
        let peak = common::peak_index(&parts.direct.taps) as f64;
        assert!((peak - expected).abs() <= 1.0, "seed {seed}: peak {peak}, expected {expected}");
        // Reflections travel further, so nothing reflected precedes the sinc
        // support of the line-of-sight image.
        let first = expected.floor() as usize - 40;
        assert!(parts.reverb.taps[..first].iter().all(|&x| x == 0.0));
    }
}

#[test]
fn preset_reverberation_times() {
    for p in room_presets() {
        let src = ArrayPose { center: p.array_center, geometry: ArrayGeometry::default_ula() }
            .point_at(30.0, p.distance);
        let rir = simulate_rir(&p.room, src, p.array_center, 16_000).unwrap();
        let t60 = schroeder_t60(&rir.taps, 16_000).unwrap();
        assert!((t60 / p.room.t60 - 1.0).abs() <= 0.2, "room {}: {t60}", p.id);
    }
}

#[test]
fn diffuse_field_coherence() {
    let geom = ArrayGeometry::default_ula();
    let noise = diffuse_noise(geom.positions(), 5.0, 16_000, 3, 343.0).unwrap();
    let err = common::diffuse_coherence_error(&noise, geom.positions(), 500.0, 4000.0);
    assert!(err < 0.1, "{err}");
}

#[test]
fn ula_direct_path_delay() {
    // 3.5 cm * sin(30 deg) / 343 m/s * 16 kHz = 0.816 samples between neighbours.
    let speech = speech_shaped_source(16_000, 16_000, 2).unwrap();
    let c = render_scene(&room1_scene(None), &speech, &speech).unwrap();
    let expected: f64 = 0.035 * 0.5 / 343.0 * 16_000.0;
    assert!((expected - 0.816).abs() < 1e-3);
    for m in 0..3 {
        // The source sits towards +x, so higher-index mics hear it earlier.
        let lag = common::upsampled_delay(c.direct.channel(m), c.direct.channel(m + 1), 64);
        assert!((lag + expected).abs() <= 0.1, "pair {m}: {lag}");
    }
}

#[test]
fn rendering_is_deterministic() {
    let speech = speech_shaped_source(SEGMENT_LEN, 16_000, 1).unwrap();
    let noise = noise_source(SEGMENT_LEN, 16_000, 2).unwrap();
    let mut s = room1_scene(Some(5.0));
    let a = render_scene(&s, &speech, &noise).unwrap();
    assert_eq!(a, render_scene(&s, &speech, &noise).unwrap());
    s.noise_kind = NoiseKind::Diffuse;
    let b = render_scene(&s, &speech, &noise).unwrap();
    assert_eq!(b, render_scene(&s, &speech, &noise).unwrap());
    for m in 0..4 {
        for i in 0..SEGMENT_LEN {
            let sum = b.direct.channel(m)[i] + b.reverb.channel(m)[i] + b.noise.channel(m)[i];
            assert_eq!(b.mixture.channel(m)[i], sum);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mixed_snr_hits_target(seed in any::<u64>(), snr in -20.0f64..30.0) {
        let s: Vec<f64> = common::gaussian(4000, seed);
        let n: Vec<f64> = common::gaussian(4000, seed ^ 9).iter().map(|v| v * 3.0).collect();
        let speech = TimeSignal::mono(16_000, s).unwrap();
        let mut noise = TimeSignal::mono(16_000, n).unwrap();
        noise.scale(mix_at_snr(&speech, &noise, snr).unwrap());
        let measured = 10.0 * (speech.power(0) / noise.power(0)).log10();
        prop_assert!((measured - snr).abs() < 0.01);
    }
}
