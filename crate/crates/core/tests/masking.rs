mod common;

use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

use dpd_doa::eval::{dpd_bins, SEGMENT_LEN};
use dpd_doa::masking::{
    irm_pair, oracle_masks, refine_dpd, select_bins, DpdParams, MaskPair, Provenance,
};
use dpd_doa::room::{
    noise_source, render_scene, speech_shaped_source, ArrayPose, NoiseKind, RoomConfig,
    SceneConfig,
};
use dpd_doa::doa::ArrayGeometry;
use dpd_doa::stft::{band_bins, stft, StftConfig};

fn scene(snr_db: Option<f64>, anechoic: bool) -> SceneConfig {
    let mut room = RoomConfig::new([7.32, 5.5, 3.0], 0.32);
    room.anechoic = anechoic;
    SceneConfig {
        room,
        array: ArrayPose {
            center: [3.0, 2.1, 1.2],
            geometry: ArrayGeometry::default_ula(),
        },
        speaker_doa: 30.0,
        speaker_distance: 3.0,
        noise_kind: NoiseKind::Directional { doa: -30.0, distance: None },
        snr_db,
        rng_seed: 5,
    }
}

/// Power triples spread over twelve decades, zeros included.
fn random_power(r: &mut impl Rng) -> f64 {
    if r.random_bool(0.05) {
        0.0
    } else {
        10f64.powf(r.random_range(-10.0..2.0))
    }
}

#[test]
fn ten_thousand_triples() {
    let mut r = common::rng(42);
    for _ in 0..10_000 {
        let (pd, pr, pn) = (random_power(&mut r), random_power(&mut r), random_power(&mut r));
        let (s, d) = irm_pair(pd, pr, pn, 1e-4);
        assert!(0.0 <= d && d <= s && s <= 1.0, "{pd} {pr} {pn} -> {s} {d}");
        let (os, od) = common::scalar_irm(pd, pr, pn, 1e-4);
        assert!((s - os).abs() <= 1e-12 && (d - od).abs() <= 1e-12);
    }
}

#[test]
fn oracle_masks_match_scalar_evaluation() {
    let cfg = StftConfig::default();
    let speech = speech_shaped_source(8192, 16_000, 3).unwrap();
    let noise = noise_source(8192, 16_000, 4).unwrap();
    let c = render_scene(&scene(Some(0.0), false), &speech, &noise).unwrap();
    let masks = oracle_masks(&c, &cfg, 1, 1e-4).unwrap();
    let p = |s: &dpd_doa::TimeSignal| stft(&s.select(1).unwrap(), &cfg).unwrap().power_map(0);
    let (pd, pr, pn) = (p(&c.direct), p(&c.reverb), p(&c.noise));
    assert_eq!(masks.provenance(), Provenance::Oracle);
    for ((t, f), s) in masks.irm_s().indexed_iter() {
        let (os, od) = common::scalar_irm(pd[[t, f]], pr[[t, f]], pn[[t, f]], 1e-4);
        assert!((s - os).abs() <= 1e-12);
        assert!((masks.irm_d()[[t, f]] - od).abs() <= 1e-12);
    }
}

#[test]
fn anechoic_clean_masks_are_one_where_audible() {
    let cfg = StftConfig::default();
    let speech = speech_shaped_source(SEGMENT_LEN, 16_000, 8).unwrap();
    let c = render_scene(&scene(None, true), &speech, &speech).unwrap();
    let masks = oracle_masks(&c, &cfg, 0, 1e-4).unwrap();
    let pd = stft(&c.direct.select(0).unwrap(), &cfg).unwrap().power_map(0);
    assert_eq!(masks.irm_s().dim(), (256, 257));
    let mut audible = 0;
    for ((t, f), &p) in pd.indexed_iter() {
        if p >= 1e-4 {
            audible += 1;
            assert!((masks.irm_s()[[t, f]] - 1.0).abs() < 1e-9);
            // Reverb is numerically zero but not exactly; irm_d tracks it.
            assert!((masks.irm_d()[[t, f]] - 1.0).abs() < 1e-6);
        }
    }
    assert!(audible > 1000);
}

#[test]
fn full_support_selects_exactly_n() {
    let cfg = StftConfig::default();
    let mut r = common::rng(7);
    let map = Array2::from_shape_fn((256, 257), |_| r.random_range(1e-6..1.0));
    let masks = MaskPair::new(Array2::ones((256, 257)), map.clone(), Provenance::Oracle).unwrap();
    let params = DpdParams::defaults(&cfg).unwrap();
    let bins = dpd_bins(&masks, &params).unwrap();
    assert_eq!(bins.len(), 1000);
    let oracle = common::full_sort_select(&map, 32, 256, 1000);
    assert_eq!(bins.as_slice(), &oracle[..]);
    let inside: std::collections::HashSet<_> = bins.iter().collect();
    let min_in = bins.iter().map(|(t, f)| map[[t, f]]).fold(f64::INFINITY, f64::min);
    let max_out = (0..256)
        .flat_map(|t| (32..=256).map(move |f| (t, f)))
        .filter(|b| !inside.contains(b))
        .map(|(t, f)| map[[t, f]])
        .fold(0.0, f64::max);
    assert!(min_in >= max_out);
}

fn masks_strategy() -> impl Strategy<Value = (Array2<f64>, Array2<f64>)> {
    (2usize..12, 40usize..60).prop_flat_map(|(l, k)| {
        (
            prop::collection::vec(0.0f64..=1.0, l * k),
            prop::collection::vec(0.0f64..=1.0, l * k),
        )
            .prop_map(move |(a, b)| {
                let s = Array2::from_shape_vec((l, k), a).unwrap();
                let d = Array2::from_shape_vec((l, k), b).unwrap();
                // Enforce irm_d <= irm_s as the targets do.
                let d = ndarray::Zip::from(&s).and(&d).map_collect(|&s, &d| d * s);
                (s, d)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selection_matches_full_sort((s, d) in masks_strategy(), n in 1usize..80, irm0 in 0.0f64..1.0) {
        let cfg = StftConfig { fft_size: 96, hop: 24, ..StftConfig::default() };
        let k = s.ncols();
        let band = band_bins(&cfg, 1000.0, 8000.0).unwrap();
        prop_assume!(band.bin_hi < k);
        let masks = MaskPair::new(s, d, Provenance::Estimated).unwrap();
        let refined = refine_dpd(&masks, irm0);
        let params = DpdParams { xi_n: 1e-4, irm0, n_select: n, band };
        let bins = select_bins(&refined, &params).unwrap();
        let oracle = common::full_sort_select(&refined.irm_dpd, band.bin_lo, band.bin_hi, n);
        prop_assert_eq!(bins.as_slice(), &oracle[..]);
        prop_assert!(bins.len() <= n);
    }

    #[test]
    fn gate_is_monotone((s, d) in masks_strategy(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let masks = MaskPair::new(s, d, Provenance::Oracle).unwrap();
        let loose = refine_dpd(&masks, lo);
        let strict = refine_dpd(&masks, hi);
        for (x, y) in strict.irm_dpd.iter().zip(&loose.irm_dpd) {
            prop_assert!(*x == 0.0 || x == y);
            prop_assert!(x <= y);
        }
    }

    #[test]
    fn irm_bounds(pd in 0.0f64..1e3, pr in 0.0f64..1e3, pn in 0.0f64..1e3, xi in 1e-8f64..1.0) {
        let (s, d) = irm_pair(pd, pr, pn, xi);
        prop_assert!(0.0 <= d && d <= s && s <= 1.0);
    }
}
