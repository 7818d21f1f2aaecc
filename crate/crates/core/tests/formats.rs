mod common;

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use dpd_doa::doa::{AngleGrid, Method, SpatialSpectrum};
use dpd_doa::io::{
    decode_msk, decode_spx, encode_msk, encode_spx, read_msk, read_spx, read_wav,
    write_msk, write_spectrum_csv, write_spx, write_wav,
};
use dpd_doa::masking::{MaskPair, Provenance};
use dpd_doa::stft::Spectrogram;
use dpd_doa::{Error, TimeSignal};

/// Values that survive the f32 narrowing unchanged.
fn f32_value(r: &mut impl Rng) -> f64 {
    r.random::<f32>() as f64
}

fn random_masks(seed: u64, l: usize, k: usize) -> MaskPair {
    let mut r = common::rng(seed);
    let s = Array2::from_shape_fn((l, k), |_| f32_value(&mut r));
    let d = s.mapv(|v| (v * 0.5) as f32 as f64);
    MaskPair::new(s, d, Provenance::Estimated).unwrap()
}

fn random_spec(seed: u64, l: usize, k: usize, m: usize) -> Spectrogram {
    let mut r = common::rng(seed);
    let data = Array3::from_shape_fn((l, k, m), |_| {
        let re = (r.random::<f32>() - 0.5) as f64;
        let im = (r.random::<f32>() * 100.0) as f64;
        Complex64::new(re, im)
    });
    Spectrogram::new(data).unwrap()
}

#[test]
fn msk_file_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.msk");
    let masks = random_masks(1, 256, 257);
    write_msk(&path, &masks).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 13 + 2 * 4 * 256 * 257);
    let back = read_msk(&path).unwrap();
    assert_eq!(back, masks);
    assert_eq!(encode_msk(&back), bytes);
}

#[test]
fn spx_file_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.spx");
    let spec = random_spec(2, 256, 257, 4);
    write_spx(&path, &spec).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 16 + 8 * 256 * 257 * 4);
    let back = read_spx(&path).unwrap();
    assert_eq!(back, spec);
    assert_eq!(encode_spx(&back), bytes);
}

#[test]
fn damaged_files_are_rejected() {
    let masks = encode_msk(&random_masks(3, 4, 5));
    let mut bad = masks.clone();
    bad[0] = b'X';
    assert!(matches!(decode_msk(&bad), Err(Error::BadMagic { .. })));
    assert!(matches!(decode_msk(&masks[..masks.len() - 1]), Err(Error::Format { .. })));
    let mut long = masks.clone();
    long.push(0);
    assert!(matches!(decode_msk(&long), Err(Error::Format { .. })));
    let mut prov = masks;
    prov[12] = 7;
    assert!(matches!(decode_msk(&prov), Err(Error::Format { .. })));

    let spx = encode_spx(&random_spec(4, 2, 3, 2));
    assert!(matches!(decode_spx(&spx[..10]), Err(Error::Format { .. })));
    assert!(matches!(decode_spx(&encode_msk(&random_masks(5, 2, 2))), Err(Error::BadMagic { .. })));
}

#[test]
fn multichannel_wav_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.wav");
    let chans: Vec<Vec<f64>> = (0..4)
        .map(|m| common::gaussian(1000, m).iter().map(|v| (v * 0.1) as f32 as f64).collect())
        .collect();
    let sig = TimeSignal::new(16_000, chans).unwrap();
    write_wav(&path, &sig).unwrap();
    assert_eq!(read_wav(&path).unwrap(), sig);
}

#[test]
fn spectrum_csv_has_one_row_per_angle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let power: Vec<f64> = (0..181).map(|i| i as f64 * 0.5).collect();
    let s = SpatialSpectrum { grid: AngleGrid::default(), power: power.clone(), method: Method::Music };
    write_spectrum_csv(&path, &s).unwrap();
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["angle_deg", "power"]);
    let rows: Vec<(f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 181);
    assert_eq!(rows[0], (-90.0, 0.0));
    assert_eq!(rows[180], (90.0, 90.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn msk_decode_inverts_encode(seed in any::<u64>(), l in 1usize..20, k in 1usize..20) {
        let masks = random_masks(seed, l, k);
        prop_assert_eq!(decode_msk(&encode_msk(&masks)).unwrap(), masks);
    }

    #[test]
    fn spx_decode_inverts_encode(seed in any::<u64>(), l in 1usize..10, k in 1usize..10, m in 1usize..5) {
        let spec = random_spec(seed, l, k, m);
        prop_assert_eq!(decode_spx(&encode_spx(&spec)).unwrap(), spec);
    }

    #[test]
    fn truncation_never_decodes(seed in any::<u64>(), cut in 0usize..100) {
        let bytes = encode_msk(&random_masks(seed, 3, 4));
        let cut = cut % bytes.len();
        prop_assert!(decode_msk(&bytes[..cut]).is_err());
    }
}
