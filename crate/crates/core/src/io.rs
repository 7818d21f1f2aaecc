//! File formats: WAV audio, `.msk` mask pairs, `.spx` spectrogram tensors and
//! spectrum CSV.
//!
//! The binary formats are little-endian throughout and store `f32` samples.
//!
//! ```text
//! .msk  "MSK1" | u32 L | u32 K | u8 provenance | irm_s[L*K] | irm_d[L*K]
//! .spx  "SPX1" | u32 L | u32 K | u32 M | M planes of L*K (re, im) pairs
//! ```
//!
//! Planes are stored frame-major: all bins of frame 0, then frame 1, and so on.

use std::fs;
use std::path::Path;

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use serde::Serialize;

use crate::doa::SpatialSpectrum;
use crate::error::{Error, Result};
use crate::masking::{MaskPair, Provenance};
use crate::signal::TimeSignal;
use crate::stft::Spectrogram;

pub const MSK_MAGIC: &[u8; 4] = b"MSK1";
pub const SPX_MAGIC: &[u8; 4] = b"SPX1";

/// Reads 16-bit PCM or 32-bit float WAV into `[-1, 1]` samples.
pub fn read_wav(path: impl AsRef<Path>) -> Result<TimeSignal> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let n = spec.channels as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        (format, bits) => {
            return Err(Error::Format {
                kind: "wav",
                reason: format!("unsupported sample format {format:?} with {bits} bits"),
            })
        }
    };
    let len = interleaved.len() / n;
    let channels = (0..n)
        .map(|m| (0..len).map(|i| interleaved[i * n + m]).collect())
        .collect();
    TimeSignal::new(spec.sample_rate, channels)
}

/// Writes 32-bit float WAV. Samples are rounded to `f32`.
pub fn write_wav(path: impl AsRef<Path>, signal: &TimeSignal) -> Result<()> {
    let channels = u16::try_from(signal.num_channels()).map_err(|_| Error::Format {
        kind: "wav",
        reason: "too many channels".into(),
    })?;
    let spec = hound::WavSpec {
        channels,
        sample_rate: signal.sample_rate(),
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for i in 0..signal.len() {
        for ch in signal.channels() {
            writer.write_sample(ch[i] as f32)?;
        }
    }
    writer.finalize()?;
    Ok(())
}

pub fn encode_msk(masks: &MaskPair) -> Vec<u8> {
    let (l, k) = (masks.frames(), masks.bins());
    let mut out = Vec::with_capacity(13 + 8 * l * k);
    out.extend_from_slice(MSK_MAGIC);
    out.extend_from_slice(&(l as u32).to_le_bytes());
    out.extend_from_slice(&(k as u32).to_le_bytes());
    out.push(match masks.provenance() {
        Provenance::Oracle => 0,
        Provenance::Estimated => 1,
    });
    for plane in [masks.irm_s(), masks.irm_d()] {
        for v in plane.iter() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_msk(bytes: &[u8]) -> Result<MaskPair> {
    let mut r = Reader::new(bytes, "msk");
    r.magic(MSK_MAGIC)?;
    let l = r.u32()? as usize;
    let k = r.u32()? as usize;
    let provenance = match r.u8()? {
        0 => Provenance::Oracle,
        1 => Provenance::Estimated,
        b => return Err(r.error(format!("unknown provenance byte {b}"))),
    };
    let n = l.checked_mul(k).ok_or_else(|| r.error("dimensions overflow".into()))?;
    let irm_s = Array2::from_shape_vec((l, k), r.f32s(n)?).expect("shape");
    let irm_d = Array2::from_shape_vec((l, k), r.f32s(n)?).expect("shape");
    r.finish()?;
    MaskPair::new(irm_s, irm_d, provenance)
}

pub fn write_msk(path: impl AsRef<Path>, masks: &MaskPair) -> Result<()> {
    fs::write(path, encode_msk(masks))?;
    Ok(())
}

pub fn read_msk(path: impl AsRef<Path>) -> Result<MaskPair> {
    decode_msk(&fs::read(path)?)
}

pub fn encode_spx(spec: &Spectrogram) -> Vec<u8> {
    let (l, k, m) = (spec.frames(), spec.bins(), spec.channels());
    let mut out = Vec::with_capacity(16 + 8 * l * k * m);
    out.extend_from_slice(SPX_MAGIC);
    for d in [l, k, m] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for ch in 0..m {
        for t in 0..l {
            for f in 0..k {
                let z = spec.get(t, f, ch);
                out.extend_from_slice(&(z.re as f32).to_le_bytes());
                out.extend_from_slice(&(z.im as f32).to_le_bytes());
            }
        }
    }
    out
}

pub fn decode_spx(bytes: &[u8]) -> Result<Spectrogram> {
    let mut r = Reader::new(bytes, "spx");
    r.magic(SPX_MAGIC)?;
    let l = r.u32()? as usize;
    let k = r.u32()? as usize;
    let m = r.u32()? as usize;
    let n = l
        .checked_mul(k)
        .and_then(|v| v.checked_mul(m))
        .and_then(|v| v.checked_mul(2))
        .ok_or_else(|| r.error("dimensions overflow".into()))?;
    let values = r.f32s(n)?;
    r.finish()?;
    let mut data = Array3::zeros((l, k, m));
    let mut it = values.chunks_exact(2);
    for ch in 0..m {
        for t in 0..l {
            for f in 0..k {
                let p = it.next().expect("length checked");
                data[[t, f, ch]] = Complex64::new(p[0], p[1]);
            }
        }
    }
    Spectrogram::new(data)
}

pub fn write_spx(path: impl AsRef<Path>, spec: &Spectrogram) -> Result<()> {
    fs::write(path, encode_spx(spec))?;
    Ok(())
}

pub fn read_spx(path: impl AsRef<Path>) -> Result<Spectrogram> {
    decode_spx(&fs::read(path)?)
}

/// Single-channel spectrogram holding a real map, as handed to the mask
/// estimator.
pub fn real_map_spectrogram(map: &Array2<f64>) -> Spectrogram {
    let (l, k) = map.dim();
    let data = Array3::from_shape_fn((l, k, 1), |(t, f, _)| Complex64::new(map[[t, f]], 0.0));
    Spectrogram::new(data).expect("non-empty shape")
}

/// Writes `angle_deg,power` rows.
pub fn write_spectrum_csv(path: impl AsRef<Path>, spectrum: &SpatialSpectrum) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["angle_deg", "power"])?;
    for (a, p) in spectrum.grid.angles().iter().zip(&spectrum.power) {
        w.write_record([a.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    kind: &'static str,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], kind: &'static str) -> Self {
        Self { bytes, pos: 0, kind }
    }

    fn error(&self, reason: String) -> Error {
        Error::Format {
            kind: self.kind,
            reason,
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(self.error(format!(
                "truncated: need {n} bytes at offset {}, file has {}",
                self.pos,
                self.bytes.len()
            )));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let found = self.bytes.get(..4).unwrap_or(self.bytes);
        if found != expected {
            return Err(Error::BadMagic {
                expected: String::from_utf8_lossy(expected).into_owned(),
                found: String::from_utf8_lossy(found).into_owned(),
            });
        }
        self.pos = 4;
        Ok(())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n.checked_mul(4).ok_or_else(|| self.error("dimensions overflow".into()))?;
        Ok(self
            .take(len)?
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.error(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}
