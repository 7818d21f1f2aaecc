use num_complex::Complex64;

use super::{Localizer, Method, SpatialSpectrum};
use crate::error::{Error, Result};
use crate::masking::BinSet;
use crate::stft::Spectrogram;

/// Snapshots with less energy than this carry no phase and are skipped.
const MIN_SNAPSHOT_POWER: f64 = 1e-12;

impl Localizer {
    /// Steered response power with phase transform:
    /// `P(theta) = sum over bins of |x^H g(f, theta)|^2 / ||x||^2`.
    ///
    /// Each bin contributes at most `M`, so the spectrum is bounded by
    /// `M * |bins|`. DC bins are ignored.
    pub fn srp_phat(&self, spec: &Spectrogram, bins: &BinSet) -> Result<SpatialSpectrum> {
        if bins.is_empty() {
            return Err(Error::NoBins);
        }
        self.check_input(spec, bins)?;
        let m = self.geometry.num_mics();
        let n_angles = self.grid.len();
        let mut tables: Vec<Option<Vec<Complex64>>> = vec![None; spec.bins()];
        let mut power = vec![0.0; n_angles];
        let mut x = vec![Complex64::new(0.0, 0.0); m];
        for (t, f) in bins.iter() {
            if f == 0 {
                continue;
            }
            for (xi, v) in x.iter_mut().zip(spec.snapshot(t, f)) {
                *xi = *v;
            }
            let norm: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            if norm < MIN_SNAPSHOT_POWER {
                continue;
            }
            let table = tables[f].get_or_insert_with(|| self.steering_table(f));
            for (p, g) in power.iter_mut().zip(table.chunks_exact(m)) {
                let proj: Complex64 = x.iter().zip(g).map(|(xi, gi)| xi.conj() * gi).sum();
                *p += proj.norm_sqr() / norm;
            }
        }
        Ok(SpatialSpectrum {
            grid: self.grid.clone(),
            power,
            method: Method::SrpPhat,
        })
    }
}
