use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{Localizer, Method, SpatialSpectrum};
use crate::error::{Error, Result};
use crate::masking::BinSet;
use crate::stft::Spectrogram;

/// Floor added to the MUSIC denominator.
pub const MUSIC_EPS: f64 = 1e-10;

/// Sample spatial covariance at one frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqCovariance {
    pub bin: usize,
    pub matrix: DMatrix<Complex64>,
    pub snapshots: usize,
}

impl FreqCovariance {
    fn from_frames(spec: &Spectrogram, f: usize, frames: &[usize]) -> Self {
        let m = spec.channels();
        let mut matrix = DMatrix::<Complex64>::zeros(m, m);
        for &t in frames {
            let x = spec.snapshot(t, f);
            for i in 0..m {
                for j in 0..m {
                    matrix[(i, j)] += x[i] * x[j].conj();
                }
            }
        }
        matrix /= Complex64::new(frames.len() as f64, 0.0);
        Self {
            bin: f,
            matrix,
            snapshots: frames.len(),
        }
    }

    /// Eigenvalues ascending, with their eigenvectors as columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_columns(
            &order
                .iter()
                .map(|&i| eig.eigenvectors.column(i).into_owned())
                .collect::<Vec<_>>(),
        );
        (values, vectors)
    }

    /// Eigenvectors of the `M - 1` smallest eigenvalues (single-source model).
    pub fn noise_subspace(&self) -> DMatrix<Complex64> {
        let (_, vectors) = self.eigen();
        let m = vectors.ncols();
        vectors.columns(0, m - 1).into_owned()
    }
}

impl Localizer {
    /// `R(f) = mean of x x^H` over the frames of `bins` at frequency bin `f`.
    pub fn covariance(&self, spec: &Spectrogram, bins: &BinSet, f: usize) -> Result<FreqCovariance> {
        let frames: Vec<usize> = bins.iter().filter(|&(_, b)| b == f).map(|(t, _)| t).collect();
        if frames.is_empty() {
            return Err(Error::FrequencyExcluded(f));
        }
        if frames.iter().any(|&t| t >= spec.frames()) || f >= spec.bins() {
            return Err(Error::DimensionMismatch(format!(
                "bin {f} or its frames lie outside the spectrogram"
            )));
        }
        Ok(FreqCovariance::from_frames(spec, f, &frames))
    }

    /// MUSIC pseudo-spectrum summed over frequencies:
    /// `P(theta) = sum over f of 1 / (||U_n(f)^H g(f, theta)||^2 + eps)`.
    ///
    /// Only frequencies with at least `M` snapshots in `bins` take part,
    /// since fewer leave the noise subspace undetermined. DC is ignored.
    pub fn music(&self, spec: &Spectrogram, bins: &BinSet, eps: f64) -> Result<SpatialSpectrum> {
        if bins.is_empty() {
            return Err(Error::NoBins);
        }
        self.check_input(spec, bins)?;
        let m = self.geometry.num_mics();
        let mut power = vec![0.0; self.grid.len()];
        let mut used = 0;
        for (f, frames) in bins.by_frequency() {
            if f == 0 || frames.len() < m {
                continue;
            }
            used += 1;
            let un = FreqCovariance::from_frames(spec, f, &frames).noise_subspace();
            let table = self.steering_table(f);
            for (p, g) in power.iter_mut().zip(table.chunks_exact(m)) {
                let denom: f64 = un
                    .column_iter()
                    .map(|u| {
                        u.iter()
                            .zip(g)
                            .map(|(ui, gi)| ui.conj() * gi)
                            .sum::<Complex64>()
                            .norm_sqr()
                    })
                    .sum();
                *p += 1.0 / (denom + eps);
            }
        }
        if used == 0 {
            return Err(Error::InsufficientSnapshots);
        }
        Ok(SpatialSpectrum {
            grid: self.grid.clone(),
            power,
            method: Method::Music,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doa::{steering, ArrayGeometry};
    use crate::stft::StftConfig;

    fn localizer() -> Localizer {
        Localizer::new(ArrayGeometry::default_uca(), StftConfig::default())
    }

    /// Rank-one data `x(t, f) = s_t g(f, theta)` on bins 40..60.
    fn rank_one(loc: &Localizer, theta: f64, frames: usize) -> (Spectrogram, BinSet) {
        let mut spec = Spectrogram::zeros(frames, 257, 4);
        let mut bins = Vec::new();
        for f in 40..60 {
            let g = steering(&loc.geometry, loc.stft.bin_frequency(f), theta, 343.0);
            for t in 0..frames {
                let s = Complex64::from_polar(1.0 + t as f64, 0.7 * (t * f) as f64);
                for (m, z) in g.entries.iter().enumerate() {
                    spec.data_mut()[[t, f, m]] = s * z;
                }
                bins.push((t, f));
            }
        }
        (spec, BinSet::new(bins))
    }

    #[test]
    fn single_snapshot_covariance_is_rank_one() {
        let loc = localizer();
        let (spec, bins) = rank_one(&loc, 10.0, 1);
        let cov = loc.covariance(&spec, &bins, 45).unwrap();
        assert_eq!(cov.snapshots, 1);
        let (values, _) = cov.eigen();
        assert!(values[..3].iter().all(|v| v.abs() < 1e-12));
        assert!(values[3] > 1.0);
        let herm = (&cov.matrix - cov.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(herm < 1e-12);
    }

    #[test]
    fn covariance_of_missing_bin() {
        let loc = localizer();
        let (spec, bins) = rank_one(&loc, 10.0, 1);
        assert!(matches!(
            loc.covariance(&spec, &bins, 100),
            Err(Error::FrequencyExcluded(100))
        ));
    }

    #[test]
    fn noise_free_source_is_recovered() {
        let loc = localizer();
        let (spec, bins) = rank_one(&loc, -47.0, 6);
        let s = loc.music(&spec, &bins, MUSIC_EPS).unwrap();
        assert_eq!(s.peak(), -47.0);
        assert!(s.power.iter().all(|&p| p.is_finite() && p <= 20.0 / MUSIC_EPS));
    }

    #[test]
    fn too_few_snapshots() {
        let loc = localizer();
        let (spec, bins) = rank_one(&loc, 0.0, 3);
        assert!(matches!(
            loc.music(&spec, &bins, MUSIC_EPS),
            Err(Error::InsufficientSnapshots)
        ));
    }

    #[test]
    fn noise_subspace_is_orthonormal_and_orthogonal_to_signal() {
        let loc = localizer();
        let (spec, bins) = rank_one(&loc, 25.0, 8);
        let cov = loc.covariance(&spec, &bins, 50).unwrap();
        let un = cov.noise_subspace();
        let gram = un.adjoint() * &un;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-10);
            }
        }
        let (_, vectors) = cov.eigen();
        let principal = vectors.column(3);
        for u in un.column_iter() {
            assert!(u.dotc(&principal).norm() < 1e-10);
        }
    }
}
