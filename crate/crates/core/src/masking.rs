//! Ideal-ratio-mask targets, the dual-mask direct-path dominance (DPD) test,
//! and selection of the bins that pass it.
//!
//! Two masks are computed per time-frequency bin of a reference channel:
//! the speech mask `(P_d + P_r) / max(P_d + P_r + P_n, xi)` covering direct and
//! reverberant speech, and the direct-path mask `P_d / max(..., xi)`. The DPD
//! refinement zeroes the direct-path mask wherever the speech mask falls
//! below `irm0`, which removes noise-dominated bins that a direct-path
//! estimate alone tends to let through. The bins finally used for
//! localisation are the `n_select` largest refined values inside the
//! analysis band.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use ndarray::{s, Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::room::SceneComponents;
use crate::stft::{band_bins, stft, BandSelection, StftConfig};

pub const DEFAULT_XI_N: f64 = 1e-4;
pub const DEFAULT_IRM0: f64 = 0.5;
pub const DEFAULT_N_SELECT: usize = 1000;
pub const DEFAULT_BAND_HZ: (f64, f64) = (1000.0, 8000.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpdParams {
    /// Power floor in the mask denominators.
    pub xi_n: f64,
    /// Speech-mask gate.
    pub irm0: f64,
    /// Number of bins kept.
    pub n_select: usize,
    pub band: BandSelection,
}

impl DpdParams {
    /// `xi_n = 1e-4`, `irm0 = 0.5`, 1000 bins in 1-8 kHz.
    pub fn defaults(cfg: &StftConfig) -> Result<Self> {
        Ok(Self {
            xi_n: DEFAULT_XI_N,
            irm0: DEFAULT_IRM0,
            n_select: DEFAULT_N_SELECT,
            band: band_bins(cfg, DEFAULT_BAND_HZ.0, DEFAULT_BAND_HZ.1)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi_n > 0.0) {
            return Err(Error::InvalidConfig("xi_n must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.irm0) {
            return Err(Error::InvalidConfig("irm0 must lie in [0, 1]".into()));
        }
        if self.n_select == 0 {
            return Err(Error::InvalidConfig("n_select must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Oracle,
    Estimated,
}

/// Speech and direct-path masks over the same `L x K` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskPair {
    irm_s: Array2<f64>,
    irm_d: Array2<f64>,
    provenance: Provenance,
}

impl MaskPair {
    pub fn new(irm_s: Array2<f64>, irm_d: Array2<f64>, provenance: Provenance) -> Result<Self> {
        if irm_s.dim() != irm_d.dim() {
            return Err(Error::DimensionMismatch(format!(
                "mask dims differ: {:?} vs {:?}",
                irm_s.dim(),
                irm_d.dim()
            )));
        }
        if irm_s
            .iter()
            .chain(irm_d.iter())
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::InvalidConfig("mask values must lie in [0, 1]".into()));
        }
        Ok(Self {
            irm_s,
            irm_d,
            provenance,
        })
    }

    pub fn irm_s(&self) -> &Array2<f64> {
        &self.irm_s
    }

    pub fn irm_d(&self) -> &Array2<f64> {
        &self.irm_d
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn frames(&self) -> usize {
        self.irm_s.nrows()
    }

    pub fn bins(&self) -> usize {
        self.irm_s.ncols()
    }

    /// Brings a network-shaped mask (DC bin dropped, `fft_size / 2` columns)
    /// back onto the full one-sided grid with a zero DC column. Full-width
    /// masks are returned unchanged.
    pub fn with_dc_restored(&self, fft_size: usize) -> Result<MaskPair> {
        let full = fft_size / 2 + 1;
        if self.bins() == full {
            return Ok(self.clone());
        }
        if self.bins() != full - 1 {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} bins; expected {} or {} for fft size {fft_size}",
                self.bins(),
                full,
                full - 1
            )));
        }
        let pad = |m: &Array2<f64>| {
            let mut out = Array2::zeros((m.nrows(), full));
            out.slice_mut(s![.., 1..]).assign(m);
            out
        };
        Ok(MaskPair {
            irm_s: pad(&self.irm_s),
            irm_d: pad(&self.irm_d),
            provenance: self.provenance,
        })
    }
}

/// Speech and direct-path mask values for one bin.
pub fn irm_pair(p_direct: f64, p_reverb: f64, p_noise: f64, xi_n: f64) -> (f64, f64) {
    let denom = (p_direct + p_reverb + p_noise).max(xi_n);
    ((p_direct + p_reverb) / denom, p_direct / denom)
}

/// Target masks from separately rendered components at `ref_channel`.
pub fn oracle_masks(
    components: &SceneComponents,
    cfg: &StftConfig,
    ref_channel: usize,
    xi_n: f64,
) -> Result<MaskPair> {
    let parts = [&components.direct, &components.reverb, &components.noise];
    let (len, fs) = (components.direct.len(), components.direct.sample_rate());
    if parts.iter().any(|p| p.len() != len || p.sample_rate() != fs) {
        return Err(Error::DimensionMismatch(
            "scene components differ in length or sample rate".into(),
        ));
    }
    let powers = parts
        .iter()
        .map(|p| Ok(stft(&p.select(ref_channel)?, cfg)?.power_map(0)))
        .collect::<Result<Vec<_>>>()?;
    let mut irm_s = Array2::zeros(powers[0].dim());
    let mut irm_d = Array2::zeros(powers[0].dim());
    Zip::from(&mut irm_s)
        .and(&mut irm_d)
        .and(&powers[0])
        .and(&powers[1])
        .and(&powers[2])
        .for_each(|s, d, &pd, &pr, &pn| {
            (*s, *d) = irm_pair(pd, pr, pn, xi_n);
        });
    MaskPair::new(irm_s, irm_d, Provenance::Oracle)
}

/// Direct-path mask gated by the speech mask.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedMask {
    pub irm_dpd: Array2<f64>,
}

/// `irm_dpd = 0` where `irm_s < irm0`, else `irm_d`.
pub fn refine_dpd(masks: &MaskPair, irm0: f64) -> RefinedMask {
    let mut irm_dpd = masks.irm_d.clone();
    Zip::from(&mut irm_dpd)
        .and(&masks.irm_s)
        .for_each(|d, &s| {
            if s < irm0 {
                *d = 0.0;
            }
        });
    RefinedMask { irm_dpd }
}

/// Ordered `(frame, bin)` indices used for localisation.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BinSet {
    bins: Vec<(usize, usize)>,
}

impl BinSet {
    pub fn new(bins: Vec<(usize, usize)>) -> Self {
        Self { bins }
    }

    /// Every bin of the band in every frame (the unmasked baseline).
    pub fn full_band(frames: usize, band: &BandSelection) -> Self {
        Self {
            bins: (0..frames)
                .flat_map(|t| band.bins().map(move |f| (t, f)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bins.iter().copied()
    }

    pub fn as_slice(&self) -> &[(usize, usize)] {
        &self.bins
    }

    /// Frames in the set, grouped by frequency bin.
    pub fn by_frequency(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(t, f) in &self.bins {
            map.entry(f).or_default().push(t);
        }
        map
    }
}

/// The `n_select` in-band bins with the largest positive refined mask.
///
/// Ties resolve by value descending, then frame, then bin ascending. Bins
/// with a zero refined mask are never selected, so fewer than `n_select`
/// bins come back when the positive support is small.
pub fn select_bins(refined: &RefinedMask, params: &DpdParams) -> Result<BinSet> {
    params.validate()?;
    let map = &refined.irm_dpd;
    if params.band.bin_hi >= map.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "band reaches bin {} but the mask has {} bins",
            params.band.bin_hi,
            map.ncols()
        )));
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for t in 0..map.nrows() {
        for f in params.band.bins() {
            let v = map[[t, f]];
            if v > 0.0 {
                candidates.push((v, t, f));
            }
        }
    }
    let order = |a: &(f64, usize, usize), b: &(f64, usize, usize)| -> Ordering {
        b.0.total_cmp(&a.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    };
    if candidates.len() > params.n_select {
        candidates.select_nth_unstable_by(params.n_select - 1, order);
        candidates.truncate(params.n_select);
    }
    candidates.sort_unstable_by(order);
    Ok(BinSet::new(
        candidates.into_iter().map(|(_, t, f)| (t, f)).collect(),
    ))
}
