use serde::{Deserialize, Serialize};

use super::AngleGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SrpPhat,
    Music,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::SrpPhat => "srp-phat",
            Method::Music => "music",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Steered power over an angle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSpectrum {
    pub grid: AngleGrid,
    pub power: Vec<f64>,
    pub method: Method,
}

impl SpatialSpectrum {
    pub fn peak(&self) -> f64 {
        pick_doa(self)
    }

    /// Power scaled so the maximum is 1 (unchanged if all zero).
    pub fn normalized(&self) -> Vec<f64> {
        let max = self.power.iter().cloned().fold(0.0, f64::max);
        if max > 0.0 {
            self.power.iter().map(|p| p / max).collect()
        } else {
            self.power.clone()
        }
    }
}

/// Angle of the global maximum; ties go to the smallest angle.
pub fn pick_doa(spectrum: &SpatialSpectrum) -> f64 {
    let mut best = 0;
    for (i, p) in spectrum.power.iter().enumerate() {
        if *p > spectrum.power[best] {
            best = i;
        }
    }
    spectrum.grid.angles()[best]
}
