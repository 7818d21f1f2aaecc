use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Array layout as written in scene files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    /// Microphones on the x axis, `spacing` metres apart.
    Ula { count: usize, spacing: f64 },
    /// Microphones on a horizontal circle, the first on the +x axis.
    Uca { count: usize, radius: f64 },
    /// Arbitrary positions; they are re-centred on their centroid.
    Custom { positions: Vec<[f64; 3]> },
}

/// Microphone positions in array-local coordinates, centroid at the origin.
///
/// Angles are measured in the horizontal plane. For a ULA, `0` is broadside
/// (the +y axis) and positive angles turn towards +x, so the grid
/// `[-90, 90]` covers the half-plane in front of the array without the
/// front-back ambiguity. UCA and custom arrays measure azimuth from +x
/// towards +y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArrayKind", into = "ArrayKind")]
pub struct ArrayGeometry {
    kind: ArrayKind,
    positions: Vec<[f64; 3]>,
}

impl ArrayGeometry {
    pub fn ula(count: usize, spacing: f64) -> Result<Self> {
        Self::try_from(ArrayKind::Ula { count, spacing })
    }

    pub fn uca(count: usize, radius: f64) -> Result<Self> {
        Self::try_from(ArrayKind::Uca { count, radius })
    }

    pub fn custom(positions: Vec<[f64; 3]>) -> Result<Self> {
        Self::try_from(ArrayKind::Custom { positions })
    }

    /// Four microphones, 3.5 cm apart.
    pub fn default_ula() -> Self {
        Self::ula(4, 0.035).expect("valid ULA")
    }

    /// Four microphones on a 3.5 cm radius.
    pub fn default_uca() -> Self {
        Self::uca(4, 0.035).expect("valid UCA")
    }

    pub fn kind(&self) -> &ArrayKind {
        &self.kind
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn num_mics(&self) -> usize {
        self.positions.len()
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, ArrayKind::Ula { .. })
    }

    /// Unit vector pointing from the array towards a source at `theta_deg`.
    pub fn direction(&self, theta_deg: f64) -> [f64; 3] {
        let th = theta_deg.to_radians();
        if self.is_linear() {
            [th.sin(), th.cos(), 0.0]
        } else {
            [th.cos(), th.sin(), 0.0]
        }
    }

    /// Far-field propagation delay of each microphone relative to the origin.
    ///
    /// A microphone displaced towards the source hears the wavefront early,
    /// so its delay is negative.
    pub fn delays(&self, theta_deg: f64, speed_of_sound: f64) -> Vec<f64> {
        let u = self.direction(theta_deg);
        self.positions
            .iter()
            .map(|p| -(p[0] * u[0] + p[1] * u[1] + p[2] * u[2]) / speed_of_sound)
            .collect()
    }
}

impl TryFrom<ArrayKind> for ArrayGeometry {
    type Error = Error;

    fn try_from(kind: ArrayKind) -> Result<Self> {
        let positions = match &kind {
            ArrayKind::Ula { count, spacing } => {
                if *count < 2 || *spacing <= 0.0 {
                    return Err(Error::InvalidConfig(
                        "ULA needs at least 2 mics and positive spacing".into(),
                    ));
                }
                let mid = (*count as f64 - 1.0) / 2.0;
                (0..*count)
                    .map(|i| [(i as f64 - mid) * spacing, 0.0, 0.0])
                    .collect()
            }
            ArrayKind::Uca { count, radius } => {
                if *count < 2 || *radius <= 0.0 {
                    return Err(Error::InvalidConfig(
                        "UCA needs at least 2 mics and positive radius".into(),
                    ));
                }
                (0..*count)
                    .map(|i| {
                        let a = 2.0 * PI * i as f64 / *count as f64;
                        [radius * a.cos(), radius * a.sin(), 0.0]
                    })
                    .collect()
            }
            ArrayKind::Custom { positions } => {
                if positions.len() < 2 {
                    return Err(Error::InvalidConfig(
                        "custom array needs at least 2 mics".into(),
                    ));
                }
                let n = positions.len() as f64;
                let mut c = [0.0; 3];
                for p in positions {
                    for d in 0..3 {
                        c[d] += p[d] / n;
                    }
                }
                positions
                    .iter()
                    .map(|p| [p[0] - c[0], p[1] - c[1], p[2] - c[2]])
                    .collect()
            }
        };
        Ok(Self { kind, positions })
    }
}

impl From<ArrayGeometry> for ArrayKind {
    fn from(g: ArrayGeometry) -> Self {
        g.kind
    }
}

/// Steering angles in degrees, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    angles: Vec<f64>,
}

impl Default for AngleGrid {
    /// -90 to 90 degrees in 1 degree steps.
    fn default() -> Self {
        Self {
            angles: (-90..=90).map(f64::from).collect(),
        }
    }
}

impl AngleGrid {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() || angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "angle grid must be non-empty and strictly increasing".into(),
            ));
        }
        Ok(Self { angles })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub entries: Vec<Complex64>,
    pub frequency: f64,
    pub angle: f64,
}

impl SteeringVector {
    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Far-field steering vector `g(f, theta)`, entry `m = exp(-j 2 pi f tau_m)`.
pub fn steering(
    geom: &ArrayGeometry,
    frequency: f64,
    theta_deg: f64,
    speed_of_sound: f64,
) -> SteeringVector {
    let entries = geom
        .delays(theta_deg, speed_of_sound)
        .into_iter()
        .map(|tau| Complex64::from_polar(1.0, -2.0 * PI * frequency * tau))
        .collect();
    SteeringVector {
        entries,
        frequency,
        angle: theta_deg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ula_broadside_is_all_ones() {
        let g = steering(&ArrayGeometry::default_ula(), 1234.0, 0.0, 343.0);
        for z in &g.entries {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn ula_endfire_phase_step() {
        let g = steering(&ArrayGeometry::default_ula(), 1000.0, 90.0, 343.0);
        let expected = 2.0 * PI * 1000.0 * 0.035 / 343.0;
        assert!((expected - 0.6412).abs() < 1e-4);
        for w in g.entries.windows(2) {
            let step = (w[1] * w[0].conj()).arg();
            assert!((step - expected).abs() < 1e-12, "{step}");
        }
    }

    #[test]
    fn unit_modulus_entries() {
        for geom in [ArrayGeometry::default_ula(), ArrayGeometry::default_uca()] {
            for th in [-90.0, -33.0, 0.0, 17.0, 90.0] {
                let g = steering(&geom, 3100.0, th, 343.0);
                assert!((g.norm_sqr() - 4.0).abs() < 1e-12);
                assert!(g.entries.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn geometries_are_centred() {
        for geom in [
            ArrayGeometry::default_ula(),
            ArrayGeometry::default_uca(),
            ArrayGeometry::custom(vec![[1.0, 0.0, 0.0], [2.0, 1.0, 0.0], [3.0, 2.0, 0.5]]).unwrap(),
        ] {
            for d in 0..3 {
                let c: f64 = geom.positions().iter().map(|p| p[d]).sum();
                assert!(c.abs() < 1e-12);
            }
        }
        let ula = ArrayGeometry::default_ula();
        let p = ula.positions();
        assert!((p[1][0] - p[0][0] - 0.035).abs() < 1e-15);
        let uca = ArrayGeometry::default_uca();
        assert!(uca
            .positions()
            .iter()
            .all(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - 0.035).abs() < 1e-15));
    }

    #[test]
    fn default_grid() {
        let g = AngleGrid::default();
        assert_eq!(g.len(), 181);
        assert_eq!(g.angles()[0], -90.0);
        assert_eq!(g.angles()[180], 90.0);
        assert!(AngleGrid::new(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn geometry_json_round_trip() {
        let g = ArrayGeometry::default_uca();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"uca":{"count":4,"radius":0.035}}"#);
        let back: ArrayGeometry = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<ArrayGeometry>(r#"{"ula":{"count":1,"spacing":0.1}}"#).is_err());
    }
}
