use crate::error::{Error, Result};

/// Multichannel real-valued signal with a shared sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    sample_rate: u32,
    channels: Vec<Vec<f64>>,
}

impl TimeSignal {
    pub fn new(sample_rate: u32, channels: Vec<Vec<f64>>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        if channels.is_empty() {
            return Err(Error::InvalidConfig("signal needs at least one channel".into()));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::DimensionMismatch(
                "all channels must have equal length".into(),
            ));
        }
        Ok(Self {
            sample_rate,
            channels,
        })
    }

    pub fn mono(sample_rate: u32, samples: Vec<f64>) -> Result<Self> {
        Self::new(sample_rate, vec![samples])
    }

    pub fn zeros(sample_rate: u32, num_channels: usize, len: usize) -> Result<Self> {
        Self::new(sample_rate, vec![vec![0.0; len]; num_channels.max(1)])
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, m: usize) -> &[f64] {
        &self.channels[m]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// Single-channel view of channel `m`.
    pub fn select(&self, m: usize) -> Result<TimeSignal> {
        let ch = self.channels.get(m).ok_or_else(|| {
            Error::DimensionMismatch(format!(
                "channel {m} requested from a {}-channel signal",
                self.num_channels()
            ))
        })?;
        TimeSignal::mono(self.sample_rate, ch.clone())
    }

    /// Mean power of channel `m`.
    pub fn power(&self, m: usize) -> f64 {
        let ch = &self.channels[m];
        if ch.is_empty() {
            return 0.0;
        }
        ch.iter().map(|x| x * x).sum::<f64>() / ch.len() as f64
    }

    pub fn scale(&mut self, gain: f64) {
        for x in self.channels.iter_mut().flatten() {
            *x *= gain;
        }
    }

    /// Element-wise sum. Both signals must share rate and shape.
    pub fn add(&self, other: &TimeSignal) -> Result<TimeSignal> {
        if self.sample_rate != other.sample_rate
            || self.num_channels() != other.num_channels()
            || self.len() != other.len()
        {
            return Err(Error::DimensionMismatch(
                "signals differ in rate, channel count or length".into(),
            ));
        }
        let channels = self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        TimeSignal::new(self.sample_rate, channels)
    }
}
