use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Linear-array probe and plane-wave sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub n_elements: usize,
    /// Element pitch (m).
    pub pitch: f64,
    /// Centre frequency (Hz).
    pub f0: f64,
    /// Emitted band (Hz).
    pub f_min: f64,
    pub f_max: f64,
    /// Sampling rate (Hz).
    pub sample_rate: f64,
    /// Plane-wave incidence angles (rad), strictly increasing.
    pub angles: Vec<f64>,
    /// Trace duration (s).
    pub record_length: f64,
}

/// Fraction of the band occupied by each raised-cosine edge of the pulse spectrum.
pub const PULSE_EDGE_FRACTION: f64 = 0.2;

impl ProbeConfig {
    /// Linear-array acquisition parameters: 256 elements at 0.2 mm, 7.5 MHz
    /// centre, 2.5-10 MHz band, 49 angles over ±24°, 30 MHz sampling, 124 µs.
    pub fn reference() -> Self {
        Self {
            n_elements: 256,
            pitch: 0.2e-3,
            f0: 7.5e6,
            f_min: 2.5e6,
            f_max: 10e6,
            sample_rate: 30e6,
            angles: linspace_deg(-24.0, 24.0, 49),
            record_length: 124e-6,
        }
    }

    /// Reduced configuration used for desk-scale runs: 64 elements, 31 angles.
    pub fn desk() -> Self {
        Self {
            n_elements: 64,
            angles: linspace_deg(-24.0, 24.0, 31),
            record_length: 50e-6,
            ..Self::reference()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements < 8 {
            return Err(Error::invalid("probe needs at least 8 elements"));
        }
        if !(self.pitch > 0.0) {
            return Err(Error::invalid("pitch must be positive"));
        }
        if !(0.0 < self.f_min && self.f_min < self.f0 && self.f0 < self.f_max && self.f_max <= 0.5 * self.sample_rate) {
            return Err(Error::invalid("need 0 < f_min < f0 < f_max <= sample_rate/2"));
        }
        if self.angles.is_empty() || self.angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("angles must be non-empty and strictly increasing"));
        }
        if self.angles.iter().any(|a| a.abs() >= 0.5 * PI) {
            return Err(Error::invalid("angles must lie in (-90°, 90°)"));
        }
        if !(self.record_length > 0.0) || self.n_samples() < 4 {
            return Err(Error::invalid("record length too short"));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        (self.record_length * self.sample_rate).round() as usize
    }

    /// Element abscissae, centred on zero.
    pub fn element_positions(&self) -> Vec<f64> {
        let c = 0.5 * (self.n_elements as f64 - 1.0);
        (0..self.n_elements).map(|i| (i as f64 - c) * self.pitch).collect()
    }

    pub fn aperture(&self) -> f64 {
        self.pitch * (self.n_elements as f64 - 1.0)
    }

    /// DFT bin indices whose frequency lies in `[f_min, f_max]`, excluding DC
    /// and Nyquist.
    pub fn band_bins(&self) -> Vec<usize> {
        let n = self.n_samples();
        let df = self.sample_rate / n as f64;
        (1..n.div_ceil(2))
            .filter(|&b| {
                let f = b as f64 * df;
                f >= self.f_min && f <= self.f_max && 2 * b != n
            })
            .collect()
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate / self.n_samples() as f64
    }

    /// Emitted amplitude spectrum: flat over the band with raised-cosine edges.
    pub fn pulse_spectrum(&self, f: f64) -> f64 {
        let w = PULSE_EDGE_FRACTION * (self.f_max - self.f_min);
        if f < self.f_min || f > self.f_max {
            0.0
        } else if f < self.f_min + w {
            0.5 * (1.0 - (PI * (f - self.f_min) / w).cos())
        } else if f > self.f_max - w {
            0.5 * (1.0 - (PI * (self.f_max - f) / w).cos())
        } else {
            1.0
        }
    }
}

pub fn linspace_deg(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a.to_radians()];
    }
    (0..n).map(|i| (a + (b - a) * i as f64 / (n as f64 - 1.0)).to_radians()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let p = ProbeConfig::reference();
        p.validate().unwrap();
        assert_eq!(p.n_elements, 256);
        assert_eq!(p.angles.len(), 49);
        assert!((p.angles[0] + 24f64.to_radians()).abs() < 1e-15);
        assert_eq!(p.n_samples(), 3720);
    }

    #[test]
    fn band_bins_inside_band() {
        let p = ProbeConfig::desk();
        let bins = p.band_bins();
        assert!(!bins.is_empty());
        for b in bins {
            let f = p.bin_frequency(b);
            assert!(f >= p.f_min && f <= p.f_max);
        }
    }

    #[test]
    fn pulse_spectrum_shape() {
        let p = ProbeConfig::desk();
        assert_eq!(p.pulse_spectrum(p.f_min), 0.0);
        assert_eq!(p.pulse_spectrum(p.f0), 1.0);
        assert_eq!(p.pulse_spectrum(p.f_max + 1.0), 0.0);
        let mid = p.f_min + 0.5 * PULSE_EDGE_FRACTION * (p.f_max - p.f_min);
        assert!((p.pulse_spectrum(mid) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid() {
        let mut p = ProbeConfig::desk();
        p.n_elements = 4;
        assert!(p.validate().is_err());
        let mut p = ProbeConfig::desk();
        p.f_max = 20e6;
        assert!(p.validate().is_err());
        let mut p = ProbeConfig::desk();
        p.angles = vec![0.1, 0.0];
        assert!(p.validate().is_err());
    }
}
