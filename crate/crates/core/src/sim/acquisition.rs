use ndarray::Array3;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::probe::ProbeConfig;
use crate::error::{Error, Result};
use crate::matrix::{BasisAxis, BasisKind, ComplexMatrix};
use crate::par;

/// Real-valued plane-wave traces `R(u, θ, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAcquisition {
    pub probe: ProbeConfig,
    /// Shape `(n_elements, n_angles, n_samples)`.
    pub traces: Array3<f64>,
    /// Wave speed the acquisition was generated with (or is assumed to have).
    pub c_model: f64,
}

/// Per-frequency reflection matrices `R_uθ(ω)` over the probe band.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReflection {
    pub probe: ProbeConfig,
    /// DFT bin index of each matrix.
    pub bins: Vec<usize>,
    pub omega: BasisAxis,
    pub data: Vec<ComplexMatrix>,
    pub c_model: f64,
}

impl SpectralReflection {
    /// All-zero spectra on the probe band.
    pub fn zeros(probe: &ProbeConfig, c_model: f64) -> Result<Self> {
        probe.validate()?;
        let bins = probe.band_bins();
        let omega = omega_axis(probe, &bins)?;
        let (ua, ta) = element_angle_axes(probe)?;
        let data = bins.iter().map(|_| ComplexMatrix::zeros(ua.clone(), ta.clone())).collect();
        Ok(Self {
            probe: probe.clone(),
            bins,
            omega,
            data,
            c_model,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Bin spacing in rad/s.
    pub fn d_omega(&self) -> f64 {
        2.0 * PI * self.probe.sample_rate / self.probe.n_samples() as f64
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|m| m.frobenius_norm().powi(2)).sum()
    }
}

impl RawAcquisition {
    pub fn validate(&self) -> Result<()> {
        self.probe.validate()?;
        let want = (self.probe.n_elements, self.probe.angles.len(), self.probe.n_samples());
        if self.traces.dim() != want {
            return Err(Error::dim("RawAcquisition", format!("{:?} vs {:?}", self.traces.dim(), want)));
        }
        if self.traces.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("acquisition contains non-finite samples"));
        }
        Ok(())
    }

    pub fn energy(&self) -> f64 {
        self.traces.iter().map(|v| v * v).sum()
    }
}

pub(crate) fn element_angle_axes(probe: &ProbeConfig) -> Result<(BasisAxis, BasisAxis)> {
    Ok((
        BasisAxis::new(BasisKind::Element, probe.element_positions())?,
        BasisAxis::new(BasisKind::Angle, probe.angles.clone())?,
    ))
}

pub(crate) fn omega_axis(probe: &ProbeConfig, bins: &[usize]) -> Result<BasisAxis> {
    BasisAxis::new(
        BasisKind::Frequency,
        bins.iter().map(|&b| 2.0 * PI * probe.bin_frequency(b)).collect(),
    )
}

/// Real traces from band spectra: `x[t] = (2/N) Re Σ_n X[n] e^{-2πint/N}`.
///
/// Inverse of [`spectra_from_traces`] on the band bins.
pub fn traces_from_spectra(spec: &SpectralReflection) -> Result<RawAcquisition> {
    let probe = &spec.probe;
    probe.validate()?;
    let n = probe.n_samples();
    if spec.bins.iter().any(|&b| b == 0 || 2 * b >= n) {
        return Err(Error::invalid("band bins must exclude DC and Nyquist"));
    }
    let (nu, nt) = (probe.n_elements, probe.angles.len());
    let fft = FftPlanner::new().plan_fft_forward(n);
    let rows: Vec<Vec<f64>> = par::map_range(nu, |u| {
        let mut out = vec![0.0; nt * n];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for th in 0..nt {
            buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for (m, &b) in spec.data.iter().zip(&spec.bins) {
                buf[b] = m.get(u, th);
            }
            fft.process(&mut buf);
            let scale = 2.0 / n as f64;
            for (o, z) in out[th * n..(th + 1) * n].iter_mut().zip(&buf) {
                *o = scale * z.re;
            }
        }
        out
    });
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let traces = Array3::from_shape_vec((nu, nt, n), flat).expect("shape");
    Ok(RawAcquisition {
        probe: probe.clone(),
        traces,
        c_model: spec.c_model,
    })
}

/// Temporal DFT of every trace, `X[n] = Σ_t x[t] e^{+2πint/N}`, kept on the band bins.
///
/// With time-harmonic fields written as `e^{-iωt}`, an echo delayed by `τ`
/// carries the phase `+ωτ`.
pub fn spectra_from_traces(acq: &RawAcquisition) -> Result<SpectralReflection> {
    acq.validate()?;
    let probe = &acq.probe;
    let n = probe.n_samples();
    let bins = probe.band_bins();
    let (nu, nt) = (probe.n_elements, probe.angles.len());
    let fft = FftPlanner::new().plan_fft_inverse(n);
    let per_u: Vec<Vec<Complex64>> = par::map_range(nu, |u| {
        let mut out = vec![Complex64::new(0.0, 0.0); nt * bins.len()];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for th in 0..nt {
            for (b, v) in buf.iter_mut().zip(acq.traces.slice(ndarray::s![u, th, ..])) {
                *b = Complex64::new(*v, 0.0);
            }
            fft.process(&mut buf);
            for (j, &b) in bins.iter().enumerate() {
                out[j * nt + th] = buf[b];
            }
        }
        out
    });
    let (ua, ta) = element_angle_axes(probe)?;
    let data = (0..bins.len())
        .map(|j| {
            let mut v = Vec::with_capacity(nu * nt);
            for row in &per_u {
                v.extend_from_slice(&row[j * nt..(j + 1) * nt]);
            }
            ComplexMatrix::from_vec_unchecked(ua.clone(), ta.clone(), v)
        })
        .collect();
    Ok(SpectralReflection {
        probe: probe.clone(),
        omega: omega_axis(probe, &bins)?,
        bins,
        data,
        c_model: acq.c_model,
    })
}
