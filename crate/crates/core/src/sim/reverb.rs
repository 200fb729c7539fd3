use num_complex::Complex64;

use super::acquisition::SpectralReflection;
use super::medium::LayeredMedium;
use crate::error::{Error, Result};
use crate::matrix::{BasisKind, ComplexMatrix};

/// Parallel-wall multiples inside the first layer of a medium.
#[derive(Debug, Clone, PartialEq)]
pub struct ReverbParams {
    pub amplitude: f64,
    pub order_count: usize,
    /// Round-trip reflection coefficient of the layer (no default is assumed).
    pub reflection_coeff: f64,
    pub layer: LayeredMedium,
}

impl ReverbParams {
    fn layer(&self) -> Result<(f64, f64)> {
        if !(self.amplitude >= 0.0) {
            return Err(Error::invalid("reverberation amplitude must be non-negative"));
        }
        self.layer.validate()?;
        self.layer
            .finite_layers()
            .next()
            .ok_or_else(|| Error::invalid("reverberation needs a medium with a finite top layer"))
    }
}

/// Adds `A·exp(-(k_out+k_in)²/δk²)·Σ_m r^m e^{2imωd/c_l}` to each far-field matrix.
pub fn inject_reverberation_rkk(
    stack: &[ComplexMatrix],
    omegas: &[f64],
    params: &ReverbParams,
    delta_k: f64,
) -> Result<Vec<ComplexMatrix>> {
    let (d, cl) = params.layer()?;
    if stack.len() != omegas.len() {
        return Err(Error::dim("inject_reverberation", "one frequency per matrix"));
    }
    if !(delta_k > 0.0) {
        return Err(Error::invalid("delta_k must be positive"));
    }
    if params.amplitude == 0.0 {
        return Ok(stack.to_vec());
    }
    stack
        .iter()
        .zip(omegas)
        .map(|(m, &w)| {
            if m.kind_pair() != (BasisKind::Wavenumber, BasisKind::Wavenumber) {
                return Err(Error::dim("inject_reverberation", "matrix must be k-by-k"));
            }
            let series: Complex64 = (1..=params.order_count)
                .map(|o| Complex64::from_polar(params.reflection_coeff.powi(o as i32), 2.0 * o as f64 * w * d / cl))
                .sum();
            let ko = m.rows().coords();
            let ki = m.cols().coords();
            ComplexMatrix::from_fn(m.rows().clone(), m.cols().clone(), |i, j| {
                let s = ko[i] + ki[j];
                m.get(i, j) + series * (params.amplitude * (-(s * s) / (delta_k * delta_k)).exp())
            })
        })
        .collect()
}

/// Adds the same multiples to an element-domain acquisition: the echo of plane
/// wave θ returns as a plane wave with the same lateral wavenumber, delayed by
/// `2m·d·k_z` inside the layer and weighted by the pulse spectrum.
pub fn inject_reverberation(spec: &SpectralReflection, params: &ReverbParams) -> Result<SpectralReflection> {
    let (d, cl) = params.layer()?;
    let mut out = spec.clone();
    if params.amplitude == 0.0 {
        return Ok(out);
    }
    let u = spec.probe.element_positions();
    for (m, &w) in out.data.iter_mut().zip(spec.omega.coords()) {
        let k = w / spec.c_model;
        let kl = w / cl;
        let weight = params.amplitude * spec.probe.pulse_spectrum(w / (2.0 * std::f64::consts::PI));
        let per_angle: Vec<Complex64> = spec
            .probe
            .angles
            .iter()
            .map(|a| {
                let kx = k * a.sin();
                let kz2 = kl * kl - kx * kx;
                if kz2 <= 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let kz = kz2.sqrt();
                (1..=params.order_count)
                    .map(|o| Complex64::from_polar(params.reflection_coeff.powi(o as i32), 2.0 * o as f64 * d * kz))
                    .sum::<Complex64>()
                    * weight
            })
            .collect();
        let sin: Vec<f64> = spec.probe.angles.iter().map(|a| a.sin()).collect();
        *m = ComplexMatrix::from_fn(m.rows().clone(), m.cols().clone(), |i, t| {
            m.get(i, t) + per_angle[t] * Complex64::from_polar(1.0, k * sin[t] * u[i])
        })?;
    }
    Ok(out)
}
