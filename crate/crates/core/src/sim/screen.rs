use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

use super::medium::LayeredMedium;
use super::probe::ProbeConfig;
use crate::error::{Error, Result};
use crate::matrix::BasisAxis;

#[derive(Debug, Clone, PartialEq)]
pub enum ScreenModel {
    /// Extra phase of a stack of layers relative to a homogeneous reference.
    Layers { medium: LayeredMedium, c_ref: f64 },
    /// `phi(k) = scale·Σ_m (a_m cos + b_m sin)(2πmk/period)/m² − offset`.
    RandomSmooth {
        coeffs: Vec<(f64, f64)>,
        period: f64,
        offset: f64,
        scale: f64,
    },
    /// Linear interpolation in `k`, clamped outside the table.
    Table { k: Vec<f64>, phase: Vec<f64> },
}

/// Unit-modulus far-field transmittance `H(k_x, ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScreen {
    pub model: ScreenModel,
}

impl PhaseScreen {
    /// Transparent screen.
    pub fn identity() -> Self {
        Self {
            model: ScreenModel::Table {
                k: vec![0.0],
                phase: vec![0.0],
            },
        }
    }

    pub fn from_table(k: Vec<f64>, phase: Vec<f64>) -> Result<Self> {
        if k.is_empty() || k.len() != phase.len() {
            return Err(Error::invalid("screen table needs matching non-empty k and phase"));
        }
        if k.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("screen table k must be strictly increasing"));
        }
        if phase.iter().chain(&k).any(|v| !v.is_finite()) {
            return Err(Error::invalid("screen table has non-finite values"));
        }
        Ok(Self {
            model: ScreenModel::Table { k, phase },
        })
    }

    /// Smooth random screen with `n_modes` harmonics of `period` (rad/m), scaled
    /// so its RMS over `[-k_norm, k_norm]` equals `rms` with zero mean there.
    pub fn random_smooth(rms: f64, n_modes: usize, period: f64, k_norm: f64, seed: u64) -> Result<Self> {
        if !(rms >= 0.0) || n_modes == 0 || !(period > 0.0) || !(k_norm > 0.0) {
            return Err(Error::invalid("random screen needs rms >= 0, modes >= 1, positive period and span"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<(f64, f64)> = (1..=n_modes)
            .map(|m| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                let w = 1.0 / (m * m) as f64;
                (a * w, b * w)
            })
            .collect();
        let raw = |k: f64| harmonic_sum(&coeffs, period, k);
        let n = 401;
        let samples: Vec<f64> = (0..n).map(|i| raw(-k_norm + 2.0 * k_norm * i as f64 / (n - 1) as f64)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
        let scale = if var > 0.0 { rms / var.sqrt() } else { 0.0 };
        Ok(Self {
            model: ScreenModel::RandomSmooth {
                coeffs,
                period,
                offset: mean * scale,
                scale,
            },
        })
    }

    /// Phase in radians, `None` where the wave is evanescent in some layer.
    pub fn phase(&self, kx: f64, omega: f64) -> Option<f64> {
        match &self.model {
            ScreenModel::Layers { medium, c_ref } => {
                let kz_ref = kz(omega / c_ref, kx)?;
                let mut phi = 0.0;
                for (d, c) in medium.finite_layers() {
                    phi += d * (kz(omega / c, kx)? - kz_ref);
                }
                Some(phi)
            }
            ScreenModel::RandomSmooth {
                coeffs,
                period,
                offset,
                scale,
            } => Some(scale * harmonic_sum(coeffs, *period, kx) - offset),
            ScreenModel::Table { k, phase } => Some(interp(k, phase, kx)),
        }
    }

    /// `exp(i·phase)`, zero where evanescent.
    pub fn transmittance(&self, kx: f64, omega: f64) -> Complex64 {
        match self.phase(kx, omega) {
            Some(p) => Complex64::from_polar(1.0, p),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Transmittance sampled on a `(k_x, ω)` grid.
    pub fn sample(&self, k: &BasisAxis, omega: &BasisAxis) -> Array2<Complex64> {
        Array2::from_shape_fn((k.len(), omega.len()), |(i, j)| {
            self.transmittance(k.coords()[i], omega.coords()[j])
        })
    }

    pub fn is_dispersive(&self) -> bool {
        matches!(self.model, ScreenModel::Layers { .. })
    }
}

fn kz(k: f64, kx: f64) -> Option<f64> {
    let s = k * k - kx * kx;
    (s > 0.0).then(|| s.sqrt())
}

fn harmonic_sum(coeffs: &[(f64, f64)], period: f64, k: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let arg = 2.0 * PI * (i + 1) as f64 * k / period;
            a * arg.cos() + b * arg.sin()
        })
        .sum()
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

/// Phase screen of a layered overburden relative to a homogeneous medium at
/// `ref_speed`, using the angular-spectrum phase `Σ d_l (k_z,l − k_z,ref)`.
pub fn screen_from_layers(medium: &LayeredMedium, ref_speed: f64, probe: &ProbeConfig) -> Result<PhaseScreen> {
    medium.validate()?;
    probe.validate()?;
    if !(ref_speed > 0.0) {
        return Err(Error::invalid("reference speed must be positive"));
    }
    Ok(PhaseScreen {
        model: ScreenModel::Layers {
            medium: medium.clone(),
            c_ref: ref_speed,
        },
    })
}

/// Which coordinate splits an aberrator into patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchAxis {
    Depth,
    Lateral,
}

/// Aberration seen by a scatterer, possibly depending on its position.
///
/// A scatterer's echo crosses the screen of the patch it lies in, on both the
/// way down and the way up.
#[derive(Debug, Clone, PartialEq)]
pub enum Aberrator {
    None,
    Uniform(PhaseScreen),
    Patches {
        axis: PatchAxis,
        /// `screens.len() - 1` ascending split coordinates.
        boundaries: Vec<f64>,
        screens: Vec<PhaseScreen>,
    },
}

impl Aberrator {
    pub fn validate(&self) -> Result<()> {
        if let Aberrator::Patches { boundaries, screens, .. } = self {
            if screens.is_empty() || boundaries.len() + 1 != screens.len() {
                return Err(Error::invalid("patch aberrator needs one more screen than boundaries"));
            }
            if boundaries.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid("patch boundaries must be increasing"));
            }
        }
        Ok(())
    }

    pub fn n_regions(&self) -> usize {
        match self {
            Aberrator::Patches { screens, .. } => screens.len(),
            _ => 1,
        }
    }

    pub fn region_of(&self, x: f64, z: f64) -> usize {
        match self {
            Aberrator::Patches { axis, boundaries, .. } => {
                let v = match axis {
                    PatchAxis::Depth => z,
                    PatchAxis::Lateral => x,
                };
                boundaries.partition_point(|&b| b <= v)
            }
            _ => 0,
        }
    }

    pub fn screen(&self, region: usize) -> Option<&PhaseScreen> {
        match self {
            Aberrator::None => None,
            Aberrator::Uniform(s) => Some(s),
            Aberrator::Patches { screens, .. } => screens.get(region),
        }
    }

    pub fn screen_at(&self, x: f64, z: f64) -> Option<&PhaseScreen> {
        self.screen(self.region_of(x, z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matched_layer_is_transparent() {
        let m = LayeredMedium::new(vec![0.0, 15e-3], vec![1542.0, 1542.0]).unwrap();
        let s = screen_from_layers(&m, 1542.0, &ProbeConfig::desk()).unwrap();
        for kx in [-5e3, 0.0, 7e3] {
            assert_eq!(s.phase(kx, 2.0 * PI * 5e6), Some(0.0));
        }
    }

    #[test]
    fn normal_incidence_plate() {
        let m = LayeredMedium::new(vec![0.0, 15e-3], vec![2750.0, 1542.0]).unwrap();
        let s = screen_from_layers(&m, 1542.0, &ProbeConfig::desk()).unwrap();
        let f = 7.5e6;
        let want = 2.0 * PI * f * 0.015 * (1.0 / 2750.0 - 1.0 / 1542.0);
        assert!((s.phase(0.0, 2.0 * PI * f).unwrap() - want).abs() < 1e-9 * want.abs());
        let w = 2.0 * PI * f;
        assert_eq!(s.phase(3e3, w), s.phase(-3e3, w));
        // Beyond the critical wavenumber in the plate the wave is evanescent.
        assert!(s.phase(0.99 * w / 1542.0, w).is_none());
        assert_eq!(s.transmittance(0.99 * w / 1542.0, w), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn random_screen_rms_and_determinism() {
        let a = PhaseScreen::random_smooth(2.0, 3, 4e4, 1.2e4, 3).unwrap();
        let b = PhaseScreen::random_smooth(2.0, 3, 4e4, 1.2e4, 3).unwrap();
        assert_eq!(a, b);
        let n = 401;
        let ph: Vec<f64> = (0..n)
            .map(|i| a.phase(-1.2e4 + 2.4e4 * i as f64 / (n - 1) as f64, 1.0).unwrap())
            .collect();
        let mean = ph.iter().sum::<f64>() / n as f64;
        let rms = (ph.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(mean.abs() < 1e-12 && (rms - 2.0).abs() < 1e-12);
        assert!((a.transmittance(123.0, 1.0).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn table_interpolates() {
        let s = PhaseScreen::from_table(vec![-1.0, 1.0], vec![0.0, 2.0]).unwrap();
        assert_eq!(s.phase(0.0, 1.0), Some(1.0));
        assert_eq!(s.phase(5.0, 1.0), Some(2.0));
        assert!(PhaseScreen::from_table(vec![1.0, 0.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn patch_regions() {
        let ab = Aberrator::Patches {
            axis: PatchAxis::Lateral,
            boundaries: vec![0.0],
            screens: vec![PhaseScreen::identity(), PhaseScreen::identity()],
        };
        ab.validate().unwrap();
        assert_eq!(ab.region_of(-1e-3, 5e-3), 0);
        assert_eq!(ab.region_of(1e-3, 5e-3), 1);
        assert_eq!(ab.n_regions(), 2);
    }
}
