use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};

/// Rectangular region (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fov {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Fov {
    pub fn contains(&self, x: f64, z: f64) -> bool {
        x >= self.x_min && x <= self.x_max && z >= self.z_min && z <= self.z_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn depth(&self) -> f64 {
        self.z_max - self.z_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTarget {
    pub x: f64,
    pub z: f64,
    pub reflectivity: f64,
}

/// Disc whose speckle amplitudes are scaled by `multiplier`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inclusion {
    pub x: f64,
    pub z: f64,
    pub radius: f64,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub fov: Fov,
    /// Mean number of speckle scatterers per resolution cell.
    pub speckle_density: f64,
    /// RMS modulus of speckle reflectivities.
    pub speckle_rms: f64,
    pub point_targets: Vec<PointTarget>,
    pub inclusion: Option<Inclusion>,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub x: f64,
    pub z: f64,
    pub amp: Complex64,
}

/// Samples the scene. Depths are snapped to the grid `z_min + j·δz`, the
/// same grid the beamformer uses by default.
pub fn build_phantom(spec: &PhantomSpec, resolution: (f64, f64)) -> Result<Vec<Scatterer>> {
    let (dx, dz) = resolution;
    if !(dx > 0.0 && dz > 0.0) {
        return Err(Error::invalid("resolution must be positive"));
    }
    let fov = spec.fov;
    if !(fov.width() > 0.0 && fov.depth() >= 0.0) {
        return Err(Error::invalid("field of view is empty"));
    }
    if !(spec.speckle_density >= 0.0) || !(spec.speckle_rms >= 0.0) {
        return Err(Error::invalid("speckle density and rms must be non-negative"));
    }
    let nz = (fov.depth() / dz + 1e-9).floor() as usize + 1;
    let snap_z = |z: f64| fov.z_min + ((z - fov.z_min) / dz).round().clamp(0.0, (nz - 1) as f64) * dz;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let cells = fov.width() * fov.depth().max(dz) / (dx * dz);
    let mean = spec.speckle_density * cells;
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::invalid(format!("poisson: {e}")))?
            .sample(&mut rng) as usize
    } else {
        0
    };
    let sigma = spec.speckle_rms / std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(count + spec.point_targets.len());
    for _ in 0..count {
        let x = fov.x_min + rng.gen::<f64>() * fov.width();
        let z = fov.z_min + rng.gen_range(0..nz) as f64 * dz;
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let mut amp = Complex64::new(re * sigma, im * sigma);
        if let Some(inc) = spec.inclusion {
            if (x - inc.x).hypot(z - inc.z) <= inc.radius {
                amp *= inc.multiplier;
            }
        }
        out.push(Scatterer { x, z, amp });
    }
    for p in &spec.point_targets {
        if !fov.contains(p.x, p.z) {
            return Err(Error::invalid(format!("point target ({}, {}) outside fov", p.x, p.z)));
        }
        out.push(Scatterer {
            x: p.x,
            z: snap_z(p.z),
            amp: Complex64::new(p.reflectivity, 0.0),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(density: f64, seed: u64) -> PhantomSpec {
        PhantomSpec {
            fov: Fov {
                x_min: -1e-3,
                x_max: 1e-3,
                z_min: 10e-3,
                z_max: 12e-3,
            },
            speckle_density: density,
            speckle_rms: 1.0,
            point_targets: vec![],
            inclusion: None,
            rng_seed: seed,
        }
    }

    #[test]
    fn single_point_target() {
        let mut s = spec(0.0, 1);
        s.point_targets.push(PointTarget {
            x: 0.0,
            z: 11e-3,
            reflectivity: 1.0,
        });
        let sc = build_phantom(&s, (0.2e-3, 0.2e-3)).unwrap();
        assert_eq!(sc.len(), 1);
    }

    #[test]
    fn deterministic() {
        let a = build_phantom(&spec(2.0, 9), (0.2e-3, 0.2e-3)).unwrap();
        let b = build_phantom(&spec(2.0, 9), (0.2e-3, 0.2e-3)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|s| spec(2.0, 9).fov.contains(s.x, s.z)));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_phantom(&spec(1.0, 1), (0.0, 1.0)).is_err());
        let mut s = spec(1.0, 1);
        s.fov.x_max = s.fov.x_min;
        assert!(build_phantom(&s, (0.2e-3, 0.2e-3)).is_err());
    }
}
