use crate::beamform::{beamform, FocalGrid};
use crate::error::{Error, Result};
use crate::farfield::{filter_stack, from_kspace, to_kspace, FarField, ReverbFilterParams};
use crate::par;
use crate::sim::SpectralReflection;

use super::correlate::correlate_columns;
use super::dmatrix::{DistortionMatrix, FovWindow};

/// Fixed parts of a speed-of-sound sweep.
#[derive(Debug, Clone)]
pub struct SweepSetup {
    pub grid: FocalGrid,
    pub window: FovWindow,
    /// Far-field support, held fixed across all candidate speeds.
    pub k_max: f64,
    pub oversample: usize,
    pub filter: Option<ReverbFilterParams>,
}

#[derive(Debug, Clone)]
pub struct SpeedSweep {
    pub c: Vec<f64>,
    /// Entropy of the normalized correlation; `None` for failed points.
    pub entropy: Vec<Option<f64>>,
    /// Grid minimizer.
    pub c_grid: f64,
    /// Parabolic refinement around `c_grid` (equal to it at the ends).
    pub c_star: f64,
}

fn entropy_at(spec: &SpectralReflection, setup: &SweepSetup, ff: &FarField, c: f64) -> Result<f64> {
    let stack = beamform(spec, &setup.grid, c)?;
    let mut rkk = to_kspace(&stack, ff)?;
    if let Some(p) = &setup.filter {
        rkk = filter_stack(&rkk, p)?.0;
    }
    let rxx = from_kspace(&rkk, ff)?;
    let d = DistortionMatrix::from_focused(&rxx, ff, &stack.grid.z, setup.window)?;
    let cols = d.valid_columns();
    Ok(correlate_columns(&d.d, &cols, true)?.entropy)
}

/// Entropy of the normalized distortion correlation versus the beamforming
/// speed; its minimum estimates the effective speed of the medium.
pub fn soundspeed_entropy_sweep(spec: &SpectralReflection, c_grid: &[f64], setup: &SweepSetup) -> Result<SpeedSweep> {
    if c_grid.len() < 2 || c_grid.windows(2).any(|w| !(w[1] > w[0])) || c_grid[0] <= 0.0 {
        return Err(Error::invalid("speed grid must be positive and strictly increasing"));
    }
    setup.window.validate(setup.grid.x.len(), setup.grid.z.len())?;
    let ff = FarField::new(&setup.grid.x, setup.k_max, setup.oversample)?;
    let entropy: Vec<Option<f64>> = par::map_slice(c_grid, |&c| entropy_at(spec, setup, &ff, c).ok().filter(|h| h.is_finite()));
    let i = (0..c_grid.len())
        .filter(|&i| entropy[i].is_some())
        .min_by(|&a, &b| entropy[a].unwrap().total_cmp(&entropy[b].unwrap()))
        .ok_or(Error::NonConvergence {
            op: "speed sweep",
            residual: f64::NAN,
        })?;
    let mut c_star = c_grid[i];
    if i > 0 && i + 1 < c_grid.len() {
        if let (Some(h0), Some(h1), Some(h2)) = (entropy[i - 1], entropy[i], entropy[i + 1]) {
            c_star = parabola_vertex((c_grid[i - 1], h0), (c_grid[i], h1), (c_grid[i + 1], h2))
                .map(|v| v.clamp(c_grid[i - 1], c_grid[i + 1]))
                .unwrap_or(c_star);
        }
    }
    Ok(SpeedSweep {
        c: c_grid.to_vec(),
        entropy,
        c_grid: c_grid[i],
        c_star,
    })
}

fn parabola_vertex(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<f64> {
    let d1 = (b.1 - a.1) / (b.0 - a.0);
    let d2 = (c.1 - b.1) / (c.0 - b.0);
    let curv = (d2 - d1) / (c.0 - a.0);
    if curv <= 0.0 {
        return None;
    }
    Some(0.5 * (a.0 + b.0) - d1 / (2.0 * curv))
}
