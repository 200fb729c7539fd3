//! Focused reflection matrices from plane-wave acquisitions.

use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matrix::kernels::gemm_acc;
use crate::matrix::{BasisAxis, BasisKind, ComplexMatrix};
use crate::par;
use crate::sim::{spectra_from_traces, RawAcquisition, SpectralReflection};
use crate::special::green_2d;

pub use crate::sim::spectra_from_traces as temporal_dft;

/// Lateral and axial positions of the virtual transducers.
#[derive(Debug, Clone, PartialEq)]
pub struct FocalGrid {
    pub x: BasisAxis,
    pub z: BasisAxis,
}

impl FocalGrid {
    pub fn new(x: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        let g = Self {
            x: BasisAxis::new(BasisKind::FocalX, x)?,
            z: BasisAxis::new(BasisKind::Depth, z)?,
        };
        if g.x.is_empty() || g.z.is_empty() {
            return Err(Error::invalid("focal grid must be non-empty"));
        }
        if g.z.coords()[0] <= 0.0 {
            return Err(Error::invalid("focal depths must be positive"));
        }
        Ok(g)
    }

    /// `nx` points at pitch `dx` centred on zero and depths `z_min..=z_max` at `dz`.
    pub fn regular(nx: usize, dx: f64, z_min: f64, z_max: f64, dz: f64) -> Result<Self> {
        let nz = ((z_max - z_min) / dz + 1e-9).floor() as usize + 1;
        let x = BasisAxis::centered(BasisKind::FocalX, dx, nx)?.coords().to_vec();
        Self::new(x, (0..nz).map(|j| z_min + j as f64 * dz).collect())
    }

    pub fn dx(&self) -> f64 {
        self.x.uniform_step().unwrap_or(0.0)
    }

    pub fn dz(&self) -> f64 {
        self.z.uniform_step().unwrap_or(0.0)
    }
}

/// Broadband focused reflection matrices `R_xx(z)`, one per depth.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusedStack {
    pub grid: FocalGrid,
    /// Square `x_out × x_in` matrices, ordered by depth.
    pub planes: Vec<ComplexMatrix>,
    /// Wave speed assumed when focusing.
    pub c: f64,
    /// Nominal axial resolution `c / (2 B)` of the band `B`.
    pub axial_resolution: f64,
    /// Non-fatal remarks such as depths beyond the recorded time window.
    pub warnings: Vec<String>,
}

impl FocusedStack {
    pub fn n_depths(&self) -> usize {
        self.planes.len()
    }
}

/// Plane-wave propagator `P0(x, θ) = exp[ik(z cosθ + x sinθ)]` at depth `z`.
pub fn build_p0(theta: &BasisAxis, x: &BasisAxis, z: f64, omega: f64, c: f64) -> Result<ComplexMatrix> {
    if !(c > 0.0) {
        return Err(Error::invalid("c must be positive"));
    }
    let k = omega / c;
    ComplexMatrix::from_fn(x.clone(), theta.clone(), |i, j| {
        let t = theta.coords()[j];
        Complex64::from_polar(1.0, k * (z * t.cos() + x.coords()[i] * t.sin()))
    })
}

/// Green's function `G0(x, u) = -(i/4) H0^(1)(k|r - u|)` for focal
/// points `(x, z)` and elements at depth zero.
pub fn build_g0(u: &BasisAxis, x: &BasisAxis, z: f64, omega: f64, c: f64) -> Result<ComplexMatrix> {
    if !(c > 0.0 && omega > 0.0) {
        return Err(Error::invalid("omega and c must be positive"));
    }
    let k = omega / c;
    let mut out = Array2::zeros((x.len(), u.len()));
    for (i, &xi) in x.coords().iter().enumerate() {
        for (j, &uj) in u.coords().iter().enumerate() {
            let r = (xi - uj).hypot(z);
            if r == 0.0 {
                return Err(Error::invalid("focal point coincides with an element"));
            }
            out[[i, j]] = green_2d(k * r);
        }
    }
    ComplexMatrix::new(x.clone(), u.clone(), out)
}

/// Per-frequency focused matrices at one depth: `G0* × R_uθ(ω) × P0†`.
pub fn focus_depth(spec: &SpectralReflection, z: f64, c: f64, x: &BasisAxis) -> Result<Vec<ComplexMatrix>> {
    if !(z > 0.0) {
        return Err(Error::invalid("depth must be positive"));
    }
    let u = spec.data.first().map(|m| m.rows().clone());
    let Some(u) = u else { return Ok(Vec::new()) };
    let theta = spec.data[0].cols().clone();
    spec.data
        .iter()
        .zip(spec.omega.coords())
        .map(|(r, &w)| {
            let g = build_g0(&u, x, z, w, c)?.conj();
            let p = build_p0(&theta, x, z, w, c)?.adjoint();
            g.matmul(r)?.matmul(&p)
        })
        .collect()
}

/// Coherent sum `Σ_ω w_ω R(ω)` in the given (ascending-frequency) order.
pub fn broadband_stack(per_omega: &[ComplexMatrix], weights: Option<&[f64]>) -> Result<ComplexMatrix> {
    if per_omega.len() < 2 {
        return Err(Error::invalid("broadband sum needs at least two bins"));
    }
    if let Some(w) = weights {
        if w.len() != per_omega.len() {
            return Err(Error::dim("broadband_stack", "one weight per bin"));
        }
    }
    let mut acc = ComplexMatrix::zeros(per_omega[0].rows().clone(), per_omega[0].cols().clone());
    for (i, m) in per_omega.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        acc = acc.add(&m.scale(Complex64::new(w, 0.0)))?;
    }
    Ok(acc)
}

/// Riemann weights of the band sum: pulse spectrum times bin spacing.
pub fn band_weights(spec: &SpectralReflection) -> Vec<f64> {
    let dw = spec.d_omega();
    spec.omega
        .coords()
        .iter()
        .map(|w| spec.probe.pulse_spectrum(w / (2.0 * PI)) * dw)
        .collect()
}

/// Full broadband focusing of every depth of `grid` at wave speed `c`.
///
/// Depths are processed in parallel; each depth sums frequencies in
/// ascending order so the result does not depend on the thread count.
pub fn beamform(spec: &SpectralReflection, grid: &FocalGrid, c: f64) -> Result<FocusedStack> {
    if !(c > 0.0) {
        return Err(Error::invalid("c must be positive"));
    }
    if spec.len() < 2 {
        return Err(Error::invalid("beamforming needs at least two frequency bins"));
    }
    let probe = &spec.probe;
    let u = probe.element_positions();
    let xs = grid.x.coords();
    let (nx, nu, nt) = (xs.len(), u.len(), probe.angles.len());
    let weights = band_weights(spec);
    let active: Vec<usize> = (0..spec.len()).filter(|&i| weights[i] != 0.0).collect();
    let omegas = spec.omega.coords();
    let sin: Vec<f64> = probe.angles.iter().map(|a| a.sin()).collect();
    let cos: Vec<f64> = probe.angles.iter().map(|a| a.cos()).collect();

    // E(ω)[θ, x] = e^{-ikx sinθ}, shared by all depths.
    let e_tables: Vec<Vec<Complex64>> = par::map_slice(&active, |&i| {
        let k = omegas[i] / c;
        let mut e = vec![Complex64::new(0.0, 0.0); nt * nx];
        for t in 0..nt {
            for (j, &x) in xs.iter().enumerate() {
                e[t * nx + j] = Complex64::from_polar(1.0, -k * x * sin[t]);
            }
        }
        e
    });

    // With equal lateral steps G0(x_i - u_j) depends on i - j only.
    let toeplitz = match (grid.x.uniform_step(), uniform_step(&u)) {
        (Some(a), Some(b)) => ((a - b).abs() <= 1e-9 * b).then_some(b),
        _ => None,
    };

    let planes = par::map_range(grid.z.len(), |iz| {
        let z = grid.z.coords()[iz];
        let mut acc = vec![Complex64::new(0.0, 0.0); nx * nx];
        let mut g = vec![Complex64::new(0.0, 0.0); nx * nu];
        let mut t1 = vec![Complex64::new(0.0, 0.0); nx * nt];
        for (a, &i) in active.iter().enumerate() {
            let k = omegas[i] / c;
            match toeplitz {
                Some(step) => {
                    let base = xs[0] - u[0];
                    let table: Vec<Complex64> = (0..nx + nu - 1)
                        .map(|d| {
                            let off = base + (d as f64 - (nu as f64 - 1.0)) * step;
                            green_2d(k * off.hypot(z)).conj()
                        })
                        .collect();
                    for ix in 0..nx {
                        for iu in 0..nu {
                            g[ix * nu + iu] = table[ix + nu - 1 - iu];
                        }
                    }
                }
                None => {
                    for ix in 0..nx {
                        for iu in 0..nu {
                            g[ix * nu + iu] = green_2d(k * (xs[ix] - u[iu]).hypot(z)).conj();
                        }
                    }
                }
            }
            t1.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            gemm_acc(&g, spec.data[i].as_slice(), &mut t1, nx, nu, nt);
            let col: Vec<Complex64> = (0..nt).map(|t| Complex64::from_polar(weights[i], -k * z * cos[t])).collect();
            for ix in 0..nx {
                for t in 0..nt {
                    t1[ix * nt + t] *= col[t];
                }
            }
            gemm_acc(&t1, &e_tables[a], &mut acc, nx, nt, nx);
        }
        ComplexMatrix::from_vec_unchecked(grid.x.clone(), grid.x.clone(), acc)
    });

    let band = probe.f_max - probe.f_min;
    let z_limit = 0.5 * c * probe.record_length;
    let mut warnings = Vec::new();
    if let Some(&zmax) = grid.z.coords().last() {
        if zmax > z_limit {
            warnings.push(format!("depth {:.4e} m exceeds the recorded range {:.4e} m", zmax, z_limit));
        }
    }
    Ok(FocusedStack {
        grid: grid.clone(),
        planes,
        c,
        axial_resolution: c / (2.0 * band),
        warnings,
    })
}

/// Convenience wrapper: temporal DFT then [`beamform`].
pub fn beamform_raw(acq: &RawAcquisition, grid: &FocalGrid, c: f64) -> Result<FocusedStack> {
    beamform(&spectra_from_traces(acq)?, grid, c)
}

fn uniform_step(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let s = v[1] - v[0];
    v.windows(2).all(|w| ((w[1] - w[0]) - s).abs() <= 1e-9 * s.abs()).then_some(s)
}

/// Confocal image `|R(x, x, z)|²`, shape `(n_depths, n_x)`.
pub fn confocal_image(stack: &FocusedStack) -> Array2<f64> {
    let nx = stack.grid.x.len();
    Array2::from_shape_fn((stack.planes.len(), nx), |(iz, ix)| stack.planes[iz].get(ix, ix).norm_sqr())
}
