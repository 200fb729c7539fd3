use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::farfield::FarField;
use crate::matrix::{BasisAxis, BasisKind, ComplexMatrix, DEFAULT_EPS_REL};

/// Rectangular block of the focal grid, as index ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FovWindow {
    pub ix: (usize, usize),
    pub iz: (usize, usize),
}

impl FovWindow {
    pub fn full(nx: usize, nz: usize) -> Self {
        Self { ix: (0, nx), iz: (0, nz) }
    }

    pub fn validate(&self, nx: usize, nz: usize) -> Result<()> {
        if self.ix.0 >= self.ix.1 || self.iz.0 >= self.iz.1 || self.ix.1 > nx || self.iz.1 > nz {
            return Err(Error::invalid(format!("window {self:?} outside a {nx}x{nz} grid")));
        }
        Ok(())
    }

    pub fn n_pixels(&self) -> usize {
        (self.ix.1 - self.ix.0) * (self.iz.1 - self.iz.0)
    }
}

/// Distortion matrix `D(k_out, r_in)` over a field of view.
#[derive(Debug, Clone)]
pub struct DistortionMatrix {
    /// Rows: wavenumber; columns: focal points listed in `pixels`.
    pub d: ComplexMatrix,
    /// `(ix, iz)` of each column, depth-major.
    pub pixels: Vec<(usize, usize)>,
    pub x: BasisAxis,
    pub z: BasisAxis,
    pub window: FovWindow,
    /// Columns whose reflected wavefront carries usable energy.
    pub valid: Vec<bool>,
}

/// Relative column energy below which a focal point counts as dark.
pub const DARK_COLUMN_REL: f64 = 1e-6;

/// Dual-basis matrix `R_kx = T0 × R'_xx(z)`, columns `(x_in, z)` in the window.
pub fn build_rkx(rxx: &[ComplexMatrix], ff: &FarField, z: &BasisAxis, window: FovWindow) -> Result<(ComplexMatrix, Vec<(usize, usize)>)> {
    if rxx.is_empty() {
        return Err(Error::invalid("focused stack is empty"));
    }
    let nx = ff.x().len();
    window.validate(nx, rxx.len())?;
    if z.len() != rxx.len() {
        return Err(Error::dim("build_rkx", "one depth per plane"));
    }
    let nk = ff.k().len();
    let pixels: Vec<(usize, usize)> = (window.iz.0..window.iz.1)
        .flat_map(|iz| (window.ix.0..window.ix.1).map(move |ix| (ix, iz)))
        .collect();
    let np = pixels.len();
    let mut out = vec![Complex64::new(0.0, 0.0); nk * np];
    let wx = window.ix.1 - window.ix.0;
    for (row, iz) in (window.iz.0..window.iz.1).enumerate() {
        let p = ff.t0.matmul(&rxx[iz])?;
        for k in 0..nk {
            for (c, ix) in (window.ix.0..window.ix.1).enumerate() {
                out[k * np + row * wx + c] = p.get(k, ix);
            }
        }
    }
    let cols = BasisAxis::index(BasisKind::FocalPoint, np);
    Ok((ComplexMatrix::from_vec_unchecked(ff.k().clone(), cols, out), pixels))
}

/// Distortion matrix `D = R̂_kx ∘ T0*`, where `R̂` is the phase-normalized dual-basis matrix.
pub fn build_distortion(
    rkx: &ComplexMatrix,
    pixels: &[(usize, usize)],
    ff: &FarField,
    z: &BasisAxis,
    window: FovWindow,
) -> Result<DistortionMatrix> {
    let (nk, np) = rkx.shape();
    if np != pixels.len() || nk != ff.k().len() {
        return Err(Error::dim("build_distortion", "R_kx shape does not match pixels and k grid"));
    }
    let norm = rkx.phase_normalize(DEFAULT_EPS_REL)?;
    let energies: Vec<f64> = (0..np).map(|c| (0..nk).map(|k| rkx.get(k, c).norm_sqr()).sum()).collect();
    let mean = energies.iter().sum::<f64>() / np.max(1) as f64;
    let valid: Vec<bool> = energies.iter().map(|e| *e > DARK_COLUMN_REL * mean && *e > 0.0).collect();
    let xs = ff.x().coords();
    let ks = ff.k().coords();
    let d = ComplexMatrix::from_fn(rkx.rows().clone(), rkx.cols().clone(), |k, c| {
        if !valid[c] {
            return Complex64::new(0.0, 0.0);
        }
        norm.get(k, c) * Complex64::from_polar(1.0, -ks[k] * xs[pixels[c].0])
    })?;
    Ok(DistortionMatrix {
        d,
        pixels: pixels.to_vec(),
        x: ff.x().clone(),
        z: z.clone(),
        window,
        valid,
    })
}

impl DistortionMatrix {
    /// [`build_rkx`] followed by [`build_distortion`].
    pub fn from_focused(rxx: &[ComplexMatrix], ff: &FarField, z: &BasisAxis, window: FovWindow) -> Result<Self> {
        let (rkx, pixels) = build_rkx(rxx, ff, z, window)?;
        build_distortion(&rkx, &pixels, ff, z, window)
    }

    /// Valid column indices whose pixel satisfies `keep(ix, iz)`.
    pub fn columns_where(&self, keep: impl Fn(usize, usize) -> bool) -> Vec<usize> {
        self.pixels
            .iter()
            .enumerate()
            .filter(|(c, &(ix, iz))| self.valid[*c] && keep(ix, iz))
            .map(|(c, _)| c)
            .collect()
    }

    pub fn valid_columns(&self) -> Vec<usize> {
        self.columns_where(|_, _| true)
    }
}
