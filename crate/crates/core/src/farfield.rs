//! Far-field projection of focused matrices and specular clutter filtering.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::beamform::FocusedStack;
use crate::error::{Error, Result};
use crate::matrix::{BasisAxis, BasisKind, ComplexMatrix};
use crate::par;

/// Transverse wavenumbers compatible with the DFT of an `nx`-point grid of
/// pitch `dx`: `k_n = n·2π/(q·nx·dx)` for `|k_n| <= k_max`.
pub fn build_k_grid(nx: usize, dx: f64, k_max: f64, oversample: usize) -> Result<BasisAxis> {
    if nx == 0 || !(dx > 0.0) || !(k_max >= 0.0) || oversample == 0 {
        return Err(Error::invalid("k grid needs nx > 0, dx > 0, k_max >= 0, oversample >= 1"));
    }
    let dk = 2.0 * PI / (oversample as f64 * nx as f64 * dx);
    let full = oversample * nx;
    // Never exceed one full DFT period.
    let m = ((k_max / dk + 1e-9).floor() as usize).min((full - 1) / 2);
    BasisAxis::centered(BasisKind::Wavenumber, dk, 2 * m + 1)
}

/// `k_max = (ω0/c)·sin θ_max`.
pub fn default_k_max(f0: f64, c: f64, theta_max: f64) -> f64 {
    2.0 * PI * f0 / c * theta_max.abs().sin()
}

/// Fourier operator `T0(k, x) = exp(i k x)`.
pub fn build_t0(k: &BasisAxis, x: &BasisAxis) -> Result<ComplexMatrix> {
    if k.is_empty() || x.is_empty() {
        return Err(Error::invalid("T0 needs non-empty grids"));
    }
    if k.kind() != BasisKind::Wavenumber || x.kind() != BasisKind::FocalX {
        return Err(Error::dim("build_t0", "expects wavenumber and focal-x axes"));
    }
    ComplexMatrix::from_fn(k.clone(), x.clone(), |i, j| {
        Complex64::from_polar(1.0, k.coords()[i] * x.coords()[j])
    })
}

/// Far-field operator together with the normalization that makes the
/// focused/far-field round trip the identity on band-limited matrices.
#[derive(Debug, Clone)]
pub struct FarField {
    pub t0: ComplexMatrix,
    /// `q·N_x`, the length of one full DFT period.
    pub period: f64,
}

impl FarField {
    pub fn new(x: &BasisAxis, k_max: f64, oversample: usize) -> Result<Self> {
        let dx = x
            .uniform_step()
            .ok_or_else(|| Error::invalid("far-field projection needs a uniform x grid"))?;
        let k = build_k_grid(x.len(), dx, k_max, oversample)?;
        Ok(Self {
            t0: build_t0(&k, x)?,
            period: (oversample * x.len()) as f64,
        })
    }

    pub fn k(&self) -> &BasisAxis {
        self.t0.rows()
    }

    pub fn x(&self) -> &BasisAxis {
        self.t0.cols()
    }

    /// Far-field projection `R_kk = T0 × R_xx × T0ᵀ`.
    pub fn to_kspace(&self, rxx: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.t0.matmul(rxx)?.matmul(&self.t0.transpose())
    }

    /// Back-projection `R_xx = T0† × R_kk × T0* / (q N_x)²`.
    pub fn from_kspace(&self, rkk: &ComplexMatrix) -> Result<ComplexMatrix> {
        let s = 1.0 / (self.period * self.period);
        Ok(self
            .t0
            .adjoint()
            .matmul(rkk)?
            .matmul(&self.t0.conj())?
            .scale(Complex64::new(s, 0.0)))
    }
}

/// Far-field projection of every depth.
pub fn to_kspace(stack: &FocusedStack, ff: &FarField) -> Result<Vec<ComplexMatrix>> {
    par::map_slice(&stack.planes, |p| ff.to_kspace(p)).into_iter().collect()
}

/// Back-projection of every depth.
pub fn from_kspace(rkk: &[ComplexMatrix], ff: &FarField) -> Result<Vec<ComplexMatrix>> {
    par::map_slice(rkk, |p| ff.from_kspace(p)).into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandOrientation {
    /// `k_out + k_in`, where parallel-wall multiples concentrate.
    Antidiagonal,
    /// `k_out - k_in`.
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaPolicy {
    Adaptive,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReverbFilterParams {
    /// Gaussian width (rad/m).
    pub delta_k: f64,
    pub alpha: AlphaPolicy,
    pub orientation: BandOrientation,
    /// Band centre, `k0 sin θ0` for an interface tilted by `θ0`.
    pub band_center: f64,
}

impl ReverbFilterParams {
    /// Adaptive antidiagonal filter with `δk = 1/(N_x δx)`.
    pub fn for_grid(nx: usize, dx: f64) -> Self {
        Self {
            delta_k: 1.0 / (nx as f64 * dx),
            alpha: AlphaPolicy::Adaptive,
            orientation: BandOrientation::Antidiagonal,
            band_center: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_k > 0.0) {
            return Err(Error::invalid("delta_k must be positive"));
        }
        if let AlphaPolicy::Fixed(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::invalid("fixed alpha must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    fn offset(&self, ko: f64, ki: f64) -> f64 {
        match self.orientation {
            BandOrientation::Antidiagonal => ko + ki - self.band_center,
            BandOrientation::Diagonal => ko - ki - self.band_center,
        }
    }
}

/// Band statistics behind one α estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaReport {
    pub alpha: f64,
    pub in_band_mean: f64,
    pub off_band_mean: f64,
}

/// `α = clamp(⟨|R|⟩_in / ⟨|R|⟩_off − 1, 0, 1)` with the band `|Δ| < δk`.
pub fn measure_alpha(rkk: &ComplexMatrix, params: &ReverbFilterParams) -> Result<AlphaReport> {
    params.validate()?;
    let ko = rkk.rows().coords();
    let ki = rkk.cols().coords();
    let (mut s_in, mut n_in, mut s_off, mut n_off) = (0.0, 0usize, 0.0, 0usize);
    for (i, &a) in ko.iter().enumerate() {
        for (j, &b) in ki.iter().enumerate() {
            let v = rkk.get(i, j).norm();
            if params.offset(a, b).abs() < params.delta_k {
                s_in += v;
                n_in += 1;
            } else {
                s_off += v;
                n_off += 1;
            }
        }
    }
    if n_in == 0 || n_off == 0 {
        return Err(Error::invalid("alpha needs non-empty in-band and off-band sets"));
    }
    let in_band_mean = s_in / n_in as f64;
    let off_band_mean = s_off / n_off as f64;
    let alpha = if off_band_mean > 0.0 {
        (in_band_mean / off_band_mean - 1.0).clamp(0.0, 1.0)
    } else if in_band_mean > 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(AlphaReport {
        alpha,
        in_band_mean,
        off_band_mean,
    })
}

/// Scales each entry by `1 − α·exp(−Δ²/δk²)`.
pub fn reverb_filter(rkk: &ComplexMatrix, alpha: f64, params: &ReverbFilterParams) -> Result<ComplexMatrix> {
    params.validate()?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid("alpha must lie in [0, 1]"));
    }
    if alpha == 0.0 {
        return Ok(rkk.clone());
    }
    let ko = rkk.rows().coords();
    let ki = rkk.cols().coords();
    let dk2 = params.delta_k * params.delta_k;
    ComplexMatrix::from_fn(rkk.rows().clone(), rkk.cols().clone(), |i, j| {
        let d = params.offset(ko[i], ki[j]);
        rkk.get(i, j) * (1.0 - alpha * (-(d * d) / dk2).exp())
    })
}

/// Measures α per depth (or uses the fixed value) and filters each depth.
pub fn filter_stack(rkk: &[ComplexMatrix], params: &ReverbFilterParams) -> Result<(Vec<ComplexMatrix>, Vec<AlphaReport>)> {
    let out: Vec<Result<(ComplexMatrix, AlphaReport)>> = par::map_slice(rkk, |m| {
        let rep = match params.alpha {
            AlphaPolicy::Adaptive => measure_alpha(m, params)?,
            AlphaPolicy::Fixed(a) => AlphaReport {
                alpha: a,
                ..measure_alpha(m, params)?
            },
        };
        Ok((reverb_filter(m, rep.alpha, params)?, rep))
    });
    let mut mats = Vec::with_capacity(out.len());
    let mut reps = Vec::with_capacity(out.len());
    for r in out {
        let (m, rep) = r?;
        mats.push(m);
        reps.push(rep);
    }
    Ok((mats, reps))
}

/// Mean of each antidiagonal `k_out + k_in = const` of a square matrix on a
/// uniform grid. Returns `(k_out + k_in, mean)` pairs in ascending order.
pub fn antidiagonal_spectrum(rkk: &ComplexMatrix) -> Result<Vec<(f64, Complex64)>> {
    if !rkk.is_square() {
        return Err(Error::dim("antidiagonal_spectrum", "matrix must be square"));
    }
    let n = rkk.shape().0;
    let k = rkk.rows().coords();
    let mut sums = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
    let mut counts = vec![0usize; 2 * n - 1];
    for i in 0..n {
        for j in 0..n {
            sums[i + j] += rkk.get(i, j);
            counts[i + j] += 1;
        }
    }
    Ok((0..2 * n - 1)
        .map(|s| {
            let (i, j) = if s < n { (s, 0) } else { (n - 1, s - (n - 1)) };
            (k[i] + k[j], sums[s] / counts[s] as f64)
        })
        .collect())
}
