use ndarray::Array2;
use num_complex::Complex64;

use crate::beamform::FocusedStack;
use crate::error::{Error, Result};
use crate::farfield::FarField;
use crate::matrix::kernels::gemm_acc;
use crate::matrix::{unit_phase, BasisAxis, ComplexMatrix, DEFAULT_EPS_REL};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// One law for every pixel, from eigenvector `p` of an isoplanatic analysis.
    IsoplanaticPatch(usize),
    /// Per-pixel laws from a sliding window.
    LocalWindow,
    /// No correction (`U ≡ 1`).
    Identity,
}

/// Per-pixel aberration laws `U(k, r)`; the transmission estimate is `U ∘ T0`.
#[derive(Debug, Clone)]
pub struct TransmissionEstimate {
    pub k: BasisAxis,
    pub x: BasisAxis,
    pub z: BasisAxis,
    /// Unit-modulus laws laid out `(iz, ix, ik)`.
    pub laws: Vec<Complex64>,
    pub provenance: Provenance,
    /// `false` where a pixel inherited a neighbouring estimate.
    pub estimated: Vec<bool>,
}

impl TransmissionEstimate {
    pub fn identity(k: &BasisAxis, x: &BasisAxis, z: &BasisAxis) -> Self {
        Self::uniform(&vec![Complex64::new(1.0, 0.0); k.len()], k, x, z, Provenance::Identity)
    }

    /// Same law everywhere.
    pub fn uniform(u: &[Complex64], k: &BasisAxis, x: &BasisAxis, z: &BasisAxis, provenance: Provenance) -> Self {
        let law = phase_only(u);
        let n = x.len() * z.len();
        let mut laws = Vec::with_capacity(n * k.len());
        for _ in 0..n {
            laws.extend_from_slice(&law);
        }
        Self {
            k: k.clone(),
            x: x.clone(),
            z: z.clone(),
            laws,
            provenance,
            estimated: vec![true; n],
        }
    }

    pub fn law(&self, ix: usize, iz: usize) -> &[Complex64] {
        let nk = self.k.len();
        let o = (iz * self.x.len() + ix) * nk;
        &self.laws[o..o + nk]
    }

    /// `T̄(k, x)` at depth index `iz`.
    pub fn tbar(&self, iz: usize) -> ComplexMatrix {
        let (nk, nx) = (self.k.len(), self.x.len());
        let ks = self.k.coords();
        let xs = self.x.coords();
        let mut v = vec![Complex64::new(0.0, 0.0); nk * nx];
        for ix in 0..nx {
            let law = self.law(ix, iz);
            for k in 0..nk {
                v[k * nx + ix] = law[k] * Complex64::from_polar(1.0, ks[k] * xs[ix]);
            }
        }
        ComplexMatrix::from_vec_unchecked(self.k.clone(), self.x.clone(), v)
    }

    /// Multiplies every law by a global unit phase (tests gauge invariance).
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let g = Complex64::from_polar(1.0, phase);
        Self {
            laws: self.laws.iter().map(|z| z * g).collect(),
            ..self.clone()
        }
    }
}

/// Unit-modulus phasors of `u`; near-zero entries map to 1.
pub fn phase_only(u: &[Complex64]) -> Vec<Complex64> {
    let max = u.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    u.iter().map(|&z| unit_phase(z, DEFAULT_EPS_REL * max)).collect()
}

/// Isoplanatic transmission estimate `T̄_p = Û_p ∘ T0` with `Û_p` the phase of the eigenvector.
pub fn estimate_t_iso(u_p: &[Complex64], ff: &FarField) -> Result<ComplexMatrix> {
    if u_p.len() != ff.k().len() {
        return Err(Error::dim("estimate_t_iso", "eigenvector length differs from k grid"));
    }
    let law = phase_only(u_p);
    ComplexMatrix::from_fn(ff.t0.rows().clone(), ff.t0.cols().clone(), |k, x| law[k] * ff.t0.get(k, x))
}

fn check_grid(rkk: &[ComplexMatrix], est: &TransmissionEstimate, ff: &FarField) -> Result<()> {
    if est.k != *ff.k() || est.x != *ff.x() {
        return Err(Error::dim("correct_reflection", "estimate and far-field grids differ"));
    }
    if est.z.len() != rkk.len() {
        return Err(Error::dim("correct_reflection", "estimate depth count differs from stack"));
    }
    if rkk.iter().any(|m| m.rows() != ff.k() || m.cols() != ff.k()) {
        return Err(Error::dim("correct_reflection", "R_kk is not on the far-field grid"));
    }
    Ok(())
}

/// Corrected focused matrices `R = T̄† × R'_kk × T̄* / (qN)²` for every depth.
pub fn correct_reflection(rkk: &[ComplexMatrix], est: &TransmissionEstimate, ff: &FarField, like: &FocusedStack) -> Result<FocusedStack> {
    check_grid(rkk, est, ff)?;
    let s = Complex64::new(1.0 / (ff.period * ff.period), 0.0);
    let planes: Vec<Result<ComplexMatrix>> = par::map_range(rkk.len(), |iz| {
        let t = est.tbar(iz);
        Ok(t.adjoint().matmul(&rkk[iz])?.matmul(&t.conj())?.scale(s))
    });
    Ok(FocusedStack {
        planes: planes.into_iter().collect::<Result<_>>()?,
        ..like.clone()
    })
}

/// Per-pixel focusing quality in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct StrehlMap {
    /// Shape `(n_depths, n_x)`.
    pub s: Array2<f64>,
    /// Pixels without any usable coefficient (reported as 0).
    pub flagged: Vec<(usize, usize)>,
}

impl StrehlMap {
    pub fn mean(&self) -> f64 {
        self.s.mean().unwrap_or(0.0)
    }

    /// Mean over the pixels selected by `keep(ix, iz)`.
    pub fn mean_where(&self, keep: impl Fn(usize, usize) -> bool) -> f64 {
        let (nz, nx) = self.s.dim();
        let mut acc = 0.0;
        let mut n = 0usize;
        for iz in 0..nz {
            for ix in 0..nx {
                if keep(ix, iz) {
                    acc += self.s[[iz, ix]];
                    n += 1;
                }
            }
        }
        if n == 0 {
            0.0
        } else {
            acc / n as f64
        }
    }
}

/// Strehl values of one depth and its flagged pixels.
type StrehlRow = (Vec<f64>, Vec<(usize, usize)>);

/// `|⟨e^{i arg c}⟩|²` over non-zero coefficients; `None` if all are zero.
pub fn strehl_of(coeffs: &[Complex64]) -> Option<f64> {
    let max = coeffs.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let thr = DEFAULT_EPS_REL * max;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut n = 0usize;
    for &c in coeffs {
        if c.norm() >= thr && c.norm() > 0.0 {
            acc += c / c.norm();
            n += 1;
        }
    }
    (n > 0).then(|| (acc / n as f64).norm_sqr().min(1.0))
}

/// Strehl map of the correction described by `est`.
///
/// For the focal point `r_in = (x, z)` the residual distortion is
/// `D(k) = arg[U*(k, r) Σ_k' R'(k, k') T̄*(k', r)] · e^{-ikx}`; `S` is the squared
/// modulus of its mean phasor over `k`.
pub fn strehl_map(rkk: &[ComplexMatrix], est: &TransmissionEstimate, ff: &FarField) -> Result<StrehlMap> {
    check_grid(rkk, est, ff)?;
    let (nk, nx, nz) = (ff.k().len(), ff.x().len(), rkk.len());
    let ks = ff.k().coords();
    let xs = ff.x().coords();
    let rows: Vec<StrehlRow> = par::map_range(nz, |iz| {
        let t = est.tbar(iz).conj();
        let mut w = vec![Complex64::new(0.0, 0.0); nk * nx];
        gemm_acc(rkk[iz].as_slice(), t.as_slice(), &mut w, nk, nk, nx);
        let mut s = vec![0.0; nx];
        let mut flagged = Vec::new();
        let mut col = vec![Complex64::new(0.0, 0.0); nk];
        for ix in 0..nx {
            let law = est.law(ix, iz);
            for k in 0..nk {
                col[k] = law[k].conj() * w[k * nx + ix] * Complex64::from_polar(1.0, -ks[k] * xs[ix]);
            }
            match strehl_of(&col) {
                Some(v) => s[ix] = v,
                None => flagged.push((ix, iz)),
            }
        }
        (s, flagged)
    });
    let mut s = Array2::zeros((nz, nx));
    let mut flagged = Vec::new();
    for (iz, (row, f)) in rows.into_iter().enumerate() {
        for (ix, v) in row.into_iter().enumerate() {
            s[[iz, ix]] = v;
        }
        flagged.extend(f);
    }
    Ok(StrehlMap { s, flagged })
}
