use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::{BasisAxis, BasisKind};
use super::complex_matrix::ComplexMatrix;
use super::entropy::shannon_entropy;
use crate::error::{Error, Result};

/// Maximum tolerated `‖C − C†‖/‖C‖` before the solver refuses the input.
pub const HERMITIAN_TOL: f64 = 1e-8;
const RECON_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector of `eigenvalues[i]`; rows share the input basis.
    pub eigenvectors: ComplexMatrix,
    /// Entropy (bits) of the eigenvalues, negatives clamped to zero.
    pub entropy: f64,
}

impl EigenDecomposition {
    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        self.eigenvectors.column(i)
    }

    /// Eigenvalues divided by their sum.
    pub fn normalized_eigenvalues(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().map(|s| s.max(0.0)).sum();
        if total <= 0.0 {
            return vec![0.0; self.eigenvalues.len()];
        }
        self.eigenvalues.iter().map(|s| s.max(0.0) / total).collect()
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized before solving. Eigenvectors are gauge-fixed so
/// their largest-modulus entry is real and non-negative.
pub fn herm_eig(c: &ComplexMatrix) -> Result<EigenDecomposition> {
    if !c.is_square() {
        return Err(Error::invalid(format!("herm_eig needs a square matrix, got {:?}", c.shape())));
    }
    let defect = c.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::invalid(format!("matrix is not Hermitian (defect {defect:.2e})")));
    }
    let n = c.shape().0;
    let src = c.data();
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (src[[i, j]] + src[[j, i]].conj()));
    let norm = sym.norm();

    let eig = nalgebra::SymmetricEigen::try_new(sym.clone(), 1e-15, 10_000).ok_or(Error::NonConvergence {
        op: "herm_eig",
        residual: f64::NAN,
    })?;
    // The library result can leave off-diagonal residue near 1e-8; polish
    // `V† C V` with Jacobi rotations.
    let mut v: Vec<Complex64> = (0..n * n).map(|idx| eig.eigenvectors[(idx / n, idx % n)]).collect();
    let proj = eig.eigenvectors.adjoint() * &sym * &eig.eigenvectors;
    let mut b: Vec<Complex64> = (0..n * n).map(|idx| proj[(idx / n, idx % n)]).collect();
    jacobi_polish(&mut b, &mut v, n, norm);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| b[c * n + c].re.total_cmp(&b[a * n + a].re).then(a.cmp(&c)));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| b[i * n + i].re).collect();
    let mut vecs = vec![Complex64::new(0.0, 0.0); n * n];
    for (col, &src_col) in order.iter().enumerate() {
        let pivot = (0..n).fold(0usize, |best, i| {
            if v[i * n + src_col].norm() > v[best * n + src_col].norm() {
                i
            } else {
                best
            }
        });
        let p = v[pivot * n + src_col];
        let phase = if p.norm() > 0.0 {
            p.conj() / p.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            vecs[i * n + col] = v[i * n + src_col] * phase;
        }
    }

    // Reconstruction residual guards against silent solver failure.
    if norm > 0.0 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += vecs[i * n + k] * eigenvalues[k] * vecs[j * n + k].conj();
                }
                acc += (s - sym[(i, j)]).norm_sqr();
            }
        }
        let residual = acc.sqrt() / norm;
        if residual > RECON_TOL {
            return Err(Error::NonConvergence { op: "herm_eig", residual });
        }
    }

    let clamped: Vec<f64> = eigenvalues.iter().map(|s| s.max(0.0)).collect();
    let entropy = if clamped.iter().any(|s| *s > 0.0) {
        shannon_entropy(&clamped)?
    } else {
        0.0
    };
    let eigenvectors = ComplexMatrix::from_vec_unchecked(c.rows().clone(), BasisAxis::index(BasisKind::Mode, n), vecs);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
        entropy,
    })
}

/// Cyclic Jacobi sweeps on a Hermitian `b` (row-major, `n × n`), accumulating
/// the rotations into the columns of `v`.
fn jacobi_polish(b: &mut [Complex64], v: &mut [Complex64], n: usize, scale: f64) {
    let target = 1e-15 * scale.max(f64::MIN_POSITIVE);
    for _ in 0..60 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| b[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = b[p * n + q];
                let r = apq.norm();
                if r <= target * 1e-3 {
                    continue;
                }
                let e = apq / r;
                let tau = (b[q * n + q].re - b[p * n + p].re) / (2.0 * r);
                let t = if tau >= 0.0 { 1.0 } else { -1.0 } / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = [[c, s·e], [−s·e*, c]]; B ← J† B J, V ← V J.
                let (jpq, jqp) = (e * s, -e.conj() * s);
                for i in 0..n {
                    let (bp, bq) = (b[i * n + p], b[i * n + q]);
                    b[i * n + p] = bp * c + bq * jqp;
                    b[i * n + q] = bp * jpq + bq * c;
                    let (vp, vq) = (v[i * n + p], v[i * n + q]);
                    v[i * n + p] = vp * c + vq * jqp;
                    v[i * n + q] = vp * jpq + vq * c;
                }
                for j in 0..n {
                    let (bp, bq) = (b[p * n + j], b[q * n + j]);
                    b[p * n + j] = bp * c + bq * jqp.conj();
                    b[q * n + j] = bp * jpq.conj() + bq * c;
                }
                b[p * n + q] = Complex64::new(0.0, 0.0);
                b[q * n + p] = Complex64::new(0.0, 0.0);
                b[p * n + p].im = 0.0;
                b[q * n + q].im = 0.0;
            }
        }
    }
}
