use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::kernels::gemm_acc;
use crate::matrix::{herm_eig, BasisAxis, ComplexMatrix, EigenDecomposition, DEFAULT_EPS_REL};

#[derive(Debug, Clone)]
pub struct CorrelationResult {
    /// `C = M M† / n`.
    pub c: ComplexMatrix,
    /// Entrywise phase-normalized `C`, present for normalized correlations.
    pub c_hat: Option<ComplexMatrix>,
    /// Decomposition of `c_hat` when present, else of `c`.
    pub decomposition: EigenDecomposition,
    pub entropy: f64,
    pub n_inputs: usize,
}

/// Correlation over selected columns of `m` (rows share one basis).
pub fn correlate_columns(m: &ComplexMatrix, cols: &[usize], normalized: bool) -> Result<CorrelationResult> {
    if cols.len() < 2 {
        return Err(Error::invalid("correlation needs at least two columns"));
    }
    let (nr, nc) = m.shape();
    if cols.iter().any(|&c| c >= nc) {
        return Err(Error::dim("correlate", "column index out of range"));
    }
    let n = cols.len();
    let mut sel = vec![Complex64::new(0.0, 0.0); nr * n];
    let mut adj = vec![Complex64::new(0.0, 0.0); n * nr];
    for r in 0..nr {
        for (j, &c) in cols.iter().enumerate() {
            let v = m.get(r, c);
            sel[r * n + j] = v;
            adj[j * nr + r] = v.conj();
        }
    }
    let mut cmat = vec![Complex64::new(0.0, 0.0); nr * nr];
    gemm_acc(&sel, &adj, &mut cmat, nr, n, nr);
    let inv = 1.0 / n as f64;
    // Exact Hermitian symmetry.
    for i in 0..nr {
        for j in i..nr {
            let v = 0.5 * (cmat[i * nr + j] + cmat[j * nr + i].conj()) * inv;
            cmat[i * nr + j] = v;
            cmat[j * nr + i] = v.conj();
        }
        cmat[i * nr + i].im = 0.0;
    }
    let axis: BasisAxis = m.rows().clone();
    let c = ComplexMatrix::new(axis.clone(), axis, ndarray::Array2::from_shape_vec((nr, nr), cmat).expect("shape"))?;
    let c_hat = if normalized {
        Some(c.phase_normalize(DEFAULT_EPS_REL)?)
    } else {
        None
    };
    let decomposition = herm_eig(c_hat.as_ref().unwrap_or(&c))?;
    Ok(CorrelationResult {
        entropy: decomposition.entropy,
        c,
        c_hat,
        decomposition,
        n_inputs: n,
    })
}

/// Correlation over all columns.
pub fn correlate(m: &ComplexMatrix, normalized: bool) -> Result<CorrelationResult> {
    let cols: Vec<usize> = (0..m.shape().1).collect();
    correlate_columns(m, &cols, normalized)
}

/// Eigen-spectrum summary used to choose the number of isoplanatic patches.
#[derive(Debug, Clone)]
pub struct EntropySummary {
    /// Eigenvalues normalized to unit sum, descending.
    pub sigma_hat: Vec<f64>,
    /// Gauge-fixed eigenvectors, one per eigenvalue.
    pub vectors: Vec<Vec<Complex64>>,
    pub entropy: f64,
    /// `round(H)`, reported as guidance.
    pub recommended_patches: usize,
    /// `ceil(H)`, the default number of corrected images.
    pub n_images: usize,
}

pub fn decompose_entropy(result: &CorrelationResult) -> EntropySummary {
    let d = &result.decomposition;
    let n = d.eigenvalues.len();
    let h = result.entropy;
    EntropySummary {
        sigma_hat: d.normalized_eigenvalues(),
        vectors: (0..n).map(|i| d.vector(i)).collect(),
        entropy: h,
        recommended_patches: (h.round() as usize).max(1),
        n_images: (h.ceil() as usize).clamp(1, n.max(1)),
    }
}
