use ndarray::Array2;
use num_complex::Complex64;

use super::basis::{BasisAxis, BasisKind};
use super::kernels::gemm_acc;
use crate::error::{Error, Result};

/// Default relative threshold below which entries are treated as zero when
/// phase-normalizing.
pub const DEFAULT_EPS_REL: f64 = 1e-9;

/// Basis-tagged dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: BasisAxis,
    cols: BasisAxis,
    data: Array2<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: BasisAxis, cols: BasisAxis, data: Array2<Complex64>) -> Result<Self> {
        if data.dim() != (rows.len(), cols.len()) {
            return Err(Error::dim(
                "ComplexMatrix::new",
                format!("data {:?} vs axes ({}, {})", data.dim(), rows.len(), cols.len()),
            ));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("matrix contains non-finite entries"));
        }
        let data = data.as_standard_layout().into_owned();
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: BasisAxis, cols: BasisAxis) -> Self {
        let data = Array2::zeros((rows.len(), cols.len()));
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: BasisAxis, cols: BasisAxis, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let data = Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| f(i, j));
        Self::new(rows, cols, data)
    }

    /// Builds from a row-major vector without the finiteness scan; used on hot
    /// paths whose inputs were already validated.
    pub(crate) fn from_vec_unchecked(rows: BasisAxis, cols: BasisAxis, v: Vec<Complex64>) -> Self {
        let data = Array2::from_shape_vec((rows.len(), cols.len()), v).expect("shape checked by caller");
        Self { rows, cols, data }
    }

    pub fn identity(axis: BasisAxis) -> Self {
        let n = axis.len();
        let mut m = Self::zeros(axis.clone(), axis);
        for i in 0..n {
            m.data[[i, i]] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> &BasisAxis {
        &self.rows
    }

    pub fn cols(&self) -> &BasisAxis {
        &self.cols
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<Complex64> {
        self.data
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        self.data.as_slice().expect("standard layout")
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[[i, j]]
    }

    /// Replaces the axis tags, keeping the data.
    pub fn with_axes(self, rows: BasisAxis, cols: BasisAxis) -> Result<Self> {
        Self::new(rows, cols, self.data)
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols.kind() != other.rows.kind() {
            return Err(Error::dim(
                "matmul",
                format!("basis {} vs {}", self.cols.kind().label(), other.rows.kind().label()),
            ));
        }
        let (m, k) = self.shape();
        let (k2, n) = other.shape();
        if k != k2 {
            return Err(Error::dim("matmul", format!("{m}x{k} times {k2}x{n}")));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); m * n];
        gemm_acc(self.as_slice(), other.as_slice(), &mut out, m, k, n);
        Ok(Self::from_vec_unchecked(self.rows.clone(), other.cols.clone(), out))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        let data = self.data.t().mapv(|z| z.conj()).as_standard_layout().into_owned();
        Self {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            data,
        }
    }

    pub fn transpose(&self) -> ComplexMatrix {
        let data = self.data.t().as_standard_layout().into_owned();
        Self {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            data,
        }
    }

    pub fn conj(&self) -> ComplexMatrix {
        Self {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            data: self.data.mapv(|z| z.conj()),
        }
    }

    pub fn hadamard(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.shape() != other.shape() || self.rows.kind() != other.rows.kind() || self.cols.kind() != other.cols.kind() {
            return Err(Error::dim("hadamard", format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        Ok(Self {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            data: &self.data * &other.data,
        })
    }

    /// `z -> z/|z|` for entries at or above `eps_rel * max|a|`, zero otherwise.
    pub fn phase_normalize(&self, eps_rel: f64) -> Result<ComplexMatrix> {
        if !(eps_rel > 0.0 && eps_rel < 1.0) {
            return Err(Error::invalid("eps_rel must lie in (0, 1)"));
        }
        let max = self.data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let thr = eps_rel * max;
        Ok(Self {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            data: self.data.mapv(|z| unit_phase(z, thr)),
        })
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        Self {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            data: self.data.mapv(|z| z * s),
        }
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::dim("add", format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        Ok(Self {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            data: &self.data + &other.data,
        })
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn diag(&self) -> Vec<Complex64> {
        let n = self.shape().0.min(self.shape().1);
        (0..n).map(|i| self.data[[i, i]]).collect()
    }

    pub fn is_square(&self) -> bool {
        let (m, n) = self.shape();
        m == n
    }

    /// `‖A − A†‖_F / ‖A‖_F`, zero for the zero matrix.
    pub fn hermitian_defect(&self) -> f64 {
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            return 0.0;
        }
        let (n, _) = self.shape();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.data[[i, j]] - self.data[[j, i]].conj()).norm_sqr();
            }
        }
        acc.sqrt() / norm
    }

    pub(crate) fn column(&self, j: usize) -> Vec<Complex64> {
        self.data.column(j).to_vec()
    }

    pub(crate) fn kind_pair(&self) -> (BasisKind, BasisKind) {
        (self.rows.kind(), self.cols.kind())
    }
}

#[inline]
pub(crate) fn unit_phase(z: Complex64, thr: f64) -> Complex64 {
    let r = z.norm();
    if r >= thr && r > 0.0 {
        z / r
    } else {
        Complex64::new(0.0, 0.0)
    }
}
