//! Dense complex kernels with a fixed accumulation order.

use num_complex::Complex64;

/// `c += a * b` for row-major `a: m×k`, `b: k×n`, `c: m×n`.
///
/// Each output entry is accumulated over `p = 0..k` in ascending order, so the
/// result is bitwise reproducible.
pub fn gemm_acc(a: &[Complex64], b: &[Complex64], c: &mut [Complex64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        let arow = &a[i * k..(i + 1) * k];
        for (p, &aip) in arow.iter().enumerate() {
            if aip.re == 0.0 && aip.im == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cj, bj) in crow.iter_mut().zip(brow) {
                cj.re += aip.re * bj.re - aip.im * bj.im;
                cj.im += aip.re * bj.im + aip.im * bj.re;
            }
        }
    }
}

/// `y = A x` for row-major `A: m×n`.
pub fn gemv(a: &[Complex64], x: &[Complex64], m: usize, n: usize) -> Vec<Complex64> {
    (0..m)
        .map(|i| {
            let row = &a[i * n..(i + 1) * n];
            row.iter().zip(x).fold(Complex64::new(0.0, 0.0), |s, (r, v)| s + r * v)
        })
        .collect()
}
