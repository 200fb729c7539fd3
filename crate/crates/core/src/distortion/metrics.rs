//! Diagnostics shared by tests, the acceptance suite and the CLI.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::farfield::FarField;
use crate::matrix::ComplexMatrix;

/// Best-fit lateral shift `a` (m) and offset `b` (rad) of a phase law, i.e.
/// the maximizer of `|Σ_k e^{i(arg u_k − a k)}|`.
pub fn detrend_tilt(u: &[Complex64], k: &[f64]) -> (f64, f64) {
    let z: Vec<Complex64> = u.iter().map(|v| if v.norm() > 0.0 { v / v.norm() } else { *v }).collect();
    let score = |a: f64| {
        z.iter()
            .zip(k)
            .map(|(v, kk)| v * Complex64::from_polar(1.0, -a * kk))
            .sum::<Complex64>()
            .norm()
    };
    let dk = k.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if !dk.is_finite() || dk <= 0.0 {
        let m: Complex64 = z.iter().sum();
        return (0.0, m.arg());
    }
    let span = PI / dk;
    let steps = 16 * k.len();
    let h = 2.0 * span / steps as f64;
    let mut best = (score(0.0), 0.0);
    for i in 0..=steps {
        let a = -span + i as f64 * h;
        let s = score(a);
        if s > best.0 {
            best = (s, a);
        }
    }
    // Golden-section refinement within one coarse step.
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (best.1 - h, best.1 + h);
    for _ in 0..100 {
        let a1 = hi - g * (hi - lo);
        let a2 = lo + g * (hi - lo);
        if score(a1) > score(a2) {
            hi = a2;
        } else {
            lo = a1;
        }
    }
    let a = 0.5 * (lo + hi);
    let m: Complex64 = z.iter().zip(k).map(|(v, kk)| v * Complex64::from_polar(1.0, -a * kk)).sum();
    (a, m.arg())
}

/// RMS (rad) of the wrapped phase difference `arg(est · conj(truth))` after
/// removing the circular mean and, optionally, the best-fit tilt.
pub fn circular_rms(est: &[Complex64], truth: &[Complex64], k: &[f64], remove_tilt: bool) -> f64 {
    let diff: Vec<Complex64> = est.iter().zip(truth).map(|(a, b)| a * b.conj()).collect();
    let (a, b) = if remove_tilt {
        detrend_tilt(&diff, k)
    } else {
        (0.0, diff.iter().sum::<Complex64>().arg())
    };
    let r2: f64 = diff
        .iter()
        .zip(k)
        .map(|(v, kk)| (v * Complex64::from_polar(1.0, -a * kk - b)).arg().powi(2))
        .sum();
    (r2 / diff.len() as f64).sqrt()
}

/// Confocal intensity at arbitrary lateral positions of one depth, with the
/// law `u` applied on both sides: `|Σ t*(k,x) R(k,k') t*(k',x)|² / (qN)⁴`.
pub fn fine_confocal(rkk: &ComplexMatrix, u: &[Complex64], ff: &FarField, xs: &[f64]) -> Vec<f64> {
    let k = ff.k().coords();
    let nk = k.len();
    let norm = 1.0 / (ff.period * ff.period);
    xs.iter()
        .map(|&x| {
            let t: Vec<Complex64> = (0..nk).map(|i| (u[i] * Complex64::from_polar(1.0, k[i] * x)).conj()).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..nk {
                let row: Complex64 = (0..nk).map(|j| rkk.get(i, j) * t[j]).sum();
                acc += t[i] * row;
            }
            (acc * norm).norm_sqr()
        })
        .collect()
}

/// Full width at half maximum of the peak of `y(x)`, linearly interpolated.
/// `None` if the profile does not fall below half maximum on both sides.
pub fn fwhm(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (ip, &peak) = ys.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(peak > 0.0) {
        return None;
    }
    let half = 0.5 * peak;
    let mut left = None;
    for i in (0..ip).rev() {
        if ys[i] < half {
            let t = (half - ys[i]) / (ys[i + 1] - ys[i]);
            left = Some(xs[i] + t * (xs[i + 1] - xs[i]));
            break;
        }
    }
    let mut right = None;
    for i in ip + 1..ys.len() {
        if ys[i] < half {
            let t = (ys[i - 1] - half) / (ys[i - 1] - ys[i]);
            right = Some(xs[i - 1] + t * (xs[i] - xs[i - 1]));
            break;
        }
    }
    Some(right? - left?)
}

/// Lateral FWHM of an ideal confocal focus with `|k| <= k_max` on both
/// paths. The intensity is `sinc⁴(k_max x)`, which halves at `k_max x ≈ 1.0019`.
pub fn diffraction_fwhm(k_max: f64) -> f64 {
    2.0 * 1.001_906_357_7 / k_max
}
