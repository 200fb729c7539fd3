//! Zeroth-order Hankel function of the first kind.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI};

/// Argument at which evaluation switches from the power series to the
/// asymptotic expansion.
pub const CROSSOVER: f64 = 12.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `H0^(1)(x) = J0(x) + i Y0(x)` for `x > 0`.
pub fn hankel1_0(x: f64) -> Complex64 {
    debug_assert!(x > 0.0);
    if x < CROSSOVER {
        let (j, y) = series(x);
        Complex64::new(j, y)
    } else {
        asymptotic(x)
    }
}

/// Free-space 2D Green's function `-(i/4) H0^(1)(kr)`.
pub fn green_2d(kr: f64) -> Complex64 {
    let h = hankel1_0(kr);
    Complex64::new(0.25 * h.im, -0.25 * h.re)
}

fn series(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut j0 = 1.0;
    let mut harmonic = 0.0;
    let mut ysum = 0.0;
    let mut m = 1.0;
    loop {
        term *= -q / (m * m);
        harmonic += 1.0 / m;
        j0 += term;
        ysum -= harmonic * term;
        if term.abs() < 1e-18 * j0.abs().max(1e-300) && m > q.sqrt() {
            break;
        }
        m += 1.0;
    }
    let y0 = (2.0 / PI) * (((0.5 * x).ln() + EULER_GAMMA) * j0 + ysum);
    (j0, y0)
}

fn asymptotic(x: f64) -> Complex64 {
    // a_k = prod_{j<=k} (-(2j-1)^2) / (k! 8^k); P and Q take alternating even/odd terms.
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        a *= -((2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if a.abs() >= last {
            break;
        }
        last = a.abs();
        // sign (-1)^(k/2) for P, (-1)^((k-1)/2) for Q
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
        if last < 1e-17 {
            break;
        }
    }
    let amp = (2.0 / (PI * x)).sqrt();
    let phase = Complex64::from_polar(1.0, x - FRAC_PI_4);
    Complex64::new(p, q) * phase * amp
}
