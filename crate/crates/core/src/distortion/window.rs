use num_complex::Complex64;
use std::f64::consts::PI;

use super::correlate::correlate_columns;
use super::dmatrix::DistortionMatrix;
use super::metrics::detrend_tilt;
use super::transmission::{phase_only, Provenance, TransmissionEstimate};
use crate::error::{Error, Result};
use crate::par;

/// Minimum number of usable focal points for a window estimate.
pub const MIN_WINDOW_COLUMNS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    /// Half-extents (m).
    pub half_x: f64,
    pub half_z: f64,
    /// Node spacing in pixels; `None` means half the window, `Some(1)` is the
    /// exact per-pixel evaluation.
    pub stride: Option<usize>,
}

impl WindowSpec {
    /// 5 mm × 5 mm window at half-window stride.
    pub fn reference() -> Self {
        Self {
            half_x: 2.5e-3,
            half_z: 2.5e-3,
            stride: None,
        }
    }

    fn half_pixels(&self, dx: f64, dz: f64) -> Result<(usize, usize)> {
        if !(self.half_x > 0.0 && self.half_z > 0.0) {
            return Err(Error::invalid("window half-extents must be positive"));
        }
        let hx = (self.half_x / dx).round() as usize;
        let hz = if dz > 0.0 { (self.half_z / dz).round() as usize } else { 0 };
        if (2 * hx + 1) * (2 * hz + 1) < MIN_WINDOW_COLUMNS {
            return Err(Error::invalid("window must span at least 9 focal points"));
        }
        Ok((hx, hz))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeReport {
    pub ix: usize,
    pub iz: usize,
    pub n_inputs: usize,
    /// Entropy of the window's normalized correlation, `NaN` when not estimated.
    pub entropy: f64,
    pub estimated: bool,
    /// The window extended beyond the field of view and was cut.
    pub clipped: bool,
}

#[derive(Debug, Clone)]
pub struct WindowSweep {
    pub estimate: TransmissionEstimate,
    pub nodes: Vec<NodeReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    /// Remove each local law's best-fit linear phase (for comparisons with
    /// ground truth only; a tilt is a lateral shift of the image).
    pub remove_tilt: bool,
}

fn node_positions(lo: usize, hi: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (lo..hi).step_by(stride.max(1)).collect();
    if *v.last().unwrap() != hi - 1 {
        v.push(hi - 1);
    }
    v
}

/// Local aberration laws from sub-distortion matrices centred on a lattice
/// of nodes, blended per pixel.
pub fn local_window_sweep(d: &DistortionMatrix, window: &WindowSpec, opts: SweepOptions) -> Result<WindowSweep> {
    let dx = d.x.uniform_step().ok_or_else(|| Error::invalid("x grid must be uniform"))?;
    let dz = d.z.uniform_step().unwrap_or(0.0);
    let (hx, hz) = window.half_pixels(dx, dz)?;
    let w = d.window;
    let sx = window.stride.unwrap_or(hx.max(1));
    let sz = window.stride.unwrap_or(hz.max(1));
    let nodes_x = node_positions(w.ix.0, w.ix.1, sx);
    let nodes_z = node_positions(w.iz.0, w.iz.1, sz);
    let nk = d.d.shape().0;
    let ks = d.d.rows().coords().to_vec();

    let centres: Vec<(usize, usize)> = nodes_z.iter().flat_map(|&iz| nodes_x.iter().map(move |&ix| (ix, iz))).collect();
    let results: Vec<Result<(Option<Vec<Complex64>>, NodeReport)>> = par::map_slice(&centres, |&(cx, cz)| {
        let cols = d.columns_where(|ix, iz| ix.abs_diff(cx) <= hx && iz.abs_diff(cz) <= hz);
        let clipped = cx < w.ix.0 + hx || cx + hx >= w.ix.1 || cz < w.iz.0 + hz || cz + hz >= w.iz.1;
        let mut rep = NodeReport {
            ix: cx,
            iz: cz,
            n_inputs: cols.len(),
            entropy: f64::NAN,
            estimated: false,
            clipped,
        };
        if cols.len() < MIN_WINDOW_COLUMNS {
            return Ok((None, rep));
        }
        let corr = correlate_columns(&d.d, &cols, true)?;
        let mut u = phase_only(&corr.decomposition.vector(0));
        if opts.remove_tilt {
            let (a, _) = detrend_tilt(&u, &ks);
            for (z, k) in u.iter_mut().zip(&ks) {
                *z *= Complex64::from_polar(1.0, -a * k);
            }
        }
        align_gauge(&mut u);
        rep.entropy = corr.entropy;
        rep.estimated = true;
        Ok((Some(u), rep))
    });
    let mut laws = Vec::with_capacity(results.len());
    let mut nodes = Vec::with_capacity(results.len());
    for r in results {
        let (u, rep) = r?;
        laws.push(u);
        nodes.push(rep);
    }
    let nnx = nodes_x.len();
    if laws.iter().all(|l| l.is_none()) {
        return Err(Error::invalid("no window had enough valid focal points"));
    }
    // Windows without an estimate inherit the nearest estimated node.
    let filled: Vec<Vec<Complex64>> = (0..laws.len())
        .map(|i| match &laws[i] {
            Some(u) => u.clone(),
            None => {
                let (ax, az) = (i % nnx, i / nnx);
                let j = (0..laws.len())
                    .filter(|&j| laws[j].is_some())
                    .min_by_key(|&j| {
                        let (bx, bz) = (j % nnx, j / nnx);
                        let ddx = nodes_x[ax].abs_diff(nodes_x[bx]);
                        let ddz = nodes_z[az].abs_diff(nodes_z[bz]);
                        (ddx * ddx + ddz * ddz, j)
                    })
                    .unwrap();
                laws[j].clone().unwrap()
            }
        })
        .collect();

    let (nx, nz) = (d.x.len(), d.z.len());
    let mut out = vec![Complex64::new(0.0, 0.0); nx * nz * nk];
    let mut estimated = vec![false; nx * nz];
    for iz in 0..nz {
        let (za, zb, tz) = bracket(&nodes_z, iz.clamp(w.iz.0, w.iz.1 - 1));
        for ix in 0..nx {
            let (xa, xb, tx) = bracket(&nodes_x, ix.clamp(w.ix.0, w.ix.1 - 1));
            let (wx, wz) = (taper(tx), taper(tz));
            let corners = [
                (za, xa, (1.0 - wz) * (1.0 - wx)),
                (za, xb, (1.0 - wz) * wx),
                (zb, xa, wz * (1.0 - wx)),
                (zb, xb, wz * wx),
            ];
            let o = (iz * nx + ix) * nk;
            for k in 0..nk {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(a, b, wt) in &corners {
                    if wt != 0.0 {
                        acc += filled[a * nnx + b][k] * wt;
                    }
                }
                out[o + k] = if acc.norm() > 1e-12 {
                    acc / acc.norm()
                } else {
                    let (a, b) = if wz < 0.5 {
                        (za, if wx < 0.5 { xa } else { xb })
                    } else {
                        (zb, if wx < 0.5 { xa } else { xb })
                    };
                    filled[a * nnx + b][k]
                };
            }
            let inside = ix >= w.ix.0 && ix < w.ix.1 && iz >= w.iz.0 && iz < w.iz.1;
            estimated[iz * nx + ix] = inside && corners.iter().any(|&(a, b, wt)| wt > 0.0 && laws[a * nnx + b].is_some());
        }
    }
    Ok(WindowSweep {
        estimate: TransmissionEstimate {
            k: d.d.rows().clone(),
            x: d.x.clone(),
            z: d.z.clone(),
            laws: out,
            provenance: Provenance::LocalWindow,
            estimated,
        },
        nodes,
    })
}

/// Index pair around `p` and the fractional position between them.
fn bracket(nodes: &[usize], p: usize) -> (usize, usize, f64) {
    let j = nodes.partition_point(|&n| n <= p);
    if j == 0 {
        return (0, 0, 0.0);
    }
    if j >= nodes.len() {
        let l = nodes.len() - 1;
        return (l, l, 0.0);
    }
    let (a, b) = (nodes[j - 1], nodes[j]);
    (j - 1, j, (p - a) as f64 / (b - a) as f64)
}

fn taper(t: f64) -> f64 {
    0.5 * (1.0 - (PI * t).cos())
}

/// Rotates a law so that its mean phasor is real and positive.
pub fn align_gauge(u: &mut [Complex64]) {
    let m: Complex64 = u.iter().sum();
    if m.norm() > 0.0 {
        let g = m.conj() / m.norm();
        u.iter_mut().for_each(|z| *z *= g);
    }
}

/// Mean `H / N` over estimated nodes for each candidate window; returns the
/// index of the smallest ratio and all ratios.
pub fn window_size_guidance(d: &DistortionMatrix, candidates: &[WindowSpec]) -> Result<(usize, Vec<f64>)> {
    if candidates.is_empty() {
        return Err(Error::invalid("no window candidates"));
    }
    let mut ratios = Vec::with_capacity(candidates.len());
    for c in candidates {
        let sweep = local_window_sweep(d, c, SweepOptions::default())?;
        let est: Vec<&NodeReport> = sweep.nodes.iter().filter(|n| n.estimated).collect();
        let r = est.iter().map(|n| n.entropy / n.n_inputs as f64).sum::<f64>() / est.len().max(1) as f64;
        ratios.push(r);
    }
    let best = (0..ratios.len()).min_by(|&a, &b| ratios[a].total_cmp(&ratios[b])).unwrap();
    Ok((best, ratios))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::dmatrix::FovWindow;
    use crate::matrix::{BasisAxis, BasisKind, ComplexMatrix};

    /// Every column carries the same law.
    fn uniform_d(law: &[Complex64], nx: usize, nz: usize) -> DistortionMatrix {
        let k = BasisAxis::centered(BasisKind::Wavenumber, 500.0, law.len()).unwrap();
        let x = BasisAxis::centered(BasisKind::FocalX, 0.2e-3, nx).unwrap();
        let z = BasisAxis::uniform(BasisKind::Depth, 5e-3, 0.2e-3, nz).unwrap();
        let pixels: Vec<(usize, usize)> = (0..nz).flat_map(|iz| (0..nx).map(move |ix| (ix, iz))).collect();
        let cols = BasisAxis::index(BasisKind::FocalX, pixels.len());
        DistortionMatrix {
            d: ComplexMatrix::from_fn(k, cols, |i, _| law[i]).unwrap(),
            valid: vec![true; pixels.len()],
            pixels,
            x,
            z,
            window: FovWindow::full(nx, nz),
        }
    }

    fn law(n: usize) -> Vec<Complex64> {
        (0..n).map(|i| Complex64::from_polar(1.0, 0.3 * (i * i) as f64 - 1.0)).collect()
    }

    #[test]
    fn constant_law_is_recovered_everywhere() {
        let u = law(9);
        let mut want = u.clone();
        align_gauge(&mut want);
        let d = uniform_d(&u, 12, 10);
        for stride in [None, Some(1)] {
            let spec = WindowSpec {
                half_x: 0.6e-3,
                half_z: 0.6e-3,
                stride,
            };
            let sweep = local_window_sweep(&d, &spec, SweepOptions::default()).unwrap();
            assert!(sweep.estimate.estimated.iter().all(|&e| e));
            assert!(sweep.nodes.iter().all(|n| n.estimated && n.entropy.abs() < 1e-9));
            assert!(sweep.nodes.iter().any(|n| n.clipped));
            for iz in 0..10 {
                for ix in 0..12 {
                    let got = sweep.estimate.law(ix, iz);
                    assert!(got.iter().zip(&want).all(|(a, b)| (a - b).norm() < 1e-9));
                }
            }
        }
    }

    #[test]
    fn window_too_small_is_rejected() {
        let d = uniform_d(&law(9), 12, 10);
        let tiny = WindowSpec {
            half_x: 0.05e-3,
            half_z: 0.05e-3,
            stride: None,
        };
        assert!(local_window_sweep(&d, &tiny, SweepOptions::default()).is_err());
        let bad = WindowSpec { half_x: 0.0, ..tiny };
        assert!(local_window_sweep(&d, &bad, SweepOptions::default()).is_err());
        assert!(window_size_guidance(&d, &[]).is_err());
    }

    #[test]
    fn node_lattice_and_brackets() {
        assert_eq!(node_positions(0, 10, 3), vec![0, 3, 6, 9]);
        assert_eq!(node_positions(0, 10, 4), vec![0, 4, 8, 9]);
        assert_eq!(node_positions(2, 3, 5), vec![2]);
        let nodes = [0, 4, 8, 9];
        assert_eq!(bracket(&nodes, 6), (1, 2, 0.5));
        assert_eq!(bracket(&nodes, 9), (3, 3, 0.0));
        assert_eq!(taper(0.0), 0.0);
        assert!((taper(0.5) - 0.5).abs() < 1e-15 && (taper(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gauge_makes_mean_real() {
        let mut u = law(7);
        align_gauge(&mut u);
        let m: Complex64 = u.iter().sum();
        assert!(m.im.abs() < 1e-12 && m.re > 0.0);
        let mut z = vec![Complex64::new(0.0, 0.0); 3];
        align_gauge(&mut z);
        assert!(z.iter().all(|v| v.norm() == 0.0));
    }
}
