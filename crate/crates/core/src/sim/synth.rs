use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::acquisition::{element_angle_axes, omega_axis, traces_from_spectra, RawAcquisition, SpectralReflection};
use super::phantom::Scatterer;
use super::probe::ProbeConfig;
use super::screen::{Aberrator, PhaseScreen};
use crate::error::{Error, Result};
use crate::matrix::kernels::gemm_acc;
use crate::matrix::{BasisAxis, BasisKind, ComplexMatrix};
use crate::par;
use crate::special::green_2d;

/// Number of lateral simulation steps per element pitch.
pub const LATERAL_SUBSTEPS: usize = 4;
const COMB_LEN: usize = 2048;
const COMB_TOL: f64 = 1e-10;

/// Monochromatic far-field reflection matrix of a scene seen through a screen:
/// `R(k_out, k_in) = H(k_out) H(k_in) Σ_s γ_s e^{i(k_z(k_out)+k_z(k_in)) z_s} e^{i(k_out+k_in) x_s}`.
///
/// Evanescent wavenumbers give zero rows and columns.
pub fn synth_rkk_mono(
    scene: &[Scatterer],
    screen: Option<&PhaseScreen>,
    c_ref: f64,
    omega: f64,
    k_grid: &BasisAxis,
) -> Result<ComplexMatrix> {
    if scene.is_empty() {
        return Err(Error::invalid("scene is empty"));
    }
    if !(c_ref > 0.0 && omega > 0.0) {
        return Err(Error::invalid("c_ref and omega must be positive"));
    }
    if k_grid.kind() != BasisKind::Wavenumber {
        return Err(Error::dim("synth_rkk_mono", "k grid must be a wavenumber axis"));
    }
    let k0 = omega / c_ref;
    let ks = k_grid.coords();
    let nk = ks.len();
    let ns = scene.len();
    let h: Vec<Complex64> = ks
        .iter()
        .map(|&k| {
            if k.abs() >= k0 {
                Complex64::new(0.0, 0.0)
            } else {
                screen.map_or(Complex64::new(1.0, 0.0), |s| s.transmittance(k, omega))
            }
        })
        .collect();
    // a[k][s] = H(k) e^{i(k_z z_s + k x_s)}, b = diag(γ) aᵀ
    let mut a = vec![Complex64::new(0.0, 0.0); nk * ns];
    for (i, &k) in ks.iter().enumerate() {
        if h[i].norm() == 0.0 {
            continue;
        }
        let kz = (k0 * k0 - k * k).sqrt();
        for (s, sc) in scene.iter().enumerate() {
            a[i * ns + s] = h[i] * Complex64::from_polar(1.0, kz * sc.z + k * sc.x);
        }
    }
    let mut b = vec![Complex64::new(0.0, 0.0); ns * nk];
    for s in 0..ns {
        for j in 0..nk {
            b[s * nk + j] = scene[s].amp * a[j * ns + s];
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); nk * nk];
    gemm_acc(&a, &b, &mut out, nk, ns, nk);
    Ok(ComplexMatrix::from_vec_unchecked(k_grid.clone(), k_grid.clone(), out))
}

/// Lateral-shift expansion of an up-going screen: `H(−κ) = Σ_n c_n e^{−iκnΔ}`.
struct Comb {
    n_lo: i64,
    taps: Vec<Complex64>,
}

impl Comb {
    fn identity() -> Self {
        Self {
            n_lo: 0,
            taps: vec![Complex64::new(1.0, 0.0)],
        }
    }

    fn new(screen: &PhaseScreen, omega: f64, delta: f64) -> Self {
        let n = COMB_LEN;
        let dk = 2.0 * PI / (n as f64 * delta);
        let half = (n / 2) as i64;
        // buf[j] = H(-κ_j) with κ_j = (j - n/2)·dk; c_m = (1/n) Σ_j buf[j] e^{iκ_j mΔ}.
        let mut buf: Vec<Complex64> = (0..n)
            .map(|j| screen.transmittance(-((j as i64 - half) as f64) * dk, omega))
            .collect();
        // e^{iκ_j mΔ} = e^{2πi(j - n/2)m/n}; fold the (-n/2) shift into a sign per m.
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        let coeff = |m: i64| {
            let idx = m.rem_euclid(n as i64) as usize;
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            buf[idx] * (sign / n as f64)
        };
        let all: Vec<Complex64> = (-half..half).map(coeff).collect();
        let max = all.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let keep = |z: &Complex64| z.norm() >= COMB_TOL * max;
        let first = all.iter().position(keep).unwrap_or(half as usize);
        let last = all.iter().rposition(keep).unwrap_or(half as usize);
        Self {
            n_lo: first as i64 - half,
            taps: all[first..=last].to_vec(),
        }
    }

    fn n_hi(&self) -> i64 {
        self.n_lo + self.taps.len() as i64 - 1
    }

    /// Down-going transmittance `H(κ)` implied by the taps.
    fn down(&self, kappa: f64, delta: f64) -> Complex64 {
        self.taps
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::from_polar(1.0, kappa * (self.n_lo + i as i64) as f64 * delta))
            .sum()
    }
}

/// Circular-convolution evaluation of `Σ_i c_i g[j + T − 1 − i]` for long combs.
struct CombConvolver {
    size: usize,
    taps_hat: Vec<Complex64>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

/// Below this many taps the table is built by direct summation.
const DIRECT_TAPS: usize = 48;

impl CombConvolver {
    fn new(comb: &Comb, g_len: usize) -> Option<Self> {
        if comb.taps.len() <= DIRECT_TAPS {
            return None;
        }
        let size = g_len.next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let mut taps_hat = vec![Complex64::new(0.0, 0.0); size];
        taps_hat[..comb.taps.len()].copy_from_slice(&comb.taps);
        fwd.process(&mut taps_hat);
        let s = 1.0 / size as f64;
        taps_hat.iter_mut().for_each(|z| *z *= s);
        Some(Self { size, taps_hat, fwd, inv })
    }

    fn apply(&self, g: &[Complex64], n_taps: usize, out_len: usize) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        buf[..g.len()].copy_from_slice(g);
        self.fwd.process(&mut buf);
        buf.iter_mut().zip(&self.taps_hat).for_each(|(b, t)| *b *= t);
        self.inv.process(&mut buf);
        buf[n_taps - 1..n_taps - 1 + out_len].to_vec()
    }
}

struct Group {
    z: f64,
    region: usize,
    /// `(lateral grid index, amplitude)`.
    members: Vec<(i64, Complex64)>,
}

fn group_scene(scene: &[Scatterer], aberrator: &Aberrator, delta: f64) -> Vec<Group> {
    let mut idx: Vec<usize> = (0..scene.len()).collect();
    let region: Vec<usize> = scene.iter().map(|s| aberrator.region_of(s.x, s.z)).collect();
    idx.sort_by(|&a, &b| {
        scene[a]
            .z
            .total_cmp(&scene[b].z)
            .then(region[a].cmp(&region[b]))
            .then(scene[a].x.total_cmp(&scene[b].x))
    });
    let mut groups: Vec<Group> = Vec::new();
    for i in idx {
        let s = &scene[i];
        let m = (s.x / delta).round() as i64;
        match groups.last_mut() {
            Some(g) if g.z == s.z && g.region == region[i] => g.members.push((m, s.amp)),
            _ => groups.push(Group {
                z: s.z,
                region: region[i],
                members: vec![(m, s.amp)],
            }),
        }
    }
    groups
}

/// Born-approximation plane-wave acquisition of a scene in the frequency domain.
///
/// Emission uses plane waves `e^{ik(z cosθ + x sinθ)}` and reception the 2D
/// Green's function, both filtered by the screen of the scatterer's patch.
/// Scatterer abscissae are snapped to a lateral grid of `pitch / 4`.
pub fn simulate_spectral(probe: &ProbeConfig, scene: &[Scatterer], aberrator: &Aberrator, c: f64) -> Result<SpectralReflection> {
    probe.validate()?;
    aberrator.validate()?;
    if !(c > 0.0) {
        return Err(Error::invalid("wave speed must be positive"));
    }
    if scene.iter().any(|s| !(s.z > 0.0)) {
        return Err(Error::invalid("scatterers must lie below the array (z > 0)"));
    }
    let delta = probe.pitch / LATERAL_SUBSTEPS as f64;
    let elems: Vec<i64> = (0..probe.n_elements)
        .map(|i| (LATERAL_SUBSTEPS * i) as i64 - (LATERAL_SUBSTEPS as i64 * (probe.n_elements as i64 - 1)) / 2)
        .collect();
    let half_offset = if (LATERAL_SUBSTEPS * (probe.n_elements - 1)).is_multiple_of(2) {
        0.0
    } else {
        0.5
    };
    // Elements sit at (e + half_offset)·Δ; scatterers are snapped to the same lattice.
    let groups = group_scene(
        &scene
            .iter()
            .map(|s| Scatterer {
                x: s.x - half_offset * delta,
                ..*s
            })
            .collect::<Vec<_>>(),
        aberrator,
        delta,
    );
    let bins = probe.band_bins();
    let (ua, ta) = element_angle_axes(probe)?;
    let omega = omega_axis(probe, &bins)?;
    let (m_min, m_max) = groups
        .iter()
        .flat_map(|g| g.members.iter().map(|m| m.0))
        .fold((i64::MAX, i64::MIN), |(a, b), m| (a.min(m), b.max(m)));
    let sin: Vec<f64> = probe.angles.iter().map(|a| a.sin()).collect();
    let cos: Vec<f64> = probe.angles.iter().map(|a| a.cos()).collect();
    let (nu, nt) = (probe.n_elements, probe.angles.len());
    let static_combs: Vec<Option<Comb>> = (0..aberrator.n_regions())
        .map(|r| match aberrator.screen(r) {
            Some(s) if !s.is_dispersive() => Some(Comb::new(s, 1.0, delta)),
            _ => None,
        })
        .collect();

    let data = par::map_slice(omega.coords(), |&w| {
        let mut r = vec![Complex64::new(0.0, 0.0); nu * nt];
        let weight = probe.pulse_spectrum(w / (2.0 * PI));
        if weight == 0.0 || groups.is_empty() {
            return r;
        }
        let k = w / c;
        let combs: Vec<Comb> = (0..aberrator.n_regions())
            .map(|reg| match (&static_combs[reg], aberrator.screen(reg)) {
                (Some(_), _) => Comb::identity(),
                (None, Some(s)) => Comb::new(s, w, delta),
                (None, None) => Comb::identity(),
            })
            .collect();
        let comb_of = |reg: usize| static_combs[reg].as_ref().unwrap_or(&combs[reg]);
        let emission: Vec<Vec<Complex64>> = (0..aberrator.n_regions())
            .map(|reg| match aberrator.screen(reg) {
                None => vec![Complex64::new(1.0, 0.0); nt],
                Some(_) => sin.iter().map(|s| comb_of(reg).down(k * s, delta)).collect(),
            })
            .collect();
        // xphase[(m - m_min)·nt + t] = e^{ik x_m sinθ_t}
        let span = (m_max - m_min + 1) as usize;
        let mut xphase = vec![Complex64::new(0.0, 0.0); span * nt];
        for mi in 0..span {
            let x = (m_min + mi as i64) as f64 * delta + half_offset * delta;
            for t in 0..nt {
                xphase[mi * nt + t] = Complex64::from_polar(1.0, k * x * sin[t]);
            }
        }
        let e_min = elems[0];
        let e_max = elems[nu - 1];
        let og_len = (e_max - m_min - (e_min - m_max) + 1) as usize;
        let convolvers: Vec<Option<CombConvolver>> = (0..aberrator.n_regions())
            .map(|reg| {
                let c = comb_of(reg);
                CombConvolver::new(c, og_len + c.taps.len() - 1)
            })
            .collect();
        for g in &groups {
            let comb = comb_of(g.region);
            let o_lo = e_min - m_max - comb.n_hi();
            let o_hi = e_max - m_min - comb.n_lo;
            let g0: Vec<Complex64> = (o_lo..=o_hi).map(|o| green_2d(k * ((o as f64) * delta).hypot(g.z))).collect();
            let og_lo = e_min - m_max;
            let og_hi = e_max - m_min;
            let table: Vec<Complex64> = match &convolvers[g.region] {
                Some(cv) => cv.apply(&g0, comb.taps.len(), og_len),
                None => (og_lo..=og_hi)
                    .map(|o| {
                        comb.taps
                            .iter()
                            .enumerate()
                            .map(|(i, c)| c * g0[(o - (comb.n_lo + i as i64) - o_lo) as usize])
                            .sum()
                    })
                    .collect(),
            };
            let ns = g.members.len();
            let mut a = vec![Complex64::new(0.0, 0.0); nu * ns];
            for (ui, &e) in elems.iter().enumerate() {
                for (s, &(m, amp)) in g.members.iter().enumerate() {
                    a[ui * ns + s] = table[(e - m - og_lo) as usize] * amp;
                }
            }
            let mut b = vec![Complex64::new(0.0, 0.0); ns * nt];
            for (s, &(m, _)) in g.members.iter().enumerate() {
                let mi = (m - m_min) as usize;
                b[s * nt..(s + 1) * nt].copy_from_slice(&xphase[mi * nt..(mi + 1) * nt]);
            }
            let mut cmat = vec![Complex64::new(0.0, 0.0); nu * nt];
            gemm_acc(&a, &b, &mut cmat, nu, ns, nt);
            let em = &emission[g.region];
            let col: Vec<Complex64> = (0..nt).map(|t| em[t] * Complex64::from_polar(weight, k * g.z * cos[t])).collect();
            for ui in 0..nu {
                for t in 0..nt {
                    r[ui * nt + t] += cmat[ui * nt + t] * col[t];
                }
            }
        }
        r
    });
    let data = data
        .into_iter()
        .map(|v| ComplexMatrix::from_vec_unchecked(ua.clone(), ta.clone(), v))
        .collect();
    Ok(SpectralReflection {
        probe: probe.clone(),
        bins,
        omega,
        data,
        c_model: c,
    })
}

/// Time-domain acquisition of a scene, see [`simulate_spectral`].
pub fn simulate(probe: &ProbeConfig, scene: &[Scatterer], aberrator: &Aberrator, c: f64) -> Result<RawAcquisition> {
    traces_from_spectra(&simulate_spectral(probe, scene, aberrator, c)?)
}

/// Builds element-domain traces from a stack of far-field matrices, one per
/// band bin of `probe`.
///
/// Input columns are picked by the nearest wavenumber to `(ω/c_ref) sinθ`;
/// rows go to elements through `R(u) = (1/N_k) Σ_k e^{-iku} R(k)`; the pulse
/// spectrum is applied before the inverse temporal transform.
pub fn assemble_time_domain(stack: &[ComplexMatrix], probe: &ProbeConfig, c_ref: f64) -> Result<RawAcquisition> {
    probe.validate()?;
    let bins = probe.band_bins();
    if stack.len() != bins.len() {
        return Err(Error::dim(
            "assemble_time_domain",
            format!("{} matrices for {} band bins", stack.len(), bins.len()),
        ));
    }
    let mut spec = SpectralReflection::zeros(probe, c_ref)?;
    let u = probe.element_positions();
    let nt = probe.angles.len();
    for (j, (m, &b)) in stack.iter().zip(&bins).enumerate() {
        if m.kind_pair() != (BasisKind::Wavenumber, BasisKind::Wavenumber) {
            return Err(Error::dim("assemble_time_domain", "stack must be k-by-k"));
        }
        let ks = m.cols().coords();
        let nk = ks.len();
        let f = probe.bin_frequency(b);
        let k0 = 2.0 * PI * f / c_ref;
        let step = m.cols().uniform_step().unwrap_or(f64::INFINITY);
        let cols: Vec<Option<usize>> = probe
            .angles
            .iter()
            .map(|a| {
                let kx = k0 * a.sin();
                let i = ks.partition_point(|&k| k < kx);
                let cand = [i.saturating_sub(1), i.min(nk - 1)];
                let best = *cand
                    .iter()
                    .min_by(|&&p, &&q| (ks[p] - kx).abs().total_cmp(&(ks[q] - kx).abs()))
                    .unwrap();
                ((ks[best] - kx).abs() <= 0.5 * step + 1e-12 * k0).then_some(best)
            })
            .collect();
        let w = probe.pulse_spectrum(f) / nk as f64;
        let out = ComplexMatrix::from_fn(spec.data[j].rows().clone(), spec.data[j].cols().clone(), |ui, t| match cols[t] {
            None => Complex64::new(0.0, 0.0),
            Some(ci) => ks
                .iter()
                .enumerate()
                .map(|(ki, &k)| m.get(ki, ci) * Complex64::from_polar(w, -k * u[ui]))
                .sum(),
        })?;
        debug_assert_eq!(out.shape().1, nt);
        spec.data[j] = out;
    }
    traces_from_spectra(&spec)
}
