use dmi_core::distortion::strehl_of;
use dmi_core::farfield::{reverb_filter, AlphaPolicy, BandOrientation, ReverbFilterParams};
use dmi_core::matrix::{herm_eig, shannon_entropy, BasisAxis, BasisKind, ComplexMatrix, DEFAULT_EPS_REL};
use dmi_core::sim::{fermat_travel_time, synth_rkk_mono, LayeredMedium, PhaseScreen, Scatterer};
use dmi_core::Complex64;
use proptest::prelude::*;

fn axis(n: usize) -> BasisAxis {
    BasisAxis::index(BasisKind::Wavenumber, n)
}

fn matrix(m: usize, n: usize, v: &[(f64, f64)]) -> ComplexMatrix {
    ComplexMatrix::from_fn(axis(m), axis(n), |i, j| {
        let (re, im) = v[i * n + j];
        Complex64::new(re, im)
    })
    .unwrap()
}

fn entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
}

fn phasors(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((0.0f64..2.0, -4.0f64..4.0), n).prop_map(|v| v.into_iter().map(|(r, p)| Complex64::from_polar(r, p)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn matmul_is_associative(a in entries(12), b in entries(20), c in entries(10)) {
        let (a, b, c) = (matrix(3, 4, &a), matrix(4, 5, &b), matrix(5, 2, &c));
        let l = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let r = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        prop_assert!(l.sub(&r).unwrap().frobenius_norm() <= 1e-12 * (1.0 + l.frobenius_norm()));
    }

    #[test]
    fn entropy_is_bounded(s in prop::collection::vec(0.0f64..10.0, 1..40)) {
        prop_assume!(s.iter().any(|v| *v > 0.0));
        let h = shannon_entropy(&s).unwrap();
        prop_assert!(h >= -1e-12 && h <= (s.len() as f64).log2() + 1e-12);
    }

    #[test]
    fn phase_normalize_is_idempotent(v in entries(36)) {
        let m = matrix(6, 6, &v);
        let once = m.phase_normalize(DEFAULT_EPS_REL).unwrap();
        let twice = once.phase_normalize(DEFAULT_EPS_REL).unwrap();
        prop_assert!(once.sub(&twice).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn hermitian_eigenvectors_are_orthonormal(v in entries(42)) {
        let b = matrix(6, 7, &v);
        let c = b.matmul(&b.adjoint()).unwrap();
        let e = herm_eig(&c).unwrap();
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let vv = e.eigenvectors.adjoint().matmul(&e.eigenvectors).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((vv.get(i, j) - want).norm() < 1e-10);
            }
        }
        let lam: Vec<f64> = e.eigenvalues.clone();
        let modes = e.eigenvectors.cols().clone();
        let d = ComplexMatrix::from_fn(modes.clone(), modes, |i, j| Complex64::new(if i == j { lam[i] } else { 0.0 }, 0.0)).unwrap();
        let rec = e.eigenvectors.matmul(&d).unwrap().matmul(&e.eigenvectors.adjoint()).unwrap();
        prop_assert!(rec.sub(&c).unwrap().frobenius_norm() < 1e-9 * c.frobenius_norm());
        prop_assert!(e.entropy >= 0.0 && e.entropy <= 6f64.log2() + 1e-12);
    }

    #[test]
    fn screen_keeps_modulus_and_reciprocity(
        pts in prop::collection::vec((-2e-3f64..2e-3, 4e-3f64..8e-3, -1.0f64..1.0, -1.0f64..1.0), 1..6),
        seed in 0u64..1000,
    ) {
        let scene: Vec<Scatterer> = pts.iter().map(|&(x, z, re, im)| Scatterer { x, z, amp: Complex64::new(re, im) }).collect();
        let k = BasisAxis::centered(BasisKind::Wavenumber, 1e3, 31).unwrap();
        let omega = 2.0 * std::f64::consts::PI * 5e6;
        let screen = PhaseScreen::random_smooth(1.5, 4, 6e4, 1.5e4, seed).unwrap();
        let clean = synth_rkk_mono(&scene, None, 1540.0, omega, &k).unwrap();
        let dirty = synth_rkk_mono(&scene, Some(&screen), 1540.0, omega, &k).unwrap();
        for i in 0..31 {
            for j in 0..31 {
                prop_assert!((clean.get(i, j).norm() - dirty.get(i, j).norm()).abs() < 1e-12 * (1.0 + clean.get(i, j).norm()));
                prop_assert!((dirty.get(i, j) - dirty.get(j, i)).norm() < 1e-12 * (1.0 + dirty.get(i, j).norm()));
            }
        }
    }

    #[test]
    fn filter_never_adds_energy(v in entries(49), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let k = BasisAxis::centered(BasisKind::Wavenumber, 1.0, 7).unwrap();
        let m = matrix(7, 7, &v).with_axes(k.clone(), k).unwrap();
        let p = ReverbFilterParams {
            delta_k: 1.5,
            alpha: AlphaPolicy::Adaptive,
            orientation: BandOrientation::Antidiagonal,
            band_center: 0.0,
        };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let e_lo = reverb_filter(&m, lo, &p).unwrap().frobenius_norm();
        let e_hi = reverb_filter(&m, hi, &p).unwrap().frobenius_norm();
        prop_assert!(e_lo <= m.frobenius_norm() + 1e-12);
        prop_assert!(e_hi <= e_lo + 1e-12);
    }

    #[test]
    fn strehl_is_a_fraction(c in phasors(20)) {
        if let Some(s) = strehl_of(&c) {
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn fermat_in_homogeneous_medium(x0 in -0.02f64..0.02, z0 in 0.0f64..0.03, x1 in -0.02f64..0.02, z1 in 0.0f64..0.03, c in 1000.0f64..3000.0) {
        let m = LayeredMedium::homogeneous(c);
        let t = fermat_travel_time((x0, z0), (x1, z1), &m).unwrap();
        let want = (x1 - x0).hypot(z1 - z0) / c;
        prop_assert!((t - want).abs() <= 1e-12 * (1.0 + want));
    }

    #[test]
    fn fermat_is_symmetric_and_bounded(x1 in -0.02f64..0.02, z1 in 0.005f64..0.03) {
        let m = LayeredMedium::new(vec![0.0, 3e-3], vec![2700.0, 1540.0]).unwrap();
        let a = fermat_travel_time((0.0, 0.0), (x1, z1), &m).unwrap();
        let b = fermat_travel_time((x1, z1), (0.0, 0.0), &m).unwrap();
        prop_assert!((a - b).abs() < 1e-15);
        let d = x1.hypot(z1);
        prop_assert!(a >= d / 2700.0 - 1e-15 && a <= d / 1540.0 + 1e-15);
    }
}
