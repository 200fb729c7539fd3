use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::acquisition::RawAcquisition;

/// Adds white Gaussian noise at `snr_db` relative to the trace energy.
/// `f64::INFINITY` returns the input unchanged.
pub fn add_noise(acq: &RawAcquisition, snr_db: f64, rng_seed: u64) -> RawAcquisition {
    let mut out = acq.clone();
    if snr_db == f64::INFINITY {
        return out;
    }
    let n = acq.traces.len() as f64;
    let sigma = (acq.energy() / n / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for v in out.traces.iter_mut() {
        let g: f64 = StandardNormal.sample(&mut rng);
        *v += sigma * g;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::probe::ProbeConfig;
    use ndarray::Array3;

    fn acq() -> RawAcquisition {
        let probe = ProbeConfig {
            n_elements: 8,
            angles: vec![-0.1, 0.0, 0.1],
            record_length: 10e-6,
            ..ProbeConfig::desk()
        };
        let n = probe.n_samples();
        RawAcquisition {
            traces: Array3::from_shape_fn((8, 3, n), |(u, a, t)| ((u + 2 * a) as f64 + 0.01 * t as f64).sin()),
            probe,
            c_model: 1540.0,
        }
    }

    #[test]
    fn infinite_snr_is_identity() {
        let a = acq();
        assert_eq!(add_noise(&a, f64::INFINITY, 1), a);
    }

    #[test]
    fn seeded_and_at_requested_level() {
        let a = acq();
        let b = add_noise(&a, 10.0, 5);
        assert_eq!(b, add_noise(&a, 10.0, 5));
        assert_ne!(b, add_noise(&a, 10.0, 6));
        let noise: f64 = (&b.traces - &a.traces).iter().map(|v| v * v).sum();
        let snr = 10.0 * (a.energy() / noise).log10();
        assert!((snr - 10.0).abs() < 0.3, "snr {snr}");
    }
}
