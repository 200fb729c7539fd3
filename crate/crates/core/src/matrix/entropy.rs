use crate::error::{Error, Result};

/// Shannon entropy (bits) of a non-negative spectrum after normalizing it to
/// unit sum. Zero entries contribute nothing.
pub fn shannon_entropy(sigmas: &[f64]) -> Result<f64> {
    if sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::invalid("entropy requires finite non-negative values"));
    }
    let total: f64 = sigmas.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("entropy of an all-zero spectrum is undefined"));
    }
    let h = sigmas
        .iter()
        .filter(|s| **s > 0.0)
        .map(|s| {
            let p = s / total;
            -p * p.log2()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}
