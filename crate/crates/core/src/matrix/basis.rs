use crate::error::{Error, Result};

/// Which physical coordinate a matrix dimension is indexed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    /// Transducer element position `u` (m).
    Element,
    /// Plane-wave incidence angle (rad).
    Angle,
    /// Transverse wavenumber `k_x` (rad/m).
    Wavenumber,
    /// Lateral focal coordinate `x` (m).
    FocalX,
    /// Depth `z` (m).
    Depth,
    /// Angular frequency (rad/s).
    Frequency,
    /// Time (s).
    Time,
    /// Flattened list of focal points `(x, z)`; coordinates are the point index.
    FocalPoint,
    /// Eigenmode index.
    Mode,
}

impl BasisKind {
    pub fn label(self) -> &'static str {
        match self {
            BasisKind::Element => "element-u",
            BasisKind::Angle => "angle-theta",
            BasisKind::Wavenumber => "wavenumber-kx",
            BasisKind::FocalX => "focal-x",
            BasisKind::Depth => "depth-z",
            BasisKind::Frequency => "frequency-omega",
            BasisKind::Time => "time-t",
            BasisKind::FocalPoint => "focal-point",
            BasisKind::Mode => "mode",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Some(match label {
            "element-u" => BasisKind::Element,
            "angle-theta" => BasisKind::Angle,
            "wavenumber-kx" => BasisKind::Wavenumber,
            "focal-x" => BasisKind::FocalX,
            "depth-z" => BasisKind::Depth,
            "frequency-omega" => BasisKind::Frequency,
            "time-t" => BasisKind::Time,
            "focal-point" => BasisKind::FocalPoint,
            "mode" => BasisKind::Mode,
            _ => return None,
        })
    }
}

/// A labelled, strictly increasing coordinate list tagging one matrix dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisAxis {
    kind: BasisKind,
    coords: Vec<f64>,
}

impl BasisAxis {
    pub fn new(kind: BasisKind, coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("{} axis has non-finite coordinates", kind.label())));
        }
        if coords.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "{} axis coordinates must be strictly increasing",
                kind.label()
            )));
        }
        Ok(Self { kind, coords })
    }

    /// `n` points `start, start + step, ...`.
    pub fn uniform(kind: BasisKind, start: f64, step: f64, n: usize) -> Result<Self> {
        if !(step > 0.0) && n > 1 {
            return Err(Error::invalid("axis step must be positive"));
        }
        Self::new(kind, (0..n).map(|i| start + step * i as f64).collect())
    }

    /// `n` points symmetric about zero with spacing `step`.
    pub fn centered(kind: BasisKind, step: f64, n: usize) -> Result<Self> {
        let start = -0.5 * step * (n as f64 - 1.0);
        Self::uniform(kind, start, step, n)
    }

    /// Index axis `0, 1, ..., n-1`.
    pub fn index(kind: BasisKind, n: usize) -> Self {
        Self {
            kind,
            coords: (0..n).map(|i| i as f64).collect(),
        }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Spacing of a uniform axis, `None` if the axis is not uniform to 1e-9 relative.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.coords.len() < 2 {
            return None;
        }
        let step = self.coords[1] - self.coords[0];
        let ok = self.coords.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs());
        ok.then_some(step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_monotone() {
        assert!(BasisAxis::new(BasisKind::FocalX, vec![0.0, 1.0, 1.0]).is_err());
        assert!(BasisAxis::new(BasisKind::FocalX, vec![0.0, -1.0]).is_err());
        assert!(BasisAxis::new(BasisKind::FocalX, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn centered_axis_is_symmetric() {
        let ax = BasisAxis::centered(BasisKind::Element, 0.2e-3, 4).unwrap();
        assert!((ax.coords()[0] + ax.coords()[3]).abs() < 1e-18);
        assert!((ax.uniform_step().unwrap() - 0.2e-3).abs() < 1e-15);
    }

    #[test]
    fn labels_round_trip() {
        for k in [
            BasisKind::Element,
            BasisKind::Angle,
            BasisKind::Wavenumber,
            BasisKind::FocalX,
            BasisKind::Depth,
            BasisKind::Frequency,
            BasisKind::Time,
            BasisKind::FocalPoint,
            BasisKind::Mode,
        ] {
            assert_eq!(BasisKind::from_label(k.label()), Some(k));
        }
    }
}
