use crate::error::{Error, Result};

/// Horizontally stratified medium. Layer `l` spans `[interfaces[l], interfaces[l+1])`;
/// the last layer extends to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredMedium {
    pub interfaces: Vec<f64>,
    pub speeds: Vec<f64>,
}

impl LayeredMedium {
    pub fn new(interfaces: Vec<f64>, speeds: Vec<f64>) -> Result<Self> {
        let m = Self { interfaces, speeds };
        m.validate()?;
        Ok(m)
    }

    pub fn homogeneous(c: f64) -> Self {
        Self {
            interfaces: vec![0.0],
            speeds: vec![c],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.interfaces.is_empty() || self.interfaces.len() != self.speeds.len() {
            return Err(Error::invalid("need one speed per layer"));
        }
        if self.interfaces[0] != 0.0 {
            return Err(Error::invalid("first interface must be at depth 0"));
        }
        if self.interfaces.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("interfaces must be strictly increasing"));
        }
        if self.speeds.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(Error::invalid("layer speeds must be positive"));
        }
        Ok(())
    }

    /// `(thickness, speed)` of every finite layer.
    pub fn finite_layers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.interfaces.windows(2).zip(&self.speeds).map(|(w, c)| (w[1] - w[0], *c))
    }

    fn layer_of(&self, z: f64) -> usize {
        self.interfaces.iter().rposition(|&d| d <= z).unwrap_or(0)
    }

    /// Vertical extent inside each layer between depths `za <= zb`.
    fn segments(&self, za: f64, zb: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for l in 0..self.speeds.len() {
            let top = self.interfaces[l];
            let bot = self.interfaces.get(l + 1).copied().unwrap_or(f64::INFINITY);
            let h = zb.min(bot) - za.max(top);
            if h > 0.0 {
                out.push((h, self.speeds[l]));
            }
        }
        out
    }
}

const GOLDEN_MAX_ITER: usize = 200;

/// First-arrival travel time between two points by Fermat's principle.
pub fn fermat_travel_time(src: (f64, f64), dst: (f64, f64), medium: &LayeredMedium) -> Result<f64> {
    medium.validate()?;
    let (a, b) = if src.1 <= dst.1 { (src, dst) } else { (dst, src) };
    let offset = (b.0 - a.0).abs();
    let segs = medium.segments(a.1, b.1);
    match segs.len() {
        0 => Ok(offset / medium.speeds[medium.layer_of(a.1)]),
        1 => Ok(offset.hypot(segs[0].0) / segs[0].1),
        2 => two_layer(offset, segs[0], segs[1]),
        _ => multi_layer(offset, &segs),
    }
}

fn two_layer(offset: f64, (d1, c1): (f64, f64), (d2, c2): (f64, f64)) -> Result<f64> {
    let t = |xi: f64| xi.hypot(d1) / c1 + (offset - xi).hypot(d2) / c2;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, offset);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (t(x1), t(x2));
    for _ in 0..GOLDEN_MAX_ITER {
        if hi - lo <= 1e-15 + 1e-13 * offset {
            let xm = 0.5 * (lo + hi);
            return Ok(t(xm).min(f1).min(f2));
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = t(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = t(x2);
        }
    }
    Err(Error::NonConvergence {
        op: "fermat_travel_time",
        residual: hi - lo,
    })
}

/// Ray-parameter shooting: find `p` whose lateral offset matches, then sum times.
fn multi_layer(offset: f64, segs: &[(f64, f64)]) -> Result<f64> {
    let cmax = segs.iter().fold(0.0f64, |m, s| m.max(s.1));
    let lateral = |p: f64| segs.iter().map(|&(d, c)| d * p * c / (1.0 - (p * c).powi(2)).sqrt()).sum::<f64>();
    let (mut lo, mut hi) = (0.0, 1.0 / cmax);
    for _ in 0..GOLDEN_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if lateral(mid) < offset {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 / cmax {
            let p = 0.5 * (lo + hi);
            return Ok(segs.iter().map(|&(d, c)| d / (c * (1.0 - (p * c).powi(2)).sqrt())).sum());
        }
    }
    Err(Error::NonConvergence {
        op: "fermat_travel_time",
        residual: hi - lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plate() -> LayeredMedium {
        LayeredMedium::new(vec![0.0, 15e-3], vec![2750.0, 1542.0]).unwrap()
    }

    #[test]
    fn vertical_path() {
        let t = fermat_travel_time((0.0, 0.0), (0.0, 25e-3), &plate()).unwrap();
        let want = 0.015 / 2750.0 + 0.010 / 1542.0;
        assert!((t - want).abs() < 1e-15);
    }

    #[test]
    fn homogeneous_straight_line() {
        let m = LayeredMedium::homogeneous(1540.0);
        let t = fermat_travel_time((1e-3, 2e-3), (-4e-3, 30e-3), &m).unwrap();
        assert!((t - (5e-3f64).hypot(28e-3) / 1540.0).abs() < 1e-15);
    }

    #[test]
    fn multi_layer_matches_two_layer_split() {
        // Splitting a layer in two with equal speeds must not change the time.
        let a = plate();
        let b = LayeredMedium::new(vec![0.0, 7e-3, 15e-3], vec![2750.0, 2750.0, 1542.0]).unwrap();
        let ta = fermat_travel_time((0.0, 0.0), (8e-3, 30e-3), &a).unwrap();
        let tb = fermat_travel_time((0.0, 0.0), (8e-3, 30e-3), &b).unwrap();
        assert!((ta - tb).abs() < 1e-13);
    }

    #[test]
    fn rejects_invalid_medium() {
        assert!(LayeredMedium::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(LayeredMedium::new(vec![0.0], vec![-1.0]).is_err());
        assert!(LayeredMedium::new(vec![1.0], vec![1.0]).is_err());
    }
}
