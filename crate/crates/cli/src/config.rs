//! INI-style pipeline configuration.
//!
//! ```text
//! [probe]
//! f0 = 7.5 MHz        # units are optional; SI is assumed without one
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;

use dmi_core::sim::{linspace_deg, Fov, Inclusion, PhantomSpec, PointTarget, ProbeConfig};
use dmi_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Count,
    Length,
    Frequency,
    Time,
    Angle,
    Speed,
    Wavenumber,
    Decibel,
    Plain,
}

fn unit_scale(dim: Dim, unit: &str) -> Option<f64> {
    let s = match (dim, unit) {
        (_, "") => 1.0,
        (Dim::Length, "m") => 1.0,
        (Dim::Length, "mm") => 1e-3,
        (Dim::Length, "um") | (Dim::Length, "µm") => 1e-6,
        (Dim::Frequency, "Hz") => 1.0,
        (Dim::Frequency, "kHz") => 1e3,
        (Dim::Frequency, "MHz") => 1e6,
        (Dim::Time, "s") => 1.0,
        (Dim::Time, "ms") => 1e-3,
        (Dim::Time, "us") | (Dim::Time, "µs") => 1e-6,
        (Dim::Angle, "rad") => 1.0,
        (Dim::Angle, "deg") => PI / 180.0,
        (Dim::Speed, "m/s") => 1.0,
        (Dim::Wavenumber, "1/m") | (Dim::Wavenumber, "rad/m") => 1.0,
        (Dim::Decibel, "dB") => 1.0,
        (Dim::Plain, "rad") => 1.0,
        _ => return None,
    };
    Some(s)
}

/// Recognized keys, their dimension and whether they may repeat.
const SCHEMA: &[(&str, &str, Dim, bool)] = &[
    ("probe", "n_elements", Dim::Count, false),
    ("probe", "pitch", Dim::Length, false),
    ("probe", "f0", Dim::Frequency, false),
    ("probe", "f_min", Dim::Frequency, false),
    ("probe", "f_max", Dim::Frequency, false),
    ("probe", "sample_rate", Dim::Frequency, false),
    ("probe", "n_angles", Dim::Count, false),
    ("probe", "angle_max", Dim::Angle, false),
    ("probe", "record_length", Dim::Time, false),
    ("medium", "c", Dim::Speed, false),
    ("medium", "aberrator", Dim::Plain, false),
    ("medium", "screen_rms", Dim::Plain, false),
    ("medium", "screen_modes", Dim::Count, false),
    ("medium", "screen_period", Dim::Wavenumber, false),
    ("medium", "screen_seed", Dim::Count, false),
    ("medium", "patch_boundary", Dim::Length, true),
    ("medium", "layer_thickness", Dim::Length, false),
    ("medium", "layer_speed", Dim::Speed, false),
    ("medium", "reverb_amplitude", Dim::Plain, false),
    ("medium", "reverb_orders", Dim::Count, false),
    ("medium", "reverb_reflection", Dim::Plain, false),
    ("medium", "noise_snr", Dim::Decibel, false),
    ("phantom", "x_min", Dim::Length, false),
    ("phantom", "x_max", Dim::Length, false),
    ("phantom", "z_min", Dim::Length, false),
    ("phantom", "z_max", Dim::Length, false),
    ("phantom", "speckle_density", Dim::Plain, false),
    ("phantom", "speckle_rms", Dim::Plain, false),
    ("phantom", "point_target", Dim::Length, true),
    ("phantom", "inclusion", Dim::Length, false),
    ("phantom", "seed", Dim::Count, false),
    ("pipeline", "c_model", Dim::Speed, false),
    ("pipeline", "dx", Dim::Length, false),
    ("pipeline", "dz", Dim::Length, false),
    ("pipeline", "z_min", Dim::Length, false),
    ("pipeline", "z_max", Dim::Length, false),
    ("pipeline", "oversample", Dim::Count, false),
    ("pipeline", "k_angle", Dim::Angle, false),
    ("pipeline", "filter", Dim::Plain, false),
    ("pipeline", "delta_k", Dim::Wavenumber, false),
    ("pipeline", "alpha", Dim::Plain, false),
    ("pipeline", "window_half_x", Dim::Length, false),
    ("pipeline", "window_half_z", Dim::Length, false),
    ("pipeline", "window_stride", Dim::Count, false),
    ("pipeline", "sweep_c_min", Dim::Speed, false),
    ("pipeline", "sweep_c_max", Dim::Speed, false),
    ("pipeline", "sweep_c_step", Dim::Speed, false),
    ("pipeline", "floor_db", Dim::Decibel, false),
    ("pipeline", "n_images", Dim::Count, false),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AberratorKind {
    None,
    Uniform,
    DepthPatches,
    LateralPatches,
    Layer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediumConfig {
    /// True wave speed of the simulated medium.
    pub c: f64,
    pub aberrator: AberratorKind,
    pub screen_rms: f64,
    pub screen_modes: usize,
    /// Harmonic period of random screens in k (rad/m); `None` means `3·k_max`.
    pub screen_period: Option<f64>,
    pub screen_seed: u64,
    pub patch_boundaries: Vec<f64>,
    pub layer_thickness: f64,
    pub layer_speed: f64,
    pub reverb_amplitude: f64,
    pub reverb_orders: usize,
    pub reverb_reflection: Option<f64>,
    pub noise_snr_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSetting {
    Adaptive,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSettings {
    pub c_model: f64,
    pub dx: f64,
    pub dz: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub oversample: usize,
    /// `k_max = (ω0/c_model)·sin(k_angle)`.
    pub k_angle: f64,
    pub filter: bool,
    pub delta_k: Option<f64>,
    pub alpha: AlphaSetting,
    pub window_half_x: f64,
    pub window_half_z: f64,
    pub window_stride: Option<usize>,
    pub sweep: (f64, f64, f64),
    pub floor_db: f64,
    pub n_images: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub probe: ProbeConfig,
    pub medium: MediumConfig,
    pub phantom: PhantomSpec,
    pub pipeline: PipelineSettings,
}

struct Entry {
    line: usize,
    values: Vec<f64>,
    word: Option<String>,
}

fn parse_number(text: &str, dim: Dim, line: usize) -> Result<f64> {
    let text = text.trim();
    let split = text.find(|c: char| c.is_whitespace()).unwrap_or(text.len());
    let (num, unit) = (&text[..split], text[split..].trim());
    let v: f64 = num.parse().map_err(|_| Error::Config {
        line,
        msg: format!("expected a number, got `{num}`"),
    })?;
    let s = unit_scale(dim, unit).ok_or_else(|| Error::Config {
        line,
        msg: format!("unit `{unit}` is not valid here"),
    })?;
    Ok(v * s)
}

fn tokenize(text: &str) -> Result<BTreeMap<(String, String), Vec<Entry>>> {
    let mut out: BTreeMap<(String, String), Vec<Entry>> = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                line,
                msg: "unterminated section header".into(),
            })?;
            let name = name.trim();
            if !["probe", "medium", "phantom", "pipeline"].contains(&name) {
                return Err(Error::Config {
                    line,
                    msg: format!("unknown section [{name}]"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| Error::Config {
            line,
            msg: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.clone().ok_or_else(|| Error::Config {
            line,
            msg: "key outside of any section".into(),
        })?;
        let &(_, _, dim, repeat) = SCHEMA
            .iter()
            .find(|(s, k, _, _)| *s == sec && *k == key)
            .ok_or_else(|| Error::Config {
                line,
                msg: format!("unknown key `{key}` in [{sec}]"),
            })?;
        let slot = out.entry((sec.clone(), key.to_string())).or_default();
        if !repeat && !slot.is_empty() {
            return Err(Error::Config {
                line,
                msg: format!("duplicate key `{key}`"),
            });
        }
        let first = value.chars().next().unwrap_or(' ');
        let entry = if first.is_ascii_alphabetic() && !value.starts_with("inf") {
            Entry {
                line,
                values: vec![],
                word: Some(value.to_string()),
            }
        } else {
            let values = value
                .split(',')
                .map(|part| parse_number(part, dim, line))
                .collect::<Result<Vec<f64>>>()?;
            Entry { line, values, word: None }
        };
        slot.push(entry);
    }
    Ok(out)
}

struct Table {
    map: BTreeMap<(String, String), Vec<Entry>>,
}

impl Table {
    fn entry(&self, sec: &str, key: &str) -> Option<&Entry> {
        self.map.get(&(sec.to_string(), key.to_string())).and_then(|v| v.first())
    }

    fn num(&self, sec: &str, key: &str, default: f64) -> Result<f64> {
        match self.entry(sec, key) {
            None => Ok(default),
            Some(e) if e.values.len() == 1 => Ok(e.values[0]),
            Some(e) => Err(Error::Config {
                line: e.line,
                msg: format!("`{key}` takes a single number"),
            }),
        }
    }

    fn opt_num(&self, sec: &str, key: &str) -> Result<Option<f64>> {
        if self.entry(sec, key).is_some_and(|e| e.word.as_deref() == Some("auto")) {
            return Ok(None);
        }
        self.entry(sec, key).map(|_| self.num(sec, key, 0.0)).transpose()
    }

    fn count(&self, sec: &str, key: &str, default: usize) -> Result<usize> {
        let v = self.num(sec, key, default as f64)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(self.err(sec, key, "must be a non-negative integer"));
        }
        Ok(v as usize)
    }

    fn word(&self, sec: &str, key: &str) -> Option<(&str, usize)> {
        self.entry(sec, key).and_then(|e| e.word.as_deref().map(|w| (w, e.line)))
    }

    fn err(&self, sec: &str, key: &str, msg: &str) -> Error {
        Error::Config {
            line: self.entry(sec, key).map_or(0, |e| e.line),
            msg: format!("{sec}.{key} {msg}"),
        }
    }
}

/// Parses a configuration; missing keys take desk-scale defaults.
pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let t = Table { map: tokenize(text)? };

    let desk = ProbeConfig::desk();
    let n_angles = t.count("probe", "n_angles", desk.angles.len())?;
    let angle_max = t.num("probe", "angle_max", 24f64.to_radians())?;
    let probe = ProbeConfig {
        n_elements: t.count("probe", "n_elements", desk.n_elements)?,
        pitch: t.num("probe", "pitch", desk.pitch)?,
        f0: t.num("probe", "f0", desk.f0)?,
        f_min: t.num("probe", "f_min", desk.f_min)?,
        f_max: t.num("probe", "f_max", desk.f_max)?,
        sample_rate: t.num("probe", "sample_rate", desk.sample_rate)?,
        angles: if n_angles == 1 {
            vec![0.0]
        } else {
            linspace_deg(-angle_max.to_degrees(), angle_max.to_degrees(), n_angles)
        },
        record_length: t.num("probe", "record_length", desk.record_length)?,
    };
    if !(probe.pitch > 0.0) {
        return Err(t.err("probe", "pitch", "must be positive"));
    }
    if !(0.0..0.5 * PI).contains(&angle_max) || n_angles == 0 {
        return Err(t.err("probe", "angle_max", "must lie in [0, 90) deg with n_angles >= 1"));
    }
    probe.validate().map_err(|e| Error::Config {
        line: 0,
        msg: format!("[probe] {e}"),
    })?;

    let aberrator = match t.word("medium", "aberrator") {
        None | Some(("none", _)) => AberratorKind::None,
        Some(("uniform", _)) => AberratorKind::Uniform,
        Some(("depth-patches", _)) => AberratorKind::DepthPatches,
        Some(("lateral-patches", _)) => AberratorKind::LateralPatches,
        Some(("layer", _)) => AberratorKind::Layer,
        Some((w, line)) => {
            return Err(Error::Config {
                line,
                msg: format!("unknown aberrator `{w}`"),
            })
        }
    };
    let patch_boundaries: Vec<f64> = t
        .map
        .get(&("medium".to_string(), "patch_boundary".to_string()))
        .map(|v| v.iter().flat_map(|e| e.values.iter().copied()).collect())
        .unwrap_or_default();
    if matches!(aberrator, AberratorKind::DepthPatches | AberratorKind::LateralPatches) && patch_boundaries.is_empty() {
        return Err(t.err("medium", "aberrator", "needs at least one patch_boundary"));
    }
    let noise_snr_db = match t.word("medium", "noise_snr") {
        Some(("inf", _)) => f64::INFINITY,
        _ => t.num("medium", "noise_snr", f64::INFINITY)?,
    };
    let medium = MediumConfig {
        c: t.num("medium", "c", 1540.0)?,
        aberrator,
        screen_rms: t.num("medium", "screen_rms", 2.0)?,
        screen_modes: t.count("medium", "screen_modes", 3)?,
        screen_period: t.opt_num("medium", "screen_period")?,
        screen_seed: t.count("medium", "screen_seed", 7)? as u64,
        patch_boundaries,
        layer_thickness: t.num("medium", "layer_thickness", 3e-3)?,
        layer_speed: t.num("medium", "layer_speed", 2750.0)?,
        reverb_amplitude: t.num("medium", "reverb_amplitude", 0.0)?,
        reverb_orders: t.count("medium", "reverb_orders", 3)?,
        reverb_reflection: t.opt_num("medium", "reverb_reflection")?,
        noise_snr_db,
    };
    if !(medium.c > 0.0) {
        return Err(t.err("medium", "c", "must be positive"));
    }
    if !(medium.screen_rms >= 0.0) || medium.screen_modes == 0 {
        return Err(t.err("medium", "screen_rms", "needs rms >= 0 and screen_modes >= 1"));
    }
    if medium.reverb_amplitude > 0.0 && medium.reverb_reflection.is_none() {
        return Err(t.err("medium", "reverb_amplitude", "requires reverb_reflection to be set"));
    }

    let half_w = 0.5 * probe.pitch * probe.n_elements as f64;
    let fov = Fov {
        x_min: t.num("phantom", "x_min", -half_w)?,
        x_max: t.num("phantom", "x_max", half_w)?,
        z_min: t.num("phantom", "z_min", 5e-3)?,
        z_max: t.num("phantom", "z_max", 35e-3)?,
    };
    if !(fov.x_max > fov.x_min && fov.z_max > fov.z_min && fov.z_min > 0.0) {
        return Err(t.err("phantom", "z_min", "field of view must be non-empty and below the probe"));
    }
    let mut point_targets = Vec::new();
    if let Some(list) = t.map.get(&("phantom".to_string(), "point_target".to_string())) {
        for e in list {
            if e.values.len() != 3 {
                return Err(Error::Config {
                    line: e.line,
                    msg: "point_target = x, z, reflectivity".into(),
                });
            }
            // The reflectivity is dimensionless and must be written without a unit.
            point_targets.push(PointTarget {
                x: e.values[0],
                z: e.values[1],
                reflectivity: e.values[2],
            });
        }
    }
    let inclusion = match t.entry("phantom", "inclusion") {
        None => None,
        Some(e) if e.values.len() == 4 => Some(Inclusion {
            x: e.values[0],
            z: e.values[1],
            radius: e.values[2],
            multiplier: e.values[3],
        }),
        Some(e) => {
            return Err(Error::Config {
                line: e.line,
                msg: "inclusion = x, z, radius, multiplier".into(),
            })
        }
    };
    let phantom = PhantomSpec {
        fov,
        speckle_density: t.num("phantom", "speckle_density", 2.0)?,
        speckle_rms: t.num("phantom", "speckle_rms", 1.0)?,
        point_targets,
        inclusion,
        rng_seed: t.count("phantom", "seed", 1)? as u64,
    };
    if !(phantom.speckle_density >= 0.0 && phantom.speckle_rms >= 0.0) {
        return Err(t.err("phantom", "speckle_density", "must be non-negative"));
    }

    let alpha = match t.word("pipeline", "alpha") {
        None | Some(("adaptive", _)) => AlphaSetting::Adaptive,
        Some((w, line)) => {
            return Err(Error::Config {
                line,
                msg: format!("alpha must be `adaptive` or a number, got `{w}`"),
            })
        }
    };
    let alpha = match (alpha, t.entry("pipeline", "alpha")) {
        (AlphaSetting::Adaptive, Some(e)) if e.word.is_none() => AlphaSetting::Fixed(t.num("pipeline", "alpha", 0.0)?),
        (a, _) => a,
    };
    let filter = match t.word("pipeline", "filter") {
        None | Some(("on", _)) => true,
        Some(("off", _)) => false,
        Some((w, line)) => {
            return Err(Error::Config {
                line,
                msg: format!("filter must be `on` or `off`, got `{w}`"),
            })
        }
    };
    let c_model = t.num("pipeline", "c_model", medium.c)?;
    let pipeline = PipelineSettings {
        c_model,
        dx: t.num("pipeline", "dx", probe.pitch)?,
        dz: t.num("pipeline", "dz", 0.2e-3)?,
        z_min: t.num("pipeline", "z_min", fov.z_min)?,
        z_max: t.num("pipeline", "z_max", fov.z_max)?,
        oversample: t.count("pipeline", "oversample", 2)?,
        k_angle: t.num("pipeline", "k_angle", angle_max)?,
        filter,
        delta_k: t.opt_num("pipeline", "delta_k")?,
        alpha,
        window_half_x: t.num("pipeline", "window_half_x", 2.5e-3)?,
        window_half_z: t.num("pipeline", "window_half_z", 2.5e-3)?,
        window_stride: t.opt_num("pipeline", "window_stride")?.map(|v| v as usize),
        sweep: (
            t.num("pipeline", "sweep_c_min", 1400.0)?,
            t.num("pipeline", "sweep_c_max", 1700.0)?,
            t.num("pipeline", "sweep_c_step", 10.0)?,
        ),
        floor_db: t.num("pipeline", "floor_db", -60.0)?,
        n_images: t.opt_num("pipeline", "n_images")?.map(|v| v as usize),
    };
    let p = &pipeline;
    if !(p.c_model > 0.0) {
        return Err(t.err("pipeline", "c_model", "must be positive"));
    }
    if !(p.dx > 0.0 && p.dz > 0.0) {
        return Err(t.err("pipeline", "dx", "grid steps must be positive"));
    }
    if !(p.z_max > p.z_min && p.z_min > 0.0) {
        return Err(t.err("pipeline", "z_min", "depth range must be non-empty and positive"));
    }
    if p.oversample == 0 {
        return Err(t.err("pipeline", "oversample", "must be at least 1"));
    }
    if !(p.k_angle > 0.0 && p.k_angle < 0.5 * PI) {
        return Err(t.err("pipeline", "k_angle", "must lie in (0, 90) deg"));
    }
    if !(p.floor_db < 0.0) {
        return Err(t.err("pipeline", "floor_db", "must be negative"));
    }
    if !(p.sweep.0 > 0.0 && p.sweep.1 > p.sweep.0 && p.sweep.2 > 0.0) || ((p.sweep.1 - p.sweep.0) / p.sweep.2) < 1.999 {
        return Err(t.err("pipeline", "sweep_c_step", "sweep needs at least 3 increasing positive speeds"));
    }
    if let AlphaSetting::Fixed(a) = p.alpha {
        if !(0.0..=1.0).contains(&a) {
            return Err(t.err("pipeline", "alpha", "must lie in [0, 1]"));
        }
    }
    Ok(PipelineConfig {
        probe,
        medium,
        phantom,
        pipeline,
    })
}

impl PipelineConfig {
    pub fn k_max(&self) -> f64 {
        2.0 * PI * self.probe.f0 / self.pipeline.c_model * self.pipeline.k_angle.sin()
    }

    /// Number of lateral image points covering the phantom width.
    pub fn nx(&self) -> usize {
        ((self.phantom.fov.width() / self.pipeline.dx).round() as usize).max(1)
    }

    pub fn sweep_grid(&self) -> Vec<f64> {
        let (a, b, s) = self.pipeline.sweep;
        let n = ((b - a) / s + 1e-9).floor() as usize + 1;
        (0..n).map(|i| a + i as f64 * s).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units_and_defaults() {
        let c = parse_config("[probe]\nf0 = 7.5 MHz\npitch = 0.2 mm\n[phantom]\n").unwrap();
        assert_eq!(c.probe.f0, 7.5e6);
        assert!((c.probe.pitch - 0.2e-3).abs() < 1e-18);
        assert_eq!(c.probe.angles.len(), 31);
        assert_eq!(c.phantom.speckle_density, 2.0);
        let plain = parse_config("[probe]\nf0 = 7.5e6\n").unwrap();
        assert_eq!(plain.probe.f0, 7.5e6);
    }

    #[test]
    fn errors_cite_lines() {
        let e = parse_config("[probe]\n\npitch = -1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }), "{e:?}");
        let e = parse_config("[probe]\nf0 = 7.5 mm\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }));
        let e = parse_config("[probe]\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }));
        let e = parse_config("# c\n[nowhere]\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }));
        assert!(parse_config("f0 = 1\n").is_err());
        assert!(parse_config("[probe]\nf0 = 1\nf0 = 2\n").is_err());
    }

    #[test]
    fn lists_and_words() {
        let c = parse_config(
            "[medium]\naberrator = depth-patches\npatch_boundary = 15 mm\nnoise_snr = inf\n\
             [phantom]\npoint_target = 0 mm, 15 mm, 30\npoint_target = 1 mm, 20 mm, 10\n\
             [pipeline]\nalpha = 0.5\nfilter = off\nwindow_stride = auto\n",
        )
        .unwrap();
        assert_eq!(c.medium.aberrator, AberratorKind::DepthPatches);
        assert_eq!(c.medium.patch_boundaries, vec![15e-3]);
        assert!(c.medium.noise_snr_db.is_infinite());
        assert_eq!(c.phantom.point_targets.len(), 2);
        assert_eq!(c.phantom.point_targets[0].reflectivity, 30.0);
        assert_eq!(c.pipeline.alpha, AlphaSetting::Fixed(0.5));
        assert!(!c.pipeline.filter);
        assert_eq!(c.pipeline.window_stride, None);
        assert!(parse_config("[medium]\naberrator = depth-patches\n").is_err());
        assert!(parse_config("[medium]\nreverb_amplitude = 1\n").is_err());
    }

    #[test]
    fn sweep_grid_inclusive() {
        let c = parse_config("").unwrap();
        let g = c.sweep_grid();
        assert_eq!(g.len(), 31);
        assert_eq!(g[0], 1400.0);
        assert!((g[30] - 1700.0).abs() < 1e-9);
    }
}
