//! 8-bit grayscale rendering of images and Strehl maps.

use dmi_core::{Error, Result};

/// Row-major grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gray {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

fn check(values: &[f64], width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 || values.len() != width * height {
        return Err(Error::invalid(format!("{} values for a {width}x{height} image", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("image contains non-finite values"));
    }
    Ok(())
}

/// `clamp(10·log10(I / max I), floor_db, 0)` mapped linearly onto `0..=255`.
/// An all-zero image renders black and yields a warning.
pub fn render_db(values: &[f64], width: usize, height: usize, floor_db: f64) -> Result<(Gray, Option<String>)> {
    check(values, width, height)?;
    if !(floor_db < 0.0) {
        return Err(Error::invalid("floor_db must be negative"));
    }
    if values.iter().any(|v| *v < 0.0) {
        return Err(Error::invalid("intensity image must be non-negative"));
    }
    let max = values.iter().fold(0.0f64, |m, v| m.max(*v));
    if max == 0.0 {
        let g = Gray {
            width,
            height,
            pixels: vec![0; values.len()],
        };
        return Ok((g, Some("image is identically zero".into())));
    }
    let pixels = values
        .iter()
        .map(|v| {
            let db = if *v > 0.0 { 10.0 * (v / max).log10() } else { floor_db };
            let t = (db.clamp(floor_db, 0.0) - floor_db) / -floor_db;
            (t * 255.0).round() as u8
        })
        .collect();
    Ok((Gray { width, height, pixels }, None))
}

/// Linear map of `[0, 1]` onto `0..=255`, clamped.
pub fn render_linear(values: &[f64], width: usize, height: usize) -> Result<Gray> {
    check(values, width, height)?;
    let pixels = values.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    Ok(Gray { width, height, pixels })
}

pub fn encode_pgm(g: &Gray) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", g.width, g.height).into_bytes();
    out.extend_from_slice(&g.pixels);
    out
}

pub fn encode_png(g: &Gray) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, g.width as u32, g.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| Error::invalid(format!("png header: {e}")))?;
        w.write_image_data(&g.pixels)
            .map_err(|e| Error::invalid(format!("png data: {e}")))?;
    }
    Ok(out)
}
