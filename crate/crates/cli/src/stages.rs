//! Pipeline stages on in-memory data, shared by the commands and the
//! acceptance suite.

use ndarray::Array3;

use dmi_core::beamform::{beamform_raw, confocal_image, FocalGrid, FocusedStack};
use dmi_core::distortion::{
    correct_reflection, correlate_columns, decompose_entropy, local_window_sweep, soundspeed_entropy_sweep, strehl_map, DistortionMatrix,
    EntropySummary, FovWindow, Provenance, SpeedSweep, StrehlMap, SweepOptions, SweepSetup, TransmissionEstimate, WindowSpec, WindowSweep,
};
use dmi_core::farfield::{filter_stack, from_kspace, to_kspace, AlphaPolicy, AlphaReport, FarField, ReverbFilterParams};
use dmi_core::matrix::{BasisAxis, BasisKind, ComplexMatrix};
use dmi_core::sim::{
    add_noise, build_phantom, inject_reverberation, screen_from_layers, simulate_spectral, spectra_from_traces, traces_from_spectra,
    Aberrator, LayeredMedium, PatchAxis, PhaseScreen, RawAcquisition, ReverbParams,
};
use dmi_core::{Complex64, Error, Result};

use crate::cmx::{CmxArray, CmxAxis, CmxData};
use crate::config::{AberratorKind, AlphaSetting, PipelineConfig};

/// Harmonic period of random screens when not configured: `3·k_max`.
pub fn screen_period(cfg: &PipelineConfig) -> f64 {
    cfg.medium.screen_period.unwrap_or(3.0 * cfg.k_max())
}

pub fn build_aberrator(cfg: &PipelineConfig) -> Result<Aberrator> {
    let m = &cfg.medium;
    let random = |i: u64| PhaseScreen::random_smooth(m.screen_rms, m.screen_modes, screen_period(cfg), cfg.k_max(), m.screen_seed + i);
    Ok(match m.aberrator {
        AberratorKind::None => Aberrator::None,
        AberratorKind::Uniform => Aberrator::Uniform(random(0)?),
        AberratorKind::DepthPatches | AberratorKind::LateralPatches => Aberrator::Patches {
            axis: if m.aberrator == AberratorKind::DepthPatches {
                PatchAxis::Depth
            } else {
                PatchAxis::Lateral
            },
            boundaries: m.patch_boundaries.clone(),
            screens: (0..=m.patch_boundaries.len() as u64).map(random).collect::<Result<_>>()?,
        },
        AberratorKind::Layer => {
            let medium = LayeredMedium::new(vec![0.0, m.layer_thickness], vec![m.layer_speed, m.c])?;
            Aberrator::Uniform(screen_from_layers(&medium, m.c, &cfg.probe)?)
        }
    })
}

pub fn focal_grid(cfg: &PipelineConfig) -> Result<FocalGrid> {
    let p = &cfg.pipeline;
    FocalGrid::regular(cfg.nx(), p.dx, p.z_min, p.z_max, p.dz)
}

/// Scene, aberrator, optional multiples and noise, as recorded traces.
pub fn simulate(cfg: &PipelineConfig) -> Result<RawAcquisition> {
    let p = &cfg.pipeline;
    let scene = build_phantom(&cfg.phantom, (p.dx, p.dz))?;
    let aberrator = build_aberrator(cfg)?;
    let mut spec = simulate_spectral(&cfg.probe, &scene, &aberrator, cfg.medium.c)?;
    if cfg.medium.reverb_amplitude > 0.0 {
        let params = ReverbParams {
            amplitude: cfg.medium.reverb_amplitude,
            order_count: cfg.medium.reverb_orders,
            reflection_coeff: cfg.medium.reverb_reflection.unwrap_or(0.0),
            layer: LayeredMedium::new(vec![0.0, cfg.medium.layer_thickness], vec![cfg.medium.layer_speed, cfg.medium.c])?,
        };
        spec = inject_reverberation(&spec, &params)?;
    }
    let mut acq = traces_from_spectra(&spec)?;
    acq.c_model = cfg.pipeline.c_model;
    Ok(add_noise(&acq, cfg.medium.noise_snr_db, cfg.phantom.rng_seed ^ 0x5eed))
}

pub fn beamform(cfg: &PipelineConfig, acq: &RawAcquisition) -> Result<FocusedStack> {
    beamform_raw(acq, &focal_grid(cfg)?, cfg.pipeline.c_model)
}

pub fn far_field(cfg: &PipelineConfig, grid: &FocalGrid) -> Result<FarField> {
    FarField::new(&grid.x, cfg.k_max(), cfg.pipeline.oversample)
}

pub fn filter_params(cfg: &PipelineConfig, grid: &FocalGrid) -> ReverbFilterParams {
    let mut params = ReverbFilterParams::for_grid(grid.x.len(), grid.dx());
    if let Some(dk) = cfg.pipeline.delta_k {
        params.delta_k = dk;
    }
    params.alpha = match cfg.pipeline.alpha {
        AlphaSetting::Adaptive => AlphaPolicy::Adaptive,
        AlphaSetting::Fixed(a) => AlphaPolicy::Fixed(a),
    };
    params
}

/// Far-field data of a stack, after the specular filter when enabled.
pub struct Filtered {
    pub ff: FarField,
    pub rkk: Vec<ComplexMatrix>,
    pub stack: FocusedStack,
    pub alpha: Vec<AlphaReport>,
}

pub fn filter(cfg: &PipelineConfig, stack: &FocusedStack) -> Result<Filtered> {
    let ff = far_field(cfg, &stack.grid)?;
    let mut rkk = to_kspace(stack, &ff)?;
    let mut alpha = Vec::new();
    if cfg.pipeline.filter {
        let (m, reps) = filter_stack(&rkk, &filter_params(cfg, &stack.grid))?;
        rkk = m;
        alpha = reps;
    }
    let planes = from_kspace(&rkk, &ff)?;
    Ok(Filtered {
        ff,
        rkk,
        stack: FocusedStack { planes, ..stack.clone() },
        alpha,
    })
}

pub struct Isoplanatic {
    pub d: DistortionMatrix,
    pub summary: EntropySummary,
    pub n_inputs: usize,
}

/// Distortion matrix over the whole field and its normalized correlation.
pub fn analyse(f: &Filtered) -> Result<Isoplanatic> {
    let g = &f.stack.grid;
    let d = DistortionMatrix::from_focused(&f.stack.planes, &f.ff, &g.z, FovWindow::full(g.x.len(), g.z.len()))?;
    let cols = d.valid_columns();
    let corr = correlate_columns(&d.d, &cols, true)?;
    Ok(Isoplanatic {
        summary: decompose_entropy(&corr),
        n_inputs: corr.n_inputs,
        d,
    })
}

pub fn window_spec(cfg: &PipelineConfig) -> WindowSpec {
    WindowSpec {
        half_x: cfg.pipeline.window_half_x,
        half_z: cfg.pipeline.window_half_z,
        stride: cfg.pipeline.window_stride,
    }
}

pub struct Corrected {
    pub sweep: WindowSweep,
    pub stack: FocusedStack,
    pub strehl_before: StrehlMap,
    pub strehl_after: StrehlMap,
}

pub fn correct_full_field(cfg: &PipelineConfig, f: &Filtered, iso: &Isoplanatic) -> Result<Corrected> {
    let sweep = local_window_sweep(&iso.d, &window_spec(cfg), SweepOptions::default())?;
    let g = &f.stack.grid;
    let identity = TransmissionEstimate::identity(f.ff.k(), f.ff.x(), &g.z);
    Ok(Corrected {
        stack: correct_reflection(&f.rkk, &sweep.estimate, &f.ff, &f.stack)?,
        strehl_before: strehl_map(&f.rkk, &identity, &f.ff)?,
        strehl_after: strehl_map(&f.rkk, &sweep.estimate, &f.ff)?,
        sweep,
    })
}

/// Corrected stack and Strehl map for eigenvector `p` applied everywhere.
pub fn correct_patch(f: &Filtered, iso: &Isoplanatic, p: usize) -> Result<(FocusedStack, StrehlMap)> {
    let g = &f.stack.grid;
    let est = TransmissionEstimate::uniform(&iso.summary.vectors[p], f.ff.k(), f.ff.x(), &g.z, Provenance::IsoplanaticPatch(p));
    Ok((correct_reflection(&f.rkk, &est, &f.ff, &f.stack)?, strehl_map(&f.rkk, &est, &f.ff)?))
}

pub fn sweep_speed(cfg: &PipelineConfig, acq: &RawAcquisition) -> Result<SpeedSweep> {
    let grid = focal_grid(cfg)?;
    let setup = SweepSetup {
        window: FovWindow::full(grid.x.len(), grid.z.len()),
        k_max: cfg.k_max(),
        oversample: cfg.pipeline.oversample,
        filter: cfg.pipeline.filter.then(|| filter_params(cfg, &grid)),
        grid,
    };
    let spec = spectra_from_traces(acq)?;
    soundspeed_entropy_sweep(&spec, &cfg.sweep_grid(), &setup)
}

// Conversions to and from CMX.

pub fn acquisition_to_cmx(acq: &RawAcquisition) -> Result<CmxArray> {
    let p = &acq.probe;
    let t: Vec<f64> = (0..p.n_samples()).map(|i| i as f64 / p.sample_rate).collect();
    CmxArray::new(
        vec![
            CmxAxis::new(BasisKind::Element.label(), p.element_positions()),
            CmxAxis::new(BasisKind::Angle.label(), p.angles.clone()),
            CmxAxis::new(BasisKind::Time.label(), t),
        ],
        CmxData::Real(acq.traces.iter().copied().collect()),
    )
}

fn shape_error(what: &str, a: &CmxArray) -> Error {
    Error::invalid(format!(
        "{what}: unexpected array {:?} with axes {:?}",
        a.dims(),
        a.axes.iter().map(|x| x.label.as_str()).collect::<Vec<_>>()
    ))
}

pub fn acquisition_from_cmx(cfg: &PipelineConfig, a: &CmxArray) -> Result<RawAcquisition> {
    let p = &cfg.probe;
    let want = [p.n_elements, p.angles.len(), p.n_samples()];
    let CmxData::Real(v) = &a.data else {
        return Err(shape_error("acquisition", a));
    };
    if a.dims() != want || a.axes[0].label != BasisKind::Element.label() {
        return Err(shape_error("acquisition", a));
    }
    Ok(RawAcquisition {
        probe: p.clone(),
        traces: Array3::from_shape_vec((want[0], want[1], want[2]), v.clone()).map_err(|e| Error::invalid(e.to_string()))?,
        c_model: cfg.pipeline.c_model,
    })
}

pub fn stack_to_cmx(stack: &FocusedStack) -> Result<CmxArray> {
    let mut data = Vec::with_capacity(stack.planes.len() * stack.grid.x.len().pow(2));
    for m in &stack.planes {
        data.extend_from_slice(m.as_slice());
    }
    let x = stack.grid.x.coords().to_vec();
    CmxArray::new(
        vec![
            CmxAxis::new(BasisKind::Depth.label(), stack.grid.z.coords().to_vec()),
            CmxAxis::new(BasisKind::FocalX.label(), x.clone()),
            CmxAxis::new(BasisKind::FocalX.label(), x),
        ],
        CmxData::Complex(data),
    )
}

pub fn stack_from_cmx(cfg: &PipelineConfig, a: &CmxArray) -> Result<FocusedStack> {
    let CmxData::Complex(v) = &a.data else {
        return Err(shape_error("focused stack", a));
    };
    let d = a.dims();
    if d.len() != 3 || d[1] != d[2] || a.axes[0].label != BasisKind::Depth.label() || a.axes[1].label != BasisKind::FocalX.label() {
        return Err(shape_error("focused stack", a));
    }
    let grid = FocalGrid::new(a.axes[1].coords.clone(), a.axes[0].coords.clone())?;
    let n = d[1];
    let planes = (0..d[0])
        .map(|iz| {
            let block = v[iz * n * n..(iz + 1) * n * n].to_vec();
            ComplexMatrix::new(
                grid.x.clone(),
                grid.x.clone(),
                ndarray::Array2::from_shape_vec((n, n), block).expect("block size"),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let band = cfg.probe.f_max - cfg.probe.f_min;
    Ok(FocusedStack {
        grid,
        planes,
        c: cfg.pipeline.c_model,
        axial_resolution: cfg.pipeline.c_model / (2.0 * band),
        warnings: Vec::new(),
    })
}

/// Real `(depth, x)` map, e.g. a confocal image or a Strehl map.
pub fn map_to_cmx(grid: &FocalGrid, values: &ndarray::Array2<f64>) -> Result<CmxArray> {
    CmxArray::new(
        vec![
            CmxAxis::new(BasisKind::Depth.label(), grid.z.coords().to_vec()),
            CmxAxis::new(BasisKind::FocalX.label(), grid.x.coords().to_vec()),
        ],
        CmxData::Real(values.iter().copied().collect()),
    )
}

pub fn image_of(stack: &FocusedStack) -> ndarray::Array2<f64> {
    confocal_image(stack)
}

/// `(k × mode)` eigenvectors.
pub fn vectors_to_cmx(k: &BasisAxis, vectors: &[Vec<Complex64>]) -> Result<CmxArray> {
    let n = vectors.len();
    let nk = k.len();
    let mut data = vec![Complex64::new(0.0, 0.0); nk * n];
    for (j, v) in vectors.iter().enumerate() {
        for i in 0..nk {
            data[i * n + j] = v[i];
        }
    }
    CmxArray::new(
        vec![
            CmxAxis::new(BasisKind::Wavenumber.label(), k.coords().to_vec()),
            CmxAxis::new(BasisKind::Mode.label(), (0..n).map(|i| i as f64).collect()),
        ],
        CmxData::Complex(data),
    )
}
