//! Synthetic scenes, aberrators and Born-approximation acquisitions.

mod acquisition;
mod medium;
mod noise;
mod phantom;
mod probe;
mod reverb;
mod screen;
mod synth;

pub use acquisition::{spectra_from_traces, traces_from_spectra, RawAcquisition, SpectralReflection};
pub use medium::{fermat_travel_time, LayeredMedium};
pub use noise::add_noise;
pub use phantom::{build_phantom, Fov, Inclusion, PhantomSpec, PointTarget, Scatterer};
pub use probe::{linspace_deg, ProbeConfig, PULSE_EDGE_FRACTION};
pub use reverb::{inject_reverberation, inject_reverberation_rkk, ReverbParams};
pub use screen::{screen_from_layers, Aberrator, PatchAxis, PhaseScreen, ScreenModel};
pub use synth::{assemble_time_domain, simulate, simulate_spectral, synth_rkk_mono, LATERAL_SUBSTEPS};
