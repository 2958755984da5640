//! Diffraction-limited, jitter-averaged photon capture between two circular
//! apertures.

mod capture;
mod channel;
mod czt;
mod fft2;
mod jitter;
mod optimize;
mod propagation;

pub use capture::{capture_probability_map, CaptureMap};
pub use channel::BeamChannel;
pub use jitter::{capture_pdf, jitter_averaged_capture, CapturePdf, JitterKernel};
pub use optimize::{
    interior_maxima, mean_capture, optimize_beamwaist, WaistEvaluator, WaistSearch, BRACKET_TOLERANCE, COARSE_POINTS,
};
pub use propagation::{propagate, propagate_truncated_gaussian, GridSpec, IntensityField};

/// Default downlink wavelength (m).
pub const DEFAULT_WAVELENGTH: f64 = 810e-9;
