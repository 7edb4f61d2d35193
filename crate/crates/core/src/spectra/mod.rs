//! Spectrum synthesis, baseline calibration, Gaussian peak fitting and
//! hyperfine inversion.

mod calibrate;
mod ensemble;
mod fit;
mod invert;
mod spectrum;
mod synth;

pub use calibrate::{calibrate_baseline, LockingBaseline};
pub use ensemble::{random_direction, EnsembleMember, EnsembleSpec, OrientationRule, Placement};
pub use fit::{fit_gaussian_peaks, initial_peaks, FitResult};
pub use invert::{
    axial_resonances, extract_hyperfine, full_resonances, CenterObservation, HyperfineEstimate, HyperfineModel,
    InversionOptions, LineOrder, PeakClass,
};
pub use spectrum::{add_shot_noise, gaussian, peaks_spectrum, BaselineState, PeakModel, Spectrum};
pub use synth::{
    background_lines, deer_lines, deer_spectrum, zf_lines, zf_spectrum, BackgroundMode, BackgroundModel,
    DeerOptions, ShoulderShape, ALLOWED_FRACTION, SynthesisMode, ZfLine, ZfOptions, BOHR_MHZ_PER_GAUSS,
};
