//! Noise models: phenomenological decay envelopes, the Lindblad master
//! equation with a T1/T2 envelope fit, and Ornstein–Uhlenbeck field noise.

mod fit;
mod lindblad;
mod ou;
mod phenom;

pub use fit::{decay_model, fit_decay_times, DecayFit, FIT_GRID_MAX, FIT_GRID_MIN, NO_DECAY_THRESHOLD};
pub use lindblad::{estimated_decay_times, lindblad_rhs, lindblad_solve, LindbladParams, LindbladRun, MAX_TRACE_DRIFT};
pub use ou::{ou_path, OUParams};
pub use phenom::{cfi_noisy_closed, noise_factor, noisy_probs, PhenomNoise};
