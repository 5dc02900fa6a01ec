pub mod calibration;
pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod io;
pub mod par;
pub mod resampling;
pub mod rng;
pub mod statics;
pub mod synth;

pub use error::{PhriError, Result};
