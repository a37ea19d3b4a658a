//! 48 kHz single-channel noise suppression: a fixed DSP front end computes
//! band features and a pitch comb filter, and a small recurrent network
//! predicts 22 band gains per 10 ms hop.

pub mod bands;
pub mod bench;
pub mod denoise;
pub mod error;
pub mod features;
pub mod frame;
pub mod nn;
pub mod pitch;
pub mod synth;

pub use bands::{BandLayout, BandVector, BAND_COUNT};
pub use denoise::{DenoiseOptions, DenoiseState, FrameResult};
pub use error::{DenoiseError, ModelError};
pub use frame::{HOP_SIZE, SAMPLE_RATE};
pub use nn::{Model, Topology};
