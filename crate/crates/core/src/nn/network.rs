//! Per-frame inference over the six-layer graph.

use super::layers::{dense_forward, gru_forward};
use super::model::{Model, DENOISE_GRU, GAIN_OUT, INPUT_DENSE, NOISE_GRU, VAD_GRU, VAD_OUT};
use crate::bands::BAND_COUNT;
use crate::features::FEATURE_COUNT;

/// Hidden vectors of the three GRUs. Zero on creation and after `reset`.
#[derive(Debug, Clone)]
pub struct NetworkState {
    pub vad: Vec<f32>,
    pub noise: Vec<f32>,
    pub denoise: Vec<f32>,
    dense_out: Vec<f32>,
    scratch: Vec<f32>,
}

impl NetworkState {
    pub fn new(model: &Model) -> Self {
        let t = model.topology();
        Self {
            vad: vec![0.0; t.vad_gru],
            noise: vec![0.0; t.noise_gru],
            denoise: vec![0.0; t.denoise_gru],
            dense_out: vec![0.0; t.input_dense],
            scratch: Vec::new(),
        }
    }

    pub fn reset(&mut self) {
        self.vad.fill(0.0);
        self.noise.fill(0.0);
        self.denoise.fill(0.0);
        self.dense_out.fill(0.0);
        self.scratch.clear();
    }

    /// Hidden vectors of the VAD, noise and denoise GRUs.
    pub fn hidden(&self) -> [&[f32]; 3] {
        [&self.vad, &self.noise, &self.denoise]
    }
}

/// Runs one frame and returns the 22 band gains and the VAD probability.
pub fn network_forward(
    model: &Model,
    state: &mut NetworkState,
    features: &[f32; FEATURE_COUNT],
) -> ([f32; BAND_COUNT], f32) {
    dense_forward(model.dense(INPUT_DENSE), features, &mut state.dense_out);
    gru_forward(model.gru(VAD_GRU), &mut state.vad, &state.dense_out);

    let mut vad = [0.0f32];
    dense_forward(model.dense(VAD_OUT), &state.vad, &mut vad);

    state.scratch.clear();
    state.scratch.extend_from_slice(&state.dense_out);
    state.scratch.extend_from_slice(&state.vad);
    state.scratch.extend_from_slice(features);
    gru_forward(model.gru(NOISE_GRU), &mut state.noise, &state.scratch);

    state.scratch.clear();
    state.scratch.extend_from_slice(&state.vad);
    state.scratch.extend_from_slice(&state.noise);
    state.scratch.extend_from_slice(features);
    gru_forward(model.gru(DENOISE_GRU), &mut state.denoise, &state.scratch);

    let mut gains = [0.0f32; BAND_COUNT];
    dense_forward(model.dense(GAIN_OUT), &state.denoise, &mut gains);
    (gains, vad[0])
}
