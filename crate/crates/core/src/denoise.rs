//! Per-stream orchestration of analysis, gain estimation and synthesis.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::bands::{BandLayout, BandVector, BAND_COUNT};
use crate::error::DenoiseError;
use crate::features::{extract, FeatureHistory};
use crate::frame::{FrameConfig, OverlapState, SpectrumFrame, HOP_SIZE};
use crate::nn::{network_forward, Model, NetworkState};
use crate::pitch::{apply_comb_filter, band_pitch_correlation, CombFilterPlan, PitchState};

/// Per-frame decay bound on the smoothed gains (about 135 ms of reverb tail).
pub const SMOOTHING_LAMBDA: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseOptions {
    pub comb_filter: bool,
    pub smoothing: bool,
    pub lambda: f64,
}

impl DenoiseOptions {
    /// Comb filter and smoothing off: with unit gains the output is the
    /// input delayed by one hop.
    pub const PASSTHROUGH: DenoiseOptions = DenoiseOptions {
        comb_filter: false,
        smoothing: false,
        lambda: SMOOTHING_LAMBDA,
    };
}

impl Default for DenoiseOptions {
    fn default() -> Self {
        Self {
            comb_filter: true,
            smoothing: true,
            lambda: SMOOTHING_LAMBDA,
        }
    }
}

/// `g̃_b = max(λ·prev_b, new_b)`.
pub fn smooth_gains(prev: &BandVector, new: &BandVector, lambda: f64) -> BandVector {
    std::array::from_fn(|b| (lambda * prev[b]).max(new[b]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub audio_out: Vec<f32>,
    /// `None` when the network was bypassed.
    pub vad: Option<f32>,
    pub gains_applied: BandVector,
}

/// Wall time spent in each stage since creation or the last
/// [`DenoiseState::reset_timings`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    /// Analysis and synthesis transforms.
    pub fft: Duration,
    /// Pitch search, pitch spectrum and per-band correlation.
    pub pitch: Duration,
    pub features: Duration,
    pub network: Duration,
    /// Smoothing, comb filter and gain application.
    pub filtering: Duration,
    pub frames: u64,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.fft + self.pitch + self.features + self.network + self.filtering
    }

    pub fn accumulate(&mut self, other: &StageTimings) {
        self.fft += other.fft;
        self.pitch += other.pitch;
        self.features += other.features;
        self.network += other.network;
        self.filtering += other.filtering;
        self.frames += other.frames;
    }
}

enum GainSource<'a> {
    Network,
    Oracle(&'a BandVector),
}

/// All state for one audio stream. States are independent; the model is
/// shared read-only.
#[derive(Debug, Clone)]
pub struct DenoiseState {
    options: DenoiseOptions,
    layout: Arc<BandLayout>,
    model: Option<Arc<Model>>,
    overlap: OverlapState,
    pitch: PitchState,
    features: FeatureHistory,
    network: Option<NetworkState>,
    prev_gains: BandVector,
    pending: Vec<f32>,
    timings: StageTimings,
}

impl DenoiseState {
    pub fn new(model: Arc<Model>) -> Self {
        Self::with_options(Some(model), DenoiseOptions::default())
    }

    /// A state without a network; only [`Self::process_frame_oracle`] works.
    pub fn without_model(options: DenoiseOptions) -> Self {
        Self::with_options(None, options)
    }

    pub fn with_options(model: Option<Arc<Model>>, options: DenoiseOptions) -> Self {
        let layout = BandLayout::build(&FrameConfig::STANDARD).expect("standard layout");
        if let Some(m) = &model {
            debug_assert_eq!(m.band_edges(), layout.edges());
        }
        Self {
            options,
            layout: Arc::new(layout),
            network: model.as_deref().map(NetworkState::new),
            model,
            overlap: OverlapState::new(),
            pitch: PitchState::new(),
            features: FeatureHistory::new(),
            prev_gains: [0.0; BAND_COUNT],
            pending: Vec::new(),
            timings: StageTimings::default(),
        }
    }

    pub fn options(&self) -> &DenoiseOptions {
        &self.options
    }

    pub fn layout(&self) -> &BandLayout {
        &self.layout
    }

    pub fn model(&self) -> Option<&Arc<Model>> {
        self.model.as_ref()
    }

    pub fn prev_gains(&self) -> &BandVector {
        &self.prev_gains
    }

    pub fn timings(&self) -> &StageTimings {
        &self.timings
    }

    pub fn reset_timings(&mut self) {
        self.timings = StageTimings::default();
    }

    /// Returns the stream to its freshly created state.
    pub fn reset(&mut self) {
        self.overlap.reset();
        self.pitch.reset();
        self.features.reset();
        if let Some(n) = &mut self.network {
            n.reset();
        }
        self.prev_gains = [0.0; BAND_COUNT];
        self.pending.clear();
        self.timings = StageTimings::default();
    }

    /// Denoises one hop with network gains. Output lags input by one hop.
    pub fn process_frame(&mut self, input: &[f32]) -> Result<FrameResult, DenoiseError> {
        if self.model.is_none() {
            return Err(DenoiseError::MissingModel);
        }
        self.run(input, GainSource::Network)
    }

    /// Same pipeline with the network replaced by `gains`.
    pub fn process_frame_oracle(
        &mut self,
        input: &[f32],
        gains: &BandVector,
    ) -> Result<FrameResult, DenoiseError> {
        for (band, &value) in gains.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(DenoiseError::InvalidGain { band, value });
            }
        }
        self.run(input, GainSource::Oracle(gains))
    }

    /// Accepts any number of samples, buffering partial hops between calls.
    /// Returns one result per completed hop.
    pub fn process_samples(&mut self, input: &[f32]) -> Result<Vec<FrameResult>, DenoiseError> {
        if self.model.is_none() {
            return Err(DenoiseError::MissingModel);
        }
        if let Some(i) = input.iter().position(|s| !s.is_finite()) {
            return Err(DenoiseError::NonFiniteInput { index: i });
        }
        self.pending.extend_from_slice(input);
        let hops = self.pending.len() / HOP_SIZE;
        let mut out = Vec::with_capacity(hops);
        let pending = std::mem::take(&mut self.pending);
        for hop in pending.chunks_exact(HOP_SIZE) {
            out.push(self.run(hop, GainSource::Network)?);
        }
        self.pending = pending[hops * HOP_SIZE..].to_vec();
        Ok(out)
    }

    fn run(&mut self, input: &[f32], source: GainSource) -> Result<FrameResult, DenoiseError> {
        if input.len() != HOP_SIZE {
            return Err(DenoiseError::HopLength {
                expected: HOP_SIZE,
                got: input.len(),
            });
        }
        if let Some(i) = input.iter().position(|s| !s.is_finite()) {
            return Err(DenoiseError::NonFiniteInput { index: i });
        }
        let hop: Vec<f64> = input.iter().map(|&s| s as f64).collect();
        let layout = Arc::clone(&self.layout);

        let t = Instant::now();
        let x = self.overlap.analyze(&hop)?;
        let energies = layout.band_energies(&x);
        self.timings.fft += t.elapsed();

        let use_network = matches!(source, GainSource::Network);
        let need_pitch = use_network || self.options.comb_filter;
        let t = Instant::now();
        self.pitch.push(&hop);
        let pitch = if need_pitch {
            let period = self.pitch.find_pitch();
            let p = self.pitch.pitch_spectrum(self.overlap.transform(), period);
            let corr = band_pitch_correlation(&x, &p, &layout);
            Some((period, p, corr))
        } else {
            None
        };
        self.timings.pitch += t.elapsed();

        let (raw_gains, vad) = match source {
            GainSource::Oracle(g) => (*g, None),
            GainSource::Network => {
                let t = Instant::now();
                let (period, _, corr) = pitch.as_ref().expect("pitch computed for network");
                let fv = extract(&mut self.features, &energies, corr, *period);
                self.timings.features += t.elapsed();

                let t = Instant::now();
                let model = self.model.as_ref().expect("checked by caller");
                let state = self.network.as_mut().expect("state exists with model");
                let (g, v) = network_forward(model, state, &fv.to_f32());
                self.timings.network += t.elapsed();
                (g.map(|v| v as f64), Some(v))
            }
        };

        let t = Instant::now();
        let gains = if self.options.smoothing {
            smooth_gains(&self.prev_gains, &raw_gains, self.options.lambda)
        } else {
            raw_gains
        };
        self.prev_gains = gains;

        let mut y = match (&pitch, self.options.comb_filter) {
            (Some((_, p, corr)), true) => {
                let plan = CombFilterPlan::from_correlation(corr, &gains, p.clone());
                apply_comb_filter(&x, &plan, &layout, &energies)
            }
            _ => x,
        };
        apply_bin_gains(&mut y, &layout.interpolate_gains(&gains));
        self.timings.filtering += t.elapsed();

        let t = Instant::now();
        let out = self.overlap.synthesize(&y)?;
        self.timings.fft += t.elapsed();
        self.timings.frames += 1;

        Ok(FrameResult {
            audio_out: out.iter().map(|&s| s as f32).collect(),
            vad,
            gains_applied: gains,
        })
    }
}

fn apply_bin_gains(y: &mut SpectrumFrame, r: &[f64]) {
    for (yk, &g) in y.bins_mut().iter_mut().zip(r) {
        *yk *= g;
    }
}
