//! Windowed analysis and synthesis with 50% overlap-add.
//!
//! Frames are 20 ms long and advance by 10 ms. The same power-complementary
//! window is applied before the forward transform and after the inverse one,
//! so an untouched spectrum reconstructs the input delayed by one hop.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::DenoiseError;

pub const SAMPLE_RATE: u32 = 48_000;
pub const WINDOW_SIZE: usize = 960;
pub const HOP_SIZE: usize = WINDOW_SIZE / 2;
pub const SPECTRUM_BINS: usize = WINDOW_SIZE / 2 + 1;

/// Sample-count layout of the frame grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameConfig {
    pub sample_rate: u32,
    pub window_size: usize,
    pub hop: usize,
    pub spectrum_bins: usize,
}

impl FrameConfig {
    /// The only configuration the engine runs: 48 kHz, 960-sample window.
    pub const STANDARD: FrameConfig = FrameConfig {
        sample_rate: SAMPLE_RATE,
        window_size: WINDOW_SIZE,
        hop: HOP_SIZE,
        spectrum_bins: SPECTRUM_BINS,
    };

    pub fn is_standard(&self) -> bool {
        *self == Self::STANDARD
    }
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// Vorbis power-complementary window coefficient `sin(π/2 · sin²(πn/N))`.
pub fn vorbis_window(n: usize, len: usize) -> f64 {
    assert!(n < len, "window index {n} out of range for length {len}");
    let s = (PI * n as f64 / len as f64).sin();
    (0.5 * PI * s * s).sin()
}

/// Half-spectrum of one windowed frame, bins `0..=N/2`.
#[derive(Clone, PartialEq)]
pub struct SpectrumFrame {
    bins: Vec<Complex64>,
}

impl SpectrumFrame {
    pub fn zeros() -> Self {
        Self {
            bins: vec![Complex64::new(0.0, 0.0); SPECTRUM_BINS],
        }
    }

    /// Wraps raw bins. The DC and Nyquist imaginary parts are dropped since
    /// they cannot belong to a real signal.
    pub fn from_bins(mut bins: Vec<Complex64>) -> Result<Self, DenoiseError> {
        if bins.len() != SPECTRUM_BINS {
            return Err(DenoiseError::SpectrumLength {
                expected: SPECTRUM_BINS,
                got: bins.len(),
            });
        }
        bins[0].im = 0.0;
        bins[SPECTRUM_BINS - 1].im = 0.0;
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn bins_mut(&mut self) -> &mut [Complex64] {
        &mut self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// `|X(k)|²` for every bin.
    pub fn power(&self) -> impl Iterator<Item = f64> + '_ {
        self.bins.iter().map(|c| c.norm_sqr())
    }

    /// Energy of the full (two-sided) spectrum divided by N. Equals the
    /// windowed frame's time-domain energy.
    pub fn parseval_energy(&self) -> f64 {
        let last = self.bins.len() - 1;
        let sum: f64 = self
            .bins
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let m = if k == 0 || k == last { 1.0 } else { 2.0 };
                m * c.norm_sqr()
            })
            .sum();
        sum / WINDOW_SIZE as f64
    }
}

impl fmt::Debug for SpectrumFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectrumFrame")
            .field("bins", &self.bins.len())
            .finish()
    }
}

/// Shared transform plans and the window table.
#[derive(Clone)]
pub struct Transform {
    window: Arc<[f64]>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl Transform {
    pub fn new() -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        let window: Vec<f64> = (0..WINDOW_SIZE)
            .map(|n| vorbis_window(n, WINDOW_SIZE))
            .collect();
        Self {
            window: window.into(),
            forward: planner.plan_fft_forward(WINDOW_SIZE),
            inverse: planner.plan_fft_inverse(WINDOW_SIZE),
        }
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Windowed, unnormalized forward DFT of exactly `WINDOW_SIZE` samples.
    pub fn forward(&self, frame: &[f64]) -> SpectrumFrame {
        assert_eq!(frame.len(), WINDOW_SIZE);
        let mut input: Vec<f64> = frame
            .iter()
            .zip(self.window.iter())
            .map(|(x, w)| x * w)
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); SPECTRUM_BINS];
        self.forward
            .process(&mut input, &mut out)
            .expect("forward transform sized by construction");
        out[0].im = 0.0;
        out[SPECTRUM_BINS - 1].im = 0.0;
        SpectrumFrame { bins: out }
    }

    /// Inverse DFT scaled by 1/N, then windowed again.
    pub fn inverse(&self, spectrum: &SpectrumFrame) -> Vec<f64> {
        let mut bins = spectrum.bins.clone();
        bins[0].im = 0.0;
        bins[SPECTRUM_BINS - 1].im = 0.0;
        let mut out = vec![0.0; WINDOW_SIZE];
        self.inverse
            .process(&mut bins, &mut out)
            .expect("inverse transform sized by construction");
        let scale = 1.0 / WINDOW_SIZE as f64;
        for (y, w) in out.iter_mut().zip(self.window.iter()) {
            *y *= scale * w;
        }
        out
    }
}

impl Default for Transform {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transform")
            .field("size", &WINDOW_SIZE)
            .finish()
    }
}

/// Per-stream analysis/synthesis buffers.
#[derive(Debug, Clone)]
pub struct OverlapState {
    transform: Transform,
    input_buffer: Vec<f64>,
    synthesis_overlap: Vec<f64>,
}

impl OverlapState {
    pub fn new() -> Self {
        Self::with_transform(Transform::new())
    }

    pub fn with_transform(transform: Transform) -> Self {
        Self {
            transform,
            input_buffer: vec![0.0; WINDOW_SIZE - HOP_SIZE],
            synthesis_overlap: vec![0.0; WINDOW_SIZE - HOP_SIZE],
        }
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn reset(&mut self) {
        self.input_buffer.fill(0.0);
        self.synthesis_overlap.fill(0.0);
    }

    /// Pushes one hop and returns the spectrum of the last `WINDOW_SIZE` samples.
    pub fn analyze(&mut self, hop_in: &[f64]) -> Result<SpectrumFrame, DenoiseError> {
        if hop_in.len() != HOP_SIZE {
            return Err(DenoiseError::HopLength {
                expected: HOP_SIZE,
                got: hop_in.len(),
            });
        }
        let mut frame = Vec::with_capacity(WINDOW_SIZE);
        frame.extend_from_slice(&self.input_buffer);
        frame.extend_from_slice(hop_in);
        let spectrum = self.transform.forward(&frame);
        self.input_buffer.copy_from_slice(&frame[HOP_SIZE..]);
        Ok(spectrum)
    }

    /// Inverse-transforms, windows, and overlap-adds; returns one hop.
    pub fn synthesize(&mut self, spectrum: &SpectrumFrame) -> Result<Vec<f64>, DenoiseError> {
        if spectrum.len() != SPECTRUM_BINS {
            return Err(DenoiseError::SpectrumLength {
                expected: SPECTRUM_BINS,
                got: spectrum.len(),
            });
        }
        let frame = self.transform.inverse(spectrum);
        let out: Vec<f64> = frame[..HOP_SIZE]
            .iter()
            .zip(self.synthesis_overlap.iter())
            .map(|(a, b)| a + b)
            .collect();
        self.synthesis_overlap.copy_from_slice(&frame[HOP_SIZE..]);
        Ok(out)
    }
}

impl Default for OverlapState {
    fn default() -> Self {
        Self::new()
    }
}
