//! Triangular critical-band layout, band energies, ideal gains, and gain
//! interpolation back to DFT bins.

use crate::error::DenoiseError;
use crate::frame::{FrameConfig, SpectrumFrame, SPECTRUM_BINS, WINDOW_SIZE};

pub const BAND_COUNT: usize = 22;
/// Entries in the serialized band table: the 22 band peaks plus the last bin
/// that still receives the top band's gain.
pub const EDGE_COUNT: usize = BAND_COUNT + 1;

/// One value per band: energies, gains, or correlations depending on context.
pub type BandVector = [f64; BAND_COUNT];

/// Band peak frequencies in Hz.
pub const BAND_PEAKS_HZ: [u32; BAND_COUNT] = [
    0, 200, 400, 600, 800, 1000, 1200, 1400, 1600, 2000, 2400, 2800, 3200, 4000, 4800, 5600,
    6800, 8000, 9600, 12000, 15600, 20000,
];

/// Both clean and noisy band energies below this mark the gain undefined.
pub const SILENCE_THRESHOLD: f64 = 1e-2;

/// Triangular band weights `w_b(k)`.
///
/// Band `b` rises linearly from `edges[b-1]` to its peak at `edges[b]` and
/// falls back to zero at `edges[b+1]`, so neighbouring weights sum to one.
/// The first band is flat below its peak (it only has DC there), and the last
/// band stays at one from its peak up to `edges[BAND_COUNT]`. Bins beyond that
/// carry no weight and receive zero gain.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLayout {
    edges: [u16; EDGE_COUNT],
    weights: Vec<[f64; 2]>,
    first_band: Vec<usize>,
}

impl BandLayout {
    /// Standard layout: peaks from [`BAND_PEAKS_HZ`], top band extended to
    /// Nyquist.
    pub fn build(config: &FrameConfig) -> Result<Self, DenoiseError> {
        Self::build_with_extension(config, true)
    }

    /// `extend_top = false` stops the top band at 20 kHz, so bins above it
    /// are zeroed by the gain stage.
    pub fn build_with_extension(
        config: &FrameConfig,
        extend_top: bool,
    ) -> Result<Self, DenoiseError> {
        if !config.is_standard() {
            return Err(DenoiseError::UnsupportedConfig(format!(
                "band layout needs {} Hz with a {}-sample window",
                crate::frame::SAMPLE_RATE,
                WINDOW_SIZE
            )));
        }
        let bin_hz = config.sample_rate as f64 / config.window_size as f64;
        let mut edges = [0u16; EDGE_COUNT];
        for (e, &hz) in edges.iter_mut().zip(BAND_PEAKS_HZ.iter()) {
            *e = (hz as f64 / bin_hz).round() as u16;
        }
        edges[BAND_COUNT] = if extend_top {
            (SPECTRUM_BINS - 1) as u16
        } else {
            edges[BAND_COUNT - 1]
        };
        Self::from_edges(edges)
    }

    /// Rebuilds a layout from a serialized band table.
    pub fn from_edges(edges: [u16; EDGE_COUNT]) -> Result<Self, DenoiseError> {
        let ok = edges.windows(2).take(BAND_COUNT - 1).all(|w| w[0] < w[1])
            && edges[BAND_COUNT] >= edges[BAND_COUNT - 1]
            && (edges[BAND_COUNT] as usize) < SPECTRUM_BINS;
        if !ok {
            return Err(DenoiseError::UnsupportedConfig(format!(
                "band edges must increase and stay below {SPECTRUM_BINS}: {edges:?}"
            )));
        }
        let mut weights = vec![[0.0; 2]; SPECTRUM_BINS];
        let mut first_band = vec![BAND_COUNT; SPECTRUM_BINS];
        // Below the first peak (only possible when it is not bin 0).
        for k in 0..edges[0] as usize {
            weights[k] = [1.0, 0.0];
            first_band[k] = 0;
        }
        for b in 0..BAND_COUNT - 1 {
            let lo = edges[b] as usize;
            let hi = edges[b + 1] as usize;
            let width = (hi - lo) as f64;
            for k in lo..hi {
                let frac = (k - lo) as f64 / width;
                weights[k] = [1.0 - frac, frac];
                first_band[k] = b;
            }
        }
        for k in edges[BAND_COUNT - 1] as usize..=edges[BAND_COUNT] as usize {
            weights[k] = [1.0, 0.0];
            first_band[k] = BAND_COUNT - 1;
        }
        Ok(Self {
            edges,
            weights,
            first_band,
        })
    }

    pub fn band_count(&self) -> usize {
        BAND_COUNT
    }

    pub fn edges(&self) -> &[u16; EDGE_COUNT] {
        &self.edges
    }

    /// Last bin carrying any band weight.
    pub fn covered_bins(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.edges[BAND_COUNT] as usize
    }

    /// Number of bins between two adjacent peaks.
    pub fn band_width(&self, b: usize) -> usize {
        if b + 1 < BAND_COUNT {
            (self.edges[b + 1] - self.edges[b]) as usize
        } else {
            (self.edges[BAND_COUNT] - self.edges[BAND_COUNT - 1]) as usize + 1
        }
    }

    /// `w_b(k)`.
    pub fn weight(&self, band: usize, bin: usize) -> f64 {
        let first = self.first_band[bin];
        if first == band {
            self.weights[bin][0]
        } else if first + 1 == band {
            self.weights[bin][1]
        } else {
            0.0
        }
    }

    /// Bins with nonzero support for `band`, inclusive.
    pub fn support(&self, band: usize) -> std::ops::RangeInclusive<usize> {
        let lo = if band == 0 { 0 } else { self.edges[band - 1] as usize + 1 };
        let hi = if band + 1 < BAND_COUNT {
            self.edges[band + 1] as usize - 1
        } else {
            self.edges[BAND_COUNT] as usize
        };
        lo..=hi
    }

    /// Lower band touching bin `k` and the weights of it and the next band.
    pub(crate) fn bin_weights(&self, k: usize) -> (usize, [f64; 2]) {
        (self.first_band[k], self.weights[k])
    }

    /// Calls `f(bin, band, weight)` for every nonzero weight, in bin order.
    pub(crate) fn for_each_weight(&self, mut f: impl FnMut(usize, usize, f64)) {
        for k in self.covered_bins() {
            let b = self.first_band[k];
            let [w0, w1] = self.weights[k];
            if w0 != 0.0 {
                f(k, b, w0);
            }
            if w1 != 0.0 {
                f(k, b + 1, w1);
            }
        }
    }

    /// `E(b) = Σ_k w_b(k)·|X(k)|²`.
    pub fn band_energies(&self, spectrum: &SpectrumFrame) -> BandVector {
        self.band_energies_from_power(spectrum.power())
    }

    pub(crate) fn band_energies_from_power(&self, power: impl Iterator<Item = f64>) -> BandVector {
        let mut out = [0.0; BAND_COUNT];
        for (k, p) in power.enumerate().take(self.edges[BAND_COUNT] as usize + 1) {
            let b = self.first_band[k];
            let [w0, w1] = self.weights[k];
            out[b] += w0 * p;
            if w1 != 0.0 {
                out[b + 1] += w1 * p;
            }
        }
        out
    }

    /// Per-bin gain `r(k) = Σ_b w_b(k)·g_b`. Bins past the covered range get 0.
    pub fn interpolate_gains(&self, gains: &BandVector) -> Vec<f64> {
        let mut out = vec![0.0; SPECTRUM_BINS];
        for k in self.covered_bins() {
            let b = self.first_band[k];
            let [w0, w1] = self.weights[k];
            let mut r = w0 * gains[b];
            if w1 != 0.0 {
                r += w1 * gains[b + 1];
            }
            out[k] = r;
        }
        out
    }
}

/// Ideal per-band amplitude gains `sqrt(E_s/E_x)` clamped to `[0, 1]`, with a
/// mask that is `false` wherever both energies are below
/// [`SILENCE_THRESHOLD`].
pub fn ideal_gains(clean: &BandVector, noisy: &BandVector) -> (BandVector, [bool; BAND_COUNT]) {
    let mut gains = [0.0; BAND_COUNT];
    let mut defined = [true; BAND_COUNT];
    for b in 0..BAND_COUNT {
        let (es, ex) = (clean[b].max(0.0), noisy[b].max(0.0));
        gains[b] = if ex > 0.0 {
            (es / ex).sqrt().min(1.0)
        } else if es > 0.0 {
            1.0
        } else {
            0.0
        };
        defined[b] = !(es < SILENCE_THRESHOLD && ex < SILENCE_THRESHOLD);
    }
    (gains, defined)
}
