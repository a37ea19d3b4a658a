//! Network input features.
//!
//! Layout of the 42-element vector, in order:
//!
//! | range   | content                                             |
//! |---------|-----------------------------------------------------|
//! | 0..22   | Bark-frequency cepstrum (DCT of log10 band energy)  |
//! | 22..28  | first difference of cepstral coefficients 0..6      |
//! | 28..34  | second difference of cepstral coefficients 0..6     |
//! | 34..40  | DCT coefficients 0..6 of the band pitch correlation |
//! | 40      | pitch period divided by the maximum period          |
//! | 41      | spectral non-stationarity in `[0, 1)`               |

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::bands::{BandVector, BAND_COUNT};
use crate::pitch::MAX_PERIOD;

pub const FEATURE_COUNT: usize = 42;
pub const DELTA_COUNT: usize = 6;
pub const PITCH_DCT_COUNT: usize = 6;

/// Bumped whenever the feature definitions change. Stored in model files.
pub const FEATURE_VERSION: u32 = 1;

/// log10 band energies are clipped below at this value.
pub const LOG_FLOOR: f64 = -8.0;

fn dct_table() -> &'static [[f64; BAND_COUNT]; BAND_COUNT] {
    static TABLE: OnceLock<[[f64; BAND_COUNT]; BAND_COUNT]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = BAND_COUNT as f64;
        let mut t = [[0.0; BAND_COUNT]; BAND_COUNT];
        for (k, row) in t.iter_mut().enumerate() {
            let norm = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            for (i, v) in row.iter_mut().enumerate() {
                *v = norm * (PI * (i as f64 + 0.5) * k as f64 / n).cos();
            }
        }
        t
    })
}

/// Orthonormal DCT-II over the 22 bands.
pub fn dct(x: &BandVector) -> BandVector {
    let t = dct_table();
    let mut out = [0.0; BAND_COUNT];
    for (o, row) in out.iter_mut().zip(t.iter()) {
        *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
    out
}

/// Inverse of [`dct`] (DCT-III with the same normalization).
pub fn idct(c: &BandVector) -> BandVector {
    let t = dct_table();
    let mut out = [0.0; BAND_COUNT];
    for (k, row) in t.iter().enumerate() {
        for (o, v) in out.iter_mut().zip(row) {
            *o += c[k] * v;
        }
    }
    out
}

fn log_energies(energies: &BandVector) -> BandVector {
    let mut out = [0.0; BAND_COUNT];
    for (o, &e) in out.iter_mut().zip(energies) {
        *o = if e > 0.0 { e.log10().max(LOG_FLOOR) } else { LOG_FLOOR };
    }
    out
}

/// Bark-frequency cepstral coefficients. No mean normalization, and c0 is kept.
pub fn compute_bfcc(energies: &BandVector) -> BandVector {
    dct(&log_energies(energies))
}

/// First 6 DCT coefficients of the band pitch correlation.
pub fn pitch_corr_dct(correlation: &BandVector) -> [f64; PITCH_DCT_COUNT] {
    let full = dct(correlation);
    let mut out = [0.0; PITCH_DCT_COUNT];
    out.copy_from_slice(&full[..PITCH_DCT_COUNT]);
    out
}

/// Previous cepstra and log energies, zero at stream start.
#[derive(Debug, Clone, Default)]
pub struct FeatureHistory {
    prev_bfcc: [[f64; BAND_COUNT]; 2],
    prev_log_energy: BandVector,
}

impl FeatureHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }

    /// `(c_t − c_{t−1}, c_t − 2c_{t−1} + c_{t−2})` for the first 6 coefficients.
    pub fn temporal_derivatives(
        &self,
        bfcc: &BandVector,
    ) -> ([f64; DELTA_COUNT], [f64; DELTA_COUNT]) {
        let [p1, p2] = &self.prev_bfcc;
        let mut d = [0.0; DELTA_COUNT];
        let mut dd = [0.0; DELTA_COUNT];
        for i in 0..DELTA_COUNT {
            d[i] = bfcc[i] - p1[i];
            dd[i] = bfcc[i] - 2.0 * p1[i] + p2[i];
        }
        (d, dd)
    }

    /// Mean squared change of log10 band energy since the previous frame,
    /// squashed through `x / (1 + x)`.
    pub fn non_stationarity(&self, energies: &BandVector) -> f64 {
        let cur = log_energies(energies);
        let msd = cur
            .iter()
            .zip(&self.prev_log_energy)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / BAND_COUNT as f64;
        msd / (1.0 + msd)
    }

    /// Records the current frame; call after computing its features.
    pub fn push(&mut self, bfcc: &BandVector, energies: &BandVector) {
        self.prev_bfcc[1] = self.prev_bfcc[0];
        self.prev_bfcc[0] = *bfcc;
        self.prev_log_energy = log_energies(energies);
    }
}

/// The 42 network inputs for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector([f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn assemble(
        bfcc: &BandVector,
        d_bfcc: &[f64; DELTA_COUNT],
        dd_bfcc: &[f64; DELTA_COUNT],
        pitch_corr: &[f64; PITCH_DCT_COUNT],
        period: usize,
        non_stationarity: f64,
    ) -> Self {
        let mut v = [0.0; FEATURE_COUNT];
        v[..22].copy_from_slice(bfcc);
        v[22..28].copy_from_slice(d_bfcc);
        v[28..34].copy_from_slice(dd_bfcc);
        v[34..40].copy_from_slice(pitch_corr);
        v[40] = period as f64 / MAX_PERIOD as f64;
        v[41] = non_stationarity;
        Self(v)
    }

    pub fn from_array(values: [f64; FEATURE_COUNT]) -> Self {
        Self(values)
    }

    pub fn as_array(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }

    pub fn bfcc(&self) -> &[f64] {
        &self.0[..22]
    }

    pub fn d_bfcc(&self) -> &[f64] {
        &self.0[22..28]
    }

    pub fn dd_bfcc(&self) -> &[f64] {
        &self.0[28..34]
    }

    pub fn pitch_corr_dct(&self) -> &[f64] {
        &self.0[34..40]
    }

    pub fn pitch_period(&self) -> f64 {
        self.0[40]
    }

    pub fn non_stationarity(&self) -> f64 {
        self.0[41]
    }

    pub fn to_f32(&self) -> [f32; FEATURE_COUNT] {
        self.0.map(|v| v as f32)
    }
}

/// Computes one frame's features from band energies, pitch correlation and
/// period, and advances the history.
pub fn extract(
    history: &mut FeatureHistory,
    energies: &BandVector,
    correlation: &BandVector,
    period: usize,
) -> FeatureVector {
    let bfcc = compute_bfcc(energies);
    let (d, dd) = history.temporal_derivatives(&bfcc);
    let ns = history.non_stationarity(energies);
    let features = FeatureVector::assemble(&bfcc, &d, &dd, &pitch_corr_dct(correlation), period, ns);
    history.push(&bfcc, energies);
    features
}
