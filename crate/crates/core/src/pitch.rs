//! Pitch search, pitch-delayed spectrum, per-band pitch correlation, and the
//! frequency-domain comb filter.
//!
//! The period search runs a normalized cross-correlation on a 12 kHz copy of
//! the signal, then re-scores the strongest coarse peaks at full rate. The
//! comb filter adds `α(k)·P(k)` to the spectrum and rescales each band back
//! to its original energy.

use std::f64::consts::PI;

use crate::bands::{BandLayout, BandVector, BAND_COUNT};
use crate::frame::{SpectrumFrame, Transform, HOP_SIZE, WINDOW_SIZE};

pub const MIN_PERIOD: usize = 60;
pub const MAX_PERIOD: usize = 768;
pub const HISTORY_LEN: usize = MAX_PERIOD + WINDOW_SIZE;

const DECIMATION: usize = 4;
const DECIMATOR_TAPS: usize = 31;
/// Cut-off of the anti-alias filter, in Hz.
const DECIMATOR_CUTOFF: f64 = 5000.0;
const REFINE_RADIUS: usize = 4;
/// Coarse peaks scoring below this fraction of the best are not refined.
const CANDIDATE_RATIO: f64 = 0.5;
const MAX_CANDIDATES: usize = 16;

/// Band energies below this make the pitch correlation zero.
const CORRELATION_FLOOR: f64 = 1e-15;

/// Rolling input history plus the last period found.
#[derive(Debug, Clone)]
pub struct PitchState {
    history: Vec<f64>,
    decimator: Vec<f64>,
    period: usize,
}

impl PitchState {
    pub fn new() -> Self {
        let centre = (DECIMATOR_TAPS - 1) as f64 / 2.0;
        let fc = DECIMATOR_CUTOFF / crate::frame::SAMPLE_RATE as f64;
        let mut taps: Vec<f64> = (0..DECIMATOR_TAPS)
            .map(|i| {
                let t = i as f64 - centre;
                let sinc = if t == 0.0 {
                    2.0 * fc
                } else {
                    (2.0 * PI * fc * t).sin() / (PI * t)
                };
                let hamming = 0.54 - 0.46 * (2.0 * PI * i as f64 / (DECIMATOR_TAPS - 1) as f64).cos();
                sinc * hamming
            })
            .collect();
        let gain: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= gain);
        Self {
            history: vec![0.0; HISTORY_LEN],
            decimator: taps,
            period: MIN_PERIOD,
        }
    }

    pub fn reset(&mut self) {
        self.history.fill(0.0);
        self.period = MIN_PERIOD;
    }

    /// Appends one hop of input, dropping the oldest samples.
    pub fn push(&mut self, hop: &[f64]) {
        assert_eq!(hop.len(), HOP_SIZE);
        self.history.copy_within(HOP_SIZE.., 0);
        self.history[HISTORY_LEN - HOP_SIZE..].copy_from_slice(hop);
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn period(&self) -> usize {
        self.period
    }

    fn decimate(&self) -> Vec<f64> {
        let n = HISTORY_LEN / DECIMATION;
        let taps = &self.decimator;
        (0..n)
            .map(|i| {
                let centre = DECIMATION * i + DECIMATION - 1;
                taps.iter()
                    .enumerate()
                    .filter_map(|(j, h)| centre.checked_sub(j).map(|idx| h * self.history[idx]))
                    .sum()
            })
            .collect()
    }

    /// Finds the pitch period in samples at 48 kHz and remembers it.
    ///
    /// Ties between equal scores go to the smaller lag.
    pub fn find_pitch(&mut self) -> usize {
        let low = self.decimate();
        let frame_len = WINDOW_SIZE / DECIMATION;
        let min_lag = MIN_PERIOD / DECIMATION;
        let max_lag = MAX_PERIOD / DECIMATION;
        let coarse: Vec<f64> = (min_lag..=max_lag)
            .map(|lag| normalized_correlation(&low, frame_len, lag))
            .collect();

        let best = coarse.iter().cloned().fold(0.0, f64::max);
        let mut candidates: Vec<(f64, usize)> = Vec::new();
        if best > 0.0 {
            for i in 0..coarse.len() {
                let left = if i > 0 { coarse[i - 1] } else { f64::NEG_INFINITY };
                let right = coarse.get(i + 1).copied().unwrap_or(f64::NEG_INFINITY);
                let c = coarse[i];
                if c >= left && c >= right && c >= CANDIDATE_RATIO * best {
                    candidates.push((c, i + min_lag));
                }
            }
            candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            candidates.truncate(MAX_CANDIDATES);
        }
        if candidates.is_empty() {
            // Nothing periodic: keep the previous estimate.
            return self.period;
        }

        let mut lags: Vec<usize> = candidates
            .iter()
            .flat_map(|&(_, c)| {
                let centre = c * DECIMATION;
                let lo = centre.saturating_sub(REFINE_RADIUS).max(MIN_PERIOD);
                let hi = (centre + REFINE_RADIUS).min(MAX_PERIOD);
                lo..=hi
            })
            .collect();
        lags.sort_unstable();
        lags.dedup();

        let mut best_lag = self.period;
        let mut best_score = f64::NEG_INFINITY;
        for lag in lags {
            let score = normalized_correlation(&self.history, WINDOW_SIZE, lag);
            if score > best_score {
                best_score = score;
                best_lag = lag;
            }
        }
        self.period = best_lag;
        best_lag
    }

    /// Windowed DFT of the signal delayed by `period` over the current frame.
    pub fn pitch_spectrum(&self, transform: &Transform, period: usize) -> SpectrumFrame {
        assert!(
            period <= MAX_PERIOD,
            "period {period} exceeds the {MAX_PERIOD}-sample history"
        );
        let end = HISTORY_LEN - period;
        transform.forward(&self.history[end - WINDOW_SIZE..end])
    }
}

impl Default for PitchState {
    fn default() -> Self {
        Self::new()
    }
}

/// Normalized correlation between the last `frame_len` samples of `x` and the
/// same span delayed by `lag`. Zero when either span is silent.
pub fn normalized_correlation(x: &[f64], frame_len: usize, lag: usize) -> f64 {
    let end = x.len();
    let cur = &x[end - frame_len..];
    let old = &x[end - frame_len - lag..end - lag];
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (a, b) in cur.iter().zip(old) {
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    let den = (xx * yy).sqrt();
    if den > 0.0 {
        xy / den
    } else {
        0.0
    }
}

/// Per-band normalized correlation between `x` and the pitch spectrum `p`.
pub fn band_pitch_correlation(
    x: &SpectrumFrame,
    p: &SpectrumFrame,
    layout: &BandLayout,
) -> BandVector {
    let mut xp = [0.0; BAND_COUNT];
    let mut xx = [0.0; BAND_COUNT];
    let mut pp = [0.0; BAND_COUNT];
    let (xb, pb) = (x.bins(), p.bins());
    layout.for_each_weight(|k, b, w| {
        xp[b] += w * (xb[k] * pb[k].conj()).re;
        xx[b] += w * xb[k].norm_sqr();
        pp[b] += w * pb[k].norm_sqr();
    });
    let mut out = [0.0; BAND_COUNT];
    for b in 0..BAND_COUNT {
        if xx[b] < CORRELATION_FLOOR || pp[b] < CORRELATION_FLOOR {
            continue;
        }
        out[b] = (xp[b] / (xx[b] * pp[b]).sqrt()).clamp(-1.0, 1.0);
    }
    out
}

/// Comb strength for one band from its pitch correlation and gain.
///
/// Anti-correlated bands get no filtering. Unit gain means no noise to remove;
/// a correlation at least as strong as the gain means full filtering.
pub fn filter_strength(p: f64, g: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let g = g.clamp(0.0, 1.0);
    if p == 0.0 || g >= 1.0 {
        return 0.0;
    }
    if p >= g {
        return 1.0;
    }
    let p2 = p * p;
    let g2 = g * g;
    (p2 * (1.0 - g2) / ((1.0 - p2) * g2)).sqrt().min(1.0)
}

/// Per-band comb strengths and the pitch-delayed spectrum they scale.
#[derive(Debug, Clone)]
pub struct CombFilterPlan {
    pub alpha: BandVector,
    pub pitch_spectrum: SpectrumFrame,
}

impl CombFilterPlan {
    pub fn new(alpha: BandVector, pitch_spectrum: SpectrumFrame) -> Self {
        let mut alpha = alpha;
        alpha.iter_mut().for_each(|a| *a = a.clamp(0.0, 1.0));
        Self {
            alpha,
            pitch_spectrum,
        }
    }

    pub fn from_correlation(
        correlation: &BandVector,
        gains: &BandVector,
        pitch_spectrum: SpectrumFrame,
    ) -> Self {
        let mut alpha = [0.0; BAND_COUNT];
        for b in 0..BAND_COUNT {
            alpha[b] = filter_strength(correlation[b], gains[b]);
        }
        Self::new(alpha, pitch_spectrum)
    }
}

/// Computes `X(k) + α(k)·P(k)` with `α(k)` interpolated across bins like the
/// band gains, then rescales so every band keeps `original_energies`.
pub fn apply_comb_filter(
    x: &SpectrumFrame,
    plan: &CombFilterPlan,
    layout: &BandLayout,
    original_energies: &BandVector,
) -> SpectrumFrame {
    if plan.alpha.iter().all(|&a| a == 0.0) {
        return x.clone();
    }
    let alpha = layout.interpolate_gains(&plan.alpha);
    let mut y = x.clone();
    for ((yk, pk), a) in y
        .bins_mut()
        .iter_mut()
        .zip(plan.pitch_spectrum.bins())
        .zip(&alpha)
    {
        *yk += pk * *a;
    }
    renormalize_bands(layout, &mut y, original_energies);
    y
}

/// Below this a band is treated as empty and left unscaled.
const EMPTY_BAND: f64 = 1e-30;
const RENORM_TOLERANCE: f64 = 1e-12;
const RENORM_MAX_ITERS: usize = 60;
const ROUNDING_DECREASE: f64 = 1e-12;

/// Scales `y` bin-wise by `exp(Σ_b w_b(k)·u_b)` so that its band energies
/// match `target`.
///
/// The band energies are the gradient of the convex potential
/// `½Σ_k |Y_k|²·exp(2 s_k) − Σ_b E_b u_b`, so damped Newton on it (with a
/// tridiagonal Hessian, since only neighbouring bands overlap) reaches the
/// unique matching `u`. Bands that are empty before or after filtering keep
/// a unit scale.
pub fn renormalize_bands(layout: &BandLayout, y: &mut SpectrumFrame, target: &BandVector) {
    let power: Vec<f64> = y.power().collect();
    let current = layout.band_energies_from_power(power.iter().copied());
    let mut active = [false; BAND_COUNT];
    let mut u = [0.0; BAND_COUNT];
    for b in 0..BAND_COUNT {
        active[b] = target[b] > EMPTY_BAND && current[b] > EMPTY_BAND;
        if active[b] {
            u[b] = 0.5 * (target[b] / current[b]).ln();
        }
    }
    if !active.iter().any(|&a| a) {
        return;
    }
    let total_target: f64 = (0..BAND_COUNT).filter(|&b| active[b]).map(|b| target[b]).sum();

    let covered = layout.edges()[BAND_COUNT] as usize + 1;
    let log_scale = |u: &BandVector| -> Vec<f64> {
        let mut s = vec![0.0; covered];
        layout.for_each_weight(|k, b, w| s[k] += w * u[b]);
        s
    };
    let potential = |u: &BandVector| -> f64 {
        let s = log_scale(u);
        let bins: f64 = s
            .iter()
            .zip(&power)
            .map(|(sk, pk)| pk * (2.0 * sk).exp())
            .sum();
        let linear: f64 = (0..BAND_COUNT)
            .filter(|&b| active[b])
            .map(|b| target[b] * u[b])
            .sum();
        0.5 * bins - linear
    };

    for _ in 0..RENORM_MAX_ITERS {
        let s = log_scale(&u);
        let q: Vec<f64> = s
            .iter()
            .zip(&power)
            .map(|(sk, pk)| pk * (2.0 * sk).exp())
            .collect();
        let mut grad = [0.0; BAND_COUNT];
        let mut diag = [0.0; BAND_COUNT];
        let mut upper = [0.0; BAND_COUNT];
        for (k, &qk) in q.iter().enumerate() {
            let (b, [w0, w1]) = layout.bin_weights(k);
            grad[b] += w0 * qk;
            diag[b] += 2.0 * w0 * w0 * qk;
            if w1 != 0.0 {
                grad[b + 1] += w1 * qk;
                diag[b + 1] += 2.0 * w1 * w1 * qk;
                upper[b] += 2.0 * w0 * w1 * qk;
            }
        }
        let mut worst = 0.0f64;
        for b in 0..BAND_COUNT {
            if active[b] {
                grad[b] -= target[b];
                worst = worst.max(grad[b].abs() / target[b]);
            } else {
                grad[b] = 0.0;
                diag[b] = 1.0;
                upper[b] = 0.0;
                if b > 0 {
                    upper[b - 1] = 0.0;
                }
            }
        }
        if worst < RENORM_TOLERANCE {
            break;
        }
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let step = solve_tridiagonal(&diag, &upper, &rhs);

        let slope: f64 = grad.iter().zip(&step).map(|(g, d)| g * d).sum();
        let mut next = u;
        for b in 0..BAND_COUNT {
            next[b] = u[b] + step[b];
        }
        // Near the solution the predicted decrease drops below the rounding
        // of the potential itself, so the full step is taken unchecked.
        if -slope > ROUNDING_DECREASE * total_target {
            let base = potential(&u);
            let mut t = 1.0;
            while t > 1e-9 && potential(&next) > base + 1e-4 * t * slope {
                t *= 0.5;
                for b in 0..BAND_COUNT {
                    next[b] = u[b] + t * step[b];
                }
            }
        }
        u = next;
    }

    let s = log_scale(&u);
    for (yk, sk) in y.bins_mut().iter_mut().zip(&s) {
        *yk *= sk.exp();
    }
}

/// Thomas algorithm for a symmetric tridiagonal system.
fn solve_tridiagonal(diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - upper[i - 1] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - upper[i - 1] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}
