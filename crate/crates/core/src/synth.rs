//! Deterministic test signals: a crude speech stand-in, white noise, and
//! SNR mixing.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::frame::SAMPLE_RATE;

const FS: f64 = SAMPLE_RATE as f64;
const MAX_HARMONIC_HZ: f64 = 8000.0;
const RAMP_S: f64 = 0.02;

/// Alternating voiced syllables, fricative bursts and pauses.
///
/// Voiced segments are harmonic series with a gliding f0 between 90 and
/// 260 Hz, shaped by three random formant peaks and a spectral tilt.
/// Fricatives are noise with a first-difference high-pass. Peak amplitude
/// stays near `0.5`.
pub fn speech_like(seconds: f64, seed: u64) -> Vec<f32> {
    let n = (seconds * FS).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0f64; n];
    let mut pos = 0;
    while pos < n {
        let roll: f64 = rng.random();
        let len = if roll < 0.6 {
            let len = (rng.random_range(0.15..0.35) * FS) as usize;
            voiced(&mut rng, &mut out[pos..(pos + len).min(n)]);
            len
        } else if roll < 0.8 {
            let len = (rng.random_range(0.05..0.12) * FS) as usize;
            fricative(&mut rng, &mut out[pos..(pos + len).min(n)]);
            len
        } else {
            (rng.random_range(0.05..0.3) * FS) as usize
        };
        pos += len;
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { 0.5 / peak } else { 0.0 };
    out.iter().map(|&v| (v * scale) as f32).collect()
}

fn envelope(i: usize, len: usize) -> f64 {
    let ramp = (RAMP_S * FS) as usize;
    let edge = i.min(len - 1 - i);
    if edge >= ramp {
        1.0
    } else {
        0.5 - 0.5 * (PI * edge as f64 / ramp as f64).cos()
    }
}

fn voiced(rng: &mut ChaCha8Rng, seg: &mut [f64]) {
    let len = seg.len();
    if len < 2 {
        return;
    }
    let f0_start = rng.random_range(90.0..260.0);
    let f0_end = (f0_start * rng.random_range(0.8..1.25f64)).clamp(90.0, 260.0);
    let formants = [
        (rng.random_range(300.0..800.0), 90.0),
        (rng.random_range(900.0..2200.0), 120.0),
        (rng.random_range(2400.0..3200.0), 180.0),
    ];
    let amp = rng.random_range(0.5..1.0);
    let harmonics = (MAX_HARMONIC_HZ / f0_start.max(f0_end)) as usize;
    let weight = |f: f64| -> f64 {
        let resonance: f64 = formants
            .iter()
            .map(|&(fc, bw): &(f64, f64)| 1.0 / (1.0 + ((f - fc) / bw).powi(2)))
            .sum();
        (0.05 + resonance) * (200.0 / f.max(200.0)).sqrt()
    };
    let mut phase = 0.0f64;
    for (i, s) in seg.iter_mut().enumerate() {
        let t = i as f64 / len as f64;
        let f0 = f0_start + (f0_end - f0_start) * t;
        phase += 2.0 * PI * f0 / FS;
        let mut v = 0.0;
        for h in 1..=harmonics {
            v += weight(h as f64 * f0) * (h as f64 * phase).sin();
        }
        *s += amp * envelope(i, len) * v;
    }
}

fn fricative(rng: &mut ChaCha8Rng, seg: &mut [f64]) {
    let len = seg.len();
    if len < 2 {
        return;
    }
    let amp = rng.random_range(0.1..0.3);
    let mut prev = 0.0;
    for (i, s) in seg.iter_mut().enumerate() {
        let w: f64 = rng.random_range(-1.0..1.0);
        *s += amp * envelope(i, len) * (w - prev);
        prev = w;
    }
}

/// Gaussian white noise with the given standard deviation.
pub fn white_noise(samples: usize, std_dev: f64, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std_dev).expect("finite std dev");
    (0..samples).map(|_| normal.sample(&mut rng) as f32).collect()
}

pub fn power(x: &[f32]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|&v| (v as f64).powi(2)).sum::<f64>() / x.len() as f64
}

/// Scales `noise` so that `power(clean) / power(scaled) = 10^(snr_db/10)`
/// and returns `(mixture, scaled noise)`.
pub fn mix_at_snr(clean: &[f32], noise: &[f32], snr_db: f64) -> (Vec<f32>, Vec<f32>) {
    assert_eq!(clean.len(), noise.len());
    let gain = (power(clean) / power(noise) / 10f64.powf(snr_db / 10.0)).sqrt();
    let scaled: Vec<f32> = noise.iter().map(|&v| (v as f64 * gain) as f32).collect();
    let mix = clean.iter().zip(&scaled).map(|(a, b)| a + b).collect();
    (mix, scaled)
}

/// `10·log10(Σ reference² / Σ (estimate − reference)²)`.
pub fn snr_db(reference: &[f32], estimate: &[f32]) -> f64 {
    assert_eq!(reference.len(), estimate.len());
    let (mut s, mut e) = (0.0f64, 0.0f64);
    for (&r, &x) in reference.iter().zip(estimate) {
        s += (r as f64).powi(2);
        e += (x as f64 - r as f64).powi(2);
    }
    10.0 * (s / e).log10()
}
