//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fail.

// The brute-force oracles index explicitly on purpose.
#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realfft::num_complex::Complex64;

use rnnd::bands::{ideal_gains, BandLayout, BandVector, BAND_COUNT};
use rnnd::bench::run_benchmark;
use rnnd::denoise::{DenoiseOptions, DenoiseState};
use rnnd::error::ModelError;
use rnnd::frame::{vorbis_window, FrameConfig, OverlapState, SpectrumFrame, HOP_SIZE, SPECTRUM_BINS, WINDOW_SIZE};
use rnnd::nn::layers::{dense_forward, gru_forward, Activation, DenseLayer, GruLayer, LayerSpec, Tensor};
use rnnd::nn::{Model, Topology};
use rnnd::pitch::{
    apply_comb_filter, filter_strength, normalized_correlation, CombFilterPlan, PitchState, MAX_PERIOD,
    MIN_PERIOD,
};
use rnnd::synth::{mix_at_snr, snr_db, speech_like, white_noise};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn layout() -> BandLayout {
    BandLayout::build(&FrameConfig::STANDARD).unwrap()
}

fn window_and_reconstruction() -> Outcome {
    let n = WINDOW_SIZE;
    let pb = (0..n / 2)
        .map(|i| (vorbis_window(i, n).powi(2) + vorbis_window(i + n / 2, n).powi(2) - 1.0).abs())
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let input: Vec<f32> = (0..10 * 48_000).map(|_| rng.random_range(-0.9f32..0.9)).collect();
    let mut s = DenoiseState::without_model(DenoiseOptions::PASSTHROUGH);
    let mut out = Vec::with_capacity(input.len());
    for hop in input.chunks_exact(HOP_SIZE) {
        out.extend(s.process_frame_oracle(hop, &[1.0; BAND_COUNT]).map_err(|e| e.to_string())?.audio_out);
    }
    let (mut err, mut sig) = (0.0f64, 0.0f64);
    for i in HOP_SIZE..out.len() {
        let r = input[i - HOP_SIZE] as f64;
        err += (out[i] as f64 - r).powi(2);
        sig += r * r;
    }
    let rel = (err / sig).sqrt();
    check(
        pb < 1e-6 && rel < 1e-6,
        format!("Princen-Bradley residual {pb:.2e} (< 1e-6), 10 s pass-through relative RMS {rel:.2e} (< 1e-6)"),
    )
}

fn band_algebra() -> Outcome {
    let l = layout();
    let mut worst = 0.0f64;
    for k in l.covered_bins() {
        let sum: f64 = (0..BAND_COUNT).map(|b| l.weight(b, k)).sum();
        worst = worst.max((sum - 1.0).abs());
    }
    let mut interp = 0.0f64;
    for c in [0.0, 0.3, 0.75, 1.0] {
        for (k, r) in l.interpolate_gains(&[c; BAND_COUNT]).iter().enumerate() {
            if l.covered_bins().contains(&k) {
                interp = interp.max((r - c).abs());
            }
        }
    }
    let (g, defined) = ideal_gains(&[0.25; BAND_COUNT], &[1.0; BAND_COUNT]);
    let exact = g.iter().all(|&v| v == 0.5) && defined.iter().all(|&d| d);
    check(
        worst < 1e-9 && interp < 1e-9 && exact,
        format!("partition of unity err {worst:.1e}, uniform interpolation err {interp:.1e}, ideal 0.25/1.0 -> 0.5 exact: {exact}"),
    )
}

fn strength_table() -> Outcome {
    let table = [
        (filter_strength(0.8, 0.8) - 1.0).abs() < 1e-9,
        (0..=10).all(|i| filter_strength(i as f64 / 10.0, 1.0) == 0.0),
        (0..=10).all(|i| filter_strength(0.0, i as f64 / 10.0) == 0.0),
        (filter_strength(0.6, 0.8) - 0.5625).abs() < 1e-9,
    ];
    let grid = |i: usize| i as f64 / 99.0;
    let mut monotone = true;
    let mut in_range = true;
    for i in 0..100 {
        for j in 0..100 {
            let a = filter_strength(grid(i), grid(j));
            in_range &= (0.0..=1.0).contains(&a);
            if i > 0 {
                monotone &= a >= filter_strength(grid(i - 1), grid(j)) - 1e-12;
            }
            if j > 0 && grid(i) > 0.0 {
                monotone &= a <= filter_strength(grid(i), grid(j - 1)) + 1e-12;
            }
        }
    }
    check(
        table.iter().all(|&t| t) && monotone && in_range,
        format!("table {table:?}, 100x100 grid monotone {monotone}, in [0,1] {in_range}"),
    )
}

fn comb_energy() -> Outcome {
    let l = layout();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let random_spec = |rng: &mut ChaCha8Rng| {
        let bins = (0..SPECTRUM_BINS)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SpectrumFrame::from_bins(bins).unwrap()
    };
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x = random_spec(&mut rng);
        let p = random_spec(&mut rng);
        let alpha: BandVector = std::array::from_fn(|_| rng.random_range(0.0..=1.0));
        let e = l.band_energies(&x);
        let y = apply_comb_filter(&x, &CombFilterPlan::new(alpha, p), &l, &e);
        let ey = l.band_energies(&y);
        for b in 0..BAND_COUNT {
            worst = worst.max((ey[b] - e[b]).abs() / e[b]);
        }
    }

    // 200 Hz harmonics plus inter-harmonic tones at odd multiples of 100 Hz.
    // A lag of 240 samples keeps the harmonics and inverts the inter-harmonics.
    let n = 4 * WINDOW_SIZE;
    let mut harmonic_bins = Vec::new();
    let mut inter_bins = Vec::new();
    let mut signal = vec![0.0f64; n];
    for m in 1..=40 {
        let f = 100.0 * m as f64;
        let phase = rng.random_range(0.0..2.0 * PI);
        for (i, s) in signal.iter_mut().enumerate() {
            *s += (2.0 * PI * f * i as f64 / 48_000.0 + phase).sin();
        }
        let bin = 2 * m;
        if m % 2 == 0 {
            harmonic_bins.push(bin);
        } else {
            inter_bins.push(bin);
        }
    }
    let mut pitch = PitchState::new();
    let mut overlap = OverlapState::new();
    let mut x = SpectrumFrame::zeros();
    for hop in signal.chunks_exact(HOP_SIZE) {
        pitch.push(hop);
        x = overlap.analyze(hop).unwrap();
    }
    let p = pitch.pitch_spectrum(overlap.transform(), 240);
    let y = apply_comb_filter(&x, &CombFilterPlan::new([1.0; BAND_COUNT], p), &l, &l.band_energies(&x));
    let energy = |s: &SpectrumFrame, bins: &[usize]| -> f64 { bins.iter().map(|&k| s.bins()[k].norm_sqr()).sum() };
    let before = energy(&x, &inter_bins) / energy(&x, &harmonic_bins);
    let after = energy(&y, &inter_bins) / energy(&y, &harmonic_bins);
    let attenuation = 10.0 * (before / after).log10();
    check(
        worst < 1e-6 && attenuation >= 6.0,
        format!("max band energy error {worst:.2e} over 1000 frames (< 1e-6), inter-harmonic attenuation {attenuation:.1} dB (>= 6)"),
    )
}

fn pitch_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0usize;
    let mut failures = 0;
    for i in 0..50 {
        let f0 = 62.5 * (800.0f64 / 62.5).powf(i as f64 / 49.0);
        let harmonics = ((8000.0 / f0) as usize).clamp(1, 12);
        let amps: Vec<(f64, f64)> = (0..harmonics)
            .map(|_| (rng.random_range(0.2..1.0), rng.random_range(0.0..2.0 * PI)))
            .collect();
        let len = 8 * HOP_SIZE;
        let clean: Vec<f32> = (0..len)
            .map(|n| {
                let t = n as f64 / 48_000.0;
                amps.iter()
                    .enumerate()
                    .map(|(h, (a, ph))| a * (2.0 * PI * f0 * (h + 1) as f64 * t + ph).sin())
                    .sum::<f64>() as f32
            })
            .collect();
        let noise = white_noise(len, 1.0, 100 + i);
        let (mix, _) = mix_at_snr(&clean, &noise, 20.0);
        let mut state = PitchState::new();
        for hop in mix.chunks_exact(HOP_SIZE) {
            state.push(&hop.iter().map(|&v| v as f64).collect::<Vec<_>>());
        }
        let found = state.find_pitch();
        let mut best = (f64::NEG_INFINITY, 0);
        for lag in MIN_PERIOD..=MAX_PERIOD {
            let c = normalized_correlation(state.history(), WINDOW_SIZE, lag);
            if c > best.0 {
                best = (c, lag);
            }
        }
        let d = found.abs_diff(best.1);
        worst = worst.max(d);
        if d > 2 {
            failures += 1;
        }
    }
    check(
        failures == 0,
        format!("50 signals 62.5-800 Hz at 20 dB SNR, {failures} outside +-2, worst deviation {worst} samples"),
    )
}

fn act64(a: Activation, v: f64) -> f64 {
    match a {
        Activation::Tanh => v.tanh(),
        Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
        Activation::Relu => v.max(0.0),
    }
}

/// Uniform weights in `±1/sqrt(fan_in)`, the usual initialization range.
/// Unscaled weights push relu outputs past 16, where a single f32 ulp already
/// exceeds the 1e-6 tolerance.
fn random_tensor(rng: &mut ChaCha8Rng, n: usize, fan_in: usize) -> Tensor {
    let limit = 1.0 / (fan_in as f32).sqrt();
    Tensor::from_f32((0..n).map(|_| rng.random_range(-limit..=limit)).collect())
}

fn kernel_parity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let acts = [Activation::Tanh, Activation::Sigmoid, Activation::Relu];
    let mut worst = 0.0f64;
    for case in 0..100 {
        let n_in = rng.random_range(1..=8);
        let n_out = rng.random_range(1..=8);
        let act = acts[rng.random_range(0..3)];
        let x: Vec<f32> = (0..n_in).map(|_| rng.random_range(-2.0f32..2.0)).collect();
        if case % 2 == 0 {
            let layer = DenseLayer {
                spec: LayerSpec::dense(n_in, n_out, act),
                weights: random_tensor(&mut rng, n_in * n_out, n_in),
                bias: random_tensor(&mut rng, n_out, 1),
            };
            let mut out = vec![0.0f32; n_out];
            dense_forward(&layer, &x, &mut out);
            for o in 0..n_out {
                let mut acc = layer.bias.values()[o] as f64;
                for i in 0..n_in {
                    acc += layer.weights.values()[o * n_in + i] as f64 * x[i] as f64;
                }
                worst = worst.max((act64(act, acc) - out[o] as f64).abs());
            }
        } else {
            let layer = GruLayer {
                spec: LayerSpec::gru(n_in, n_out, act),
                input_weights: std::array::from_fn(|_| random_tensor(&mut rng, n_in * n_out, n_in)),
                recurrent_weights: std::array::from_fn(|_| random_tensor(&mut rng, n_out * n_out, n_out)),
                bias: std::array::from_fn(|_| random_tensor(&mut rng, n_out, 1)),
            };
            let mut h = vec![0.0f32; n_out];
            let mut h_ref = vec![0.0f64; n_out];
            for _ in 0..10 {
                let x: Vec<f32> = (0..n_in).map(|_| rng.random_range(-2.0f32..2.0)).collect();
                gru_forward(&layer, &mut h, &x);
                let row = |t: &Tensor, r: usize, v: &[f64]| -> f64 {
                    let c = v.len();
                    (0..c).map(|j| t.values()[r * c + j] as f64 * v[j]).sum()
                };
                let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
                let gate = |g: usize, o: usize, state: &[f64]| {
                    layer.bias[g].values()[o] as f64
                        + row(&layer.input_weights[g], o, &xf)
                        + row(&layer.recurrent_weights[g], o, state)
                };
                let z: Vec<f64> = (0..n_out).map(|o| act64(Activation::Sigmoid, gate(0, o, &h_ref))).collect();
                let rh: Vec<f64> = (0..n_out)
                    .map(|o| act64(Activation::Sigmoid, gate(1, o, &h_ref)) * h_ref[o])
                    .collect();
                h_ref = (0..n_out)
                    .map(|o| z[o] * h_ref[o] + (1.0 - z[o]) * act64(act, gate(2, o, &rh)))
                    .collect();
                for o in 0..n_out {
                    worst = worst.max((h[o] as f64 - h_ref[o]).abs());
                }
            }
        }
    }

    // z saturated at 1 freezes the state.
    let n = 4;
    let filled = |v: f32, len: usize| Tensor::from_f32(vec![v; len]);
    let frozen = GruLayer {
        spec: LayerSpec::gru(3, n, Activation::Relu),
        input_weights: std::array::from_fn(|_| random_tensor(&mut rng, 3 * n, 3)),
        recurrent_weights: std::array::from_fn(|_| random_tensor(&mut rng, n * n, n)),
        bias: [filled(1e4, n), random_tensor(&mut rng, n, 1), random_tensor(&mut rng, n, 1)],
    };
    let mut h = vec![0.3f32, -0.2, 0.9, 0.05];
    let before = h.clone();
    for _ in 0..10 {
        gru_forward(&frozen, &mut h, &[0.5, -0.5, 1.0]);
    }
    let freeze = h == before;

    // z and r saturated at 0 with zero candidate weights leave act(b_h).
    let cand_bias = random_tensor(&mut rng, n, 1);
    let closed = GruLayer {
        spec: LayerSpec::gru(3, n, Activation::Tanh),
        input_weights: [random_tensor(&mut rng, 3 * n, 3), random_tensor(&mut rng, 3 * n, 3), filled(0.0, 3 * n)],
        recurrent_weights: [random_tensor(&mut rng, n * n, n), random_tensor(&mut rng, n * n, n), filled(0.0, n * n)],
        bias: [filled(-1e4, n), filled(-1e4, n), cand_bias.clone()],
    };
    let mut h = vec![0.7f32, -0.4, 0.1, 0.6];
    gru_forward(&closed, &mut h, &[0.5, -0.5, 1.0]);
    let reduce = h.iter().zip(cand_bias.values()).all(|(v, b)| *v == b.tanh());

    check(
        worst < 1e-6 && freeze && reduce,
        format!("100 random layers max error {worst:.1e} (< 1e-6), z=1 freezes state: {freeze}, z=r=0 gives act(b_h): {reduce}"),
    )
}

fn oracle_gain_snr() -> Outcome {
    let clean = speech_like(10.0, 6);
    let noise = white_noise(clean.len(), 1.0, 7);
    let (noisy, _) = mix_at_snr(&clean, &noise, 10.0);
    let l = layout();
    let mut clean_an = OverlapState::new();
    let mut noisy_an = OverlapState::new();
    let mut s = DenoiseState::without_model(DenoiseOptions::default());
    let mut out = Vec::with_capacity(noisy.len());
    let to64 = |h: &[f32]| h.iter().map(|&v| v as f64).collect::<Vec<_>>();
    for (c, x) in clean.chunks_exact(HOP_SIZE).zip(noisy.chunks_exact(HOP_SIZE)) {
        let es = l.band_energies(&clean_an.analyze(&to64(c)).unwrap());
        let ex = l.band_energies(&noisy_an.analyze(&to64(x)).unwrap());
        let (g, _) = ideal_gains(&es, &ex);
        out.extend(s.process_frame_oracle(x, &g).map_err(|e| e.to_string())?.audio_out);
    }
    let n = out.len() - HOP_SIZE;
    let reference = &clean[..n];
    let input_snr = snr_db(reference, &noisy[..n]);
    let output_snr = snr_db(reference, &out[HOP_SIZE..]);
    let gain = output_snr - input_snr;
    check(
        gain >= 5.0,
        format!("input {input_snr:.2} dB -> output {output_snr:.2} dB, improvement {gain:.2} dB (>= 5)"),
    )
}

fn performance() -> Outcome {
    let model = Model::random(Topology::REFERENCE, 8, 1.0);
    let weights = model.weight_count();
    let macs = model.multiply_adds_per_frame();
    let mac_ratio = macs as f64 / weights as f64;
    let weight_dev = (weights as f64 - 87_503.0).abs() / 87_503.0;
    let report = run_benchmark(Arc::new(model), 60.0, 1, 9);
    let rtf = report.real_time_factor();
    check(
        rtf < 0.1 && (mac_ratio - 1.0).abs() <= 0.1 && weight_dev <= 0.01,
        format!(
            "60 s benchmark real-time factor {rtf:.4} (< 0.1), {macs} MACs/frame = {:.3}x weights (within 10%), {} flops/frame, {weights} weights (87,503 +-1%)",
            mac_ratio,
            2 * macs
        ),
    )
}

fn model_format() -> Outcome {
    let model = Model::random(Topology::REFERENCE, 10, 1.0);
    let bytes = model.to_bytes();
    let loaded = Model::from_bytes(&bytes).map_err(|e| e.to_string())?;
    let exact = loaded == model.quantized() && loaded.to_bytes() == bytes && loaded.total_units() == 215;

    let mut magic = bytes.clone();
    magic[1] ^= 0xff;
    let mut version = bytes.clone();
    version[4..8].copy_from_slice(&7u32.to_le_bytes());
    let truncated = &bytes[..bytes.len() - 10];

    let e_magic = Model::from_bytes(&magic);
    let e_version = Model::from_bytes(&version);
    let e_trunc = Model::from_bytes(truncated);
    let distinct = matches!(e_magic, Err(ModelError::BadMagic { .. }))
        && matches!(e_version, Err(ModelError::UnsupportedVersion { found: 7, .. }))
        && matches!(&e_trunc, Err(ModelError::Truncated { what }) if what.contains("gain output"));
    let msg = |r: &Result<Model, ModelError>| match r {
        Ok(_) => "accepted".to_string(),
        Err(e) => e.to_string(),
    };
    check(
        exact && distinct,
        format!(
            "round trip exact: {exact}; magic: \"{}\"; version: \"{}\"; truncated: \"{}\"",
            msg(&e_magic),
            msg(&e_version),
            msg(&e_trunc)
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("window/reconstruction", window_and_reconstruction),
        ("band algebra", band_algebra),
        ("comb strength table", strength_table),
        ("comb-filter energy conservation", comb_energy),
        ("pitch oracle equivalence", pitch_oracle),
        ("GRU/dense kernel parity", kernel_parity),
        ("oracle-gain end-to-end", oracle_gain_snr),
        ("performance budget", performance),
        ("model format robustness", model_format),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
