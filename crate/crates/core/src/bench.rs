//! Throughput measurement on synthetic audio.

use std::fmt;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crate::denoise::{DenoiseState, StageTimings};
use crate::frame::{HOP_SIZE, SAMPLE_RATE};
use crate::nn::Model;
use crate::synth::{mix_at_snr, speech_like, white_noise};

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub streams: usize,
    /// Audio per stream.
    pub audio_seconds: f64,
    pub frames: u64,
    /// Summed over streams.
    pub processing: Duration,
    /// Wall time for all streams together.
    pub wall: Duration,
    pub timings: StageTimings,
}

impl BenchReport {
    pub fn frames_per_second(&self) -> f64 {
        self.frames as f64 / self.processing.as_secs_f64()
    }

    /// Processing time divided by audio duration, per stream.
    pub fn real_time_factor(&self) -> f64 {
        self.processing.as_secs_f64() / (self.audio_seconds * self.streams as f64)
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ms_per_frame = |d: Duration| d.as_secs_f64() * 1e3 / self.frames.max(1) as f64;
        writeln!(f, "streams:           {}", self.streams)?;
        writeln!(f, "audio per stream:  {:.1} s", self.audio_seconds)?;
        writeln!(f, "frames:            {}", self.frames)?;
        writeln!(f, "wall time:         {:.3} s", self.wall.as_secs_f64())?;
        writeln!(f, "frames/s:          {:.0}", self.frames_per_second())?;
        writeln!(f, "real-time factor:  {:.4}", self.real_time_factor())?;
        writeln!(f, "stage timing (ms per frame):")?;
        writeln!(f, "  fft:        {:.4}", ms_per_frame(self.timings.fft))?;
        writeln!(f, "  pitch:      {:.4}", ms_per_frame(self.timings.pitch))?;
        writeln!(f, "  features:   {:.4}", ms_per_frame(self.timings.features))?;
        writeln!(f, "  network:    {:.4}", ms_per_frame(self.timings.network))?;
        write!(f, "  filtering:  {:.4}", ms_per_frame(self.timings.filtering))
    }
}

/// Denoises `seconds` of noisy synthetic speech on each of `streams`
/// threads, one independent state per thread. Signal generation is not
/// timed.
pub fn run_benchmark(model: Arc<Model>, seconds: f64, streams: usize, seed: u64) -> BenchReport {
    let streams = streams.max(1);
    let inputs: Vec<Vec<f32>> = (0..streams as u64)
        .map(|i| {
            let clean = speech_like(seconds, seed.wrapping_add(2 * i));
            let noise = white_noise(clean.len(), 1.0, seed.wrapping_add(2 * i + 1));
            mix_at_snr(&clean, &noise, 10.0).0
        })
        .collect();

    let start = Instant::now();
    let results: Vec<(Duration, StageTimings)> = thread::scope(|scope| {
        let handles: Vec<_> = inputs
            .iter()
            .map(|input| {
                let model = Arc::clone(&model);
                scope.spawn(move || {
                    let mut state = DenoiseState::new(model);
                    let t = Instant::now();
                    for hop in input.chunks_exact(HOP_SIZE) {
                        state.process_frame(hop).expect("finite synthetic input");
                    }
                    (t.elapsed(), *state.timings())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("benchmark thread")).collect()
    });
    let wall = start.elapsed();

    let mut timings = StageTimings::default();
    let mut processing = Duration::ZERO;
    for (d, t) in &results {
        processing += *d;
        timings.accumulate(t);
    }
    let frames_per_stream = (seconds * SAMPLE_RATE as f64) as usize / HOP_SIZE;
    BenchReport {
        streams,
        audio_seconds: (frames_per_stream * HOP_SIZE) as f64 / SAMPLE_RATE as f64,
        frames: timings.frames,
        processing,
        wall,
        timings,
    }
}
