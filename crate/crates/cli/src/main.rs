//! `rnnd`: denoise 48 kHz mono audio files or streams.

mod audio;
mod gains;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, ValueEnum};
use rnnd::{BandVector, DenoiseError, DenoiseOptions, DenoiseState, Model, ModelError, BAND_COUNT, HOP_SIZE};

use audio::{decode_raw, decode_wav, encode_raw, encode_wav, read_input, write_output, Audio};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("WAV: {0}")]
    Wav(#[from] hound::Error),
    #[error("{0}")]
    Format(String),
    #[error("model {path}: {source}")]
    Model { path: String, source: ModelError },
    #[error("{0}")]
    Denoise(#[from] DenoiseError),
    #[error("oracle gains, line {line}: {msg}")]
    OracleGains { line: usize, msg: String },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn io(path: &str, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Network-predicted gains.
    Denoise,
    /// Unit gains, no comb filter: output equals input.
    Passthrough,
    /// Gains read from --oracle-gains.
    Oracle,
    /// Time the pipeline on synthetic audio and print a report.
    Benchmark,
}

/// Suppress noise in 48 kHz mono speech.
///
/// Output has the same length and encoding as the input; the one-hop
/// algorithmic delay is compensated.
#[derive(Debug, Parser)]
#[command(name = "rnnd", version)]
struct Args {
    /// Input WAV file (16-bit PCM or 32-bit float), or `-` for stdin.
    #[arg(default_value = "-")]
    input: String,
    /// Output file, or `-` for stdout.
    #[arg(default_value = "-")]
    output: String,
    #[arg(long, value_enum, default_value_t = Mode::Denoise)]
    mode: Mode,
    /// Model file; required for denoise and benchmark.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Treat input and output as headerless 48 kHz s16le.
    #[arg(long)]
    raw: bool,
    /// Write one VAD probability per frame (denoise mode).
    #[arg(long)]
    vad_out: Option<PathBuf>,
    /// Per-frame band gains for oracle mode: 22 comma-separated values per
    /// line. Frames past the last line reuse it.
    #[arg(long)]
    oracle_gains: Option<PathBuf>,
    /// Disable the pitch comb filter.
    #[arg(long)]
    no_comb: bool,
    /// Disable gain smoothing.
    #[arg(long)]
    no_smoothing: bool,
    /// Seconds of synthetic audio per benchmark stream.
    #[arg(long, default_value_t = 60.0)]
    bench_seconds: f64,
    /// Independent benchmark streams, one thread each.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn load_model(path: &Option<PathBuf>, mode: Mode) -> Result<Arc<Model>, CliError> {
    let path = path
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("--model is required in {mode:?} mode").to_lowercase()))?;
    let shown = path.display().to_string();
    let bytes = fs::read(path).map_err(|e| CliError::io(&shown, e))?;
    Model::from_bytes(&bytes)
        .map(Arc::new)
        .map_err(|source| CliError::Model { path: shown, source })
}

/// Feeds whole hops (zero-padded, plus one flush hop) and trims the first
/// hop so the output lines up with the input.
fn process(
    samples: &[f32],
    mut frame: impl FnMut(usize, &[f32]) -> Result<(Vec<f32>, Option<f32>), CliError>,
) -> Result<(Vec<f32>, Vec<f32>), CliError> {
    let hops = samples.len().div_ceil(HOP_SIZE) + 1;
    let mut padded = samples.to_vec();
    padded.resize(hops * HOP_SIZE, 0.0);
    let mut out = Vec::with_capacity(padded.len());
    let mut vad = Vec::new();
    for (i, hop) in padded.chunks_exact(HOP_SIZE).enumerate() {
        let (audio, v) = frame(i, hop)?;
        out.extend(audio);
        vad.extend(v);
    }
    out.drain(..HOP_SIZE);
    out.truncate(samples.len());
    Ok((out, vad))
}

fn run(args: &Args) -> Result<(), CliError> {
    if args.vad_out.is_some() && args.mode != Mode::Denoise {
        return Err(CliError::Usage("--vad-out needs --mode denoise".into()));
    }
    if args.oracle_gains.is_some() != (args.mode == Mode::Oracle) {
        return Err(CliError::Usage("--oracle-gains goes with --mode oracle, and only with it".into()));
    }
    let options = DenoiseOptions {
        comb_filter: !args.no_comb,
        smoothing: !args.no_smoothing,
        ..DenoiseOptions::default()
    };

    if args.mode == Mode::Benchmark {
        let model = load_model(&args.model, args.mode)?;
        if args.bench_seconds.is_nan() || args.bench_seconds <= 0.0 {
            return Err(CliError::Usage("--bench-seconds must be positive".into()));
        }
        let report = rnnd::bench::run_benchmark(model, args.bench_seconds, args.threads, 1);
        println!("{report}");
        return Ok(());
    }

    // Load everything that can fail before touching the input stream.
    let model = match args.mode {
        Mode::Denoise => Some(load_model(&args.model, args.mode)?),
        _ => None,
    };
    let oracle: Option<Vec<BandVector>> = match &args.oracle_gains {
        Some(p) => {
            let shown = p.display().to_string();
            let text = fs::read_to_string(p).map_err(|e| CliError::io(&shown, e))?;
            Some(gains::parse_gains(&text)?)
        }
        None => None,
    };

    let bytes = read_input(&args.input)?;
    let input = if args.raw { decode_raw(&bytes)? } else { decode_wav(&bytes)? };

    let (samples, vad) = match args.mode {
        Mode::Denoise => {
            let mut state = DenoiseState::with_options(model, options);
            process(&input.samples, |_, hop| {
                let r = state.process_frame(hop)?;
                Ok((r.audio_out, r.vad))
            })?
        }
        Mode::Passthrough => {
            let mut state = DenoiseState::without_model(DenoiseOptions::PASSTHROUGH);
            process(&input.samples, |_, hop| {
                Ok((state.process_frame_oracle(hop, &[1.0; BAND_COUNT])?.audio_out, None))
            })?
        }
        Mode::Oracle => {
            let table = oracle.expect("checked above");
            let mut state = DenoiseState::without_model(options);
            process(&input.samples, |i, hop| {
                let g = &table[i.min(table.len() - 1)];
                Ok((state.process_frame_oracle(hop, g)?.audio_out, None))
            })?
        }
        Mode::Benchmark => unreachable!(),
    };

    if let Some(path) = &args.vad_out {
        // One value per processed hop, excluding the flush hop.
        let frames = input.samples.len().div_ceil(HOP_SIZE);
        let text: String = vad.iter().take(frames).map(|v| format!("{v:.6}\n")).collect();
        let shown = path.display().to_string();
        fs::write(path, text).map_err(|e| CliError::io(&shown, e))?;
    }

    let output = Audio {
        samples,
        encoding: input.encoding,
    };
    let encoded = if args.raw { encode_raw(&output.samples) } else { encode_wav(&output)? };
    write_output(&args.output, &encoded)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rnnd: error: {e}");
            ExitCode::FAILURE
        }
    }
}
