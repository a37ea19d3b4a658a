//! Reading and writing mono 48 kHz audio as WAV or raw s16le.

use std::fs;
use std::io::{self, Cursor, Read, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use rnnd::SAMPLE_RATE;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Pcm16,
    Float32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub samples: Vec<f32>,
    pub encoding: Encoding,
}

pub fn read_input(path: &str) -> Result<Vec<u8>, CliError> {
    let mut bytes = Vec::new();
    if path == "-" {
        io::stdin().lock().read_to_end(&mut bytes).map_err(|e| CliError::io("<stdin>", e))?;
    } else {
        bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    }
    Ok(bytes)
}

pub fn write_output(path: &str, bytes: &[u8]) -> Result<(), CliError> {
    if path == "-" {
        let mut out = io::stdout().lock();
        out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| CliError::io("<stdout>", e))
    } else {
        fs::write(Path::new(path), bytes).map_err(|e| CliError::io(path, e))
    }
}

pub fn decode_wav(bytes: &[u8]) -> Result<Audio, CliError> {
    let reader = WavReader::new(Cursor::new(bytes))?;
    let spec = reader.spec();
    if spec.sample_rate != SAMPLE_RATE {
        return Err(CliError::Format(format!(
            "input is {} Hz; only {SAMPLE_RATE} Hz is supported (no resampling)",
            spec.sample_rate
        )));
    }
    if spec.channels != 1 {
        return Err(CliError::Format(format!(
            "input has {} channels; only mono is supported",
            spec.channels
        )));
    }
    match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => {
            let samples = reader
                .into_samples::<i16>()
                .map(|s| s.map(|v| v as f32 / 32768.0))
                .collect::<Result<_, _>>()?;
            Ok(Audio {
                samples,
                encoding: Encoding::Pcm16,
            })
        }
        (SampleFormat::Float, 32) => {
            let samples = reader.into_samples::<f32>().collect::<Result<_, _>>()?;
            Ok(Audio {
                samples,
                encoding: Encoding::Float32,
            })
        }
        (format, bits) => Err(CliError::Format(format!(
            "unsupported WAV encoding: {bits}-bit {}; use 16-bit PCM or 32-bit float",
            match format {
                SampleFormat::Int => "integer",
                SampleFormat::Float => "float",
            }
        ))),
    }
}

pub fn encode_wav(audio: &Audio) -> Result<Vec<u8>, CliError> {
    let (bits, format) = match audio.encoding {
        Encoding::Pcm16 => (16, SampleFormat::Int),
        Encoding::Float32 => (32, SampleFormat::Float),
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: bits,
        sample_format: format,
    };
    let mut cursor = Cursor::new(Vec::new());
    let mut writer = WavWriter::new(&mut cursor, spec)?;
    for &s in &audio.samples {
        match audio.encoding {
            Encoding::Pcm16 => writer.write_sample(to_i16(s))?,
            Encoding::Float32 => writer.write_sample(s)?,
        }
    }
    writer.finalize()?;
    Ok(cursor.into_inner())
}

pub fn decode_raw(bytes: &[u8]) -> Result<Audio, CliError> {
    if !bytes.len().is_multiple_of(2) {
        return Err(CliError::Format(format!(
            "raw input has an odd byte count ({}); expected 16-bit little-endian samples",
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f32 / 32768.0)
        .collect();
    Ok(Audio {
        samples,
        encoding: Encoding::Pcm16,
    })
}

pub fn encode_raw(samples: &[f32]) -> Vec<u8> {
    samples.iter().flat_map(|&s| to_i16(s).to_le_bytes()).collect()
}

/// Rounds to the nearest 16-bit code, saturating at full scale.
pub fn to_i16(s: f32) -> i16 {
    (s * 32768.0).round().clamp(i16::MIN as f32, i16::MAX as f32) as i16
}
