//! Oracle gain files: one line per frame, 22 comma-separated values in
//! `[0, 1]`. Blank lines and lines starting with `#` are skipped. Frames past
//! the last line reuse it.

use rnnd::{BandVector, BAND_COUNT};

use crate::CliError;

pub fn parse_gains(text: &str) -> Result<Vec<BandVector>, CliError> {
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| CliError::OracleGains { line: i + 1, msg };
        let values: Vec<f64> = line
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("cannot parse {:?} as a number", v.trim())))
            })
            .collect::<Result<_, _>>()?;
        if values.len() != BAND_COUNT {
            return Err(bad(format!("expected {BAND_COUNT} values, found {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(bad(format!("gain {v} is outside [0, 1]")));
        }
        let mut g = [0.0; BAND_COUNT];
        g.copy_from_slice(&values);
        frames.push(g);
    }
    if frames.is_empty() {
        return Err(CliError::OracleGains {
            line: 0,
            msg: "file contains no gain lines".into(),
        });
    }
    Ok(frames)
}
