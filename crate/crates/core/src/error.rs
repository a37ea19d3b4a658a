use thiserror::Error;

/// Errors raised by the streaming pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DenoiseError {
    #[error("expected a hop of {expected} samples, got {got}")]
    HopLength { expected: usize, got: usize },
    #[error("expected a spectrum of {expected} bins, got {got}")]
    SpectrumLength { expected: usize, got: usize },
    #[error("input contains a non-finite sample at index {index}")]
    NonFiniteInput { index: usize },
    #[error("no model loaded; network mode needs a model")]
    MissingModel,
    #[error("oracle gain for band {band} is {value}, outside [0, 1]")]
    InvalidGain { band: usize, value: f64 },
    #[error("unsupported frame configuration: {0}")]
    UnsupportedConfig(String),
}

/// Errors raised while decoding or encoding a model file.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("bad magic: expected \"RNND\", found {found:?}")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported model format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("feature version {found} does not match engine feature version {expected}")]
    FeatureVersion { found: u32, expected: u32 },
    #[error("band-edge table does not match the engine layout")]
    BandTable,
    #[error("file truncated while reading {what}")]
    Truncated { what: String },
    #[error("header declares {declared} units but layers total {actual}")]
    UnitCount { declared: u32, actual: u32 },
    #[error("unknown activation code {0}")]
    UnknownActivation(u8),
    #[error("unknown layer kind code {0}")]
    UnknownLayerKind(u8),
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("quantized weight {value} in {tensor} exceeds the symmetric int8 range")]
    WeightRange { tensor: String, value: i8 },
    #[error("{0} trailing bytes after the last tensor")]
    TrailingBytes(usize),
    #[error("non-finite weight in {0}")]
    NonFiniteWeight(String),
}
