//! The network container and its on-disk format.
//!
//! Six layers with fixed roles: an input dense layer, three GRUs, the VAD
//! head, and the gain head. The GRUs see the raw features next to earlier
//! layer outputs:
//!
//! ```text
//! features ─┬─> dense ─┬─> vad_gru ─┬─> vad_out (1, sigmoid)
//!           │          │            │
//!           ├──────────┴──[dense, vad_gru, features]──> noise_gru
//!           │                       │                       │
//!           └─────────────[vad_gru, noise_gru, features]──> denoise_gru ─> gain_out (22, sigmoid)
//! ```
//!
//! Byte layout (little-endian): magic, format version, feature version,
//! band-edge table, layer count, total units, one 6-byte record per layer,
//! then each tensor as an f32 scale followed by its int8 codes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{
    Activation, DenseLayer, GruLayer, LayerKind, LayerSpec, QuantizedTensor, Tensor, GATE_NAMES,
};
use crate::bands::{BandLayout, BAND_COUNT, EDGE_COUNT};
use crate::error::ModelError;
use crate::features::{FEATURE_COUNT, FEATURE_VERSION};
use crate::frame::FrameConfig;

pub const MAGIC: [u8; 4] = *b"RNND";
/// Version 1: six-layer topology above, GRU state update `h' = z·h + (1−z)·h̃`
/// with the reset gate applied before the recurrent product.
pub const FORMAT_VERSION: u32 = 1;
pub const LAYER_COUNT: usize = 6;

pub const INPUT_DENSE: usize = 0;
pub const VAD_GRU: usize = 1;
pub const VAD_OUT: usize = 2;
pub const NOISE_GRU: usize = 3;
pub const DENOISE_GRU: usize = 4;
pub const GAIN_OUT: usize = 5;

const ROLE_NAMES: [&str; LAYER_COUNT] = [
    "input dense",
    "vad gru",
    "vad output",
    "noise gru",
    "denoise gru",
    "gain output",
];

/// Hidden sizes and activations of the six-layer graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    pub input_dense: usize,
    pub vad_gru: usize,
    pub noise_gru: usize,
    pub denoise_gru: usize,
    pub dense_activation: Activation,
    pub gru_activation: Activation,
}

impl Topology {
    /// 24 → 24 → 48 → 96 hidden units, 215 units and 87,503 weights in all.
    pub const REFERENCE: Topology = Topology {
        input_dense: 24,
        vad_gru: 24,
        noise_gru: 48,
        denoise_gru: 96,
        dense_activation: Activation::Tanh,
        gru_activation: Activation::Relu,
    };

    pub fn layer_specs(&self) -> [LayerSpec; LAYER_COUNT] {
        let f = FEATURE_COUNT;
        [
            LayerSpec::dense(f, self.input_dense, self.dense_activation),
            LayerSpec::gru(self.input_dense, self.vad_gru, self.gru_activation),
            LayerSpec::dense(self.vad_gru, 1, Activation::Sigmoid),
            LayerSpec::gru(
                self.input_dense + self.vad_gru + f,
                self.noise_gru,
                self.gru_activation,
            ),
            LayerSpec::gru(
                self.vad_gru + self.noise_gru + f,
                self.denoise_gru,
                self.gru_activation,
            ),
            LayerSpec::dense(self.denoise_gru, BAND_COUNT, Activation::Sigmoid),
        ]
    }

    /// Recovers hidden sizes from layer records, checking that the wiring
    /// matches the fixed graph.
    pub fn from_specs(specs: &[LayerSpec]) -> Result<Self, ModelError> {
        if specs.len() != LAYER_COUNT {
            return Err(ModelError::Topology(format!(
                "expected {LAYER_COUNT} layers, found {}",
                specs.len()
            )));
        }
        let kinds = [
            LayerKind::Dense,
            LayerKind::Gru,
            LayerKind::Dense,
            LayerKind::Gru,
            LayerKind::Gru,
            LayerKind::Dense,
        ];
        for (i, (s, k)) in specs.iter().zip(kinds).enumerate() {
            if s.kind != k {
                return Err(ModelError::Topology(format!(
                    "{} must be a {k:?} layer",
                    ROLE_NAMES[i]
                )));
            }
            if s.input_size == 0 || s.output_size == 0 {
                return Err(ModelError::Topology(format!("{} has a zero size", ROLE_NAMES[i])));
            }
        }
        let gru_activation = specs[VAD_GRU].activation;
        let topo = Topology {
            input_dense: specs[INPUT_DENSE].output_size,
            vad_gru: specs[VAD_GRU].output_size,
            noise_gru: specs[NOISE_GRU].output_size,
            denoise_gru: specs[DENOISE_GRU].output_size,
            dense_activation: specs[INPUT_DENSE].activation,
            gru_activation,
        };
        let mut expected = topo.layer_specs();
        // GRU activations may differ per layer.
        expected[NOISE_GRU].activation = specs[NOISE_GRU].activation;
        expected[DENOISE_GRU].activation = specs[DENOISE_GRU].activation;
        for (i, (got, want)) in specs.iter().zip(expected.iter()).enumerate() {
            if got != want {
                return Err(ModelError::Topology(format!(
                    "{}: found {}→{} {:?}, wiring needs {}→{} {:?}",
                    ROLE_NAMES[i],
                    got.input_size,
                    got.output_size,
                    got.activation,
                    want.input_size,
                    want.output_size,
                    want.activation
                )));
            }
        }
        Ok(topo)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Layer {
    Dense(DenseLayer),
    Gru(GruLayer),
}

impl Layer {
    pub fn spec(&self) -> &LayerSpec {
        match self {
            Layer::Dense(l) => &l.spec,
            Layer::Gru(l) => &l.spec,
        }
    }

    fn tensors(&self) -> Vec<&Tensor> {
        match self {
            Layer::Dense(l) => vec![&l.weights, &l.bias],
            Layer::Gru(l) => l
                .input_weights
                .iter()
                .chain(&l.recurrent_weights)
                .chain(&l.bias)
                .collect(),
        }
    }

    fn from_tensors(spec: LayerSpec, mut tensors: Vec<Tensor>) -> Self {
        match spec.kind {
            LayerKind::Dense => {
                let bias = tensors.pop().expect("dense bias");
                let weights = tensors.pop().expect("dense weights");
                Layer::Dense(DenseLayer {
                    spec,
                    weights,
                    bias,
                })
            }
            LayerKind::Gru => {
                let mut it = tensors.into_iter();
                let mut take3 = || -> [Tensor; 3] {
                    [
                        it.next().expect("gru tensor"),
                        it.next().expect("gru tensor"),
                        it.next().expect("gru tensor"),
                    ]
                };
                let input_weights = take3();
                let recurrent_weights = take3();
                let bias = take3();
                Layer::Gru(GruLayer {
                    spec,
                    input_weights,
                    recurrent_weights,
                    bias,
                })
            }
        }
    }

    fn map_tensors(&self, f: impl Fn(&Tensor) -> Tensor) -> Self {
        Layer::from_tensors(*self.spec(), self.tensors().into_iter().map(f).collect())
    }
}

fn tensor_name(layer: usize, kind: LayerKind, index: usize) -> String {
    let role = ROLE_NAMES[layer];
    match kind {
        LayerKind::Dense => {
            if index == 0 {
                format!("layer {layer} ({role}) weights")
            } else {
                format!("layer {layer} ({role}) bias")
            }
        }
        LayerKind::Gru => {
            let group = ["input weights", "recurrent weights", "bias"][index / 3];
            format!("layer {layer} ({role}) {group}, {}", GATE_NAMES[index % 3])
        }
    }
}

/// Immutable network weights plus header metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    feature_version: u32,
    band_edges: [u16; EDGE_COUNT],
    topology: Topology,
    layers: Vec<Layer>,
}

impl Model {
    /// Builds a float model. `tensors` holds, per layer, its tensors in file
    /// order (see [`LayerSpec::tensor_lengths`]).
    pub fn from_float(topology: Topology, tensors: Vec<Vec<Vec<f32>>>) -> Result<Self, ModelError> {
        let specs = topology.layer_specs();
        if tensors.len() != LAYER_COUNT {
            return Err(ModelError::Topology(format!(
                "expected tensors for {LAYER_COUNT} layers, got {}",
                tensors.len()
            )));
        }
        let mut layers = Vec::with_capacity(LAYER_COUNT);
        for (i, (spec, ts)) in specs.iter().zip(tensors).enumerate() {
            let lens = spec.tensor_lengths();
            if ts.len() != lens.len() {
                return Err(ModelError::Topology(format!(
                    "{} needs {} tensors, got {}",
                    ROLE_NAMES[i],
                    lens.len(),
                    ts.len()
                )));
            }
            for (j, (t, &len)) in ts.iter().zip(&lens).enumerate() {
                let name = tensor_name(i, spec.kind, j);
                if t.len() != len {
                    return Err(ModelError::Topology(format!(
                        "{name} has {} values, expected {len}",
                        t.len()
                    )));
                }
                if t.iter().any(|v| !v.is_finite()) {
                    return Err(ModelError::NonFiniteWeight(name));
                }
            }
            layers.push(Layer::from_tensors(
                *spec,
                ts.into_iter().map(Tensor::from_f32).collect(),
            ));
        }
        Ok(Self {
            feature_version: FEATURE_VERSION,
            band_edges: standard_edges(),
            topology,
            layers,
        })
    }

    /// Every weight and bias set to zero.
    pub fn zeros(topology: Topology) -> Self {
        let tensors = topology
            .layer_specs()
            .iter()
            .map(|s| s.tensor_lengths().iter().map(|&n| vec![0.0; n]).collect())
            .collect();
        Self::from_float(topology, tensors).expect("shapes come from the topology")
    }

    /// Uniform random weights scaled by `gain / sqrt(fan_in)`, biases in
    /// `±0.1·gain`. Deterministic for a given seed.
    pub fn random(topology: Topology, seed: u64, gain: f32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = topology
            .layer_specs()
            .iter()
            .map(|s| {
                let fan_in = |j: usize| match (s.kind, j) {
                    (LayerKind::Dense, 0) => s.input_size,
                    (LayerKind::Gru, 0..=2) => s.input_size,
                    (LayerKind::Gru, 3..=5) => s.output_size,
                    _ => 0,
                };
                s.tensor_lengths()
                    .iter()
                    .enumerate()
                    .map(|(j, &n)| {
                        let limit = match fan_in(j) {
                            0 => 0.1 * gain,
                            f => gain / (f as f32).sqrt(),
                        };
                        (0..n).map(|_| rng.random_range(-limit..=limit)).collect()
                    })
                    .collect()
            })
            .collect();
        Self::from_float(topology, tensors).expect("shapes come from the topology")
    }

    /// Same model with every tensor replaced by its int8 dequantization.
    pub fn quantized(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| l.map_tensors(Tensor::quantized))
                .collect(),
            ..self.clone()
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn feature_version(&self) -> u32 {
        self.feature_version
    }

    pub fn band_edges(&self) -> &[u16; EDGE_COUNT] {
        &self.band_edges
    }

    /// Hidden plus output units.
    pub fn total_units(&self) -> usize {
        self.layers.iter().map(|l| l.spec().output_size).sum()
    }

    pub fn hidden_layer_count(&self) -> usize {
        // Everything except the two sigmoid heads.
        self.layers.len() - 2
    }

    pub fn weight_count(&self) -> usize {
        self.layers.iter().map(|l| l.spec().weight_count()).sum()
    }

    pub fn multiply_adds_per_frame(&self) -> usize {
        self.layers.iter().map(|l| l.spec().multiply_adds()).sum()
    }

    pub fn dense(&self, index: usize) -> &DenseLayer {
        match &self.layers[index] {
            Layer::Dense(l) => l,
            Layer::Gru(_) => panic!("layer {index} is not dense"),
        }
    }

    pub fn gru(&self, index: usize) -> &GruLayer {
        match &self.layers[index] {
            Layer::Gru(l) => l,
            Layer::Dense(_) => panic!("layer {index} is not a GRU"),
        }
    }

    /// Serializes with int8 weights. Tensors that are still float are
    /// quantized on the way out.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.weight_count() + 4 * 32);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.feature_version.to_le_bytes());
        for e in &self.band_edges {
            out.extend_from_slice(&e.to_le_bytes());
        }
        out.extend_from_slice(&(self.layers.len() as u16).to_le_bytes());
        out.extend_from_slice(&(self.total_units() as u32).to_le_bytes());
        for l in &self.layers {
            let s = l.spec();
            out.push(s.kind.code());
            out.push(s.activation.code());
            out.extend_from_slice(&(s.input_size as u16).to_le_bytes());
            out.extend_from_slice(&(s.output_size as u16).to_le_bytes());
        }
        for l in &self.layers {
            for t in l.tensors() {
                let q = t.to_quantized();
                out.extend_from_slice(&q.scale.to_le_bytes());
                out.extend(q.codes.iter().map(|&c| c as u8));
            }
        }
        out
    }

    /// Parses and validates a model file against this engine's feature
    /// version and band layout.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4, "magic")?.try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(ModelError::BadMagic { found: magic });
        }
        let version = r.u32("format version")?;
        if version != FORMAT_VERSION {
            return Err(ModelError::UnsupportedVersion {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let feature_version = r.u32("feature version")?;
        if feature_version != FEATURE_VERSION {
            return Err(ModelError::FeatureVersion {
                found: feature_version,
                expected: FEATURE_VERSION,
            });
        }
        let mut band_edges = [0u16; EDGE_COUNT];
        for e in band_edges.iter_mut() {
            *e = r.u16("band-edge table")?;
        }
        if band_edges != standard_edges() {
            return Err(ModelError::BandTable);
        }
        let layer_count = r.u16("layer count")? as usize;
        let declared_units = r.u32("unit count")?;
        let mut specs = Vec::with_capacity(layer_count);
        for i in 0..layer_count {
            let what = format!("layer record {i}");
            let kind = LayerKind::from_code(r.u8(&what)?)?;
            let activation = Activation::from_code(r.u8(&what)?)?;
            let input_size = r.u16(&what)? as usize;
            let output_size = r.u16(&what)? as usize;
            specs.push(LayerSpec {
                kind,
                activation,
                input_size,
                output_size,
            });
        }
        let actual_units: usize = specs.iter().map(|s| s.output_size).sum();
        if actual_units as u32 != declared_units {
            return Err(ModelError::UnitCount {
                declared: declared_units,
                actual: actual_units as u32,
            });
        }
        let topology = Topology::from_specs(&specs)?;

        let mut layers = Vec::with_capacity(layer_count);
        for (i, spec) in specs.iter().enumerate() {
            let mut tensors = Vec::new();
            for (j, &len) in spec.tensor_lengths().iter().enumerate() {
                let name = tensor_name(i, spec.kind, j);
                let scale = f32::from_le_bytes(
                    r.take(4, &format!("{name} scale"))?.try_into().expect("4 bytes"),
                );
                if !scale.is_finite() || scale < 0.0 {
                    return Err(ModelError::NonFiniteWeight(name));
                }
                let codes: Vec<i8> = r.take(len, &name)?.iter().map(|&b| b as i8).collect();
                if let Some(&bad) = codes.iter().find(|&&c| c == i8::MIN) {
                    return Err(ModelError::WeightRange {
                        tensor: name,
                        value: bad,
                    });
                }
                tensors.push(Tensor::from_quantized(QuantizedTensor { scale, codes }));
            }
            layers.push(Layer::from_tensors(*spec, tensors));
        }
        if r.pos != bytes.len() {
            return Err(ModelError::TrailingBytes(bytes.len() - r.pos));
        }
        Ok(Self {
            feature_version,
            band_edges,
            topology,
            layers,
        })
    }
}

fn standard_edges() -> [u16; EDGE_COUNT] {
    *BandLayout::build(&FrameConfig::STANDARD)
        .expect("standard layout")
        .edges()
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(ModelError::Truncated {
                what: what.to_string(),
            }),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8, ModelError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, ModelError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self, what: &str) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_counts() {
        let m = Model::zeros(Topology::REFERENCE);
        assert_eq!(m.total_units(), 215);
        assert_eq!(m.hidden_layer_count(), 4);
        assert_eq!(m.weight_count(), 87_503);
        let largest = m.layers().iter().map(|l| l.spec().output_size).max();
        assert_eq!(largest, Some(96));
    }

    #[test]
    fn header_layout() {
        let bytes = Model::zeros(Topology::REFERENCE).to_bytes();
        assert_eq!(&bytes[..4], b"RNND");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), FEATURE_VERSION);
        assert_eq!(u16::from_le_bytes(bytes[12..14].try_into().unwrap()), 0);
        assert_eq!(u16::from_le_bytes(bytes[56..58].try_into().unwrap()), 480);
        assert_eq!(u16::from_le_bytes(bytes[58..60].try_into().unwrap()), 6);
        assert_eq!(u32::from_le_bytes(bytes[60..64].try_into().unwrap()), 215);
        // kind, activation, in, out of the first layer
        assert_eq!(&bytes[64..70], &[0, 0, 42, 0, 24, 0]);
        let tensors: usize = Topology::REFERENCE
            .layer_specs()
            .iter()
            .map(|s| s.tensor_lengths().len())
            .sum();
        assert_eq!(bytes.len(), 64 + 6 * 6 + 4 * tensors + 87_503);
    }

    #[test]
    fn round_trip_preserves_weights() {
        let m = Model::random(Topology::REFERENCE, 3, 1.0);
        let bytes = m.to_bytes();
        let loaded = Model::from_bytes(&bytes).unwrap();
        assert_eq!(loaded, m.quantized());
        assert_eq!(loaded.to_bytes(), bytes);
    }

    #[test]
    fn small_topologies_load() {
        let topo = Topology {
            input_dense: 3,
            vad_gru: 2,
            noise_gru: 4,
            denoise_gru: 5,
            ..Topology::REFERENCE
        };
        let m = Model::random(topo, 1, 1.0);
        let loaded = Model::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(loaded.topology(), &topo);
    }

    #[test]
    fn rejects_bad_files() {
        let bytes = Model::random(Topology::REFERENCE, 4, 1.0).to_bytes();

        let mut b = bytes.clone();
        b[0] = b'X';
        assert!(matches!(Model::from_bytes(&b), Err(ModelError::BadMagic { .. })));

        let mut b = bytes.clone();
        b[4] = 2;
        assert_eq!(
            Model::from_bytes(&b),
            Err(ModelError::UnsupportedVersion { found: 2, expected: 1 })
        );

        let mut b = bytes.clone();
        b[8] = 7;
        assert!(matches!(Model::from_bytes(&b), Err(ModelError::FeatureVersion { found: 7, .. })));

        let mut b = bytes.clone();
        b[14] = 5;
        assert_eq!(Model::from_bytes(&b), Err(ModelError::BandTable));

        let mut b = bytes.clone();
        b[60] = 0;
        assert!(matches!(Model::from_bytes(&b), Err(ModelError::UnitCount { declared: 0, actual: 215 })));

        let mut b = bytes.clone();
        b[65] = 9;
        assert_eq!(Model::from_bytes(&b), Err(ModelError::UnknownActivation(9)));

        let mut b = bytes.clone();
        b[64] = 1;
        assert!(matches!(Model::from_bytes(&b), Err(ModelError::Topology(_))));

        let mut b = bytes.clone();
        b.push(0);
        assert_eq!(Model::from_bytes(&b), Err(ModelError::TrailingBytes(1)));

        // Cut inside the first tensor's payload.
        let b = &bytes[..100 + 4];
        match Model::from_bytes(b) {
            Err(ModelError::Truncated { what }) => {
                assert_eq!(what, "layer 0 (input dense) weights")
            }
            other => panic!("{other:?}"),
        }
        // Cut inside a GRU recurrent matrix.
        let prefix = 64 + 36 + (4 + 42 * 24) + (4 + 24) + 3 * (4 + 24 * 24) + 4 + 10;
        match Model::from_bytes(&bytes[..prefix]) {
            Err(ModelError::Truncated { what }) => {
                assert_eq!(what, "layer 1 (vad gru) recurrent weights, update gate")
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(Model::from_bytes(&bytes[..2]), Err(ModelError::Truncated { .. })));
    }

    #[test]
    fn rejects_minus_128_code() {
        let mut bytes = Model::zeros(Topology::REFERENCE).to_bytes();
        bytes[64 + 36 + 4] = 0x80;
        assert!(matches!(Model::from_bytes(&bytes), Err(ModelError::WeightRange { .. })));
    }

    #[test]
    fn zero_model_has_zero_scales() {
        let bytes = Model::zeros(Topology::REFERENCE).to_bytes();
        let m = Model::from_bytes(&bytes).unwrap();
        for l in m.layers() {
            for t in l.tensors() {
                assert_eq!(t.quantization().unwrap().scale, 0.0);
            }
        }
    }
}
