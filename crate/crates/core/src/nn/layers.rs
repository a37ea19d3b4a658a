//! Dense and GRU kernels over dequantized `f32` weights.

use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Relu,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Tanh => 0,
            Activation::Sigmoid => 1,
            Activation::Relu => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self, ModelError> {
        match code {
            0 => Ok(Activation::Tanh),
            1 => Ok(Activation::Sigmoid),
            2 => Ok(Activation::Relu),
            other => Err(ModelError::UnknownActivation(other)),
        }
    }

    #[inline]
    pub fn apply(self, x: f32) -> f32 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Relu => x.max(0.0),
        }
    }
}

#[inline]
pub fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Dense,
    Gru,
}

impl LayerKind {
    pub fn code(self) -> u8 {
        match self {
            LayerKind::Dense => 0,
            LayerKind::Gru => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self, ModelError> {
        match code {
            0 => Ok(LayerKind::Dense),
            1 => Ok(LayerKind::Gru),
            other => Err(ModelError::UnknownLayerKind(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub activation: Activation,
    pub input_size: usize,
    pub output_size: usize,
}

impl LayerSpec {
    pub fn dense(input_size: usize, output_size: usize, activation: Activation) -> Self {
        Self {
            kind: LayerKind::Dense,
            activation,
            input_size,
            output_size,
        }
    }

    pub fn gru(input_size: usize, output_size: usize, activation: Activation) -> Self {
        Self {
            kind: LayerKind::Gru,
            activation,
            input_size,
            output_size,
        }
    }

    /// Lengths of the tensors this layer carries, in file order.
    pub fn tensor_lengths(&self) -> Vec<usize> {
        let (i, o) = (self.input_size, self.output_size);
        match self.kind {
            LayerKind::Dense => vec![o * i, o],
            LayerKind::Gru => vec![o * i, o * i, o * i, o * o, o * o, o * o, o, o, o],
        }
    }

    pub fn weight_count(&self) -> usize {
        self.tensor_lengths().iter().sum()
    }

    /// Multiply-adds for one forward step.
    pub fn multiply_adds(&self) -> usize {
        let (i, o) = (self.input_size, self.output_size);
        match self.kind {
            LayerKind::Dense => o * i,
            LayerKind::Gru => 3 * (o * i + o * o),
        }
    }
}

/// Symmetric int8 codes with one scale: `weight = code × scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTensor {
    pub scale: f32,
    pub codes: Vec<i8>,
}

impl QuantizedTensor {
    /// `scale = max|w| / 127`, codes rounded to nearest.
    pub fn quantize(values: &[f32]) -> Self {
        let peak = values.iter().fold(0.0f32, |m, v| m.max(v.abs()));
        let scale = peak / 127.0;
        let codes = if scale > 0.0 {
            values
                .iter()
                .map(|v| (v / scale).round().clamp(-127.0, 127.0) as i8)
                .collect()
        } else {
            vec![0; values.len()]
        };
        Self { scale, codes }
    }

    pub fn dequantize(&self) -> Vec<f32> {
        self.codes.iter().map(|&c| c as f32 * self.scale).collect()
    }
}

/// Weights in inference form, plus the int8 codes they came from if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    values: Vec<f32>,
    quantized: Option<QuantizedTensor>,
}

impl Tensor {
    pub fn from_f32(values: Vec<f32>) -> Self {
        Self {
            values,
            quantized: None,
        }
    }

    pub fn from_quantized(q: QuantizedTensor) -> Self {
        Self {
            values: q.dequantize(),
            quantized: Some(q),
        }
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn quantization(&self) -> Option<&QuantizedTensor> {
        self.quantized.as_ref()
    }

    /// Existing codes if present, otherwise a fresh quantization.
    pub fn to_quantized(&self) -> QuantizedTensor {
        self.quantized
            .clone()
            .unwrap_or_else(|| QuantizedTensor::quantize(&self.values))
    }

    pub fn quantized(&self) -> Tensor {
        Tensor::from_quantized(self.to_quantized())
    }
}

/// `activation(W·x + b)`, `W` row-major `output × input`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub spec: LayerSpec,
    pub weights: Tensor,
    pub bias: Tensor,
}

/// Gate order is update (z), reset (r), candidate (h).
#[derive(Debug, Clone, PartialEq)]
pub struct GruLayer {
    pub spec: LayerSpec,
    pub input_weights: [Tensor; 3],
    pub recurrent_weights: [Tensor; 3],
    pub bias: [Tensor; 3],
}

pub const GATE_NAMES: [&str; 3] = ["update gate", "reset gate", "candidate"];

#[inline]
fn dot(row: &[f32], x: &[f32]) -> f32 {
    row.iter().zip(x).map(|(a, b)| a * b).sum()
}

pub fn dense_forward(layer: &DenseLayer, input: &[f32], output: &mut [f32]) {
    let LayerSpec {
        input_size: n_in,
        output_size: n_out,
        activation,
        ..
    } = layer.spec;
    assert_eq!(input.len(), n_in, "dense input length");
    assert_eq!(output.len(), n_out, "dense output length");
    let w = layer.weights.values();
    let b = layer.bias.values();
    for (o, out) in output.iter_mut().enumerate() {
        *out = activation.apply(b[o] + dot(&w[o * n_in..(o + 1) * n_in], input));
    }
}

/// One GRU step. `state` holds `h` on entry and `h'` on return.
///
/// `z = σ(W_z x + U_z h + b_z)`, `r = σ(W_r x + U_r h + b_r)`,
/// `h̃ = act(W_h x + U_h (r ⊙ h) + b_h)`, `h' = z ⊙ h + (1 − z) ⊙ h̃`.
pub fn gru_forward(layer: &GruLayer, state: &mut [f32], input: &[f32]) {
    let n_in = layer.spec.input_size;
    let n = layer.spec.output_size;
    assert_eq!(input.len(), n_in, "gru input length");
    assert_eq!(state.len(), n, "gru state length");
    let [wz, wr, wh] = &layer.input_weights;
    let [uz, ur, uh] = &layer.recurrent_weights;
    let [bz, br, bh] = &layer.bias;

    let mut z = vec![0.0f32; n];
    let mut reset_state = vec![0.0f32; n];
    for i in 0..n {
        let win = i * n_in..(i + 1) * n_in;
        let wrec = i * n..(i + 1) * n;
        z[i] = sigmoid(
            bz.values()[i] + dot(&wz.values()[win.clone()], input) + dot(&uz.values()[wrec.clone()], state),
        );
        let r = sigmoid(br.values()[i] + dot(&wr.values()[win], input) + dot(&ur.values()[wrec], state));
        reset_state[i] = r * state[i];
    }
    let act = layer.spec.activation;
    let mut next = vec![0.0f32; n];
    for i in 0..n {
        let cand = act.apply(
            bh.values()[i]
                + dot(&wh.values()[i * n_in..(i + 1) * n_in], input)
                + dot(&uh.values()[i * n..(i + 1) * n], &reset_state),
        );
        next[i] = z[i] * state[i] + (1.0 - z[i]) * cand;
    }
    state.copy_from_slice(&next);
}
