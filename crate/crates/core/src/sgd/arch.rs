use std::ops::Range;

use crate::error::{Error, Result};

/// Element-wise nonlinearity applied after a hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Relu, Activation::Tanh, Activation::Identity];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == name)
            .ok_or_else(|| Error::NotWhitelisted(name.to_owned()))
    }

    pub fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Identity => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.code() == code)
    }

    #[inline]
    pub(crate) fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `y = act(z)`.
    #[inline]
    pub(crate) fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Training objective. Both are averaged over the batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// Softmax over the output logits followed by negative log-likelihood.
    CrossEntropySoftmax,
    /// Sum over outputs of `(y_hat - y)^2` (no 1/2 factor).
    SquaredError,
}

impl LossKind {
    pub const ALL: [LossKind; 2] = [LossKind::CrossEntropySoftmax, LossKind::SquaredError];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::CrossEntropySoftmax => "cross_entropy_softmax",
            LossKind::SquaredError => "squared_error",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.name() == name)
            .ok_or_else(|| Error::NotWhitelisted(name.to_owned()))
    }
}

/// Shape of a dense feed-forward network.
///
/// `layer_dims = [d_in, h_1, ..., d_out]`; one activation per hidden layer,
/// the output layer is always affine (logits / regression output).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelArch {
    layer_dims: Vec<usize>,
    activations: Vec<Activation>,
    loss: LossKind,
}

impl ModelArch {
    pub fn new(
        layer_dims: Vec<usize>,
        activations: Vec<Activation>,
        loss: LossKind,
    ) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::InvalidArch(format!(
                "need at least 2 layer dims, got {}",
                layer_dims.len()
            )));
        }
        if layer_dims.contains(&0) {
            return Err(Error::InvalidArch("all layer dims must be >= 1".into()));
        }
        if activations.len() != layer_dims.len() - 2 {
            return Err(Error::InvalidArch(format!(
                "expected {} hidden activations, got {}",
                layer_dims.len() - 2,
                activations.len()
            )));
        }
        Ok(Self {
            layer_dims,
            activations,
            loss,
        })
    }

    /// Same activation on every hidden layer.
    pub fn mlp(layer_dims: &[usize], activation: Activation, loss: LossKind) -> Result<Self> {
        let hidden = layer_dims.len().saturating_sub(2);
        Self::new(layer_dims.to_vec(), vec![activation; hidden], loss)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn with_loss(&self, loss: LossKind) -> Self {
        Self {
            loss,
            ..self.clone()
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    /// Number of affine layers.
    pub fn num_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    /// Activation after affine layer `l` (identity for the output layer).
    pub fn activation_of(&self, l: usize) -> Activation {
        self.activations
            .get(l)
            .copied()
            .unwrap_or(Activation::Identity)
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Offsets of each layer's weight matrix (row-major `out x in`) and bias.
    pub fn layout(&self) -> Vec<LayerSlice> {
        layout_for_dims(&self.layer_dims)
    }
}

/// Parameter layout of a dense network with these layer widths.
pub fn layout_for_dims(layer_dims: &[usize]) -> Vec<LayerSlice> {
    let mut offset = 0;
    layer_dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = offset..offset + fan_in * fan_out;
            let biases = weights.end..weights.end + fan_out;
            offset = biases.end;
            LayerSlice {
                fan_in,
                fan_out,
                weights,
                biases,
            }
        })
        .collect()
}

/// Location of one layer inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerSlice {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Range<usize>,
    pub biases: Range<usize>,
}

/// Flat parameter vector together with its per-layer layout.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: Vec<f64>,
    layout: Vec<LayerSlice>,
}

impl WeightVector {
    pub fn zeros(arch: &ModelArch) -> Self {
        Self {
            values: vec![0.0; arch.param_count()],
            layout: arch.layout(),
        }
    }

    /// Builds a vector against an explicit layout (e.g. decoded from a file).
    pub fn from_layout(layout: Vec<LayerSlice>, values: Vec<f64>) -> Result<Self> {
        let expected = layout.last().map_or(0, |l| l.biases.end);
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "weight vector has {} values, layout needs {expected}",
                values.len()
            )));
        }
        Ok(Self { values, layout })
    }

    pub fn from_values(arch: &ModelArch, values: Vec<f64>) -> Result<Self> {
        if values.len() != arch.param_count() {
            return Err(Error::Shape(format!(
                "weight vector has {} values, architecture needs {}",
                values.len(),
                arch.param_count()
            )));
        }
        Ok(Self {
            values,
            layout: arch.layout(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &[LayerSlice] {
        &self.layout
    }

    pub fn layer_weights(&self, l: usize) -> &[f64] {
        &self.values[self.layout[l].weights.clone()]
    }

    pub fn layer_biases(&self, l: usize) -> &[f64] {
        &self.values[self.layout[l].biases.clone()]
    }

    pub fn matches(&self, arch: &ModelArch) -> bool {
        self.layout == arch.layout()
    }

    /// Same layout, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self {
            values,
            layout: self.layout.clone(),
        }
    }

    /// `self + scale * other`, elementwise.
    pub fn axpy(&self, scale: f64, other: &WeightVector) -> Self {
        assert_eq!(self.len(), other.len());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + scale * b)
            .collect();
        self.with_values(values)
    }

    pub fn sub(&self, other: &WeightVector) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn rms(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}
