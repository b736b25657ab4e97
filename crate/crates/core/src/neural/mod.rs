//! The two fixed value-network architectures with hand-written
//! reverse-mode gradients: a self-attention encoder over tile embeddings
//! and a convolutional baseline that assumes grid topology. Plus Adam,
//! model serialization and a finite-difference gradient checker.
//!
//! Both networks map a tile encoding to a scalar in (-1, 1), the
//! expected outcome for the player to move.

pub mod adam;
pub mod attention;
pub mod conv;
pub mod evaluator;
pub mod gradcheck;
pub mod io;
pub mod tensor;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::datagen::TrainingSample;
use crate::games::{GameSpec, TileEncoding};
use crate::scalar::Scalar;

pub use adam::{AdamConfig, AdamState};
pub use evaluator::NetEvaluator;
pub use gradcheck::{gradient_check, GradCheckReport};
pub use tensor::Tensor;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("embedding dimension must be even for sinusoidal positions")]
    OddDimension,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("convolutional architecture requires a game with grid dimensions")]
    NoGridTopology,
    #[error("batch must be non-empty")]
    EmptyBatch,
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How tile positions enter the attention network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PositionalMode {
    Sinusoidal,
    Learned,
}

/// Size bundle for the network presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetPreset {
    Default,
    /// Sized for the short-training regime.
    Small,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttentionNetConfig {
    pub embed_dim: usize,
    pub heads: usize,
    pub layers: usize,
    pub ff_dim: usize,
    pub positional_mode: PositionalMode,
    pub feature_dim: usize,
    pub max_tiles: usize,
}

impl AttentionNetConfig {
    pub fn for_game(spec: &GameSpec, preset: NetPreset, positional_mode: PositionalMode) -> Self {
        let (embed_dim, heads, layers, ff_dim) = match preset {
            NetPreset::Default => (64, 4, 3, 128),
            NetPreset::Small => (32, 2, 2, 64),
        };
        AttentionNetConfig {
            embed_dim,
            heads,
            layers,
            ff_dim,
            positional_mode,
            feature_dim: spec.feature_dim,
            max_tiles: spec.tile_count,
        }
    }

    fn validate(&self) -> Result<(), NeuralError> {
        if self.embed_dim == 0 || self.heads == 0 || self.layers == 0 || self.ff_dim == 0 {
            return Err(NeuralError::InvalidConfig(
                "attention dims must be positive".into(),
            ));
        }
        if !self.embed_dim.is_multiple_of(2) {
            return Err(NeuralError::OddDimension);
        }
        if !self.embed_dim.is_multiple_of(self.heads) {
            return Err(NeuralError::InvalidConfig(format!(
                "heads ({}) must divide embed_dim ({})",
                self.heads, self.embed_dim
            )));
        }
        if self.feature_dim == 0 || self.max_tiles == 0 {
            return Err(NeuralError::InvalidConfig(
                "feature_dim and max_tiles must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvNetConfig {
    pub channels: usize,
    pub conv_layers: usize,
    /// Fixed 3x3 kernels.
    pub kernel: usize,
    pub grid: (usize, usize),
    pub feature_dim: usize,
}

impl ConvNetConfig {
    pub fn for_game(spec: &GameSpec, preset: NetPreset) -> Result<Self, NeuralError> {
        let grid = spec.grid_dims.ok_or(NeuralError::NoGridTopology)?;
        let (channels, conv_layers) = match preset {
            NetPreset::Default => (32, 4),
            NetPreset::Small => (16, 3),
        };
        Ok(ConvNetConfig {
            channels,
            conv_layers,
            kernel: 3,
            grid,
            feature_dim: spec.feature_dim,
        })
    }

    fn validate(&self) -> Result<(), NeuralError> {
        if self.channels == 0 || self.conv_layers == 0 {
            return Err(NeuralError::InvalidConfig(
                "conv dims must be positive".into(),
            ));
        }
        if self.kernel != 3 {
            return Err(NeuralError::InvalidConfig("kernel is fixed at 3x3".into()));
        }
        if self.grid.0 == 0 || self.grid.1 == 0 {
            return Err(NeuralError::NoGridTopology);
        }
        if self.feature_dim == 0 {
            return Err(NeuralError::InvalidConfig(
                "feature_dim must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Which network this is, together with its full shape description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Architecture {
    Attention(AttentionNetConfig),
    Conv(ConvNetConfig),
}

impl Architecture {
    pub fn validate(&self) -> Result<(), NeuralError> {
        match self {
            Architecture::Attention(c) => c.validate(),
            Architecture::Conv(c) => c.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Architecture::Attention(_) => "attention",
            Architecture::Conv(_) => "conv",
        }
    }
}

/// Parameter initialization rule.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Init {
    Zero,
    One,
    Uniform { fan_in: usize, fan_out: usize },
}

/// One named parameter slot in an architecture's schema.
#[derive(Clone, Debug)]
pub(crate) struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, init: Init) -> ParamSpec {
        ParamSpec {
            name: name.into(),
            shape,
            init,
        }
    }
}

/// Ordered, named collection of parameter tensors. Order is the
/// architecture's canonical schema order and is shared by gradients,
/// optimizer state and the model file.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet<S> {
    pub(crate) names: Vec<String>,
    pub(crate) tensors: Vec<Tensor<S>>,
}

impl<S: Scalar> ParamSet<S> {
    pub(crate) fn from_schema(schema: &[ParamSpec]) -> ParamSet<S> {
        ParamSet {
            names: schema.iter().map(|p| p.name.clone()).collect(),
            tensors: schema
                .iter()
                .map(|p| Tensor::zeros(p.shape.clone()))
                .collect(),
        }
    }

    pub fn zeros_like(&self) -> ParamSet<S> {
        ParamSet {
            names: self.names.clone(),
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor::zeros(t.shape().to_vec()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn value_count(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<S>)> {
        self.names
            .iter()
            .map(|n| n.as_str())
            .zip(self.tensors.iter())
    }

    #[inline]
    pub fn get(&self, i: usize) -> &Tensor<S> {
        &self.tensors[i]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize) -> &mut Tensor<S> {
        &mut self.tensors[i]
    }

    pub(crate) fn tensors_split_at_mut(
        &mut self,
        mid: usize,
    ) -> (&mut [Tensor<S>], &mut [Tensor<S>]) {
        self.tensors.split_at_mut(mid)
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn same_shape(&self, other: &ParamSet<S>) -> bool {
        self.len() == other.len()
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.shape() == b.shape())
    }

    /// Elementwise accumulate: self += other.
    pub fn add_assign(&mut self, other: &ParamSet<S>) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.values_mut().iter_mut().zip(b.values()) {
                *x += *y;
            }
        }
    }

    pub fn fill(&mut self, v: S) {
        self.tensors.iter_mut().for_each(|t| t.fill(v));
    }

    pub fn cast<T: Scalar>(&self) -> ParamSet<T> {
        ParamSet {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(|t| t.cast()).collect(),
        }
    }

    fn initialize(&mut self, schema: &[ParamSpec], seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (tensor, spec) in self.tensors.iter_mut().zip(schema) {
            match spec.init {
                Init::Zero => tensor.fill(S::zero()),
                Init::One => tensor.fill(S::one()),
                Init::Uniform { fan_in, fan_out } => {
                    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    for v in tensor.values_mut() {
                        *v = S::from_f64_lossy(rng.gen_range(-bound..bound));
                    }
                }
            }
        }
    }
}

/// Per-sample activation storage, reused across forward/backward calls.
#[allow(clippy::large_enum_variant)]
pub enum Workspace<S: Scalar> {
    Attention(attention::AttnWorkspace<S>),
    Conv(conv::ConvWorkspace<S>),
}

/// A value network: architecture descriptor plus parameter store.
#[derive(Clone, Debug)]
pub struct ValueNet<S: Scalar> {
    arch: Architecture,
    params: ParamSet<S>,
    /// Precomputed sinusoidal table for attention nets (empty in
    /// learned mode, where the table lives in `params`).
    sin_table: Option<Tensor<S>>,
}

impl<S: Scalar> ValueNet<S> {
    /// Builds a freshly initialized network. Deterministic per seed.
    pub fn new(arch: Architecture, seed: u64) -> Result<ValueNet<S>, NeuralError> {
        arch.validate()?;
        let schema = match &arch {
            Architecture::Attention(cfg) => attention::schema(cfg),
            Architecture::Conv(cfg) => conv::schema(cfg),
        };
        let mut params = ParamSet::from_schema(&schema);
        params.initialize(&schema, seed);
        let sin_table = match &arch {
            Architecture::Attention(cfg) if cfg.positional_mode == PositionalMode::Sinusoidal => {
                Some(sinusoidal_positions(cfg.max_tiles, cfg.embed_dim)?)
            }
            _ => None,
        };
        Ok(ValueNet {
            arch,
            params,
            sin_table,
        })
    }

    pub(crate) fn from_parts(
        arch: Architecture,
        params: ParamSet<S>,
    ) -> Result<ValueNet<S>, NeuralError> {
        arch.validate()?;
        let sin_table = match &arch {
            Architecture::Attention(cfg) if cfg.positional_mode == PositionalMode::Sinusoidal => {
                Some(sinusoidal_positions(cfg.max_tiles, cfg.embed_dim)?)
            }
            _ => None,
        };
        Ok(ValueNet {
            arch,
            params,
            sin_table,
        })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &ParamSet<S> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<S> {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.value_count()
    }

    /// Positional row source for attention nets.
    pub(crate) fn positional_rows(&self) -> &Tensor<S> {
        match (&self.arch, &self.sin_table) {
            (Architecture::Attention(cfg), Some(table)) => {
                debug_assert_eq!(cfg.positional_mode, PositionalMode::Sinusoidal);
                table
            }
            (Architecture::Attention(cfg), None) => {
                debug_assert_eq!(cfg.positional_mode, PositionalMode::Learned);
                self.params.get(attention::LEARNED_POS_INDEX)
            }
            _ => unreachable!("positional rows only exist for attention nets"),
        }
    }

    /// Allocates a workspace sized for this network.
    pub fn workspace(&self) -> Workspace<S> {
        match &self.arch {
            Architecture::Attention(cfg) => {
                Workspace::Attention(attention::AttnWorkspace::new(cfg))
            }
            Architecture::Conv(cfg) => Workspace::Conv(conv::ConvWorkspace::new(cfg)),
        }
    }

    /// Forward pass for one encoded position; the result is in (-1, 1)
    /// for the player to move. Activations stay in `ws` for `backward`.
    pub fn forward(&self, enc: &TileEncoding<S>, ws: &mut Workspace<S>) -> Result<S, NeuralError> {
        match (&self.arch, ws) {
            (Architecture::Attention(cfg), Workspace::Attention(ws)) => {
                attention::forward(cfg, &self.params, self.positional_rows(), enc, None, ws)
            }
            (Architecture::Conv(cfg), Workspace::Conv(ws)) => {
                conv::forward(cfg, &self.params, enc, ws)
            }
            _ => Err(NeuralError::ShapeMismatch(
                "workspace does not match architecture".into(),
            )),
        }
    }

    /// Attention forward with an explicit positional slot per input row
    /// (`slots[i]` is the positional row added to input row `i`). This
    /// is the hook for exercising the permutation-equivariance property;
    /// the plain `forward` uses the identity assignment.
    pub fn forward_with_position_slots(
        &self,
        enc: &TileEncoding<S>,
        slots: &[usize],
        ws: &mut Workspace<S>,
    ) -> Result<S, NeuralError> {
        match (&self.arch, ws) {
            (Architecture::Attention(cfg), Workspace::Attention(ws)) => attention::forward(
                cfg,
                &self.params,
                self.positional_rows(),
                enc,
                Some(slots),
                ws,
            ),
            _ => Err(NeuralError::ShapeMismatch(
                "position slots only apply to attention nets".into(),
            )),
        }
    }

    /// Accumulates dLoss/dParams into `grads` given dLoss/dOutput for
    /// the sample most recently run forward through `ws`.
    pub fn backward(&self, ws: &mut Workspace<S>, d_out: S, grads: &mut ParamSet<S>) {
        debug_assert!(grads.same_shape(&self.params));
        match (&self.arch, ws) {
            (Architecture::Attention(cfg), Workspace::Attention(ws)) => {
                attention::backward(cfg, &self.params, ws, d_out, grads)
            }
            (Architecture::Conv(cfg), Workspace::Conv(ws)) => {
                conv::backward(cfg, &self.params, ws, d_out, grads)
            }
            _ => panic!("workspace does not match architecture"),
        }
    }
}

/// Classic sinusoidal positional table: entry (pos, 2i) is
/// sin(pos / 10000^(2i/d)) and entry (pos, 2i+1) the matching cosine.
pub fn sinusoidal_positions<S: Scalar>(tiles: usize, dim: usize) -> Result<Tensor<S>, NeuralError> {
    if !dim.is_multiple_of(2) {
        return Err(NeuralError::OddDimension);
    }
    let mut out = Tensor::zeros(vec![tiles, dim]);
    let values = out.values_mut();
    for pos in 0..tiles {
        for i in 0..dim / 2 {
            let rate = (pos as f64) / 10000f64.powf(2.0 * i as f64 / dim as f64);
            values[pos * dim + 2 * i] = S::from_f64_lossy(rate.sin());
            values[pos * dim + 2 * i + 1] = S::from_f64_lossy(rate.cos());
        }
    }
    Ok(out)
}

/// Mean squared error of the batch plus exact gradients for every
/// parameter. Targets are the stored outcomes z.
pub fn loss_and_gradients<S: Scalar>(
    net: &ValueNet<S>,
    batch: &[TrainingSample<S>],
) -> Result<(S, ParamSet<S>), NeuralError> {
    if batch.is_empty() {
        return Err(NeuralError::EmptyBatch);
    }
    let mut ws = net.workspace();
    let mut grads = net.params().zeros_like();
    let scale = S::one() / S::from_f64_lossy(batch.len() as f64);
    let loss = accumulate_loss_and_gradients(net, batch, &mut ws, &mut grads, scale)?;
    Ok((loss * scale, grads))
}

/// Shared inner loop: accumulates `scale`-weighted gradients for every
/// sample into `grads` and returns the UNSCALED sum of squared errors.
pub fn accumulate_loss_and_gradients<'a, S: Scalar>(
    net: &ValueNet<S>,
    batch: impl IntoIterator<Item = &'a TrainingSample<S>>,
    ws: &mut Workspace<S>,
    grads: &mut ParamSet<S>,
    scale: S,
) -> Result<S, NeuralError> {
    let two = S::from_f64_lossy(2.0);
    let mut sum = S::zero();
    for sample in batch {
        let v = net.forward(&sample.encoding, ws)?;
        let err = v - sample.target;
        sum += err * err;
        net.backward(ws, two * err * scale, grads);
    }
    Ok(sum)
}

/// Mean squared error of the batch without gradients.
pub fn batch_loss<S: Scalar>(
    net: &ValueNet<S>,
    batch: &[TrainingSample<S>],
    ws: &mut Workspace<S>,
) -> Result<S, NeuralError> {
    if batch.is_empty() {
        return Err(NeuralError::EmptyBatch);
    }
    let mut sum = S::zero();
    for sample in batch {
        let v = net.forward(&sample.encoding, ws)?;
        let err = v - sample.target;
        sum += err * err;
    }
    Ok(sum / S::from_f64_lossy(batch.len() as f64))
}
