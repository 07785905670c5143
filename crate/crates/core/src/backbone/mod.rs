//! Small parameterized networks for frame averaging to wrap: MLPs, set
//! networks, message passing and GIN with node identifiers.

mod bound;
mod check;
mod checkpoint;
mod layers;

pub use bound::{encode_geometric, encode_graph, encode_padded_graph, encode_points, BackboneInput, BoundBackbone};
pub use check::{grad_check, grad_check_fn, GradCheckReport};
pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointHeader, CHECKPOINT_VERSION,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::Permutation;
use crate::numeric::{Matrix, Rng};

use layers::{backward, forward};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackboneError {
    #[error("layer {layer}: expected width {expected}, found {found}")]
    WidthMismatch { layer: usize, expected: usize, found: usize },
    #[error("layer {layer}: widths must be positive")]
    ZeroWidth { layer: usize },
    #[error("parameter vector has {found} entries, backbone needs {expected}")]
    ParamCount { expected: usize, found: usize },
    #[error("input has {found} nodes, identifiers are padded to {max}")]
    TooManyNodes { found: usize, max: usize },
    #[error("layer {layer} needs an adjacency matrix")]
    MissingAdjacency { layer: usize },
    #[error("adjacency is {found:?}, expected {expected:?}")]
    AdjacencyShape { expected: (usize, usize), found: (usize, usize) },
    #[error("upstream gradient is {found:?}, output is {expected:?}")]
    UpstreamShape { expected: (usize, usize), found: (usize, usize) },
    #[error("skip connection needs {needed} input columns, input has {found}")]
    SkipWidth { needed: usize, found: usize },
    #[error("declared {tag:?} symmetry fails a random check (violation {violation:e})")]
    SymmetryViolated { tag: Symmetry, violation: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    Silu,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Silu => z / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative at `z`; ReLU takes 0 at the kink.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Silu => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 + z * (1.0 - s))
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerKind {
    /// Flattens the `n × w` state row-major and applies one affine map; `in_width = n·w`.
    Dense,
    /// The same affine map on every row.
    SharedDense,
    /// Appends the column-wise max to every row; `out_width = 2·in_width`, no parameters.
    MaxPoolConcat,
    /// `h_i ← φ_h(h_i, Σ_{j∈N(i)} φ_e(h_i, h_j, a_ij))` with two-layer `φ_e`, `φ_h`.
    MessagePassing,
    /// `H ← ν(((1 + ε) I + A) H W + 1bᵀ)` with a learned scalar `ε`.
    GinId,
    /// Column sums, giving one row; no parameters.
    SumReadout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_width: usize,
    pub out_width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(kind: LayerKind, in_width: usize, out_width: usize, activation: Activation) -> Self {
        LayerSpec { kind, in_width, out_width, activation }
    }

    /// `(fan_in, fan_out)` of each affine block, in parameter order.
    pub fn affine_blocks(&self) -> Vec<(usize, usize)> {
        let (w, o) = (self.in_width, self.out_width);
        match self.kind {
            LayerKind::Dense | LayerKind::SharedDense | LayerKind::GinId => vec![(w, o)],
            LayerKind::MessagePassing => vec![(2 * w + 1, o), (o, o), (w + o, o), (o, o)],
            LayerKind::MaxPoolConcat | LayerKind::SumReadout => vec![],
        }
    }

    pub fn param_count(&self) -> usize {
        self.affine_blocks().iter().map(|(i, o)| i * o + o).sum::<usize>() + self.scalar_params()
    }

    /// Trailing scalars after the affine blocks: the self-weight `ε` of a GIN layer.
    pub fn scalar_params(&self) -> usize {
        usize::from(self.kind == LayerKind::GinId)
    }

    fn needs_adjacency(&self) -> bool {
        matches!(self.kind, LayerKind::MessagePassing | LayerKind::GinId)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    None,
    SnInvariant,
    SnEquivariant,
}

/// Flat parameters; layer `i` owns `data[offsets[i]..offsets[i + 1]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    data: Vec<f64>,
    offsets: Vec<usize>,
}

impl ParamVector {
    pub fn zeros(specs: &[LayerSpec]) -> Self {
        let mut offsets = vec![0];
        for s in specs {
            offsets.push(offsets.last().copied().unwrap_or(0) + s.param_count());
        }
        ParamVector { data: vec![0.0; *offsets.last().unwrap_or(&0)], offsets }
    }

    pub fn from_vec(specs: &[LayerSpec], data: Vec<f64>) -> Result<Self, BackboneError> {
        let mut p = ParamVector::zeros(specs);
        if p.data.len() != data.len() {
            return Err(BackboneError::ParamCount { expected: p.data.len(), found: data.len() });
        }
        p.data = data;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn layer(&self, i: usize) -> &[f64] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

const GIN_EPS_INIT: f64 = 0.5;

/// Glorot-uniform weights in `±sqrt(6/(fan_in + fan_out))`, zero biases,
/// GIN self-weights `ε` uniform in `±0.5`.
pub fn init_params(specs: &[LayerSpec], rng: &mut Rng) -> ParamVector {
    let mut p = ParamVector::zeros(specs);
    let mut at = 0;
    for s in specs {
        for (fan_in, fan_out) in s.affine_blocks() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in &mut p.data[at..at + fan_in * fan_out] {
                *v = rng.uniform_range(-limit, limit);
            }
            at += fan_in * fan_out + fan_out;
        }
        for v in &mut p.data[at..at + s.scalar_params()] {
            *v = rng.uniform_range(-GIN_EPS_INIT, GIN_EPS_INIT);
        }
        at += s.scalar_params();
    }
    p
}

/// `params − lr·grad`.
pub fn sgd_step(params: &ParamVector, grad: &[f64], lr: f64) -> Result<ParamVector, BackboneError> {
    if grad.len() != params.len() {
        return Err(BackboneError::ParamCount { expected: params.len(), found: grad.len() });
    }
    let data = params.data.iter().zip(grad).map(|(p, g)| p - lr * g).collect();
    Ok(ParamVector { data, offsets: params.offsets.clone() })
}

/// A stack of layers plus optional identifier columns and skip connection.
#[derive(Clone, Debug, PartialEq)]
pub struct Backbone {
    specs: Vec<LayerSpec>,
    symmetry: Symmetry,
    identifiers: Option<usize>,
    skip: bool,
}

const SYMMETRY_SEED: u64 = 0x5e7_c4ec;
const SYMMETRY_TRIALS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-10;

impl Backbone {
    /// Validates the width chain and, for a symmetric tag, checks the tag
    /// against 100 random relabelings of a random input.
    pub fn new(specs: Vec<LayerSpec>, symmetry: Symmetry) -> Result<Self, BackboneError> {
        Backbone { specs, symmetry, identifiers: None, skip: false }.validated()
    }

    /// Appends the `n × max_n` identity (zero-padded) to the input features.
    /// Identifiers break node symmetry, so the tag becomes `None`.
    pub fn with_identifiers(mut self, max_n: usize) -> Result<Self, BackboneError> {
        self.identifiers = Some(max_n);
        self.symmetry = Symmetry::None;
        self.validated()
    }

    /// Adds the first `out_width` input columns to the output.
    pub fn with_skip(mut self) -> Result<Self, BackboneError> {
        self.skip = true;
        self.validated()
    }

    fn validated(self) -> Result<Self, BackboneError> {
        let mut width: Option<usize> = None;
        for (layer, s) in self.specs.iter().enumerate() {
            if s.in_width == 0 || s.out_width == 0 {
                return Err(BackboneError::ZeroWidth { layer });
            }
            let expected_out = match s.kind {
                LayerKind::MaxPoolConcat => 2 * s.in_width,
                LayerKind::SumReadout => s.in_width,
                _ => s.out_width,
            };
            if s.out_width != expected_out {
                return Err(BackboneError::WidthMismatch { layer, expected: expected_out, found: s.out_width });
            }
            if let Some(w) = width {
                if s.kind != LayerKind::Dense && s.in_width != w {
                    return Err(BackboneError::WidthMismatch { layer, expected: w, found: s.in_width });
                }
            }
            width = Some(s.out_width);
        }
        if self.symmetry != Symmetry::None {
            self.verify_symmetry()?;
        }
        Ok(self)
    }

    fn verify_symmetry(&self) -> Result<(), BackboneError> {
        let mut rng = Rng::new(SYMMETRY_SEED);
        let params = self.random_params(&mut rng);
        let n = 5;
        let input = self.random_input(n, &mut rng);
        let base = self.forward(&params, &input)?;
        let scale = base.max_abs().max(1.0);
        let mut worst = 0.0f64;
        for _ in 0..SYMMETRY_TRIALS {
            let p = Permutation::from_map_unchecked(rng.permutation_map(n));
            let moved = input.permuted(&p).expect("input shapes are consistent");
            let out = self.forward(&params, &moved)?;
            let expected = match self.symmetry {
                Symmetry::SnEquivariant => p.permute_rows(&base).map_err(|_| BackboneError::WidthMismatch {
                    layer: self.specs.len(),
                    expected: n,
                    found: base.rows(),
                })?,
                _ => base.clone(),
            };
            if out.shape() != expected.shape() {
                return Err(BackboneError::SymmetryViolated { tag: self.symmetry, violation: f64::INFINITY });
            }
            worst = worst.max(out.sub(&expected).max_abs() / scale);
        }
        if worst > SYMMETRY_TOL {
            return Err(BackboneError::SymmetryViolated { tag: self.symmetry, violation: worst });
        }
        Ok(())
    }

    /// Random weights and biases, so that symmetry checks exercise every term.
    fn random_params(&self, rng: &mut Rng) -> ParamVector {
        let mut p = ParamVector::zeros(&self.specs);
        p.data.iter_mut().for_each(|v| *v = rng.normal() * 0.5);
        p
    }

    fn random_input(&self, n: usize, rng: &mut Rng) -> BackboneInput {
        let w = self.feature_width(n);
        let features = rng.normal_matrix(n, w);
        let adjacency = self.specs.iter().any(LayerSpec::needs_adjacency).then(|| {
            let mut a = Matrix::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.uniform() < 0.5 {
                        let v = rng.uniform_range(0.5, 1.5);
                        a[(i, j)] = v;
                        a[(j, i)] = v;
                    }
                }
            }
            a
        });
        BackboneInput { features, adjacency }
    }

    /// Input feature width this backbone expects for `n` nodes, identifiers excluded.
    pub fn feature_width(&self, n: usize) -> usize {
        let first = match self.specs.first() {
            Some(s) if s.kind == LayerKind::Dense => s.in_width / n.max(1),
            Some(s) => s.in_width,
            None => 1,
        };
        first.saturating_sub(self.identifiers.unwrap_or(0))
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn identifiers(&self) -> Option<usize> {
        self.identifiers
    }

    pub fn skip(&self) -> bool {
        self.skip
    }

    pub fn param_count(&self) -> usize {
        self.specs.iter().map(LayerSpec::param_count).sum()
    }

    pub fn init_params(&self, rng: &mut Rng) -> ParamVector {
        init_params(&self.specs, rng)
    }

    pub fn zero_params(&self) -> ParamVector {
        ParamVector::zeros(&self.specs)
    }

    fn check_params(&self, params: &ParamVector) -> Result<(), BackboneError> {
        if params.len() != self.param_count() {
            return Err(BackboneError::ParamCount { expected: self.param_count(), found: params.len() });
        }
        Ok(())
    }

    pub fn forward(&self, params: &ParamVector, input: &BackboneInput) -> Result<Matrix, BackboneError> {
        self.check_params(params)?;
        Ok(forward(self, params.as_slice(), input)?.output)
    }

    /// `∂⟨upstream, Φ(input)⟩/∂θ`.
    pub fn backward(
        &self,
        params: &ParamVector,
        input: &BackboneInput,
        upstream: &Matrix,
    ) -> Result<Vec<f64>, BackboneError> {
        self.check_params(params)?;
        let trace = forward(self, params.as_slice(), input)?;
        backward(self, params.as_slice(), &trace, upstream)
    }

    /// Which side of every ReLU kink, and which max-pool winner, the input
    /// lands on. Equal patterns mean the network is smooth between two points.
    pub fn activation_pattern(&self, params: &ParamVector, input: &BackboneInput) -> Result<Vec<u32>, BackboneError> {
        self.check_params(params)?;
        Ok(forward(self, params.as_slice(), input)?.pattern())
    }

    /// `FC(d_0 → d_1) → … → d_k` on the flattened input; hidden layers use
    /// `activation`, the last is linear.
    pub fn mlp(widths: &[usize], activation: Activation) -> Result<Self, BackboneError> {
        let specs = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let kind = if i == 0 { LayerKind::Dense } else { LayerKind::SharedDense };
                let act = if i + 2 == widths.len() { Activation::Identity } else { activation };
                LayerSpec::new(kind, w[0], w[1], act)
            })
            .collect();
        Backbone::new(specs, Symmetry::None)
    }

    /// Per-point layer, max-pool concat, two per-point layers. Node-equivariant.
    pub fn setnet(in_width: usize, hidden: usize, out_width: usize) -> Result<Self, BackboneError> {
        Backbone::new(
            vec![
                LayerSpec::new(LayerKind::SharedDense, in_width, hidden, Activation::Relu),
                LayerSpec::new(LayerKind::MaxPoolConcat, hidden, 2 * hidden, Activation::Identity),
                LayerSpec::new(LayerKind::SharedDense, 2 * hidden, hidden, Activation::Relu),
                LayerSpec::new(LayerKind::SharedDense, hidden, out_width, Activation::Identity),
            ],
            Symmetry::SnEquivariant,
        )
    }

    /// `layers` message-passing layers then a per-node linear head. Node-equivariant.
    pub fn mpnn(
        in_width: usize,
        hidden: usize,
        out_width: usize,
        layers: usize,
        activation: Activation,
    ) -> Result<Self, BackboneError> {
        let mut specs = Vec::new();
        let mut w = in_width;
        for _ in 0..layers {
            specs.push(LayerSpec::new(LayerKind::MessagePassing, w, hidden, activation));
            w = hidden;
        }
        specs.push(LayerSpec::new(LayerKind::SharedDense, w, out_width, Activation::Identity));
        Backbone::new(specs, Symmetry::SnEquivariant)
    }

    /// GIN layers over `[features ∥ I]`, sum readout, linear head.
    pub fn gin_id(
        feature_width: usize,
        max_n: usize,
        hidden: usize,
        layers: usize,
        out_width: usize,
    ) -> Result<Self, BackboneError> {
        let mut specs = Vec::new();
        let mut w = feature_width + max_n;
        for _ in 0..layers {
            specs.push(LayerSpec::new(LayerKind::GinId, w, hidden, Activation::Relu));
            w = hidden;
        }
        specs.push(LayerSpec::new(LayerKind::SumReadout, w, w, Activation::Identity));
        specs.push(LayerSpec::new(LayerKind::SharedDense, w, out_width, Activation::Identity));
        Backbone::new(specs, Symmetry::None)?.with_identifiers(max_n)
    }
}

/// Flattened-input MLP on one vector.
pub fn mlp_forward(backbone: &Backbone, params: &ParamVector, x: &[f64]) -> Result<Vec<f64>, BackboneError> {
    let input = BackboneInput::new(Matrix::from_rows(&[x]));
    Ok(backbone.forward(params, &input)?.into_vec())
}

pub fn mlp_grad(
    backbone: &Backbone,
    params: &ParamVector,
    x: &[f64],
    upstream: &[f64],
) -> Result<Vec<f64>, BackboneError> {
    let input = BackboneInput::new(Matrix::from_rows(&[x]));
    backbone.backward(params, &input, &Matrix::from_rows(&[upstream]))
}

pub fn setnet_forward(backbone: &Backbone, params: &ParamVector, x: &Matrix) -> Result<Matrix, BackboneError> {
    backbone.forward(params, &BackboneInput::new(x.clone()))
}

pub fn mpnn_forward(
    backbone: &Backbone,
    params: &ParamVector,
    y: &Matrix,
    a: &Matrix,
) -> Result<Matrix, BackboneError> {
    backbone.forward(params, &BackboneInput::with_adjacency(y.clone(), a.clone()))
}

/// Graph embedding of a GIN+ID backbone; identifiers are appended internally
/// in the input's own node order.
pub fn gin_id_forward(
    backbone: &Backbone,
    params: &ParamVector,
    y: &Matrix,
    a: &Matrix,
) -> Result<Vec<f64>, BackboneError> {
    Ok(backbone.forward(params, &BackboneInput::with_adjacency(y.clone(), a.clone()))?.into_vec())
}

#[cfg(test)]
mod tests;
