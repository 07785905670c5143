use std::fmt;
use std::sync::Arc;

use crate::fa::{Differentiable, FaError, Model};
use crate::graphio::Graph;
use crate::group::{GeometricGraph, GroupError, Permutation, PointCloud};
use crate::numeric::Matrix;

use super::{Backbone, BackboneError, ParamVector};

/// Node features plus optional edge attributes, as a backbone sees them.
#[derive(Clone, Debug, PartialEq)]
pub struct BackboneInput {
    pub features: Matrix,
    pub adjacency: Option<Matrix>,
}

impl BackboneInput {
    pub fn new(features: Matrix) -> Self {
        BackboneInput { features, adjacency: None }
    }

    pub fn with_adjacency(features: Matrix, adjacency: Matrix) -> Self {
        BackboneInput { features, adjacency: Some(adjacency) }
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn permuted(&self, p: &Permutation) -> Result<Self, GroupError> {
        Ok(BackboneInput {
            features: p.permute_rows(&self.features)?,
            adjacency: self.adjacency.as_ref().map(|a| p.conjugate(a)).transpose()?,
        })
    }
}

/// Coordinates, with any invariant point features appended.
pub fn encode_points(x: &PointCloud) -> Result<BackboneInput, BackboneError> {
    let features = match &x.features {
        Some(f) => x.points.hcat(f),
        None => x.points.clone(),
    };
    Ok(BackboneInput::new(features))
}

/// Node features and adjacency.
pub fn encode_graph(g: &Graph) -> Result<BackboneInput, BackboneError> {
    Ok(BackboneInput::with_adjacency(g.features().clone(), g.adjacency().clone()))
}

/// `[positions, velocities]` as node features, edge attributes as adjacency.
pub fn encode_geometric(g: &GeometricGraph) -> Result<BackboneInput, BackboneError> {
    Ok(BackboneInput::with_adjacency(g.node_features(), g.edges.clone()))
}

/// `[Y, A]` zero-padded to `max_n` rows and adjacency columns, for an MLP on `vec(Y, A)`.
pub fn encode_padded_graph(g: &Graph, max_n: usize) -> Result<BackboneInput, BackboneError> {
    let n = g.n();
    if n > max_n {
        return Err(BackboneError::TooManyNodes { found: n, max: max_n });
    }
    let f = g.features().cols();
    let mut m = Matrix::zeros(max_n, f + max_n);
    for i in 0..n {
        m.row_mut(i)[..f].copy_from_slice(g.features().row(i));
        m.row_mut(i)[f..f + n].copy_from_slice(g.adjacency().row(i));
    }
    Ok(BackboneInput::new(m))
}

type Encoder<X> = dyn Fn(&X) -> Result<BackboneInput, BackboneError> + Send + Sync;

/// A backbone with fixed parameters and an input encoding, usable as a model.
pub struct BoundBackbone<X> {
    pub backbone: Backbone,
    pub params: ParamVector,
    encode: Arc<Encoder<X>>,
}

impl<X> BoundBackbone<X> {
    pub fn new(
        backbone: Backbone,
        params: ParamVector,
        encode: impl Fn(&X) -> Result<BackboneInput, BackboneError> + Send + Sync + 'static,
    ) -> Result<Self, BackboneError> {
        if params.len() != backbone.param_count() {
            return Err(BackboneError::ParamCount { expected: backbone.param_count(), found: params.len() });
        }
        Ok(BoundBackbone { backbone, params, encode: Arc::new(encode) })
    }

    pub fn input(&self, x: &X) -> Result<BackboneInput, BackboneError> {
        (self.encode)(x)
    }

    /// The same encoding with other parameters.
    pub fn with_params(&self, params: ParamVector) -> Result<Self, BackboneError> {
        if params.len() != self.backbone.param_count() {
            return Err(BackboneError::ParamCount { expected: self.backbone.param_count(), found: params.len() });
        }
        Ok(BoundBackbone { backbone: self.backbone.clone(), params, encode: Arc::clone(&self.encode) })
    }

    pub fn activation_pattern(&self, x: &X) -> Result<Vec<u32>, BackboneError> {
        self.backbone.activation_pattern(&self.params, &self.input(x)?)
    }
}

impl<X> Clone for BoundBackbone<X> {
    fn clone(&self) -> Self {
        BoundBackbone { backbone: self.backbone.clone(), params: self.params.clone(), encode: Arc::clone(&self.encode) }
    }
}

impl<X> fmt::Debug for BoundBackbone<X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundBackbone")
            .field("backbone", &self.backbone)
            .field("params", &self.params.len())
            .finish_non_exhaustive()
    }
}

impl From<BackboneError> for FaError {
    fn from(e: BackboneError) -> Self {
        FaError::Model(e.to_string())
    }
}

impl<X> Model<X> for BoundBackbone<X> {
    fn eval(&self, x: &X) -> Result<Matrix, FaError> {
        Ok(self.backbone.forward(&self.params, &self.input(x)?)?)
    }
}

impl<X> Differentiable<X> for BoundBackbone<X> {
    fn param_count(&self) -> usize {
        self.params.len()
    }

    fn param_gradient(&self, x: &X, upstream: &Matrix) -> Result<Vec<f64>, FaError> {
        Ok(self.backbone.backward(&self.params, &self.input(x)?, upstream)?)
    }
}
