//! Group elements, their actions on inputs and their representations on outputs.

mod motion;
mod permutation;
mod spaces;

pub use motion::{act_output, EuclideanMotion, OutputAction};
pub use permutation::{AllPermutations, NodeAction, Permutation};
pub(crate) use spaces::centroid;
pub use spaces::{
    act_graph, act_points, commute_check, Fingerprint, Geometric, GeometricGraph, OrbitKey, PointCloud, Shift,
    ShiftOutput, Signal,
};

use std::fmt::Debug;

use thiserror::Error;

use crate::numeric::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not orthogonal (defect {defect:e})")]
    NotOrthogonal { defect: f64 },
    #[error("rotation has determinant -1")]
    ImproperRotation,
    #[error("map is not a bijection of 0..n")]
    NotBijection,
    #[error("edge attribute matrix is not symmetric")]
    AsymmetricEdges,
}

pub trait GroupElement: Clone + Debug + Send + Sync {
    fn compose(&self, other: &Self) -> Result<Self, GroupError>;
    fn inverse(&self) -> Self;
}

/// A left action of `G` on `Self`.
pub trait Action<G: GroupElement>: Sized {
    fn act(&self, g: &G) -> Result<Self, GroupError>;

    fn act_inverse(&self, g: &G) -> Result<Self, GroupError> {
        self.act(&g.inverse())
    }
}

/// A representation of `G` on matrix-shaped outputs.
pub trait Representation<G>: Send + Sync {
    fn apply(&self, g: &G, y: &Matrix) -> Result<Matrix, GroupError>;
    fn apply_inverse(&self, g: &G, y: &Matrix) -> Result<Matrix, GroupError>;

    /// Adjoint of `apply` (or of `apply_inverse` when `inverse` is set), used
    /// to carry output gradients back through the representation.
    fn pull_back(&self, g: &G, upstream: &Matrix, inverse: bool) -> Result<Matrix, GroupError>;

    fn is_trivial(&self) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupKind {
    /// O(d), no translation part.
    Orthogonal,
    /// SE(d).
    SpecialEuclidean,
    /// E(d).
    Euclidean,
    /// S_n acting on node indices.
    Symmetric,
    /// Translations of the real line.
    Translation,
}

impl GroupKind {
    pub fn removes_translation(self) -> bool {
        matches!(self, GroupKind::SpecialEuclidean | GroupKind::Euclidean)
    }
}
