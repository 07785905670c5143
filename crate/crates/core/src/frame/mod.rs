//! Frames: small input-dependent subsets of a group that make averaging exact.

mod pca;
mod quotient;
mod sampling;
mod sort;

pub use pca::{frame_distance, pca_frame, shift_frame, PcaFrameBuilder, ShiftFrameBuilder, DEFAULT_EPS_SPEC};
pub use quotient::{quotient, QuotientFrame};
pub use sampling::{frame_sample, FrameSampler, SamplingFrame, UniformPermutations};
pub use sort::{
    graph_s_matrix, graph_sort_frame, trivial_frame, SortFrame, SortFrameBuilder, TrivialFrameBuilder, DEFAULT_EPS_EIG,
    DEFAULT_MAX_ENUMERATION, MAX_TRIVIAL_NODES,
};

use thiserror::Error;

use crate::graphio::GraphError;
use crate::group::{Fingerprint, GroupElement, GroupError, GroupKind};
use crate::numeric::NumericError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("covariance spectrum is degenerate (min normalized spacing {spacing:e})")]
    DegenerateSpectrum { spacing: f64 },
    #[error("need at least {need} points, got {n}")]
    TooFewPoints { n: usize, need: usize },
    #[error("{n} nodes exceeds the enumeration limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("orbits of the frame have unequal sizes {sizes:?}")]
    UnequalOrbits { sizes: Vec<usize> },
    #[error("frame construction does not support group {0:?}")]
    UnsupportedGroup(GroupKind),
    #[error("frame has no elements")]
    Empty,
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Which side the frame transforms on.
///
/// `Left`: `F(ρ(g)X) = g F(X)`, averaged terms use `ρ(g)⁻¹X`.
/// `Right`: `F(ρ(g)X) = F(X) g⁻¹`, averaged terms use `ρ(g)X`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    Left,
    Right,
}

/// An enumerated frame for one input.
///
/// Elements are stored in a canonical order (sign patterns for PCA frames,
/// lexicographic maps for permutation frames) so that averages are summed
/// in a reproducible order. `fingerprint` is `None` for input-independent
/// frames such as the whole group.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame<G> {
    elements: Vec<G>,
    convention: Convention,
    group: GroupKind,
    fingerprint: Option<u64>,
}

impl<G: GroupElement> Frame<G> {
    pub fn new(
        elements: Vec<G>,
        convention: Convention,
        group: GroupKind,
        fingerprint: Option<u64>,
    ) -> Result<Self, FrameError> {
        if elements.is_empty() {
            return Err(FrameError::Empty);
        }
        Ok(Frame { elements, convention, group, fingerprint })
    }

    pub fn elements(&self) -> &[G] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<G> {
        self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn group(&self) -> GroupKind {
        self.group
    }

    pub fn fingerprint(&self) -> Option<u64> {
        self.fingerprint
    }

    /// Whether this frame may be used for `x`.
    pub fn matches<X: Fingerprint + ?Sized>(&self, x: &X) -> bool {
        self.fingerprint.is_none_or(|f| f == x.fingerprint())
    }
}

/// Builds frames for inputs of type `X`.
pub trait FrameBuilder<X>: Send + Sync {
    type Element: GroupElement;

    fn convention(&self) -> Convention;

    /// The enumerated frame, or `None` when it is too large to list.
    fn enumerate(&self, x: &X) -> Result<Option<Frame<Self::Element>>, FrameError>;

    /// A sampler drawing uniformly from the frame of `x`.
    fn sampler(&self, x: &X) -> Result<Box<dyn FrameSampler<Self::Element>>, FrameError>;
}
