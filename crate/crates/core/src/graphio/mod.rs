//! Graphs, the graph6 format, small-graph enumeration and automorphism oracles.

mod canon;
mod graph6;

pub use canon::{canonical_code, enumerate_connected, MAX_ENUMERATION_NODES};
pub use graph6::{load_graph6, parse_graph6, write_graph6};

use std::ops::Range;

use thiserror::Error;

use crate::group::{GroupElement, Permutation};
use crate::numeric::Matrix;

pub const MAX_AUTOMORPHISM_NODES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("adjacency must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("adjacency is not exactly symmetric")]
    NotSymmetric,
    #[error("feature matrix has {found} rows for {expected} nodes")]
    FeatureRows { expected: usize, found: usize },
    #[error("non-finite entry")]
    NonFinite,
    #[error("graph is not simple (entries must be 0/1 with zero diagonal)")]
    NotSimple,
    #[error("node index {index} out of range for {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },
    #[error("malformed graph6 header")]
    MalformedHeader,
    #[error("graph6 bit vector truncated: need {expected} bytes, found {found}")]
    TruncatedBitVector { expected: usize, found: usize },
    #[error("graph6 string has {0} bytes after the bit vector")]
    TrailingBytes(usize),
    #[error("graph6 byte {0:#04x} outside the printable range 63..=126")]
    InvalidByte(u8),
    #[error("graph6 padding bits are not zero")]
    NonCanonicalPadding,
    #[error("{n} nodes exceeds the limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("line {line}: {source}")]
    Line { line: usize, source: Box<GraphError> },
    #[error("line range {start}..{end} exceeds the {available} graphs in the file")]
    LineRange { start: usize, end: usize, available: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

/// An undirected graph: a symmetric `n × n` adjacency with `n × d` node features.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    adjacency: Matrix,
    features: Matrix,
}

impl Graph {
    pub fn new(adjacency: Matrix, features: Matrix) -> Result<Self, GraphError> {
        let (r, c) = adjacency.shape();
        if r != c {
            return Err(GraphError::NotSquare(r, c));
        }
        if features.rows() != r {
            return Err(GraphError::FeatureRows { expected: r, found: features.rows() });
        }
        if adjacency.as_slice().iter().chain(features.as_slice()).any(|v| !v.is_finite()) {
            return Err(GraphError::NonFinite);
        }
        if adjacency.asymmetry() != Some(0.0) && r > 0 {
            return Err(GraphError::NotSymmetric);
        }
        Ok(Graph { adjacency, features })
    }

    /// A featureless graph (`n × 0` features).
    pub fn from_adjacency(adjacency: Matrix) -> Result<Self, GraphError> {
        let n = adjacency.rows();
        Graph::new(adjacency, Matrix::zeros(n, 0))
    }

    /// Simple featureless graph from an edge list.
    pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut a = Matrix::zeros(n, n);
        for &(i, j) in edges {
            for index in [i, j] {
                if index >= n {
                    return Err(GraphError::NodeOutOfRange { index, n });
                }
            }
            if i == j {
                return Err(GraphError::NotSimple);
            }
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        Graph::from_adjacency(a)
    }

    pub(crate) fn from_parts_unchecked(adjacency: Matrix, features: Matrix) -> Self {
        Graph { adjacency, features }
    }

    pub fn with_features(self, features: Matrix) -> Result<Self, GraphError> {
        Graph::new(self.adjacency, features)
    }

    pub fn n(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    /// Row sums of the adjacency.
    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.adjacency.row(i).iter().sum()).collect()
    }

    /// Pairs `i < j` with a nonzero entry.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adjacency[(i, j)] != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn is_simple(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| self.adjacency[(i, i)] == 0.0) && self.adjacency.as_slice().iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && self.adjacency[(i, j)] != 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Whether `h` maps the graph onto itself, features included.
    pub fn is_fixed_by(&self, h: &Permutation) -> bool {
        let n = self.n();
        if h.len() != n {
            return false;
        }
        for i in 0..n {
            if self.features.row(h.image(i)) != self.features.row(i) {
                return false;
            }
            for j in 0..n {
                if self.adjacency[(h.image(i), h.image(j))] != self.adjacency[(i, j)] {
                    return false;
                }
            }
        }
        true
    }
}

/// `L = diag(A 1) − A`.
pub fn laplacian(g: &Graph) -> Matrix {
    let n = g.n();
    let mut l = g.adjacency().scale(-1.0);
    for (i, d) in g.degrees().into_iter().enumerate() {
        l[(i, i)] += d;
    }
    debug_assert!((0..n).all(|i| l.row(i).iter().sum::<f64>().abs() < 1e-9));
    l
}

/// The automorphism group of a graph, sorted by permutation map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AutGroup {
    pub elements: Vec<Permutation>,
}

impl AutGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, h: &Permutation) -> bool {
        self.elements.binary_search(h).is_ok()
    }

    /// Checks identity, inverses and closure over all pairs.
    pub fn is_group(&self) -> bool {
        let Some(first) = self.elements.first() else { return false };
        if !self.contains(&Permutation::identity(first.len())) {
            return false;
        }
        self.elements.iter().all(|a| {
            self.contains(&a.inverse())
                && self.elements.iter().all(|b| a.compose(b).map(|ab| self.contains(&ab)).unwrap_or(false))
        })
    }
}

/// All permutations fixing adjacency and features exactly, by backtracking
/// with degree and feature pruning.
pub fn automorphisms(g: &Graph) -> Result<AutGroup, GraphError> {
    let n = g.n();
    if n > MAX_AUTOMORPHISM_NODES {
        return Err(GraphError::TooLarge { n, max: MAX_AUTOMORPHISM_NODES });
    }
    let degrees = g.degrees();
    let candidates: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| degrees[i] == degrees[j] && g.features().row(i) == g.features().row(j))
                .filter(|&j| g.adjacency()[(i, i)] == g.adjacency()[(j, j)])
                .collect()
        })
        .collect();
    let mut elements = Vec::new();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    extend_automorphism(g, &candidates, 0, &mut map, &mut used, &mut elements);
    elements.sort();
    Ok(AutGroup { elements })
}

fn extend_automorphism(
    g: &Graph,
    candidates: &[Vec<usize>],
    i: usize,
    map: &mut Vec<usize>,
    used: &mut Vec<bool>,
    out: &mut Vec<Permutation>,
) {
    let n = g.n();
    if i == n {
        out.push(Permutation::from_map_unchecked(map.clone()));
        return;
    }
    let a = g.adjacency();
    for &img in &candidates[i] {
        if used[img] {
            continue;
        }
        if (0..i).any(|k| a[(i, k)] != a[(img, map[k])]) {
            continue;
        }
        map[i] = img;
        used[img] = true;
        extend_automorphism(g, candidates, i + 1, map, used, out);
        used[img] = false;
    }
    map[i] = usize::MAX;
}

pub(crate) fn check_range(range: &Range<usize>, available: usize) -> Result<(), GraphError> {
    if range.start > range.end || range.end > available {
        return Err(GraphError::LineRange { start: range.start, end: range.end, available });
    }
    Ok(())
}
