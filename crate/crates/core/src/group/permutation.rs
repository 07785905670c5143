use crate::numeric::Matrix;

use super::{GroupElement, GroupError, Representation};

/// A permutation of `0..n`; `map[j]` is the image of `j`.
///
/// Acting on node-indexed data moves row `j` to row `map[j]`, which is left
/// multiplication by `P` with `P[map[j]][j] = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self, GroupError> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &m in &map {
            if m >= n || seen[m] {
                return Err(GroupError::NotBijection);
            }
            seen[m] = true;
        }
        Ok(Permutation { map })
    }

    pub(crate) fn from_map_unchecked(map: Vec<usize>) -> Self {
        debug_assert!(Permutation::new(map.clone()).is_ok());
        Permutation { map }
    }

    pub fn identity(n: usize) -> Self {
        Permutation { map: (0..n).collect() }
    }

    /// Swaps `a` and `b`.
    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        map.swap(a, b);
        Permutation { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn image(&self, j: usize) -> usize {
        self.map[j]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn matrix(&self) -> Matrix {
        let n = self.len();
        let mut p = Matrix::zeros(n, n);
        for (j, &i) in self.map.iter().enumerate() {
            p[(i, j)] = 1.0;
        }
        p
    }

    fn check_len(&self, n: usize) -> Result<(), GroupError> {
        if n != self.len() {
            return Err(GroupError::DimensionMismatch { expected: self.len(), found: n });
        }
        Ok(())
    }

    /// `P M`: row `j` of `m` lands in row `map[j]`.
    pub fn permute_rows(&self, m: &Matrix) -> Result<Matrix, GroupError> {
        self.check_len(m.rows())?;
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for (j, &i) in self.map.iter().enumerate() {
            out.row_mut(i).copy_from_slice(m.row(j));
        }
        Ok(out)
    }

    /// `Pᵀ M`.
    pub fn unpermute_rows(&self, m: &Matrix) -> Result<Matrix, GroupError> {
        self.check_len(m.rows())?;
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for (j, &i) in self.map.iter().enumerate() {
            out.row_mut(j).copy_from_slice(m.row(i));
        }
        Ok(out)
    }

    /// `P A Pᵀ`.
    pub fn conjugate(&self, a: &Matrix) -> Result<Matrix, GroupError> {
        self.check_len(a.rows())?;
        self.check_len(a.cols())?;
        let n = self.len();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(self.map[i], self.map[j])] = a[(i, j)];
            }
        }
        Ok(out)
    }

    /// All permutations of `0..n` in lexicographic order of their maps.
    pub fn all(n: usize) -> AllPermutations {
        AllPermutations { next: Some((0..n).collect()) }
    }
}

impl GroupElement for Permutation {
    /// `self ∘ other`: apply `other` first.
    fn compose(&self, other: &Self) -> Result<Self, GroupError> {
        self.check_len(other.len())?;
        Ok(Permutation { map: other.map.iter().map(|&j| self.map[j]).collect() })
    }

    fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (j, &i) in self.map.iter().enumerate() {
            inv[i] = j;
        }
        Permutation { map: inv }
    }
}

/// Iterator produced by [`Permutation::all`].
pub struct AllPermutations {
    next: Option<Vec<usize>>,
}

impl Iterator for AllPermutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        // standard next-permutation step
        let n = succ.len();
        let mut i = n.saturating_sub(1);
        while i > 0 && succ[i - 1] >= succ[i] {
            i -= 1;
        }
        if i > 0 {
            let mut j = n - 1;
            while succ[j] <= succ[i - 1] {
                j -= 1;
            }
            succ.swap(i - 1, j);
            succ[i..].reverse();
            self.next = Some(succ);
        }
        Some(Permutation { map: current })
    }
}

/// How a permutation acts on a model's output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeAction {
    /// Outputs do not move (graph-level predictions).
    Invariant,
    /// Output rows are node-indexed and move with the nodes.
    Rows,
}

impl Representation<Permutation> for NodeAction {
    fn apply(&self, g: &Permutation, y: &Matrix) -> Result<Matrix, GroupError> {
        match self {
            NodeAction::Invariant => Ok(y.clone()),
            NodeAction::Rows => g.permute_rows(y),
        }
    }

    fn apply_inverse(&self, g: &Permutation, y: &Matrix) -> Result<Matrix, GroupError> {
        match self {
            NodeAction::Invariant => Ok(y.clone()),
            NodeAction::Rows => g.unpermute_rows(y),
        }
    }

    fn pull_back(&self, g: &Permutation, upstream: &Matrix, inverse: bool) -> Result<Matrix, GroupError> {
        match (self, inverse) {
            (NodeAction::Invariant, _) => Ok(upstream.clone()),
            (NodeAction::Rows, false) => g.unpermute_rows(upstream),
            (NodeAction::Rows, true) => g.permute_rows(upstream),
        }
    }

    fn is_trivial(&self) -> bool {
        matches!(self, NodeAction::Invariant)
    }
}
