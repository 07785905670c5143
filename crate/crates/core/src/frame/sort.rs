use crate::graphio::{laplacian, Graph};
use crate::group::{Fingerprint, GroupKind, Permutation};
use crate::numeric::{lex_rank_rows, sym_eig, Matrix, TieBlocks, DEFAULT_EIG_TOL, DEFAULT_MAX_SWEEPS, DEFAULT_TAU_LEX};

use super::sampling::element_from_order;
use super::{Convention, Frame, FrameBuilder, FrameError, FrameSampler, SamplingFrame, UniformPermutations};

pub const DEFAULT_EPS_EIG: f64 = 1e-8;
pub const DEFAULT_MAX_ENUMERATION: u128 = 10_080;
pub const MAX_TRIVIAL_NODES: usize = 8;

/// One column per distinct Laplacian eigenvalue (ascending), holding the
/// diagonal of the projector onto that eigenspace.
///
/// Eigenvalues closer than `eps_eig · max(1, |λ_max|)` to their predecessor
/// share an eigenspace. The projector does not depend on the basis chosen
/// inside the eigenspace.
pub fn graph_s_matrix(g: &Graph, eps_eig: f64) -> Result<Matrix, FrameError> {
    let n = g.n();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let eig = sym_eig(&laplacian(g), DEFAULT_EIG_TOL, DEFAULT_MAX_SWEEPS)?;
    let lmax = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = eps_eig * lmax.max(1.0);
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for k in 0..n {
        if k == 0 || eig.values[k] - eig.values[k - 1] > tol {
            columns.push(vec![0.0; n]);
        }
        let col = columns.last_mut().expect("column opened above");
        for (i, c) in col.iter_mut().enumerate() {
            let u = eig.vectors[(i, k)];
            *c += u * u;
        }
    }
    let mut s = Matrix::zeros(n, columns.len());
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            s[(i, j)] = *v;
        }
    }
    Ok(s)
}

/// The sorting frame of a graph, enumerated or in sampling form.
#[derive(Clone, Debug, PartialEq)]
pub enum SortFrame {
    Enumerated(Frame<Permutation>),
    Sampling(SamplingFrame),
}

impl SortFrame {
    pub fn size(&self) -> Option<u128> {
        match self {
            SortFrame::Enumerated(f) => Some(f.len() as u128),
            SortFrame::Sampling(s) => s.size(),
        }
    }

    pub fn as_enumerated(&self) -> Option<&Frame<Permutation>> {
        match self {
            SortFrame::Enumerated(f) => Some(f),
            SortFrame::Sampling(_) => None,
        }
    }

    pub fn into_sampler(self) -> Box<dyn FrameSampler<Permutation>> {
        match self {
            SortFrame::Enumerated(f) => Box::new(f),
            SortFrame::Sampling(s) => Box::new(s),
        }
    }
}

/// All permutations `g` for which `P_g S` is sorted lexicographically, in the
/// right convention `F(hG) = F(G) h⁻¹`. Enumerated (sorted by map) when
/// `∏ (tie block size)! ≤ max_enumeration`, otherwise returned for sampling.
pub fn graph_sort_frame(g: &Graph, tau_lex: f64, eps_eig: f64, max_enumeration: u128) -> Result<SortFrame, FrameError> {
    let s = graph_s_matrix(g, eps_eig)?;
    let ties = lex_rank_rows(&s, tau_lex)?;
    let fingerprint = g.fingerprint();
    match ties.tie_count() {
        Some(count) if count <= max_enumeration => {
            let elements = enumerate_ties(&ties);
            Ok(SortFrame::Enumerated(Frame::new(elements, Convention::Right, GroupKind::Symmetric, Some(fingerprint))?))
        }
        _ => Ok(SortFrame::Sampling(SamplingFrame::new(ties, fingerprint))),
    }
}

fn enumerate_ties(ties: &TieBlocks) -> Vec<Permutation> {
    let mut orders = vec![ties.order.clone()];
    for block in &ties.blocks {
        if block.len() < 2 {
            continue;
        }
        let members = &ties.order[block.clone()];
        let mut next = Vec::new();
        for order in &orders {
            for arrangement in Permutation::all(block.len()) {
                let mut o = order.clone();
                for (k, &m) in arrangement.as_slice().iter().enumerate() {
                    o[block.start + k] = members[m];
                }
                next.push(o);
            }
        }
        orders = next;
    }
    let mut elements: Vec<Permutation> = orders.iter().map(|o| element_from_order(o)).collect();
    elements.sort();
    elements
}

/// The whole of `S_n` as a left frame, for group averaging.
pub fn trivial_frame(n: usize) -> Result<Frame<Permutation>, FrameError> {
    if n > MAX_TRIVIAL_NODES {
        return Err(FrameError::TooLarge { n, max: MAX_TRIVIAL_NODES });
    }
    Frame::new(Permutation::all(n).collect(), Convention::Left, GroupKind::Symmetric, None)
}

#[derive(Clone, Copy, Debug)]
pub struct SortFrameBuilder {
    pub tau_lex: f64,
    pub eps_eig: f64,
    pub max_enumeration: u128,
}

impl Default for SortFrameBuilder {
    fn default() -> Self {
        SortFrameBuilder {
            tau_lex: DEFAULT_TAU_LEX,
            eps_eig: DEFAULT_EPS_EIG,
            max_enumeration: DEFAULT_MAX_ENUMERATION,
        }
    }
}

impl FrameBuilder<Graph> for SortFrameBuilder {
    type Element = Permutation;

    fn convention(&self) -> Convention {
        Convention::Right
    }

    fn enumerate(&self, g: &Graph) -> Result<Option<Frame<Permutation>>, FrameError> {
        match graph_sort_frame(g, self.tau_lex, self.eps_eig, self.max_enumeration)? {
            SortFrame::Enumerated(f) => Ok(Some(f)),
            SortFrame::Sampling(_) => Ok(None),
        }
    }

    fn sampler(&self, g: &Graph) -> Result<Box<dyn FrameSampler<Permutation>>, FrameError> {
        Ok(graph_sort_frame(g, self.tau_lex, self.eps_eig, self.max_enumeration)?.into_sampler())
    }
}

/// The whole group: enumerated up to [`MAX_TRIVIAL_NODES`], sampled beyond.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrivialFrameBuilder;

impl FrameBuilder<Graph> for TrivialFrameBuilder {
    type Element = Permutation;

    fn convention(&self) -> Convention {
        Convention::Left
    }

    fn enumerate(&self, g: &Graph) -> Result<Option<Frame<Permutation>>, FrameError> {
        if g.n() > MAX_TRIVIAL_NODES {
            return Ok(None);
        }
        trivial_frame(g.n()).map(Some)
    }

    fn sampler(&self, g: &Graph) -> Result<Box<dyn FrameSampler<Permutation>>, FrameError> {
        Ok(Box::new(UniformPermutations { n: g.n() }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{act_graph, GroupElement};
    use crate::numeric::Rng;

    fn p3() -> Graph {
        Graph::unweighted(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn c3() -> Graph {
        Graph::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn frame(g: &Graph) -> SortFrame {
        graph_sort_frame(g, DEFAULT_TAU_LEX, DEFAULT_EPS_EIG, DEFAULT_MAX_ENUMERATION).unwrap()
    }

    fn random_graph(rng: &mut Rng, n: usize, p: f64) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.uniform() < p {
                    edges.push((i, j));
                }
            }
        }
        Graph::unweighted(n, &edges).unwrap()
    }

    #[test]
    fn p3_s_matrix() {
        let s = graph_s_matrix(&p3(), DEFAULT_EPS_EIG).unwrap();
        let expected =
            Matrix::from_rows(&[[1.0 / 3.0, 0.5, 1.0 / 6.0], [1.0 / 3.0, 0.0, 2.0 / 3.0], [1.0 / 3.0, 0.5, 1.0 / 6.0]]);
        assert!(s.sub(&expected).max_abs() <= 1e-10, "{s:?}");
    }

    #[test]
    fn c3_s_matrix() {
        let s = graph_s_matrix(&c3(), DEFAULT_EPS_EIG).unwrap();
        assert_eq!(s.cols(), 2);
        for i in 0..3 {
            assert!((s[(i, 0)] - 1.0 / 3.0).abs() <= 1e-10);
            assert!((s[(i, 1)] - 2.0 / 3.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn s_matrix_is_basis_free() {
        // K4 has a 3-dimensional eigenspace; rebuild its projector from a
        // randomly rotated basis and compare diagonals
        let k4 = Graph::unweighted(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let s = graph_s_matrix(&k4, DEFAULT_EPS_EIG).unwrap();
        let eig = sym_eig(&laplacian(&k4), DEFAULT_EIG_TOL, DEFAULT_MAX_SWEEPS).unwrap();
        let basis = Matrix::from_rows(&(0..4).map(|i| eig.vectors.row(i)[1..].to_vec()).collect::<Vec<_>>());
        let mut rng = Rng::new(5);
        let rotated = basis.matmul(&rng.orthogonal(3));
        for i in 0..4 {
            let diag: f64 = rotated.row(i).iter().map(|v| v * v).sum();
            assert!((diag - s[(i, 1)]).abs() <= 1e-10);
        }
    }

    #[test]
    fn frame_sizes() {
        let fp3 = frame(&p3());
        let f = fp3.as_enumerated().unwrap();
        assert_eq!(f.len(), 2);
        for g in f.elements() {
            assert_eq!(g.image(1), 0);
        }
        assert_eq!(frame(&c3()).size(), Some(6));
        let distinct = Graph::unweighted(6, &[(0, 4), (1, 3), (1, 5), (2, 4), (2, 5), (3, 4), (3, 5), (4, 5)]).unwrap();
        assert_eq!(frame(&distinct).size(), Some(1));
        // asymmetric, yet two S rows tie
        let tied = Graph::unweighted(6, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (1, 5), (5, 3)]).unwrap();
        assert_eq!(frame(&tied).size(), Some(2));
    }

    #[test]
    fn large_ties_switch_to_sampling() {
        let mut edges = Vec::new();
        for i in 0..8 {
            for j in (i + 1)..8 {
                edges.push((i, j));
            }
        }
        let k8 = Graph::unweighted(8, &edges).unwrap();
        let f = frame(&k8);
        assert!(matches!(f, SortFrame::Sampling(_)));
        assert_eq!(f.size(), Some(40_320));
    }

    #[test]
    fn right_equivariance_is_exact() {
        let mut rng = Rng::new(6);
        for _ in 0..60 {
            let n = 2 + rng.index(6);
            let g = random_graph(&mut rng, n, 0.5);
            let h = Permutation::new(rng.permutation_map(n)).unwrap();
            let f = frame(&g);
            let fh = frame(&act_graph(&h, &g).unwrap());
            let mut expected: Vec<Permutation> =
                f.as_enumerated().unwrap().elements().iter().map(|e| e.compose(&h.inverse()).unwrap()).collect();
            expected.sort();
            assert_eq!(fh.as_enumerated().unwrap().elements(), expected.as_slice());
        }
    }

    #[test]
    fn trivial_frames() {
        assert_eq!(trivial_frame(1).unwrap().len(), 1);
        assert_eq!(trivial_frame(3).unwrap().len(), 6);
        assert!(matches!(trivial_frame(9), Err(FrameError::TooLarge { .. })));
    }
}
