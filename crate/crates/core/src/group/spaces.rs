//! Input spaces the groups act on, plus the hashing hooks frames need.

use std::hash::{DefaultHasher, Hash, Hasher};

use crate::graphio::Graph;
use crate::numeric::Matrix;

use super::{Action, EuclideanMotion, GroupElement, GroupError, Permutation, Representation};

/// Identity of an input, used to tie a frame to the input it was built for.
pub trait Fingerprint {
    fn fingerprint(&self) -> u64;
}

/// Key under which transformed copies of an input compare equal.
///
/// Graphs compare exactly; real-valued inputs are quantized on a 1e-10 grid.
pub trait OrbitKey {
    fn orbit_key(&self) -> Vec<i64>;
}

/// Inputs made of `n` nodes embedded in `d`-dimensional space.
pub trait Geometric {
    fn node_count(&self) -> usize;
    fn spatial_dim(&self) -> usize;
}

impl Geometric for PointCloud {
    fn node_count(&self) -> usize {
        self.points.rows()
    }

    fn spatial_dim(&self) -> usize {
        self.points.cols()
    }
}

impl Geometric for GeometricGraph {
    fn node_count(&self) -> usize {
        self.positions.rows()
    }

    fn spatial_dim(&self) -> usize {
        self.positions.cols()
    }
}

pub(crate) const ORBIT_QUANTUM: f64 = 1e-10;

fn hash_matrix(h: &mut DefaultHasher, m: &Matrix) {
    m.shape().hash(h);
    for v in m.as_slice() {
        v.to_bits().hash(h);
    }
}

fn push_exact(key: &mut Vec<i64>, m: &Matrix) {
    key.push(m.rows() as i64);
    key.push(m.cols() as i64);
    key.extend(m.as_slice().iter().map(|v| (v + 0.0).to_bits() as i64));
}

fn push_quantized(key: &mut Vec<i64>, m: &Matrix) {
    key.push(m.rows() as i64);
    key.push(m.cols() as i64);
    key.extend(m.as_slice().iter().map(|v| (v / ORBIT_QUANTUM).round() as i64));
}

/// `n × d` coordinates with optional invariant per-point features.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Matrix,
    pub features: Option<Matrix>,
}

impl PointCloud {
    pub fn new(points: Matrix) -> Self {
        PointCloud { points, features: None }
    }

    pub fn with_features(points: Matrix, features: Matrix) -> Result<Self, GroupError> {
        if features.rows() != points.rows() {
            return Err(GroupError::DimensionMismatch { expected: points.rows(), found: features.rows() });
        }
        Ok(PointCloud { points, features: Some(features) })
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn centroid(&self) -> Vec<f64> {
        centroid(&self.points)
    }
}

pub(crate) fn centroid(points: &Matrix) -> Vec<f64> {
    let n = points.rows();
    let mut t = vec![0.0; points.cols()];
    for i in 0..n {
        for (a, b) in t.iter_mut().zip(points.row(i)) {
            *a += b;
        }
    }
    if n > 0 {
        for a in &mut t {
            *a /= n as f64;
        }
    }
    t
}

impl Action<EuclideanMotion> for PointCloud {
    fn act(&self, g: &EuclideanMotion) -> Result<Self, GroupError> {
        Ok(PointCloud { points: g.apply_rows(&self.points)?, features: self.features.clone() })
    }

    fn act_inverse(&self, g: &EuclideanMotion) -> Result<Self, GroupError> {
        Ok(PointCloud { points: g.apply_inverse_rows(&self.points)?, features: self.features.clone() })
    }
}

impl Action<Permutation> for PointCloud {
    fn act(&self, h: &Permutation) -> Result<Self, GroupError> {
        Ok(PointCloud {
            points: h.permute_rows(&self.points)?,
            features: self.features.as_ref().map(|f| h.permute_rows(f)).transpose()?,
        })
    }

    fn act_inverse(&self, h: &Permutation) -> Result<Self, GroupError> {
        Ok(PointCloud {
            points: h.unpermute_rows(&self.points)?,
            features: self.features.as_ref().map(|f| h.unpermute_rows(f)).transpose()?,
        })
    }
}

impl Fingerprint for PointCloud {
    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        hash_matrix(&mut h, &self.points);
        if let Some(f) = &self.features {
            hash_matrix(&mut h, f);
        }
        h.finish()
    }
}

impl OrbitKey for PointCloud {
    fn orbit_key(&self) -> Vec<i64> {
        let mut key = Vec::new();
        push_quantized(&mut key, &self.points);
        if let Some(f) = &self.features {
            push_quantized(&mut key, f);
        }
        key
    }
}

/// A graph whose nodes carry coordinates: positions move under the full
/// motion, optional velocities only rotate, edge attributes are invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricGraph {
    pub positions: Matrix,
    pub velocities: Option<Matrix>,
    pub edges: Matrix,
}

impl GeometricGraph {
    pub fn new(positions: Matrix, velocities: Option<Matrix>, edges: Matrix) -> Result<Self, GroupError> {
        let n = positions.rows();
        if edges.shape() != (n, n) {
            return Err(GroupError::DimensionMismatch { expected: n, found: edges.rows() });
        }
        if let Some(v) = &velocities {
            if v.shape() != positions.shape() {
                return Err(GroupError::DimensionMismatch { expected: n, found: v.rows() });
            }
        }
        if edges.asymmetry().unwrap_or(0.0) != 0.0 {
            return Err(GroupError::AsymmetricEdges);
        }
        Ok(GeometricGraph { positions, velocities, edges })
    }

    pub fn len(&self) -> usize {
        self.positions.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.rows() == 0
    }

    /// Node features `[positions, velocities]`.
    pub fn node_features(&self) -> Matrix {
        match &self.velocities {
            Some(v) => self.positions.hcat(v),
            None => self.positions.clone(),
        }
    }
}

impl Action<EuclideanMotion> for GeometricGraph {
    fn act(&self, g: &EuclideanMotion) -> Result<Self, GroupError> {
        Ok(GeometricGraph {
            positions: g.apply_rows(&self.positions)?,
            velocities: self.velocities.as_ref().map(|v| g.rotate_rows(v)).transpose()?,
            edges: self.edges.clone(),
        })
    }

    fn act_inverse(&self, g: &EuclideanMotion) -> Result<Self, GroupError> {
        Ok(GeometricGraph {
            positions: g.apply_inverse_rows(&self.positions)?,
            velocities: self.velocities.as_ref().map(|v| g.unrotate_rows(v)).transpose()?,
            edges: self.edges.clone(),
        })
    }
}

impl Action<Permutation> for GeometricGraph {
    fn act(&self, h: &Permutation) -> Result<Self, GroupError> {
        Ok(GeometricGraph {
            positions: h.permute_rows(&self.positions)?,
            velocities: self.velocities.as_ref().map(|v| h.permute_rows(v)).transpose()?,
            edges: h.conjugate(&self.edges)?,
        })
    }
}

impl Fingerprint for GeometricGraph {
    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        hash_matrix(&mut h, &self.positions);
        if let Some(v) = &self.velocities {
            hash_matrix(&mut h, v);
        }
        hash_matrix(&mut h, &self.edges);
        h.finish()
    }
}

impl OrbitKey for GeometricGraph {
    fn orbit_key(&self) -> Vec<i64> {
        let mut key = Vec::new();
        push_quantized(&mut key, &self.positions);
        if let Some(v) = &self.velocities {
            push_quantized(&mut key, v);
        }
        push_exact(&mut key, &self.edges);
        key
    }
}

impl Action<Permutation> for Graph {
    fn act(&self, h: &Permutation) -> Result<Self, GroupError> {
        Ok(Graph::from_parts_unchecked(h.conjugate(self.adjacency())?, h.permute_rows(self.features())?))
    }
}

impl Fingerprint for Graph {
    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        hash_matrix(&mut h, self.adjacency());
        hash_matrix(&mut h, self.features());
        h.finish()
    }
}

impl OrbitKey for Graph {
    fn orbit_key(&self) -> Vec<i64> {
        let mut key = Vec::new();
        push_exact(&mut key, self.adjacency());
        push_exact(&mut key, self.features());
        key
    }
}

/// `ρ₁(h)G = (P Y, P A Pᵀ)`.
pub fn act_graph(h: &Permutation, graph: &Graph) -> Result<Graph, GroupError> {
    graph.act(h)
}

/// `ρ₁(g)X = X Rᵀ + 1 tᵀ`.
pub fn act_points(g: &EuclideanMotion, x: &PointCloud) -> Result<PointCloud, GroupError> {
    x.act(g)
}

/// `‖τ(h)ρ₁(g)X − ρ₁(g)τ(h)X‖_F`; zero up to roundoff since the two actions commute.
pub fn commute_check(g: &EuclideanMotion, h: &Permutation, x: &PointCloud) -> Result<f64, GroupError> {
    let a = x.act(g)?.act(h)?;
    let b = x.act(h)?.act(g)?;
    Ok(a.points.sub(&b.points).frobenius_norm())
}

/// Translations of the real line acting on `ℝⁿ` by `x ↦ x + a·1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shift(pub f64);

impl GroupElement for Shift {
    fn compose(&self, other: &Self) -> Result<Self, GroupError> {
        Ok(Shift(self.0 + other.0))
    }

    fn inverse(&self) -> Self {
        Shift(-self.0)
    }
}

/// A vector in `ℝⁿ` acted on by [`Shift`].
#[derive(Clone, Debug, PartialEq)]
pub struct Signal(pub Vec<f64>);

impl Action<Shift> for Signal {
    fn act(&self, a: &Shift) -> Result<Self, GroupError> {
        Ok(Signal(self.0.iter().map(|x| x + a.0).collect()))
    }

    fn act_inverse(&self, a: &Shift) -> Result<Self, GroupError> {
        Ok(Signal(self.0.iter().map(|x| x - a.0).collect()))
    }
}

impl Fingerprint for Signal {
    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for v in &self.0 {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

impl OrbitKey for Signal {
    fn orbit_key(&self) -> Vec<i64> {
        self.0.iter().map(|v| (v / ORBIT_QUANTUM).round() as i64).collect()
    }
}

/// Output representation `b ↦ b + a` of [`Shift`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ShiftOutput;

impl Representation<Shift> for ShiftOutput {
    fn apply(&self, a: &Shift, y: &Matrix) -> Result<Matrix, GroupError> {
        Ok(y.map(|v| v + a.0))
    }

    fn apply_inverse(&self, a: &Shift, y: &Matrix) -> Result<Matrix, GroupError> {
        Ok(y.map(|v| v - a.0))
    }

    fn pull_back(&self, _: &Shift, upstream: &Matrix, _: bool) -> Result<Matrix, GroupError> {
        Ok(upstream.clone())
    }

    fn is_trivial(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rng;

    fn random_motion(rng: &mut Rng, d: usize) -> EuclideanMotion {
        EuclideanMotion::new(rng.orthogonal(d), rng.normal_vec(d)).unwrap()
    }

    #[test]
    fn identity_and_translation_actions() {
        let mut rng = Rng::new(8);
        let x = PointCloud::new(rng.normal_matrix(6, 3));
        assert_eq!(act_points(&EuclideanMotion::identity(3), &x).unwrap(), x);
        let single = PointCloud::new(Matrix::from_rows(&[[1.0, 2.0, 3.0]]));
        let moved = act_points(&EuclideanMotion::from_translation(vec![0.5, -1.0, 2.0]), &single).unwrap();
        assert_eq!(moved.points.row(0), &[1.5, 1.0, 5.0]);
    }

    #[test]
    fn motion_action_is_a_representation() {
        let mut rng = Rng::new(9);
        for _ in 0..20 {
            let x = PointCloud::new(rng.normal_matrix(7, 3));
            let g = random_motion(&mut rng, 3);
            let h = random_motion(&mut rng, 3);
            let two_step = x.act(&h).unwrap().act(&g).unwrap();
            let one_step = x.act(&g.compose(&h).unwrap()).unwrap();
            assert!(two_step.points.sub(&one_step.points).max_abs() <= 1e-12);
            let back = x.act(&g).unwrap().act_inverse(&g).unwrap();
            assert!(back.points.sub(&x.points).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn permutation_action_on_graphs() {
        let p3 = Graph::unweighted(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(act_graph(&Permutation::identity(3), &p3).unwrap(), p3);
        let swapped = act_graph(&Permutation::transposition(3, 0, 1), &p3).unwrap();
        // node 1 (the centre) now sits at index 0
        assert_eq!(swapped.degrees(), vec![2.0, 1.0, 1.0]);
        let mut degs = swapped.degrees();
        degs.sort_by(f64::total_cmp);
        assert_eq!(degs, vec![1.0, 1.0, 2.0]);
        assert_eq!(swapped.adjacency().asymmetry(), Some(0.0));

        let h1 = Permutation::new(vec![2, 0, 1]).unwrap();
        let h2 = Permutation::new(vec![1, 0, 2]).unwrap();
        let two_step = act_graph(&h2, &act_graph(&h1, &p3).unwrap()).unwrap();
        let one_step = act_graph(&h2.compose(&h1).unwrap(), &p3).unwrap();
        assert_eq!(two_step, one_step);
    }

    #[test]
    fn euclidean_and_permutation_actions_commute() {
        let mut rng = Rng::new(10);
        let x = PointCloud::new(rng.normal_matrix(5, 3));
        assert_eq!(commute_check(&EuclideanMotion::identity(3), &Permutation::identity(5), &x).unwrap(), 0.0);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let x = PointCloud::new(rng.normal_matrix(5, 3));
            let g = random_motion(&mut rng, 3);
            let h = Permutation::new(rng.permutation_map(5)).unwrap();
            worst = worst.max(commute_check(&g, &h, &x).unwrap());
        }
        assert!(worst <= 1e-12);
    }

    #[test]
    fn geometric_graph_actions() {
        let mut rng = Rng::new(12);
        let pos = rng.normal_matrix(4, 3);
        let vel = rng.normal_matrix(4, 3);
        let edges = Matrix::from_rows(&[
            [0.0, 1.0, -1.0, 0.0],
            [1.0, 0.0, 0.0, 1.0],
            [-1.0, 0.0, 0.0, 1.0],
            [0.0, 1.0, 1.0, 0.0],
        ]);
        let x = GeometricGraph::new(pos, Some(vel.clone()), edges.clone()).unwrap();
        let g = EuclideanMotion::from_translation(vec![1.0, 2.0, 3.0]);
        let moved = x.act(&g).unwrap();
        assert_eq!(moved.velocities.as_ref().unwrap(), &vel);
        assert_eq!(moved.edges, edges);
        let asym = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        assert_eq!(GeometricGraph::new(Matrix::zeros(2, 3), None, asym), Err(GroupError::AsymmetricEdges));
    }

    #[test]
    fn orbit_keys_identify_equal_inputs() {
        let p3 = Graph::unweighted(3, &[(0, 1), (1, 2)]).unwrap();
        let end_swap = Permutation::new(vec![2, 1, 0]).unwrap();
        assert_eq!(p3.act(&end_swap).unwrap().orbit_key(), p3.orbit_key());
        assert_ne!(p3.act(&Permutation::transposition(3, 0, 1)).unwrap().orbit_key(), p3.orbit_key());
        assert_eq!(p3.fingerprint(), p3.clone().fingerprint());
    }
}
