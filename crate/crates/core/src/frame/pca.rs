use crate::group::{centroid, EuclideanMotion, Fingerprint, GeometricGraph, GroupKind, PointCloud, Shift, Signal};
use crate::numeric::{min_normalized_spacing, sym_eig, Matrix, DEFAULT_EIG_TOL, DEFAULT_MAX_SWEEPS};

use super::{Convention, Frame, FrameBuilder, FrameError, FrameSampler};

pub const DEFAULT_EPS_SPEC: f64 = 1e-6;

/// The PCA frame of a point set: elements `([α₁v₁, …, α_d v_d], t)` over all
/// sign patterns `α`, with `v_i` the covariance eigenvectors in ascending
/// eigenvalue order and `t` the centroid (zero for the orthogonal group).
///
/// Elements are ordered by sign pattern, bit `i` of the index flipping column `i`.
/// For SE(d) only patterns with `det = +1` are kept.
pub fn pca_frame(x: &PointCloud, group: GroupKind, eps_spec: f64) -> Result<Frame<EuclideanMotion>, FrameError> {
    pca_frame_of_points(&x.points, group, eps_spec, x.fingerprint())
}

fn pca_frame_of_points(
    points: &Matrix,
    group: GroupKind,
    eps_spec: f64,
    fingerprint: u64,
) -> Result<Frame<EuclideanMotion>, FrameError> {
    let translate = match group {
        GroupKind::Orthogonal => false,
        GroupKind::SpecialEuclidean | GroupKind::Euclidean => true,
        other => return Err(FrameError::UnsupportedGroup(other)),
    };
    let (n, d) = points.shape();
    if n < d + 1 {
        return Err(FrameError::TooFewPoints { n, need: d + 1 });
    }
    let t = if translate { centroid(points) } else { vec![0.0; d] };
    let mut centred = points.clone();
    for i in 0..n {
        for (v, c) in centred.row_mut(i).iter_mut().zip(&t) {
            *v -= c;
        }
    }
    let cov = centred.transpose().matmul(&centred);
    let eig = sym_eig(&cov, DEFAULT_EIG_TOL, DEFAULT_MAX_SWEEPS)?;
    if d >= 2 {
        let spacing = min_normalized_spacing(&eig.values)?;
        if spacing <= eps_spec {
            return Err(FrameError::DegenerateSpectrum { spacing });
        }
    }
    let mut elements = Vec::with_capacity(1 << d);
    for mask in 0u32..(1 << d) {
        let mut r = eig.vectors.clone();
        for col in (0..d).filter(|c| mask >> c & 1 == 1) {
            for row in 0..d {
                r[(row, col)] = -r[(row, col)];
            }
        }
        let g = EuclideanMotion::new(r, t.clone())?;
        if group == GroupKind::SpecialEuclidean && !g.is_proper() {
            continue;
        }
        elements.push(g);
    }
    Frame::new(elements, Convention::Left, group, Some(fingerprint))
}

/// `E(R, R') = (1/d) Σ_i sqrt(1 − ⟨r_i, r'_i⟩²)` over matching columns of the
/// rotation parts; insensitive to column signs.
///
/// Each term uses `1 − cos² = |a ∧ b|² / (|a|²|b|²)` so that collinear columns
/// give exactly zero.
pub fn frame_distance(g1: &EuclideanMotion, g2: &EuclideanMotion) -> f64 {
    let d = g1.dim();
    if d == 0 || d != g2.dim() {
        return if d == g2.dim() { 0.0 } else { f64::NAN };
    }
    let (r1, r2) = (g1.rotation(), g2.rotation());
    let mut total = 0.0;
    for c in 0..d {
        let a = r1.column(c);
        let b = r2.column(c);
        let mut wedge = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                let w = a[i] * b[j] - a[j] * b[i];
                wedge += w * w;
            }
        }
        let na: f64 = a.iter().map(|v| v * v).sum();
        let nb: f64 = b.iter().map(|v| v * v).sum();
        total += (wedge / (na * nb)).clamp(0.0, 1.0).sqrt();
    }
    total / d as f64
}

/// The one-element frame `{mean(x)}` for translations of the line.
pub fn shift_frame(x: &Signal) -> Result<Frame<Shift>, FrameError> {
    if x.0.is_empty() {
        return Err(FrameError::TooFewPoints { n: 0, need: 1 });
    }
    let mean = x.0.iter().sum::<f64>() / x.0.len() as f64;
    Frame::new(vec![Shift(mean)], Convention::Left, GroupKind::Translation, Some(x.fingerprint()))
}

/// PCA frames for point clouds and for the positions of geometric graphs.
#[derive(Clone, Copy, Debug)]
pub struct PcaFrameBuilder {
    pub group: GroupKind,
    pub eps_spec: f64,
}

impl PcaFrameBuilder {
    pub fn new(group: GroupKind) -> Self {
        PcaFrameBuilder { group, eps_spec: DEFAULT_EPS_SPEC }
    }
}

impl FrameBuilder<PointCloud> for PcaFrameBuilder {
    type Element = EuclideanMotion;

    fn convention(&self) -> Convention {
        Convention::Left
    }

    fn enumerate(&self, x: &PointCloud) -> Result<Option<Frame<EuclideanMotion>>, FrameError> {
        pca_frame(x, self.group, self.eps_spec).map(Some)
    }

    fn sampler(&self, x: &PointCloud) -> Result<Box<dyn FrameSampler<EuclideanMotion>>, FrameError> {
        Ok(Box::new(pca_frame(x, self.group, self.eps_spec)?))
    }
}

impl FrameBuilder<GeometricGraph> for PcaFrameBuilder {
    type Element = EuclideanMotion;

    fn convention(&self) -> Convention {
        Convention::Left
    }

    fn enumerate(&self, x: &GeometricGraph) -> Result<Option<Frame<EuclideanMotion>>, FrameError> {
        pca_frame_of_points(&x.positions, self.group, self.eps_spec, x.fingerprint()).map(Some)
    }

    fn sampler(&self, x: &GeometricGraph) -> Result<Box<dyn FrameSampler<EuclideanMotion>>, FrameError> {
        Ok(Box::new(pca_frame_of_points(&x.positions, self.group, self.eps_spec, x.fingerprint())?))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ShiftFrameBuilder;

impl FrameBuilder<Signal> for ShiftFrameBuilder {
    type Element = Shift;

    fn convention(&self) -> Convention {
        Convention::Left
    }

    fn enumerate(&self, x: &Signal) -> Result<Option<Frame<Shift>>, FrameError> {
        shift_frame(x).map(Some)
    }

    fn sampler(&self, x: &Signal) -> Result<Box<dyn FrameSampler<Shift>>, FrameError> {
        Ok(Box::new(shift_frame(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Action, GroupElement, Permutation};
    use crate::numeric::Rng;

    fn random_cloud(rng: &mut Rng, n: usize, d: usize) -> PointCloud {
        PointCloud::new(rng.normal_matrix(n, d))
    }

    fn rz(theta: f64) -> Matrix {
        let (s, c) = theta.sin_cos();
        Matrix::from_rows(&[[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Every element of `a` has a partner in `b` within `tol`, and sizes agree.
    fn same_set(a: &[EuclideanMotion], b: &[EuclideanMotion], tol: f64) -> bool {
        a.len() == b.len() && a.iter().all(|g| b.iter().any(|h| g.distance_max(h) <= tol))
    }

    #[test]
    fn frame_sizes() {
        let mut rng = Rng::new(40);
        let x = random_cloud(&mut rng, 10, 3);
        assert_eq!(pca_frame(&x, GroupKind::Euclidean, DEFAULT_EPS_SPEC).unwrap().len(), 8);
        assert_eq!(pca_frame(&x, GroupKind::Orthogonal, DEFAULT_EPS_SPEC).unwrap().len(), 8);
        let se = pca_frame(&x, GroupKind::SpecialEuclidean, DEFAULT_EPS_SPEC).unwrap();
        assert_eq!(se.len(), 4);
        assert!(se.elements().iter().all(|g| g.is_proper()));
        let x2 = random_cloud(&mut rng, 6, 2);
        assert_eq!(pca_frame(&x2, GroupKind::SpecialEuclidean, DEFAULT_EPS_SPEC).unwrap().len(), 2);
    }

    #[test]
    fn axis_aligned_covariance() {
        // centred points with covariance diag(1, 2, 3) up to a common factor
        let a = [1.0, 2.0f64.sqrt(), 3.0f64.sqrt()];
        let mut rows = Vec::new();
        for axis in 0..3 {
            for s in [-1.0, 1.0] {
                let mut r = [0.0; 3];
                r[axis] = s * a[axis];
                rows.push(r);
            }
        }
        let x = PointCloud::new(Matrix::from_rows(&rows));
        let f = pca_frame(&x, GroupKind::Euclidean, DEFAULT_EPS_SPEC).unwrap();
        assert_eq!(f.len(), 8);
        for g in f.elements() {
            assert!(g.translation().iter().all(|v| v.abs() < 1e-15));
            let r = g.rotation();
            for col in 0..3 {
                // ascending eigenvalues follow the axes 0, 1, 2
                assert!((r[(col, col)].abs() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn errors() {
        let x = PointCloud::new(Matrix::from_rows(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]));
        assert_eq!(
            pca_frame(&x, GroupKind::Euclidean, DEFAULT_EPS_SPEC),
            Err(FrameError::TooFewPoints { n: 3, need: 4 })
        );
        // square in the plane: two equal eigenvalues
        let sq = PointCloud::new(Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]));
        assert!(matches!(
            pca_frame(&sq, GroupKind::Euclidean, DEFAULT_EPS_SPEC),
            Err(FrameError::DegenerateSpectrum { .. })
        ));
        assert_eq!(
            pca_frame(&sq, GroupKind::Symmetric, DEFAULT_EPS_SPEC),
            Err(FrameError::UnsupportedGroup(GroupKind::Symmetric))
        );
    }

    #[test]
    fn left_equivariance_and_permutation_invariance() {
        let mut rng = Rng::new(41);
        for group in [GroupKind::Euclidean, GroupKind::SpecialEuclidean, GroupKind::Orthogonal] {
            for _ in 0..20 {
                let x = random_cloud(&mut rng, 12, 3);
                let rot = if group == GroupKind::SpecialEuclidean { rng.rotation(3) } else { rng.orthogonal(3) };
                let t = if group == GroupKind::Orthogonal { vec![0.0; 3] } else { rng.normal_vec(3) };
                let g = EuclideanMotion::new(rot, t).unwrap();
                let fx = pca_frame(&x, group, DEFAULT_EPS_SPEC).unwrap();
                let fgx = pca_frame(&x.act(&g).unwrap(), group, DEFAULT_EPS_SPEC).unwrap();
                let moved: Vec<_> = fx.elements().iter().map(|h| g.compose(h).unwrap()).collect();
                assert!(same_set(fgx.elements(), &moved, 1e-8));

                let p = Permutation::new(rng.permutation_map(12)).unwrap();
                let fpx = pca_frame(&x.act(&p).unwrap(), group, DEFAULT_EPS_SPEC).unwrap();
                for (a, b) in fx.elements().iter().zip(fpx.elements()) {
                    assert!(a.distance_max(b) <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn boundedness() {
        let mut rng = Rng::new(42);
        for _ in 0..20 {
            let x = random_cloud(&mut rng, 8, 3);
            let max_row = (0..8).map(|i| crate::numeric::norm2(x.points.row(i))).fold(0.0, f64::max);
            for g in pca_frame(&x, GroupKind::Euclidean, DEFAULT_EPS_SPEC).unwrap().elements() {
                assert!(crate::numeric::norm2(g.translation()) <= max_row);
                let gram = g.rotation().transpose().matmul(g.rotation());
                assert!(gram.sub(&Matrix::identity(3)).max_abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn distance_examples() {
        let mut rng = Rng::new(43);
        let g = EuclideanMotion::new(rng.orthogonal(3), vec![0.0; 3]).unwrap();
        assert_eq!(frame_distance(&g, &g), 0.0);
        let e = EuclideanMotion::identity(3);
        let flip = EuclideanMotion::new(Matrix::from_diagonal(&[-1.0, -1.0, 1.0]), vec![0.0; 3]).unwrap();
        assert_eq!(frame_distance(&e, &flip), 0.0);
        let quarter = EuclideanMotion::new(rz(std::f64::consts::FRAC_PI_2), vec![0.0; 3]).unwrap();
        assert!((frame_distance(&e, &quarter) - 2.0 / 3.0).abs() < 1e-15);
        let d = frame_distance(&g, &quarter);
        assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn shift_frame_is_the_mean() {
        let x = Signal(vec![1.0, 2.0, 6.0]);
        let f = shift_frame(&x).unwrap();
        assert_eq!(f.elements(), &[Shift(3.0)]);
        let moved = shift_frame(&x.act(&Shift(2.5)).unwrap()).unwrap();
        assert_eq!(moved.elements(), &[Shift(5.5)]);
    }
}
