//! Frame averaging operators, the wrapper that applies them to a model, and
//! symmetry diagnostics.

mod wrapper;

pub use wrapper::{second_symmetry_check, Averaging, Differentiable, FaWrapper, Model, SecondSymmetry};

use thiserror::Error;

use crate::frame::{Convention, Frame, FrameError, FrameSampler, QuotientFrame};
use crate::group::{Action, Fingerprint, GroupElement, GroupError, Permutation, Representation};
use crate::numeric::{Matrix, Rng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FaError {
    #[error("frame was built for input {expected:#x}, got {found:#x}")]
    FingerprintMismatch { expected: u64, found: u64 },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("sampled averaging needs k >= 1")]
    ZeroSamples,
    #[error("quotient averaging is only valid for invariant outputs")]
    QuotientNeedsInvariantOutput,
    #[error("frame is too large to enumerate; use sampled averaging")]
    NotEnumerable,
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("model error: {0}")]
    Model(String),
}

/// Values that can be averaged.
pub trait Summand: Sized {
    fn accumulate(&self, acc: &mut Option<Self>) -> Result<(), FaError>;
    fn scaled(self, s: f64) -> Self;
}

impl Summand for f64 {
    fn accumulate(&self, acc: &mut Option<Self>) -> Result<(), FaError> {
        *acc = Some(acc.unwrap_or(0.0) + self);
        Ok(())
    }

    fn scaled(self, s: f64) -> Self {
        self * s
    }
}

impl Summand for Vec<f64> {
    fn accumulate(&self, acc: &mut Option<Self>) -> Result<(), FaError> {
        match acc {
            None => *acc = Some(self.clone()),
            Some(a) if a.len() == self.len() => a.iter_mut().zip(self).for_each(|(a, b)| *a += b),
            Some(a) => return Err(FaError::ShapeMismatch { expected: (a.len(), 1), found: (self.len(), 1) }),
        }
        Ok(())
    }

    fn scaled(mut self, s: f64) -> Self {
        self.iter_mut().for_each(|v| *v *= s);
        self
    }
}

impl Summand for Matrix {
    fn accumulate(&self, acc: &mut Option<Self>) -> Result<(), FaError> {
        match acc {
            None => *acc = Some(self.clone()),
            Some(a) if a.shape() == self.shape() => a.add_assign(self),
            Some(a) => return Err(FaError::ShapeMismatch { expected: a.shape(), found: self.shape() }),
        }
        Ok(())
    }

    fn scaled(mut self, s: f64) -> Self {
        self.scale_assign(s);
        self
    }
}

fn check_fingerprint<X: Fingerprint>(expected: Option<u64>, x: &X) -> Result<(), FaError> {
    match expected {
        Some(e) if e != x.fingerprint() => Err(FaError::FingerprintMismatch { expected: e, found: x.fingerprint() }),
        _ => Ok(()),
    }
}

/// The input a frame element contributes: `ρ(g)⁻¹X` (left) or `ρ(g)X` (right).
pub fn frame_input<X: Action<G>, G: GroupElement>(x: &X, g: &G, convention: Convention) -> Result<X, GroupError> {
    match convention {
        Convention::Left => x.act_inverse(g),
        Convention::Right => x.act(g),
    }
}

/// Maps a term's output back to the input's coordinates: `ρ₂(g)Y` (left) or `ρ₂(g)⁻¹Y` (right).
pub fn frame_output<G, R: Representation<G> + ?Sized>(
    rep: &R,
    g: &G,
    y: &Matrix,
    convention: Convention,
) -> Result<Matrix, GroupError> {
    match convention {
        Convention::Left => rep.apply(g, y),
        Convention::Right => rep.apply_inverse(g, y),
    }
}

fn mean<T: Summand>(terms: impl IntoIterator<Item = Result<T, FaError>>) -> Result<T, FaError> {
    let mut acc = None;
    let mut count = 0usize;
    for t in terms {
        t?.accumulate(&mut acc)?;
        count += 1;
    }
    let sum = acc.ok_or(FaError::ZeroSamples)?;
    Ok(sum.scaled(1.0 / count as f64))
}

/// `⟨φ⟩_F(X)`: mean of `φ` over the frame's transformed inputs, summed in frame order.
pub fn fa_invariant<X, G, T, F>(phi: F, frame: &Frame<G>, x: &X) -> Result<T, FaError>
where
    G: GroupElement,
    X: Action<G> + Fingerprint,
    T: Summand,
    F: Fn(&X) -> Result<T, FaError>,
{
    check_fingerprint(frame.fingerprint(), x)?;
    mean(frame.elements().iter().map(|g| phi(&frame_input(x, g, frame.convention())?)))
}

/// `⟨Φ⟩_F(X)`: mean of `ρ₂(g)Φ(ρ₁(g)⁻¹X)` (left) or `ρ₂(g)⁻¹Φ(ρ₁(g)X)` (right).
pub fn fa_equivariant<X, G, R, F>(phi: F, frame: &Frame<G>, x: &X, rep: &R) -> Result<Matrix, FaError>
where
    G: GroupElement,
    X: Action<G> + Fingerprint,
    R: Representation<G> + ?Sized,
    F: Fn(&X) -> Result<Matrix, FaError>,
{
    check_fingerprint(frame.fingerprint(), x)?;
    let conv = frame.convention();
    mean(frame.elements().iter().map(|g| {
        let y = phi(&frame_input(x, g, conv)?)?;
        Ok(frame_output(rep, g, &y, conv)?)
    }))
}

/// Invariant averaging over one representative per stabilizer orbit.
pub fn fa_quotient<X, G, T, F>(phi: F, q: &QuotientFrame<G>, x: &X) -> Result<T, FaError>
where
    G: GroupElement,
    X: Action<G> + Fingerprint,
    T: Summand,
    F: Fn(&X) -> Result<T, FaError>,
{
    check_fingerprint(q.fingerprint, x)?;
    mean(q.representatives.iter().map(|g| phi(&frame_input(x, g, q.convention)?)))
}

/// Monte-Carlo invariant averaging over `k` uniform frame draws.
pub fn fa_sampled<X, G, T, F>(
    phi: F,
    frame: &(impl FrameSampler<G> + ?Sized),
    x: &X,
    k: usize,
    rng: &mut Rng,
) -> Result<T, FaError>
where
    G: GroupElement,
    X: Action<G> + Fingerprint,
    T: Summand,
    F: Fn(&X) -> Result<T, FaError>,
{
    if k == 0 {
        return Err(FaError::ZeroSamples);
    }
    check_fingerprint(frame.fingerprint(), x)?;
    let conv = frame.convention();
    let draws: Vec<G> = (0..k).map(|_| frame.draw(rng)).collect();
    mean(draws.iter().map(|g| phi(&frame_input(x, g, conv)?)))
}

/// Monte-Carlo equivariant averaging over `k` uniform frame draws.
pub fn fa_sampled_equivariant<X, G, R, F>(
    phi: F,
    frame: &(impl FrameSampler<G> + ?Sized),
    x: &X,
    rep: &R,
    k: usize,
    rng: &mut Rng,
) -> Result<Matrix, FaError>
where
    G: GroupElement,
    X: Action<G> + Fingerprint,
    R: Representation<G> + ?Sized,
    F: Fn(&X) -> Result<Matrix, FaError>,
{
    if k == 0 {
        return Err(FaError::ZeroSamples);
    }
    check_fingerprint(frame.fingerprint(), x)?;
    let conv = frame.convention();
    let draws: Vec<G> = (0..k).map(|_| frame.draw(rng)).collect();
    mean(draws.iter().map(|g| {
        let y = phi(&frame_input(x, g, conv)?)?;
        Ok(frame_output(rep, g, &y, conv)?)
    }))
}

/// Parameter gradient of `⟨Φ⟩_F` with the frame held fixed: the mean over
/// frame elements of the backbone gradient at the transformed input, with
/// the upstream gradient pulled back through the output representation.
pub fn fa_equivariant_gradient<X, G, R, F>(
    grad: F,
    frame: &Frame<G>,
    x: &X,
    rep: &R,
    upstream: &Matrix,
) -> Result<Vec<f64>, FaError>
where
    G: GroupElement,
    X: Action<G> + Fingerprint,
    R: Representation<G> + ?Sized,
    F: Fn(&X, &Matrix) -> Result<Vec<f64>, FaError>,
{
    check_fingerprint(frame.fingerprint(), x)?;
    let conv = frame.convention();
    let inverse = conv == Convention::Right;
    mean(frame.elements().iter().map(|g| {
        let pulled = rep.pull_back(g, upstream, inverse)?;
        grad(&frame_input(x, g, conv)?, &pulled)
    }))
}

/// `(1/m) Σ ‖φ(ρ(g_i)X) − v‖₂` with `v` the mean of the `m` outputs, over the given transforms.
pub fn invariance_error_over<X, G, F>(model: F, x: &X, transforms: &[G]) -> Result<f64, FaError>
where
    X: Action<G>,
    G: GroupElement,
    F: FnMut(&X) -> Result<Vec<f64>, FaError>,
{
    let mut model = model;
    let outputs = transforms.iter().map(|g| model(&x.act(g)?)).collect::<Result<Vec<_>, _>>()?;
    if outputs.is_empty() {
        return Err(FaError::ZeroSamples);
    }
    let v = mean(outputs.iter().cloned().map(Ok))?;
    let total: f64 = outputs.iter().map(|o| o.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()).sum();
    Ok(total / outputs.len() as f64)
}

/// Invariance error under `m` uniformly random node permutations.
pub fn invariance_error<X, F>(model: F, x: &X, n: usize, m: usize, rng: &mut Rng) -> Result<f64, FaError>
where
    X: Action<Permutation>,
    F: FnMut(&X) -> Result<Vec<f64>, FaError>,
{
    let perms: Vec<Permutation> = (0..m).map(|_| Permutation::new(rng.permutation_map(n))).collect::<Result<_, _>>()?;
    invariance_error_over(model, x, &perms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{
        frame_sample, graph_sort_frame, pca_frame, quotient, shift_frame, trivial_frame, DEFAULT_EPS_EIG,
        DEFAULT_EPS_SPEC, DEFAULT_MAX_ENUMERATION,
    };
    use crate::graphio::Graph;
    use crate::group::{EuclideanMotion, GroupKind, OutputAction, PointCloud, Shift, ShiftOutput, Signal};
    use crate::numeric::DEFAULT_TAU_LEX;

    fn sort_frame(g: &Graph) -> Frame<Permutation> {
        graph_sort_frame(g, DEFAULT_TAU_LEX, DEFAULT_EPS_EIG, DEFAULT_MAX_ENUMERATION)
            .unwrap()
            .as_enumerated()
            .unwrap()
            .clone()
    }

    /// A fixed non-symmetric function of the adjacency.
    fn graph_phi(g: &Graph) -> Result<f64, FaError> {
        let a = g.adjacency();
        let n = a.rows();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += a[(i, j)] * ((i * 7 + j * 3) as f64).sin();
            }
        }
        Ok(s)
    }

    fn phi_signal(x: &Signal) -> Result<f64, FaError> {
        Ok(x.0.iter().enumerate().map(|(i, v)| (v * (i + 1) as f64).tanh()).sum())
    }

    #[test]
    fn mean_shift_closed_forms() {
        let mut rng = Rng::new(70);
        let x = Signal(rng.normal_vec(8));
        let frame = shift_frame(&x).unwrap();
        let mean = x.0.iter().sum::<f64>() / 8.0;
        let centred = Signal(x.0.iter().map(|v| v - mean).collect());
        let inv: f64 = fa_invariant(phi_signal, &frame, &x).unwrap();
        assert!((inv - phi_signal(&centred).unwrap()).abs() <= 1e-12);

        let vector_phi = |s: &Signal| Ok(Matrix::from_rows(&[s.0.iter().map(|v| v.sin()).collect::<Vec<_>>()]));
        let eq = fa_equivariant(vector_phi, &frame, &x, &ShiftOutput).unwrap();
        let expected: Vec<f64> = centred.0.iter().map(|v| v.sin() + mean).collect();
        assert!(eq.row(0).iter().zip(&expected).all(|(a, b)| (a - b).abs() <= 1e-12));

        let shifted = x.act(&Shift(1.75)).unwrap();
        let inv2: f64 = fa_invariant(phi_signal, &shift_frame(&shifted).unwrap(), &shifted).unwrap();
        assert!((inv - inv2).abs() <= 1e-12);
    }

    #[test]
    fn constant_backbone() {
        let g = Graph::unweighted(4, &[(0, 1), (1, 2)]).unwrap();
        let v: f64 = fa_invariant(|_: &Graph| Ok(2.5), &sort_frame(&g), &g).unwrap();
        assert_eq!(v, 2.5);
    }

    #[test]
    fn fingerprint_is_checked() {
        let g = Graph::unweighted(3, &[(0, 1)]).unwrap();
        let other = Graph::unweighted(3, &[(1, 2)]).unwrap();
        let r: Result<f64, _> = fa_invariant(graph_phi, &sort_frame(&g), &other);
        assert!(matches!(r, Err(FaError::FingerprintMismatch { .. })));
    }

    #[test]
    fn c3_full_quotient_and_sampled_agree() {
        let c3 = Graph::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let f = sort_frame(&c3);
        let full: f64 = fa_invariant(graph_phi, &f, &c3).unwrap();
        assert_eq!(full, graph_phi(&c3).unwrap());
        let q = quotient(&f, &c3).unwrap();
        let quo: f64 = fa_quotient(graph_phi, &q, &c3).unwrap();
        assert_eq!(quo, full);
        let mut rng = Rng::new(71);
        let sampled: f64 = fa_sampled(graph_phi, &f, &c3, 1, &mut rng).unwrap();
        assert_eq!(sampled, full);
        let zero: Result<f64, _> = fa_sampled(graph_phi, &f, &c3, 0, &mut rng);
        assert_eq!(zero, Err(FaError::ZeroSamples));
    }

    #[test]
    fn star_quotient_matches_full() {
        let star = Graph::unweighted(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let f = sort_frame(&star);
        let q = quotient(&f, &star).unwrap();
        assert_eq!(q.m_f(), f.len() / 6);
        let full: f64 = fa_invariant(graph_phi, &f, &star).unwrap();
        let quo: f64 = fa_quotient(graph_phi, &q, &star).unwrap();
        assert!((full - quo).abs() <= 1e-12);
    }

    #[test]
    fn whole_group_average_is_brute_force() {
        let g = Graph::unweighted(4, &[(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap();
        let fa: f64 = fa_invariant(graph_phi, &trivial_frame(4).unwrap(), &g).unwrap();
        let mut brute = 0.0;
        for h in Permutation::all(4) {
            brute += graph_phi(&g.act_inverse(&h).unwrap()).unwrap();
        }
        assert!((fa - brute / 24.0).abs() <= 1e-12 * fa.abs().max(1.0));
    }

    #[test]
    fn graph_invariance_and_sampling() {
        let mut rng = Rng::new(72);
        let g = Graph::unweighted(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]).unwrap();
        let f = sort_frame(&g);
        let base: f64 = fa_invariant(graph_phi, &f, &g).unwrap();
        for _ in 0..20 {
            let h = Permutation::new(rng.permutation_map(5)).unwrap();
            let moved = g.act(&h).unwrap();
            let v: f64 = fa_invariant(graph_phi, &sort_frame(&moved), &moved).unwrap();
            assert!((v - base).abs() <= 1e-12 * (1.0 + base.abs()));
        }
        // a complete sample covering the frame reproduces the full average
        let mut acc = 0.0;
        for g_el in f.elements() {
            acc += graph_phi(&g.act(g_el).unwrap()).unwrap();
        }
        assert!((acc / f.len() as f64 - base).abs() <= 1e-12);
    }

    #[test]
    fn sampled_variance_shrinks_with_k() {
        let p4 = Graph::unweighted(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let two_triangles = Graph::unweighted(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap();
        for g in [p4, two_triangles] {
            let f = sort_frame(&g);
            let mut rng = Rng::new(73);
            let variance = |k: usize, rng: &mut Rng| {
                let vals: Vec<f64> = (0..1000).map(|_| fa_sampled(graph_phi, &f, &g, k, rng).unwrap()).collect();
                let m = vals.iter().sum::<f64>() / vals.len() as f64;
                vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64
            };
            let v1 = variance(1, &mut rng);
            let v4 = variance(4, &mut rng);
            assert!(v4 <= v1, "{v4} > {v1}");
        }
    }

    #[test]
    fn identity_backbone_is_reproduced() {
        let mut rng = Rng::new(74);
        let x = PointCloud::new(rng.normal_matrix(9, 3));
        let f = pca_frame(&x, GroupKind::Euclidean, DEFAULT_EPS_SPEC).unwrap();
        let id = |c: &PointCloud| Ok(c.points.clone());
        let out = fa_equivariant(id, &f, &x, &OutputAction::WithTranslation).unwrap();
        assert!(out.sub(&x.points).max_abs() <= 1e-12);
        // centroid removal is equivariant for the rotation-only output
        let centre = |c: &PointCloud| {
            let t = c.centroid();
            Ok(c.points.sub(&Matrix::from_rows(&vec![t; c.len()])))
        };
        let direct = centre(&x).unwrap();
        let out = fa_equivariant(centre, &f, &x, &OutputAction::RotationOnly).unwrap();
        assert!(out.sub(&direct).max_abs() <= 1e-10);
    }

    #[test]
    fn equivariance_for_all_output_actions() {
        let mut rng = Rng::new(75);
        let w = rng.normal_matrix(3, 3);
        let phi = move |c: &PointCloud| Ok(c.points.matmul(&w).map(f64::tanh));
        for mode in [OutputAction::WithTranslation, OutputAction::RotationOnly, OutputAction::Trivial] {
            for _ in 0..10 {
                let x = PointCloud::new(rng.normal_matrix(7, 3));
                let g = EuclideanMotion::new(rng.orthogonal(3), rng.normal_vec(3)).unwrap();
                let gx = x.act(&g).unwrap();
                let a =
                    fa_equivariant(&phi, &pca_frame(&gx, GroupKind::Euclidean, DEFAULT_EPS_SPEC).unwrap(), &gx, &mode)
                        .unwrap();
                let base =
                    fa_equivariant(&phi, &pca_frame(&x, GroupKind::Euclidean, DEFAULT_EPS_SPEC).unwrap(), &x, &mode)
                        .unwrap();
                let b = mode.apply(&g, &base).unwrap();
                assert!(a.sub(&b).frobenius_norm() <= 1e-8 * base.frobenius_norm().max(1.0));
            }
        }
    }

    #[test]
    fn invariance_error_examples() {
        let mut rng = Rng::new(76);
        let g = Graph::unweighted(5, &[(0, 1), (1, 2), (2, 3), (1, 4)]).unwrap();
        let constant = invariance_error(|_: &Graph| Ok(vec![1.0, 2.0]), &g, 5, 50, &mut rng).unwrap();
        assert_eq!(constant, 0.0);
        let raw = invariance_error(|x: &Graph| Ok(vec![graph_phi(x)?]), &g, 5, 50, &mut rng).unwrap();
        assert!(raw > 1e-3);
        let fa =
            invariance_error(|x: &Graph| Ok(vec![fa_invariant(graph_phi, &sort_frame(x), x)?]), &g, 5, 50, &mut rng)
                .unwrap();
        assert!(fa <= 1e-9);
    }

    #[test]
    fn sampled_draws_cover_c4_orbits_uniformly() {
        let c4 = Graph::unweighted(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let f = sort_frame(&c4);
        let q = quotient(&f, &c4).unwrap();
        assert_eq!((f.len(), q.orbit_size, q.m_f()), (24, 8, 3));
        let reps: Vec<Graph> = q.representatives.iter().map(|g| c4.act(g).unwrap()).collect();
        let mut counts = vec![0usize; 3];
        let mut rng = Rng::new(77);
        let draws = 10_000;
        for g in frame_sample(&f, &mut rng, draws) {
            let moved = c4.act(&g).unwrap();
            counts[reps.iter().position(|r| *r == moved).unwrap()] += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() <= 5.0 * sigma);
        }
    }

    #[test]
    fn gradient_of_mean_is_mean_of_gradients() {
        // Φ(X) = X W with W the parameters; dL/dW for L = <Φ, U> is Xᵀ U
        let mut rng = Rng::new(78);
        let x = PointCloud::new(rng.normal_matrix(6, 3));
        let f = pca_frame(&x, GroupKind::Euclidean, DEFAULT_EPS_SPEC).unwrap();
        let upstream = rng.normal_matrix(6, 3);
        let grad = |c: &PointCloud, up: &Matrix| Ok(c.points.transpose().matmul(up).into_vec());
        let mode = OutputAction::RotationOnly;
        let analytic = fa_equivariant_gradient(grad, &f, &x, &mode, &upstream).unwrap();
        let w0 = rng.normal_matrix(3, 3);
        let loss = |w: &Matrix| {
            let phi = |c: &PointCloud| Ok(c.points.matmul(w));
            let out = fa_equivariant(phi, &f, &x, &mode).unwrap();
            crate::numeric::dot(out.as_slice(), upstream.as_slice())
        };
        for k in 0..9 {
            let mut plus = w0.clone();
            let mut minus = w0.clone();
            plus.as_mut_slice()[k] += 1e-5;
            minus.as_mut_slice()[k] -= 1e-5;
            let numeric = (loss(&plus) - loss(&minus)) / 2e-5;
            assert!((numeric - analytic[k]).abs() <= 1e-8 * numeric.abs().max(1.0));
        }
    }
}
