use crate::frame::{quotient, FrameBuilder, PcaFrameBuilder};
use crate::group::{
    Action, EuclideanMotion, Fingerprint, Geometric, GroupKind, NodeAction, OrbitKey, OutputAction, Permutation,
    Representation,
};
use crate::numeric::{Matrix, Rng};

use super::{fa_equivariant, fa_equivariant_gradient, fa_quotient, fa_sampled_equivariant, frame_input, FaError};

/// A backbone `Φ: X → R^{n×k}`.
pub trait Model<X>: Send + Sync {
    fn eval(&self, x: &X) -> Result<Matrix, FaError>;
}

impl<X, F> Model<X> for F
where
    F: Fn(&X) -> Result<Matrix, FaError> + Send + Sync,
{
    fn eval(&self, x: &X) -> Result<Matrix, FaError> {
        self(x)
    }
}

/// A model with trainable parameters and a reverse-mode gradient.
pub trait Differentiable<X>: Model<X> {
    fn param_count(&self) -> usize;
    /// `∂⟨U, Φ(X)⟩/∂θ` for the upstream gradient `U`.
    fn param_gradient(&self, x: &X, upstream: &Matrix) -> Result<Vec<f64>, FaError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Averaging {
    /// Every frame element.
    Full,
    /// One element per stabilizer orbit; invariant outputs only.
    Quotient,
    /// `k` uniform draws.
    Sampled(usize),
}

/// `Ψ = ⟨Φ⟩_F`: a backbone made symmetric by averaging over a frame.
#[derive(Clone, Debug)]
pub struct FaWrapper<B, M, R> {
    pub builder: B,
    pub model: M,
    pub output: R,
    pub averaging: Averaging,
}

impl<B, M, R> FaWrapper<B, M, R> {
    pub fn new(builder: B, model: M, output: R, averaging: Averaging) -> Result<Self, FaError> {
        if averaging == Averaging::Sampled(0) {
            return Err(FaError::ZeroSamples);
        }
        Ok(FaWrapper { builder, model, output, averaging })
    }

    pub fn eval<X>(&self, x: &X, rng: &mut Rng) -> Result<Matrix, FaError>
    where
        B: FrameBuilder<X>,
        M: Model<X>,
        R: Representation<B::Element>,
        X: Action<B::Element> + Fingerprint + OrbitKey,
    {
        let phi = |y: &X| self.model.eval(y);
        match self.averaging {
            Averaging::Full => {
                let frame = self.builder.enumerate(x)?.ok_or(FaError::NotEnumerable)?;
                fa_equivariant(phi, &frame, x, &self.output)
            }
            Averaging::Quotient => {
                if !self.output.is_trivial() {
                    return Err(FaError::QuotientNeedsInvariantOutput);
                }
                let frame = self.builder.enumerate(x)?.ok_or(FaError::NotEnumerable)?;
                fa_quotient(phi, &quotient(&frame, x)?, x)
            }
            Averaging::Sampled(k) => {
                let sampler = self.builder.sampler(x)?;
                fa_sampled_equivariant(phi, sampler.as_ref(), x, &self.output, k, rng)
            }
        }
    }

    /// Parameter gradient of `⟨U, Ψ(X)⟩` with the frame held fixed.
    /// Sampled averaging has no deterministic gradient and is rejected.
    pub fn param_gradient<X>(&self, x: &X, upstream: &Matrix) -> Result<Vec<f64>, FaError>
    where
        B: FrameBuilder<X>,
        M: Differentiable<X>,
        R: Representation<B::Element>,
        X: Action<B::Element> + Fingerprint + OrbitKey,
    {
        let grad = |y: &X, u: &Matrix| self.model.param_gradient(y, u);
        let frame = self.builder.enumerate(x)?.ok_or(FaError::NotEnumerable)?;
        match self.averaging {
            Averaging::Full => fa_equivariant_gradient(grad, &frame, x, &self.output, upstream),
            Averaging::Quotient => {
                let q = quotient(&frame, x)?;
                let mut acc = vec![0.0; self.model.param_count()];
                for g in &q.representatives {
                    let part = grad(&frame_input(x, g, q.convention)?, upstream)?;
                    acc.iter_mut().zip(part).for_each(|(a, p)| *a += p);
                }
                let m = q.m_f() as f64;
                Ok(acc.into_iter().map(|a| a / m).collect())
            }
            Averaging::Sampled(_) => Err(FaError::NotEnumerable),
        }
    }
}

/// Relative symmetry violations of a wrapped model, each
/// `‖Ψ(T X) − T Ψ(X)‖_F / max(1, ‖Ψ(X)‖_F)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondSymmetry {
    /// Node permutation `h` only.
    pub permutation: f64,
    /// Euclidean motion `g` only.
    pub euclidean: f64,
    /// `h` and `g` together.
    pub joint: f64,
}

fn random_motion(group: GroupKind, d: usize, rng: &mut Rng) -> Result<EuclideanMotion, FaError> {
    let rotation = match group {
        GroupKind::SpecialEuclidean => rng.rotation(d),
        _ => rng.orthogonal(d),
    };
    let translation = if group.removes_translation() { rng.normal_vec(d) } else { vec![0.0; d] };
    Ok(EuclideanMotion::new(rotation, translation)?)
}

/// Checks that a PCA-frame model also respects node relabelings, which the
/// frame itself is invariant to. `nodes` says how outputs move under them.
pub fn second_symmetry_check<X, M>(
    wrapper: &FaWrapper<PcaFrameBuilder, M, OutputAction>,
    x: &X,
    nodes: NodeAction,
    rng: &mut Rng,
) -> Result<SecondSymmetry, FaError>
where
    X: Geometric + Action<EuclideanMotion> + Action<Permutation> + Fingerprint + OrbitKey,
    PcaFrameBuilder: FrameBuilder<X, Element = EuclideanMotion>,
    M: Model<X>,
{
    let h = Permutation::new(rng.permutation_map(x.node_count()))?;
    let g = random_motion(wrapper.builder.group, x.spatial_dim(), rng)?;
    let base = wrapper.eval(x, rng)?;
    let scale = base.frobenius_norm().max(1.0);

    let hx: X = x.act(&h)?;
    let gx: X = x.act(&g)?;
    let hgx: X = gx.act(&h)?;
    let moved_h = nodes.apply(&h, &base)?;
    let moved_g = wrapper.output.apply(&g, &base)?;
    let moved_hg = nodes.apply(&h, &moved_g)?;

    let violation = |y: &X, expected: &Matrix, rng: &mut Rng| -> Result<f64, FaError> {
        Ok(wrapper.eval(y, rng)?.sub(expected).frobenius_norm() / scale)
    };
    Ok(SecondSymmetry {
        permutation: violation(&hx, &moved_h, rng)?,
        euclidean: violation(&gx, &moved_g, rng)?,
        joint: violation(&hgx, &moved_hg, rng)?,
    })
}
