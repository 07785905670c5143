use crate::numeric::Matrix;

use super::{GroupElement, GroupError, Representation};

const ORTHOGONALITY_TOL: f64 = 1e-10;
const DETERMINANT_TOL: f64 = 1e-8;

/// A Euclidean motion `x ↦ R x + t` with `R` orthogonal.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanMotion {
    rotation: Matrix,
    translation: Vec<f64>,
}

impl EuclideanMotion {
    /// Validates `‖RᵀR − I‖_F ≤ 1e-10` and `|det R| = 1` within 1e-8.
    pub fn new(rotation: Matrix, translation: Vec<f64>) -> Result<Self, GroupError> {
        let d = rotation.rows();
        if rotation.cols() != d || translation.len() != d {
            return Err(GroupError::DimensionMismatch { expected: d, found: translation.len().max(rotation.cols()) });
        }
        let gram = rotation.transpose().matmul(&rotation);
        let defect = gram.sub(&Matrix::identity(d)).frobenius_norm();
        if defect > ORTHOGONALITY_TOL {
            return Err(GroupError::NotOrthogonal { defect });
        }
        let det = rotation.determinant();
        if (det.abs() - 1.0).abs() > DETERMINANT_TOL {
            return Err(GroupError::NotOrthogonal { defect: (det.abs() - 1.0).abs() });
        }
        Ok(EuclideanMotion { rotation, translation })
    }

    /// Like [`new`](Self::new) but additionally requires `det R = +1`.
    pub fn new_proper(rotation: Matrix, translation: Vec<f64>) -> Result<Self, GroupError> {
        let g = Self::new(rotation, translation)?;
        if !g.is_proper() {
            return Err(GroupError::ImproperRotation);
        }
        Ok(g)
    }

    pub fn identity(d: usize) -> Self {
        EuclideanMotion { rotation: Matrix::identity(d), translation: vec![0.0; d] }
    }

    pub fn from_translation(t: Vec<f64>) -> Self {
        EuclideanMotion { rotation: Matrix::identity(t.len()), translation: t }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn rotation(&self) -> &Matrix {
        &self.rotation
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn determinant(&self) -> f64 {
        self.rotation.determinant()
    }

    pub fn is_proper(&self) -> bool {
        self.determinant() > 0.0
    }

    fn check_dim(&self, d: usize) -> Result<(), GroupError> {
        if d != self.dim() {
            return Err(GroupError::DimensionMismatch { expected: self.dim(), found: d });
        }
        Ok(())
    }

    /// Rows `x_i ↦ R x_i + t`, i.e. `X Rᵀ + 1 tᵀ`.
    pub fn apply_rows(&self, x: &Matrix) -> Result<Matrix, GroupError> {
        let mut out = self.rotate_rows(x)?;
        for i in 0..out.rows() {
            for (o, t) in out.row_mut(i).iter_mut().zip(&self.translation) {
                *o += t;
            }
        }
        Ok(out)
    }

    /// Rows `x_i ↦ Rᵀ (x_i − t)`, i.e. `(X − 1 tᵀ) R`.
    pub fn apply_inverse_rows(&self, x: &Matrix) -> Result<Matrix, GroupError> {
        self.check_dim(x.cols())?;
        let mut shifted = x.clone();
        for i in 0..shifted.rows() {
            for (o, t) in shifted.row_mut(i).iter_mut().zip(&self.translation) {
                *o -= t;
            }
        }
        Ok(shifted.matmul(&self.rotation))
    }

    /// `X Rᵀ`.
    pub fn rotate_rows(&self, x: &Matrix) -> Result<Matrix, GroupError> {
        self.check_dim(x.cols())?;
        Ok(x.matmul_transposed(&self.rotation))
    }

    /// `X R`.
    pub fn unrotate_rows(&self, x: &Matrix) -> Result<Matrix, GroupError> {
        self.check_dim(x.cols())?;
        Ok(x.matmul(&self.rotation))
    }

    /// Max deviation from another motion, over rotation and translation entries.
    pub fn distance_max(&self, other: &EuclideanMotion) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let r = self.rotation.sub(&other.rotation).max_abs();
        let t = self.translation.iter().zip(&other.translation).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        r.max(t)
    }
}

impl GroupElement for EuclideanMotion {
    /// `(R_g, t_g)(R_h, t_h) = (R_g R_h, R_g t_h + t_g)`.
    fn compose(&self, other: &Self) -> Result<Self, GroupError> {
        self.check_dim(other.dim())?;
        let rotation = self.rotation.matmul(&other.rotation);
        let mut translation = self.rotation.matvec(&other.translation);
        for (o, t) in translation.iter_mut().zip(&self.translation) {
            *o += t;
        }
        Ok(EuclideanMotion { rotation, translation })
    }

    fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        let translation = rt.matvec(&self.translation).into_iter().map(|v| -v).collect();
        EuclideanMotion { rotation: rt, translation }
    }
}

/// How a Euclidean motion acts on a model's output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputAction {
    /// `Y ↦ Y Rᵀ + 1 tᵀ` (positions).
    WithTranslation,
    /// `Y ↦ Y Rᵀ` (directions, velocities, normals).
    RotationOnly,
    /// `Y ↦ Y` (invariant outputs).
    Trivial,
}

impl Representation<EuclideanMotion> for OutputAction {
    fn apply(&self, g: &EuclideanMotion, y: &Matrix) -> Result<Matrix, GroupError> {
        match self {
            OutputAction::WithTranslation => g.apply_rows(y),
            OutputAction::RotationOnly => g.rotate_rows(y),
            OutputAction::Trivial => Ok(y.clone()),
        }
    }

    fn apply_inverse(&self, g: &EuclideanMotion, y: &Matrix) -> Result<Matrix, GroupError> {
        match self {
            OutputAction::WithTranslation => g.apply_inverse_rows(y),
            OutputAction::RotationOnly => g.unrotate_rows(y),
            OutputAction::Trivial => Ok(y.clone()),
        }
    }

    fn pull_back(&self, g: &EuclideanMotion, upstream: &Matrix, inverse: bool) -> Result<Matrix, GroupError> {
        match (self, inverse) {
            (OutputAction::Trivial, _) => Ok(upstream.clone()),
            (_, false) => g.unrotate_rows(upstream),
            (_, true) => g.rotate_rows(upstream),
        }
    }

    fn is_trivial(&self) -> bool {
        matches!(self, OutputAction::Trivial)
    }
}

/// Free-function form of [`Representation::apply`] for motions.
pub fn act_output(g: &EuclideanMotion, y: &Matrix, mode: OutputAction) -> Result<Matrix, GroupError> {
    mode.apply(g, y)
}
