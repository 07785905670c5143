use crate::numeric::{dot, Rng};

use super::{Backbone, BackboneError, BackboneInput, ParamVector};

/// Outcome of a central-difference gradient check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Max over checked parameters of `|analytic − numeric| / max(1, |numeric|)`.
    pub max_rel_error: f64,
    pub checked: usize,
    /// Parameters skipped because a perturbation crossed a kink.
    pub rejected: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.checked > 0 && self.max_rel_error <= tol
    }
}

/// Compares `analytic` with central differences of `loss`, which returns the
/// loss value and an activation pattern. Parameters whose `±h` perturbation
/// changes the pattern are rejected rather than compared.
pub fn grad_check_fn<E>(
    theta: &[f64],
    analytic: &[f64],
    h: f64,
    mut loss: impl FnMut(&[f64]) -> Result<(f64, Vec<u32>), E>,
) -> Result<GradCheckReport, E> {
    let (_, base) = loss(theta)?;
    let mut report = GradCheckReport { max_rel_error: 0.0, checked: 0, rejected: 0 };
    let mut probe = theta.to_vec();
    for k in 0..theta.len() {
        probe[k] = theta[k] + h;
        let (plus, pattern_plus) = loss(&probe)?;
        probe[k] = theta[k] - h;
        let (minus, pattern_minus) = loss(&probe)?;
        probe[k] = theta[k];
        if pattern_plus != base || pattern_minus != base {
            report.rejected += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * h);
        let err = (analytic[k] - numeric).abs() / numeric.abs().max(1.0);
        report.max_rel_error = report.max_rel_error.max(err);
        report.checked += 1;
    }
    Ok(report)
}

const UPSTREAM_SEED: u64 = 0x9_7ad;

/// Gradient check of `⟨U, Φ(input)⟩` for a fixed pseudo-random `U`.
pub fn grad_check(
    backbone: &Backbone,
    params: &ParamVector,
    input: &BackboneInput,
    h: f64,
) -> Result<GradCheckReport, BackboneError> {
    let out = backbone.forward(params, input)?;
    let upstream = Rng::new(UPSTREAM_SEED).normal_matrix(out.rows(), out.cols());
    let analytic = backbone.backward(params, input, &upstream)?;
    let mut trial = params.clone();
    grad_check_fn(params.as_slice(), &analytic, h, |theta| {
        trial.as_mut_slice().copy_from_slice(theta);
        let y = backbone.forward(&trial, input)?;
        Ok((dot(y.as_slice(), upstream.as_slice()), backbone.activation_pattern(&trial, input)?))
    })
}
