use crate::backbone::{encode_geometric, sgd_step, Activation, Backbone, BoundBackbone, ParamVector};
use crate::fa::{Averaging, FaError, FaWrapper};
use crate::frame::PcaFrameBuilder;
use crate::group::{Action, EuclideanMotion, GeometricGraph, GroupKind, OutputAction};
use crate::numeric::{Matrix, Rng};

use super::config::{ExperimentConfig, RegressConfig};
use super::table::ResultTable;
use super::CliError;

const TRAIN_STREAM: u64 = 6 << 40;
const TEST_STREAM: u64 = 7 << 40;
const PARAM_STREAM: u64 = 8 << 40;
const MOTION_STREAM: u64 = 9 << 40;

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

/// One sample of the toy task: unit charges `±1` at Gaussian positions with
/// Gaussian velocities; the target is one Euler step
/// `x + dt·v + ½dt²·F` under softened Coulomb forces. Edge attributes are
/// the charge products `q_i q_j`.
pub fn dynamics_sample(rng: &mut Rng, particles: usize, dt: f64, softening: f64) -> (GeometricGraph, Matrix) {
    let x = rng.normal_matrix(particles, 3);
    let v = rng.normal_matrix(particles, 3);
    let q: Vec<f64> = (0..particles).map(|_| if rng.uniform() < 0.5 { -1.0 } else { 1.0 }).collect();
    let mut edges = Matrix::zeros(particles, particles);
    let mut target = Matrix::zeros(particles, 3);
    for i in 0..particles {
        let mut force = [0.0; 3];
        for j in (0..particles).filter(|&j| j != i) {
            edges[(i, j)] = q[i] * q[j];
            let diff: Vec<f64> = (0..3).map(|k| x[(i, k)] - x[(j, k)]).collect();
            let r2: f64 = diff.iter().map(|d| d * d).sum();
            let s = q[i] * q[j] / (r2 + softening).powf(1.5);
            for k in 0..3 {
                force[k] += s * diff[k];
            }
        }
        for k in 0..3 {
            target[(i, k)] = x[(i, k)] + dt * v[(i, k)] + 0.5 * dt * dt * force[k];
        }
    }
    let g = GeometricGraph::new(x, Some(v), edges).expect("edge matrix is symmetric by construction");
    (g, target)
}

type Sample = (GeometricGraph, Matrix);
type Wrapped = FaWrapper<PcaFrameBuilder, BoundBackbone<GeometricGraph>, OutputAction>;

fn regress_model(c: &RegressConfig) -> Result<Backbone, CliError> {
    Backbone::mpnn(6, c.hidden, 3, c.layers, Activation::Silu).and_then(Backbone::with_skip).map_err(failed)
}

fn wrap(backbone: &Backbone, params: ParamVector) -> Result<Wrapped, CliError> {
    let bound = BoundBackbone::new(backbone.clone(), params, encode_geometric).map_err(failed)?;
    FaWrapper::new(PcaFrameBuilder::new(GroupKind::Euclidean), bound, OutputAction::WithTranslation, Averaging::Full)
        .map_err(failed)
}

/// Mean squared error per coordinate over a sample set.
fn mse(model: &Wrapped, data: &[Sample]) -> Result<f64, FaError> {
    let mut rng = Rng::new(0);
    let mut total = 0.0;
    let mut count = 0usize;
    for (x, y) in data {
        let d = model.eval(x, &mut rng)?.sub(y);
        total += d.as_slice().iter().map(|v| v * v).sum::<f64>();
        count += d.as_slice().len();
    }
    Ok(total / count as f64)
}

fn mse_gradient(model: &Wrapped, data: &[Sample]) -> Result<Vec<f64>, FaError> {
    let mut rng = Rng::new(0);
    let count = (data.len() * data[0].1.as_slice().len()) as f64;
    let mut grad = vec![0.0; model.model.params.len()];
    for (x, y) in data {
        let upstream = model.eval(x, &mut rng)?.sub(y).scale(2.0 / count);
        for (g, d) in grad.iter_mut().zip(model.param_gradient(x, &upstream)?) {
            *g += d;
        }
    }
    Ok(grad)
}

/// Moves every test input and its target by one random motion of E(3).
fn moved(data: &[Sample], rng: &mut Rng) -> Result<Vec<Sample>, CliError> {
    data.iter()
        .map(|(x, y)| {
            let g = EuclideanMotion::new(rng.orthogonal(3), rng.normal_vec(3)).map_err(failed)?;
            Ok((x.act(&g).map_err(failed)?, g.apply_rows(y).map_err(failed)?))
        })
        .collect()
}

/// Trains a PCA-frame-averaged MPNN by full-batch SGD and logs train loss,
/// test loss and the loss on rigidly moved test data.
pub fn cmd_regress(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let c = &config.regress;
    let draw = |stream: u64, count: usize| -> Vec<Sample> {
        (0..count)
            .map(|i| dynamics_sample(&mut Rng::derived(config.seed, stream + i as u64), c.particles, c.dt, c.softening))
            .collect()
    };
    let train = draw(TRAIN_STREAM, c.train);
    let test = draw(TEST_STREAM, c.test);
    let test_moved = moved(&test, &mut Rng::derived(config.seed, MOTION_STREAM))?;
    let backbone = regress_model(c)?;
    let mut params = backbone.init_params(&mut Rng::derived(config.seed, PARAM_STREAM));

    let mut table = ResultTable::new(&["step", "train_loss", "test_loss", "rotated_test_loss", "gap"]);
    let mut max_gap = 0.0f64;
    let mut first_loss = None;
    let mut last_loss = f64::NAN;
    for step in 0..=c.steps {
        let model = wrap(&backbone, params.clone())?;
        let loss = mse(&model, &train).map_err(failed)?;
        first_loss.get_or_insert(loss);
        last_loss = loss;
        if step % c.eval_every == 0 || step == c.steps {
            let t = mse(&model, &test).map_err(failed)?;
            let m = mse(&model, &test_moved).map_err(failed)?;
            max_gap = max_gap.max((m - t).abs());
            table.push(vec![step.into(), loss.into(), t.into(), m.into(), (m - t).into()]);
        }
        if step < c.steps {
            let grad = mse_gradient(&model, &train).map_err(failed)?;
            params = sgd_step(&params, &grad, c.lr).map_err(failed)?;
        }
    }
    if let Some(path) = &c.checkpoint {
        crate::backbone::save_checkpoint(path, &backbone, &params).map_err(|e| CliError::Io(e.to_string()))?;
    }
    table.set_meta("initial_train_loss", first_loss.unwrap_or(f64::NAN));
    table.set_meta("final_train_loss", last_loss);
    table.set_meta("max_abs_gap", max_gap);
    table.set_meta("param_count", backbone.param_count());
    Ok(table)
}
