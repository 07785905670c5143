use std::path::Path;

use crate::frame::{frame_distance, pca_frame, FrameError, DEFAULT_EPS_SPEC};
use crate::group::{centroid, PointCloud};
use crate::numeric::{min_normalized_spacing, sym_eig, Matrix, Rng, DEFAULT_EIG_TOL, DEFAULT_MAX_SWEEPS};

use super::config::ExperimentConfig;
use super::table::{summarize, ResultTable};
use super::CliError;

const CLOUD_STREAM: u64 = 4 << 40;
const NOISE_STREAM: u64 = 5 << 40;

/// Centres a cloud at the origin and scales it so the farthest point has norm 1.
pub fn normalize_cloud(points: &Matrix) -> Matrix {
    let t = centroid(points);
    let mut out = points.clone();
    for i in 0..out.rows() {
        for (v, c) in out.row_mut(i).iter_mut().zip(&t) {
            *v -= c;
        }
    }
    let r = (0..out.rows()).map(|i| out.row(i).iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    if r > 0.0 {
        out.scale_assign(1.0 / r);
    }
    out
}

/// Minimal normalized eigenvalue spacing of the centred covariance.
fn cloud_spacing(points: &Matrix) -> Result<f64, CliError> {
    let x = normalize_cloud(points);
    let cov = x.transpose().matmul(&x);
    let eig = sym_eig(&cov, DEFAULT_EIG_TOL, DEFAULT_MAX_SWEEPS).map_err(|e| CliError::Failed(e.to_string()))?;
    min_normalized_spacing(&eig.values).map_err(|e| CliError::Failed(e.to_string()))
}

/// Reads `cloud,x1,…,xd` rows (with a header); consecutive rows sharing a
/// cloud label form one cloud.
fn read_clouds(path: &Path) -> Result<Vec<Matrix>, CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Corpus(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| err(&e))?;
    let mut clouds: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| err(&e))?;
        let label = record.get(0).unwrap_or_default().to_string();
        let row: Vec<f64> =
            record.iter().skip(1).map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| err(&e))?;
        if row.is_empty() || row.iter().any(|v| !v.is_finite()) {
            return Err(err(&"rows need finite coordinates"));
        }
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(err(&"rows have different widths"));
        }
        match clouds.last_mut() {
            Some((l, rows)) if *l == label => rows.push(row),
            _ => clouds.push((label, vec![row])),
        }
    }
    if clouds.is_empty() {
        return Err(err(&"no clouds"));
    }
    Ok(clouds.into_iter().map(|(_, rows)| Matrix::from_rows(&rows)).collect())
}

/// Histogram of the minimal normalized covariance spacing over random
/// Gaussian clouds, or over the clouds of `spacing.input`.
pub fn cmd_spacing(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let c = &config.spacing;
    let clouds = match &c.input {
        Some(path) => read_clouds(path)?,
        None => (0..c.clouds)
            .map(|i| Rng::derived(config.seed, CLOUD_STREAM + i as u64).normal_matrix(c.points, c.dim))
            .collect(),
    };
    let spacings: Vec<f64> = clouds.iter().map(cloud_spacing).collect::<Result<_, _>>()?;
    let bins = c.bins.len() - 1;
    let mut counts = vec![0usize; bins];
    let mut below = 0usize;
    for &s in &spacings {
        if s < c.bins[0] {
            below += 1;
            continue;
        }
        let b = c.bins.partition_point(|&e| e <= s).saturating_sub(1).min(bins - 1);
        counts[b] += 1;
    }
    let total = spacings.len();
    let mut table = ResultTable::new(&["bin_lo", "bin_hi", "count", "fraction"]);
    for (b, &n) in counts.iter().enumerate() {
        table.push(vec![c.bins[b].into(), c.bins[b + 1].into(), n.into(), (n as f64 / total as f64).into()]);
    }
    let degenerate = spacings.iter().filter(|&&s| s <= DEFAULT_EPS_SPEC).count();
    table.set_meta("clouds", total);
    table.set_meta("below_first_edge", below);
    table.set_meta("fraction_degenerate", degenerate as f64 / total as f64);
    table.set_meta("min_spacing", spacings.iter().copied().fold(f64::INFINITY, f64::min));
    table.set_meta("median_spacing", {
        let mut s = spacings.clone();
        s.sort_by(f64::total_cmp);
        s[s.len() / 2]
    });
    Ok(table)
}

/// Frame distance between the PCA frames of normalized clouds and of their
/// noisy copies `X + σZ`, `Z` standard normal, for each `σ`.
pub fn cmd_stability(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let c = &config.stability;
    let mut distances = vec![Vec::new(); c.sigmas.len()];
    let mut skipped = vec![0usize; c.sigmas.len()];
    let mut clean_skipped = 0usize;
    for i in 0..c.clouds {
        let x = normalize_cloud(&Rng::derived(config.seed, CLOUD_STREAM + i as u64).normal_matrix(c.points, c.dim));
        let base = match pca_frame(&PointCloud::new(x.clone()), c.group, DEFAULT_EPS_SPEC) {
            Ok(f) => f,
            Err(FrameError::DegenerateSpectrum { .. }) => {
                clean_skipped += 1;
                continue;
            }
            Err(e) => return Err(CliError::Failed(e.to_string())),
        };
        for (si, &sigma) in c.sigmas.iter().enumerate() {
            let mut rng = Rng::derived(config.seed, NOISE_STREAM + (i * c.sigmas.len() + si) as u64);
            let noisy = x.add(&rng.normal_matrix(c.points, c.dim).scale(sigma));
            match pca_frame(&PointCloud::new(noisy), c.group, DEFAULT_EPS_SPEC) {
                Ok(f) => distances[si].push(frame_distance(&base.elements()[0], &f.elements()[0])),
                Err(FrameError::DegenerateSpectrum { .. }) => skipped[si] += 1,
                Err(e) => return Err(CliError::Failed(e.to_string())),
            }
        }
    }
    let mut table = ResultTable::new(&["sigma", "mean_distance", "std_distance", "max_distance", "samples", "skipped"]);
    for (si, &sigma) in c.sigmas.iter().enumerate() {
        let (mean, std, _) = summarize(&distances[si]);
        let max = distances[si].iter().copied().fold(0.0, f64::max);
        table.push(vec![
            sigma.into(),
            mean.into(),
            std.into(),
            max.into(),
            distances[si].len().into(),
            skipped[si].into(),
        ]);
    }
    table.set_meta("clouds", c.clouds);
    table.set_meta("degenerate_clean_clouds", clean_skipped);
    Ok(table)
}
