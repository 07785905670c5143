use crate::backbone::{encode_graph, encode_padded_graph, Activation, Backbone, BoundBackbone};
use crate::fa::{fa_quotient, fa_sampled, invariance_error_over, FaError, Model};
use crate::frame::{
    graph_sort_frame, quotient, FrameBuilder, QuotientFrame, SortFrameBuilder, UniformPermutations, DEFAULT_EPS_EIG,
    DEFAULT_MAX_ENUMERATION,
};
use crate::graphio::{automorphisms, Graph};
use crate::group::Permutation;
use crate::numeric::{Rng, DEFAULT_TAU_LEX};

use super::config::{ExperimentConfig, SeparationModel};
use super::corpus::{graph6_string, load_corpus};
use super::table::{summarize, ResultTable, Value};
use super::CliError;

const PARAM_STREAM: u64 = 1 << 40;
const PERM_STREAM: u64 = 2 << 40;
const DRAW_STREAM: u64 = 3 << 40;

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

/// Largest node count and the shared node-feature width of a corpus.
fn corpus_shape(graphs: &[Graph]) -> Result<(usize, usize), CliError> {
    let max_n = graphs.iter().map(Graph::n).max().unwrap_or(0);
    let f = graphs.first().map_or(0, |g| g.features().cols());
    if graphs.iter().any(|g| g.features().cols() != f) {
        return Err(CliError::Corpus("graphs have different node-feature widths".into()));
    }
    Ok((max_n, f))
}

fn padded_mlp(max_n: usize, f: usize, hidden: usize, out: usize) -> Result<Backbone, CliError> {
    Backbone::mlp(&[max_n * (f + max_n), hidden, hidden, out], Activation::Relu).map_err(failed)
}

fn bind_padded(
    backbone: &Backbone,
    params: crate::backbone::ParamVector,
    max_n: usize,
) -> Result<BoundBackbone<Graph>, CliError> {
    BoundBackbone::new(backbone.clone(), params, move |g: &Graph| encode_padded_graph(g, max_n)).map_err(failed)
}

fn quotients(graphs: &[Graph], builder: &SortFrameBuilder) -> Result<Vec<QuotientFrame<Permutation>>, CliError> {
    graphs
        .iter()
        .map(|g| {
            let frame = builder
                .enumerate(g)
                .map_err(failed)?
                .ok_or_else(|| CliError::Failed(format!("frame of a {}-node graph exceeds max_enumeration", g.n())))?;
            quotient(&frame, g).map_err(failed)
        })
        .collect()
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Index pairs `(i, j)`, `i < j`, with L1 distance below `delta`. A sweep over
/// the first coordinate bounds the candidates.
fn close_pairs(emb: &[Vec<f64>], delta: f64) -> Vec<(u32, u32)> {
    let mut order: Vec<usize> = (0..emb.len()).collect();
    order.sort_by(|&a, &b| emb[a][0].total_cmp(&emb[b][0]).then(a.cmp(&b)));
    let mut pairs = Vec::new();
    for (p, &i) in order.iter().enumerate() {
        for &j in &order[p + 1..] {
            if emb[j][0] - emb[i][0] >= delta {
                break;
            }
            if l1(&emb[i], &emb[j]) < delta {
                pairs.push((i.min(j) as u32, i.max(j) as u32));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Counts pairs of corpus graphs whose embeddings stay within `delta` (L1)
/// under every one of `runs` random initializations.
pub fn cmd_separate(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let s = &config.separate;
    let graphs = load_corpus(config.corpus.as_ref(), &[6])?;
    let (max_n, f) = corpus_shape(&graphs)?;
    let builder = SortFrameBuilder { max_enumeration: u128::from(s.max_enumeration), ..SortFrameBuilder::default() };
    let needs_frames = s.models.iter().any(|m| matches!(m, SeparationModel::FaMlp | SeparationModel::FaGinId));
    let qs = if needs_frames { quotients(&graphs, &builder)? } else { Vec::new() };
    let mlp = padded_mlp(max_n, f, s.hidden, s.embedding)?;
    let gin = Backbone::gin_id(f, max_n, s.hidden, s.gin_layers, s.embedding).map_err(failed)?;
    let total_pairs = graphs.len() * graphs.len().saturating_sub(1) / 2;

    let mut table = ResultTable::new(&["model", "graphs", "pairs", "undistinguished", "runs_used"]);
    for (mi, &model) in s.models.iter().enumerate() {
        let mut survivors: Option<Vec<(u32, u32)>> = None;
        let mut runs_used = 0usize;
        for r in 0..s.runs {
            if survivors.as_ref().is_some_and(Vec::is_empty) {
                break;
            }
            let mut rng = Rng::derived(config.seed, PARAM_STREAM + ((mi as u64) << 20) + r as u64);
            let backbone = if model == SeparationModel::FaGinId { &gin } else { &mlp };
            let params = if s.zero_init { backbone.zero_params() } else { backbone.init_params(&mut rng) };
            let emb: Vec<Vec<f64>> = match model {
                SeparationModel::Mlp => {
                    let m = bind_padded(&mlp, params, max_n)?;
                    graphs.iter().map(|g| Ok(m.eval(g)?.into_vec())).collect::<Result<_, FaError>>()
                }
                SeparationModel::FaMlp => {
                    let m = bind_padded(&mlp, params, max_n)?;
                    let phi = |x: &Graph| Ok(m.eval(x)?.into_vec());
                    graphs.iter().zip(&qs).map(|(g, q)| fa_quotient(phi, q, g)).collect()
                }
                SeparationModel::FaGinId => {
                    let m = BoundBackbone::new(gin.clone(), params, encode_graph).map_err(failed)?;
                    let phi = |x: &Graph| Ok(m.eval(x)?.into_vec());
                    graphs.iter().zip(&qs).map(|(g, q)| fa_quotient(phi, q, g)).collect()
                }
                SeparationModel::GaMlp => {
                    let m = bind_padded(&mlp, params, max_n)?;
                    let phi = |x: &Graph| Ok(m.eval(x)?.into_vec());
                    graphs
                        .iter()
                        .map(|g| fa_sampled(phi, &UniformPermutations { n: g.n() }, g, s.ga_samples, &mut rng))
                        .collect()
                }
            }
            .map_err(failed)?;
            survivors = Some(match survivors {
                None => close_pairs(&emb, s.delta),
                Some(list) => {
                    list.into_iter().filter(|&(i, j)| l1(&emb[i as usize], &emb[j as usize]) < s.delta).collect()
                }
            });
            runs_used += 1;
        }
        let left = survivors.map_or(0, |v| v.len());
        table.push(vec![model.name().into(), graphs.len().into(), total_pairs.into(), left.into(), runs_used.into()]);
    }
    table.set_meta("runs", s.runs);
    table.set_meta("delta", s.delta);
    table.set_meta("embedding", s.embedding);
    table.set_meta("max_nodes", max_n);
    Ok(table)
}

/// Invariance error of sampled FA and sampled GA for each sample size,
/// normalized per (graph, repeat) by the raw MLP's error. FA and GA share
/// weights per repeat and draw seeds per (graph, repeat, k).
pub fn cmd_inverr(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let c = &config.inverr;
    let graphs = load_corpus(config.corpus.as_ref(), &[3, 4, 5, 6])?;
    let (max_n, f) = corpus_shape(&graphs)?;
    let mlp = padded_mlp(max_n, f, c.hidden, c.embedding)?;
    let builder = SortFrameBuilder::default();

    let mut fa_norm = vec![Vec::new(); c.k.len()];
    let mut ga_norm = vec![Vec::new(); c.k.len()];
    let mut fa_raw = vec![Vec::new(); c.k.len()];
    let mut ga_raw = vec![Vec::new(); c.k.len()];
    let mut full_norm = Vec::new();
    let mut raw_errors = Vec::new();
    let mut skipped = 0usize;
    let mut full_max = 0.0f64;

    for r in 0..c.repeats {
        let params = mlp.init_params(&mut Rng::derived(config.seed, PARAM_STREAM + r as u64));
        let model = bind_padded(&mlp, params, max_n)?;
        let phi = |x: &Graph| Ok(model.eval(x)?.into_vec());
        for (gi, g) in graphs.iter().enumerate() {
            let trial = (gi * c.repeats + r) as u64;
            let mut prng = Rng::derived(config.seed, PERM_STREAM + trial);
            let perms: Vec<Permutation> = (0..c.m)
                .map(|_| Permutation::new(prng.permutation_map(g.n())))
                .collect::<Result<_, _>>()
                .map_err(failed)?;
            let raw = invariance_error_over(phi, g, &perms).map_err(failed)?;
            if raw <= c.raw_floor {
                skipped += 1;
                continue;
            }
            raw_errors.push(raw);
            let full = invariance_error_over(
                |x: &Graph| {
                    let frame = builder.enumerate(x)?.ok_or(FaError::NotEnumerable)?;
                    fa_quotient(phi, &quotient(&frame, x)?, x)
                },
                g,
                &perms,
            )
            .map_err(failed)?;
            full_max = full_max.max(full);
            full_norm.push(full / raw);
            for (ki, &k) in c.k.iter().enumerate() {
                let draw_seed = DRAW_STREAM + trial * c.k.len() as u64 + ki as u64;
                let mut frng = Rng::derived(config.seed, draw_seed);
                let fa = invariance_error_over(
                    |x: &Graph| fa_sampled(phi, builder.sampler(x)?.as_ref(), x, k, &mut frng),
                    g,
                    &perms,
                )
                .map_err(failed)?;
                let mut grng = Rng::derived(config.seed, draw_seed);
                let ga = invariance_error_over(
                    |x: &Graph| fa_sampled(phi, &UniformPermutations { n: x.n() }, x, k, &mut grng),
                    g,
                    &perms,
                )
                .map_err(failed)?;
                fa_norm[ki].push(fa / raw);
                ga_norm[ki].push(ga / raw);
                fa_raw[ki].push(fa);
                ga_raw[ki].push(ga);
            }
        }
    }

    let mut table =
        ResultTable::new(&["model", "k", "mean_normalized", "std_normalized", "p90_normalized", "mean_raw", "samples"]);
    let mut row = |model: &str, k: Value, norm: &[f64], raw: &[f64]| {
        let (mean, std, p90) = summarize(norm);
        let (raw_mean, _, _) = summarize(raw);
        table.push(vec![model.into(), k, mean.into(), std.into(), p90.into(), raw_mean.into(), norm.len().into()]);
    };
    row("mlp", "none".into(), &vec![1.0; raw_errors.len()], &raw_errors);
    for (ki, &k) in c.k.iter().enumerate() {
        row("fa-sampled", k.into(), &fa_norm[ki], &fa_raw[ki]);
        row("ga-sampled", k.into(), &ga_norm[ki], &ga_raw[ki]);
    }
    let full_raw: Vec<f64> = full_norm.iter().zip(&raw_errors).map(|(n, r)| n * r).collect();
    row("fa-full", "full".into(), &full_norm, &full_raw);
    table.set_meta("graphs", graphs.len());
    table.set_meta("skipped_trials", skipped);
    table.set_meta("max_full_frame_error", full_max);
    table.set_meta("m", c.m);
    Ok(table)
}

/// Per graph: |F|, |Aut| by brute force, m_F = |F|/|Aut| and m_G = n!/|Aut|.
/// Fails if some |F| is not a multiple of |Aut|.
pub fn cmd_frame_stats(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let graphs = load_corpus(config.corpus.as_ref(), &[3, 4, 5, 6])?;
    let mut table = ResultTable::new(&["graph6", "n", "frame_size", "aut", "m_f", "m_g", "divisible"]);
    let mut violations = 0usize;
    for g in &graphs {
        let size = graph_sort_frame(g, DEFAULT_TAU_LEX, DEFAULT_EPS_EIG, DEFAULT_MAX_ENUMERATION)
            .map_err(failed)?
            .size()
            .ok_or_else(|| CliError::Failed("frame size overflows".into()))?;
        let aut = automorphisms(g).map_err(|e| CliError::Corpus(e.to_string()))?.order() as u128;
        let n_fact: u128 = (1..=g.n() as u128).product();
        let divisible = size % aut == 0;
        violations += usize::from(!divisible);
        table.push(vec![
            graph6_string(g)?.into(),
            g.n().into(),
            Value::Int(size as i64),
            Value::Int(aut as i64),
            Value::Int((size / aut) as i64),
            Value::Int((n_fact / aut) as i64),
            divisible.into(),
        ]);
    }
    table.set_meta("violations", violations);
    if violations > 0 {
        return Err(CliError::Failed(format!("{violations} graphs have |F| not divisible by |Aut|")));
    }
    Ok(table)
}
