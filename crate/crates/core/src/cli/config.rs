use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::group::GroupKind;

use super::CliError;

/// Top-level experiment file. Only `seed` is required; every section falls
/// back to its defaults when absent. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub experiment: Option<String>,
    /// Result path; `--out` overrides it.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub corpus: Option<CorpusConfig>,
    #[serde(default)]
    pub separate: SeparateConfig,
    #[serde(default)]
    pub inverr: InverrConfig,
    #[serde(default)]
    pub spacing: SpacingConfig,
    #[serde(default)]
    pub stability: StabilityConfig,
    #[serde(default)]
    pub regress: RegressConfig,
    #[serde(default)]
    pub enumerate: EnumerateConfig,
}

/// Graphs to run on: every connected graph on each listed node count, then
/// the graphs of an optional graph6 file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    #[serde(default)]
    pub nodes: Vec<usize>,
    #[serde(default)]
    pub graph6: Option<PathBuf>,
    /// Half-open range of non-blank graph6 lines.
    #[serde(default)]
    pub lines: Option<[usize; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparationModel {
    FaMlp,
    FaGinId,
    GaMlp,
    Mlp,
}

impl SeparationModel {
    pub fn name(self) -> &'static str {
        match self {
            SeparationModel::FaMlp => "fa-mlp",
            SeparationModel::FaGinId => "fa-gin-id",
            SeparationModel::GaMlp => "ga-mlp",
            SeparationModel::Mlp => "mlp",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeparateConfig {
    pub models: Vec<SeparationModel>,
    pub runs: usize,
    pub embedding: usize,
    pub delta: f64,
    pub hidden: usize,
    pub gin_layers: usize,
    pub ga_samples: usize,
    /// Sorting frames up to this many elements are enumerated.
    pub max_enumeration: u64,
    /// Degenerate control: every model gets all-zero parameters.
    pub zero_init: bool,
}

impl Default for SeparateConfig {
    fn default() -> Self {
        SeparateConfig {
            models: vec![
                SeparationModel::FaMlp,
                SeparationModel::FaGinId,
                SeparationModel::GaMlp,
                SeparationModel::Mlp,
            ],
            runs: 100,
            embedding: 10,
            delta: 1e-3,
            hidden: 64,
            gin_layers: 3,
            ga_samples: 16,
            max_enumeration: 40_320,
            zero_init: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InverrConfig {
    pub k: Vec<usize>,
    pub repeats: usize,
    /// Random relabelings per invariance-error estimate.
    pub m: usize,
    pub hidden: usize,
    pub embedding: usize,
    /// Raw errors at or below this are too small to normalize by; such
    /// (graph, repeat) pairs are skipped and counted.
    pub raw_floor: f64,
}

impl Default for InverrConfig {
    fn default() -> Self {
        InverrConfig { k: vec![1, 2, 4, 8], repeats: 20, m: 50, hidden: 32, embedding: 10, raw_floor: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpacingConfig {
    pub clouds: usize,
    pub points: usize,
    pub dim: usize,
    /// Ascending histogram edges; values beyond the last edge land in the last bin.
    pub bins: Vec<f64>,
    /// Optional CSV of clouds: header row, then `cloud,x1,…,xd` rows.
    pub input: Option<PathBuf>,
}

impl Default for SpacingConfig {
    fn default() -> Self {
        SpacingConfig {
            clouds: 3000,
            points: 5,
            dim: 3,
            bins: vec![0.0, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 0.5, 1.0],
            input: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub clouds: usize,
    pub points: usize,
    pub dim: usize,
    pub sigmas: Vec<f64>,
    pub group: GroupKind,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            clouds: 300,
            points: 5,
            dim: 3,
            sigmas: vec![0.0, 1e-6, 1e-4, 1e-2, 1e-1],
            group: GroupKind::Orthogonal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressConfig {
    pub particles: usize,
    pub train: usize,
    pub test: usize,
    pub steps: usize,
    pub lr: f64,
    pub hidden: usize,
    pub layers: usize,
    pub dt: f64,
    /// Softening `ε` in `(‖x_i − x_j‖² + ε)^{3/2}`.
    pub softening: f64,
    pub eval_every: usize,
    /// Writes the trained parameters here when set.
    pub checkpoint: Option<PathBuf>,
}

impl Default for RegressConfig {
    fn default() -> Self {
        RegressConfig {
            particles: 5,
            train: 64,
            test: 32,
            steps: 200,
            lr: 0.05,
            hidden: 16,
            layers: 1,
            dt: 0.1,
            softening: 0.1,
            eval_every: 20,
            checkpoint: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnumerateConfig {
    pub nodes: usize,
}

impl Default for EnumerateConfig {
    fn default() -> Self {
        EnumerateConfig { nodes: 6 }
    }
}

fn check(ok: bool, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg.to_string()))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// A config holding only a seed, every section at its defaults.
    pub fn with_seed(seed: u64) -> Self {
        ExperimentConfig {
            seed,
            experiment: None,
            output: None,
            corpus: None,
            separate: SeparateConfig::default(),
            inverr: InverrConfig::default(),
            spacing: SpacingConfig::default(),
            stability: StabilityConfig::default(),
            regress: RegressConfig::default(),
            enumerate: EnumerateConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.separate;
        check(s.runs >= 1, "separate.runs must be at least 1")?;
        check(s.embedding >= 1 && s.hidden >= 1 && s.gin_layers >= 1, "separate widths and depths must be positive")?;
        check(s.delta > 0.0, "separate.delta must be positive")?;
        check(s.ga_samples >= 1, "separate.ga_samples must be at least 1")?;
        check(!s.models.is_empty(), "separate.models must not be empty")?;
        let i = &self.inverr;
        check(!i.k.is_empty() && i.k.iter().all(|&k| k >= 1), "inverr.k must be a non-empty list of positive sizes")?;
        check(i.repeats >= 1 && i.m >= 2, "inverr needs repeats >= 1 and m >= 2")?;
        check(i.hidden >= 1 && i.embedding >= 1, "inverr widths must be positive")?;
        let sp = &self.spacing;
        check(sp.dim >= 2, "spacing.dim must be at least 2")?;
        check(sp.points > sp.dim || sp.input.is_some(), "spacing.points must exceed spacing.dim")?;
        check(
            sp.bins.len() >= 2 && sp.bins.windows(2).all(|w| w[0] < w[1]),
            "spacing.bins must hold at least two strictly increasing edges",
        )?;
        let st = &self.stability;
        check(st.dim >= 2 && st.points > st.dim, "stability needs dim >= 2 and points > dim")?;
        check(!st.sigmas.is_empty() && st.sigmas.iter().all(|s| *s >= 0.0), "stability.sigmas must be non-negative")?;
        check(
            matches!(st.group, GroupKind::Orthogonal | GroupKind::SpecialEuclidean | GroupKind::Euclidean),
            "stability.group must be a Euclidean motion group",
        )?;
        let r = &self.regress;
        check((4..=5).contains(&r.particles), "regress.particles must be 4 or 5")?;
        check(r.train >= 1 && r.test >= 1 && r.steps >= 1, "regress sizes must be positive")?;
        check(r.hidden >= 1 && r.layers >= 1 && r.eval_every >= 1, "regress widths must be positive")?;
        check(r.lr > 0.0 && r.dt > 0.0 && r.softening > 0.0, "regress lr, dt and softening must be positive")?;
        check(self.enumerate.nodes >= 1, "enumerate.nodes must be positive")?;
        if let Some(c) = &self.corpus {
            check(!c.nodes.is_empty() || c.graph6.is_some(), "corpus needs nodes or a graph6 file")?;
            if let Some([a, b]) = c.lines {
                check(a <= b, "corpus.lines must be an ordered [start, end] pair")?;
            }
        }
        Ok(())
    }
}
