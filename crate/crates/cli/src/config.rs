use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use signpose::corpus::Corpus;
use signpose::layout::{layout_for, EstimatorFamily};
use signpose::model::ModelConfig;
use signpose::postproc::{OutputDims, PipelineConfig};
use signpose::training::{DatasetSplit, TrainRunConfig};

/// An experiment file shared by `train`, `transfer`, `eval` and `ablate`.
/// Relative paths are resolved against the file's directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    pub split: PathBuf,
    /// Where the best checkpoint is written.
    pub checkpoint: PathBuf,
    /// Optional line-delimited metric trace.
    #[serde(default)]
    pub trace: Option<PathBuf>,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    /// `layout`, `input_dims` and `num_classes` are filled in from the data.
    #[serde(default)]
    pub model: ModelConfig,
    pub run: TrainRunConfig,
    /// Rows for `ablate`; defaults to the standard comparison.
    #[serde(default)]
    pub ablation: Vec<PipelineConfig>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.corpus);
        resolve(&mut cfg.split);
        resolve(&mut cfg.checkpoint);
        if let Some(t) = cfg.trace.as_mut() {
            resolve(t);
        }
        if let Some(c) = cfg.run.checkpoint_path.as_mut() {
            resolve(c);
        }
        Ok(cfg)
    }

    /// Loads the corpus and split and completes the model config.
    pub fn prepare(&self) -> Result<Prepared> {
        let corpus = Corpus::read_dir(&self.corpus).with_context(|| format!("reading corpus {}", self.corpus.display()))?;
        let text = fs::read_to_string(&self.split).with_context(|| format!("reading {}", self.split.display()))?;
        let split = DatasetSplit::from_json(&text)?;
        let family = corpus_layout(&corpus)?;
        let model = ModelConfig {
            layout: family,
            input_dims: self.pipeline.output_width(layout_for(family)),
            num_classes: split.num_classes(),
            ..self.model.clone()
        };
        Ok(Prepared { corpus, split, model })
    }

    pub fn ablation_rows(&self, family: EstimatorFamily) -> Vec<PipelineConfig> {
        if !self.ablation.is_empty() {
            return self.ablation.clone();
        }
        default_ablation(family, self.pipeline.output_dims)
    }
}

pub struct Prepared {
    pub corpus: Corpus,
    pub split: DatasetSplit,
    pub model: ModelConfig,
}

pub fn corpus_layout(corpus: &Corpus) -> Result<EstimatorFamily> {
    let mut families = corpus.sequences.values().map(|s| s.layout);
    let Some(first) = families.next() else {
        bail!("corpus is empty");
    };
    if families.any(|f| f != first) {
        bail!("corpus mixes skeleton layouts");
    }
    Ok(first)
}

/// norm+impute, norm only and neither; the imputation row is dropped for
/// layouts that never report absence.
pub fn default_ablation(family: EstimatorFamily, output_dims: OutputDims) -> Vec<PipelineConfig> {
    let full = PipelineConfig {
        impute: true,
        normalize: true,
        output_dims,
    };
    let norm = PipelineConfig { impute: false, ..full };
    let neither = PipelineConfig {
        normalize: false,
        ..norm
    };
    if layout_for(family).reports_absence {
        vec![full, norm, neither]
    } else {
        vec![norm, neither]
    }
}
