use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::layout::layout_for;
use crate::model::{ModelConfig, Ptn};
use crate::postproc::PipelineConfig;
use crate::sequence::KeypointSequence;
use crate::training::{train, DatasetSplit, TrainData, TrainRunConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub pipeline: PipelineConfig,
    pub normalize: bool,
    /// `None` when the layout never reports absence, so imputation is moot.
    pub impute: Option<bool>,
    pub validation_accuracy: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationTable {
    pub layout: String,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn render(&self) -> String {
        let mark = |b: bool| if b { "yes" } else { "no" };
        let mut out = String::from("estimator\tnorm\timputation\taccuracy\n");
        for r in &self.rows {
            let dims = r.pipeline.output_width(layout_for(self.layout.parse().expect("layout id")));
            out += &format!(
                "{} ({dims}D)\t{}\t{}\t{:.2}%\n",
                self.layout,
                mark(r.normalize),
                r.impute.map_or("N/A", mark),
                100.0 * r.validation_accuracy
            );
        }
        out
    }

    pub fn accuracy(&self, pipeline: &PipelineConfig) -> Option<f64> {
        self.rows.iter().find(|r| r.pipeline == *pipeline).map(|r| r.validation_accuracy)
    }
}

/// Trains one model per pipeline config from the same seed and reports
/// best validation accuracy. On layouts that never report absence, configs
/// that differ only in the imputation switch are rejected as duplicates.
pub fn ablation_run(
    split: &DatasetSplit,
    sequences: &BTreeMap<String, KeypointSequence>,
    pipelines: &[PipelineConfig],
    model: &ModelConfig,
    run: &TrainRunConfig,
) -> Result<AblationTable> {
    let layout = layout_for(model.layout);
    if !layout.reports_absence {
        for (i, a) in pipelines.iter().enumerate() {
            for b in &pipelines[..i] {
                if a.normalize == b.normalize && a.output_dims == b.output_dims {
                    return Err(Error::contract(format!(
                        "imputation is N/A for {}: {} and {} are the same run",
                        layout.id(),
                        b.label(),
                        a.label()
                    )));
                }
            }
        }
    }
    let mut rows = Vec::with_capacity(pipelines.len());
    for pipeline in pipelines {
        pipeline.check(layout)?;
        let config = ModelConfig {
            input_dims: pipeline.output_width(layout),
            num_classes: split.num_classes(),
            ..model.clone()
        };
        let data = TrainData::from_split(split, sequences, pipeline, &config)?;
        let mut ptn = Ptn::new(config, run.seed)?;
        let outcome = train(&mut ptn, &data, run)?;
        rows.push(AblationRow {
            pipeline: *pipeline,
            normalize: pipeline.normalize,
            impute: layout.reports_absence.then_some(pipeline.impute),
            validation_accuracy: outcome.best_validation_accuracy,
            best_epoch: outcome.best_epoch,
        });
    }
    Ok(AblationTable {
        layout: layout.id().to_string(),
        rows,
    })
}
