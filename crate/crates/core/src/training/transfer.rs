use serde::{Deserialize, Serialize};

use super::batch::TrainData;
use super::trainer::{train_with, EpochRecord, TrainOutcome, TrainRunConfig};
use crate::error::{Error, Result};
use crate::model::{Ptn, CLASSIFIER_PREFIX, SEQUENCE_PREFIX};
use crate::nn::{Checkpoint, Module};

/// Which parameter groups a transfer stage fine-tunes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferStage {
    ClassifierOnly,
    ClassifierAndSequence,
    All,
}

impl TransferStage {
    pub fn as_str(self) -> &'static str {
        match self {
            TransferStage::ClassifierOnly => "classifier_only",
            TransferStage::ClassifierAndSequence => "classifier_and_sequence",
            TransferStage::All => "all",
        }
    }

    pub fn trains(self, name: &str) -> bool {
        let under = |prefix: &str| name.strip_prefix(prefix).is_some_and(|r| r.starts_with('.'));
        match self {
            TransferStage::ClassifierOnly => under(CLASSIFIER_PREFIX),
            TransferStage::ClassifierAndSequence => under(CLASSIFIER_PREFIX) || under(SEQUENCE_PREFIX),
            TransferStage::All => true,
        }
    }
}

/// Sets every parameter's trainable flag for `stage`.
pub fn apply_transfer_stage(model: &mut Ptn, stage: TransferStage) {
    model.visit_mut(&mut |p| p.trainable = stage.trains(&p.name));
}

/// The three fine-tuning experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferSchedule {
    ClassifierOnly,
    ClassifierThenSequence,
    ClassifierThenAll,
}

impl TransferSchedule {
    pub fn stages(self) -> &'static [TransferStage] {
        match self {
            TransferSchedule::ClassifierOnly => &[TransferStage::ClassifierOnly],
            TransferSchedule::ClassifierThenSequence => {
                &[TransferStage::ClassifierOnly, TransferStage::ClassifierAndSequence]
            }
            TransferSchedule::ClassifierThenAll => &[TransferStage::ClassifierOnly, TransferStage::All],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TransferSchedule::ClassifierOnly => "classifier_only",
            TransferSchedule::ClassifierThenSequence => "classifier_then_sequence",
            TransferSchedule::ClassifierThenAll => "classifier_then_all",
        }
    }
}

impl std::str::FromStr for TransferSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classifier_only" => Ok(TransferSchedule::ClassifierOnly),
            "classifier_then_sequence" => Ok(TransferSchedule::ClassifierThenSequence),
            "classifier_then_all" => Ok(TransferSchedule::ClassifierThenAll),
            other => Err(Error::Schedule(format!("unknown transfer schedule {other:?}"))),
        }
    }
}

/// Tracks which stage of a schedule may run next.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleProgress {
    stages: Vec<TransferStage>,
    completed: usize,
    running: bool,
}

impl ScheduleProgress {
    pub fn new(schedule: TransferSchedule) -> Self {
        Self {
            stages: schedule.stages().to_vec(),
            completed: 0,
            running: false,
        }
    }

    /// Begins `stage`; it must be the next one and the previous one must
    /// have finished.
    pub fn start(&mut self, stage: TransferStage) -> Result<()> {
        if self.running {
            return Err(Error::Schedule(format!(
                "cannot start {} while {} is still running",
                stage.as_str(),
                self.stages[self.completed].as_str()
            )));
        }
        match self.stages.get(self.completed) {
            Some(&next) if next == stage => {
                self.running = true;
                Ok(())
            }
            Some(next) => Err(Error::Schedule(format!(
                "stage {} requested but {} has not completed",
                stage.as_str(),
                next.as_str()
            ))),
            None => Err(Error::Schedule("schedule already finished".into())),
        }
    }

    pub fn finish(&mut self) -> Result<()> {
        if !self.running {
            return Err(Error::Schedule("no stage is running".into()));
        }
        self.running = false;
        self.completed += 1;
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.completed == self.stages.len()
    }
}

/// Loads every non-classifier tensor of `source` into `model`. The
/// classifier is copied only when its shapes match; otherwise the model's
/// freshly initialized classifier is kept. Returns whether it was kept fresh.
pub fn load_for_transfer(model: &mut Ptn, source: &Checkpoint) -> Result<bool> {
    let is_classifier = |n: &str| TransferStage::ClassifierOnly.trains(n);
    let mut offenders = Vec::new();
    let mut names = Vec::new();
    let mut classifier_matches = true;
    model.visit(&mut |p| {
        names.push(p.name.clone());
        let shape_ok = source.get(&p.name).is_some_and(|t| t.shape() == p.value.shape());
        if is_classifier(&p.name) {
            classifier_matches &= shape_ok;
        } else if !shape_ok {
            offenders.push(p.name.clone());
        }
    });
    for t in &source.tensors {
        if !is_classifier(&t.name) && !names.contains(&t.name) {
            offenders.push(t.name.clone());
        }
    }
    if !offenders.is_empty() {
        return Err(Error::Transfer { offenders });
    }
    model.visit_mut(&mut |p| {
        if !is_classifier(&p.name) || classifier_matches {
            p.value = source.get(&p.name).expect("checked").clone();
        }
    });
    Ok(!classifier_matches)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub stage: TransferStage,
    pub outcome: TrainOutcome,
}

/// Loads `source`, then runs each stage of `schedule` to early stopping with
/// a fresh optimizer per stage.
pub fn run_transfer(
    model: &mut Ptn,
    source: &Checkpoint,
    schedule: TransferSchedule,
    data: &TrainData,
    config: &TrainRunConfig,
    mut on_epoch: impl FnMut(TransferStage, &EpochRecord),
) -> Result<Vec<StageOutcome>> {
    load_for_transfer(model, source)?;
    let mut progress = ScheduleProgress::new(schedule);
    let mut out = Vec::new();
    for (i, &stage) in schedule.stages().iter().enumerate() {
        progress.start(stage)?;
        apply_transfer_stage(model, stage);
        let stage_config = TrainRunConfig {
            seed: config.seed.wrapping_add(i as u64),
            ..config.clone()
        };
        let outcome = train_with(model, data, &stage_config, |r| on_epoch(stage, r))?;
        progress.finish()?;
        out.push(StageOutcome { stage, outcome });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_membership() {
        assert!(TransferStage::ClassifierOnly.trains("classifier.weight"));
        assert!(!TransferStage::ClassifierOnly.trains("classifier_extra.weight"));
        assert!(!TransferStage::ClassifierOnly.trains("sequence_embedder.cls"));
        assert!(TransferStage::ClassifierAndSequence.trains("sequence_embedder.cls"));
        assert!(!TransferStage::ClassifierAndSequence.trains("pose_embedding.residual.weight"));
        assert!(TransferStage::All.trains("pose_embedding.residual.weight"));
    }

    #[test]
    fn order_is_enforced() {
        let mut p = ScheduleProgress::new(TransferSchedule::ClassifierThenAll);
        assert!(matches!(p.start(TransferStage::All), Err(Error::Schedule(_))));
        p.start(TransferStage::ClassifierOnly).unwrap();
        assert!(matches!(p.start(TransferStage::All), Err(Error::Schedule(_))));
        p.finish().unwrap();
        p.start(TransferStage::All).unwrap();
        p.finish().unwrap();
        assert!(p.is_complete());
        assert!(p.start(TransferStage::All).is_err());
    }

    #[test]
    fn schedules_widen() {
        for s in [
            TransferSchedule::ClassifierOnly,
            TransferSchedule::ClassifierThenSequence,
            TransferSchedule::ClassifierThenAll,
        ] {
            assert_eq!(s.stages()[0], TransferStage::ClassifierOnly);
            assert_eq!(s.as_str().parse::<TransferSchedule>().unwrap(), s);
        }
    }
}
