//! Dataset splitting, batching, the training loop and transfer schedules.

mod batch;
mod eval;
mod split;
mod trainer;
mod transfer;

pub use batch::{build_examples, pad_and_mask, Example, PaddedBatch, TrainData};
pub use eval::{argmax, evaluate, evaluate_predictions, ClassAccuracy, Evaluation};
pub use split::{
    drop_absent_classes, filter_min_occurrences, split_objective, stratified_group_split, DatasetSplit, SplitPart,
    SplitRatios,
};
pub use trainer::{
    batch_loss, format_trace, train, train_with, EarlyStopping, EpochRecord, StepStats, StopDecision, TrainOutcome,
    TrainRunConfig, Trainer,
};
pub use transfer::{
    apply_transfer_stage, load_for_transfer, run_transfer, ScheduleProgress, StageOutcome, TransferSchedule,
    TransferStage,
};
