mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{random_tensor, small_model, small_run, DROP_DEPTH};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use signpose::analysis::{gen_synthetic, SyntheticCorpusConfig};
use signpose::layout::EstimatorFamily;
use signpose::model::Ptn;
use signpose::nn::ops::{dropout, Mode};
use signpose::nn::Tensor;
use signpose::training::{
    batch_loss, evaluate, evaluate_predictions, pad_and_mask, split_objective, stratified_group_split, train,
    Example, SplitPart, SplitRatios, TrainData, TrainRunConfig, Trainer,
};
use signpose::AnnotationRecord;

fn records(signers: &[(usize, &[usize])]) -> Vec<AnnotationRecord> {
    let mut out = Vec::new();
    for (s, counts) in signers {
        for (label, n) in counts.iter().enumerate() {
            for k in 0..*n {
                out.push(AnnotationRecord::new(format!("s{s}_l{label}_{k}"), format!("g{label}"), format!("s{s}")).unwrap());
            }
        }
    }
    out
}

fn random_records(rng: &mut ChaCha8Rng, signers: usize, labels: usize) -> Vec<AnnotationRecord> {
    let counts: Vec<Vec<usize>> = (0..signers).map(|_| (0..labels).map(|_| rng.gen_range(0..5)).collect()).collect();
    let plan: Vec<(usize, &[usize])> = counts.iter().enumerate().map(|(i, c)| (i, c.as_slice())).collect();
    let mut recs = records(&plan);
    // Every signer needs at least one clip.
    for s in 0..signers {
        recs.push(AnnotationRecord::new(format!("s{s}_extra"), "g0", format!("s{s}")).unwrap());
    }
    recs
}

fn assignment_of(split: &signpose::training::DatasetSplit) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for (i, part) in split.parts().iter().enumerate() {
        for r in *part {
            out.insert(r.signer_id.clone(), i);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn signer_sets_are_disjoint(seed in any::<u64>(), signers in 3usize..12, labels in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let recs = random_records(&mut rng, signers, labels);
        let split = stratified_group_split(&recs, &SplitRatios::default(), seed).unwrap();
        let sets: Vec<BTreeSet<&str>> = SplitPart::ALL.iter().map(|p| split.signers(*p)).collect();
        for i in 0..3 {
            prop_assert!(!sets[i].is_empty());
            for j in i + 1..3 {
                prop_assert!(sets[i].is_disjoint(&sets[j]));
            }
        }
        prop_assert_eq!(split.train.len() + split.validation.len() + split.test.len(), recs.len());
    }

    #[test]
    fn brute_force_never_loses_to_greedy(seed in any::<u64>(), signers in 3usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let recs = random_records(&mut rng, signers, 3);
        let ratios = SplitRatios::default();
        let split = stratified_group_split(&recs, &ratios, seed).unwrap();
        let greedy = split_objective(&recs, &assignment_of(&split), &ratios);

        let names: Vec<String> = (0..signers).map(|s| format!("s{s}")).collect();
        let mut best = f64::INFINITY;
        for code in 0..3usize.pow(signers as u32) {
            let mut a = BTreeMap::new();
            let mut c = code;
            for n in &names {
                a.insert(n.clone(), c % 3);
                c /= 3;
            }
            let used: BTreeSet<usize> = a.values().copied().collect();
            if used.len() == 3 {
                best = best.min(split_objective(&recs, &a, &ratios));
            }
        }
        prop_assert!(best <= greedy + 1e-9, "brute {best} greedy {greedy}");
    }
}

#[test]
fn thirty_signers_hit_ratio_targets() {
    // Signers differ in clip count; labels are uniform. Equal-sized signers
    // cannot hit a 15% share of 30 signers (4.5 signers) within 10%.
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut recs = Vec::new();
        for s in 0..30 {
            for k in 0..rng.gen_range(10..40) {
                let label = rng.gen_range(0..10);
                recs.push(AnnotationRecord::new(format!("s{s}_{k}"), format!("g{label}"), format!("s{s}")).unwrap());
            }
        }
        let ratios = SplitRatios::default();
        let split = stratified_group_split(&recs, &ratios, seed).unwrap();
        for (part, r) in split.parts().iter().zip(ratios.as_array()) {
            let target = r * recs.len() as f64;
            assert!((part.len() as f64 - target).abs() <= 0.1 * target, "seed {seed}: {} vs {target}", part.len());
        }
    }
}

#[test]
fn split_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let recs = random_records(&mut rng, 9, 4);
    let a = stratified_group_split(&recs, &SplitRatios::default(), 7).unwrap();
    let b = stratified_group_split(&recs, &SplitRatios::default(), 7).unwrap();
    assert_eq!(a, b);
}

fn toy_examples(rng: &mut ChaCha8Rng, width: usize, n: usize) -> Vec<Example> {
    (0..n)
        .map(|i| {
            let label = i % 2;
            let t = rng.gen_range(3..8);
            let sign = if label == 0 { 1.0 } else { -1.0 };
            let data = (0..t * width).map(|_| sign + rng.gen_range(-0.3..0.3)).collect();
            Example {
                frames: Tensor::matrix(t, width, data).unwrap(),
                label,
            }
        })
        .collect()
}

#[test]
fn padded_batch_loss_matches_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let model = Ptn::new(small_model(EstimatorFamily::OpenPose, 2, 2), 1).unwrap();
    let width = model.config.d_input();
    let examples = toy_examples(&mut rng, width, 7);
    let refs: Vec<&Example> = examples.iter().collect();
    let batched = batch_loss(&model, &pad_and_mask(&refs).unwrap()).unwrap();
    let looped = examples
        .iter()
        .map(|e| {
            let logits = model.logits(&e.frames, &vec![true; e.frames.rows()]).unwrap();
            signpose::nn::ops::softmax_cross_entropy(&logits, e.label).unwrap().0
        })
        .sum::<f64>()
        / examples.len() as f64;
    assert!((batched - looped).abs() < 1e-9, "{batched} vs {looped}");
}

#[test]
fn separable_toy_reaches_full_train_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut model = Ptn::new(small_model(EstimatorFamily::OpenPose, 2, 2), 2).unwrap();
    let examples = toy_examples(&mut rng, model.config.d_input(), 20);
    let mut trainer = Trainer::new(&TrainRunConfig::new(2), 0.0);
    let mut reached = None;
    for epoch in 1..=200 {
        trainer.epoch(&mut model, &examples).unwrap();
        if evaluate(&model, &examples).unwrap().accuracy == 1.0 {
            reached = Some(epoch);
            break;
        }
    }
    assert!(reached.is_some());
}

fn small_corpus_data() -> (TrainData, signpose::model::ModelConfig) {
    let corpus = gen_synthetic(&SyntheticCorpusConfig {
        signers: 6,
        classes: 3,
        sequences_per_class: 12,
        seed: 4,
        ..Default::default()
    })
    .unwrap();
    let split = stratified_group_split(&corpus.records, &SplitRatios::default(), 4).unwrap();
    let config = small_model(EstimatorFamily::MediaPipe, 2, split.num_classes());
    (TrainData::from_split(&split, &corpus.sequences, &DROP_DEPTH, &config).unwrap(), config)
}

#[test]
fn early_stopping_returns_the_best_checkpoint() {
    let (data, config) = small_corpus_data();
    let mut model = Ptn::new(config, 3).unwrap();
    let run = TrainRunConfig {
        max_epochs: 30,
        patience: 3,
        ..small_run(3)
    };
    let out = train(&mut model, &data, &run).unwrap();
    let best = out.trace.iter().map(|r| r.validation_accuracy).fold(0.0, f64::max);
    assert_eq!(out.best_validation_accuracy, best);
    assert_eq!(evaluate(&model, &data.validation).unwrap().accuracy, best);
    // Stopped exactly `patience` epochs after the best one, or ran out of budget.
    assert!(out.trace.len() == out.best_epoch + run.patience || out.trace.len() == run.max_epochs);
}

#[test]
fn same_seed_same_trace() {
    let (data, config) = small_corpus_data();
    let run = TrainRunConfig {
        max_epochs: 4,
        ..small_run(5)
    };
    let a = train(&mut Ptn::new(config.clone(), 5).unwrap(), &data, &run).unwrap();
    let b = train(&mut Ptn::new(config, 5).unwrap(), &data, &run).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.checkpoint.to_bytes(), b.checkpoint.to_bytes());
}

#[test]
fn dropout_preserves_the_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = Tensor::matrix(1, 200_000, vec![1.0; 200_000]).unwrap();
    let p = 0.125;
    let (y, mask) = dropout(&x, p, Mode::Train, &mut rng);
    let mean = y.data().iter().sum::<f64>() / y.len() as f64;
    // Per-element variance p / (1 - p); 4 sigma band.
    let sigma = (p / (1.0 - p) / y.len() as f64).sqrt();
    assert!((mean - 1.0).abs() < 4.0 * sigma, "{mean}");
    let dropped = mask.unwrap().iter().filter(|m| **m == 0.0).count() as f64 / y.len() as f64;
    assert!((dropped - p).abs() < 4.0 * (p * (1.0 - p) / y.len() as f64).sqrt());
    let (z, none) = dropout(&x, p, Mode::Eval, &mut rng);
    assert!(none.is_none());
    assert_eq!(z, x);
}

#[test]
fn random_guessing_scores_one_over_c() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let classes = 8;
    let n = 40_000;
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..classes)).collect();
    let predicted: Vec<usize> = (0..n)
        .map(|_| {
            let logits = random_tensor(&mut rng, &[classes], 1.0);
            signpose::training::argmax(logits.data())
        })
        .collect();
    let eval = evaluate_predictions(&predicted, &labels, classes);
    let p = 1.0 / classes as f64;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!((eval.accuracy - p).abs() < 3.0 * sigma, "{}", eval.accuracy);
    let weighted: f64 = eval.per_class.iter().map(|c| c.accuracy * c.support as f64).sum::<f64>() / n as f64;
    assert!((weighted - eval.accuracy).abs() < 1e-12);
}
