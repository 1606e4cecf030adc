use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::AnnotationRecord;

/// Target fractions of examples for train, validation and test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.7,
            validation: 0.15,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }

    pub fn check(&self) -> Result<()> {
        let r = self.as_array();
        if r.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::contract("split ratios must be positive"));
        }
        if (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::contract(format!(
                "split ratios sum to {}, expected 1",
                r.iter().sum::<f64>()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPart {
    Train,
    Validation,
    Test,
}

impl SplitPart {
    pub const ALL: [SplitPart; 3] = [SplitPart::Train, SplitPart::Validation, SplitPart::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitPart::Train => "train",
            SplitPart::Validation => "validation",
            SplitPart::Test => "test",
        }
    }
}

impl std::str::FromStr for SplitPart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitPart::Train),
            "validation" | "val" => Ok(SplitPart::Validation),
            "test" => Ok(SplitPart::Test),
            other => Err(Error::contract(format!("unknown split part {other:?}"))),
        }
    }
}

/// Signer-disjoint train/validation/test partition plus the class vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<AnnotationRecord>,
    pub validation: Vec<AnnotationRecord>,
    pub test: Vec<AnnotationRecord>,
    /// Sorted gloss labels; a label's class id is its index.
    pub vocabulary: Vec<String>,
}

impl DatasetSplit {
    pub fn part(&self, part: SplitPart) -> &[AnnotationRecord] {
        match part {
            SplitPart::Train => &self.train,
            SplitPart::Validation => &self.validation,
            SplitPart::Test => &self.test,
        }
    }

    pub fn parts(&self) -> [&[AnnotationRecord]; 3] {
        [&self.train, &self.validation, &self.test]
    }

    pub fn class_id(&self, label: &str) -> Option<usize> {
        self.vocabulary.binary_search_by(|v| v.as_str().cmp(label)).ok()
    }

    pub fn num_classes(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn signers(&self, part: SplitPart) -> BTreeSet<&str> {
        self.part(part).iter().map(|r| r.signer_id.as_str()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Keeps only records whose label occurs at least `n` times.
pub fn filter_min_occurrences(records: &[AnnotationRecord], n: usize) -> Vec<AnnotationRecord> {
    let counts = label_counts(records.iter());
    records
        .iter()
        .filter(|r| counts[r.gloss_label.as_str()] >= n)
        .cloned()
        .collect()
}

fn label_counts<'a>(records: impl Iterator<Item = &'a AnnotationRecord>) -> BTreeMap<&'a str, usize> {
    let mut counts = BTreeMap::new();
    for r in records {
        *counts.entry(r.gloss_label.as_str()).or_insert(0) += 1;
    }
    counts
}

/// Sum over subsets of the chi-square distance between the subset's label
/// histogram and the ratio-scaled global histogram.
pub fn split_objective(records: &[AnnotationRecord], assignment: &BTreeMap<String, usize>, ratios: &SplitRatios) -> f64 {
    let labels: Vec<&str> = label_counts(records.iter()).into_keys().collect();
    let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let mut global = vec![0.0; labels.len()];
    let mut hist = vec![vec![0.0; labels.len()]; 3];
    for r in records {
        let c = index[r.gloss_label.as_str()];
        global[c] += 1.0;
        hist[assignment[&r.signer_id]][c] += 1.0;
    }
    let r = ratios.as_array();
    (0..3).map(|s| chi_square(&hist[s], &global, r[s])).sum()
}

fn chi_square(hist: &[f64], global: &[f64], ratio: f64) -> f64 {
    hist.iter()
        .zip(global)
        .map(|(n, g)| {
            let e = ratio * g;
            (n - e) * (n - e) / e
        })
        .sum()
}

/// Greedy stratified, signer-grouped split.
///
/// Signers are visited in descending order of example count (ties in a
/// seeded random order) and each goes to the subset whose chi-square
/// distance to its ratio-scaled share of the global label histogram grows
/// least. Once the remaining signers are just enough to fill the still-empty
/// subsets, they are forced there.
pub fn stratified_group_split(records: &[AnnotationRecord], ratios: &SplitRatios, seed: u64) -> Result<DatasetSplit> {
    ratios.check()?;
    let mut by_signer: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
    for r in records {
        by_signer.entry(r.signer_id.as_str()).or_default().push(r);
    }
    if by_signer.len() < 3 {
        return Err(Error::contract(format!(
            "a three-way signer-grouped split needs at least 3 signers, found {}",
            by_signer.len()
        )));
    }

    let labels: Vec<&str> = label_counts(records.iter()).into_keys().collect();
    let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let mut global = vec![0.0; labels.len()];
    for r in records {
        global[index[r.gloss_label.as_str()]] += 1.0;
    }

    let mut order: Vec<(&str, Vec<f64>, usize)> = by_signer
        .iter()
        .map(|(s, recs)| {
            let mut h = vec![0.0; labels.len()];
            for r in recs {
                h[index[r.gloss_label.as_str()]] += 1.0;
            }
            (*s, h, recs.len())
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order.sort_by(|a, b| b.2.cmp(&a.2));

    let r = ratios.as_array();
    let mut hist = vec![vec![0.0; labels.len()]; 3];
    let mut members = [0usize; 3];
    let mut assignment: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, (signer, h, _)) in order.iter().enumerate() {
        let remaining = order.len() - i;
        let empty: Vec<usize> = (0..3).filter(|&s| members[s] == 0).collect();
        let candidates: Vec<usize> = if remaining <= empty.len() { empty } else { (0..3).collect() };
        let mut best = candidates[0];
        let mut best_delta = f64::INFINITY;
        for &s in &candidates {
            let before = chi_square(&hist[s], &global, r[s]);
            let after: Vec<f64> = hist[s].iter().zip(h).map(|(a, b)| a + b).collect();
            let delta = chi_square(&after, &global, r[s]) - before;
            if delta < best_delta {
                best_delta = delta;
                best = s;
            }
        }
        for (a, b) in hist[best].iter_mut().zip(h) {
            *a += b;
        }
        members[best] += 1;
        assignment.insert(signer, best);
    }

    let mut parts: [Vec<AnnotationRecord>; 3] = Default::default();
    for rec in records {
        parts[assignment[rec.signer_id.as_str()]].push(rec.clone());
    }
    let [train, validation, test] = parts;
    Ok(DatasetSplit {
        train,
        validation,
        test,
        vocabulary: labels.iter().map(|l| l.to_string()).collect(),
    })
}

/// Removes classes that are missing from any subset and re-indexes the
/// vocabulary.
pub fn drop_absent_classes(split: &DatasetSplit) -> DatasetSplit {
    let present: Vec<BTreeSet<&str>> = split
        .parts()
        .iter()
        .map(|p| p.iter().map(|r| r.gloss_label.as_str()).collect())
        .collect();
    let keep: BTreeSet<&str> = present[0]
        .iter()
        .filter(|l| present[1].contains(*l) && present[2].contains(*l))
        .copied()
        .collect();
    let filter = |p: &[AnnotationRecord]| -> Vec<AnnotationRecord> {
        p.iter().filter(|r| keep.contains(r.gloss_label.as_str())).cloned().collect()
    };
    DatasetSplit {
        train: filter(&split.train),
        validation: filter(&split.validation),
        test: filter(&split.test),
        vocabulary: keep.iter().map(|l| l.to_string()).collect(),
    }
}
