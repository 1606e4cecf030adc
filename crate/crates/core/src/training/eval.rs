use serde::Serialize;

use super::batch::Example;
use crate::error::Result;
use crate::model::Ptn;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassAccuracy {
    pub class: usize,
    pub support: usize,
    pub correct: usize,
    /// Zero for classes without support.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub per_class: Vec<ClassAccuracy>,
}

impl Evaluation {
    pub fn render(&self, vocabulary: Option<&[String]>) -> String {
        let mut out = format!("accuracy {:.4} ({}/{})\n", self.accuracy, self.correct, self.total);
        for c in &self.per_class {
            let name = vocabulary
                .and_then(|v| v.get(c.class))
                .cloned()
                .unwrap_or_else(|| c.class.to_string());
            out += &format!("  {name:<24} {:.4} ({}/{})\n", c.accuracy, c.correct, c.support);
        }
        out
    }
}

/// Index of the first maximal entry.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn evaluate_predictions(predicted: &[usize], labels: &[usize], classes: usize) -> Evaluation {
    let mut support = vec![0usize; classes];
    let mut hits = vec![0usize; classes];
    let mut correct = 0;
    for (p, l) in predicted.iter().zip(labels) {
        if *l >= classes {
            continue;
        }
        support[*l] += 1;
        if p == l {
            hits[*l] += 1;
            correct += 1;
        }
    }
    let total = labels.len();
    Evaluation {
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        correct,
        total,
        per_class: (0..classes)
            .map(|c| ClassAccuracy {
                class: c,
                support: support[c],
                correct: hits[c],
                accuracy: if support[c] == 0 { 0.0 } else { hits[c] as f64 / support[c] as f64 },
            })
            .collect(),
    }
}

/// Eval-mode top-1 accuracy.
pub fn evaluate(model: &Ptn, examples: &[Example]) -> Result<Evaluation> {
    let mut predicted = Vec::with_capacity(examples.len());
    for e in examples {
        let mask = vec![true; e.frames.rows()];
        predicted.push(argmax(&model.logits(&e.frames, &mask)?));
    }
    let labels: Vec<usize> = examples.iter().map(|e| e.label).collect();
    Ok(evaluate_predictions(&predicted, &labels, model.num_classes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_first_of_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[-1.0]), 0);
    }

    #[test]
    fn per_class_weighted_mean_is_overall() {
        let labels = [0, 0, 1, 2, 2, 2];
        let predicted = [0, 1, 1, 2, 0, 2];
        let e = evaluate_predictions(&predicted, &labels, 4);
        assert_eq!(e.correct, 4);
        let weighted: f64 = e.per_class.iter().map(|c| c.accuracy * c.support as f64).sum::<f64>() / 6.0;
        assert!((weighted - e.accuracy).abs() < 1e-15);
        assert_eq!(e.per_class[3].support, 0);
    }

    #[test]
    fn empty_is_zero() {
        let e = evaluate_predictions(&[], &[], 3);
        assert_eq!(e.accuracy, 0.0);
    }
}
