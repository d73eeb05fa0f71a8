//! Train/eval answer-overlap analysis: AO/NAO partitioning of evaluation
//! sets by whether the reference answer was seen among training answers, and
//! the fraction of predicted parametric answers unseen in training.

use std::collections::HashSet;
use std::path::Path;

use crate::augment::AugmentedExample;
use crate::corpus::{Dataset, Split};
use crate::error::{Error, Result};
use crate::format::{OutputMode, Parsed, PredictionRecord};
use crate::metrics::normalize_answer;
use crate::util::write_atomic;

/// Normalized answer strings drawn from a training dataset, with O(1)
/// membership tests. Immutable after build.
#[derive(Debug, Clone)]
pub struct AnswerIndex {
    answers: HashSet<String>,
    pub source_split: Option<Split>,
    /// Number of training examples the index was built from.
    pub source_size: usize,
}

impl AnswerIndex {
    pub fn contains(&self, answer: &str) -> bool {
        self.answers.contains(&normalize_answer(answer))
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    /// Adds counterfactual substitutes from an augmented training set, for
    /// the reading under which synthetic answers also count as "seen during
    /// fine-tuning". The default index holds original answers only.
    pub fn extend_with_substitutes(&mut self, augmented: &[AugmentedExample]) {
        for record in augmented {
            if let Some(sub) = &record.substitution {
                self.answers.insert(normalize_answer(&sub.replacement));
            }
        }
    }
}

/// Indexes every reference answer (canonical and aliases) of every training
/// example, normalized.
pub fn build_answer_index(train: &Dataset) -> AnswerIndex {
    let mut answers = HashSet::new();
    for example in &train.examples {
        for answer in &example.answers {
            answers.insert(normalize_answer(answer));
        }
    }
    AnswerIndex {
        answers,
        source_split: Some(train.split),
        source_size: train.len(),
    }
}

/// Partitions an evaluation set into Answer-Overlap and No-Answer-Overlap
/// ids: an example lands in AO iff its parametric target (the original
/// answer) is in the index. Returned in evaluation order; together the two
/// sides cover every id exactly once.
pub fn split_ao_nao(eval_set: &[AugmentedExample], index: &AnswerIndex) -> (Vec<String>, Vec<String>) {
    let mut ao = Vec::new();
    let mut nao = Vec::new();
    for record in eval_set {
        if index.contains(&record.parametric_target) {
            ao.push(record.id.clone());
        } else {
            nao.push(record.id.clone());
        }
    }
    (ao, nao)
}

/// Percentage of successfully parsed predictions whose parametric answer is
/// absent from the training index. Errors in single mode, where no
/// parametric slot exists. Returns 0.0 when nothing parses.
pub fn unseen_parametric_fraction(
    predictions: &[PredictionRecord],
    index: &AnswerIndex,
    mode: OutputMode,
) -> Result<f64> {
    if mode == OutputMode::Single {
        return Err(Error::SingleAnswerMode);
    }
    let mut parsed = 0usize;
    let mut unseen = 0usize;
    for prediction in predictions {
        if let Parsed::Pair(pair) = prediction.parse(mode) {
            parsed += 1;
            if !index.contains(&pair.parametric) {
                unseen += 1;
            }
        }
    }
    if parsed == 0 {
        return Ok(0.0);
    }
    Ok(100.0 * unseen as f64 / parsed as f64)
}

/// Writes one id per line, atomically.
pub fn write_id_list(ids: &[String], path: &Path) -> Result<()> {
    let mut buf = String::new();
    for id in ids {
        buf.push_str(id);
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())?;
    Ok(())
}

/// Reads an id list written by [`write_id_list`]: one id per line, blank
/// lines skipped.
pub fn read_id_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}
