//! Answer normalization, exact match, and the evaluation report over
//! prediction files: contextual accuracy per example type, answerability,
//! answer separation, and parametric accuracy, with table filtering and
//! id-subset restriction.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::{AugmentedExample, ExampleType};
use crate::error::{Error, Result};
use crate::format::{is_unanswerable, OutputMode, PredictionRecord};
use crate::util::write_atomic;

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn remove_articles(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut word = String::new();
    let flush = |out: &mut String, word: &mut String| {
        if !word.is_empty() {
            if matches!(word.as_str(), "a" | "an" | "the") {
                out.push(' ');
            } else {
                out.push_str(word);
            }
            word.clear();
        }
    };
    for c in s.chars() {
        if is_word_char(c) {
            word.push(c);
        } else {
            flush(&mut out, &mut word);
            out.push(c);
        }
    }
    flush(&mut out, &mut word);
    out
}

/// Canonical answer normalization for exact-match scoring: lowercase, strip
/// ASCII punctuation, drop the articles a/an/the as whole words, collapse
/// whitespace, trim.
pub fn normalize_answer(s: &str) -> String {
    let lowered = s.to_lowercase();
    let unpunct: String = lowered.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    let no_articles = remove_articles(&unpunct);
    no_articles.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// True iff the normalized prediction equals the normalization of any
/// reference answer.
pub fn exact_match(prediction: &str, references: &[String]) -> bool {
    let normalized = normalize_answer(prediction);
    references.iter().any(|r| normalize_answer(r) == normalized)
}

/// Restricts evaluation to a fixed id set, e.g. an answer-overlap partition.
#[derive(Debug, Clone, Default)]
pub struct IdSubset {
    /// Short label echoed into the report (e.g. "ao" or "nao").
    pub label: Option<String>,
    pub ids: HashSet<String>,
}

impl IdSubset {
    pub fn new(label: Option<String>, ids: impl IntoIterator<Item = String>) -> Self {
        Self {
            label,
            ids: ids.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Drop examples whose base example carries table markup.
    pub exclude_tables: bool,
    pub subset: Option<IdSubset>,
}

/// Filters echoed back in a [`MetricsReport`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiltersApplied {
    pub exclude_tables: bool,
    pub overlap_subset: Option<String>,
}

type TypeMap<T> = BTreeMap<ExampleType, T>;

/// Per-example-type scores over one prediction file. Percentages are in
/// [0, 100]; maps only carry example types with at least one evaluated
/// record. `separation` and `parametric_accuracy` exist in multi mode only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: OutputMode,
    pub counts: TypeMap<usize>,
    pub contextual_accuracy: TypeMap<f64>,
    pub answerability: TypeMap<f64>,
    pub separation: Option<TypeMap<f64>>,
    pub parametric_accuracy: Option<TypeMap<f64>>,
    pub filters: FiltersApplied,
}

#[derive(Default)]
struct Tally {
    n: usize,
    contextual_hits: usize,
    parametric_hits: usize,
    separation_hits: usize,
}

fn percentages(tallies: &TypeMap<Tally>, hit: impl Fn(&Tally) -> usize) -> TypeMap<f64> {
    tallies
        .iter()
        .map(|(&t, tally)| (t, 100.0 * hit(tally) as f64 / tally.n as f64))
        .collect()
}

/// Scores a prediction file against an evaluation set.
///
/// Every prediction id must name an evaluation example and ids must be
/// unique; every example that survives the filters must have a prediction.
/// Parse failures score as non-matching for every slot. On empty and random
/// contexts the contextual target is the unanswerable sentinel, compared
/// verbatim case-insensitively rather than through answer normalization.
pub fn evaluate(
    predictions: &[PredictionRecord],
    eval_set: &[AugmentedExample],
    mode: OutputMode,
    options: &EvalOptions,
) -> Result<MetricsReport> {
    let mut known_ids = HashSet::with_capacity(eval_set.len());
    for example in eval_set {
        if !known_ids.insert(example.id.as_str()) {
            return Err(Error::InvalidConfig(format!(
                "duplicate evaluation example id {:?}",
                example.id
            )));
        }
    }
    let mut by_id: HashMap<&str, &PredictionRecord> = HashMap::with_capacity(predictions.len());
    for prediction in predictions {
        if !known_ids.contains(prediction.id.as_str()) {
            return Err(Error::UnknownPredictionId {
                id: prediction.id.clone(),
            });
        }
        if by_id.insert(prediction.id.as_str(), prediction).is_some() {
            return Err(Error::DuplicatePrediction {
                id: prediction.id.clone(),
            });
        }
    }

    let mut tallies: TypeMap<Tally> = BTreeMap::new();
    for example in eval_set {
        if options.exclude_tables && example.has_table {
            continue;
        }
        if let Some(subset) = &options.subset {
            if !subset.ids.contains(&example.id) {
                continue;
            }
        }
        let prediction = by_id.get(example.id.as_str()).ok_or_else(|| Error::MissingPrediction {
            id: example.id.clone(),
        })?;
        let parsed = prediction.parse(mode);
        let tally = tallies.entry(example.example_type).or_default();
        tally.n += 1;

        if let Some(contextual) = parsed.contextual() {
            let hit = match example.example_type {
                ExampleType::Empty | ExampleType::Random => is_unanswerable(contextual),
                _ => exact_match(contextual, example.contextual_references()),
            };
            if hit {
                tally.contextual_hits += 1;
            }
        }
        if mode == OutputMode::Multi {
            if let (Some(contextual), Some(parametric)) = (parsed.contextual(), parsed.parametric()) {
                if exact_match(parametric, &example.answers) {
                    tally.parametric_hits += 1;
                }
                if normalize_answer(contextual) == normalize_answer(parametric) {
                    tally.separation_hits += 1;
                }
            }
        }
    }

    let contextual_accuracy = percentages(&tallies, |t| t.contextual_hits);
    let answerability = contextual_accuracy
        .iter()
        .filter(|(t, _)| matches!(t, ExampleType::Empty | ExampleType::Random))
        .map(|(&t, &v)| (t, v))
        .collect();
    let (separation, parametric_accuracy) = match mode {
        OutputMode::Multi => (
            Some(percentages(&tallies, |t| t.separation_hits)),
            Some(percentages(&tallies, |t| t.parametric_hits)),
        ),
        OutputMode::Single => (None, None),
    };
    Ok(MetricsReport {
        mode,
        counts: tallies.iter().map(|(&t, tally)| (t, tally.n)).collect(),
        contextual_accuracy,
        answerability,
        separation,
        parametric_accuracy,
        filters: FiltersApplied {
            exclude_tables: options.exclude_tables,
            overlap_subset: options.subset.as_ref().and_then(|s| s.label.clone()),
        },
    })
}

impl MetricsReport {
    pub fn total_count(&self) -> usize {
        self.counts.values().sum()
    }

    /// Aligned plain-text table, one row per example type, two decimal
    /// places, "-" for metrics that do not apply.
    pub fn render_table(&self) -> String {
        fn cell(map: Option<&TypeMap<f64>>, t: ExampleType) -> String {
            match map.and_then(|m| m.get(&t)) {
                Some(v) => format!("{v:.2}"),
                None => "-".to_string(),
            }
        }
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<15} {:>7} {:>16} {:>14} {:>11} {:>16}",
            "example_type", "count", "contextual_acc", "answerability", "separation", "parametric_acc"
        );
        for (&t, &n) in &self.counts {
            let _ = writeln!(
                out,
                "{:<15} {:>7} {:>16} {:>14} {:>11} {:>16}",
                t.to_string(),
                n,
                cell(Some(&self.contextual_accuracy), t),
                cell(Some(&self.answerability), t),
                cell(self.separation.as_ref(), t),
                cell(self.parametric_accuracy.as_ref(), t),
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())?;
        Ok(())
    }

    pub fn write_table(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render_table().as_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::SubstitutionRecord;
    use crate::corpus::Split;
    use crate::format::{encode_target, AnswerPair, UNANSWERABLE};

    #[test]
    fn normalization_strips_articles_case_and_punctuation() {
        assert_eq!(normalize_answer("The Ukraine "), "ukraine");
        assert_eq!(
            normalize_answer("Keeping Up with the Kardashians!"),
            "keeping up with kardashians"
        );
        assert_eq!(normalize_answer("A  an THE"), "");
        assert_eq!(normalize_answer("U.S.A."), "usa");
        assert_eq!(normalize_answer("an apple a day"), "apple day");
    }

    #[test]
    fn normalization_keeps_distinct_spans_distinct() {
        assert_ne!(normalize_answer("Napoleon"), normalize_answer("Napoleon Bonaparte"));
        assert!(!exact_match("Napoleon", &["Napoleon Bonaparte".to_string()]));
    }

    #[test]
    fn exact_match_accepts_any_reference() {
        assert!(exact_match("Brazil", &["Brazil".to_string()]));
        assert!(exact_match("brazil.", &["Brazil".to_string()]));
        assert!(!exact_match("Scott Disick", &["Jonathan Cheban".to_string()]));
        assert!(exact_match(
            "Napoleon",
            &["Napoleon Bonaparte".to_string(), "Napoleon".to_string()]
        ));
    }

    fn record(
        id: &str,
        example_type: ExampleType,
        contextual_target: &str,
        parametric_target: &str,
        has_table: bool,
    ) -> AugmentedExample {
        AugmentedExample {
            id: id.to_string(),
            question: "q?".to_string(),
            context: if example_type == ExampleType::Empty {
                String::new()
            } else {
                format!("text mentioning {contextual_target}")
            },
            answers: vec![parametric_target.to_string()],
            entity_type: None,
            has_table,
            split: Split::Test,
            base_id: format!("{id}-base"),
            example_type,
            contextual_target: contextual_target.to_string(),
            parametric_target: parametric_target.to_string(),
            substitution: match example_type {
                ExampleType::Counterfactual => Some(SubstitutionRecord {
                    original: parametric_target.to_string(),
                    replacement: contextual_target.to_string(),
                    occurrences: 1,
                }),
                _ => None,
            },
        }
    }

    fn desk_eval() -> Vec<AugmentedExample> {
        vec![
            record("e1", ExampleType::Factual, "Ukraine", "Ukraine", false),
            record("e2", ExampleType::Counterfactual, "Brazil", "Ukraine", false),
            record("e3", ExampleType::Empty, UNANSWERABLE, "Ukraine", false),
            record("e4", ExampleType::Random, UNANSWERABLE, "Ukraine", false),
        ]
    }

    fn echo(eval: &[AugmentedExample], mode: OutputMode) -> Vec<PredictionRecord> {
        eval.iter()
            .map(|e| {
                let pair = AnswerPair::new(&e.contextual_target, &e.parametric_target);
                PredictionRecord::new(&e.id, encode_target(&pair, mode))
            })
            .collect()
    }

    #[test]
    fn echo_predictions_score_perfectly() {
        let eval = desk_eval();
        let preds = echo(&eval, OutputMode::Multi);
        let report = evaluate(&preds, &eval, OutputMode::Multi, &EvalOptions::default()).unwrap();
        for t in [
            ExampleType::Factual,
            ExampleType::Counterfactual,
            ExampleType::Empty,
            ExampleType::Random,
        ] {
            assert_eq!(report.contextual_accuracy[&t], 100.0);
            assert_eq!(report.parametric_accuracy.as_ref().unwrap()[&t], 100.0);
            assert_eq!(report.counts[&t], 1);
        }
        assert_eq!(report.answerability[&ExampleType::Empty], 100.0);
        assert_eq!(report.answerability[&ExampleType::Random], 100.0);
        let separation = report.separation.as_ref().unwrap();
        assert_eq!(separation[&ExampleType::Factual], 100.0);
        assert_eq!(separation[&ExampleType::Counterfactual], 0.0);
    }

    #[test]
    fn single_mode_report_has_no_pair_sections() {
        let eval = desk_eval();
        let preds = echo(&eval, OutputMode::Single);
        let report = evaluate(&preds, &eval, OutputMode::Single, &EvalOptions::default()).unwrap();
        assert!(report.separation.is_none());
        assert!(report.parametric_accuracy.is_none());
        assert_eq!(report.contextual_accuracy[&ExampleType::Factual], 100.0);
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert!(json["separation"].is_null());
        assert!(json["parametric_accuracy"].is_null());
    }

    #[test]
    fn single_mode_scores_pair_formatted_output_literally() {
        let eval = vec![record("e1", ExampleType::Factual, "Ukraine", "Ukraine", false)];
        let preds = vec![PredictionRecord::new(
            "e1",
            "contextual: Ukraine, parametric: Ukraine",
        )];
        let report = evaluate(&preds, &eval, OutputMode::Single, &EvalOptions::default()).unwrap();
        assert_eq!(report.contextual_accuracy[&ExampleType::Factual], 0.0);
    }

    #[test]
    fn parse_failures_count_as_wrong_everywhere() {
        let eval = desk_eval();
        let preds: Vec<_> = eval
            .iter()
            .map(|e| PredictionRecord::new(&e.id, "no delimiter here"))
            .collect();
        let report = evaluate(&preds, &eval, OutputMode::Multi, &EvalOptions::default()).unwrap();
        for (_, v) in &report.contextual_accuracy {
            assert_eq!(*v, 0.0);
        }
        for (_, v) in report.separation.as_ref().unwrap() {
            assert_eq!(*v, 0.0);
        }
        assert_eq!(report.total_count(), 4);
    }

    #[test]
    fn answerability_equals_contextual_accuracy_on_unanswerable_types() {
        let eval = desk_eval();
        let mut preds = echo(&eval, OutputMode::Multi);
        // Break the empty-context prediction.
        preds[2] = PredictionRecord::new("e3", "contextual: Kyiv, parametric: Ukraine");
        let report = evaluate(&preds, &eval, OutputMode::Multi, &EvalOptions::default()).unwrap();
        for t in [ExampleType::Empty, ExampleType::Random] {
            assert_eq!(report.answerability[&t], report.contextual_accuracy[&t]);
        }
        assert_eq!(report.answerability[&ExampleType::Empty], 0.0);
    }

    #[test]
    fn sentinel_comparison_ignores_case_but_not_extra_words() {
        let eval = vec![record("e1", ExampleType::Empty, UNANSWERABLE, "Ukraine", false)];
        let preds = vec![PredictionRecord::new(
            "e1",
            "contextual: Unanswerable, parametric: Ukraine",
        )];
        let report = evaluate(&preds, &eval, OutputMode::Multi, &EvalOptions::default()).unwrap();
        assert_eq!(report.answerability[&ExampleType::Empty], 100.0);

        let preds = vec![PredictionRecord::new(
            "e1",
            "contextual: an unanswerable, parametric: Ukraine",
        )];
        let report = evaluate(&preds, &eval, OutputMode::Multi, &EvalOptions::default()).unwrap();
        assert_eq!(report.answerability[&ExampleType::Empty], 0.0);
    }

    #[test]
    fn factual_contextual_answers_match_any_alias() {
        let mut example = record("e1", ExampleType::Factual, "Napoleon Bonaparte", "Napoleon Bonaparte", false);
        example.answers = vec!["Napoleon Bonaparte".to_string(), "Napoleon".to_string()];
        let preds = vec![PredictionRecord::new(
            "e1",
            "contextual: Napoleon, parametric: Napoleon",
        )];
        let report = evaluate(&preds, &[example], OutputMode::Multi, &EvalOptions::default()).unwrap();
        assert_eq!(report.contextual_accuracy[&ExampleType::Factual], 100.0);
    }

    #[test]
    fn counterfactual_contextual_answers_match_the_substitute_only() {
        let eval = vec![record("e1", ExampleType::Counterfactual, "Brazil", "Ukraine", false)];
        let preds = vec![PredictionRecord::new(
            "e1",
            "contextual: Ukraine, parametric: Ukraine",
        )];
        let report = evaluate(&preds, &eval, OutputMode::Multi, &EvalOptions::default()).unwrap();
        assert_eq!(report.contextual_accuracy[&ExampleType::Counterfactual], 0.0);
        assert_eq!(
            report.parametric_accuracy.as_ref().unwrap()[&ExampleType::Counterfactual],
            100.0
        );
        assert_eq!(report.separation.as_ref().unwrap()[&ExampleType::Counterfactual], 100.0);
    }

    #[test]
    fn table_filter_drops_flagged_examples_before_scoring() {
        let mut eval = desk_eval();
        eval[1].has_table = true;
        let preds = echo(&eval, OutputMode::Multi);
        let options = EvalOptions {
            exclude_tables: true,
            subset: None,
        };
        let report = evaluate(&preds, &eval, OutputMode::Multi, &options).unwrap();
        assert_eq!(report.total_count(), 3);
        assert!(!report.counts.contains_key(&ExampleType::Counterfactual));
        assert!(report.filters.exclude_tables);
    }

    #[test]
    fn subset_restricts_the_evaluated_ids() {
        let eval = desk_eval();
        let preds = echo(&eval, OutputMode::Multi);
        let options = EvalOptions {
            exclude_tables: false,
            subset: Some(IdSubset::new(
                Some("nao".to_string()),
                ["e1".to_string(), "e3".to_string()],
            )),
        };
        let report = evaluate(&preds, &eval, OutputMode::Multi, &options).unwrap();
        assert_eq!(report.total_count(), 2);
        assert_eq!(report.filters.overlap_subset.as_deref(), Some("nao"));
    }

    #[test]
    fn prediction_bookkeeping_errors() {
        let eval = desk_eval();
        let mut preds = echo(&eval, OutputMode::Multi);

        let mut dup = preds.clone();
        dup.push(preds[0].clone());
        assert!(matches!(
            evaluate(&dup, &eval, OutputMode::Multi, &EvalOptions::default()),
            Err(Error::DuplicatePrediction { .. })
        ));

        let mut unknown = preds.clone();
        unknown[0].id = "nope".to_string();
        assert!(matches!(
            evaluate(&unknown, &eval, OutputMode::Multi, &EvalOptions::default()),
            Err(Error::UnknownPredictionId { .. })
        ));

        preds.pop();
        assert!(matches!(
            evaluate(&preds, &eval, OutputMode::Multi, &EvalOptions::default()),
            Err(Error::MissingPrediction { .. })
        ));
    }

    #[test]
    fn extra_predictions_for_filtered_out_examples_are_tolerated() {
        let mut eval = desk_eval();
        eval[3].has_table = true;
        let preds = echo(&eval, OutputMode::Multi);
        let options = EvalOptions {
            exclude_tables: true,
            subset: None,
        };
        let report = evaluate(&preds, &eval, OutputMode::Multi, &options).unwrap();
        assert_eq!(report.total_count(), 3);
    }

    #[test]
    fn table_rendering_uses_two_decimals_and_dashes() {
        let eval = desk_eval();
        let preds = echo(&eval, OutputMode::Single);
        let report = evaluate(&preds, &eval, OutputMode::Single, &EvalOptions::default()).unwrap();
        let table = report.render_table();
        assert!(table.contains("100.00"), "table:\n{table}");
        assert!(table.contains('-'), "table:\n{table}");
        assert!(table.lines().count() >= 5);
    }
}
