#![allow(dead_code)]

use std::collections::HashMap;

use dualqa::augment::AugmentedExample;
use dualqa::corpus::{Dataset, Provenance, QAExample, Split};
use dualqa::format::{encode_target, AnswerPair, OutputMode, PredictionRecord};
use dualqa::tagger::Gazetteer;

pub fn qa_example(
    id: &str,
    question: &str,
    context: &str,
    answers: &[&str],
    entity_type: Option<&str>,
    split: Split,
) -> QAExample {
    QAExample {
        id: id.to_string(),
        question: question.to_string(),
        context: context.to_string(),
        answers: answers.iter().map(|s| s.to_string()).collect(),
        entity_type: entity_type.map(String::from),
        has_table: dualqa::corpus::detect_table_context(context),
        split,
        extra: serde_json::Map::new(),
    }
}

/// Three-example corpus around the border question: the source example, a
/// same-type substitution partner, and a random-context donor.
pub fn borders_corpus() -> (Dataset, Gazetteer) {
    let examples = vec![
        qa_example(
            "uk1",
            "What country shares borders with both Belarus and Romania?",
            "Ukraine borders with seven countries: Poland, Slovakia, Hungary, Romania, Moldova, Russia and Belarus.",
            &["Ukraine"],
            Some("GPE"),
            Split::Train,
        ),
        qa_example(
            "br1",
            "Which country is the largest in South America?",
            "Brazil is the largest country in South America.",
            &["Brazil"],
            Some("GPE"),
            Split::Train,
        ),
        qa_example(
            "va1",
            "Who is traditionally ascribed as the author of the epic?",
            "The epic, traditionally ascribed to the Hindu sage Valmiki, narrates the life of Rama, the legendary prince of the Kosala Kingdom.",
            &["Valmiki"],
            Some("PERSON"),
            Split::Train,
        ),
    ];
    let dataset = Dataset::new(examples, Split::Train, Provenance::default()).unwrap();
    (dataset, Gazetteer::empty())
}

const LABELS: [(&str, &str); 4] = [
    ("GPE", "Valdoria"),
    ("PERSON", "Marellon"),
    ("ORG", "Quorvex"),
    ("DATE", "Epochal"),
];

pub struct SynthCorpus {
    pub dataset: Dataset,
    pub gazetteer: Gazetteer,
    /// Exact surface-to-label entries the gazetteer was built from, for
    /// independent oracle computations in tests.
    pub gazetteer_entries: HashMap<String, String>,
}

/// Deterministic synthetic corpus with unique, fixed-width answer tokens so
/// no answer ever occurs in another example's context.
///
/// With `mixed`, every tenth example (offset 7) is untaggable and every
/// tenth (offset 8) carries a single-member entity label, so it has no
/// substitution candidate; everything else is counterfactual-eligible.
/// Labels come from the corpus for even indices and from the gazetteer for
/// odd ones.
pub fn synth_corpus(n: usize, mixed: bool, split: Split) -> SynthCorpus {
    let mut examples = Vec::with_capacity(n);
    let mut gazetteer_entries: HashMap<String, String> = HashMap::new();
    let mut labels: Vec<String> = LABELS.iter().map(|(l, _)| l.to_string()).collect();
    for i in 0..n {
        let role = if mixed { i % 10 } else { 0 };
        let (label, answer): (Option<String>, String) = match role {
            7 => (None, format!("Concepta{i:04}")),
            8 => {
                let label = format!("RARE{i:04}");
                labels.push(label.clone());
                (Some(label), format!("Rarenth{i:04}"))
            }
            _ => {
                let (label, stem) = LABELS[i % LABELS.len()];
                (Some(label.to_string()), format!("{stem}{i:04}"))
            }
        };
        let corpus_label = match role {
            7 => None,
            8 => label.clone(),
            _ if i % 2 == 0 => label.clone(),
            _ => {
                gazetteer_entries.insert(answer.clone(), label.clone().unwrap());
                None
            }
        };
        let mut answers = vec![answer.clone()];
        if i % 5 == 0 {
            answers.push(format!("{answer} prime"));
        }
        examples.push(qa_example(
            &format!("ex{i:04}"),
            &format!("Which name does chronicle entry {i:04} record?"),
            &format!("Chronicle entry {i:04} names {answer} beside the ledger margin."),
            &answers.iter().map(String::as_str).collect::<Vec<_>>(),
            corpus_label.as_deref(),
            split,
        ));
    }
    let gazetteer = Gazetteer::from_entries(
        labels,
        gazetteer_entries
            .iter()
            .map(|(surface, label)| (surface.clone(), label.clone())),
    )
    .unwrap();
    SynthCorpus {
        dataset: Dataset::new(examples, split, Provenance::default()).unwrap(),
        gazetteer,
        gazetteer_entries,
    }
}

/// Predictions that echo each record's own targets through the codec.
pub fn echo_predictions(eval: &[AugmentedExample], mode: OutputMode) -> Vec<PredictionRecord> {
    eval.iter()
        .map(|record| {
            let pair = AnswerPair::new(&record.contextual_target, &record.parametric_target);
            PredictionRecord::new(&record.id, encode_target(&pair, mode))
        })
        .collect()
}
