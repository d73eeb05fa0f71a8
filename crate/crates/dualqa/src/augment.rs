//! Derives the four training-example types from a source dataset: factual
//! pass-through, counterfactual answer substitution, empty context, and
//! random context. The parametric target is always the original answer; the
//! contextual target follows the (possibly altered) context.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, QAExample, Split};
use crate::error::{Error, LineDiagnostic, Result};
use crate::format::UNANSWERABLE;
use crate::metrics::normalize_answer;
use crate::tagger::{tag_answer, Gazetteer};
use crate::text::{contains_ci, replace_word_ci};
use crate::util::{keyed_rng, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleType {
    Factual,
    Counterfactual,
    Empty,
    Random,
}

impl ExampleType {
    pub const ALL: [ExampleType; 4] = [
        ExampleType::Factual,
        ExampleType::Counterfactual,
        ExampleType::Empty,
        ExampleType::Random,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ExampleType::Factual => "factual",
            ExampleType::Counterfactual => "counterfactual",
            ExampleType::Empty => "empty",
            ExampleType::Random => "random",
        }
    }
}

impl fmt::Display for ExampleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ExampleType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f" | "factual" => Ok(ExampleType::Factual),
            "cf" | "counterfactual" => Ok(ExampleType::Counterfactual),
            "e" | "empty" => Ok(ExampleType::Empty),
            "r" | "random" => Ok(ExampleType::Random),
            other => Err(Error::InvalidConfig(format!("unknown example type {other:?}"))),
        }
    }
}

/// Parses a comma-separated example-type list. `a` ("answerability") expands
/// to empty+random, and `all` to every type, mirroring the training-data
/// mixes a model configuration can be trained on.
pub fn parse_type_set(spec: &str) -> Result<BTreeSet<ExampleType>> {
    let mut out = BTreeSet::new();
    for token in spec.split(',') {
        let token = token.trim();
        match token {
            "" => continue,
            "a" | "answerability" => {
                out.insert(ExampleType::Empty);
                out.insert(ExampleType::Random);
            }
            "all" => out.extend(ExampleType::ALL),
            other => {
                out.insert(other.parse()?);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "type set {spec:?} enables no example types"
        )));
    }
    Ok(out)
}

/// How a counterfactual context was rewritten.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstitutionRecord {
    pub original: String,
    pub replacement: String,
    pub occurrences: usize,
}

/// One derived training/evaluation instance. Wire layout is the corpus
/// schema (with the possibly-altered context) extended by the derivation
/// fields; the unanswerable sentinel is serialized as the literal string
/// "unanswerable".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedExample {
    pub id: String,
    pub question: String,
    pub context: String,
    pub answers: Vec<String>,
    pub entity_type: Option<String>,
    pub has_table: bool,
    pub split: Split,
    pub base_id: String,
    pub example_type: ExampleType,
    pub contextual_target: String,
    pub parametric_target: String,
    pub substitution: Option<SubstitutionRecord>,
}

impl AugmentedExample {
    fn derived(example: &QAExample, example_type: ExampleType) -> Self {
        AugmentedExample {
            id: format!("{}.{}", example.id, example_type.tag()),
            question: example.question.clone(),
            context: example.context.clone(),
            answers: example.answers.clone(),
            entity_type: example.entity_type.clone(),
            has_table: example.has_table,
            split: example.split,
            base_id: example.id.clone(),
            example_type,
            contextual_target: example.canonical_answer().to_string(),
            parametric_target: example.canonical_answer().to_string(),
            substitution: None,
        }
    }

    /// Reference answers for the contextual slot: the substitute alone on
    /// counterfactual examples, the source aliases otherwise.
    pub fn contextual_references(&self) -> &[String] {
        match self.example_type {
            ExampleType::Counterfactual => std::slice::from_ref(&self.contextual_target),
            _ => &self.answers,
        }
    }

    /// Violated per-type invariants against the source example. An empty
    /// list means the derived example is sound; augmentation skips (never
    /// emits) anything that fails here.
    pub fn check_invariants(&self, source: &QAExample) -> Vec<String> {
        let mut out = Vec::new();
        if self.base_id != source.id {
            out.push(format!(
                "base_id {:?} does not name the source example {:?}",
                self.base_id, source.id
            ));
        }
        if self.parametric_target != source.canonical_answer() {
            out.push("parametric target differs from the original answer".to_string());
        }
        match self.example_type {
            ExampleType::Factual => {
                if self.context != source.context {
                    out.push("factual context differs from the source context".to_string());
                }
                if self.contextual_target != source.canonical_answer() {
                    out.push("factual contextual target differs from the original answer".to_string());
                }
            }
            ExampleType::Counterfactual => match &self.substitution {
                None => out.push("counterfactual example lacks a substitution record".to_string()),
                Some(sub) => {
                    if self.contextual_target != sub.replacement {
                        out.push("contextual target differs from the replacement".to_string());
                    }
                    if sub.occurrences == 0 {
                        out.push("substitution replaced zero occurrences".to_string());
                    }
                    if !contains_ci(&self.context, &sub.replacement) {
                        out.push("replacement does not occur in the rewritten context".to_string());
                    }
                    if contains_ci(&self.context, &sub.original) {
                        out.push("original answer still occurs in the rewritten context".to_string());
                    }
                }
            },
            ExampleType::Empty => {
                if !self.context.is_empty() {
                    out.push("empty-context example carries a context".to_string());
                }
                if self.contextual_target != UNANSWERABLE {
                    out.push("empty-context target is not the unanswerable sentinel".to_string());
                }
            }
            ExampleType::Random => {
                if self.contextual_target != UNANSWERABLE {
                    out.push("random-context target is not the unanswerable sentinel".to_string());
                }
                if contains_ci(&self.context, source.canonical_answer()) {
                    out.push("original answer occurs in the donor context".to_string());
                }
            }
        }
        out
    }
}

/// Same-entity-type answer candidates pooled from a source corpus, plus the
/// per-example label assignment the pool was built with. A corpus-provided
/// `entity_type` wins over the gazetteer tag.
#[derive(Debug, Clone, Default)]
pub struct EntityPool {
    by_label: BTreeMap<String, Vec<PoolEntry>>,
    label_by_id: HashMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub answer: String,
    pub source_id: String,
}

impl EntityPool {
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.by_label.keys().map(String::as_str)
    }

    pub fn candidates(&self, label: &str) -> &[PoolEntry] {
        self.by_label.get(label).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The entity label assigned to a source example when the pool was
    /// built; `None` means its answer is untaggable.
    pub fn label_for_example(&self, id: &str) -> Option<&str> {
        self.label_by_id.get(id).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.by_label.is_empty()
    }

    /// Total number of pooled (label, answer) entries.
    pub fn len(&self) -> usize {
        self.by_label.values().map(Vec::len).sum()
    }
}

/// Pools canonical answers by entity category: one entry per distinct
/// (label, normalized answer) pair among taggable examples, first surface
/// form wins. Untaggable answers are excluded; an empty pool is legal.
pub fn build_entity_pool(dataset: &Dataset, gazetteer: &Gazetteer) -> EntityPool {
    let mut pool = EntityPool::default();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    for example in &dataset.examples {
        let label = example
            .entity_type
            .clone()
            .or_else(|| tag_answer(example.canonical_answer(), gazetteer).map(String::from));
        let Some(label) = label else { continue };
        pool.label_by_id.insert(example.id.clone(), label.clone());
        let key = (label.clone(), normalize_answer(example.canonical_answer()));
        if seen.insert(key) {
            pool.by_label.entry(label).or_default().push(PoolEntry {
                answer: example.canonical_answer().to_string(),
                source_id: example.id.clone(),
            });
        }
    }
    pool
}

/// Uniformly samples a substitute for `original` among pool entries of the
/// same label that normalize differently from the original and do not occur
/// in the context. `None` means no candidate is eligible.
pub fn sample_substitute(
    pool: &EntityPool,
    label: &str,
    original: &str,
    context: &str,
    rng: &mut impl Rng,
) -> Option<String> {
    let original_key = normalize_answer(original);
    let eligible: Vec<&PoolEntry> = pool
        .candidates(label)
        .iter()
        .filter(|entry| normalize_answer(&entry.answer) != original_key)
        .filter(|entry| !contains_ci(context, &entry.answer))
        .collect();
    if eligible.is_empty() {
        return None;
    }
    let pick = rng.gen_range(0..eligible.len());
    Some(eligible[pick].answer.clone())
}

/// Factual pass-through: original context, original answer in both slots.
pub fn make_factual(example: &QAExample) -> AugmentedExample {
    AugmentedExample::derived(example, ExampleType::Factual)
}

/// Rewrites every word-boundary occurrence of the canonical answer
/// (case-insensitive) to `replacement`, inserted verbatim. Errors when no
/// occurrence is found, which signals corrupt source data.
pub fn make_counterfactual(example: &QAExample, replacement: &str) -> Result<AugmentedExample> {
    let original = example.canonical_answer();
    let (context, occurrences) = replace_word_ci(&example.context, original, replacement);
    if occurrences == 0 {
        return Err(Error::AnswerNotInContext {
            id: example.id.clone(),
            answer: original.to_string(),
        });
    }
    let mut derived = AugmentedExample::derived(example, ExampleType::Counterfactual);
    derived.context = context;
    derived.contextual_target = replacement.to_string();
    derived.substitution = Some(SubstitutionRecord {
        original: original.to_string(),
        replacement: replacement.to_string(),
        occurrences,
    });
    Ok(derived)
}

/// Empty context; the contextual slot learns to abstain.
pub fn make_empty(example: &QAExample) -> AugmentedExample {
    let mut derived = AugmentedExample::derived(example, ExampleType::Empty);
    derived.context = String::new();
    derived.contextual_target = UNANSWERABLE.to_string();
    derived
}

/// Swaps the context for a uniformly sampled donor context that is not the
/// example's own and does not contain the original answer, so the
/// unanswerable label is never false.
pub fn make_random(
    example: &QAExample,
    dataset: &Dataset,
    rng: &mut impl Rng,
    max_attempts: usize,
) -> Result<AugmentedExample> {
    let n = dataset.len();
    if n >= 2 {
        for _ in 0..max_attempts {
            let donor = &dataset.examples[rng.gen_range(0..n)];
            if donor.id == example.id {
                continue;
            }
            if contains_ci(&donor.context, example.canonical_answer()) {
                continue;
            }
            let mut derived = AugmentedExample::derived(example, ExampleType::Random);
            derived.context = donor.context.clone();
            derived.contextual_target = UNANSWERABLE.to_string();
            return Ok(derived);
        }
    }
    Err(Error::NoEligibleDonor {
        id: example.id.clone(),
        attempts: max_attempts,
    })
}

/// Which example types to derive and how, plus the seed every per-example
/// random stream is keyed from.
#[derive(Debug, Clone)]
pub struct AugmentConfig {
    pub seed: u64,
    pub enabled: BTreeSet<ExampleType>,
    /// Rejection-sampling budget for random-context donors.
    pub max_attempts: usize,
}

impl AugmentConfig {
    pub const DEFAULT_MAX_ATTEMPTS: usize = 100;

    pub fn new(seed: u64, enabled: impl IntoIterator<Item = ExampleType>) -> Result<Self> {
        let enabled: BTreeSet<ExampleType> = enabled.into_iter().collect();
        if enabled.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one example type must be enabled".to_string(),
            ));
        }
        Ok(Self {
            seed,
            enabled,
            max_attempts: Self::DEFAULT_MAX_ATTEMPTS,
        })
    }

    pub fn all_types(seed: u64) -> Self {
        Self::new(seed, ExampleType::ALL).expect("non-empty by construction")
    }
}

/// A per-example derivation that was skipped, and why. Skips are expected
/// for untaggable answers and missing substitutes; they never abort a batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkipDiagnostic {
    pub base_id: String,
    pub example_type: ExampleType,
    pub reason: String,
}

impl fmt::Display for SkipDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.base_id, self.example_type, self.reason)
    }
}

#[derive(Debug, Clone, Default)]
pub struct AugmentOutcome {
    pub examples: Vec<AugmentedExample>,
    pub skips: Vec<SkipDiagnostic>,
}

impl AugmentOutcome {
    pub fn count(&self, example_type: ExampleType) -> usize {
        self.examples
            .iter()
            .filter(|e| e.example_type == example_type)
            .count()
    }
}

/// Derives every enabled example type for every source example. Factual,
/// empty, and random outputs exist per source example; counterfactuals only
/// where the answer is taggable and an eligible substitute exists. Random
/// streams are keyed by (seed, base id, type), so the output is a pure
/// function of (dataset, pool, config) regardless of processing order.
pub fn augment_dataset(dataset: &Dataset, pool: &EntityPool, config: &AugmentConfig) -> AugmentOutcome {
    let mut outcome = AugmentOutcome::default();
    let skip = |skips: &mut Vec<SkipDiagnostic>, base_id: &str, t: ExampleType, reason: String| {
        skips.push(SkipDiagnostic {
            base_id: base_id.to_string(),
            example_type: t,
            reason,
        });
    };
    for example in &dataset.examples {
        for &t in ExampleType::ALL.iter().filter(|t| config.enabled.contains(t)) {
            let derived = match t {
                ExampleType::Factual => Ok(make_factual(example)),
                ExampleType::Empty => Ok(make_empty(example)),
                ExampleType::Random => {
                    let mut rng = keyed_rng(config.seed, &[&example.id, t.tag()]);
                    make_random(example, dataset, &mut rng, config.max_attempts)
                }
                ExampleType::Counterfactual => {
                    let Some(label) = pool.label_for_example(&example.id) else {
                        skip(
                            &mut outcome.skips,
                            &example.id,
                            t,
                            "answer is not taggable".to_string(),
                        );
                        continue;
                    };
                    let mut rng = keyed_rng(config.seed, &[&example.id, t.tag()]);
                    let Some(replacement) = sample_substitute(
                        pool,
                        label,
                        example.canonical_answer(),
                        &example.context,
                        &mut rng,
                    ) else {
                        skip(
                            &mut outcome.skips,
                            &example.id,
                            t,
                            "no eligible substitute".to_string(),
                        );
                        continue;
                    };
                    make_counterfactual(example, &replacement)
                }
            };
            match derived {
                Err(e) => skip(&mut outcome.skips, &example.id, t, e.to_string()),
                Ok(derived) => {
                    let violations = derived.check_invariants(example);
                    if violations.is_empty() {
                        outcome.examples.push(derived);
                    } else {
                        skip(&mut outcome.skips, &example.id, t, violations.join("; "));
                    }
                }
            }
        }
    }
    outcome
}

/// Reads an augmented JSON-lines file (the corpus schema plus derivation
/// fields). Ids must be unique; malformed lines are reported positionally.
pub fn read_augmented(path: &Path) -> Result<Vec<AugmentedExample>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<AugmentedExample>(&line) {
            Ok(record) => {
                if !seen.insert(record.id.clone()) {
                    diagnostics.push(LineDiagnostic::new(
                        line_no,
                        format!("duplicate id {:?}", record.id),
                    ));
                } else {
                    records.push(record);
                }
            }
            Err(e) => diagnostics.push(LineDiagnostic::new(line_no, format!("malformed line: {e}"))),
        }
    }
    if diagnostics.is_empty() {
        Ok(records)
    } else {
        Err(Error::invalid_file(path.display().to_string(), diagnostics))
    }
}

/// Writes augmented examples as JSON lines, atomically.
pub fn write_augmented(records: &[AugmentedExample], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    for record in records {
        serde_json::to_writer(&mut buf, record).expect("record serialization cannot fail");
        buf.write_all(b"\n")?;
    }
    write_atomic(path, &buf)?;
    Ok(())
}
