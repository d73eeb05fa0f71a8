//! Source-corpus schema, JSON-lines loading/saving, and table detection.
//!
//! A source example is one QA instance with a gold passage that contains the
//! canonical answer. Records live one-per-line in UTF-8 JSON lines with the
//! fields `id`, `question`, `context`, `answers`, `entity_type`, `has_table`
//! (recomputed when absent), and `split`. Unknown fields round-trip.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, LineDiagnostic, Result};
use crate::text::contains_ci;
use crate::util::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidConfig(format!(
                "unknown split {other:?}; expected train, validation, or test"
            ))),
        }
    }
}

/// One source QA instance. The first entry of `answers` is the canonical
/// answer; any further entries are aliases accepted by exact-match scoring.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QAExample {
    pub id: String,
    pub question: String,
    pub context: String,
    pub answers: Vec<String>,
    pub entity_type: Option<String>,
    pub has_table: bool,
    pub split: Split,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl QAExample {
    pub fn canonical_answer(&self) -> &str {
        self.answers.first().map(String::as_str).unwrap_or("")
    }

    /// Violated invariants for a source-corpus example, as human-readable
    /// messages. Empty means the example is valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.question.trim().is_empty() {
            out.push("empty question".to_string());
        }
        if self.answers.is_empty() {
            out.push("empty answers list".to_string());
        } else if self.canonical_answer().trim().is_empty() {
            out.push("empty canonical answer".to_string());
        } else if !contains_ci(&self.context, self.canonical_answer()) {
            out.push(format!(
                "canonical answer {:?} does not occur in the context",
                self.canonical_answer()
            ));
        }
        out
    }
}

/// Raw wire record; `has_table` is optional and recomputed on load.
#[derive(Deserialize)]
struct RawRecord {
    id: String,
    question: String,
    context: String,
    answers: Vec<String>,
    #[serde(default)]
    entity_type: Option<String>,
    #[serde(default)]
    has_table: Option<bool>,
    split: Split,
    #[serde(flatten)]
    extra: serde_json::Map<String, serde_json::Value>,
}

impl From<RawRecord> for QAExample {
    fn from(raw: RawRecord) -> Self {
        let has_table = raw
            .has_table
            .unwrap_or_else(|| detect_table_context(&raw.context));
        QAExample {
            id: raw.id,
            question: raw.question,
            context: raw.context,
            answers: raw.answers,
            entity_type: raw.entity_type.filter(|s| !s.trim().is_empty()),
            has_table,
            split: raw.split,
            extra: raw.extra,
        }
    }
}

/// Where a dataset came from: the file it was loaded from, or the seed that
/// generated it. Bookkeeping only; never part of dataset equality.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_path: Option<String>,
    pub seed: Option<u64>,
}

/// An ordered, validated collection of source examples for one split.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub examples: Vec<QAExample>,
    pub split: Split,
    pub provenance: Provenance,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.split == other.split && self.examples == other.examples
    }
}

impl Dataset {
    /// Builds a dataset, enforcing id uniqueness, split agreement, and the
    /// per-example source invariants. Diagnostics are positional (record
    /// index, 1-based).
    pub fn new(examples: Vec<QAExample>, split: Split, provenance: Provenance) -> Result<Self> {
        let diagnostics = validate_examples(&examples, split);
        if diagnostics.is_empty() {
            Ok(Dataset {
                examples,
                split,
                provenance,
            })
        } else {
            Err(Error::invalid_file("<in-memory dataset>", diagnostics))
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&QAExample> {
        self.examples.iter().find(|e| e.id == id)
    }
}

fn validate_examples(examples: &[QAExample], split: Split) -> Vec<LineDiagnostic> {
    let mut diagnostics = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, example) in examples.iter().enumerate() {
        let line = idx + 1;
        if !seen.insert(example.id.clone()) {
            diagnostics.push(LineDiagnostic::new(
                line,
                format!("duplicate id {:?}", example.id),
            ));
        }
        if example.split != split {
            diagnostics.push(LineDiagnostic::new(
                line,
                format!(
                    "split {:?} does not match the dataset split {:?}",
                    example.split.to_string(),
                    split.to_string()
                ),
            ));
        }
        for violation in example.violations() {
            diagnostics.push(LineDiagnostic::new(line, violation));
        }
    }
    diagnostics
}

/// Loads and validates a JSON-lines corpus. Every record either loads or
/// contributes exactly one diagnostic naming the violated invariant and its
/// line; any diagnostic fails the whole load.
pub fn load_dataset(path: &Path, split: Split) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut examples = Vec::new();
    let mut diagnostics = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = match serde_json::from_str(&line) {
            Ok(raw) => raw,
            Err(e) => {
                diagnostics.push(LineDiagnostic::new(line_no, format!("malformed line: {e}")));
                continue;
            }
        };
        let example = QAExample::from(raw);
        let mut bad = false;
        if !seen.insert(example.id.clone()) {
            diagnostics.push(LineDiagnostic::new(
                line_no,
                format!("duplicate id {:?}", example.id),
            ));
            bad = true;
        }
        if example.split != split {
            diagnostics.push(LineDiagnostic::new(
                line_no,
                format!(
                    "split {:?} does not match the requested split {:?}",
                    example.split.to_string(),
                    split.to_string()
                ),
            ));
            bad = true;
        }
        for violation in example.violations() {
            diagnostics.push(LineDiagnostic::new(line_no, violation));
            bad = true;
        }
        if !bad {
            examples.push(example);
        }
    }
    if diagnostics.is_empty() {
        Ok(Dataset {
            examples,
            split,
            provenance: Provenance {
                source_path: Some(path.display().to_string()),
                seed: None,
            },
        })
    } else {
        Err(Error::invalid_file(path.display().to_string(), diagnostics))
    }
}

/// Writes a dataset as JSON lines, atomically. Round-trips through
/// [`load_dataset`] field for field, including unknown fields.
pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    for example in &dataset.examples {
        serde_json::to_writer(&mut buf, example).expect("example serialization cannot fail");
        buf.write_all(b"\n")?;
    }
    write_atomic(path, &buf)?;
    Ok(())
}

/// Heuristic table detection: any of the markup tokens `<Table>`, `<Tr>`,
/// `<Td>`, or a line in which `|` appears at least three times.
pub fn detect_table_context(context: &str) -> bool {
    const MARKERS: [&str; 3] = ["<Table>", "<Tr>", "<Td>"];
    if MARKERS.iter().any(|m| context.contains(m)) {
        return true;
    }
    context.lines().any(|line| line.matches('|').count() >= 3)
}
