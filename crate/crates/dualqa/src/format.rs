//! Target encoding and prediction parsing for the single- and multi-answer
//! output formats.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, LineDiagnostic, Result};
use crate::util::write_atomic;

/// Sentinel emitted in the contextual slot when the context holds no answer.
pub const UNANSWERABLE: &str = "unanswerable";

const PAIR_PREFIX: &str = "contextual: ";
const PAIR_DELIM: &str = ", parametric: ";

/// A contextual/parametric answer pair. The contextual slot may hold the
/// [`UNANSWERABLE`] sentinel; the parametric slot is always a real answer.
/// Both slots are stored trimmed of surrounding whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerPair {
    pub contextual: String,
    pub parametric: String,
}

impl AnswerPair {
    pub fn new(contextual: impl Into<String>, parametric: impl Into<String>) -> Self {
        Self {
            contextual: contextual.into().trim().to_string(),
            parametric: parametric.into().trim().to_string(),
        }
    }

    pub fn contextual_is_unanswerable(&self) -> bool {
        is_unanswerable(&self.contextual)
    }
}

/// Case-insensitive test for the [`UNANSWERABLE`] sentinel. The sentinel is
/// compared verbatim, never through answer normalization.
pub fn is_unanswerable(s: &str) -> bool {
    s.trim().eq_ignore_ascii_case(UNANSWERABLE)
}

/// Whether a model emits one answer or a contextual/parametric pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputMode {
    Single,
    Multi,
}

impl fmt::Display for OutputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputMode::Single => "single",
            OutputMode::Multi => "multi",
        })
    }
}

impl FromStr for OutputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(OutputMode::Single),
            "multi" => Ok(OutputMode::Multi),
            other => Err(Error::InvalidConfig(format!(
                "unknown output mode {other:?}; expected \"single\" or \"multi\""
            ))),
        }
    }
}

/// Result of parsing one raw model output. Parse failure is a value, not an
/// error; the metrics layer scores it as wrong for every answer slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parsed {
    Pair(AnswerPair),
    Single(String),
    Failure,
}

impl Parsed {
    /// The contextual answer slot, when one was recovered.
    pub fn contextual(&self) -> Option<&str> {
        match self {
            Parsed::Pair(p) => Some(&p.contextual),
            Parsed::Single(s) => Some(s),
            Parsed::Failure => None,
        }
    }

    /// The parametric answer slot; only multi-answer parses have one.
    pub fn parametric(&self) -> Option<&str> {
        match self {
            Parsed::Pair(p) => Some(&p.parametric),
            _ => None,
        }
    }
}

/// Renders a training/evaluation target string for the given output mode.
pub fn encode_target(pair: &AnswerPair, mode: OutputMode) -> String {
    match mode {
        OutputMode::Single => pair.contextual.clone(),
        OutputMode::Multi => format!(
            "{PAIR_PREFIX}{}{PAIR_DELIM}{}",
            pair.contextual, pair.parametric
        ),
    }
}

/// Parses one raw decoded string. In multi mode the split is anchored on the
/// LAST occurrence of `", parametric: "` so commas inside the contextual
/// answer survive; the parse only breaks when the parametric answer itself
/// contains the delimiter. Both sides are trimmed. Total: every input maps
/// to a pair, a single answer, or [`Parsed::Failure`].
pub fn parse_prediction(raw: &str, mode: OutputMode) -> Parsed {
    match mode {
        OutputMode::Single => Parsed::Single(raw.trim().to_string()),
        OutputMode::Multi => {
            // Split the raw string before any trimming: trimming first would
            // eat the delimiter's trailing space when the parametric answer
            // is empty.
            let Some(split_at) = raw.rfind(PAIR_DELIM) else {
                return Parsed::Failure;
            };
            let (left, right) = raw.split_at(split_at);
            let Some(contextual) = left.trim_start().strip_prefix(PAIR_PREFIX) else {
                return Parsed::Failure;
            };
            let parametric = &right[PAIR_DELIM.len()..];
            Parsed::Pair(AnswerPair::new(contextual, parametric))
        }
    }
}

/// One raw model output tied to an evaluation example id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub output: String,
}

impl PredictionRecord {
    pub fn new(id: impl Into<String>, output: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            output: output.into(),
        }
    }

    pub fn parse(&self, mode: OutputMode) -> Parsed {
        parse_prediction(&self.output, mode)
    }
}

/// Reads a JSON-lines prediction file (`id`, `output` per record).
pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<PredictionRecord>(&line) {
            Ok(record) => records.push(record),
            Err(e) => diagnostics.push(LineDiagnostic::new(idx + 1, format!("malformed line: {e}"))),
        }
    }
    if diagnostics.is_empty() {
        Ok(records)
    } else {
        Err(Error::invalid_file(path.display().to_string(), diagnostics))
    }
}

/// Writes predictions as JSON lines, atomically.
pub fn write_predictions(records: &[PredictionRecord], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    for record in records {
        serde_json::to_writer(&mut buf, record).expect("prediction serialization cannot fail");
        buf.write_all(b"\n")?;
    }
    write_atomic(path, &buf)?;
    Ok(())
}
