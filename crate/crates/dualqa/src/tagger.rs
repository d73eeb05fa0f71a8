//! Deterministic entity tagging backed by a gazetteer file, so answers can
//! be pooled by entity category without a statistical NER dependency.
//! Corpus-provided `entity_type` fields take precedence over gazetteer tags.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::normalize_answer;

const HEADER_PREFIX: &str = "#labels\t";

/// Mapping from normalized answer surface to an entity-category label drawn
/// from a closed label set declared in the file header. Immutable after
/// load; safe to share across threads.
#[derive(Debug, Clone)]
pub struct Gazetteer {
    labels: BTreeSet<String>,
    entries: HashMap<String, String>,
    source: Option<PathBuf>,
}

impl Gazetteer {
    /// A gazetteer with no labels and no entries; tags nothing.
    pub fn empty() -> Self {
        Self {
            labels: BTreeSet::new(),
            entries: HashMap::new(),
            source: None,
        }
    }

    /// Builds a gazetteer from in-memory entries, enforcing the same
    /// invariants as [`load_gazetteer`]: keys are normalized and unique,
    /// labels come from the declared set.
    pub fn from_entries<L, E, S, T>(labels: L, entries: E) -> Result<Self>
    where
        L: IntoIterator<Item = S>,
        E: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let labels: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        let mut map = HashMap::new();
        for (surface, label) in entries {
            let surface = surface.into();
            let label = label.into();
            let key = normalize_answer(&surface);
            if key.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "gazetteer surface {surface:?} normalizes to an empty key"
                )));
            }
            if !labels.contains(&label) {
                return Err(Error::InvalidConfig(format!(
                    "gazetteer label {label:?} is not declared in the label set"
                )));
            }
            if map.insert(key.clone(), label).is_some() {
                return Err(Error::InvalidConfig(format!(
                    "duplicate gazetteer key {key:?}"
                )));
            }
        }
        Ok(Self {
            labels,
            entries: map,
            source: None,
        })
    }

    pub fn labels(&self) -> &BTreeSet<String> {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }
}

/// Entity-category label for an answer, if the gazetteer knows it. Lookup is
/// normalization-invariant: `tag_answer(s) == tag_answer(normalize(s))`.
/// Absence means the answer is ineligible for counterfactual substitution.
pub fn tag_answer<'g>(answer: &str, gazetteer: &'g Gazetteer) -> Option<&'g str> {
    gazetteer
        .entries
        .get(&normalize_answer(answer))
        .map(String::as_str)
}

/// Loads a gazetteer TSV: a `#labels<TAB>L1,L2,…` header line followed by
/// `surface<TAB>label` body lines. Blank lines are skipped.
pub fn load_gazetteer(path: &Path) -> Result<Gazetteer> {
    let fail = |line: usize, message: String| Error::Gazetteer {
        path: path.display().to_string(),
        line,
        message,
    };
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let header = loop {
        match lines.next() {
            Some((idx, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break (idx + 1, line);
            }
            None => return Err(fail(1, "missing #labels header".to_string())),
        }
    };
    let Some(label_list) = header.1.strip_prefix(HEADER_PREFIX) else {
        return Err(fail(
            header.0,
            format!("first line must start with {HEADER_PREFIX:?}"),
        ));
    };
    let labels: BTreeSet<String> = label_list
        .split(',')
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect();

    let mut entries = HashMap::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let Some((surface, label)) = line.split_once('\t') else {
            return Err(fail(line_no, "expected surface<TAB>label".to_string()));
        };
        let label = label.trim();
        if label.contains('\t') {
            return Err(fail(line_no, "expected exactly two tab-separated fields".to_string()));
        }
        if !labels.contains(label) {
            return Err(fail(
                line_no,
                format!("label {label:?} is not declared in the header"),
            ));
        }
        let key = normalize_answer(surface);
        if key.is_empty() {
            return Err(fail(
                line_no,
                format!("surface {surface:?} normalizes to an empty key"),
            ));
        }
        if entries.insert(key.clone(), label.to_string()).is_some() {
            return Err(fail(line_no, format!("duplicate key {key:?}")));
        }
    }
    Ok(Gazetteer {
        labels,
        entries,
        source: Some(path.to_path_buf()),
    })
}
