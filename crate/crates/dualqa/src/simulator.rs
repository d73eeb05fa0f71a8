//! Synthetic prediction generators with fixed behavioral profiles, so the
//! metric suite can be exercised end to end without a trained model. The
//! profiles span the behaviors worth measuring: echoing the context,
//! echoing memory, keeping the two apart, and leaking between them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::augment::AugmentedExample;
use crate::error::{Error, Result};
use crate::format::{encode_target, AnswerPair, OutputMode, PredictionRecord};
use crate::util::keyed_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// Both slots copy the contextual target.
    ContextReliant,
    /// Both slots copy the remembered answer.
    ParametricReliant,
    /// Contextual slot follows the context, parametric slot follows memory.
    Disentangled,
    /// Disentangled, except the contextual slot is overwritten by memory
    /// with probability `leak_probability`.
    Leaky,
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileKind::ContextReliant => "context-reliant",
            ProfileKind::ParametricReliant => "parametric-reliant",
            ProfileKind::Disentangled => "disentangled",
            ProfileKind::Leaky => "leaky",
        })
    }
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "context-reliant" => Ok(ProfileKind::ContextReliant),
            "parametric-reliant" => Ok(ProfileKind::ParametricReliant),
            "disentangled" => Ok(ProfileKind::Disentangled),
            "leaky" => Ok(ProfileKind::Leaky),
            other => Err(Error::InvalidConfig(format!(
                "unknown profile {other:?}; expected context-reliant, parametric-reliant, disentangled, or leaky"
            ))),
        }
    }
}

/// One simulated model: a behavior, a memory of parametric answers per base
/// example id, and a seed for the leak coin flips.
#[derive(Debug, Clone)]
pub struct BehaviorProfile {
    pub kind: ProfileKind,
    pub memory: BTreeMap<String, String>,
    pub leak_probability: f64,
    pub seed: u64,
}

impl BehaviorProfile {
    pub fn new(kind: ProfileKind, seed: u64) -> Self {
        Self {
            kind,
            memory: BTreeMap::new(),
            leak_probability: 0.0,
            seed,
        }
    }

    /// Fills memory with each example's original answer, simulating perfect
    /// pretraining recall. Imperfect recall is modeled by editing the map.
    pub fn with_default_memory(kind: ProfileKind, seed: u64, eval_set: &[AugmentedExample]) -> Self {
        let mut profile = Self::new(kind, seed);
        for record in eval_set {
            profile
                .memory
                .entry(record.base_id.clone())
                .or_insert_with(|| record.parametric_target.clone());
        }
        profile
    }

    pub fn with_leak(mut self, leak_probability: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&leak_probability) {
            return Err(Error::InvalidConfig(format!(
                "leak probability {leak_probability} is outside [0, 1]"
            )));
        }
        self.leak_probability = leak_probability;
        Ok(self)
    }
}

/// Emits one prediction per evaluation example under the profile's behavior,
/// encoded through the target codec. Memory must cover every base id. Leak
/// decisions are keyed by (seed, base id), so a fixed profile and evaluation
/// set always yield identical output.
pub fn simulate(
    profile: &BehaviorProfile,
    eval_set: &[AugmentedExample],
    mode: OutputMode,
) -> Result<Vec<PredictionRecord>> {
    if !(0.0..=1.0).contains(&profile.leak_probability) {
        return Err(Error::InvalidConfig(format!(
            "leak probability {} is outside [0, 1]",
            profile.leak_probability
        )));
    }
    let mut out = Vec::with_capacity(eval_set.len());
    for record in eval_set {
        let memory = profile
            .memory
            .get(&record.base_id)
            .ok_or_else(|| Error::MissingMemory {
                id: record.base_id.clone(),
            })?;
        let target = &record.contextual_target;
        let pair = match profile.kind {
            ProfileKind::ContextReliant => AnswerPair::new(target, target),
            ProfileKind::ParametricReliant => AnswerPair::new(memory, memory),
            ProfileKind::Disentangled => AnswerPair::new(target, memory),
            ProfileKind::Leaky => {
                let mut rng = keyed_rng(profile.seed, &[&record.base_id, "leak"]);
                let leaked = rng.gen::<f64>() < profile.leak_probability;
                AnswerPair::new(if leaked { memory } else { target }, memory)
            }
        };
        out.push(PredictionRecord::new(&record.id, encode_target(&pair, mode)));
    }
    Ok(out)
}
