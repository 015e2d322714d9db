use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndmath::{OptConfig, OptimizerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// One linear model on the embedding alone.
    LrNounAgnostic,
    /// One linear model per noun (aspect task) or per noun-aspect (polarity task).
    LrNounSpecific,
    /// One multinomial model over the adjective-noun classes seen in training.
    LrAdjNoun,
    ConcatMlp,
    TensorCond,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::LrNounAgnostic,
        Family::LrNounSpecific,
        Family::LrAdjNoun,
        Family::ConcatMlp,
        Family::TensorCond,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::LrNounAgnostic => "lr_noun_agnostic",
            Family::LrNounSpecific => "lr_noun_specific",
            Family::LrAdjNoun => "lr_adj_noun",
            Family::ConcatMlp => "concat_mlp",
            Family::TensorCond => "tensor_cond",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown family '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Aspect,
    Polarity,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Aspect => "aspect",
            Task::Polarity => "polarity",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "aspect" => Ok(Task::Aspect),
            "polarity" => Ok(Task::Polarity),
            other => Err(format!("unknown task '{other}'")),
        }
    }
}

pub const DEFAULT_EPOCHS: usize = 50;
pub const DEFAULT_BATCH: usize = 64;
pub const DEFAULT_HIDDEN: usize = 10;

fn default_hidden() -> usize {
    DEFAULT_HIDDEN
}

fn default_lr() -> f64 {
    OptConfig::default().lr
}

fn default_epochs() -> usize {
    DEFAULT_EPOCHS
}

fn default_batch() -> usize {
    DEFAULT_BATCH
}

/// Training hyperparameters. Only `family`, `task` and `seed` are required
/// when deserializing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub task: Task,
    /// Hidden width; only used by `concat_mlp`.
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(family: Family, task: Task, seed: u64) -> Self {
        ModelSpec {
            family,
            task,
            hidden: DEFAULT_HIDDEN,
            lr: default_lr(),
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH,
            optimizer: OptimizerKind::Adam,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::InvalidConfig(format!("learning rate {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        if self.family == Family::ConcatMlp && self.hidden == 0 {
            return Err(Error::InvalidConfig("hidden width must be positive".into()));
        }
        Ok(())
    }

    pub fn opt_config(&self) -> OptConfig {
        OptConfig {
            kind: self.optimizer,
            lr: self.lr,
            ..OptConfig::default()
        }
    }
}
