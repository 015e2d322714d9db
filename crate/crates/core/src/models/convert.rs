use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{AspectLexicon, Polarity};

/// Output label of a classifier whose classes are finer than aspects.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Label {
    Adjective {
        adjective: String,
    },
    AdjNoun {
        adjective: String,
        noun: String,
    },
    AspPol {
        aspect: String,
        polarity: Polarity,
    },
    AspPolNoun {
        aspect: String,
        polarity: Polarity,
        noun: String,
    },
}

impl Label {
    pub fn noun(&self) -> Option<&str> {
        match self {
            Label::AdjNoun { noun, .. } | Label::AspPolNoun { noun, .. } => Some(noun),
            _ => None,
        }
    }

    /// (aspect name, polarity) of the label under `lexicon`.
    pub fn resolve<'a>(&'a self, lexicon: &'a AspectLexicon) -> Result<(&'a str, Polarity)> {
        match self {
            Label::Adjective { adjective } | Label::AdjNoun { adjective, .. } => {
                lexicon.adjective_aspect(adjective)
            }
            Label::AspPol { aspect, polarity }
            | Label::AspPolNoun {
                aspect, polarity, ..
            } => {
                lexicon.aspect_by_name(aspect)?;
                Ok((aspect, *polarity))
            }
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Adjective { adjective } => write!(f, "{adjective}"),
            Label::AdjNoun { adjective, noun } => write!(f, "{adjective}_{noun}"),
            Label::AspPol { aspect, polarity } => write!(f, "{aspect}{polarity}"),
            Label::AspPolNoun {
                aspect,
                polarity,
                noun,
            } => write!(f, "{aspect}{polarity}_{noun}"),
        }
    }
}

/// Scores aligned with distinct labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    scores: Vec<f64>,
    labels: Vec<Label>,
}

impl ScoreVector {
    pub fn new(scores: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::shape(
                "score_vector",
                format!("{} scores for {} labels", scores.len(), labels.len()),
            ));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(*l)) {
            return Err(Error::InvalidConfig(format!("duplicate label '{dup}'")));
        }
        Ok(ScoreVector { scores, labels })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvertMode<'a> {
    Aspect,
    /// Only labels of this aspect compete.
    Polarity(&'a str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conversion {
    pub aspect: String,
    pub polarity: Polarity,
    /// Position of the winning label in the score vector.
    pub index: usize,
    pub score: f64,
}

/// Maps the highest-scoring surviving label to an aspect or a polarity.
///
/// With a noun filter, labels that carry a different noun are dropped; labels
/// without a noun always survive. Ties go to the earlier label.
pub fn convert_scores(
    scores: &ScoreVector,
    lexicon: &AspectLexicon,
    mode: ConvertMode<'_>,
    noun: Option<&str>,
) -> Result<Conversion> {
    if let ConvertMode::Polarity(a) = mode {
        lexicon.aspect_by_name(a)?;
    }
    let mut best: Option<Conversion> = None;
    for (i, (label, &s)) in scores.labels.iter().zip(&scores.scores).enumerate() {
        if let (Some(want), Some(has)) = (noun, label.noun()) {
            if want != has {
                continue;
            }
        }
        let (aspect, polarity) = label.resolve(lexicon)?;
        if let ConvertMode::Polarity(a) = mode {
            if a != aspect {
                continue;
            }
        }
        if best.as_ref().is_none_or(|b| s > b.score) {
            best = Some(Conversion {
                aspect: aspect.to_string(),
                polarity,
                index: i,
                score: s,
            });
        }
    }
    best.ok_or_else(|| {
        let mut what = match mode {
            ConvertMode::Aspect => "aspect".to_string(),
            ConvertMode::Polarity(a) => format!("polarity of '{a}'"),
        };
        if let Some(n) = noun {
            what.push_str(&format!(", noun '{n}'"));
        }
        Error::NoApplicableLabel(what)
    })
}
