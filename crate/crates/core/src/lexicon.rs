//! The aspect lexicon: aspects with mutually exclusive left/right adjective lists.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_LEXICON: &str = include_str!("../data/default_lexicon.json");

/// Side of an aspect. Stored and serialized as -1 (left) / +1 (right).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Polarity {
    Left,
    Right,
}

impl Polarity {
    pub fn as_i64(self) -> i64 {
        match self {
            Polarity::Left => -1,
            Polarity::Right => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.as_i64() as f64
    }

    /// Sign rule for scores: zero maps to `Right`.
    pub fn from_score(score: f64) -> Self {
        if score < 0.0 {
            Polarity::Left
        } else {
            Polarity::Right
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Polarity::Left => Polarity::Right,
            Polarity::Right => Polarity::Left,
        }
    }

    pub fn both() -> [Polarity; 2] {
        [Polarity::Left, Polarity::Right]
    }
}

impl TryFrom<i64> for Polarity {
    type Error = String;

    fn try_from(v: i64) -> std::result::Result<Self, String> {
        match v {
            -1 => Ok(Polarity::Left),
            1 => Ok(Polarity::Right),
            other => Err(format!("polarity must be -1 or 1, got {other}")),
        }
    }
}

impl From<Polarity> for i64 {
    fn from(p: Polarity) -> i64 {
        p.as_i64()
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.as_i64())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectEntry {
    pub id: usize,
    pub name: String,
    pub left: Vec<String>,
    pub right: Vec<String>,
}

impl AspectEntry {
    pub fn side(&self, polarity: Polarity) -> &[String] {
        match polarity {
            Polarity::Left => &self.left,
            Polarity::Right => &self.right,
        }
    }

    fn side_mut(&mut self, polarity: Polarity) -> &mut Vec<String> {
        match polarity {
            Polarity::Left => &mut self.left,
            Polarity::Right => &mut self.right,
        }
    }
}

/// Where an adjective lives in the lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdjectiveSense {
    /// 1-based aspect id.
    pub aspect_id: usize,
    pub polarity: Polarity,
}

#[derive(Serialize, Deserialize)]
struct LexiconFile {
    aspects: Vec<AspectEntry>,
}

/// Ordered aspects with a reverse index from adjective to (aspect, side).
#[derive(Debug, Clone, PartialEq)]
pub struct AspectLexicon {
    aspects: Vec<AspectEntry>,
    index: HashMap<String, AdjectiveSense>,
}

impl AspectLexicon {
    /// Validates the entries and builds the adjective index.
    pub fn new(aspects: Vec<AspectEntry>) -> Result<Self> {
        let mut index: HashMap<String, AdjectiveSense> = HashMap::new();
        for (pos, entry) in aspects.iter().enumerate() {
            if entry.id != pos + 1 {
                return Err(Error::InvalidLexicon(format!(
                    "aspect '{}' has id {}, expected {}",
                    entry.name,
                    entry.id,
                    pos + 1
                )));
            }
            if aspects[..pos].iter().any(|a| a.name == entry.name) {
                return Err(Error::InvalidLexicon(format!(
                    "aspect name '{}' appears twice",
                    entry.name
                )));
            }
            for polarity in Polarity::both() {
                let side = entry.side(polarity);
                if side.is_empty() {
                    return Err(Error::EmptySide {
                        aspect: entry.name.clone(),
                        side: if polarity == Polarity::Left {
                            "left"
                        } else {
                            "right"
                        },
                    });
                }
                for adj in side {
                    let sense = AdjectiveSense {
                        aspect_id: entry.id,
                        polarity,
                    };
                    if let Some(prev) = index.insert(adj.clone(), sense) {
                        return Err(Error::DuplicateAdjective {
                            adjective: adj.clone(),
                            aspect: entry.name.clone(),
                            other: aspects[prev.aspect_id - 1].name.clone(),
                        });
                    }
                }
            }
        }
        Ok(AspectLexicon { aspects, index })
    }

    /// The six-aspect table shipped with the crate.
    pub fn default_table() -> Self {
        Self::from_json_str(DEFAULT_LEXICON, Path::new("<default lexicon>"))
            .expect("shipped lexicon is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, path)
    }

    fn from_json_str(text: &str, path: &Path) -> Result<Self> {
        let file: LexiconFile =
            serde_json::from_str(text).map_err(|e| Error::parse(path, e.line(), &e))?;
        Self::new(file.aspects)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = LexiconFile {
            aspects: self.aspects.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("lexicon serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn aspects(&self) -> &[AspectEntry] {
        &self.aspects
    }

    pub fn len(&self) -> usize {
        self.aspects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aspects.is_empty()
    }

    pub fn aspect(&self, id: usize) -> Option<&AspectEntry> {
        id.checked_sub(1).and_then(|i| self.aspects.get(i))
    }

    pub fn aspect_by_name(&self, name: &str) -> Result<&AspectEntry> {
        self.aspects
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAspect(name.to_string()))
    }

    /// 0-based position of the named aspect.
    pub fn aspect_index(&self, name: &str) -> Result<usize> {
        self.aspect_by_name(name).map(|a| a.id - 1)
    }

    pub fn aspect_names(&self) -> Vec<String> {
        self.aspects.iter().map(|a| a.name.clone()).collect()
    }

    pub fn adjective_lookup(&self, adjective: &str) -> Result<AdjectiveSense> {
        self.index
            .get(adjective)
            .copied()
            .ok_or_else(|| Error::UnknownAdjective(adjective.to_string()))
    }

    /// Name of the aspect containing `adjective`, with its side.
    pub fn adjective_aspect(&self, adjective: &str) -> Result<(&str, Polarity)> {
        let sense = self.adjective_lookup(adjective)?;
        Ok((&self.aspects[sense.aspect_id - 1].name, sense.polarity))
    }

    fn contains(&self, adjective: &str) -> bool {
        self.aspects
            .iter()
            .any(|a| a.left.iter().chain(&a.right).any(|x| x == adjective))
    }

    /// Grows both sides of one aspect from synonym/antonym tables until nothing
    /// changes. Synonyms join the side of their source adjective, antonyms the
    /// opposite side; a candidate already present anywhere in the lexicon is
    /// skipped.
    pub fn expand_aspect(
        &self,
        aspect_id: usize,
        synonyms: &BTreeMap<String, BTreeSet<String>>,
        antonyms: &BTreeMap<String, BTreeSet<String>>,
    ) -> Result<Self> {
        let pos = aspect_id
            .checked_sub(1)
            .filter(|&p| p < self.aspects.len())
            .ok_or_else(|| Error::UnknownAspect(format!("id {aspect_id}")))?;
        let mut out = self.clone();
        loop {
            let mut changed = false;
            for polarity in Polarity::both() {
                let sources = out.aspects[pos].side(polarity).to_vec();
                for source in &sources {
                    let moves = [(synonyms, polarity), (antonyms, polarity.opposite())];
                    for (table, target) in moves {
                        let Some(candidates) = table.get(source) else {
                            continue;
                        };
                        for cand in candidates {
                            if out.contains(cand) {
                                continue;
                            }
                            out.aspects[pos].side_mut(target).push(cand.clone());
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        AspectLexicon::new(out.aspects)
    }
}
