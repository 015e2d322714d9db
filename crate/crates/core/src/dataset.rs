//! Image records, embeddings, and the joined [`Dataset`].
//!
//! File formats:
//!
//! * manifest: JSON Lines, one object per image with keys `id`, `noun`,
//!   `aspect`, `polarity` (-1 or 1), `adjective` and optional `split`;
//! * embeddings: first line `#dim=D`, then `id<TAB>v0<TAB>...<TAB>v(D-1)`.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::AspectLexicon;
pub use crate::lexicon::Polarity;

pub const DEFAULT_DIM: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    #[default]
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            "unassigned" => Ok(Split::Unassigned),
            other => Err(format!("unknown split '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    pub noun: String,
    pub aspect: String,
    pub polarity: Polarity,
    pub adjective: String,
    #[serde(default, skip_serializing_if = "is_unassigned")]
    pub split: Split,
}

fn is_unassigned(s: &Split) -> bool {
    *s == Split::Unassigned
}

impl ImageRecord {
    /// Checks that the adjective sits in the record's aspect on the record's side.
    pub fn validate(&self, lexicon: &AspectLexicon) -> Result<()> {
        let (aspect, polarity) = lexicon.adjective_aspect(&self.adjective)?;
        if aspect != self.aspect {
            return Err(Error::InvalidRecord {
                id: self.id.clone(),
                message: format!(
                    "adjective '{}' belongs to aspect '{}', not '{}'",
                    self.adjective, aspect, self.aspect
                ),
            });
        }
        if polarity != self.polarity {
            return Err(Error::InvalidRecord {
                id: self.id.clone(),
                message: format!(
                    "adjective '{}' has polarity {}, record says {}",
                    self.adjective, polarity, self.polarity
                ),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub id: String,
    pub values: Vec<f64>,
}

/// Records joined with embeddings over one lexicon.
#[derive(Debug, Clone)]
pub struct Dataset {
    lexicon: AspectLexicon,
    records: Vec<ImageRecord>,
    embeddings: HashMap<String, Vec<f64>>,
    noun_vocab: Vec<String>,
    dim: usize,
}

/// Nouns in order of first appearance.
pub fn noun_vocab(records: &[ImageRecord]) -> Vec<String> {
    let mut seen = HashSet::new();
    records
        .iter()
        .filter(|r| seen.insert(r.noun.as_str()))
        .map(|r| r.noun.clone())
        .collect()
}

impl Dataset {
    pub fn new(
        lexicon: AspectLexicon,
        records: Vec<ImageRecord>,
        embeddings: impl IntoIterator<Item = Embedding>,
        dim: usize,
    ) -> Result<Self> {
        let mut map = HashMap::new();
        for e in embeddings {
            check_embedding(&e.id, &e.values, dim)?;
            map.insert(e.id, e.values);
        }
        let mut ids = HashSet::new();
        for r in &records {
            if !ids.insert(r.id.as_str()) {
                return Err(Error::DuplicateId(r.id.clone()));
            }
            r.validate(&lexicon)?;
            if !map.contains_key(&r.id) {
                return Err(Error::MissingEmbedding(r.id.clone()));
            }
        }
        // keep only embeddings that back a record
        map.retain(|id, _| ids.contains(id.as_str()));
        let noun_vocab = noun_vocab(&records);
        Ok(Dataset {
            lexicon,
            records,
            embeddings: map,
            noun_vocab,
            dim,
        })
    }

    pub fn load(
        manifest: impl AsRef<Path>,
        embeddings: impl AsRef<Path>,
        lexicon: AspectLexicon,
    ) -> Result<Self> {
        let records = read_manifest(manifest)?;
        let (dim, embs) = read_embeddings(embeddings)?;
        Dataset::new(lexicon, records, embs, dim)
    }

    pub fn save(&self, manifest: impl AsRef<Path>, embeddings: impl AsRef<Path>) -> Result<()> {
        write_manifest(manifest, &self.records)?;
        let rows = self
            .records
            .iter()
            .map(|r| (r.id.as_str(), self.embeddings[&r.id].as_slice()));
        write_embeddings(embeddings, self.dim, rows)
    }

    pub fn lexicon(&self) -> &AspectLexicon {
        &self.lexicon
    }

    pub fn records(&self) -> &[ImageRecord] {
        &self.records
    }

    pub fn noun_vocab(&self) -> &[String] {
        &self.noun_vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn embedding(&self, id: &str) -> Option<&[f64]> {
        self.embeddings.get(id).map(Vec::as_slice)
    }

    /// Records labeled with `split`.
    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &ImageRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Same embeddings, new records (which must be a subset by id).
    pub fn with_records(&self, records: Vec<ImageRecord>) -> Result<Self> {
        let embs = records
            .iter()
            .map(|r| {
                self.embeddings
                    .get(&r.id)
                    .map(|v| Embedding {
                        id: r.id.clone(),
                        values: v.clone(),
                    })
                    .ok_or_else(|| Error::MissingEmbedding(r.id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(self.lexicon.clone(), records, embs, self.dim)
    }
}

fn check_embedding(id: &str, values: &[f64], dim: usize) -> Result<()> {
    if values.len() != dim {
        return Err(Error::DimensionMismatch {
            context: id.to_string(),
            expected: dim,
            found: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("embedding '{id}'")));
    }
    Ok(())
}

/// Reads any JSON Lines file of `T`, reporting the 1-based line of the first failure.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e))?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item).expect("record serializes"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ImageRecord>> {
    read_jsonl(path)
}

pub fn write_manifest(path: impl AsRef<Path>, records: &[ImageRecord]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<(usize, Vec<Embedding>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::parse(path, 1, "missing '#dim=D' header")),
    };
    let dim: usize = header
        .trim()
        .strip_prefix("#dim=")
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| Error::parse(path, 1, format!("bad header '{header}'")))?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default().to_string();
        let values = fields
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(path, lineno, format!("'{id}': {e}")))?;
        check_embedding(&id, &values, dim)?;
        out.push(Embedding { id, values });
    }
    Ok((dim, out))
}

/// Values are written in shortest round-trip form, so reading them back is exact.
pub fn write_embeddings<'a>(
    path: impl AsRef<Path>,
    dim: usize,
    rows: impl IntoIterator<Item = (&'a str, &'a [f64])>,
) -> Result<()> {
    let path = path.as_ref();
    let mut text = format!("#dim={dim}\n");
    for (id, values) in rows {
        text.push_str(id);
        for v in values {
            write!(text, "\t{v}").expect("string write");
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
