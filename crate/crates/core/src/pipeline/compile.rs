//! Cleaning raw adjective-noun tag records into aspect-labeled image records.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::dataset::{ImageRecord, Split};
use crate::lexicon::{AspectLexicon, Polarity};

/// One crawled image carrying the tag `"[adjective] [noun]"`. An image with
/// several qualifying tags appears once per tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TagRecord {
    pub id: String,
    pub noun: String,
    pub adjective: String,
}

impl From<&ImageRecord> for TagRecord {
    fn from(r: &ImageRecord) -> Self {
        TagRecord {
            id: r.id.clone(),
            noun: r.noun.clone(),
            adjective: r.adjective.clone(),
        }
    }
}

/// An adjective-noun combination removed by manual inspection.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Exclusion {
    pub adjective: String,
    pub noun: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalEntry {
    pub rule: String,
    pub target: String,
    pub count: usize,
}

/// How the noun rule combines its two conditions ("fewer than 500 images",
/// "fewer than two aspects").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NounRuleMode {
    /// Remove a noun only if both conditions hold.
    #[default]
    And,
    /// Remove a noun if either condition holds.
    Or,
}

impl std::str::FromStr for NounRuleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "and" => Ok(NounRuleMode::And),
            "or" => Ok(NounRuleMode::Or),
            other => Err(format!("mode must be 'and' or 'or', got '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Minimum images per adjective-noun combination.
    pub min_combo_images: usize,
    /// Minimum images per polarity of a noun-aspect combination.
    pub min_polarity_images: usize,
    /// Noun rule: image count below which a noun is small.
    pub min_noun_images: usize,
    /// Noun rule: aspect count below which a noun is narrow.
    pub min_noun_aspects: usize,
    /// Minimum images per polarity of an aspect over all nouns.
    pub min_aspect_polarity_images: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_combo_images: 20,
            min_polarity_images: 100,
            min_noun_images: 500,
            min_noun_aspects: 2,
            min_aspect_polarity_images: 500,
        }
    }
}

pub const RULE_EXCLUSION: &str = "exclusion";
pub const RULE_UNKNOWN_ADJECTIVE: &str = "unknown_adjective";
pub const RULE_DUPLICATE_TAG: &str = "duplicate_tag";
pub const RULE_COMBO_IMAGES: &str = "combo_images";
pub const RULE_POLARITY_IMAGES: &str = "noun_aspect_polarity_images";
pub const RULE_NOUN: &str = "noun_images_aspects";
pub const RULE_ASPECT: &str = "aspect_polarity_images";

#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    /// Surviving records, in input order; an id may still occur in several combos.
    pub records: Vec<ImageRecord>,
    pub log: Vec<RemovalEntry>,
}

/// Log entries per target in first-seen order.
#[derive(Default)]
struct Tally {
    order: Vec<String>,
    counts: HashMap<String, usize>,
}

impl Tally {
    fn add(&mut self, target: String) {
        let c = self.counts.entry(target.clone()).or_insert(0);
        if *c == 0 {
            self.order.push(target);
        }
        *c += 1;
    }

    fn drain_into(self, rule: &str, log: &mut Vec<RemovalEntry>) {
        for t in self.order {
            let count = self.counts[&t];
            log.push(RemovalEntry {
                rule: rule.to_string(),
                target: t,
                count,
            });
        }
    }
}

/// Applies the cleaning rules repeatedly until none of them removes anything:
///
/// 1. drop adjective-noun combinations with fewer than `min_combo_images` images;
/// 2. keep a noun-aspect combination only if each polarity has at least
///    `min_polarity_images` images;
/// 3. drop nouns with fewer than `min_noun_images` images and/or fewer than
///    `min_noun_aspects` aspects, per `mode`;
/// 4. drop aspects with fewer than `min_aspect_polarity_images` images on
///    either polarity.
///
/// Excluded combinations, unknown adjectives and repeated tags are removed
/// before the loop. Counts are distinct image ids.
pub fn compile_dataset(
    records: &[TagRecord],
    lexicon: &AspectLexicon,
    exclusions: &[Exclusion],
    mode: NounRuleMode,
    thresholds: &Thresholds,
) -> Compiled {
    let mut log = Vec::new();
    let excluded: HashSet<(&str, &str)> = exclusions
        .iter()
        .map(|e| (e.adjective.as_str(), e.noun.as_str()))
        .collect();

    let mut seen = HashSet::new();
    let mut live: Vec<ImageRecord> = Vec::new();
    let (mut ex, mut unknown, mut dup) = (Tally::default(), Tally::default(), Tally::default());
    for t in records {
        let combo = format!("{} {}", t.adjective, t.noun);
        if excluded.contains(&(t.adjective.as_str(), t.noun.as_str())) {
            ex.add(combo);
            continue;
        }
        let Ok((aspect, polarity)) = lexicon.adjective_aspect(&t.adjective) else {
            unknown.add(combo);
            continue;
        };
        if !seen.insert(t) {
            dup.add(combo);
            continue;
        }
        live.push(ImageRecord {
            id: t.id.clone(),
            noun: t.noun.clone(),
            aspect: aspect.to_string(),
            polarity,
            adjective: t.adjective.clone(),
            split: Split::Unassigned,
        });
    }
    ex.drain_into(RULE_EXCLUSION, &mut log);
    unknown.drain_into(RULE_UNKNOWN_ADJECTIVE, &mut log);
    dup.drain_into(RULE_DUPLICATE_TAG, &mut log);

    loop {
        let before = live.len();
        live = rule_combo_images(live, thresholds, &mut log);
        live = rule_polarity_images(live, thresholds, &mut log);
        live = rule_noun(live, mode, thresholds, &mut log);
        live = rule_aspect(live, thresholds, &mut log);
        if live.len() == before {
            break;
        }
    }
    Compiled { records: live, log }
}

fn distinct<'a>(ids: impl Iterator<Item = &'a str>) -> usize {
    ids.collect::<HashSet<_>>().len()
}

/// Removes records whose key is in `drop`, logging one entry per dropped key.
fn remove_keys<K, F>(
    records: Vec<ImageRecord>,
    drop: &HashSet<K>,
    key: F,
    rule: &str,
    label: impl Fn(&K) -> String,
    log: &mut Vec<RemovalEntry>,
) -> Vec<ImageRecord>
where
    K: std::hash::Hash + Eq + Clone,
    F: Fn(&ImageRecord) -> K,
{
    if drop.is_empty() {
        return records;
    }
    let mut tally = Tally::default();
    let kept = records
        .into_iter()
        .filter(|r| {
            let k = key(r);
            if drop.contains(&k) {
                tally.add(label(&k));
                false
            } else {
                true
            }
        })
        .collect();
    tally.drain_into(rule, log);
    kept
}

fn rule_combo_images(
    records: Vec<ImageRecord>,
    th: &Thresholds,
    log: &mut Vec<RemovalEntry>,
) -> Vec<ImageRecord> {
    let mut ids: BTreeMap<(String, String), HashSet<&str>> = BTreeMap::new();
    for r in &records {
        ids.entry((r.adjective.clone(), r.noun.clone()))
            .or_default()
            .insert(&r.id);
    }
    let drop: HashSet<(String, String)> = ids
        .into_iter()
        .filter(|(_, s)| s.len() < th.min_combo_images)
        .map(|(k, _)| k)
        .collect();
    remove_keys(
        records,
        &drop,
        |r| (r.adjective.clone(), r.noun.clone()),
        RULE_COMBO_IMAGES,
        |(a, n)| format!("{a} {n}"),
        log,
    )
}

fn rule_polarity_images(
    records: Vec<ImageRecord>,
    th: &Thresholds,
    log: &mut Vec<RemovalEntry>,
) -> Vec<ImageRecord> {
    let mut counts: BTreeMap<(String, String), [HashSet<&str>; 2]> = BTreeMap::new();
    for r in &records {
        let side = usize::from(r.polarity == Polarity::Right);
        counts
            .entry((r.noun.clone(), r.aspect.clone()))
            .or_default()[side]
            .insert(&r.id);
    }
    let drop: HashSet<(String, String)> = counts
        .into_iter()
        .filter(|(_, sides)| sides.iter().any(|s| s.len() < th.min_polarity_images))
        .map(|(k, _)| k)
        .collect();
    remove_keys(
        records,
        &drop,
        |r| (r.noun.clone(), r.aspect.clone()),
        RULE_POLARITY_IMAGES,
        |(n, a)| format!("{n}/{a}"),
        log,
    )
}

fn rule_noun(
    records: Vec<ImageRecord>,
    mode: NounRuleMode,
    th: &Thresholds,
    log: &mut Vec<RemovalEntry>,
) -> Vec<ImageRecord> {
    let mut per_noun: BTreeMap<&str, (HashSet<&str>, HashSet<&str>)> = BTreeMap::new();
    for r in &records {
        let e = per_noun.entry(&r.noun).or_default();
        e.0.insert(&r.id);
        e.1.insert(&r.aspect);
    }
    let drop: HashSet<String> = per_noun
        .into_iter()
        .filter(|(_, (ids, aspects))| {
            let small = ids.len() < th.min_noun_images;
            let narrow = aspects.len() < th.min_noun_aspects;
            match mode {
                NounRuleMode::And => small && narrow,
                NounRuleMode::Or => small || narrow,
            }
        })
        .map(|(n, _)| n.to_string())
        .collect();
    remove_keys(
        records,
        &drop,
        |r| r.noun.clone(),
        RULE_NOUN,
        String::clone,
        log,
    )
}

fn rule_aspect(
    records: Vec<ImageRecord>,
    th: &Thresholds,
    log: &mut Vec<RemovalEntry>,
) -> Vec<ImageRecord> {
    let mut per_aspect: BTreeMap<&str, [Vec<&str>; 2]> = BTreeMap::new();
    for r in &records {
        let side = usize::from(r.polarity == Polarity::Right);
        per_aspect.entry(&r.aspect).or_default()[side].push(&r.id);
    }
    let drop: HashSet<String> = per_aspect
        .into_iter()
        .filter(|(_, sides)| {
            sides
                .iter()
                .any(|ids| distinct(ids.iter().copied()) < th.min_aspect_polarity_images)
        })
        .map(|(a, _)| a.to_string())
        .collect();
    remove_keys(
        records,
        &drop,
        |r| r.aspect.clone(),
        RULE_ASPECT,
        String::clone,
        log,
    )
}
