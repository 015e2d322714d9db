//! Standard and 0-shot train/dev/test splits.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{ImageRecord, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Standard,
    Zeroshot,
}

impl std::str::FromStr for SplitKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "standard" => Ok(SplitKind::Standard),
            "zeroshot" | "0-shot" => Ok(SplitKind::Zeroshot),
            other => Err(format!("unknown split kind '{other}'")),
        }
    }
}

/// (noun, aspect) pairs withheld from training in the 0-shot protocol.
pub const DEFAULT_HOLDOUTS: [(&str, &str); 7] = [
    ("man", "evaluation"),
    ("boy", "happiness"),
    ("cat", "happiness"),
    ("dog", "age"),
    ("building", "size"),
    ("hotel", "evaluation"),
    ("city", "age"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: SplitKind,
    /// train/dev/test for standard, train/dev for zeroshot.
    pub ratios: Vec<f64>,
    #[serde(default)]
    pub holdouts: Vec<(String, String)>,
    pub seed: u64,
}

impl SplitPlan {
    /// 50 / 20 / 30 per (noun, aspect, polarity) cell.
    pub fn standard(seed: u64) -> Self {
        SplitPlan {
            kind: SplitKind::Standard,
            ratios: vec![0.5, 0.2, 0.3],
            holdouts: Vec::new(),
            seed,
        }
    }

    /// Holdout combinations go to test; everything else 70 / 30 train / dev.
    pub fn zeroshot(holdouts: Vec<(String, String)>, seed: u64) -> Self {
        SplitPlan {
            kind: SplitKind::Zeroshot,
            ratios: vec![0.7, 0.3],
            holdouts,
            seed,
        }
    }

    pub fn default_holdouts() -> Vec<(String, String)> {
        DEFAULT_HOLDOUTS
            .iter()
            .map(|(n, a)| (n.to_string(), a.to_string()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let expected = match self.kind {
            SplitKind::Standard => 3,
            SplitKind::Zeroshot => 2,
        };
        if self.ratios.len() != expected {
            return Err(Error::InvalidConfig(format!(
                "{:?} split needs {expected} ratios, got {}",
                self.kind,
                self.ratios.len()
            )));
        }
        if self.ratios.iter().any(|r| !(0.0..=1.0).contains(r))
            || (self.ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidConfig(format!(
                "ratios {:?} must be in [0, 1] and sum to 1",
                self.ratios
            )));
        }
        if (self.kind == SplitKind::Zeroshot) == self.holdouts.is_empty() {
            return Err(Error::InvalidConfig(
                "holdout combinations are required for, and only for, zeroshot splits".into(),
            ));
        }
        Ok(())
    }
}

/// Per-cell split counts, for printing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub noun: String,
    pub aspect: String,
    pub polarity: i64,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

/// Floors of `ratio · n`, with the remainder handed out one at a time in
/// train, dev, test order.
fn allocate(n: usize, ratios: &[f64]) -> Vec<usize> {
    let mut counts: Vec<usize> = ratios
        .iter()
        .map(|r| (r * n as f64 + 1e-9).floor() as usize)
        .collect();
    let mut rest = n - counts.iter().sum::<usize>().min(n);
    let len = counts.len();
    let mut k = 0;
    while rest > 0 {
        counts[k % len] += 1;
        rest -= 1;
        k += 1;
    }
    counts
}

/// Assigns a split label to every record. Each (noun, aspect, polarity) cell is
/// sorted by id, shuffled with a generator derived from the seed and the cell,
/// then cut according to the ratios, so the result does not depend on record
/// order.
pub fn make_split(
    records: &[ImageRecord],
    plan: &SplitPlan,
) -> Result<(Vec<ImageRecord>, Vec<CellCounts>)> {
    plan.validate()?;
    let holdouts: HashSet<(&str, &str)> = plan
        .holdouts
        .iter()
        .map(|(n, a)| (n.as_str(), a.as_str()))
        .collect();
    for (n, a) in &plan.holdouts {
        if !records.iter().any(|r| &r.noun == n && &r.aspect == a) {
            return Err(Error::HoldoutAbsent {
                noun: n.clone(),
                aspect: a.clone(),
            });
        }
    }
    let labels: &[Split] = match plan.kind {
        SplitKind::Standard => &[Split::Train, Split::Dev, Split::Test],
        SplitKind::Zeroshot => &[Split::Train, Split::Dev],
    };

    let mut cells: BTreeMap<(&str, &str, i64), Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        cells
            .entry((&r.noun, &r.aspect, r.polarity.as_i64()))
            .or_default()
            .push(i);
    }
    let mut out = records.to_vec();
    let mut summary = Vec::new();
    for ((noun, aspect, pol), mut idx) in cells {
        let mut cc = CellCounts {
            noun: noun.to_string(),
            aspect: aspect.to_string(),
            polarity: pol,
            train: 0,
            dev: 0,
            test: 0,
        };
        if holdouts.contains(&(noun, aspect)) {
            for &i in &idx {
                out[i].split = Split::Test;
            }
            cc.test = idx.len();
            summary.push(cc);
            continue;
        }
        idx.sort_by(|&a, &b| records[a].id.cmp(&records[b].id));
        let pol_tag = pol.to_string();
        let mut rng = crate::seed::cell_rng(plan.seed, &[noun, aspect, &pol_tag]);
        idx.shuffle(&mut rng);
        let counts = allocate(idx.len(), &plan.ratios);
        let mut it = idx.into_iter();
        for (label, &count) in labels.iter().zip(&counts) {
            for i in it.by_ref().take(count) {
                out[i].split = *label;
            }
        }
        cc.train = counts[0];
        cc.dev = counts[1];
        cc.test = counts.get(2).copied().unwrap_or(0);
        summary.push(cc);
    }
    Ok((out, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::Polarity;

    fn cell(noun: &str, aspect: &str, adj: &str, pol: Polarity, n: usize) -> Vec<ImageRecord> {
        (0..n)
            .map(|i| ImageRecord {
                id: format!("{noun}-{adj}-{i}"),
                noun: noun.into(),
                aspect: aspect.into(),
                polarity: pol,
                adjective: adj.into(),
                split: Split::Unassigned,
            })
            .collect()
    }

    fn tally(records: &[ImageRecord]) -> (usize, usize, usize) {
        let c = |s| records.iter().filter(|r| r.split == s).count();
        (c(Split::Train), c(Split::Dev), c(Split::Test))
    }

    #[test]
    fn ten_records_split_five_two_three() {
        let recs = cell("dog", "age", "young", Polarity::Left, 10);
        let (out, summary) = make_split(&recs, &SplitPlan::standard(1)).unwrap();
        assert_eq!(tally(&out), (5, 2, 3));
        assert_eq!(
            (summary[0].train, summary[0].dev, summary[0].test),
            (5, 2, 3)
        );
    }

    #[test]
    fn remainders_go_train_then_dev() {
        assert_eq!(allocate(7, &[0.5, 0.2, 0.3]), [4, 1, 2]);
        assert_eq!(allocate(9, &[0.5, 0.2, 0.3]), [5, 2, 2]);
        assert_eq!(allocate(1, &[0.5, 0.2, 0.3]), [1, 0, 0]);
        assert_eq!(allocate(3, &[0.7, 0.3]), [3, 0]);
        assert_eq!(allocate(0, &[0.7, 0.3]), [0, 0]);
    }

    #[test]
    fn holdouts_only_in_test() {
        let mut recs = cell("dog", "age", "young", Polarity::Left, 10);
        recs.extend(cell("dog", "age", "old", Polarity::Right, 10));
        recs.extend(cell("dog", "size", "big", Polarity::Right, 10));
        recs.extend(cell("cat", "age", "old", Polarity::Right, 10));
        let plan = SplitPlan::zeroshot(vec![("dog".into(), "age".into())], 3);
        let (out, _) = make_split(&recs, &plan).unwrap();
        for r in &out {
            if r.noun == "dog" && r.aspect == "age" {
                assert_eq!(r.split, Split::Test);
            } else {
                assert_ne!(r.split, Split::Test);
            }
        }
        assert_eq!(tally(&out), (14, 6, 20));
    }

    #[test]
    fn absent_holdout_and_bad_plans() {
        let recs = cell("dog", "age", "young", Polarity::Left, 4);
        let plan = SplitPlan::zeroshot(vec![("cat".into(), "age".into())], 3);
        assert!(matches!(
            make_split(&recs, &plan),
            Err(Error::HoldoutAbsent { .. })
        ));
        let mut plan = SplitPlan::standard(0);
        plan.ratios = vec![0.5, 0.5, 0.5];
        assert!(make_split(&recs, &plan).is_err());
        let mut plan = SplitPlan::standard(0);
        plan.holdouts = vec![("dog".into(), "age".into())];
        assert!(make_split(&recs, &plan).is_err());
    }

    #[test]
    fn stable_under_reordering() {
        let mut recs = cell("dog", "age", "young", Polarity::Left, 23);
        recs.extend(cell("dog", "age", "old", Polarity::Right, 17));
        let (a, _) = make_split(&recs, &SplitPlan::standard(8)).unwrap();
        let mut rev = recs.clone();
        rev.reverse();
        let (b, _) = make_split(&rev, &SplitPlan::standard(8)).unwrap();
        for r in &a {
            let other = b.iter().find(|x| x.id == r.id).unwrap();
            assert_eq!(r.split, other.split);
        }
    }
}
