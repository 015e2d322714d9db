//! Hierarchical evaluation metrics.
//!
//! * Aspect F1: for each noun, the mean one-vs-rest F1 over the aspects that
//!   occur in that noun's gold rows; then the mean over nouns.
//! * Polarity accuracy: for each aspect, the mean accuracy over the nouns that
//!   occur with it; then the mean over aspects. Row counts do not weight
//!   either average.
//!
//! Noun and aspect sets are taken from the gold rows being scored, so any
//! subset of a dataset can be evaluated.

mod baseline;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::ImageRecord;
use crate::error::{Error, Result};
use crate::lexicon::Polarity;

pub use baseline::{baseline_aspect, baseline_polarity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: String,
    pub noun: String,
    pub aspect_gold: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect_pred: Option<String>,
    pub polarity_gold: Polarity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity_pred: Option<Polarity>,
}

impl PredictionRow {
    /// Gold fields from a record, no predictions yet.
    pub fn gold(record: &ImageRecord) -> Self {
        PredictionRow {
            id: record.id.clone(),
            noun: record.noun.clone(),
            aspect_gold: record.aspect.clone(),
            aspect_pred: None,
            polarity_gold: record.polarity,
            polarity_pred: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub rows: Vec<PredictionRow>,
}

impl PredictionSet {
    pub fn new(rows: Vec<PredictionRow>) -> Self {
        PredictionSet { rows }
    }
}

/// Groups item indices by key, keeping keys in order of first appearance.
fn group_by<'a, T>(items: &'a [T], key: impl Fn(&'a T) -> &'a str) -> Vec<(&'a str, Vec<usize>)> {
    let mut order: Vec<(&str, Vec<usize>)> = Vec::new();
    let mut slot: HashMap<&str, usize> = HashMap::new();
    for (i, item) in items.iter().enumerate() {
        let k = key(item);
        let pos = *slot.entry(k).or_insert_with(|| {
            order.push((k, Vec::new()));
            order.len() - 1
        });
        order[pos].1.push(i);
    }
    order
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// One (aspect, noun) entry of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub aspect: String,
    pub noun: String,
    pub value: f64,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub name: String,
    pub value: f64,
    pub rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    AspectF1,
    PolarityAccuracy,
}

/// Overall score with per-noun, per-aspect and per-(aspect, noun) breakdowns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: MetricKind,
    pub overall: f64,
    pub rows: usize,
    pub per_noun: Vec<GroupScore>,
    pub per_aspect: Vec<GroupScore>,
    pub per_cell: Vec<CellScore>,
}

/// One-vs-rest F1 of `aspect` over the given rows; 0 when undefined.
fn one_vs_rest_f1(rows: &[&PredictionRow], aspect: &str) -> f64 {
    let mut tp = 0usize;
    let mut predicted = 0usize;
    let mut actual = 0usize;
    for r in rows {
        let pred_hit = r.aspect_pred.as_deref() == Some(aspect);
        let gold_hit = r.aspect_gold == aspect;
        predicted += usize::from(pred_hit);
        actual += usize::from(gold_hit);
        tp += usize::from(pred_hit && gold_hit);
    }
    let precision = if predicted == 0 {
        0.0
    } else {
        tp as f64 / predicted as f64
    };
    let recall = if actual == 0 {
        0.0
    } else {
        tp as f64 / actual as f64
    };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn aspect_f1_report(p: &PredictionSet) -> Result<MetricReport> {
    if p.rows.is_empty() {
        return Err(Error::EmptyPredictionSet);
    }
    if let Some(r) = p.rows.iter().find(|r| r.aspect_pred.is_none()) {
        return Err(Error::MissingPrediction(r.id.clone()));
    }
    let mut per_noun = Vec::new();
    let mut per_cell = Vec::new();
    for (noun, idx) in group_by(&p.rows, |r| r.noun.as_str()) {
        let rows: Vec<&PredictionRow> = idx.iter().map(|&i| &p.rows[i]).collect();
        let mut scores = Vec::new();
        for (aspect, gold_idx) in group_by(&rows, |r| r.aspect_gold.as_str()) {
            let f1 = one_vs_rest_f1(&rows, aspect);
            scores.push(f1);
            per_cell.push(CellScore {
                aspect: aspect.to_string(),
                noun: noun.to_string(),
                value: f1,
                rows: gold_idx.len(),
            });
        }
        per_noun.push(GroupScore {
            name: noun.to_string(),
            value: mean(scores),
            rows: rows.len(),
        });
    }
    let per_aspect = group_by(&per_cell, |c| c.aspect.as_str())
        .into_iter()
        .map(|(aspect, idx)| GroupScore {
            name: aspect.to_string(),
            value: mean(idx.iter().map(|&i| per_cell[i].value)),
            rows: idx.iter().map(|&i| per_cell[i].rows).sum(),
        })
        .collect();
    Ok(MetricReport {
        metric: MetricKind::AspectF1,
        overall: mean(per_noun.iter().map(|g| g.value)),
        rows: p.rows.len(),
        per_noun,
        per_aspect,
        per_cell,
    })
}

pub fn aspect_f1(p: &PredictionSet) -> Result<f64> {
    aspect_f1_report(p).map(|r| r.overall)
}

pub fn polarity_accuracy_report(p: &PredictionSet) -> Result<MetricReport> {
    if p.rows.is_empty() {
        return Err(Error::EmptyPredictionSet);
    }
    if let Some(r) = p.rows.iter().find(|r| r.polarity_pred.is_none()) {
        return Err(Error::MissingPrediction(r.id.clone()));
    }
    let mut per_aspect = Vec::new();
    let mut per_cell = Vec::new();
    for (aspect, idx) in group_by(&p.rows, |r| r.aspect_gold.as_str()) {
        let rows: Vec<&PredictionRow> = idx.iter().map(|&i| &p.rows[i]).collect();
        let mut accs = Vec::new();
        for (noun, cell) in group_by(&rows, |r| r.noun.as_str()) {
            let correct = cell
                .iter()
                .filter(|&&i| rows[i].polarity_pred == Some(rows[i].polarity_gold))
                .count();
            let acc = correct as f64 / cell.len() as f64;
            accs.push(acc);
            per_cell.push(CellScore {
                aspect: aspect.to_string(),
                noun: noun.to_string(),
                value: acc,
                rows: cell.len(),
            });
        }
        per_aspect.push(GroupScore {
            name: aspect.to_string(),
            value: mean(accs),
            rows: rows.len(),
        });
    }
    let per_noun = group_by(&per_cell, |c| c.noun.as_str())
        .into_iter()
        .map(|(noun, idx)| GroupScore {
            name: noun.to_string(),
            value: mean(idx.iter().map(|&i| per_cell[i].value)),
            rows: idx.iter().map(|&i| per_cell[i].rows).sum(),
        })
        .collect();
    Ok(MetricReport {
        metric: MetricKind::PolarityAccuracy,
        overall: mean(per_aspect.iter().map(|g| g.value)),
        rows: p.rows.len(),
        per_noun,
        per_aspect,
        per_cell,
    })
}

pub fn polarity_accuracy(p: &PredictionSet) -> Result<f64> {
    polarity_accuracy_report(p).map(|r| r.overall)
}

impl MetricReport {
    /// Plain-text table: overall score followed by the per-cell breakdown.
    pub fn to_table(&self) -> String {
        let name = match self.metric {
            MetricKind::AspectF1 => "aspect F1",
            MetricKind::PolarityAccuracy => "polarity accuracy",
        };
        let mut s = format!("{name}: {:.4} ({} rows)\n", self.overall, self.rows);
        s.push_str(&format!(
            "{:<16} {:<16} {:>8} {:>7}\n",
            "aspect", "noun", "score", "rows"
        ));
        for c in &self.per_cell {
            s.push_str(&format!(
                "{:<16} {:<16} {:>8.4} {:>7}\n",
                c.aspect, c.noun, c.value, c.rows
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arow(noun: &str, gold: &str, pred: &str) -> PredictionRow {
        PredictionRow {
            id: format!("{noun}-{gold}-{pred}"),
            noun: noun.into(),
            aspect_gold: gold.into(),
            aspect_pred: Some(pred.into()),
            polarity_gold: Polarity::Left,
            polarity_pred: None,
        }
    }

    fn prow(noun: &str, aspect: &str, correct: bool) -> PredictionRow {
        PredictionRow {
            id: String::new(),
            noun: noun.into(),
            aspect_gold: aspect.into(),
            aspect_pred: None,
            polarity_gold: Polarity::Right,
            polarity_pred: Some(if correct {
                Polarity::Right
            } else {
                Polarity::Left
            }),
        }
    }

    #[test]
    fn perfect_predictions_score_one() {
        let set = PredictionSet::new(vec![
            arow("dog", "age", "age"),
            arow("dog", "size", "size"),
            arow("cat", "happiness", "happiness"),
        ]);
        assert_eq!(aspect_f1(&set).unwrap(), 1.0);
        let set = PredictionSet::new(vec![prow("dog", "age", true), prow("cat", "size", true)]);
        assert_eq!(polarity_accuracy(&set).unwrap(), 1.0);
    }

    #[test]
    fn constant_prediction_on_two_aspects() {
        // F1(age) = 2·(1/2)·1 / (1/2 + 1) = 2/3, F1(size) = 0
        let set = PredictionSet::new(vec![
            arow("dog", "age", "age"),
            arow("dog", "age", "age"),
            arow("dog", "size", "age"),
            arow("dog", "size", "age"),
        ]);
        let r = aspect_f1_report(&set).unwrap();
        assert_eq!(r.per_cell[0].value, 2.0 / 3.0);
        assert_eq!(r.per_cell[1].value, 0.0);
        assert_eq!(r.overall, 1.0 / 3.0);
    }

    #[test]
    fn nested_means_ignore_row_counts() {
        let mut rows = Vec::new();
        rows.extend((0..10).map(|_| prow("dog", "age", true)));
        rows.extend((0..1000).map(|i| prow("cat", "age", i % 2 == 0)));
        rows.extend((0..10).map(|i| prow("tree", "size", i < 8)));
        let acc = polarity_accuracy(&PredictionSet::new(rows)).unwrap();
        assert_eq!(acc, 0.775);
    }

    #[test]
    fn empty_and_missing_predictions_are_errors() {
        let empty = PredictionSet::default();
        assert!(matches!(aspect_f1(&empty), Err(Error::EmptyPredictionSet)));
        assert!(matches!(
            polarity_accuracy(&empty),
            Err(Error::EmptyPredictionSet)
        ));
        let set = PredictionSet::new(vec![arow("dog", "age", "age")]);
        assert!(matches!(
            polarity_accuracy(&set),
            Err(Error::MissingPrediction(_))
        ));
    }

    #[test]
    fn out_of_set_predictions_count_as_errors() {
        // 'rareness' never occurs as gold for dog but is still a wrong prediction.
        let set = PredictionSet::new(vec![
            arow("dog", "age", "rareness"),
            arow("dog", "age", "age"),
        ]);
        let f1 = aspect_f1(&set).unwrap();
        assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn report_serializes_breakdowns() {
        let set = PredictionSet::new(vec![prow("dog", "age", true), prow("cat", "age", false)]);
        let r = polarity_accuracy_report(&set).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["metric"], "polarity_accuracy");
        assert_eq!(json["overall"], 0.5);
        assert_eq!(json["per_cell"].as_array().unwrap().len(), 2);
        assert_eq!(json["per_noun"][0]["name"], "dog");
        assert!(r.to_table().contains("polarity accuracy: 0.5000"));
    }
}
