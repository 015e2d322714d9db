//! Image-blind statistical baselines.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::{
    aspect_f1_report, polarity_accuracy_report, MetricReport, PredictionRow, PredictionSet,
};
use crate::dataset::ImageRecord;
use crate::error::{Error, Result};
use crate::lexicon::Polarity;

/// Samples each evaluation row's aspect from the training distribution
/// `P(aspect | noun)` and scores the result with aspect F1.
pub fn baseline_aspect(
    train: &[ImageRecord],
    eval: &[ImageRecord],
    seed: u64,
) -> Result<(PredictionSet, MetricReport)> {
    // noun -> (aspects in first-seen order, counts)
    let mut conditional: HashMap<&str, (Vec<&str>, Vec<u64>)> = HashMap::new();
    for r in train {
        let (aspects, counts) = conditional.entry(&r.noun).or_default();
        match aspects.iter().position(|a| *a == r.aspect) {
            Some(i) => counts[i] += 1,
            None => {
                aspects.push(&r.aspect);
                counts.push(1);
            }
        }
    }
    let mut samplers = HashMap::new();
    for (noun, (aspects, counts)) in &conditional {
        let dist = WeightedIndex::new(counts).expect("counts are positive");
        samplers.insert(*noun, (aspects, dist));
    }
    let mut rng = crate::seed::rng(seed);
    let mut rows = Vec::with_capacity(eval.len());
    for r in eval {
        let (aspects, dist) = samplers
            .get(r.noun.as_str())
            .ok_or_else(|| Error::UnknownNoun(r.noun.clone()))?;
        let mut row = PredictionRow::gold(r);
        row.aspect_pred = Some(aspects[dist.sample(&mut rng)].to_string());
        rows.push(row);
    }
    let set = PredictionSet::new(rows);
    let report = aspect_f1_report(&set)?;
    Ok((set, report))
}

/// Predicts a uniformly random polarity per row.
pub fn baseline_polarity(eval: &[ImageRecord], seed: u64) -> Result<(PredictionSet, MetricReport)> {
    let mut rng = crate::seed::rng(seed);
    let rows = eval
        .iter()
        .map(|r| {
            let mut row = PredictionRow::gold(r);
            row.polarity_pred = Some(if rng.random_bool(0.5) {
                Polarity::Right
            } else {
                Polarity::Left
            });
            row
        })
        .collect();
    let set = PredictionSet::new(rows);
    let report = polarity_accuracy_report(&set)?;
    Ok((set, report))
}
