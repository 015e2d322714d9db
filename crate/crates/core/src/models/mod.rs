//! Model families, training, prediction and score conversion.
//!
//! | family             | input           | scores                          |
//! |--------------------|-----------------|---------------------------------|
//! | `lr_noun_agnostic` | x               | one linear map                  |
//! | `lr_noun_specific` | x               | one linear map per noun         |
//! | `lr_adj_noun`      | x               | one score per adjective-noun    |
//! | `concat_mlp`       | x ⊕ onehot(n)   | tanh MLP                        |
//! | `tensor_cond`      | x, onehot(n)    | tensor conditioning layer       |
//!
//! The aspect task trains softmax cross-entropy over aspects (over
//! adjective-noun classes for `lr_adj_noun`). The polarity task trains a
//! logistic loss on the unit of the record's aspect, and predicts its sign.

mod convert;
mod io;
mod network;
mod spec;
mod train;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ImageRecord};
use crate::error::{Error, Result};
use crate::lexicon::{AspectLexicon, Polarity};
use crate::metrics::{
    aspect_f1_report, polarity_accuracy_report, MetricReport, PredictionRow, PredictionSet,
};
use crate::ndmath::argmax;

pub use convert::{convert_scores, Conversion, ConvertMode, Label, ScoreVector};
pub use io::{load_model, save_model, FORMAT_VERSION};
pub use network::{LinearParams, ModelParams, Network, PerNounLinear};
pub use spec::{Family, ModelSpec, Task, DEFAULT_BATCH, DEFAULT_EPOCHS, DEFAULT_HIDDEN};
pub use train::{train, EpochLog, TrainLog};

/// A trained model with everything needed to score new embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub lexicon: AspectLexicon,
    pub nouns: Vec<String>,
    pub aspects: Vec<String>,
    /// Output classes of `lr_adj_noun`.
    pub labels: Option<Vec<Label>>,
    pub dim: usize,
    /// (noun, aspect) pairs present in the training rows.
    pub coverage: Vec<(String, String)>,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectPrediction {
    pub aspect: String,
    /// One score per aspect, in lexicon order.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarityPrediction {
    pub polarity: Polarity,
    pub score: f64,
}

impl TrainedModel {
    pub fn noun_index(&self, noun: &str) -> Result<usize> {
        self.nouns
            .iter()
            .position(|n| n == noun)
            .ok_or_else(|| Error::UnknownNoun(noun.to_string()))
    }

    /// Fails for combinations a noun-specific model never saw in training.
    pub fn check_applicable(&self, noun: &str, aspect: Option<&str>) -> Result<()> {
        if self.spec.family != Family::LrNounSpecific {
            return Ok(());
        }
        let covered = match aspect {
            None => self.coverage.iter().any(|(n, _)| n == noun),
            Some(a) => self.coverage.iter().any(|(n, x)| n == noun && x == a),
        };
        if covered {
            Ok(())
        } else {
            Err(Error::UntrainableCombination {
                noun: noun.to_string(),
                aspect: aspect.map(str::to_string),
            })
        }
    }

    fn check_task(&self, task: Task) -> Result<()> {
        if self.spec.task == task {
            Ok(())
        } else {
            Err(Error::TaskMismatch {
                expected: self.spec.task.as_str(),
                found: task.as_str(),
            })
        }
    }

    /// Output-layer values: logits, MLP outputs or tanh of the conditioned
    /// pre-activation.
    fn outputs(&self, x: &[f64], noun: &str) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "embedding".into(),
                expected: self.dim,
                found: x.len(),
            });
        }
        match &self.params {
            ModelParams::Linear(p) => p.forward(x),
            ModelParams::PerNoun(p) => p.scores(x, self.noun_index(noun)?),
            ModelParams::ConcatMlp(p) => p.scores(x, self.noun_index(noun)?),
            ModelParams::TensorCond(p) => {
                let pre = p.scores(x, self.noun_index(noun)?)?;
                Ok(pre.into_iter().map(f64::tanh).collect())
            }
        }
    }

    fn label_scores(&self, outputs: Vec<f64>) -> Result<ScoreVector> {
        let labels = self
            .labels
            .clone()
            .ok_or_else(|| Error::ModelFormat("adjective-noun model without labels".into()))?;
        ScoreVector::new(outputs, labels)
    }

    pub fn predict_aspect(&self, x: &[f64], noun: &str) -> Result<AspectPrediction> {
        self.check_task(Task::Aspect)?;
        self.check_applicable(noun, None)?;
        let out = self.outputs(x, noun)?;
        if self.spec.family == Family::LrAdjNoun {
            let sv = self.label_scores(out)?;
            let c = convert_scores(&sv, &self.lexicon, ConvertMode::Aspect, Some(noun))?;
            let mut scores = vec![f64::NEG_INFINITY; self.aspects.len()];
            for (label, &s) in sv.labels().iter().zip(sv.scores()) {
                if label.noun().is_some_and(|n| n != noun) {
                    continue;
                }
                let (a, _) = label.resolve(&self.lexicon)?;
                let k = self.lexicon.aspect_index(a)?;
                scores[k] = scores[k].max(s);
            }
            return Ok(AspectPrediction {
                aspect: c.aspect,
                scores,
            });
        }
        let k = argmax(&out).ok_or_else(|| Error::shape("predict_aspect", "no outputs"))?;
        Ok(AspectPrediction {
            aspect: self.aspects[k].clone(),
            scores: out,
        })
    }

    pub fn predict_polarity(
        &self,
        x: &[f64],
        noun: &str,
        aspect: &str,
    ) -> Result<PolarityPrediction> {
        self.check_task(Task::Polarity)?;
        let k = self.lexicon.aspect_index(aspect)?;
        self.check_applicable(noun, Some(aspect))?;
        let out = self.outputs(x, noun)?;
        if self.spec.family == Family::LrAdjNoun {
            let sv = self.label_scores(out)?;
            let c = convert_scores(
                &sv,
                &self.lexicon,
                ConvertMode::Polarity(aspect),
                Some(noun),
            )?;
            return Ok(PolarityPrediction {
                polarity: c.polarity,
                score: c.score,
            });
        }
        let score = out[k];
        Ok(PolarityPrediction {
            polarity: Polarity::from_score(score),
            score,
        })
    }
}

pub fn predict_aspect(model: &TrainedModel, x: &[f64], noun: &str) -> Result<AspectPrediction> {
    model.predict_aspect(x, noun)
}

pub fn predict_polarity(
    model: &TrainedModel,
    x: &[f64],
    noun: &str,
    aspect: &str,
) -> Result<PolarityPrediction> {
    model.predict_polarity(x, noun, aspect)
}

/// Predictions and metric for a set of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub predictions: PredictionSet,
    /// Metric over the rows the model can score; `None` when there are none.
    pub report: Option<MetricReport>,
    /// (noun, aspect) combinations whose rows the model cannot score.
    pub not_applicable: Vec<(String, String)>,
    pub skipped_rows: usize,
}

impl Evaluation {
    /// True when every row was scored.
    pub fn fully_applicable(&self) -> bool {
        self.skipped_rows == 0 && self.report.is_some()
    }
}

/// Scores `records` (drawn from `dataset`) with the model's own task metric.
pub fn evaluate(
    model: &TrainedModel,
    dataset: &Dataset,
    records: &[ImageRecord],
) -> Result<Evaluation> {
    let mut rows = Vec::with_capacity(records.len());
    let mut not_applicable: Vec<(String, String)> = Vec::new();
    let mut seen = HashSet::new();
    let mut skipped = 0;
    for r in records {
        let x = dataset
            .embedding(&r.id)
            .ok_or_else(|| Error::MissingEmbedding(r.id.clone()))?;
        let mut row = PredictionRow::gold(r);
        let outcome = match model.spec.task {
            Task::Aspect => model
                .predict_aspect(x, &r.noun)
                .map(|p| row.aspect_pred = Some(p.aspect)),
            Task::Polarity => model
                .predict_polarity(x, &r.noun, &r.aspect)
                .map(|p| row.polarity_pred = Some(p.polarity)),
        };
        match outcome {
            Ok(()) => rows.push(row),
            Err(Error::UntrainableCombination { .. } | Error::NoApplicableLabel(_)) => {
                skipped += 1;
                if seen.insert((r.noun.as_str(), r.aspect.as_str())) {
                    not_applicable.push((r.noun.clone(), r.aspect.clone()));
                }
            }
            Err(e) => return Err(e),
        }
    }
    let predictions = PredictionSet::new(rows);
    let report = if predictions.rows.is_empty() {
        None
    } else {
        Some(match model.spec.task {
            Task::Aspect => aspect_f1_report(&predictions)?,
            Task::Polarity => polarity_accuracy_report(&predictions)?,
        })
    };
    Ok(Evaluation {
        predictions,
        report,
        not_applicable,
        skipped_rows: skipped,
    })
}
