use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{LinearParams, ModelParams, Network, PerNounLinear};
use super::{evaluate, Family, Label, ModelSpec, Task, TrainedModel};
use crate::condition::{ConcatMlpParams, TensorCondParams};
use crate::dataset::{Dataset, ImageRecord, Split};
use crate::error::{Error, Result};
use crate::lexicon::Polarity;
use crate::ndmath::{logistic_loss_pm1, optimizer_step, softmax_xent, OptState};
use crate::seed::{cell_rng, derive_seed, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean training loss; absent for the untrained starting point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_loss: Option<f64>,
    pub dev_metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_dev_metric: f64,
}

#[derive(Debug, Clone, Copy)]
enum Target {
    Class(usize),
    Unit(usize, Polarity),
}

struct Example<'a> {
    x: &'a [f64],
    noun: usize,
    target: Target,
}

fn loss_and_grad(scores: &[f64], target: Target) -> Result<(f64, Vec<f64>)> {
    match target {
        Target::Class(k) => softmax_xent(scores, k),
        Target::Unit(k, y) => {
            let (l, dz) = logistic_loss_pm1(scores[k], y);
            let mut d = vec![0.0; scores.len()];
            d[k] = dz;
            Ok((l, d))
        }
    }
}

impl From<LinearParams> for ModelParams {
    fn from(p: LinearParams) -> Self {
        ModelParams::Linear(p)
    }
}

impl From<PerNounLinear> for ModelParams {
    fn from(p: PerNounLinear) -> Self {
        ModelParams::PerNoun(p)
    }
}

impl From<ConcatMlpParams> for ModelParams {
    fn from(p: ConcatMlpParams) -> Self {
        ModelParams::ConcatMlp(p)
    }
}

impl From<TensorCondParams> for ModelParams {
    fn from(p: TensorCondParams) -> Self {
        ModelParams::TensorCond(p)
    }
}

/// Trains `spec` on the train split of `dataset`, selecting the epoch (the
/// untrained start counts as epoch 0) with the best dev metric. Ties keep the
/// earlier epoch. Dev rows the model cannot score are left out of the dev
/// metric.
pub fn train(dataset: &Dataset, spec: &ModelSpec) -> Result<(TrainedModel, TrainLog)> {
    spec.validate()?;
    let lexicon = dataset.lexicon();
    let train_rows: Vec<&ImageRecord> = dataset.in_split(Split::Train).collect();
    let dev_rows: Vec<ImageRecord> = dataset.in_split(Split::Dev).cloned().collect();
    if train_rows.is_empty() {
        return Err(Error::InvalidConfig("dataset has no train rows".into()));
    }
    if dev_rows.is_empty() {
        return Err(Error::InvalidConfig("dataset has no dev rows".into()));
    }
    let nouns = dataset.noun_vocab().to_vec();
    let aspects = lexicon.aspect_names();
    let mut coverage: Vec<(String, String)> = Vec::new();
    for r in &train_rows {
        if !coverage.iter().any(|(n, a)| n == &r.noun && a == &r.aspect) {
            coverage.push((r.noun.clone(), r.aspect.clone()));
        }
    }
    let labels = (spec.family == Family::LrAdjNoun).then(|| {
        let mut labels: Vec<Label> = Vec::new();
        for r in &train_rows {
            let l = Label::AdjNoun {
                adjective: r.adjective.clone(),
                noun: r.noun.clone(),
            };
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
        labels
    });

    let mut examples = Vec::with_capacity(train_rows.len());
    for r in &train_rows {
        let x = dataset
            .embedding(&r.id)
            .ok_or_else(|| Error::MissingEmbedding(r.id.clone()))?;
        let noun = nouns
            .iter()
            .position(|n| n == &r.noun)
            .expect("vocab covers records");
        let aspect = lexicon.aspect_index(&r.aspect)?;
        let target = match (&labels, spec.task) {
            (Some(ls), _) => {
                let want = Label::AdjNoun {
                    adjective: r.adjective.clone(),
                    noun: r.noun.clone(),
                };
                Target::Class(ls.iter().position(|l| *l == want).expect("label collected"))
            }
            (None, Task::Aspect) => Target::Class(aspect),
            (None, Task::Polarity) => Target::Unit(aspect, r.polarity),
        };
        examples.push(Example { x, noun, target });
    }

    let d = dataset.dim();
    let (a, n) = (aspects.len(), nouns.len());
    let mut init_rng = rng(derive_seed(spec.seed, &["init"]));
    let template = TrainedModel {
        spec: spec.clone(),
        lexicon: lexicon.clone(),
        nouns,
        aspects,
        labels,
        dim: d,
        coverage,
        params: ModelParams::Linear(LinearParams {
            w: crate::ndmath::Matrix::zeros(0, 0),
            b: Vec::new(),
        }),
    };
    let ctx = Ctx {
        spec,
        dataset,
        dev_rows: &dev_rows,
        examples: &examples,
        template: &template,
    };
    let (params, log) = match spec.family {
        Family::LrNounAgnostic => ctx.fit(LinearParams::init(a, d, &mut init_rng))?,
        Family::LrAdjNoun => {
            let k = template.labels.as_ref().map_or(0, Vec::len);
            ctx.fit(LinearParams::init(k, d, &mut init_rng))?
        }
        Family::LrNounSpecific => {
            let per = (0..n)
                .map(|_| LinearParams::init(a, d, &mut init_rng))
                .collect();
            ctx.fit(PerNounLinear(per))?
        }
        Family::ConcatMlp => ctx.fit(ConcatMlpParams::init(a, d, n, spec.hidden, &mut init_rng))?,
        Family::TensorCond => ctx.fit(TensorCondParams::init(a, d, n, &mut init_rng))?,
    };
    Ok((TrainedModel { params, ..template }, log))
}

struct Ctx<'a> {
    spec: &'a ModelSpec,
    dataset: &'a Dataset,
    dev_rows: &'a [ImageRecord],
    examples: &'a [Example<'a>],
    template: &'a TrainedModel,
}

impl Ctx<'_> {
    fn dev_metric(&self, params: ModelParams) -> Result<f64> {
        let model = TrainedModel {
            params,
            ..self.template.clone()
        };
        let ev = evaluate(&model, self.dataset, self.dev_rows)?;
        ev.report
            .map(|r| r.overall)
            .ok_or_else(|| Error::InvalidConfig("model cannot score any dev row".into()))
    }

    fn fit<N: Network + Into<ModelParams>>(&self, mut net: N) -> Result<(ModelParams, TrainLog)> {
        let first = self.dev_metric(net.clone().into())?;
        let mut log = TrainLog {
            epochs: vec![EpochLog {
                epoch: 0,
                train_loss: None,
                dev_metric: first,
            }],
            best_epoch: 0,
            best_dev_metric: first,
        };
        let mut best = net.clone();
        let mut state = OptState::new(self.spec.opt_config());
        let mut grads = net.zeros_like();
        let mut order: Vec<usize> = (0..self.examples.len()).collect();
        for epoch in 1..=self.spec.epochs {
            let mut shuffle_rng = cell_rng(self.spec.seed, &["epoch", &epoch.to_string()]);
            order.sort_unstable();
            order.shuffle(&mut shuffle_rng);
            let mut total = 0.0;
            for batch in order.chunks(self.spec.batch_size) {
                grads.fill(0.0);
                let scale = 1.0 / batch.len() as f64;
                for &i in batch {
                    let ex = &self.examples[i];
                    let scores = net.scores(ex.x, ex.noun)?;
                    let (loss, mut d) = loss_and_grad(&scores, ex.target)?;
                    if !loss.is_finite() {
                        return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
                    }
                    total += loss;
                    d.iter_mut().for_each(|v| *v *= scale);
                    net.accumulate_grad(ex.x, ex.noun, &d, &mut grads)?;
                }
                optimizer_step(&mut net, &grads, &mut state)?;
            }
            if !net.all_finite() {
                return Err(Error::NonFinite(format!("parameters after epoch {epoch}")));
            }
            let dev = self.dev_metric(net.clone().into())?;
            log.epochs.push(EpochLog {
                epoch,
                train_loss: Some(total / self.examples.len() as f64),
                dev_metric: dev,
            });
            if dev > log.best_dev_metric {
                log.best_dev_metric = dev;
                log.best_epoch = epoch;
                best = net.clone();
            }
        }
        Ok((best.into(), log))
    }
}
