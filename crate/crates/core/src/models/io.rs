use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{LinearParams, ModelParams, PerNounLinear};
use super::{Family, Label, ModelSpec, TrainedModel};
use crate::condition::{ConcatMlpParams, TensorCondParams};
use crate::error::{Error, Result};
use crate::lexicon::{AspectEntry, AspectLexicon};
use crate::ndmath::{Matrix, Tensor3};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct NamedArray {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    spec: ModelSpec,
    vocab_nouns: Vec<String>,
    vocab_aspects: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vocab_labels: Option<Vec<Label>>,
    dim: usize,
    coverage: Vec<(String, String)>,
    lexicon: Vec<AspectEntry>,
    params: Vec<NamedArray>,
}

fn array(name: &str, shape: &[usize], values: &[f64]) -> NamedArray {
    NamedArray {
        name: name.to_string(),
        shape: shape.to_vec(),
        values: values.to_vec(),
    }
}

fn to_arrays(params: &ModelParams) -> Vec<NamedArray> {
    match params {
        ModelParams::Linear(p) => vec![
            array("w", &[p.w.rows(), p.w.cols()], p.w.as_slice()),
            array("b", &[p.b.len()], &p.b),
        ],
        ModelParams::PerNoun(PerNounLinear(ps)) => {
            let (k, d) = ps.first().map_or((0, 0), |p| p.w.shape());
            let w: Vec<f64> = ps
                .iter()
                .flat_map(|p| p.w.as_slice().iter().copied())
                .collect();
            let b: Vec<f64> = ps.iter().flat_map(|p| p.b.iter().copied()).collect();
            vec![
                array("w", &[ps.len(), k, d], &w),
                array("b", &[ps.len(), k], &b),
            ]
        }
        ModelParams::ConcatMlp(p) => vec![
            array("wh", &[p.wh.rows(), p.wh.cols()], p.wh.as_slice()),
            array("bh", &[p.bh.len()], &p.bh),
            array("wo", &[p.wo.rows(), p.wo.cols()], p.wo.as_slice()),
            array("bo", &[p.bo.len()], &p.bo),
        ],
        ModelParams::TensorCond(p) => vec![
            array("w0", &[p.w0.rows(), p.w0.cols()], p.w0.as_slice()),
            array("b0", &[p.b0.len()], &p.b0),
            array("w", &p.w.shape(), p.w.as_slice()),
            array("b", &[p.b.rows(), p.b.cols()], p.b.as_slice()),
        ],
    }
}

/// Writes the model as JSON. Floats use shortest round-trip formatting, so a
/// save / load / save cycle is byte-identical.
pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        spec: model.spec.clone(),
        vocab_nouns: model.nouns.clone(),
        vocab_aspects: model.aspects.clone(),
        vocab_labels: model.labels.clone(),
        dim: model.dim,
        coverage: model.coverage.clone(),
        lexicon: model.lexicon.aspects().to_vec(),
        params: to_arrays(&model.params),
    };
    let mut text = serde_json::to_string(&file).map_err(|e| Error::ModelFormat(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

struct Arrays(Vec<NamedArray>);

impl Arrays {
    fn take(&mut self, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
        let pos = self
            .0
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::ModelFormat(format!("missing parameter '{name}'")))?;
        let a = self.0.remove(pos);
        if a.shape != shape {
            return Err(Error::ModelFormat(format!(
                "parameter '{name}' has shape {:?}, expected {shape:?}",
                a.shape
            )));
        }
        if a.values.len() != shape.iter().product::<usize>() {
            return Err(Error::ModelFormat(format!(
                "parameter '{name}' has {} values for shape {shape:?}",
                a.values.len()
            )));
        }
        if a.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelFormat(format!(
                "parameter '{name}' is not finite"
            )));
        }
        Ok(a.values)
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<Matrix> {
        let v = self.take(name, &[rows, cols])?;
        Matrix::from_vec(rows, cols, v)
    }

    fn finish(self) -> Result<()> {
        match self.0.first() {
            Some(a) => Err(Error::ModelFormat(format!(
                "unexpected parameter '{}'",
                a.name
            ))),
            None => Ok(()),
        }
    }
}

fn first_shape(arrays: &Arrays, name: &str, axis: usize) -> Result<usize> {
    arrays
        .0
        .iter()
        .find(|a| a.name == name)
        .and_then(|a| a.shape.get(axis).copied())
        .ok_or_else(|| Error::ModelFormat(format!("cannot read the shape of '{name}'")))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), &e))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "format version {} is not supported (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    let lexicon = AspectLexicon::new(file.lexicon)?;
    if lexicon.aspect_names() != file.vocab_aspects {
        return Err(Error::ModelFormat(
            "aspect vocabulary disagrees with the lexicon".into(),
        ));
    }
    file.spec.validate()?;
    let (d, n, a) = (file.dim, file.vocab_nouns.len(), file.vocab_aspects.len());
    let mut arrays = Arrays(file.params);
    let params = match file.spec.family {
        Family::LrNounAgnostic | Family::LrAdjNoun => {
            let k = match (&file.vocab_labels, file.spec.family) {
                (Some(ls), Family::LrAdjNoun) => ls.len(),
                (None, Family::LrNounAgnostic) => a,
                _ => {
                    return Err(Error::ModelFormat(
                        "label vocabulary does not fit the family".into(),
                    ))
                }
            };
            ModelParams::Linear(LinearParams {
                w: arrays.matrix("w", k, d)?,
                b: arrays.take("b", &[k])?,
            })
        }
        Family::LrNounSpecific => {
            let w = arrays.take("w", &[n, a, d])?;
            let b = arrays.take("b", &[n, a])?;
            let per = (0..n)
                .map(|i| {
                    Ok(LinearParams {
                        w: Matrix::from_vec(a, d, w[i * a * d..(i + 1) * a * d].to_vec())?,
                        b: b[i * a..(i + 1) * a].to_vec(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ModelParams::PerNoun(PerNounLinear(per))
        }
        Family::ConcatMlp => {
            let h = first_shape(&arrays, "wh", 0)?;
            if h != file.spec.hidden {
                return Err(Error::ModelFormat(format!(
                    "hidden width {h} disagrees with the model spec hidden ({})",
                    file.spec.hidden
                )));
            }
            ModelParams::ConcatMlp(ConcatMlpParams {
                wh: arrays.matrix("wh", h, d + n)?,
                bh: arrays.take("bh", &[h])?,
                wo: arrays.matrix("wo", a, h)?,
                bo: arrays.take("bo", &[a])?,
                dim: d,
            })
        }
        Family::TensorCond => ModelParams::TensorCond(TensorCondParams {
            w0: arrays.matrix("w0", a, d)?,
            b0: arrays.take("b0", &[a])?,
            w: Tensor3::from_vec([a, d, n], arrays.take("w", &[a, d, n])?)?,
            b: arrays.matrix("b", a, n)?,
        }),
    };
    arrays.finish()?;
    Ok(TrainedModel {
        spec: file.spec,
        lexicon,
        nouns: file.vocab_nouns,
        aspects: file.vocab_aspects,
        labels: file.vocab_labels,
        dim: d,
        coverage: file.coverage,
        params,
    })
}
