use rand::Rng;

use crate::condition::{ConcatMlpParams, TensorCondParams};
use crate::error::{Error, Result};
use crate::ndmath::{affine, Matrix, ParamBlock};

/// A scorer over (embedding, noun index) with an explicit backward pass.
///
/// `scores` are the values the training losses act on: logits for the linear
/// families and the MLP, pre-activations for tensor conditioning.
pub trait Network: ParamBlock + Clone {
    fn scores(&self, x: &[f64], noun: usize) -> Result<Vec<f64>>;

    /// Adds the parameter gradient for `dL/dscores = dscores` into `grads`.
    fn accumulate_grad(
        &self,
        x: &[f64],
        noun: usize,
        dscores: &[f64],
        grads: &mut Self,
    ) -> Result<()>;

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }
}

/// `W·x + b` for K outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl LinearParams {
    pub fn init<R: Rng + ?Sized>(k: usize, d: usize, rng: &mut R) -> Self {
        LinearParams {
            w: Matrix::glorot(k, d, rng),
            b: vec![0.0; k],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        affine(&self.w, x, &self.b)
    }

    fn backward(&self, x: &[f64], dscores: &[f64], grads: &mut LinearParams) -> Result<()> {
        if x.len() != self.w.cols() || dscores.len() != self.w.rows() {
            return Err(Error::shape("linear_backward", "input or gradient length"));
        }
        grads.w.add_outer(1.0, dscores, x);
        for (g, d) in grads.b.iter_mut().zip(dscores) {
            *g += d;
        }
        Ok(())
    }
}

impl ParamBlock for LinearParams {
    fn blocks(&self) -> Vec<&[f64]> {
        vec![self.w.as_slice(), &self.b]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.w.as_mut_slice(), &mut self.b]
    }
}

/// Noun-agnostic: the noun is ignored.
impl Network for LinearParams {
    fn scores(&self, x: &[f64], _noun: usize) -> Result<Vec<f64>> {
        self.forward(x)
    }

    fn accumulate_grad(
        &self,
        x: &[f64],
        _noun: usize,
        dscores: &[f64],
        grads: &mut Self,
    ) -> Result<()> {
        self.backward(x, dscores, grads)
    }
}

/// Independent linear models, one per noun.
#[derive(Debug, Clone, PartialEq)]
pub struct PerNounLinear(pub Vec<LinearParams>);

impl PerNounLinear {
    fn get(&self, noun: usize) -> Result<&LinearParams> {
        self.0.get(noun).ok_or_else(|| {
            Error::shape(
                "per_noun_linear",
                format!("noun {noun} of {}", self.0.len()),
            )
        })
    }
}

impl ParamBlock for PerNounLinear {
    fn blocks(&self) -> Vec<&[f64]> {
        self.0.blocks()
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.0.blocks_mut()
    }
}

impl Network for PerNounLinear {
    fn scores(&self, x: &[f64], noun: usize) -> Result<Vec<f64>> {
        self.get(noun)?.forward(x)
    }

    fn accumulate_grad(
        &self,
        x: &[f64],
        noun: usize,
        dscores: &[f64],
        grads: &mut Self,
    ) -> Result<()> {
        let g = grads
            .0
            .get_mut(noun)
            .ok_or_else(|| Error::shape("per_noun_linear", "gradient container"))?;
        self.get(noun)?.backward(x, dscores, g)
    }
}

impl Network for ConcatMlpParams {
    fn scores(&self, x: &[f64], noun: usize) -> Result<Vec<f64>> {
        self.forward_index(x, noun).map(|(_, out)| out)
    }

    fn accumulate_grad(
        &self,
        x: &[f64],
        noun: usize,
        dscores: &[f64],
        grads: &mut Self,
    ) -> Result<()> {
        self.accumulate_backward(x, noun, dscores, grads)
    }
}

impl Network for TensorCondParams {
    fn scores(&self, x: &[f64], noun: usize) -> Result<Vec<f64>> {
        self.pre_activation(x, noun)
    }

    fn accumulate_grad(
        &self,
        x: &[f64],
        noun: usize,
        dscores: &[f64],
        grads: &mut Self,
    ) -> Result<()> {
        self.accumulate_backward(x, noun, dscores, grads)
            .map(|_| ())
    }
}

/// Parameters of any family.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Linear(LinearParams),
    PerNoun(PerNounLinear),
    ConcatMlp(ConcatMlpParams),
    TensorCond(TensorCondParams),
}

impl ModelParams {
    pub fn scores(&self, x: &[f64], noun: usize) -> Result<Vec<f64>> {
        match self {
            ModelParams::Linear(p) => p.scores(x, noun),
            ModelParams::PerNoun(p) => p.scores(x, noun),
            ModelParams::ConcatMlp(p) => p.scores(x, noun),
            ModelParams::TensorCond(p) => p.scores(x, noun),
        }
    }

    pub fn all_finite(&self) -> bool {
        match self {
            ModelParams::Linear(p) => p.all_finite(),
            ModelParams::PerNoun(p) => p.all_finite(),
            ModelParams::ConcatMlp(p) => p.all_finite(),
            ModelParams::TensorCond(p) => p.all_finite(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        match self {
            ModelParams::Linear(p) => p.flatten(),
            ModelParams::PerNoun(p) => p.flatten(),
            ModelParams::ConcatMlp(p) => p.flatten(),
            ModelParams::TensorCond(p) => p.flatten(),
        }
    }
}
