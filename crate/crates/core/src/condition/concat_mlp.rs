use rand::Rng;

use crate::error::{Error, Result};
use crate::ndmath::{axpy, dot, one_hot_index, Matrix, ParamBlock};

/// One-hidden-layer perceptron over `concat(x, onehot(noun))`:
/// `hidden = tanh(Wh·z + bh)`, `out = Wo·hidden + bo`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatMlpParams {
    /// H × (D + N).
    pub wh: Matrix,
    pub bh: Vec<f64>,
    /// A × H.
    pub wo: Matrix,
    pub bo: Vec<f64>,
    /// Embedding size D; the remaining input columns are the noun block.
    pub dim: usize,
}

impl ConcatMlpParams {
    pub fn zeros(a: usize, d: usize, n: usize, hidden: usize) -> Self {
        ConcatMlpParams {
            wh: Matrix::zeros(hidden, d + n),
            bh: vec![0.0; hidden],
            wo: Matrix::zeros(a, hidden),
            bo: vec![0.0; a],
            dim: d,
        }
    }

    pub fn init<R: Rng + ?Sized>(a: usize, d: usize, n: usize, hidden: usize, rng: &mut R) -> Self {
        ConcatMlpParams {
            wh: Matrix::glorot(hidden, d + n, rng),
            bh: vec![0.0; hidden],
            wo: Matrix::glorot(a, hidden, rng),
            bo: vec![0.0; a],
            dim: d,
        }
    }

    pub fn hidden_width(&self) -> usize {
        self.wh.rows()
    }

    pub fn num_nouns(&self) -> usize {
        self.wh.cols() - self.dim
    }

    pub fn num_outputs(&self) -> usize {
        self.wo.rows()
    }

    pub fn check_shapes(&self) -> Result<()> {
        let h = self.wh.rows();
        if self.wh.cols() < self.dim
            || self.bh.len() != h
            || self.wo.cols() != h
            || self.bo.len() != self.wo.rows()
        {
            return Err(Error::shape(
                "concat_mlp",
                format!(
                    "Wh {:?}, bh {}, Wo {:?}, bo {}, D = {}",
                    self.wh.shape(),
                    self.bh.len(),
                    self.wo.shape(),
                    self.bo.len(),
                    self.dim
                ),
            ));
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64], noun: usize) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::shape(
                "concat_mlp",
                format!("input of {} for D = {}", x.len(), self.dim),
            ));
        }
        if noun >= self.num_nouns() {
            return Err(Error::shape(
                "concat_mlp",
                format!("noun {noun} for N = {}", self.num_nouns()),
            ));
        }
        Ok(())
    }

    /// Forward pass for the noun at index `noun`; the one-hot block of the
    /// input contributes a single column of `Wh`.
    pub fn forward_index(&self, x: &[f64], noun: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(x, noun)?;
        let d = self.dim;
        let hidden: Vec<f64> = (0..self.wh.rows())
            .map(|r| {
                let row = self.wh.row(r);
                (dot(&row[..d], x) + row[d + noun] + self.bh[r]).tanh()
            })
            .collect();
        let out = (0..self.wo.rows())
            .map(|r| dot(self.wo.row(r), &hidden) + self.bo[r])
            .collect();
        Ok((hidden, out))
    }

    /// Accumulates parameter gradients for `dL/dout = dout` into `grads`.
    pub fn accumulate_backward(
        &self,
        x: &[f64],
        noun: usize,
        dout: &[f64],
        grads: &mut ConcatMlpParams,
    ) -> Result<()> {
        let (hidden, _) = self.forward_index(x, noun)?;
        if dout.len() != self.wo.rows() || grads.wh.shape() != self.wh.shape() {
            return Err(Error::shape("concat_mlp_backward", "gradient shapes"));
        }
        grads.wo.add_outer(1.0, dout, &hidden);
        axpy(1.0, dout, &mut grads.bo);
        let dh = self.wo.matvec_t(dout)?;
        let d = self.dim;
        for (r, (dhr, hr)) in dh.iter().zip(&hidden).enumerate() {
            let dz = dhr * (1.0 - hr * hr);
            let row = grads.wh.row_mut(r);
            axpy(dz, x, &mut row[..d]);
            row[d + noun] += dz;
            grads.bh[r] += dz;
        }
        Ok(())
    }
}

impl ParamBlock for ConcatMlpParams {
    fn blocks(&self) -> Vec<&[f64]> {
        vec![self.wh.as_slice(), &self.bh, self.wo.as_slice(), &self.bo]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.wh.as_mut_slice(),
            &mut self.bh,
            self.wo.as_mut_slice(),
            &mut self.bo,
        ]
    }
}

/// Returns `(hidden, out)` for embedding `x` and one-hot noun `n`.
pub fn concat_mlp_forward(
    p: &ConcatMlpParams,
    x: &[f64],
    n: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    p.check_shapes()?;
    if n.len() != p.num_nouns() {
        return Err(Error::shape(
            "concat_mlp_forward",
            format!("context of {} for N = {}", n.len(), p.num_nouns()),
        ));
    }
    let noun = one_hot_index(n)?;
    p.forward_index(x, noun)
}

pub fn concat_mlp_backward(
    p: &ConcatMlpParams,
    x: &[f64],
    n: &[f64],
    dout: &[f64],
) -> Result<ConcatMlpParams> {
    p.check_shapes()?;
    if n.len() != p.num_nouns() {
        return Err(Error::shape("concat_mlp_backward", "context length"));
    }
    let noun = one_hot_index(n)?;
    let mut grads = ConcatMlpParams::zeros(p.num_outputs(), p.dim, p.num_nouns(), p.hidden_width());
    p.accumulate_backward(x, noun, dout, &mut grads)?;
    Ok(grads)
}
