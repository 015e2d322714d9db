use rand::Rng;

use crate::error::{Error, Result};
use crate::ndmath::{axpy, dot, one_hot_index, Matrix, ParamBlock, Tensor3};

/// Parameters of a tensor conditioning layer
/// `tanh((W0 + W·n)·x + b0 + B·n)` for `A` outputs, embedding size `D` and `N`
/// context nouns.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCondParams {
    /// Context-independent weights, A × D.
    pub w0: Matrix,
    /// Context-independent bias, A.
    pub b0: Vec<f64>,
    /// Context-dependent weights, A × D × N.
    pub w: Tensor3,
    /// Context-dependent biases, A × N.
    pub b: Matrix,
}

impl TensorCondParams {
    pub fn zeros(a: usize, d: usize, n: usize) -> Self {
        TensorCondParams {
            w0: Matrix::zeros(a, d),
            b0: vec![0.0; a],
            w: Tensor3::zeros(a, d, n),
            b: Matrix::zeros(a, n),
        }
    }

    /// Glorot-uniform `W0`; `W`, `B` and `b0` start at zero, so an unseen
    /// (noun, aspect) slice falls back to the shared path.
    pub fn init<R: Rng + ?Sized>(a: usize, d: usize, n: usize, rng: &mut R) -> Self {
        TensorCondParams {
            w0: Matrix::glorot(a, d, rng),
            ..TensorCondParams::zeros(a, d, n)
        }
    }

    /// (A, D, N).
    pub fn dims(&self) -> (usize, usize, usize) {
        let [a, d, n] = self.w.shape();
        (a, d, n)
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (a, d, n) = self.dims();
        if self.w0.shape() != (a, d) || self.b0.len() != a || self.b.shape() != (a, n) {
            return Err(Error::shape(
                "tensor_condition",
                format!(
                    "W0 {:?}, b0 {}, W {:?}, B {:?}",
                    self.w0.shape(),
                    self.b0.len(),
                    self.w.shape(),
                    self.b.shape()
                ),
            ));
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64], noun: usize) -> Result<()> {
        let (_, d, n) = self.dims();
        if x.len() != d {
            return Err(Error::shape(
                "tensor_condition",
                format!("input of {} for D = {d}", x.len()),
            ));
        }
        if noun >= n {
            return Err(Error::shape(
                "tensor_condition",
                format!("noun {noun} for N = {n}"),
            ));
        }
        Ok(())
    }

    /// Pre-activation for the noun at index `noun`, reading the selected slices
    /// directly: `(W0 + W_i)·x + b0 + B_i`.
    pub fn pre_activation(&self, x: &[f64], noun: usize) -> Result<Vec<f64>> {
        self.check_input(x, noun)?;
        let (a, d, n) = self.dims();
        let ws = self.w.as_slice();
        Ok((0..a)
            .map(|r| {
                let shared = dot(self.w0.row(r), x);
                let specific: f64 = (0..d).map(|j| ws[(r * d + j) * n + noun] * x[j]).sum();
                shared + specific + self.b0[r] + self.b[(r, noun)]
            })
            .collect())
    }

    /// Accumulates the gradient of a loss with `dL/dpre = dpre` into `grads`
    /// and returns `dL/dx`.
    pub fn accumulate_backward(
        &self,
        x: &[f64],
        noun: usize,
        dpre: &[f64],
        grads: &mut TensorCondParams,
    ) -> Result<Vec<f64>> {
        self.check_input(x, noun)?;
        let (a, d, n) = self.dims();
        if dpre.len() != a || grads.dims() != (a, d, n) {
            return Err(Error::shape("tensor_condition_backward", "gradient shapes"));
        }
        grads.w0.add_outer(1.0, dpre, x);
        axpy(1.0, dpre, &mut grads.b0);
        grads.w.add_outer_to_slice(noun, 1.0, dpre, x);
        for (r, &g) in dpre.iter().enumerate() {
            grads.b[(r, noun)] += g;
        }
        let mut dx = self.w0.matvec_t(dpre)?;
        let ws = self.w.as_slice();
        for (r, &g) in dpre.iter().enumerate() {
            for (j, dxj) in dx.iter_mut().enumerate() {
                *dxj += g * ws[(r * d + j) * n + noun];
            }
        }
        Ok(dx)
    }
}

impl ParamBlock for TensorCondParams {
    fn blocks(&self) -> Vec<&[f64]> {
        vec![
            self.w0.as_slice(),
            &self.b0,
            self.w.as_slice(),
            self.b.as_slice(),
        ]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w0.as_mut_slice(),
            &mut self.b0,
            self.w.as_mut_slice(),
            self.b.as_mut_slice(),
        ]
    }
}

/// Gradients returned by [`tensor_condition_backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCondGrads {
    pub params: TensorCondParams,
    pub x: Vec<f64>,
}

/// `pre = (W0 + W·n)·x + b0 + B·n`, `out = tanh(pre)`, with `n` a one-hot context.
///
/// The context-dependent weights are obtained by contracting `W` with `n`
/// rather than by indexing, so this is the tensor-product form of the layer.
pub fn tensor_condition_forward(
    p: &TensorCondParams,
    x: &[f64],
    n: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    p.check_shapes()?;
    let (_, d, nn) = p.dims();
    if n.len() != nn {
        return Err(Error::shape(
            "tensor_condition_forward",
            format!("context of {} for N = {nn}", n.len()),
        ));
    }
    one_hot_index(n)?;
    if x.len() != d {
        return Err(Error::shape(
            "tensor_condition_forward",
            format!("input of {} for D = {d}", x.len()),
        ));
    }
    let mut weights = p.w.contract_last(n)?;
    axpy(1.0, p.w0.as_slice(), weights.as_mut_slice());
    let mut pre = weights.matvec(x)?;
    let bias = p.b.matvec(n)?;
    for ((v, b0), bn) in pre.iter_mut().zip(&p.b0).zip(&bias) {
        *v += b0 + bn;
    }
    let out = pre.iter().map(|v| v.tanh()).collect();
    Ok((pre, out))
}

/// Gradients of a loss with `dL/dpre = dpre` for the given forward inputs.
pub fn tensor_condition_backward(
    p: &TensorCondParams,
    x: &[f64],
    n: &[f64],
    dpre: &[f64],
) -> Result<TensorCondGrads> {
    p.check_shapes()?;
    let noun = one_hot_index(n)?;
    let (a, d, nn) = p.dims();
    if n.len() != nn {
        return Err(Error::shape("tensor_condition_backward", "context length"));
    }
    let mut grads = TensorCondParams::zeros(a, d, nn);
    let dx = p.accumulate_backward(x, noun, dpre, &mut grads)?;
    Ok(TensorCondGrads {
        params: grads,
        x: dx,
    })
}

/// `dL/dpre` from `dL/dout` through the tanh output.
pub fn tanh_backward(out: &[f64], dout: &[f64]) -> Vec<f64> {
    out.iter()
        .zip(dout)
        .map(|(o, g)| g * (1.0 - o * o))
        .collect()
}
