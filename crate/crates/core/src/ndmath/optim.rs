use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A parameter container viewed as an ordered list of flat buffers.
///
/// Gradients use the same container type, so parameters and gradients line up
/// block by block.
pub trait ParamBlock {
    fn blocks(&self) -> Vec<&[f64]>;
    fn blocks_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    /// Overwrites all parameters from a flat buffer produced by [`flatten`](Self::flatten).
    fn assign_flat(&mut self, flat: &[f64]) {
        let mut rest = flat;
        for b in self.blocks_mut() {
            let (head, tail) = rest.split_at(b.len());
            b.copy_from_slice(head);
            rest = tail;
        }
        assert!(rest.is_empty(), "flat buffer longer than parameters");
    }

    fn fill(&mut self, v: f64) {
        for b in self.blocks_mut() {
            b.fill(v);
        }
    }

    fn scale(&mut self, s: f64) {
        for b in self.blocks_mut() {
            b.iter_mut().for_each(|x| *x *= s);
        }
    }

    fn all_finite(&self) -> bool {
        self.blocks()
            .iter()
            .all(|b| b.iter().all(|v| v.is_finite()))
    }
}

impl<T: ParamBlock> ParamBlock for Vec<T> {
    fn blocks(&self) -> Vec<&[f64]> {
        self.iter().flat_map(|p| p.blocks()).collect()
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.iter_mut().flat_map(|p| p.blocks_mut()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            kind: OptimizerKind::Adam,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl OptConfig {
    pub fn plain(lr: f64) -> Self {
        OptConfig {
            kind: OptimizerKind::Plain,
            lr,
            ..OptConfig::default()
        }
    }
}

/// Moment buffers for one parameter container. Buffers are shaped on the first
/// step and checked on every later one.
#[derive(Debug, Clone)]
pub struct OptState {
    pub config: OptConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptState {
    pub fn new(config: OptConfig) -> Self {
        OptState {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }
}

pub fn optimizer_step<P: ParamBlock>(
    params: &mut P,
    grads: &P,
    state: &mut OptState,
) -> Result<()> {
    let g = grads.blocks();
    let mut p = params.blocks_mut();
    if p.len() != g.len() || p.iter().zip(&g).any(|(a, b)| a.len() != b.len()) {
        return Err(Error::shape(
            "optimizer_step",
            "gradient blocks differ from parameters",
        ));
    }
    let cfg = state.config;
    state.step += 1;
    match cfg.kind {
        OptimizerKind::Plain => {
            for (pb, gb) in p.iter_mut().zip(&g) {
                for (w, d) in pb.iter_mut().zip(gb.iter()) {
                    *w -= cfg.lr * d;
                }
            }
        }
        OptimizerKind::Adam => {
            if state.first.is_empty() {
                state.first = g.iter().map(|b| vec![0.0; b.len()]).collect();
                state.second = state.first.clone();
            } else if state.first.len() != g.len()
                || state.first.iter().zip(&g).any(|(m, b)| m.len() != b.len())
            {
                return Err(Error::shape(
                    "optimizer_step",
                    "moment buffers differ from parameters",
                ));
            }
            let t = state.step as i32;
            let c1 = 1.0 - cfg.beta1.powi(t);
            let c2 = 1.0 - cfg.beta2.powi(t);
            for (((pb, gb), mb), vb) in p
                .iter_mut()
                .zip(&g)
                .zip(state.first.iter_mut())
                .zip(state.second.iter_mut())
            {
                for i in 0..pb.len() {
                    let d = gb[i];
                    mb[i] = cfg.beta1 * mb[i] + (1.0 - cfg.beta1) * d;
                    vb[i] = cfg.beta2 * vb[i] + (1.0 - cfg.beta2) * d * d;
                    let mhat = mb[i] / c1;
                    let vhat = vb[i] / c2;
                    pb[i] -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
                }
            }
        }
    }
    Ok(())
}
