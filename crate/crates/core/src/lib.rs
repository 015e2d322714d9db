//! Focus-aspect-polarity prediction.
//!
//! An image is described by a *focus* noun, an *aspect* (a dimension of
//! subjective evaluation such as age or size) and a *polarity* on that aspect
//! (left = -1, right = +1). This crate provides:
//!
//! * [`lexicon`]: the aspect lexicon and adjective lookup,
//! * [`dataset`]: image records joined with precomputed embeddings,
//! * [`ndmath`]: dense kernels, losses, the optimizer and a gradient checker,
//! * [`condition`]: concatenation + MLP and tensor conditioning layers,
//! * [`models`]: the model families, training and score conversion,
//! * [`metrics`]: the hierarchical aspect F1 / polarity accuracy and baselines,
//! * [`pipeline`]: dataset compilation, balancing, splits and a synthetic
//!   generator with a closed-form Bayes oracle.

pub mod condition;
pub mod dataset;
pub mod error;
pub mod lexicon;
pub mod metrics;
pub mod models;
pub mod ndmath;
pub mod pipeline;
pub mod seed;

pub use dataset::{Dataset, Embedding, ImageRecord, Polarity, Split};
pub use error::{Error, Result};
pub use lexicon::{AspectEntry, AspectLexicon};
