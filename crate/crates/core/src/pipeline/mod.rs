//! Dataset compilation, polarity balancing, splits and synthetic data.

mod balance;
mod compile;
mod split;
mod synth;

pub use balance::{balance, compile_and_balance, RULE_BALANCE, RULE_MULTI_COMBO};
pub use compile::{
    compile_dataset, Compiled, Exclusion, NounRuleMode, RemovalEntry, TagRecord, Thresholds,
    RULE_ASPECT, RULE_COMBO_IMAGES, RULE_DUPLICATE_TAG, RULE_EXCLUSION, RULE_NOUN,
    RULE_POLARITY_IMAGES, RULE_UNKNOWN_ADJECTIVE,
};
pub use split::{make_split, CellCounts, SplitKind, SplitPlan, DEFAULT_HOLDOUTS};
pub use synth::{normal_cdf, synth_generate, AspectCeiling, OracleCell, OracleReport, SynthConfig};
