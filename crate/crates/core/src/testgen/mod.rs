//! Segment-combine cases and quantifier contrast sets, with every generated
//! label checked by gold execution.

mod contrast;
mod fusion;
mod segcomb;

pub use contrast::{
    apply_rewrite, builtin_rules, gen_contrast_set, pair_for_coherency, replace_phrase,
    CoherencyPair, ContrastError, ContrastExample, ContrastRule, LabelTransform, Meaning,
    PairError, ProgramRewrite,
};
pub use fusion::{fuse_answers, FusionError, FusionFn};
pub use segcomb::{
    gen_segment_combine, verify_segment_combine, SegCombError, SegmentCombineCase,
    DISTRACTOR_RETRIES, MAX_COUNT_LABEL,
};

/// Template ids with built-in support.
pub mod templates {
    pub const COUNT_GROUP_BY: &str = "CountGroupBy";
    pub const VERIFY_COUNT_GROUP_BY: &str = "VerifyCountGroupBy";
    pub const VERIFY_COUNT: &str = "VerifyCount";
    pub const QUANTIFIER: &str = "Quantifier";
}
