//! Arithmetic word problems to equations: text preprocessing, an exact
//! equation solver, a from-scratch encoder-decoder transformer and the
//! BLEU / solution-accuracy metrics used to score it.

pub mod dataset;
pub mod equation;
pub mod metrics;
pub mod model;
pub mod preprocess;

pub use dataset::{
    ClassProfile, DatasetError, DatasetFormat, DatasetSplit, EquationClass, Issue, MwpRecord,
    Severity, SplitRatios, TypeCounts,
};
pub use equation::{Equation, EvalError, Expr, Op, ParseError, Rational};
pub use metrics::{EvalReport, RecordScore, Verdict};
pub use model::{ModelConfig, Parameters, TrainConfig};
pub use preprocess::{TokenSequence, Vocab};
