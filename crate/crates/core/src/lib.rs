//! Explainable ordinal regression with factorized interactions.
//!
//! Attributes are discretized onto equal-width characteristic points and
//! encoded as saturating piecewise-linear vectors; a factorization-machine
//! link function scores objects; training drives every ordered pair of
//! training objects apart by a margin via SGD; labels are assigned by
//! comparing query scores to the cached training scores (class intervals
//! plus the kappa indicator); and the fitted model exports per-attribute
//! score functions and pairwise interaction grids.

pub mod dataset;
pub mod encoding;
pub mod error;
pub mod evaluation;
pub mod explain;
pub mod fm;
pub mod inference;
pub mod synthetic;
pub mod training;

mod rng;

pub use dataset::{kfold, load_csv, load_rows_csv, random_split, Dataset, LabelColumn, SplitSpec};
pub use encoding::{
    build_discretization, encode, encode_dataset, AttributeVector, Discretization,
};
pub use error::{Error, Result};
pub use evaluation::{
    accuracy, cross_validate, default_cv_grid, fit_and_score, mae, run_trials, Metrics,
    TrialSummary,
};
pub use explain::{
    export_report, interaction_matrix, load_report, score_function, ExplanationReport,
    InteractionMatrix, ScoreFunctionTable,
};
pub use fm::{link_score, link_score_fast, load_model, save_model, ModelParams, MODEL_FORMAT_VERSION};
pub use inference::{
    class_interval, kappa, predict, predict_from_score, ClassInterval, Prediction,
};
pub use training::{
    loss_gradient, pair_gradient, pairwise_loss, train_monotone, train_sgd, training_loss,
    GammaSpec, Hyperparams, MonotoneSpec, PairGradient, PairSet,
};
