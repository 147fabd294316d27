//! Fitting filters to targets and training the linear spectral
//! classifier.

mod classify;
mod experiment;
mod fit;

pub use classify::{
    beta_sweep, community_features, random_split, train_classifier, BetaAccuracy, ClassifierConfig,
    ClassifierProblem, ClassifierReport, LabeledDataset,
};
pub use experiment::{
    classify_beta_grid, filter_beta_grid, run_filter_experiment, smooth_signals, ExperimentRecord,
    ExperimentReport, FilterExperimentConfig, FitMethod, SignalStats, TrendSummary,
};
pub use fit::{
    fit_gradient_descent, fit_least_squares, make_filter_task, FilterTask, FitConfig, FitProblem,
    FitResult,
};
