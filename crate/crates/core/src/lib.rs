//! Analysis of Likert-type survey matrices: reliability, ordinal summaries,
//! association tests, rank correlation, k-means, factor analysis, and
//! classification trees and forests with out-of-bag evaluation.
//!
//! Statistics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`.

pub mod association;
pub mod clustering;
pub mod config;
pub mod correlation;
pub mod dataset;
pub mod factor;
pub mod forest;
pub mod linalg;
pub mod pipeline;
pub mod reliability;
pub mod scalar;
pub mod special;
pub mod summaries;
pub mod synthetic;
pub mod tree;

pub use association::{chi_squared_test, crosstab, Attribute, ContingencyTable};
pub use clustering::{kmeans, label_clusters, KMeansParams, Opinion};
pub use config::{Format, Response, RunConfig, Stage, DEFAULT_SEED};
pub use correlation::{correlation_matrix, kendall_tau_b, pearson, CorrelationMethod};
pub use dataset::{load_csv, read_csv, EvaluationDataset, LikertMatrix, LikertScore, Metadata, Schema};
pub use factor::{extract_factors, factor_scores, FactorOptions};
pub use forest::{avoob, oob_confusion, predict_forest, train_forest, variable_importance, ForestParams};
pub use pipeline::{
    emit_plot_data, run_on_dataset, run_pipeline, write_outputs, AnalysisReport, PipelineRun, PlotKind,
};
pub use reliability::{cronbach_alpha, partition_by_variation, respondent_reliability};
pub use scalar::Scalar;
pub use summaries::{grand_mean, grand_median, grand_mode, grand_summary};
pub use tree::{grow_tree, DecisionTree, FeatureMatrix, LabeledDataset, TreeParams};

pub type ReliabilityReport = reliability::ReliabilityReport<f64>;
pub type VariationPartition = reliability::VariationPartition<f64>;
pub type GrandSummary = summaries::GrandSummary<f64>;
pub type ItemDistribution = summaries::ItemDistribution<f64>;
pub type ChiSquaredResult = association::ChiSquaredResult<f64>;
pub type CorrelationMatrix = correlation::CorrelationMatrix<f64>;
pub type RealMatrix = linalg::RealMatrix<f64>;
pub type ClusterModel = clustering::ClusterModel<f64>;
pub type FactorModel = factor::FactorModel<f64>;
pub type FactorScores = factor::FactorScores<f64>;
pub type Forest = forest::Forest<f64>;
pub type ConfusionMatrix = forest::ConfusionMatrix<f64>;
pub type ImportanceReport = forest::ImportanceReport<f64>;
