//! Variance decomposition, correlation summaries, variance-vs-n curves,
//! paired t-tests and the underlying distribution functions.

pub mod correlation;
pub mod curve;
pub mod decomposition;
pub mod descriptive;
pub mod matrix;
pub mod special;
pub mod ttest;

pub use correlation::{correlation_report, CorrelationReport, DEFAULT_MAX_PAIRS};
pub use curve::{mean_form, variance_vs_n, CurvePoint, MeanForm, VarianceCurve};
pub use decomposition::{decompose_variance, VarianceDecomposition};
pub use descriptive::pearson;
pub use matrix::{model_correlation_matrix, CorrelationMatrix};
pub use special::{normal_quantile, std_normal_cdf, student_t_cdf};
pub use ttest::{paired_t_test, TTestResult};
