//! Per-language OLS regression of F1 on the split strategy and controls.

mod design;
mod ols;

pub use design::{build_design_matrix, DesignMatrix, RegressionRecord};
pub use ols::{ols_fit, significance_stars, student_t_cdf, two_sided_p, RegressionResult};
