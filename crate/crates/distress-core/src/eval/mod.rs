//! Walk-forward evaluation harness: year partitioning, grid tuning on
//! validation AUC, ROC/AUC metrics, and period-subset reporting.

mod metrics;
mod tune;
mod window;

pub use metrics::{auc, roc_curve, trapezoid_area};
pub use tune::{
    assemble_splits, named_year_sets, subset_report, tune_and_forecast, tune_on_plan,
    DatasetSplits, EvalReport, ForecastEntry, ForecastSet, SubsetAuc,
};
pub use window::{expanding_window_plan, SplitPlan};
