//! Synthetic scenarios, evaluation metrics and the replication grid.

mod grid;
mod metrics;
mod scenario;

pub use grid::{
    fit_inputs, replication_hyper, replication_rng, run_grid, run_replication, CellConfig, CellReport,
    GridConfig, GridReport, ROC_GRID,
};
pub use metrics::{
    average_roc, effect_size_error, evaluate, lower_triangle_labels, lower_triangle_scores,
    partial_corr_errors, pooled_roc, roc_auc, theta_summary, truth_effect, EvalReport, Roc, ThetaSummary,
};
pub use scenario::{generate_scenario, simulate_sem, Scenario, ScenarioConfig, Truth};
