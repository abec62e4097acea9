//! Per-building mixed-integer expansion planning and stock-level coordination.

mod annuity;
mod model;
mod stock;

use thiserror::Error;

pub use annuity::{annuity_factor, build_coefficients, AnnuityCoefficients};
pub use model::{
    balance_residuals, evaluate, solve_building, BuildingSolution, Candidate, ExpansionDecision, ExpansionProblem,
    OperationSchedule, PlanEvaluation, TechDecision,
};
pub use stock::{
    apply_rates, build_problems, capped_count, evaluate_totals, grid_emissions, myopic_stage, required_count,
    solve_stock, technology_counts, RateReport, Stage, StockPlan, Totals,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildingError {
    #[error("building {building}: invalid problem: {reason}")]
    InvalidProblem { building: String, reason: String },
    #[error("building {building}: infeasible: {reason}")]
    Infeasible { building: String, reason: String },
    #[error("building {building}: model error: {reason}")]
    Model { building: String, reason: String },
    #[error("building {building}: technology {technology} is not in the catalogue")]
    UnknownTechnology { building: String, technology: String },
}
