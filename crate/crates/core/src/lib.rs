//! Co-simulation of building energy investments and low-voltage grid reinforcement.
//!
//! Buildings choose heating, PV, storage and refurbishment by solving a
//! mixed-integer programme; their grid exchange drives an AC power flow,
//! violations are removed by cable and transformer reinforcement, and the
//! resulting cost is fed back as a per-building electricity surcharge.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod building;
pub mod expansion;
pub mod pipeline;
pub mod powerflow;
pub mod scenario;
pub mod solver;

pub use pipeline::{compare_scenarios, run_pipeline, PipelineError, RunReport};
pub use scenario::{
    load_grid, load_scenario, Building, BuildingStock, GridModel, ScenarioConfig, ScenarioError, TechCategory,
    TechnologySpec, TimeGrid,
};
