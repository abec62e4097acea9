//! The building / grid / surcharge feedback loop over both horizons.

mod compare;
mod output;

use std::collections::BTreeMap;
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{
    adjusted_price, annualized_expansion_cost, assign_from_solutions, average_gec, AllocationError, GecResult,
    QuantileAssignment,
};
use crate::building::{evaluate_totals, solve_stock, BuildingError, RateReport, Stage, StockPlan, Totals};
use crate::expansion::{reinforce, CostCatalog, ExpansionError, ReinforcementReport};
use crate::powerflow::{injections_from_plans, slack_balance, PowerFlowError, SlackBalance};
use crate::scenario::{BuildingStock, GecMode, GridModel, ScenarioConfig, ScenarioError, TechCategory};

pub use compare::{compare_scenarios, Comparison, ComparisonRow};
pub use output::{read_report, write_comparison, write_outputs};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Input(#[from] ScenarioError),
    #[error("building stage, horizon {horizon}: {source}")]
    Building { horizon: i32, source: BuildingError },
    #[error("power flow, horizon {horizon}: {source}")]
    PowerFlow { horizon: i32, source: PowerFlowError },
    #[error("grid expansion, horizon {horizon}: {source}")]
    Expansion { horizon: i32, source: ExpansionError },
    #[error("cost allocation, horizon {horizon}: {source}")]
    Allocation { horizon: i32, source: AllocationError },
    #[error("comparison needs at least two runs, got {0}")]
    TooFewReports(usize),
    #[error("runs cover different building stocks: {0}")]
    MismatchedStocks(String),
    #[error("{path}: {message}")]
    Output { path: String, message: String },
}

impl PipelineError {
    /// True for errors caused by bad inputs rather than by a model failure.
    pub fn is_input_error(&self) -> bool {
        match self {
            Self::Input(e) => e.is_input_error(),
            Self::TooFewReports(_) | Self::MismatchedStocks(_) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopStatus {
    Converged,
    NotReached,
}

impl LoopStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::NotReached => "not_reached",
        }
    }
}

/// Results for one horizon within one loop iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSnapshot {
    pub horizon: i32,
    pub counts: BTreeMap<TechCategory, usize>,
    pub totals: Totals,
    pub rates: RateReport,
    pub reinforcement: ReinforcementReport,
    /// Expansion cost spread over the grid asset lifetime, EUR/a.
    pub annual_grid_cost: f64,
    /// Surcharge under the configured energy base.
    pub gec: GecResult,
    /// Surcharge under both energy bases, for reporting.
    pub gec_by_mode: Vec<GecResult>,
    pub slack: SlackBalance,
    pub assignments: Vec<QuantileAssignment>,
    /// Mean electricity price the buildings planned with, ct/kWh.
    pub mean_price: f64,
}

impl HorizonSnapshot {
    pub fn count(&self, category: TechCategory) -> usize {
        self.counts.get(&category).copied().unwrap_or(0)
    }

    /// Building annuities plus annualized grid reinforcement, EUR/a.
    pub fn total_cost(&self) -> f64 {
        self.totals.capex + self.totals.opex + self.annual_grid_cost
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSnapshot {
    pub iteration: usize,
    /// Early horizon first.
    pub horizons: Vec<HorizonSnapshot>,
    /// Largest change of avg_gec against the previous iteration, ct/kWh.
    pub gec_change: f64,
}

impl IterationSnapshot {
    pub fn horizon(&self, year: i32) -> Option<&HorizonSnapshot> {
        self.horizons.iter().find(|h| h.horizon == year)
    }
}

/// Plans of one horizon and iteration, written to plans.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub iteration: usize,
    pub plan: StockPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub scenario: String,
    pub eta: f64,
    pub gec_mode: GecMode,
    /// ct/kWh, the part of the price the surcharge is added to.
    pub grid_fee_base: f64,
    pub horizons: Vec<i32>,
    pub max_loop_iterations: usize,
    pub gec_tolerance: f64,
    pub buildings: Vec<String>,
    pub iterations: Vec<IterationSnapshot>,
    pub status: LoopStatus,
    #[serde(skip)]
    pub plans: Vec<PlanRecord>,
}

impl RunReport {
    pub fn last(&self) -> &IterationSnapshot {
        self.iterations.last().expect("at least one iteration")
    }

    pub fn first(&self) -> &IterationSnapshot {
        &self.iterations[0]
    }
}

/// Per-building electricity prices of the next iteration, by horizon.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoopState {
    pub iteration: usize,
    pub prices: BTreeMap<i32, BTreeMap<String, f64>>,
    pub last_gec: BTreeMap<i32, f64>,
    pub snapshots: Vec<IterationSnapshot>,
}

struct HorizonRun {
    snapshot: HorizonSnapshot,
    plan: StockPlan,
}

fn run_horizon(
    config: &ScenarioConfig,
    stock: &BuildingStock,
    grid: &GridModel,
    catalog: &CostCatalog,
    plan: StockPlan,
    prices: &BTreeMap<String, f64>,
) -> Result<HorizonRun, PipelineError> {
    let horizon = plan.horizon;
    let injections = injections_from_plans(grid, stock, &plan.solutions, config.power_factor)
        .map_err(|source| PipelineError::PowerFlow { horizon, source })?;
    let (_, reinforcement, flows) =
        reinforce(grid, &injections, config.voltage_band, config.max_parallel_cables, catalog)
            .map_err(|source| PipelineError::Expansion { horizon, source })?;
    let annual_grid_cost =
        annualized_expansion_cost(reinforcement.total_cost, config.discount_rate, config.grid_asset_lifetime);
    let alloc = |source| PipelineError::Allocation { horizon, source };
    let gec_by_mode = [GecMode::LoadOnly, GecMode::LoadPlusFeedIn]
        .into_iter()
        .map(|m| average_gec(annual_grid_cost, &plan.solutions, m))
        .collect::<Result<Vec<_>, _>>()
        .map_err(alloc)?;
    let gec = *gec_by_mode.iter().find(|g| g.mode == config.gec_mode).expect("both modes computed");
    let assignments = assign_from_solutions(&plan.solutions, &gec, &config.quantile_multipliers).map_err(alloc)?;
    let mean_price = if stock.is_empty() {
        config.electricity_price_base
    } else {
        stock.buildings.iter().map(|b| prices.get(&b.id).copied().unwrap_or(config.electricity_price_base)).sum::<f64>()
            / stock.len() as f64
    };
    let snapshot = HorizonSnapshot {
        horizon,
        counts: plan.counts(),
        totals: evaluate_totals(&plan.solutions),
        rates: plan.rates.clone(),
        reinforcement,
        annual_grid_cost,
        gec,
        gec_by_mode,
        slack: slack_balance(&flows),
        assignments,
        mean_price,
    };
    Ok(HorizonRun { snapshot, plan })
}

/// Electricity prices for the next iteration, damped towards the surcharged targets.
fn next_prices(
    config: &ScenarioConfig,
    assignments: &[QuantileAssignment],
    current: &BTreeMap<String, f64>,
) -> BTreeMap<String, f64> {
    let energy_part = config.electricity_price_base - config.grid_fee_base;
    assignments
        .iter()
        .map(|a| {
            let target = energy_part + adjusted_price(config.grid_fee_base, a);
            let old = current.get(&a.building_id).copied().unwrap_or(config.electricity_price_base);
            (a.building_id.clone(), old + config.price_damping * (target - old))
        })
        .collect()
}

/// Runs plan, power flow, reinforcement and surcharge until avg_gec settles in
/// both horizons or the iteration cap is reached.
pub fn run_pipeline(
    config: &ScenarioConfig,
    stock: &BuildingStock,
    grid: &GridModel,
    catalog: &CostCatalog,
) -> Result<RunReport, PipelineError> {
    config.validate()?;
    stock.validate()?;
    grid.validate()?;
    grid.validate_stock(stock)?;
    let technologies = config.technologies_for(stock);
    let (early, late) = (config.early_horizon(), config.late_horizon());

    let mut state = LoopState::default();
    for h in [early, late] {
        state.last_gec.insert(h, 0.0);
        state.prices.insert(h, BTreeMap::new());
    }
    let mut plans = Vec::new();
    let mut status = LoopStatus::NotReached;
    while state.iteration < config.max_loop_iterations {
        state.iteration += 1;
        let started = Instant::now();
        let late_plan = solve_stock(stock, config, &technologies, late, &state.prices[&late], Stage::Unrestricted)
            .map_err(|source| PipelineError::Building { horizon: late, source })?;
        let early_plan =
            solve_stock(stock, config, &technologies, early, &state.prices[&early], Stage::DerivedFrom(&late_plan))
                .map_err(|source| PipelineError::Building { horizon: early, source })?;

        let mut horizons = Vec::new();
        let mut gec_change = 0.0f64;
        for plan in [early_plan, late_plan] {
            let h = plan.horizon;
            let run = run_horizon(config, stock, grid, catalog, plan, &state.prices[&h])?;
            gec_change = gec_change.max((run.snapshot.gec.avg_gec - state.last_gec[&h]).abs());
            state.last_gec.insert(h, run.snapshot.gec.avg_gec);
            let next = next_prices(config, &run.snapshot.assignments, &state.prices[&h]);
            state.prices.insert(h, next);
            plans.push(PlanRecord { iteration: state.iteration, plan: run.plan });
            horizons.push(run.snapshot);
        }
        info!(
            "iteration {}: avg_gec {} (change {:.4} ct/kWh) in {:.1?}",
            state.iteration,
            horizons.iter().map(|h| format!("{}={:.4}", h.horizon, h.gec.avg_gec)).collect::<Vec<_>>().join(", "),
            gec_change,
            started.elapsed()
        );
        state.snapshots.push(IterationSnapshot { iteration: state.iteration, horizons, gec_change });
        if gec_change <= config.gec_tolerance {
            status = LoopStatus::Converged;
            break;
        }
    }
    Ok(RunReport {
        format_version: crate::scenario::FORMAT_VERSION,
        scenario: config.name.clone(),
        eta: config.eta,
        gec_mode: config.gec_mode,
        grid_fee_base: config.grid_fee_base,
        horizons: vec![early, late],
        max_loop_iterations: config.max_loop_iterations,
        gec_tolerance: config.gec_tolerance,
        buildings: stock.ids(),
        iterations: state.snapshots,
        status,
        plans,
    })
}
