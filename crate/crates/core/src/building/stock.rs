//! Stock-level coordination: candidate sets, expansion rates and the two-horizon staging.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{solve_building, BuildingSolution, Candidate, ExpansionProblem};
use super::BuildingError;
use crate::scenario::{Building, BuildingStock, ScenarioConfig, TechCategory, TechnologySpec};

/// Which candidates a horizon may choose from.
#[derive(Debug, Clone, Copy)]
pub enum Stage<'a> {
    /// Every catalogue technology not banned in the horizon; existing assets ignored.
    Unrestricted,
    /// Technologies installed in the given plan plus usable existing assets.
    DerivedFrom(&'a StockPlan),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RateReport {
    /// Minimum number of buildings per category.
    pub required: BTreeMap<TechCategory, usize>,
    pub refurbishment_cap: Option<usize>,
    /// Buildings that received a forced technology.
    pub forced: Vec<String>,
    /// Buildings whose refurbishment was revoked.
    pub revoked: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockPlan {
    pub horizon: i32,
    pub solutions: Vec<BuildingSolution>,
    pub rates: RateReport,
}

impl StockPlan {
    pub fn solution(&self, building_id: &str) -> Option<&BuildingSolution> {
        self.solutions.iter().find(|s| s.building_id == building_id)
    }

    /// Number of buildings with at least one installed technology of each category.
    pub fn counts(&self) -> BTreeMap<TechCategory, usize> {
        technology_counts(&self.solutions)
    }
}

pub fn technology_counts(solutions: &[BuildingSolution]) -> BTreeMap<TechCategory, usize> {
    let mut counts: BTreeMap<TechCategory, usize> = TechCategory::ALL.iter().map(|&c| (c, 0)).collect();
    for s in solutions {
        for cat in TechCategory::ALL {
            if s.decision.has(cat) {
                *counts.get_mut(&cat).unwrap() += 1;
            }
        }
    }
    counts
}

/// Minimum count implied by an adoption rate; a fractional building rounds up.
pub fn required_count(rate: f64, n: usize) -> usize {
    (rate * n as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Maximum count allowed by a cap rate; a fractional building rounds down.
pub fn capped_count(rate: f64, n: usize) -> usize {
    (rate * n as f64 + 1e-9).floor().max(0.0) as usize
}

fn existing_candidates(
    building: &Building,
    technologies: &[TechnologySpec],
    config: &ScenarioConfig,
    horizon: i32,
    base_year: i32,
) -> Vec<Candidate> {
    let elapsed = (horizon - base_year) as f64;
    let mut out = Vec::new();
    for asset in &building.existing_assets {
        if asset.remaining_lifetime - elapsed <= 0.0 {
            continue;
        }
        let Some(spec) = technologies.iter().find(|t| t.id == asset.technology) else {
            warn!("building {}: existing asset {} is not in the catalogue, ignored", building.id, asset.technology);
            continue;
        };
        if config.is_banned(horizon, spec.category) {
            continue;
        }
        let mut spec = spec.clone();
        spec.min_capacity = asset.capacity;
        spec.max_capacity = asset.capacity;
        out.push(Candidate { spec, existing: true });
    }
    out
}

/// One problem per building for `horizon`.
pub fn build_problems(
    stock: &BuildingStock,
    config: &ScenarioConfig,
    technologies: &[TechnologySpec],
    horizon: i32,
    prices: &BTreeMap<String, f64>,
    stage: Stage<'_>,
) -> Result<Vec<ExpansionProblem>, BuildingError> {
    let grid = stock.time_grid.with_year(horizon);
    stock
        .buildings
        .iter()
        .map(|b| {
            let mut candidates: Vec<Candidate> = match stage {
                Stage::Unrestricted => technologies
                    .iter()
                    .filter(|t| !config.is_banned(horizon, t.category))
                    .map(|t| Candidate::new(t.scaled_for(b.dwellings)))
                    .collect(),
                Stage::DerivedFrom(plan) => {
                    let earlier = plan.solution(&b.id).ok_or_else(|| BuildingError::InvalidProblem {
                        building: b.id.clone(),
                        reason: format!("no plan for horizon {}", plan.horizon),
                    })?;
                    let mut chosen = Vec::new();
                    for d in earlier.decision.installed().filter(|d| !d.existing) {
                        let spec = technologies.iter().find(|t| t.id == d.id).ok_or_else(|| {
                            BuildingError::UnknownTechnology { building: b.id.clone(), technology: d.id.clone() }
                        })?;
                        if !config.is_banned(horizon, spec.category) {
                            chosen.push(Candidate::new(spec.scaled_for(b.dwellings)));
                        }
                    }
                    chosen.extend(existing_candidates(b, technologies, config, horizon, stock.base_year));
                    chosen
                }
            };
            // Keep a single refurbishment and battery option.
            for cat in [TechCategory::Refurbishment, TechCategory::Battery] {
                let mut seen = false;
                candidates.retain(|c| c.category() != cat || !std::mem::replace(&mut seen, true));
            }
            let price = prices.get(&b.id).copied().unwrap_or(config.electricity_price_base);
            Ok(ExpansionProblem::new(
                b.clone(),
                candidates,
                grid.clone(),
                stock.climate.pv_yield.clone(),
                config,
                price,
            ))
        })
        .collect()
}

/// Solves every building independently and then enforces the horizon's rates.
pub fn solve_stock(
    stock: &BuildingStock,
    config: &ScenarioConfig,
    technologies: &[TechnologySpec],
    horizon: i32,
    prices: &BTreeMap<String, f64>,
    stage: Stage<'_>,
) -> Result<StockPlan, BuildingError> {
    let mut problems = build_problems(stock, config, technologies, horizon, prices, stage)?;
    let solutions = problems.par_iter().map(solve_building).collect::<Result<Vec<_>, _>>()?;
    let (solutions, rates) = apply_rates(&mut problems, solutions, config, horizon)?;
    Ok(StockPlan { horizon, solutions, rates })
}

struct Trial {
    index: usize,
    increase: f64,
    solution: BuildingSolution,
}

/// Re-solves the selected buildings with `modify` applied; infeasible ones are skipped.
fn trials(
    problems: &[ExpansionProblem],
    solutions: &[BuildingSolution],
    selected: Vec<usize>,
    modify: impl Fn(&mut ExpansionProblem, &BuildingSolution) + Sync,
    warnings: &mut Vec<String>,
) -> Result<Vec<Trial>, BuildingError> {
    let results: Vec<(usize, Result<BuildingSolution, BuildingError>)> = selected
        .into_par_iter()
        .map(|i| {
            let mut p = problems[i].clone();
            modify(&mut p, &solutions[i]);
            (i, solve_building(&p))
        })
        .collect();
    let mut out = Vec::new();
    for (i, r) in results {
        match r {
            Ok(solution) => {
                let increase = solution.evaluation.objective_value - solutions[i].evaluation.objective_value;
                out.push(Trial { index: i, increase, solution });
            }
            Err(BuildingError::Infeasible { building, reason }) => {
                let msg = format!("building {building} skipped: {reason}");
                warn!("{msg}");
                warnings.push(msg);
            }
            Err(e) => return Err(e),
        }
    }
    out.sort_by(|a, b| {
        a.increase
            .partial_cmp(&b.increase)
            .unwrap_or(Ordering::Equal)
            .then_with(|| problems[a.index].building.id.cmp(&problems[b.index].building.id))
    });
    Ok(out)
}

/// Enforces minimum adoption rates and the refurbishment cap of `horizon`.
///
/// Missing adoptions are forced into the buildings where that raises the
/// objective least; surplus refurbishments are revoked where that raises it
/// least. Ties go to the lower building id. `problems` keep the forcing so
/// later re-solves respect it.
pub fn apply_rates(
    problems: &mut [ExpansionProblem],
    mut solutions: Vec<BuildingSolution>,
    config: &ScenarioConfig,
    horizon: i32,
) -> Result<(Vec<BuildingSolution>, RateReport), BuildingError> {
    let n = problems.len();
    let mut report = RateReport::default();
    let rates: Vec<(TechCategory, f64)> =
        config.min_adoption_rate.get(&horizon).map(|m| m.iter().map(|(c, r)| (*c, *r)).collect()).unwrap_or_default();

    for &(cat, rate) in &rates {
        let required = required_count(rate, n);
        report.required.insert(cat, required);
        let count = solutions.iter().filter(|s| s.decision.has(cat)).count();
        if count >= required {
            continue;
        }
        let selected: Vec<usize> =
            (0..n).filter(|&i| !solutions[i].decision.has(cat) && problems[i].has_candidate(cat)).collect();
        let options = trials(
            problems,
            &solutions,
            selected,
            |p, _| {
                p.required.insert(cat);
            },
            &mut report.warnings,
        )?;
        let missing = required - count;
        if options.len() < missing {
            let msg = format!(
                "horizon {horizon}: only {} of {missing} additional {cat} installations are feasible",
                options.len()
            );
            warn!("{msg}");
            report.warnings.push(msg);
        }
        for t in options.into_iter().take(missing) {
            problems[t.index].required.insert(cat);
            let mut s = t.solution;
            s.forced = solutions[t.index].forced.clone();
            s.forced.push(format!("+{cat}"));
            report.forced.push(s.building_id.clone());
            solutions[t.index] = s;
        }
    }

    if let Some(&rate) = config.max_refurbishment_rate.get(&horizon) {
        let cap = capped_count(rate, n);
        report.refurbishment_cap = Some(cap);
        let refurb = TechCategory::Refurbishment;
        let count = solutions.iter().filter(|s| s.decision.has(refurb)).count();
        if count > cap {
            let selected: Vec<usize> = (0..n).filter(|&i| solutions[i].decision.has(refurb)).collect();
            let rate_categories: Vec<TechCategory> = rates.iter().map(|(c, _)| *c).collect();
            let keep = |p: &mut ExpansionProblem, s: &BuildingSolution| {
                p.excluded.insert(refurb);
                p.required.remove(&refurb);
                for cat in &rate_categories {
                    if s.decision.has(*cat) {
                        p.required.insert(*cat);
                    }
                }
            };
            let options = trials(problems, &solutions, selected, keep, &mut report.warnings)?;
            let surplus = count - cap;
            if options.len() < surplus {
                let msg =
                    format!("horizon {horizon}: only {} of {surplus} refurbishments can be revoked", options.len());
                warn!("{msg}");
                report.warnings.push(msg);
            }
            for t in options.into_iter().take(surplus) {
                let before = solutions[t.index].clone();
                keep(&mut problems[t.index], &before);
                let mut s = t.solution;
                s.forced = before.forced;
                s.forced.push(format!("-{refurb}"));
                report.revoked.push(s.building_id.clone());
                solutions[t.index] = s;
            }
        }
    }
    Ok((solutions, report))
}

/// Plans the late horizon without existing assets, then derives the early one from it.
pub fn myopic_stage(
    stock: &BuildingStock,
    config: &ScenarioConfig,
    technologies: &[TechnologySpec],
    late_prices: &BTreeMap<String, f64>,
    early_prices: &BTreeMap<String, f64>,
) -> Result<(StockPlan, StockPlan), BuildingError> {
    let late = solve_stock(stock, config, technologies, config.late_horizon(), late_prices, Stage::Unrestricted)?;
    let early =
        solve_stock(stock, config, technologies, config.early_horizon(), early_prices, Stage::DerivedFrom(&late))?;
    Ok((late, early))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Totals {
    /// EUR per year.
    pub capex: f64,
    pub opex: f64,
    /// kg CO2 per year.
    pub emissions: f64,
    pub emis_fixed: f64,
    pub emis_operational: f64,
    /// kWh per year.
    pub grid_import: f64,
    pub grid_export: f64,
}

/// Stock totals; operational emissions already include imported electricity.
pub fn evaluate_totals(solutions: &[BuildingSolution]) -> Totals {
    let mut t = Totals::default();
    for s in solutions {
        let e = &s.evaluation;
        t.capex += e.cost_capex;
        t.opex += e.cost_opex;
        t.emis_fixed += e.emis_fixed;
        t.emis_operational += e.emis_operational;
        t.grid_import += s.annual_import;
        t.grid_export += s.annual_export;
    }
    t.emissions = t.emis_fixed + t.emis_operational;
    t
}

/// Emissions caused by drawing `import` kWh from the grid.
pub fn grid_emissions(import: f64, factor: f64) -> f64 {
    import * factor
}
