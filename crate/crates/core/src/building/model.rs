//! Per-building expansion and operation problem.
//!
//! Decision variables per candidate technology are a binary `x_bin` and a
//! capacity `x_dim`. Heat supply uses one share variable `w` per heat
//! technology (output is `w` times the demand profile), and a product
//! variable `z = w * r` with the refurbishment binary `r`, linearised by
//! McCormick bounds, to express the reduced demand of refurbished buildings.
//! At most one heat technology can be installed, so on every integer
//! assignment the shares are exactly 0 or 1 and the heat balance holds per
//! step. Battery storage is cyclic within each storage day.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::annuity::{build_coefficients, AnnuityCoefficients};
use super::BuildingError;
use crate::scenario::{Building, ScenarioConfig, TechCategory, TechnologySpec, TimeGrid};
use crate::solver::{LinearProgram, MilpError, MilpProblem, Relation};

const CLEAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Capacity bounds already scaled to the building.
    pub spec: TechnologySpec,
    /// An asset already in place: no investment cost or embodied emissions.
    pub existing: bool,
}

impl Candidate {
    pub fn new(spec: TechnologySpec) -> Self {
        Self { spec, existing: false }
    }

    pub fn category(&self) -> TechCategory {
        self.spec.category
    }

    fn coefficients(&self, rate: f64) -> AnnuityCoefficients {
        let mut c = build_coefficients(&self.spec, rate);
        if self.existing {
            c.capex_fix_annuity = 0.0;
            c.capex_var_annuity = 0.0;
            c.emis_fix_annuity = 0.0;
            c.emis_var_annuity = 0.0;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionProblem {
    pub building: Building,
    pub candidates: Vec<Candidate>,
    pub time_grid: TimeGrid,
    /// kWh per kWp per step.
    pub pv_yield: Vec<f64>,
    pub eta: f64,
    pub discount_rate: f64,
    /// ct/kWh including any grid-expansion surcharge.
    pub electricity_price: f64,
    /// ct/kWh paid for exported energy.
    pub feed_in_tariff: f64,
    pub grid_emission_factor: f64,
    pub refurbishment_factor: f64,
    pub battery_round_trip: f64,
    /// Categories of which at least one candidate must be installed.
    pub required: BTreeSet<TechCategory>,
    /// Categories that must not be installed.
    pub excluded: BTreeSet<TechCategory>,
}

impl ExpansionProblem {
    /// Problem with the economic parameters of `config`.
    pub fn new(
        building: Building,
        candidates: Vec<Candidate>,
        time_grid: TimeGrid,
        pv_yield: Vec<f64>,
        config: &ScenarioConfig,
        electricity_price: f64,
    ) -> Self {
        Self {
            building,
            candidates,
            time_grid,
            pv_yield,
            eta: config.eta,
            discount_rate: config.discount_rate,
            electricity_price,
            feed_in_tariff: config.feed_in_tariff,
            grid_emission_factor: config.grid_emission_factor,
            refurbishment_factor: config.refurbishment_factor,
            battery_round_trip: config.battery_round_trip,
            required: BTreeSet::new(),
            excluded: BTreeSet::new(),
        }
    }

    /// Heat demand before any refurbishment chosen in this problem.
    pub fn base_heat_demand(&self) -> Vec<f64> {
        let keep = if self.building.refurbished { 1.0 - self.refurbishment_factor } else { 1.0 };
        self.building.heat_demand.iter().map(|d| d * keep).collect()
    }

    pub fn has_candidate(&self, category: TechCategory) -> bool {
        !self.excluded.contains(&category) && self.candidates.iter().any(|c| c.category() == category)
    }

    fn refurbishment_available(&self) -> bool {
        !self.building.refurbished && self.has_candidate(TechCategory::Refurbishment)
    }

    fn invalid(&self, reason: impl Into<String>) -> BuildingError {
        BuildingError::InvalidProblem { building: self.building.id.clone(), reason: reason.into() }
    }

    pub fn validate(&self) -> Result<(), BuildingError> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(self.invalid("eta must lie in [0, 1]"));
        }
        if self.candidates.is_empty() {
            return Err(self.invalid("no candidate technologies"));
        }
        let n = self.time_grid.len();
        if self.building.heat_demand.len() != n || self.building.electric_base_demand.len() != n {
            return Err(self.invalid("demand series length differs from the time grid"));
        }
        if self.pv_yield.len() != n {
            return Err(self.invalid("PV yield series length differs from the time grid"));
        }
        for c in &self.candidates {
            c.spec.validate().map_err(|e| self.invalid(e.to_string()))?;
            if let crate::scenario::Efficiency::Series(s) = &c.spec.efficiency_or_cop {
                if s.len() != n {
                    return Err(self.invalid(format!(
                        "efficiency series of {} has {} steps, expected {n}",
                        c.spec.id,
                        s.len()
                    )));
                }
            }
        }
        for cat in [TechCategory::Battery, TechCategory::Refurbishment] {
            if self.candidates.iter().filter(|c| c.category() == cat).count() > 1 {
                return Err(self.invalid(format!("at most one {cat} candidate supported")));
            }
        }
        if !(self.battery_round_trip > 0.0 && self.battery_round_trip <= 1.0) {
            return Err(self.invalid("battery round-trip efficiency must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.refurbishment_factor) {
            return Err(self.invalid("refurbishment factor must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Explains why no plan exists, checking the heat balance first.
    fn diagnose_infeasible(&self) -> BuildingError {
        let demand = self.base_heat_demand();
        let peak = demand.iter().copied().fold(0.0, f64::max);
        let relief = if self.refurbishment_available() { 1.0 - self.refurbishment_factor } else { 1.0 };
        let best = self
            .candidates
            .iter()
            .filter(|c| c.category().is_heat_supply() && !self.excluded.contains(&c.category()))
            .map(|c| c.spec.max_capacity)
            .fold(0.0, f64::max);
        let reason = if peak > 0.0 && best + 1e-9 < peak * relief {
            format!(
                "heat balance cannot be met: peak demand {:.2} kW exceeds the largest admissible heat capacity {:.2} kW",
                peak * relief,
                best
            )
        } else if let Some(cat) = self.required.iter().find(|c| !self.has_candidate(**c)) {
            format!("required technology {cat} is not among the admissible candidates")
        } else {
            "heat or electric balance cannot be met with the required technologies".to_string()
        };
        BuildingError::Infeasible { building: self.building.id.clone(), reason }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechDecision {
    pub id: String,
    pub category: TechCategory,
    pub existing: bool,
    pub x_bin: bool,
    /// kW, kWp, kWh, or 1 for refurbishment.
    pub x_dim: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExpansionDecision {
    pub technologies: Vec<TechDecision>,
}

impl ExpansionDecision {
    pub fn installed(&self) -> impl Iterator<Item = &TechDecision> {
        self.technologies.iter().filter(|t| t.x_bin)
    }

    pub fn has(&self, category: TechCategory) -> bool {
        self.installed().any(|t| t.category == category)
    }

    pub fn heat_supply(&self) -> Option<&TechDecision> {
        self.installed().find(|t| t.category.is_heat_supply())
    }

    pub fn capacity(&self, category: TechCategory) -> f64 {
        self.installed().filter(|t| t.category == category).map(|t| t.x_dim).sum()
    }
}

/// Per-step energy flows in kWh.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OperationSchedule {
    /// Useful output per candidate (heat, PV generation, battery discharge).
    pub output: Vec<Vec<f64>>,
    pub heat_pump_input: Vec<f64>,
    pub battery_charge: Vec<f64>,
    pub battery_discharge: Vec<f64>,
    pub battery_soc: Vec<f64>,
    pub grid_import: Vec<f64>,
    pub grid_export: Vec<f64>,
}

impl OperationSchedule {
    /// Net grid exchange per step; positive means drawing from the grid.
    pub fn net_exchange(&self) -> Vec<f64> {
        self.grid_import.iter().zip(&self.grid_export).map(|(i, e)| i - e).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanEvaluation {
    /// EUR per year.
    pub cost_capex: f64,
    pub cost_opex: f64,
    /// kg CO2 per year.
    pub emis_fixed: f64,
    pub emis_operational: f64,
    pub objective_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingSolution {
    pub building_id: String,
    pub decision: ExpansionDecision,
    #[serde(skip)]
    pub schedule: OperationSchedule,
    pub evaluation: PlanEvaluation,
    /// kWh per year.
    pub annual_import: f64,
    pub annual_export: f64,
    /// Branch-and-bound nodes explored.
    pub nodes: usize,
    /// Technologies forced on or off by stock-level rates.
    pub forced: Vec<String>,
}

struct Vars {
    bin: usize,
    dim: Option<usize>,
    share: Option<usize>,
    product: Option<usize>,
}

struct Formulation {
    milp: MilpProblem,
    vars: Vec<Vars>,
    import: Vec<usize>,
    export: Vec<usize>,
    charge: Vec<usize>,
    discharge: Vec<usize>,
    soc: Vec<usize>,
}

fn formulate(p: &ExpansionProblem) -> Formulation {
    let grid = &p.time_grid;
    let steps = grid.len();
    let weight = &grid.step_weight;
    let (wc, we) = (1.0 - p.eta, p.eta);
    let demand = p.base_heat_demand();
    let annual_heat = grid.annual(&demand);
    let peak = demand.iter().copied().fold(0.0, f64::max);
    let annual_yield = grid.annual(&p.pv_yield);
    let f = p.refurbishment_factor;

    let mut lp = LinearProgram::new();
    let mut binaries: Vec<(usize, Vec<usize>, i32)> = Vec::new();
    let mut vars = Vec::with_capacity(p.candidates.len());

    let refurb = p.candidates.iter().position(|c| c.category() == TechCategory::Refurbishment);
    let refurb_active = refurb.is_some() && p.refurbishment_available();
    let has_battery = p.candidates.iter().any(|c| c.category() == TechCategory::Battery);

    for c in &p.candidates {
        let k = c.coefficients(p.discount_rate);
        let cat = c.category();
        let mut fixed = wc * k.capex_fix_annuity + we * k.emis_fix_annuity;
        let per_unit = wc * k.capex_var_annuity + we * k.emis_var_annuity;
        let per_output = wc * k.opex_per_output + we * k.emis_per_output;
        if cat == TechCategory::Refurbishment {
            fixed += per_unit;
        }
        let allowed = !p.excluded.contains(&cat) && !(cat == TechCategory::Refurbishment && !refurb_active);
        let bin = lp.add_var(fixed, 0.0, if allowed { 1.0 } else { 0.0 });
        let mut v = Vars { bin, dim: None, share: None, product: None };
        match cat {
            TechCategory::Refurbishment => {}
            TechCategory::Pv => {
                v.dim = Some(lp.add_var(per_unit + per_output * annual_yield, 0.0, c.spec.max_capacity));
            }
            TechCategory::Battery => {
                v.dim = Some(lp.add_var(per_unit, 0.0, c.spec.max_capacity));
            }
            _ => {
                v.dim = Some(lp.add_var(per_unit, 0.0, c.spec.max_capacity));
                v.share = Some(lp.add_var(per_output * annual_heat, 0.0, 1.0));
                if refurb_active {
                    v.product = Some(lp.add_var(-f * per_output * annual_heat, 0.0, 1.0));
                }
            }
        }
        vars.push(v);
    }

    let price = wc * p.electricity_price / 100.0 + we * p.grid_emission_factor;
    let tariff = wc * p.feed_in_tariff / 100.0;
    let import: Vec<usize> = (0..steps).map(|t| lp.add_var(weight[t] * price, 0.0, f64::INFINITY)).collect();
    let export: Vec<usize> = (0..steps).map(|t| lp.add_var(-weight[t] * tariff, 0.0, f64::INFINITY)).collect();

    let (mut charge, mut discharge, mut soc) = (Vec::new(), Vec::new(), Vec::new());
    if has_battery {
        let bi = p.candidates.iter().position(|c| c.category() == TechCategory::Battery).unwrap();
        let k = p.candidates[bi].coefficients(p.discount_rate);
        let per_output = wc * k.opex_per_output + we * k.emis_per_output;
        let capacity = p.candidates[bi].spec.max_capacity;
        charge = (0..steps).map(|_| lp.add_var(0.0, 0.0, f64::INFINITY)).collect();
        discharge = (0..steps).map(|t| lp.add_var(weight[t] * per_output, 0.0, f64::INFINITY)).collect();
        soc = (0..steps).map(|_| lp.add_var(0.0, 0.0, capacity)).collect();
        let e = vars[bi].dim.unwrap();
        let eff = p.battery_round_trip.sqrt();
        for day in grid.days() {
            for t in day.clone() {
                let prev = if t == day.start { day.end - 1 } else { t - 1 };
                let mut terms = vec![(soc[t], 1.0), (charge[t], -eff), (discharge[t], 1.0 / eff)];
                if prev != t {
                    terms.push((soc[prev], -1.0));
                } else {
                    // A one-step cycle keeps its state.
                    terms[0].1 = 0.0;
                }
                lp.add_constraint(terms, Relation::Eq, 0.0);
                lp.add_constraint(vec![(soc[t], 1.0), (e, -1.0)], Relation::Le, 0.0);
            }
        }
    }

    // Electric balance per step.
    for t in 0..steps {
        let mut terms = vec![(import[t], 1.0), (export[t], -1.0)];
        if has_battery {
            terms.push((charge[t], -1.0));
            terms.push((discharge[t], 1.0));
        }
        for (c, v) in p.candidates.iter().zip(&vars) {
            match c.category() {
                TechCategory::Pv if p.pv_yield[t] != 0.0 => terms.push((v.dim.unwrap(), p.pv_yield[t])),
                TechCategory::HeatPump if demand[t] > 0.0 => {
                    let k = demand[t] / c.spec.efficiency_or_cop.at(t);
                    terms.push((v.share.unwrap(), -k));
                    if let Some(z) = v.product {
                        terms.push((z, f * k));
                    }
                }
                _ => {}
            }
        }
        lp.add_constraint(terms, Relation::Eq, p.building.electric_base_demand[t]);
    }

    // Capacity linking.
    for (c, v) in p.candidates.iter().zip(&vars) {
        if let Some(dim) = v.dim {
            lp.add_constraint(vec![(dim, 1.0), (v.bin, -c.spec.max_capacity)], Relation::Le, 0.0);
            if c.spec.min_capacity > 0.0 {
                lp.add_constraint(vec![(dim, 1.0), (v.bin, -c.spec.min_capacity)], Relation::Ge, 0.0);
            }
        }
    }

    // Heat supply.
    let r = refurb.filter(|_| refurb_active).map(|i| vars[i].bin);
    let mut balance = Vec::new();
    let mut heat_bins = Vec::new();
    for v in &vars {
        let Some(w) = v.share else { continue };
        heat_bins.push((v.bin, 1.0));
        balance.push((w, 1.0));
        lp.add_constraint(vec![(w, 1.0), (v.bin, -1.0)], Relation::Le, 0.0);
        let mut cap = vec![(w, peak), (v.dim.unwrap(), -1.0)];
        if let (Some(z), Some(r)) = (v.product, r) {
            balance.push((z, -f));
            cap.push((z, -f * peak));
            lp.add_constraint(vec![(z, 1.0), (r, -1.0)], Relation::Le, 0.0);
            lp.add_constraint(vec![(z, 1.0), (w, -1.0)], Relation::Le, 0.0);
            lp.add_constraint(vec![(z, 1.0), (w, -1.0), (r, -1.0)], Relation::Ge, -1.0);
        }
        if peak > 0.0 {
            lp.add_constraint(cap, Relation::Le, 0.0);
        }
    }
    if peak > 0.0 {
        if let Some(r) = r {
            balance.push((r, f));
        }
        lp.add_constraint(balance, Relation::Eq, 1.0);
    }
    if heat_bins.len() > 1 {
        lp.add_constraint(heat_bins, Relation::Le, 1.0);
    }
    for cat in &p.required {
        let terms: Vec<(usize, f64)> =
            p.candidates.iter().zip(&vars).filter(|(c, _)| c.category() == *cat).map(|(_, v)| (v.bin, 1.0)).collect();
        // An empty row with rhs 1 makes the problem infeasible, as it should.
        lp.add_constraint(terms, Relation::Ge, 1.0);
    }

    for (i, (c, v)) in p.candidates.iter().zip(&vars).enumerate() {
        let mut deps: Vec<usize> = [v.dim, v.share, v.product].into_iter().flatten().collect();
        let priority = match c.category() {
            TechCategory::Battery => {
                deps.extend(charge.iter().chain(&discharge).chain(&soc));
                3
            }
            TechCategory::Refurbishment => {
                deps.extend(vars.iter().filter_map(|o| o.product));
                2
            }
            TechCategory::Pv => 0,
            _ => 1,
        };
        binaries.push((v.bin, deps, priority * 1000 - i as i32));
    }

    let mut milp = MilpProblem::new(lp);
    for (var, deps, priority) in binaries {
        milp.add_binary(var, deps, priority);
    }
    Formulation { milp, vars, import, export, charge, discharge, soc }
}

/// Finds the plan minimising `(1 - eta) * cost + eta * emissions`.
pub fn solve_building(problem: &ExpansionProblem) -> Result<BuildingSolution, BuildingError> {
    problem.validate()?;
    let form = formulate(problem);
    let sol = match form.milp.solve() {
        Ok(s) => s,
        Err(MilpError::Infeasible) => return Err(problem.diagnose_infeasible()),
        Err(e) => return Err(BuildingError::Model { building: problem.building.id.clone(), reason: e.to_string() }),
    };
    Ok(extract(problem, &form, &sol.x, sol.nodes))
}

fn clean(v: f64) -> f64 {
    if v.abs() < CLEAN_TOL {
        0.0
    } else {
        v
    }
}

fn extract(p: &ExpansionProblem, form: &Formulation, x: &[f64], nodes: usize) -> BuildingSolution {
    let steps = p.time_grid.len();
    let demand = p.base_heat_demand();
    let f = p.refurbishment_factor;
    let refurbished =
        p.candidates.iter().zip(&form.vars).any(|(c, v)| c.category() == TechCategory::Refurbishment && x[v.bin] > 0.5);

    let mut technologies = Vec::with_capacity(p.candidates.len());
    let mut output = Vec::with_capacity(p.candidates.len());
    let mut heat_pump_input = vec![0.0; steps];
    for (c, v) in p.candidates.iter().zip(&form.vars) {
        let mut on = x[v.bin] > 0.5;
        let mut dim = match (c.category(), v.dim) {
            (TechCategory::Refurbishment, _) => 1.0,
            (_, Some(d)) => clean(x[d]),
            _ => 0.0,
        };
        let k = c.coefficients(p.discount_rate);
        let free = k.capex_fix_annuity == 0.0 && k.emis_fix_annuity == 0.0;
        if on
            && dim == 0.0
            && free
            && !p.required.contains(&c.category())
            && c.category() != TechCategory::Refurbishment
        {
            on = false;
        }
        if !on {
            dim = 0.0;
        }
        let series: Vec<f64> = match c.category() {
            TechCategory::Pv => p.pv_yield.iter().map(|y| y * dim).collect(),
            TechCategory::Battery => form.discharge.iter().map(|&d| clean(x[d])).collect(),
            TechCategory::Refurbishment => vec![0.0; steps],
            _ => {
                let share = if on { 1.0 - if refurbished { f } else { 0.0 } } else { 0.0 };
                let out: Vec<f64> = demand.iter().map(|d| d * share).collect();
                if c.category() == TechCategory::HeatPump {
                    for t in 0..steps {
                        heat_pump_input[t] += out[t] / c.spec.efficiency_or_cop.at(t);
                    }
                }
                out
            }
        };
        output.push(series);
        technologies.push(TechDecision {
            id: c.spec.id.clone(),
            category: c.category(),
            existing: c.existing,
            x_bin: on,
            x_dim: dim,
        });
    }

    let battery_charge: Vec<f64> = form.charge.iter().map(|&j| clean(x[j])).collect();
    let battery_discharge: Vec<f64> = form.discharge.iter().map(|&j| clean(x[j])).collect();
    let battery_soc: Vec<f64> = form.soc.iter().map(|&j| clean(x[j])).collect();
    // Recompute the grid exchange from the rounded plan so the balance holds exactly.
    let mut grid_import = vec![0.0; steps];
    let mut grid_export = vec![0.0; steps];
    for t in 0..steps {
        let mut net = p.building.electric_base_demand[t] + heat_pump_input[t];
        for (c, out) in p.candidates.iter().zip(&output) {
            if c.category() == TechCategory::Pv {
                net -= out[t];
            }
        }
        if !battery_charge.is_empty() {
            net += battery_charge[t] - battery_discharge[t];
        }
        let lp_net = x[form.import[t]] - x[form.export[t]];
        debug_assert!((net - lp_net).abs() < 1e-6 * (1.0 + net.abs()), "balance drift at step {t}");
        if net >= 0.0 {
            grid_import[t] = clean(net);
        } else {
            grid_export[t] = clean(-net);
        }
    }

    let schedule = OperationSchedule {
        output,
        heat_pump_input,
        battery_charge,
        battery_discharge,
        battery_soc,
        grid_import,
        grid_export,
    };
    let decision = ExpansionDecision { technologies };
    let evaluation = evaluate(p, &decision, &schedule);
    BuildingSolution {
        building_id: p.building.id.clone(),
        annual_import: p.time_grid.annual(&schedule.grid_import),
        annual_export: p.time_grid.annual(&schedule.grid_export),
        decision,
        schedule,
        evaluation,
        nodes,
        forced: Vec::new(),
    }
}

/// Annual cost and emission terms of a plan under the problem's prices.
pub fn evaluate(p: &ExpansionProblem, decision: &ExpansionDecision, schedule: &OperationSchedule) -> PlanEvaluation {
    let grid = &p.time_grid;
    let mut e = PlanEvaluation::default();
    for ((c, d), out) in p.candidates.iter().zip(&decision.technologies).zip(&schedule.output) {
        if !d.x_bin {
            continue;
        }
        let k = c.coefficients(p.discount_rate);
        e.cost_capex += k.capex_fix_annuity + k.capex_var_annuity * d.x_dim;
        e.emis_fixed += k.emis_fix_annuity + k.emis_var_annuity * d.x_dim;
        let produced = grid.annual(out);
        e.cost_opex += k.opex_per_output * produced;
        e.emis_operational += k.emis_per_output * produced;
    }
    let imported = grid.annual(&schedule.grid_import);
    let exported = grid.annual(&schedule.grid_export);
    e.cost_opex += p.electricity_price / 100.0 * imported - p.feed_in_tariff / 100.0 * exported;
    e.emis_operational += p.grid_emission_factor * imported;
    e.objective_value = (1.0 - p.eta) * (e.cost_capex + e.cost_opex) + p.eta * (e.emis_fixed + e.emis_operational);
    e
}

/// Largest per-step violation of the heat and electric balances in kWh.
pub fn balance_residuals(p: &ExpansionProblem, s: &BuildingSolution) -> (f64, f64) {
    let steps = p.time_grid.len();
    let refurbished = s.decision.has(TechCategory::Refurbishment);
    let keep = if refurbished { 1.0 - p.refurbishment_factor } else { 1.0 };
    let demand = p.base_heat_demand();
    let (mut heat, mut electric) = (0.0f64, 0.0f64);
    for t in 0..steps {
        let supplied: f64 = p
            .candidates
            .iter()
            .zip(&s.schedule.output)
            .filter(|(c, _)| c.category().is_heat_supply())
            .map(|(_, o)| o[t])
            .sum();
        heat = heat.max((demand[t] * keep - supplied).max(0.0));
        let pv: f64 = p
            .candidates
            .iter()
            .zip(&s.schedule.output)
            .filter(|(c, _)| c.category() == TechCategory::Pv)
            .map(|(_, o)| o[t])
            .sum();
        let sch = &s.schedule;
        let (ch, dis) =
            if sch.battery_charge.is_empty() { (0.0, 0.0) } else { (sch.battery_charge[t], sch.battery_discharge[t]) };
        let lhs = p.building.electric_base_demand[t] + sch.heat_pump_input[t] + ch;
        let rhs = pv + dis + sch.grid_import[t] - sch.grid_export[t];
        electric = electric.max((lhs - rhs).abs());
    }
    (heat, electric)
}
