#![allow(dead_code)]

use std::path::PathBuf;

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use num_complex::Complex64;
use rand::Rng;

use gridloop::building::{Candidate, ExpansionProblem};
use gridloop::powerflow::{units, StepResult};
use gridloop::scenario::{
    Building, BuildingKind, Efficiency, GridModel, GridNode, Line, ScenarioConfig, TechCategory, TechnologySpec,
    TimeGrid, Transformer, TransformerOption,
};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn day_grid() -> TimeGrid {
    let mut g = TimeGrid::representative_days(2030);
    g.steps.truncate(24);
    g.step_weight = vec![365.0; 24];
    g
}

fn annuity(rate: f64, n: u32) -> f64 {
    if rate == 0.0 {
        return 1.0 / n as f64;
    }
    let q = (1.0 + rate).powi(n as i32);
    rate * q / (q - 1.0)
}

fn spec(rng: &mut impl Rng, id: &str, category: TechCategory, max_capacity: f64) -> TechnologySpec {
    let (capex_fixed, capex_per_unit, opex, emis_out) = match category {
        TechCategory::HeatPump => (rng.gen_range(4000.0..14000.0), rng.gen_range(300.0..1200.0), 0.0, 0.0),
        TechCategory::GasBoiler => {
            (rng.gen_range(2000.0..6000.0), rng.gen_range(50.0..150.0), rng.gen_range(0.08..0.15), 0.22)
        }
        TechCategory::OilBoiler => {
            (rng.gen_range(3000.0..7000.0), rng.gen_range(60.0..160.0), rng.gen_range(0.08..0.15), 0.30)
        }
        TechCategory::PelletBoiler => {
            (rng.gen_range(8000.0..16000.0), rng.gen_range(150.0..400.0), rng.gen_range(0.05..0.10), 0.03)
        }
        TechCategory::Pv => (rng.gen_range(500.0..2500.0), rng.gen_range(800.0..1600.0), 0.0, 0.0),
        TechCategory::Battery => (rng.gen_range(500.0..2000.0), rng.gen_range(300.0..900.0), 0.0, 0.0),
        TechCategory::Refurbishment => (rng.gen_range(8000.0..30000.0), 0.0, 0.0, 0.0),
    };
    let (min_capacity, max_capacity) =
        if category == TechCategory::Refurbishment { (1.0, 1.0) } else { (rng.gen_range(0.0..1.0), max_capacity) };
    let efficiency_or_cop = if category == TechCategory::HeatPump {
        Efficiency::Series((0..24).map(|_| rng.gen_range(2.5..4.2)).collect())
    } else {
        Efficiency::Constant(0.9)
    };
    TechnologySpec {
        id: id.to_string(),
        category,
        capex_fixed,
        capex_per_unit,
        opex_per_unit_output: opex,
        emis_fixed: rng.gen_range(0.0..4000.0),
        emis_per_unit: rng.gen_range(0.0..400.0),
        emis_per_output: emis_out,
        lifetime: rng.gen_range(15..=30),
        efficiency_or_cop,
        min_capacity,
        max_capacity,
    }
}

/// A one-day building problem with up to seven candidate technologies.
pub fn random_problem(rng: &mut impl Rng, eta: f64) -> ExpansionProblem {
    let heat: Vec<f64> = (0..24).map(|_| rng.gen_range(0.5..4.0)).collect();
    let peak = heat.iter().copied().fold(0.0, f64::max);
    let building = Building {
        id: "B".into(),
        kind: BuildingKind::Detached,
        construction_year: 1970,
        dwellings: 1,
        heat_demand: heat,
        electric_base_demand: (0..24).map(|_| rng.gen_range(0.2..1.5)).collect(),
        existing_assets: vec![],
        grid_node: "N".into(),
        refurbished: false,
    };
    let mut candidates = Vec::new();
    // One boiler always covers the peak so every instance is feasible.
    candidates.push(spec(rng, "gas", TechCategory::GasBoiler, 2.0 * peak));
    for (id, cat) in [
        ("hp", TechCategory::HeatPump),
        ("oil", TechCategory::OilBoiler),
        ("pellet", TechCategory::PelletBoiler),
        ("pv", TechCategory::Pv),
        ("battery", TechCategory::Battery),
        ("refurb", TechCategory::Refurbishment),
    ] {
        if rng.gen_bool(0.75) {
            let cap = match cat {
                TechCategory::Pv => 10.0,
                TechCategory::Battery => 15.0,
                _ => rng.gen_range(0.6..1.5) * peak,
            };
            candidates.push(spec(rng, id, cat, cap));
        }
    }
    let config = ScenarioConfig {
        eta,
        discount_rate: 0.03,
        feed_in_tariff: rng.gen_range(3.0..10.0),
        grid_emission_factor: rng.gen_range(0.2..0.5),
        refurbishment_factor: rng.gen_range(0.2..0.5),
        ..Default::default()
    };
    let pv_yield = (0..24).map(|h| if (7..18).contains(&h) { rng.gen_range(0.0..0.8) } else { 0.0 }).collect();
    ExpansionProblem::new(
        building,
        candidates.into_iter().map(Candidate::new).collect(),
        day_grid(),
        pv_yield,
        &config,
        rng.gen_range(20.0..40.0),
    )
}

/// Best objective over every on/off assignment, each solved as an LP with heat supply fixed.
pub fn enumerate_building(p: &ExpansionProblem) -> Option<f64> {
    let k = p.candidates.len();
    assert!(k <= 8);
    (0..1u32 << k).filter_map(|mask| fixed_assignment(p, |i| mask & (1 << i) != 0)).min_by(f64::total_cmp)
}

fn fixed_assignment(p: &ExpansionProblem, on: impl Fn(usize) -> bool) -> Option<f64> {
    let (wc, we) = (1.0 - p.eta, p.eta);
    let steps = p.time_grid.len();
    let w = &p.time_grid.step_weight;
    let cats: Vec<TechCategory> = p.candidates.iter().map(|c| c.spec.category).collect();
    let refurbished = cats.iter().enumerate().any(|(i, c)| *c == TechCategory::Refurbishment && on(i));
    let heat_on: Vec<usize> = (0..cats.len()).filter(|&i| on(i) && cats[i].is_heat_supply()).collect();
    if heat_on.len() != 1 {
        return None;
    }
    let keep = if refurbished { 1.0 - p.refurbishment_factor } else { 1.0 };
    let demand: Vec<f64> = p.building.heat_demand.iter().map(|d| d * keep).collect();
    let peak = demand.iter().copied().fold(0.0, f64::max);
    let annual_heat: f64 = demand.iter().zip(w).map(|(d, w)| d * w).sum();

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let mut constant = 0.0;
    let mut pv = None;
    let mut battery = None;
    let mut hp_input = vec![0.0; steps];
    for (i, c) in p.candidates.iter().enumerate() {
        if !on(i) {
            continue;
        }
        let s = &c.spec;
        let af = annuity(p.discount_rate, s.lifetime);
        let life = s.lifetime as f64;
        constant += wc * s.capex_fixed * af + we * s.emis_fixed / life;
        let per_unit = wc * s.capex_per_unit * af + we * s.emis_per_unit / life;
        let per_output = wc * s.opex_per_unit_output + we * s.emis_per_output;
        match s.category {
            TechCategory::Refurbishment => constant += per_unit,
            TechCategory::Pv => {
                let annual_yield: f64 = p.pv_yield.iter().zip(w).map(|(y, w)| y * w).sum();
                pv = Some(lp.add_var(per_unit + per_output * annual_yield, (s.min_capacity, s.max_capacity)));
            }
            TechCategory::Battery => {
                battery = Some((lp.add_var(per_unit, (s.min_capacity, s.max_capacity)), per_output));
            }
            _ => {
                let lo = s.min_capacity.max(peak);
                if lo > s.max_capacity + 1e-12 {
                    return None;
                }
                lp.add_var(per_unit, (lo.min(s.max_capacity), s.max_capacity));
                constant += per_output * annual_heat;
                if s.category == TechCategory::HeatPump {
                    for t in 0..steps {
                        hp_input[t] = demand[t] / s.efficiency_or_cop.at(t);
                    }
                }
            }
        }
    }
    let price = wc * p.electricity_price / 100.0 + we * p.grid_emission_factor;
    let tariff = wc * p.feed_in_tariff / 100.0;
    let import: Vec<Variable> = (0..steps).map(|t| lp.add_var(w[t] * price, (0.0, f64::INFINITY))).collect();
    let export: Vec<Variable> = (0..steps).map(|t| lp.add_var(-w[t] * tariff, (0.0, f64::INFINITY))).collect();
    let mut storage: Option<(Vec<Variable>, Vec<Variable>)> = None;
    if let Some((e, per_output)) = battery {
        let eff = p.battery_round_trip.sqrt();
        let ch: Vec<Variable> = (0..steps).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
        let dis: Vec<Variable> = (0..steps).map(|t| lp.add_var(w[t] * per_output, (0.0, f64::INFINITY))).collect();
        let soc: Vec<Variable> = (0..steps).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
        for t in 0..steps {
            let prev = if t == 0 { steps - 1 } else { t - 1 };
            lp.add_constraint(
                [(soc[t], 1.0), (soc[prev], -1.0), (ch[t], -eff), (dis[t], 1.0 / eff)],
                ComparisonOp::Eq,
                0.0,
            );
            lp.add_constraint([(soc[t], 1.0), (e, -1.0)], ComparisonOp::Le, 0.0);
        }
        storage = Some((ch, dis));
    }
    for t in 0..steps {
        let mut terms = vec![(import[t], 1.0), (export[t], -1.0)];
        if let Some(v) = pv {
            terms.push((v, p.pv_yield[t]));
        }
        if let Some((ch, dis)) = &storage {
            terms.push((ch[t], -1.0));
            terms.push((dis[t], 1.0));
        }
        lp.add_constraint(terms.as_slice(), ComparisonOp::Eq, p.building.electric_base_demand[t] + hp_input[t]);
    }
    lp.solve().ok().map(|s| s.objective() + constant)
}

/// Random radial feeder with `n` nodes besides the transformer.
pub fn random_tree(rng: &mut impl Rng, n: usize) -> GridModel {
    let mut nodes = vec![GridNode { id: "T".into(), nominal_voltage_v: 400.0, buildings: vec![] }];
    let mut lines = Vec::new();
    for i in 1..=n {
        nodes.push(GridNode { id: format!("N{i:02}"), nominal_voltage_v: 400.0, buildings: vec![] });
        let parent = if i == 1 { 0 } else { rng.gen_range(0..i) };
        lines.push(Line {
            id: format!("L{i:02}"),
            from_node: nodes[parent].id.clone(),
            to_node: nodes[i].id.clone(),
            length_m: rng.gen_range(15.0..80.0),
            r_ohm_per_km: rng.gen_range(0.1..0.45),
            x_ohm_per_km: rng.gen_range(0.06..0.09),
            rated_current_a: 275.0,
            cable_type: "NAYY 4x150".into(),
            cost_eur_per_km: 90_000.0,
            origin: None,
        });
    }
    GridModel {
        nodes,
        lines,
        transformer: Transformer {
            node_id: "T".into(),
            rated_kva: 400.0,
            units: 1,
            cost_eur: 17_000.0,
            slack_voltage_pu: rng.gen_range(0.98..1.03),
            options: vec![TransformerOption { rated_kva: 630.0, cost_eur: 22_000.0 }],
        },
    }
}

/// Largest |S_computed + S_load| over non-slack nodes, per unit, from a fresh admittance matrix.
pub fn power_mismatch(grid: &GridModel, step: &StepResult, p_kw: &[f64], q_kvar: &[f64]) -> f64 {
    let n = grid.nodes.len();
    let index = |id: &str| grid.nodes.iter().position(|x| x.id == id).unwrap();
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for l in &grid.lines {
        let z = Complex64::new(units::ohm_to_pu(l.resistance_ohm()), units::ohm_to_pu(l.reactance_ohm()));
        let yl = z.inv();
        let (a, b) = (index(&l.from_node), index(&l.to_node));
        y[a][a] += yl;
        y[b][b] += yl;
        y[a][b] -= yl;
        y[b][a] -= yl;
    }
    let v: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(step.vm_pu[i], step.va_rad[i])).collect();
    let slack = index(&grid.transformer.node_id);
    (0..n)
        .filter(|&i| i != slack)
        .map(|i| {
            let current: Complex64 = (0..n).map(|j| y[i][j] * v[j]).sum();
            let s = v[i] * current.conj();
            let load = Complex64::new(units::kw_to_pu(p_kw[i]), units::kw_to_pu(q_kvar[i]));
            (s + load).norm()
        })
        .fold(0.0, f64::max)
}

/// Index nearest two thirds of the last distance by scanning every candidate; ties go farther.
pub fn split_point_enumerated(distances: &[f64]) -> usize {
    let target = 2.0 * distances[distances.len() - 1] / 3.0;
    let mut best = 1;
    for i in 1..distances.len() {
        let (e, b) = ((distances[i] - target).abs(), (distances[best] - target).abs());
        if e < b - 1e-9 || (e <= b + 1e-9 && distances[i] >= distances[best]) {
            best = i;
        }
    }
    best
}
