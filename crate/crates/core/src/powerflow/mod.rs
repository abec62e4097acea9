//! AC power flow on the low-voltage grid for every time step.
//!
//! Loads are in kW/kvar with positive values meaning consumption; PV feed-in
//! shows up as negative load. Internally everything is per unit on a 1 MVA,
//! 400 V base.

mod newton;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::building::BuildingSolution;
use crate::scenario::{BuildingStock, GridModel};

pub use newton::{Network, Solution, MAX_ITERATIONS, TOLERANCE};

pub mod units {
    pub const S_BASE_KVA: f64 = 1000.0;
    pub const V_BASE_V: f64 = 400.0;

    pub fn z_base_ohm() -> f64 {
        V_BASE_V * V_BASE_V / (S_BASE_KVA * 1000.0)
    }

    /// Line current base for a three-phase system.
    pub fn i_base_a() -> f64 {
        S_BASE_KVA * 1000.0 / (3f64.sqrt() * V_BASE_V)
    }

    pub fn ohm_to_pu(ohm: f64) -> f64 {
        ohm / z_base_ohm()
    }

    pub fn kw_to_pu(kw: f64) -> f64 {
        kw / S_BASE_KVA
    }

    pub fn pu_to_kw(pu: f64) -> f64 {
        pu * S_BASE_KVA
    }

    pub fn pu_to_volts(pu: f64) -> f64 {
        pu * V_BASE_V
    }

    pub fn pu_to_amps(pu: f64) -> f64 {
        pu * i_base_a()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerFlowError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid injections: {0}")]
    InvalidInjections(String),
    #[error("step {step}: no convergence after {iterations} iterations (max mismatch {mismatch:.3e} pu)")]
    NonConvergence { step: usize, iterations: usize, mismatch: f64 },
    #[error("step {step}: singular Jacobian at node index {node}")]
    Singular { step: usize, node: usize },
    #[error("{} of the time steps failed, first: {}", .0.len(), .0[0])]
    Failed(Vec<PowerFlowError>),
}

impl PowerFlowError {
    fn at_step(self, step: usize) -> Self {
        match self {
            Self::NonConvergence { iterations, mismatch, .. } => Self::NonConvergence { step, iterations, mismatch },
            Self::Singular { node, .. } => Self::Singular { step, node },
            other => other,
        }
    }
}

/// Nodal loads per time step, indexed `[step][node]` in grid node order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InjectionSeries {
    pub p_kw: Vec<Vec<f64>>,
    pub q_kvar: Vec<Vec<f64>>,
    /// Hours represented by each step.
    pub step_weight: Vec<f64>,
}

impl InjectionSeries {
    pub fn zeros(nodes: usize, step_weight: Vec<f64>) -> Self {
        let steps = step_weight.len();
        Self { p_kw: vec![vec![0.0; nodes]; steps], q_kvar: vec![vec![0.0; nodes]; steps], step_weight }
    }

    pub fn len(&self) -> usize {
        self.p_kw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_kw.is_empty()
    }

    pub fn validate(&self, nodes: usize) -> Result<(), PowerFlowError> {
        let bad = |m: String| Err(PowerFlowError::InvalidInjections(m));
        if self.q_kvar.len() != self.p_kw.len() || self.step_weight.len() != self.p_kw.len() {
            return bad("p, q and weights differ in length".into());
        }
        for (t, (p, q)) in self.p_kw.iter().zip(&self.q_kvar).enumerate() {
            if p.len() != nodes || q.len() != nodes {
                return bad(format!("step {t} has {} values for {nodes} nodes", p.len()));
            }
            if p.iter().chain(q).any(|v| !v.is_finite()) {
                return bad(format!("step {t} has a non-finite value"));
            }
        }
        Ok(())
    }
}

/// State of one time step in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub vm_pu: Vec<f64>,
    pub va_rad: Vec<f64>,
    pub line_current_a: Vec<f64>,
    pub line_loss_kw: Vec<f64>,
    /// Power delivered by the transformer into the grid.
    pub slack_p_kw: f64,
    pub slack_q_kvar: f64,
    pub iterations: usize,
    pub mismatch_pu: f64,
}

impl StepResult {
    pub fn voltage_v(&self, node: usize) -> f64 {
        units::pu_to_volts(self.vm_pu[node])
    }

    pub fn slack_apparent_kva(&self) -> f64 {
        self.slack_p_kw.hypot(self.slack_q_kvar)
    }

    pub fn losses_kw(&self) -> f64 {
        self.line_loss_kw.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowResult {
    pub node_ids: Vec<String>,
    pub line_ids: Vec<String>,
    pub slack_node: String,
    pub slack_voltage_pu: f64,
    pub steps: Vec<StepResult>,
    pub step_weight: Vec<f64>,
}

impl PowerFlowResult {
    /// Largest |V - V_slack| per node over all steps, in per unit.
    pub fn max_voltage_deviation(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.node_ids.len()];
        for s in &self.steps {
            for (o, v) in out.iter_mut().zip(&s.vm_pu) {
                *o = o.max((v - self.slack_voltage_pu).abs());
            }
        }
        out
    }

    pub fn max_line_current(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.line_ids.len()];
        for s in &self.steps {
            for (o, i) in out.iter_mut().zip(&s.line_current_a) {
                *o = o.max(*i);
            }
        }
        out
    }

    pub fn peak_apparent_kva(&self) -> f64 {
        self.steps.iter().map(StepResult::slack_apparent_kva).fold(0.0, f64::max)
    }

    pub fn max_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).max().unwrap_or(0)
    }

    /// Writes node voltages and line currents of every step as long-format CSV.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "step,element,id,value_1,value_2")?;
        for (t, s) in self.steps.iter().enumerate() {
            for (i, id) in self.node_ids.iter().enumerate() {
                writeln!(w, "{t},node,{id},{:.9},{:.9}", s.vm_pu[i], s.va_rad[i])?;
            }
            for (i, id) in self.line_ids.iter().enumerate() {
                writeln!(w, "{t},line,{id},{:.6},{:.6}", s.line_current_a[i], s.line_loss_kw[i])?;
            }
            writeln!(w, "{t},slack,{},{:.6},{:.6}", self.slack_node, s.slack_p_kw, s.slack_q_kvar)?;
        }
        w.flush()
    }
}

/// Energy through the transformer over a year, kWh.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SlackBalance {
    pub drawn_kwh: f64,
    pub fed_back_kwh: f64,
    pub losses_kwh: f64,
}

pub fn slack_balance(result: &PowerFlowResult) -> SlackBalance {
    let mut b = SlackBalance::default();
    for (s, w) in result.steps.iter().zip(&result.step_weight) {
        b.drawn_kwh += w * s.slack_p_kw.max(0.0);
        b.fed_back_kwh += w * (-s.slack_p_kw).max(0.0);
        b.losses_kwh += w * s.losses_kw();
    }
    b
}

fn step_result(net: &Network, sol: Solution) -> StepResult {
    let v: Vec<num_complex::Complex64> =
        sol.vm.iter().zip(&sol.va).map(|(&m, &a)| num_complex::Complex64::from_polar(m, a)).collect();
    let mut line_current_a = Vec::with_capacity(net.lines.len());
    let mut line_loss_kw = Vec::with_capacity(net.lines.len());
    for (&(a, b, y), r) in net.lines.iter().zip(&net.line_resistance) {
        let i = ((v[a] - v[b]) * y).norm();
        line_current_a.push(units::pu_to_amps(i));
        line_loss_kw.push(units::pu_to_kw(i * i * r));
    }
    let s = net.injections(&sol.vm, &sol.va)[net.slack];
    StepResult {
        vm_pu: sol.vm,
        va_rad: sol.va,
        line_current_a,
        line_loss_kw,
        slack_p_kw: units::pu_to_kw(s.re),
        slack_q_kvar: units::pu_to_kw(s.im),
        iterations: sol.iterations,
        mismatch_pu: sol.mismatch,
    }
}

fn solve_with(net: &Network, p_kw: &[f64], q_kvar: &[f64]) -> Result<StepResult, PowerFlowError> {
    let p: Vec<f64> = p_kw.iter().map(|&v| units::kw_to_pu(v)).collect();
    let q: Vec<f64> = q_kvar.iter().map(|&v| units::kw_to_pu(v)).collect();
    net.solve(&p, &q).map(|sol| step_result(net, sol))
}

/// Single snapshot; `p_kw` and `q_kvar` are nodal loads in grid node order.
pub fn solve_step(grid: &GridModel, p_kw: &[f64], q_kvar: &[f64]) -> Result<StepResult, PowerFlowError> {
    let net = Network::new(grid)?;
    let n = grid.nodes.len();
    if p_kw.len() != n || q_kvar.len() != n {
        return Err(PowerFlowError::InvalidInjections(format!("expected {n} nodal values")));
    }
    solve_with(&net, p_kw, q_kvar)
}

/// Solves all steps in parallel; fails if any step fails.
pub fn run_timeseries(grid: &GridModel, injections: &InjectionSeries) -> Result<PowerFlowResult, PowerFlowError> {
    let net = Network::new(grid)?;
    injections.validate(grid.nodes.len())?;
    let outcomes: Vec<Result<StepResult, PowerFlowError>> = injections
        .p_kw
        .par_iter()
        .zip(&injections.q_kvar)
        .enumerate()
        .map(|(t, (p, q))| solve_with(&net, p, q).map_err(|e| e.at_step(t)))
        .collect();
    let mut steps = Vec::with_capacity(outcomes.len());
    let mut failed = Vec::new();
    for o in outcomes {
        match o {
            Ok(s) => steps.push(s),
            Err(e) => failed.push(e),
        }
    }
    if !failed.is_empty() {
        return Err(PowerFlowError::Failed(failed));
    }
    Ok(PowerFlowResult {
        node_ids: grid.nodes.iter().map(|n| n.id.clone()).collect(),
        line_ids: grid.lines.iter().map(|l| l.id.clone()).collect(),
        slack_node: grid.transformer.node_id.clone(),
        slack_voltage_pu: grid.transformer.slack_voltage_pu,
        steps,
        step_weight: injections.step_weight.clone(),
    })
}

/// Reactive load drawn at power factor `pf`; feed-in is at unity power factor.
pub fn reactive_load(p_kw: f64, pf: f64) -> f64 {
    p_kw.max(0.0) * pf.acos().tan()
}

/// Nodal loads from the buildings' net grid exchange (hourly steps, so kWh equals kW).
pub fn injections_from_plans(
    grid: &GridModel,
    stock: &BuildingStock,
    solutions: &[BuildingSolution],
    power_factor: f64,
) -> Result<InjectionSeries, PowerFlowError> {
    let steps = stock.time_grid.len();
    let mut inj = InjectionSeries::zeros(grid.nodes.len(), stock.time_grid.step_weight.clone());
    for s in solutions {
        let building = stock
            .buildings
            .iter()
            .find(|b| b.id == s.building_id)
            .ok_or_else(|| PowerFlowError::InvalidInjections(format!("unknown building {}", s.building_id)))?;
        let node = grid.node_index(&building.grid_node).ok_or_else(|| {
            PowerFlowError::InvalidInjections(format!(
                "building {} sits on unknown node {}",
                building.id, building.grid_node
            ))
        })?;
        let net = s.schedule.net_exchange();
        if net.len() != steps {
            return Err(PowerFlowError::InvalidInjections(format!(
                "building {} has {} steps, expected {steps}",
                s.building_id,
                net.len()
            )));
        }
        for (t, p) in net.into_iter().enumerate() {
            inj.p_kw[t][node] += p;
            inj.q_kvar[t][node] += reactive_load(p, power_factor);
        }
    }
    Ok(inj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{radial_feeders, FeederLayout, GridNode, Line, Transformer};
    use approx::assert_relative_eq;

    fn two_node(r: f64, x: f64) -> GridModel {
        let node = |id: &str| GridNode { id: id.into(), nominal_voltage_v: 400.0, buildings: vec![] };
        GridModel {
            nodes: vec![node("T"), node("A")],
            lines: vec![Line {
                id: "L1".into(),
                from_node: "T".into(),
                to_node: "A".into(),
                length_m: 1000.0,
                r_ohm_per_km: r,
                x_ohm_per_km: x,
                rated_current_a: 275.0,
                cable_type: "test".into(),
                cost_eur_per_km: 1.0,
                origin: None,
            }],
            transformer: Transformer {
                node_id: "T".into(),
                rated_kva: 400.0,
                units: 1,
                cost_eur: 1.0,
                slack_voltage_pu: 1.0,
                options: vec![],
            },
        }
    }

    #[test]
    fn unit_conversions_round_trip() {
        assert_relative_eq!(units::z_base_ohm(), 0.16);
        assert_relative_eq!(units::i_base_a(), 1443.375672974065, epsilon = 1e-9);
        assert_relative_eq!(units::pu_to_kw(units::kw_to_pu(12.5)), 12.5);
    }

    #[test]
    fn two_bus_resistive_matches_closed_form() {
        // Purely resistive line: V^2 - V0 V + P R = 0 in per unit.
        let grid = two_node(0.2, 0.0);
        let res = solve_step(&grid, &[0.0, 50.0], &[0.0, 0.0]).unwrap();
        let r = units::ohm_to_pu(0.2);
        let p = units::kw_to_pu(50.0);
        let v = (1.0 + (1.0 - 4.0 * p * r).sqrt()) / 2.0;
        assert_relative_eq!(res.vm_pu[1], v, epsilon = 1e-9);
        assert!(res.iterations <= 6);
        let loss = res.losses_kw();
        assert_relative_eq!(res.slack_p_kw, 50.0 + loss, epsilon = 1e-5);
    }

    #[test]
    fn no_load_gives_flat_profile() {
        let ids: Vec<String> = (0..9).map(|i| format!("B{i}")).collect();
        let grid = radial_feeders(&FeederLayout::default(), &ids);
        let n = grid.nodes.len();
        let res = solve_step(&grid, &vec![0.0; n], &vec![0.0; n]).unwrap();
        assert!(res.vm_pu.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn feed_in_raises_voltage() {
        let grid = two_node(0.2, 0.08);
        let res = solve_step(&grid, &[0.0, -30.0], &[0.0, 0.0]).unwrap();
        assert!(res.vm_pu[1] > 1.0);
        assert!(res.slack_p_kw < 0.0);
    }

    #[test]
    fn power_balance_over_series() {
        let ids: Vec<String> = (0..12).map(|i| format!("B{i}")).collect();
        let grid = radial_feeders(&FeederLayout::default(), &ids);
        let n = grid.nodes.len();
        let mut inj = InjectionSeries::zeros(n, vec![2.0; 3]);
        for t in 0..3 {
            for i in 1..n {
                inj.p_kw[t][i] = 3.0 * (t as f64 - 1.0) + 0.5 * i as f64;
                inj.q_kvar[t][i] = reactive_load(inj.p_kw[t][i], 0.97);
            }
        }
        let res = run_timeseries(&grid, &inj).unwrap();
        for (t, s) in res.steps.iter().enumerate() {
            let load: f64 = inj.p_kw[t].iter().sum();
            assert!((s.slack_p_kw - load - s.losses_kw()).abs() < 1e-4);
        }
        let b = slack_balance(&res);
        assert!(b.drawn_kwh > 0.0 && b.losses_kwh > 0.0);
    }

    #[test]
    fn reactive_load_only_for_consumption() {
        assert_eq!(reactive_load(-4.0, 0.97), 0.0);
        assert_relative_eq!(reactive_load(10.0, 0.97), 10.0 * (1.0 - 0.97f64 * 0.97).sqrt() / 0.97, epsilon = 1e-12);
    }

    #[test]
    fn rejects_wrong_injection_shape() {
        let grid = two_node(0.2, 0.08);
        let inj = InjectionSeries { p_kw: vec![vec![0.0; 3]], q_kvar: vec![vec![0.0; 3]], step_weight: vec![1.0] };
        assert!(matches!(run_timeseries(&grid, &inj), Err(PowerFlowError::InvalidInjections(_))));
    }

    #[test]
    fn absurd_load_does_not_converge() {
        let grid = two_node(0.2, 0.08);
        let err = solve_step(&grid, &[0.0, 5000.0], &[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, PowerFlowError::NonConvergence { .. } | PowerFlowError::Singular { .. }));
    }
}
