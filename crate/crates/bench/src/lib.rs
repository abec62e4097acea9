//! Shared inputs for the benchmarks.

use std::collections::BTreeMap;

use gridloop::building::{build_problems, ExpansionProblem, Stage};
use gridloop::powerflow::{reactive_load, InjectionSeries};
use gridloop::scenario::{
    generate_estate_with, radial_feeders, BuildingStock, FeederLayout, GridModel, ScenarioConfig,
};

/// Default estate of 80 buildings, seed 1.
pub fn estate() -> (ScenarioConfig, BuildingStock) {
    let config = ScenarioConfig::default();
    let stock = generate_estate_with(1, &config.estate).expect("default estate");
    (config, stock)
}

/// Unrestricted 2045 problems of the default estate.
pub fn building_problems() -> Vec<ExpansionProblem> {
    let (config, stock) = estate();
    let technologies = config.technologies_for(&stock);
    build_problems(&stock, &config, &technologies, 2045, &BTreeMap::new(), Stage::Unrestricted).expect("problems")
}

/// Four feeders of `nodes` buildings in total, every node drawing `kw` with a daily swing.
pub fn loaded_grid(nodes: usize, kw: f64, steps: usize) -> (GridModel, InjectionSeries) {
    let ids: Vec<String> = (0..nodes).map(|i| format!("B{i:03}")).collect();
    let grid = radial_feeders(&FeederLayout::default(), &ids);
    let mut inj = InjectionSeries::zeros(grid.nodes.len(), vec![1.0; steps]);
    for t in 0..steps {
        let swing = (t as f64 / steps as f64 * std::f64::consts::TAU).sin();
        for i in 1..grid.nodes.len() {
            let p = kw * (0.6 + 0.4 * swing);
            inj.p_kw[t][i] = p;
            inj.q_kvar[t][i] = reactive_load(p, 0.97);
        }
    }
    (grid, inj)
}
