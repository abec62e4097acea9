//! Parallel-cable heuristic for voltage band violations.

use std::collections::{BTreeMap, BTreeSet};

use super::{detect_violations, CostCatalog, ExpansionError, ExpansionMeasure, MeasureKind, Violation};
use crate::powerflow::{run_timeseries, InjectionSeries, PowerFlowResult};
use crate::scenario::{GridModel, Line};

/// Index into `distances` of the node nearest two thirds of the last distance.
///
/// `distances` runs from the transformer (index 0, never returned) along the
/// path and must be non-decreasing. Ties go to the farther node.
pub fn split_point(distances: &[f64]) -> Result<usize, ExpansionError> {
    if distances.len() < 2 {
        return Err(ExpansionError::PathTooShort(distances.len()));
    }
    let target = 2.0 * distances[distances.len() - 1] / 3.0;
    let k = distances[1..].partition_point(|&d| d < target) + 1;
    if k == distances.len() {
        return Ok(k - 1);
    }
    if k == 1 {
        return Ok(1);
    }
    let below = target - distances[k - 1];
    let above = distances[k] - target;
    Ok(if above <= below + 1e-9 { k } else { k - 1 })
}

#[derive(Debug, Clone)]
pub struct LineReinforcement {
    pub grid: GridModel,
    pub measures: Vec<ExpansionMeasure>,
    /// Power flow of the final grid.
    pub result: PowerFlowResult,
    pub initial_violations: Vec<Violation>,
    pub initial_max_deviation_pct: f64,
    pub iterations: usize,
    /// Feeders given up on because a cable made things worse.
    pub reverted: Vec<String>,
}

fn fresh_line_id(grid: &GridModel, counter: &mut usize) -> String {
    loop {
        *counter += 1;
        let id = format!("P{:03}", *counter);
        if grid.line(&id).is_none() {
            return id;
        }
    }
}

/// Splits the worst feeder at two thirds of its length and feeds the tail from
/// the transformer, until no voltage violation remains or every violating
/// feeder holds `max_parallel` new cables.
pub fn reinforce_lines(
    grid: &GridModel,
    injections: &InjectionSeries,
    band: f64,
    max_parallel: usize,
    catalog: &CostCatalog,
) -> Result<LineReinforcement, ExpansionError> {
    let original = grid.tree();
    let n = grid.nodes.len();
    let slack = grid.slack_index();
    let feeder: Vec<usize> = (0..n).map(|i| original.feeder_head(i)).collect();
    let mut g = grid.clone();
    let mut result = run_timeseries(&g, injections)?;
    let initial_violations = detect_violations(&result, &g, band);
    let vs = result.slack_voltage_pu;
    let initial_max_deviation_pct = 100.0 * result.max_voltage_deviation().into_iter().fold(0.0, f64::max) / vs;

    let mut added: BTreeMap<usize, usize> = BTreeMap::new();
    let mut exhausted: BTreeSet<usize> = BTreeSet::new();
    let mut measures = Vec::new();
    let mut reverted = Vec::new();
    let mut iterations = 0;
    let mut counter = 0;
    loop {
        let dev: Vec<f64> = result.max_voltage_deviation().iter().map(|d| d / vs).collect();
        let worst = (0..n)
            .filter(|&i| i != slack && dev[i] > band)
            .filter(|&i| !exhausted.contains(&feeder[i]) && added.get(&feeder[i]).copied().unwrap_or(0) < max_parallel)
            .max_by(|&a, &b| {
                dev[a]
                    .total_cmp(&dev[b])
                    .then_with(|| grid.nodes[feeder[b]].id.cmp(&grid.nodes[feeder[a]].id))
                    .then_with(|| grid.nodes[b].id.cmp(&grid.nodes[a].id))
            });
        let Some(node) = worst else { break };
        iterations += 1;
        let head = feeder[node];
        let feeder_dev = |d: &[f64]| (0..n).filter(|&i| feeder[i] == head).map(|i| d[i]).fold(0.0, f64::max);
        let before = feeder_dev(&dev);

        let path = original.path(node);
        let distances: Vec<f64> = path.iter().map(|&i| original.distance_m[i]).collect();
        let j = split_point(&distances)?;
        let target = path[j];
        let template = {
            let (_, lines) = original.parent[target].as_ref().expect("non-root node");
            grid.lines[lines[0]].clone()
        };

        let mut trial = g.clone();
        let mut opened = Vec::new();
        if j >= 2 {
            let (a, b) = (&grid.nodes[path[j - 1]].id, &grid.nodes[target].id);
            trial.lines.retain(|l| {
                let hit = l.connects(a, b);
                if hit {
                    opened.push(l.id.clone());
                }
                !hit
            });
        }
        let id = fresh_line_id(&trial, &mut counter);
        let feeder_id = grid.nodes[head].id.clone();
        trial.lines.push(Line {
            id: id.clone(),
            from_node: grid.transformer.node_id.clone(),
            to_node: grid.nodes[target].id.clone(),
            length_m: distances[j],
            origin: Some(feeder_id.clone()),
            ..template.clone()
        });
        debug_assert!(trial.check_tree().is_ok());

        let r2 = run_timeseries(&trial, injections)?;
        let dev2: Vec<f64> = r2.max_voltage_deviation().iter().map(|d| d / vs).collect();
        if feeder_dev(&dev2) > before + 1e-12 {
            exhausted.insert(head);
            reverted.push(feeder_id);
            continue;
        }
        let cable_type = template.cable_type.clone();
        let mut affected = vec![feeder_id, grid.nodes[target].id.clone()];
        affected.extend(opened);
        measures.push(ExpansionMeasure {
            kind: MeasureKind::ParallelCable,
            affected,
            new_asset: id,
            cost_eur: catalog.cable_cost(&cable_type, distances[j])?,
            cable_type: Some(cable_type),
            length_m: distances[j],
            transformer_kva: None,
            units: 1,
        });
        *added.entry(head).or_insert(0) += 1;
        g = trial;
        result = r2;
    }
    Ok(LineReinforcement {
        grid: g,
        measures,
        result,
        initial_violations,
        initial_max_deviation_pct,
        iterations,
        reverted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powerflow::reactive_load;
    use crate::scenario::{radial_feeders, FeederLayout};

    fn split_point_brute_force(distances: &[f64]) -> Option<usize> {
        let target = 2.0 * distances.last()? / 3.0;
        let mut best: Option<(usize, f64)> = None;
        for (i, &d) in distances.iter().enumerate().skip(1) {
            let e = (d - target).abs();
            if best.is_none_or(|(_, b)| e <= b + 1e-9) {
                best = Some((i, e));
            }
        }
        best.map(|(i, _)| i)
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_point(&[0.0, 100.0, 200.0, 300.0]).unwrap(), 2);
        assert_eq!(split_point(&[0.0, 100.0, 250.0]).unwrap(), 1);
        assert_eq!(split_point(&[0.0, 100.0, 200.0]).unwrap(), 1);
        assert_eq!(split_point(&[0.0, 60.0]).unwrap(), 1);
        assert!(matches!(split_point(&[0.0]), Err(ExpansionError::PathTooShort(1))));
    }

    #[test]
    fn split_tie_goes_farther() {
        // Target 100 sits exactly between 90 and 110.
        assert_eq!(split_point(&[0.0, 90.0, 110.0, 150.0]).unwrap(), 2);
        assert_eq!(split_point_brute_force(&[0.0, 90.0, 110.0, 150.0]), Some(2));
    }

    fn loaded_feeder(nodes: usize, kw: f64) -> (GridModel, InjectionSeries) {
        let ids: Vec<String> = (0..nodes).map(|i| format!("B{i}")).collect();
        let grid = radial_feeders(&FeederLayout { feeders: 1, ..Default::default() }, &ids);
        let mut inj = InjectionSeries::zeros(grid.nodes.len(), vec![1.0]);
        for i in 1..grid.nodes.len() {
            inj.p_kw[0][i] = kw;
            inj.q_kvar[0][i] = reactive_load(kw, 0.97);
        }
        (grid, inj)
    }

    #[test]
    fn no_violation_is_identity() {
        let (grid, inj) = loaded_feeder(4, 2.0);
        let catalog = CostCatalog::from_grid(&grid);
        let r = reinforce_lines(&grid, &inj, 0.04, 3, &catalog).unwrap();
        assert!(r.measures.is_empty());
        assert_eq!(r.grid, grid);
    }

    #[test]
    fn single_split_resolves_moderate_violation() {
        let (grid, inj) = loaded_feeder(12, 12.0);
        let catalog = CostCatalog::from_grid(&grid);
        let r = reinforce_lines(&grid, &inj, 0.04, 3, &catalog).unwrap();
        assert!(!r.initial_violations.is_empty());
        assert_eq!(r.measures.len(), 1);
        assert!(detect_violations(&r.result, &r.grid, 0.04)
            .iter()
            .all(|v| v.kind != super::super::ViolationKind::VoltageBand));
        assert!(r.grid.validate().is_ok());
    }

    #[test]
    fn cap_limits_parallels() {
        let (grid, inj) = loaded_feeder(20, 14.0);
        let catalog = CostCatalog::from_grid(&grid);
        let r = reinforce_lines(&grid, &inj, 0.04, 3, &catalog).unwrap();
        assert_eq!(r.measures.len(), 3);
        assert!(r.result.max_voltage_deviation().iter().any(|d| *d > 0.04));
        assert!(r.grid.lines.iter().filter(|l| l.origin.is_some()).count() == 3);
    }
}
