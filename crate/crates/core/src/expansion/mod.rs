//! Detection of impermissible operating states and the reinforcement heuristics.

mod lines;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::powerflow::{run_timeseries, InjectionSeries, PowerFlowError, PowerFlowResult};
use crate::scenario::{GridModel, TransformerOption};

pub use lines::{reinforce_lines, split_point, LineReinforcement};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpansionError {
    #[error(transparent)]
    PowerFlow(#[from] PowerFlowError),
    #[error("no catalogue entry for {0}")]
    MissingCatalogEntry(String),
    #[error("split path needs at least two nodes, got {0}")]
    PathTooShort(usize),
    #[error("catalogue {path}: {message}")]
    Catalog { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    VoltageBand,
    ThermalLine,
    ThermalTransformer,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::VoltageBand => "voltage_band",
            Self::ThermalLine => "thermal_line",
            Self::ThermalTransformer => "thermal_transformer",
        }
    }
}

/// Worst occurrence of one violation over all steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: String,
    pub step: usize,
    /// Deviation in percent for voltage, loading ratio for thermal entries.
    pub magnitude: f64,
}

/// Voltage deviations beyond `band` (fraction of slack voltage) and any thermal overload.
pub fn detect_violations(result: &PowerFlowResult, grid: &GridModel, band: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let vs = result.slack_voltage_pu;
    for (i, id) in result.node_ids.iter().enumerate() {
        let worst = result.steps.iter().enumerate().map(|(t, s)| (t, (s.vm_pu[i] - vs).abs() / vs)).fold(
            None,
            |best: Option<(usize, f64)>, (t, d)| match best {
                Some((_, b)) if b >= d => best,
                _ => Some((t, d)),
            },
        );
        if let Some((step, d)) = worst {
            if d > band {
                out.push(Violation {
                    kind: ViolationKind::VoltageBand,
                    location: id.clone(),
                    step,
                    magnitude: 100.0 * d,
                });
            }
        }
    }
    for (k, line) in grid.lines.iter().enumerate() {
        let mut worst: Option<(usize, f64)> = None;
        for (t, s) in result.steps.iter().enumerate() {
            let ratio = s.line_current_a[k] / line.rated_current_a;
            if worst.is_none_or(|(_, r)| ratio > r) {
                worst = Some((t, ratio));
            }
        }
        if let Some((step, ratio)) = worst.filter(|(_, r)| *r > 1.0) {
            out.push(Violation { kind: ViolationKind::ThermalLine, location: line.id.clone(), step, magnitude: ratio });
        }
    }
    let capacity = grid.transformer.capacity_kva();
    let mut worst: Option<(usize, f64)> = None;
    for (t, s) in result.steps.iter().enumerate() {
        let ratio = s.slack_apparent_kva() / capacity;
        if worst.is_none_or(|(_, r)| ratio > r) {
            worst = Some((t, ratio));
        }
    }
    if let Some((step, ratio)) = worst.filter(|(_, r)| *r > 1.0) {
        out.push(Violation {
            kind: ViolationKind::ThermalTransformer,
            location: grid.transformer.node_id.clone(),
            step,
            magnitude: ratio,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    ParallelCable,
    TransformerUpsize,
    TransformerParallel,
}

impl MeasureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ParallelCable => "parallel_cable",
            Self::TransformerUpsize => "transformer_upsize",
            Self::TransformerParallel => "transformer_parallel",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionMeasure {
    pub kind: MeasureKind,
    /// Feeder id and split node for cables, slack node for transformers.
    pub affected: Vec<String>,
    pub new_asset: String,
    pub cable_type: Option<String>,
    pub length_m: f64,
    pub transformer_kva: Option<f64>,
    pub units: u32,
    pub cost_eur: f64,
}

/// Unit costs of reinforcement assets.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostCatalog {
    #[serde(default = "crate::scenario::format_version")]
    pub format_version: u32,
    /// EUR per km by cable type.
    pub cables: BTreeMap<String, f64>,
    /// Transformer sizes with the price of one unit.
    pub transformers: Vec<TransformerOption>,
}

impl CostCatalog {
    /// Cable prices as found on the grid's lines plus its transformer options.
    pub fn from_grid(grid: &GridModel) -> Self {
        let cables = grid.lines.iter().map(|l| (l.cable_type.clone(), l.cost_eur_per_km)).collect();
        let mut transformers = grid.transformer.options.clone();
        transformers.sort_by(|a, b| a.rated_kva.total_cmp(&b.rated_kva));
        Self { format_version: crate::scenario::FORMAT_VERSION, cables, transformers }
    }

    pub fn load(path: &Path) -> Result<Self, ExpansionError> {
        let err = |message: String| ExpansionError::Catalog { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut c: Self = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        if c.cables.values().chain(c.transformers.iter().map(|t| &t.cost_eur)).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(err("costs must be finite and non-negative".into()));
        }
        if c.transformers.iter().any(|t| !(t.rated_kva > 0.0)) {
            return Err(err("transformer sizes must be positive".into()));
        }
        c.transformers.sort_by(|a, b| a.rated_kva.total_cmp(&b.rated_kva));
        Ok(c)
    }

    pub fn cable_cost(&self, cable_type: &str, length_m: f64) -> Result<f64, ExpansionError> {
        self.cables
            .get(cable_type)
            .map(|per_km| per_km * length_m / 1000.0)
            .ok_or_else(|| ExpansionError::MissingCatalogEntry(format!("cable type {cable_type}")))
    }

    pub fn transformer_cost(&self, kva: f64, units: u32) -> Result<f64, ExpansionError> {
        self.transformers
            .iter()
            .find(|t| t.rated_kva == kva)
            .map(|t| t.cost_eur * units as f64)
            .ok_or_else(|| ExpansionError::MissingCatalogEntry(format!("transformer {kva} kVA")))
    }
}

/// Sum of measure costs priced from the catalogue.
pub fn expansion_cost(measures: &[ExpansionMeasure], catalog: &CostCatalog) -> Result<f64, ExpansionError> {
    measures.iter().map(|m| measure_cost(m, catalog)).sum()
}

fn measure_cost(m: &ExpansionMeasure, catalog: &CostCatalog) -> Result<f64, ExpansionError> {
    match m.kind {
        MeasureKind::ParallelCable => {
            let ty = m.cable_type.as_deref().ok_or_else(|| ExpansionError::MissingCatalogEntry("cable type".into()))?;
            catalog.cable_cost(ty, m.length_m)
        }
        MeasureKind::TransformerUpsize | MeasureKind::TransformerParallel => {
            let kva =
                m.transformer_kva.ok_or_else(|| ExpansionError::MissingCatalogEntry("transformer size".into()))?;
            catalog.transformer_cost(kva, m.units)
        }
    }
}

/// Outcome of the transformer rule for a peak apparent power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformerChoice {
    Sufficient,
    Single(TransformerOption),
    Parallel(TransformerOption),
    Unresolvable,
}

/// Smallest size covering `peak_kva`, else two units of the smallest size whose pair covers it.
pub fn choose_transformer(peak_kva: f64, capacity_kva: f64, options: &[TransformerOption]) -> TransformerChoice {
    if peak_kva <= capacity_kva {
        return TransformerChoice::Sufficient;
    }
    let mut sorted = options.to_vec();
    sorted.sort_by(|a, b| a.rated_kva.total_cmp(&b.rated_kva));
    if let Some(o) = sorted.iter().find(|o| o.rated_kva >= peak_kva) {
        return TransformerChoice::Single(*o);
    }
    match sorted.iter().find(|o| 2.0 * o.rated_kva >= peak_kva) {
        Some(o) => TransformerChoice::Parallel(*o),
        None => TransformerChoice::Unresolvable,
    }
}

/// Applies the transformer rule to the simulated peak.
pub fn reinforce_transformer(
    grid: &GridModel,
    result: &PowerFlowResult,
    catalog: &CostCatalog,
) -> Result<(GridModel, Vec<ExpansionMeasure>, Option<Violation>), ExpansionError> {
    let peak = result.peak_apparent_kva();
    let mut g = grid.clone();
    let measure = |kind, o: TransformerOption, units: u32| -> Result<ExpansionMeasure, ExpansionError> {
        Ok(ExpansionMeasure {
            kind,
            affected: vec![grid.transformer.node_id.clone()],
            new_asset: format!("{units}x{} kVA", o.rated_kva),
            cable_type: None,
            length_m: 0.0,
            transformer_kva: Some(o.rated_kva),
            units,
            cost_eur: catalog.transformer_cost(o.rated_kva, units)?,
        })
    };
    let (m, units) = match choose_transformer(peak, grid.transformer.capacity_kva(), &catalog.transformers) {
        TransformerChoice::Sufficient => return Ok((g, Vec::new(), None)),
        TransformerChoice::Unresolvable => {
            let step = result
                .steps
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.slack_apparent_kva().total_cmp(&b.1.slack_apparent_kva()))
                .map_or(0, |(t, _)| t);
            let v = Violation {
                kind: ViolationKind::ThermalTransformer,
                location: grid.transformer.node_id.clone(),
                step,
                magnitude: peak / grid.transformer.capacity_kva(),
            };
            return Ok((g, Vec::new(), Some(v)));
        }
        TransformerChoice::Single(o) => (measure(MeasureKind::TransformerUpsize, o, 1)?, (o, 1)),
        TransformerChoice::Parallel(o) => (measure(MeasureKind::TransformerParallel, o, 2)?, (o, 2)),
    };
    g.transformer.rated_kva = units.0.rated_kva;
    g.transformer.cost_eur = units.0.cost_eur;
    g.transformer.units = units.1;
    Ok((g, vec![m], None))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReinforcementReport {
    pub measures: Vec<ExpansionMeasure>,
    pub total_cost: f64,
    /// Violations left after all measures; voltage entries only when the cable cap was hit.
    pub residual_violations: Vec<Violation>,
    /// Violations of the unreinforced grid.
    pub initial_violations: Vec<Violation>,
    pub iterations: usize,
    pub voltage_resolved: bool,
    /// Largest voltage deviation in percent before and after reinforcement.
    pub max_deviation_initial_pct: f64,
    pub max_deviation_final_pct: f64,
    /// Peak apparent power at the transformer, kVA.
    pub peak_kva: f64,
}

impl ReinforcementReport {
    pub fn count(&self, kind: MeasureKind) -> usize {
        self.measures.iter().filter(|m| m.kind == kind).count()
    }

    pub fn write_csv(&self, path: &Path, horizon: i32) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        write_measures_header(&mut w)?;
        write_measures(&mut w, horizon, None, &self.measures)?;
        w.flush()
    }
}

pub(crate) fn write_measures_header(w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "horizon,iteration,kind,affected,new_asset,cable_type,length_m,transformer_kva,units,cost_eur")
}

pub(crate) fn write_measures(
    w: &mut impl Write,
    horizon: i32,
    iteration: Option<usize>,
    measures: &[ExpansionMeasure],
) -> std::io::Result<()> {
    for m in measures {
        writeln!(
            w,
            "{horizon},{},{},{},{},{},{:.1},{},{},{:.2}",
            iteration.map(|i| i.to_string()).unwrap_or_default(),
            m.kind.as_str(),
            m.affected.join(";"),
            m.new_asset,
            m.cable_type.as_deref().unwrap_or(""),
            m.length_m,
            m.transformer_kva.map(|k| k.to_string()).unwrap_or_default(),
            m.units,
            m.cost_eur
        )?;
    }
    Ok(())
}

/// Line heuristic, then the transformer rule on the resulting flows.
pub fn reinforce(
    grid: &GridModel,
    injections: &InjectionSeries,
    band: f64,
    max_parallel: usize,
    catalog: &CostCatalog,
) -> Result<(GridModel, ReinforcementReport, PowerFlowResult), ExpansionError> {
    let lines = reinforce_lines(grid, injections, band, max_parallel, catalog)?;
    let max_pct =
        |r: &PowerFlowResult| 100.0 * r.max_voltage_deviation().into_iter().fold(0.0, f64::max) / r.slack_voltage_pu;
    let (g, tmeasures, unresolved) = reinforce_transformer(&lines.grid, &lines.result, catalog)?;
    let mut measures = lines.measures;
    measures.extend(tmeasures);
    let mut residual: Vec<Violation> = detect_violations(&lines.result, &g, band)
        .into_iter()
        .filter(|v| v.kind != ViolationKind::ThermalTransformer)
        .collect();
    residual.extend(unresolved);
    let total_cost = expansion_cost(&measures, catalog)?;
    let report = ReinforcementReport {
        measures,
        total_cost,
        voltage_resolved: !residual.iter().any(|v| v.kind == ViolationKind::VoltageBand),
        residual_violations: residual,
        initial_violations: lines.initial_violations,
        iterations: lines.iterations,
        max_deviation_initial_pct: lines.initial_max_deviation_pct,
        max_deviation_final_pct: max_pct(&lines.result),
        peak_kva: lines.result.peak_apparent_kva(),
    };
    Ok((g, report, lines.result))
}

/// Convenience for callers holding only the grid: simulates and reports violations.
pub fn simulate_violations(
    grid: &GridModel,
    injections: &InjectionSeries,
    band: f64,
) -> Result<Vec<Violation>, ExpansionError> {
    let result = run_timeseries(grid, injections)?;
    Ok(detect_violations(&result, grid, band))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powerflow::StepResult;

    fn options() -> Vec<TransformerOption> {
        vec![
            TransformerOption { rated_kva: 250.0, cost_eur: 13_000.0 },
            TransformerOption { rated_kva: 400.0, cost_eur: 17_000.0 },
            TransformerOption { rated_kva: 630.0, cost_eur: 22_000.0 },
        ]
    }

    fn result_with(vm: Vec<f64>, current: Vec<f64>, slack: (f64, f64)) -> PowerFlowResult {
        let n = vm.len();
        PowerFlowResult {
            node_ids: (0..n).map(|i| format!("N{i}")).collect(),
            line_ids: (0..current.len()).map(|i| format!("L{i}")).collect(),
            slack_node: "N0".into(),
            slack_voltage_pu: 1.0,
            steps: vec![StepResult {
                va_rad: vec![0.0; n],
                vm_pu: vm,
                line_loss_kw: vec![0.0; current.len()],
                line_current_a: current,
                slack_p_kw: slack.0,
                slack_q_kvar: slack.1,
                iterations: 1,
                mismatch_pu: 0.0,
            }],
            step_weight: vec![1.0],
        }
    }

    #[test]
    fn transformer_rule_examples() {
        let o = options();
        assert_eq!(choose_transformer(420.0, 400.0, &o), TransformerChoice::Single(o[2]));
        assert_eq!(choose_transformer(390.0, 400.0, &o), TransformerChoice::Sufficient);
        assert_eq!(choose_transformer(700.0, 400.0, &o), TransformerChoice::Parallel(o[1]));
        assert_eq!(choose_transformer(1300.0, 400.0, &o), TransformerChoice::Unresolvable);
    }

    #[test]
    fn voltage_threshold_is_strict() {
        use crate::scenario::{radial_feeders, FeederLayout};
        let grid = radial_feeders(&FeederLayout { feeders: 1, ..Default::default() }, &["B1".into(), "B2".into()]);
        let r = result_with(vec![1.0, 383.9 / 400.0, 384.1 / 400.0], vec![10.0, 10.0], (5.0, 0.0));
        let v = detect_violations(&r, &grid, 0.04);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].location, "N1");
        assert!((v[0].magnitude - 4.025).abs() < 1e-9);
    }

    #[test]
    fn thermal_line_and_transformer() {
        use crate::scenario::{radial_feeders, FeederLayout};
        let grid = radial_feeders(&FeederLayout { feeders: 1, ..Default::default() }, &["B1".into(), "B2".into()]);
        let r = result_with(vec![1.0; 3], vec![1.05 * 275.0, 100.0], (400.0, 30.0));
        let v = detect_violations(&r, &grid, 0.04);
        let kinds: Vec<ViolationKind> = v.iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::ThermalLine, ViolationKind::ThermalTransformer]);
        assert!((v[0].magnitude - 1.05).abs() < 1e-12);
    }

    #[test]
    fn cost_of_cable_and_missing_type() {
        let mut c = CostCatalog::default();
        c.cables.insert("NAYY".into(), 100_000.0);
        let m = ExpansionMeasure {
            kind: MeasureKind::ParallelCable,
            affected: vec![],
            new_asset: "X".into(),
            cable_type: Some("NAYY".into()),
            length_m: 200.0,
            transformer_kva: None,
            units: 1,
            cost_eur: 0.0,
        };
        assert!((expansion_cost(std::slice::from_ref(&m), &c).unwrap() - 20_000.0).abs() < 1e-9);
        assert_eq!(expansion_cost(&[], &c).unwrap(), 0.0);
        let other = ExpansionMeasure { cable_type: Some("NA2XS".into()), ..m };
        assert!(matches!(expansion_cost(&[other], &c), Err(ExpansionError::MissingCatalogEntry(_))));
    }

    #[test]
    fn transformer_measure_updates_grid() {
        use crate::scenario::{radial_feeders, FeederLayout};
        let grid = radial_feeders(&FeederLayout::default(), &["B1".into()]);
        let catalog = CostCatalog::from_grid(&grid);
        let r = result_with(vec![1.0, 1.0], vec![0.0], (690.0, 100.0));
        let (g, m, unresolved) = reinforce_transformer(&grid, &r, &catalog).unwrap();
        assert!(unresolved.is_none());
        assert_eq!(m[0].kind, MeasureKind::TransformerParallel);
        assert_eq!(m[0].cost_eur, 34_000.0);
        assert_eq!(g.transformer.capacity_kva(), 800.0);
    }
}
