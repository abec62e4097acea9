use serde::{Deserialize, Serialize};

use super::{HorizonSnapshot, IterationSnapshot, PipelineError, RunReport};
use crate::scenario::{GecMode, TechCategory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario: String,
    pub baseline: String,
    pub horizon: i32,
    pub metric: String,
    pub baseline_value: f64,
    pub value: f64,
    pub delta: f64,
    /// None when the baseline value is zero.
    pub delta_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GecRow {
    pub scenario: String,
    pub horizon: i32,
    pub iteration: usize,
    pub load_only: f64,
    pub load_plus_feed_in: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub gec_table: Vec<GecRow>,
}

impl Comparison {
    pub fn find(&self, scenario: &str, horizon: i32, metric: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.scenario == scenario && r.horizon == horizon && r.metric == metric)
    }
}

fn metrics(h: &HorizonSnapshot) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> =
        TechCategory::ALL.iter().map(|c| (format!("count_{}", c.as_str()), h.count(*c) as f64)).collect();
    let t = &h.totals;
    let gec = |m: GecMode| h.gec_by_mode.iter().find(|g| g.mode == m).map_or(0.0, |g| g.avg_gec);
    out.extend([
        ("capex_eur".to_string(), t.capex),
        ("opex_eur".to_string(), t.opex),
        ("grid_expansion_eur".to_string(), h.reinforcement.total_cost),
        ("grid_expansion_annual_eur".to_string(), h.annual_grid_cost),
        ("total_cost_eur".to_string(), h.total_cost()),
        ("emissions_kg".to_string(), t.emissions),
        ("grid_import_kwh".to_string(), t.grid_import),
        ("grid_export_kwh".to_string(), t.grid_export),
        ("measures".to_string(), h.reinforcement.measures.len() as f64),
        ("avg_gec_load".to_string(), gec(GecMode::LoadOnly)),
        ("avg_gec_load_feedin".to_string(), gec(GecMode::LoadPlusFeedIn)),
    ]);
    out
}

fn compare_snapshots(
    scenario: &str,
    baseline: &str,
    value: &IterationSnapshot,
    base: &IterationSnapshot,
    rows: &mut Vec<ComparisonRow>,
) {
    for h in &value.horizons {
        let Some(b) = base.horizon(h.horizon) else { continue };
        for ((metric, v), (_, bv)) in metrics(h).into_iter().zip(metrics(b)) {
            let delta = v - bv;
            rows.push(ComparisonRow {
                scenario: scenario.to_string(),
                baseline: baseline.to_string(),
                horizon: h.horizon,
                metric,
                baseline_value: bv,
                value: v,
                delta,
                delta_pct: (bv != 0.0).then(|| 100.0 * delta / bv.abs()),
            });
        }
    }
}

fn gec_rows(name: &str, snap: &IterationSnapshot, out: &mut Vec<GecRow>) {
    for h in &snap.horizons {
        let gec = |m: GecMode| h.gec_by_mode.iter().find(|g| g.mode == m).map_or(0.0, |g| g.avg_gec);
        out.push(GecRow {
            scenario: name.to_string(),
            horizon: h.horizon,
            iteration: snap.iteration,
            load_only: gec(GecMode::LoadOnly),
            load_plus_feed_in: gec(GecMode::LoadPlusFeedIn),
        });
    }
}

/// Final iterations of every run against the first run, plus each run's
/// last iteration against its own first (the effect of the surcharge feedback).
pub fn compare_scenarios(reports: &[RunReport]) -> Result<Comparison, PipelineError> {
    if reports.len() < 2 {
        return Err(PipelineError::TooFewReports(reports.len()));
    }
    let base = &reports[0];
    for r in &reports[1..] {
        if r.buildings != base.buildings {
            return Err(PipelineError::MismatchedStocks(format!("{} vs {}", base.scenario, r.scenario)));
        }
    }
    let mut c = Comparison::default();
    for r in &reports[1..] {
        compare_snapshots(&r.scenario, &base.scenario, r.last(), base.last(), &mut c.rows);
    }
    for r in reports {
        if r.iterations.len() > 1 {
            compare_snapshots(&format!("{}+gec", r.scenario), &r.scenario, r.last(), r.first(), &mut c.rows);
        }
        gec_rows(&r.scenario, r.last(), &mut c.gec_table);
    }
    Ok(c)
}
