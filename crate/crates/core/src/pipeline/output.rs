//! Output directory layout of a run and of a comparison.
//!
//! Every file is a pure function of the report, so identical runs give
//! byte-identical trees.

use std::fmt::Write as _;
use std::path::Path;

use super::{Comparison, PipelineError, RunReport};
use crate::expansion::{write_measures, write_measures_header};
use crate::scenario::TechCategory;

fn out_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Output { path: path.display().to_string(), message: e.to_string() }
}

fn put(dir: &Path, name: &str, text: &str) -> Result<(), PipelineError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| out_err(&path, e))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Writes run.json, plans.json and the CSV tables into `dir`.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| out_err(dir, e))?;
    put(dir, "run.json", &json(report))?;
    put(dir, "plans.json", &json(&report.plans))?;

    let mut measures = Vec::new();
    write_measures_header(&mut measures).map_err(|e| out_err(dir, e))?;
    for it in &report.iterations {
        for h in &it.horizons {
            write_measures(&mut measures, h.horizon, Some(it.iteration), &h.reinforcement.measures)
                .map_err(|e| out_err(dir, e))?;
        }
    }
    put(dir, "grid_measures.csv", &String::from_utf8(measures).expect("ascii"))?;

    let mut viol = String::from("iteration,horizon,stage,kind,location,step,magnitude\n");
    let mut gec = String::from(
        "iteration,horizon,mode,selected,expansion_cost_eur,annual_cost_eur,load_kwh,feed_in_kwh,energy_base_kwh,avg_gec_ct_per_kwh\n",
    );
    let mut buildings = String::from(
        "iteration,horizon,building,peak_kw,quantile,multiplier,adjusted_gec_ct_per_kwh,grid_fee_ct_per_kwh\n",
    );
    let mut totals = String::from(
        "iteration,horizon,capex_eur,opex_eur,emissions_kg,emis_fixed_kg,emis_operational_kg,grid_import_kwh,\
         grid_export_kwh,grid_expansion_eur,grid_expansion_annual_eur,total_cost_eur,avg_gec_ct_per_kwh,\
         mean_price_ct_per_kwh,max_deviation_initial_pct,max_deviation_final_pct,peak_kva,slack_drawn_kwh,\
         slack_fed_kwh,losses_kwh,gec_change\n",
    );
    let mut counts = String::from("iteration,horizon,category,count,required\n");
    for it in &report.iterations {
        let i = it.iteration;
        for h in &it.horizons {
            let y = h.horizon;
            let r = &h.reinforcement;
            for (stage, list) in [("initial", &r.initial_violations), ("residual", &r.residual_violations)] {
                for v in list {
                    let _ = writeln!(
                        viol,
                        "{i},{y},{stage},{},{},{},{:.6}",
                        v.kind.as_str(),
                        v.location,
                        v.step,
                        v.magnitude
                    );
                }
            }
            for g in &h.gec_by_mode {
                let _ = writeln!(
                    gec,
                    "{i},{y},{},{},{:.2},{:.4},{:.3},{:.3},{:.3},{:.6}",
                    g.mode.as_str(),
                    g.mode == report.gec_mode,
                    r.total_cost,
                    g.total_expansion_cost,
                    g.load,
                    g.feed_in,
                    g.energy_base,
                    g.avg_gec
                );
            }
            for a in &h.assignments {
                let _ = writeln!(
                    buildings,
                    "{i},{y},{},{:.6},{},{:.2},{:.6},{:.6}",
                    a.building_id,
                    a.peak_kw,
                    a.quantile,
                    a.multiplier,
                    a.adjusted_gec,
                    report.grid_fee_base + a.adjusted_gec
                );
            }
            let t = &h.totals;
            let _ = writeln!(
                totals,
                "{i},{y},{:.4},{:.4},{:.4},{:.4},{:.4},{:.3},{:.3},{:.2},{:.4},{:.4},{:.6},{:.6},{:.4},{:.4},{:.3},{:.3},{:.3},{:.3},{:.6}",
                t.capex,
                t.opex,
                t.emissions,
                t.emis_fixed,
                t.emis_operational,
                t.grid_import,
                t.grid_export,
                r.total_cost,
                h.annual_grid_cost,
                h.total_cost(),
                h.gec.avg_gec,
                h.mean_price,
                r.max_deviation_initial_pct,
                r.max_deviation_final_pct,
                r.peak_kva,
                h.slack.drawn_kwh,
                h.slack.fed_back_kwh,
                h.slack.losses_kwh,
                it.gec_change
            );
            for c in TechCategory::ALL {
                let required = h.rates.required.get(&c).map(|n| n.to_string()).unwrap_or_default();
                let _ = writeln!(counts, "{i},{y},{},{},{required}", c.as_str(), h.count(c));
            }
        }
    }
    put(dir, "violations.csv", &viol)?;
    put(dir, "gec.csv", &gec)?;
    put(dir, "gec_buildings.csv", &buildings)?;
    put(dir, "totals.csv", &totals)?;
    put(dir, "counts.csv", &counts)?;
    Ok(())
}

/// Reads run.json from a run directory (or the file itself).
pub fn read_report(path: &Path) -> Result<RunReport, PipelineError> {
    let file = if path.is_dir() { path.join("run.json") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).map_err(|e| out_err(&file, e))?;
    serde_json::from_str(&text).map_err(|e| out_err(&file, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// Writes comparison.csv and comparison_gec.csv into `dir`.
pub fn write_comparison(c: &Comparison, dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| out_err(dir, e))?;
    let mut rows = String::from("scenario,baseline,horizon,metric,baseline_value,value,delta,delta_pct\n");
    for r in &c.rows {
        let _ = writeln!(
            rows,
            "{},{},{},{},{:.6},{:.6},{:.6},{}",
            r.scenario,
            r.baseline,
            r.horizon,
            r.metric,
            r.baseline_value,
            r.value,
            r.delta,
            opt(r.delta_pct)
        );
    }
    put(dir, "comparison.csv", &rows)?;
    let mut gec = String::from("scenario,horizon,iteration,avg_gec_load,avg_gec_load_feedin\n");
    for g in &c.gec_table {
        let _ =
            writeln!(gec, "{},{},{},{:.6},{:.6}", g.scenario, g.horizon, g.iteration, g.load_only, g.load_plus_feed_in);
    }
    put(dir, "comparison_gec.csv", &gec)?;
    put(dir, "comparison.json", &json(c))
}
