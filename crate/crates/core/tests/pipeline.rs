use gridloop::expansion::CostCatalog;
use gridloop::pipeline::{read_report, write_comparison, write_outputs, LoopStatus};
use gridloop::scenario::{generate_estate_with, radial_feeders, FeederLayout, ScenarioConfig, TechCategory};
use gridloop::{compare_scenarios, run_pipeline, PipelineError};

fn small_config(name: &str) -> ScenarioConfig {
    let mut c = ScenarioConfig { name: name.into(), max_loop_iterations: 2, ..Default::default() };
    c.estate.n_detached = 8;
    c.estate.n_blocks = 2;
    c
}

#[test]
fn two_scenarios_run_write_and_compare() {
    let base = small_config("base");
    let stock = generate_estate_with(3, &base.estate).unwrap();
    let grid = radial_feeders(&FeederLayout { feeders: 2, ..Default::default() }, &stock.ids());
    let catalog = CostCatalog::from_grid(&grid);

    let a = run_pipeline(&base, &stock, &grid, &catalog).unwrap();
    assert!(!a.iterations.is_empty() && a.iterations.len() <= 2);
    assert_eq!(a.status == LoopStatus::Converged, a.last().gec_change <= base.gec_tolerance);
    for h in &a.last().horizons {
        let n: usize = h.counts.iter().filter(|(c, _)| c.is_heat_supply()).map(|(_, n)| n).sum();
        assert_eq!(n, stock.len(), "every building has one heat supply in {}", h.horizon);
        assert_eq!(h.assignments.len(), stock.len());
    }

    let mut forced = small_config("forced");
    forced.min_adoption_rate.insert(2045, [(TechCategory::HeatPump, 1.0)].into());
    let b = run_pipeline(&forced, &stock, &grid, &catalog).unwrap();
    assert_eq!(b.last().horizon(2045).unwrap().count(TechCategory::HeatPump), stock.len());

    let dir = tempfile::tempdir().unwrap();
    write_outputs(&a, &dir.path().join("a")).unwrap();
    write_outputs(&b, &dir.path().join("b")).unwrap();
    for f in [
        "run.json",
        "plans.json",
        "grid_measures.csv",
        "violations.csv",
        "gec.csv",
        "gec_buildings.csv",
        "totals.csv",
        "counts.csv",
    ] {
        assert!(dir.path().join("a").join(f).is_file(), "{f}");
    }
    let reread = read_report(&dir.path().join("a")).unwrap();
    assert_eq!(reread.iterations, a.iterations);

    let c = compare_scenarios(&[reread, read_report(&dir.path().join("b")).unwrap()]).unwrap();
    let row = c.find("forced", 2045, "count_heat_pump").unwrap();
    assert_eq!(row.value, stock.len() as f64);
    write_comparison(&c, &dir.path().join("cmp")).unwrap();
    assert!(dir.path().join("cmp/comparison.csv").is_file());
    assert!(matches!(compare_scenarios(&[a]), Err(PipelineError::TooFewReports(1))));
}
