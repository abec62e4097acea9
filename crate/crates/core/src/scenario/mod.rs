//! Domain data: scenario configuration, building stock, technologies and the LV grid.

mod building;
mod estate;
mod grid;
pub mod profiles;
mod technology;
mod time;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use building::{Building, BuildingKind, BuildingStock, Climate, ExistingAsset};
pub use estate::{generate_estate, generate_estate_with, EstateParams, YearBin, YearHistogram};
pub use grid::{
    load_grid, radial_feeders, write_grid, FeederLayout, GridModel, GridNode, Line, Transformer, TransformerOption,
};
pub use technology::{default_technologies, Efficiency, TechCategory, TechnologySpec};
pub use time::{Season, TimeGrid, TimeResolution, HOURS_PER_YEAR};

pub const FORMAT_VERSION: u32 = 1;

pub fn format_version() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
    #[error("grid contains a cycle closed by line {line}")]
    Cycle { line: String },
    #[error("line {line} references unknown node {node}")]
    DanglingNode { line: String, node: String },
    #[error("{id}: rating must be positive")]
    NonPositiveRating { id: String },
    #[error("node {node} is not connected to the transformer")]
    Disconnected { node: String },
    #[error("construction-year histogram is empty or has no positive weight")]
    EmptyHistogram,
}

impl ScenarioError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Validation { field: field.into(), message: message.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ScenarioError::Io { path: path.to_path_buf(), source }
    }

    pub fn json(path: &Path, e: &serde_json::Error) -> Self {
        ScenarioError::Parse { path: path.to_path_buf(), line: e.line(), column: e.column(), message: e.to_string() }
    }

    pub fn csv(path: &Path, e: &csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        ScenarioError::Parse { path: path.to_path_buf(), line, column: 0, message: e.to_string() }
    }

    /// Errors caused by bad input rather than by the model.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, ScenarioError::Io { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GecMode {
    #[default]
    #[serde(alias = "load")]
    LoadOnly,
    #[serde(alias = "load+feedin")]
    LoadPlusFeedIn,
}

impl GecMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GecMode::LoadOnly => "load_only",
            GecMode::LoadPlusFeedIn => "load_plus_feed_in",
        }
    }
}

impl std::str::FromStr for GecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "load" | "load_only" => Ok(GecMode::LoadOnly),
            "load+feedin" | "load_plus_feed_in" => Ok(GecMode::LoadPlusFeedIn),
            other => Err(format!("unknown GEC mode '{other}' (expected load or load+feedin)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantileBand {
    pub share: f64,
    pub multiplier: f64,
}

pub fn default_quantiles() -> Vec<QuantileBand> {
    [0.6, 0.8, 1.0, 1.2, 1.4].iter().map(|&multiplier| QuantileBand { share: 0.2, multiplier }).collect()
}

/// Everything that distinguishes one scenario run from another.
///
/// Prices are in ct/kWh, emissions in kg CO2/kWh, rates as fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub format_version: u32,
    pub name: String,
    pub eta: f64,
    /// Retail electricity price before any grid-expansion surcharge.
    pub electricity_price_base: f64,
    /// Grid fee contained in the base price; reported next to the surcharge.
    pub grid_fee_base: f64,
    pub feed_in_tariff: f64,
    pub grid_emission_factor: f64,
    /// Target years; the later one is planned first.
    pub horizons: Vec<i32>,
    pub banned_categories: BTreeMap<i32, BTreeSet<TechCategory>>,
    pub min_adoption_rate: BTreeMap<i32, BTreeMap<TechCategory, f64>>,
    pub max_refurbishment_rate: BTreeMap<i32, f64>,
    pub gec_mode: GecMode,
    pub quantile_multipliers: Vec<QuantileBand>,
    pub discount_rate: f64,
    pub max_loop_iterations: usize,
    pub gec_tolerance: f64,
    /// Weight of the new surcharge in the price update; 1 means no damping.
    pub price_damping: f64,
    pub grid_asset_lifetime: u32,
    /// Share of heat demand removed by refurbishment.
    pub refurbishment_factor: f64,
    pub battery_round_trip: f64,
    /// Power factor of building loads (inductive).
    pub power_factor: f64,
    /// Allowed voltage deviation from the slack, as a fraction.
    pub voltage_band: f64,
    pub max_parallel_cables: usize,
    /// Replaces the built-in technology catalogue when present.
    pub technologies: Option<Vec<TechnologySpec>>,
    /// Used when the estate is generated rather than loaded.
    pub estate: EstateParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            format_version: FORMAT_VERSION,
            name: "scenario".to_string(),
            eta: 0.0,
            electricity_price_base: 32.0,
            grid_fee_base: 7.22,
            feed_in_tariff: 8.0,
            grid_emission_factor: 0.369,
            horizons: vec![2030, 2045],
            banned_categories: BTreeMap::new(),
            min_adoption_rate: BTreeMap::new(),
            max_refurbishment_rate: BTreeMap::new(),
            gec_mode: GecMode::LoadOnly,
            quantile_multipliers: default_quantiles(),
            discount_rate: 0.03,
            max_loop_iterations: 2,
            gec_tolerance: 0.01,
            price_damping: 1.0,
            grid_asset_lifetime: 40,
            refurbishment_factor: 0.4,
            battery_round_trip: 0.9,
            power_factor: 0.97,
            voltage_band: 0.04,
            max_parallel_cables: 3,
            technologies: None,
            estate: EstateParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn early_horizon(&self) -> i32 {
        *self.horizons.iter().min().expect("validated horizons")
    }

    pub fn late_horizon(&self) -> i32 {
        *self.horizons.iter().max().expect("validated horizons")
    }

    pub fn is_banned(&self, year: i32, category: TechCategory) -> bool {
        self.banned_categories.get(&year).is_some_and(|s| s.contains(&category))
    }

    pub fn adoption_rate(&self, year: i32, category: TechCategory) -> Option<f64> {
        self.min_adoption_rate.get(&year).and_then(|m| m.get(&category)).copied()
    }

    pub fn technologies_for(&self, stock: &BuildingStock) -> Vec<TechnologySpec> {
        self.technologies.clone().unwrap_or_else(|| default_technologies(&stock.climate.heat_pump_cop))
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        fn v(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
            ScenarioError::validation(field, message)
        }
        if self.format_version != FORMAT_VERSION {
            return Err(v("format_version", format!("unsupported version {}", self.format_version)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(v("eta", "must lie in [0, 1]"));
        }
        for (field, value) in [
            ("electricity_price_base", self.electricity_price_base),
            ("grid_fee_base", self.grid_fee_base),
            ("feed_in_tariff", self.feed_in_tariff),
            ("grid_emission_factor", self.grid_emission_factor),
            ("discount_rate", self.discount_rate),
            ("gec_tolerance", self.gec_tolerance),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(v(field, "must be finite and >= 0"));
            }
        }
        let mut years = self.horizons.clone();
        years.sort_unstable();
        years.dedup();
        if years.len() != 2 || years.len() != self.horizons.len() {
            return Err(v("horizons", "exactly two distinct target years required"));
        }
        if self.quantile_multipliers.is_empty() {
            return Err(v("quantile_multipliers", "at least one quantile required"));
        }
        let total: f64 = self.quantile_multipliers.iter().map(|q| q.share).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(v("quantile_multipliers", format!("shares sum to {total}, expected 1.0")));
        }
        if self.quantile_multipliers.iter().any(|q| !(q.share >= 0.0) || !(q.multiplier > 0.0)) {
            return Err(v("quantile_multipliers", "shares must be >= 0 and multipliers positive"));
        }
        for (year, rates) in &self.min_adoption_rate {
            for (category, rate) in rates {
                if !(0.0..=1.0).contains(rate) {
                    return Err(v(format!("min_adoption_rate.{year}.{category}"), "rate must lie in [0, 1]"));
                }
            }
        }
        for (year, rate) in &self.max_refurbishment_rate {
            if !(0.0..=1.0).contains(rate) {
                return Err(v(format!("max_refurbishment_rate.{year}"), "rate must lie in [0, 1]"));
            }
        }
        if self.max_loop_iterations == 0 {
            return Err(v("max_loop_iterations", "at least one iteration required"));
        }
        if !(self.price_damping > 0.0 && self.price_damping <= 1.0) {
            return Err(v("price_damping", "must lie in (0, 1]"));
        }
        if self.grid_asset_lifetime == 0 {
            return Err(v("grid_asset_lifetime", "must be at least 1 year"));
        }
        if !(0.0..1.0).contains(&self.refurbishment_factor) {
            return Err(v("refurbishment_factor", "must lie in [0, 1)"));
        }
        if !(self.battery_round_trip > 0.0 && self.battery_round_trip <= 1.0) {
            return Err(v("battery_round_trip", "must lie in (0, 1]"));
        }
        if !(self.power_factor > 0.0 && self.power_factor <= 1.0) {
            return Err(v("power_factor", "must lie in (0, 1]"));
        }
        if !(self.voltage_band > 0.0 && self.voltage_band < 1.0) {
            return Err(v("voltage_band", "must lie in (0, 1)"));
        }
        if self.max_parallel_cables == 0 {
            return Err(v("max_parallel_cables", "must be at least 1"));
        }
        if let Some(techs) = &self.technologies {
            if techs.is_empty() {
                return Err(v("technologies", "catalogue must not be empty"));
            }
            let mut ids = BTreeSet::new();
            for t in techs {
                t.validate()?;
                if !ids.insert(t.id.as_str()) {
                    return Err(v("technologies", format!("duplicate technology id {}", t.id)));
                }
            }
        }
        self.estate.year_distribution.validate()?;
        Ok(())
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    let config: ScenarioConfig = serde_json::from_str(&text).map_err(|e| ScenarioError::json(path, &e))?;
    config.validate()?;
    Ok(config)
}

pub fn save_scenario(config: &ScenarioConfig, path: &Path) -> Result<(), ScenarioError> {
    let text = serde_json::to_string_pretty(config).expect("config serializes");
    std::fs::write(path, text + "\n").map_err(|e| ScenarioError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn default_config_is_valid() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn reads_rates_per_year_and_category() {
        let f = write_tmp(
            r#"{"name": "rea", "min_adoption_rate": {"2030": {"heat_pump": 0.22}, "2045": {"heat_pump": 0.56}},
                "banned_categories": {"2030": ["oil_boiler"]}}"#,
        );
        let c = load_scenario(f.path()).unwrap();
        assert_eq!(c.adoption_rate(2030, TechCategory::HeatPump), Some(0.22));
        assert_eq!(c.adoption_rate(2045, TechCategory::HeatPump), Some(0.56));
        assert!(c.is_banned(2030, TechCategory::OilBoiler));
        assert!(!c.is_banned(2045, TechCategory::OilBoiler));
    }

    #[test]
    fn quantile_shares_must_sum_to_one() {
        let f = write_tmp(
            r#"{"quantile_multipliers": [{"share": 0.3, "multiplier": 1.0}, {"share": 0.6, "multiplier": 1.0}]}"#,
        );
        let err = load_scenario(f.path()).unwrap_err();
        assert!(matches!(&err, ScenarioError::Validation { field, .. } if field == "quantile_multipliers"), "{err}");
    }

    #[test]
    fn parse_errors_carry_position_and_field() {
        let f = write_tmp("{\n  \"name\": \"x\",\n  \"etaa\": 0.5\n}");
        match load_scenario(f.path()).unwrap_err() {
            ScenarioError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("etaa"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn gec_mode_aliases() {
        assert_eq!("load+feedin".parse::<GecMode>().unwrap(), GecMode::LoadPlusFeedIn);
        let m: GecMode = serde_json::from_str("\"load\"").unwrap();
        assert_eq!(m, GecMode::LoadOnly);
    }

    #[test]
    fn eta_out_of_range_rejected() {
        let c = ScenarioConfig { eta: 1.5, ..Default::default() };
        assert!(c.validate().unwrap_err().to_string().contains("eta"));
    }
}
