use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use super::time::TimeGrid;
use super::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildingKind {
    Detached,
    ApartmentBlock,
}

/// A technology already installed in a building.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExistingAsset {
    pub technology: String,
    pub capacity: f64,
    /// Years left at the stock's base year.
    pub remaining_lifetime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Building {
    pub id: String,
    pub kind: BuildingKind,
    pub construction_year: i32,
    pub dwellings: u32,
    /// kWh per step before any refurbishment.
    pub heat_demand: Vec<f64>,
    /// kWh per step.
    pub electric_base_demand: Vec<f64>,
    pub existing_assets: Vec<ExistingAsset>,
    pub grid_node: String,
    pub refurbished: bool,
}

impl Building {
    pub fn peak_heat(&self) -> f64 {
        self.heat_demand.iter().copied().fold(0.0, f64::max)
    }
}

/// Weather-derived per-step series shared by all buildings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Climate {
    /// kWh per kWp per step.
    pub pv_yield: Vec<f64>,
    /// Degrees Celsius.
    pub outdoor_temperature: Vec<f64>,
    pub heat_pump_cop: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingStock {
    #[serde(default = "super::format_version")]
    pub format_version: u32,
    pub base_year: i32,
    pub time_grid: TimeGrid,
    pub climate: Climate,
    pub buildings: Vec<Building>,
}

impl BuildingStock {
    pub fn len(&self) -> usize {
        self.buildings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buildings.is_empty()
    }

    pub fn building(&self, id: &str) -> Option<&Building> {
        self.buildings.iter().find(|b| b.id == id)
    }

    pub fn ids(&self) -> Vec<String> {
        self.buildings.iter().map(|b| b.id.clone()).collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.time_grid.validate()?;
        let n = self.time_grid.len();
        for (name, series) in [
            ("climate.pv_yield", &self.climate.pv_yield),
            ("climate.outdoor_temperature", &self.climate.outdoor_temperature),
            ("climate.heat_pump_cop", &self.climate.heat_pump_cop),
        ] {
            if series.len() != n {
                return Err(ScenarioError::validation(name, format!("expected {n} steps, got {}", series.len())));
            }
        }
        if self.climate.pv_yield.iter().any(|v| *v < 0.0) || self.climate.heat_pump_cop.iter().any(|v| *v <= 0.0) {
            return Err(ScenarioError::validation("climate", "pv yield must be >= 0 and COP > 0"));
        }
        let mut seen = BTreeSet::new();
        for b in &self.buildings {
            if !seen.insert(b.id.as_str()) {
                return Err(ScenarioError::validation("buildings.id", format!("duplicate building id {}", b.id)));
            }
            let field = |f: &str| format!("buildings[{}].{f}", b.id);
            if b.heat_demand.len() != n || b.electric_base_demand.len() != n {
                return Err(ScenarioError::validation(field("heat_demand"), format!("series must have {n} steps")));
            }
            if b.heat_demand.iter().chain(&b.electric_base_demand).any(|v| !(*v >= 0.0)) {
                return Err(ScenarioError::validation(field("heat_demand"), "demand values must be >= 0"));
            }
            if b.existing_assets.iter().any(|a| !(a.remaining_lifetime >= 0.0) || !(a.capacity >= 0.0)) {
                return Err(ScenarioError::validation(
                    field("existing_assets"),
                    "remaining lifetime and capacity must be >= 0",
                ));
            }
            if b.dwellings == 0 {
                return Err(ScenarioError::validation(field("dwellings"), "at least one dwelling"));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
        let stock: BuildingStock = serde_json::from_str(&text).map_err(|e| ScenarioError::json(path, &e))?;
        stock.validate()?;
        Ok(stock)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        let text = serde_json::to_string_pretty(self).expect("stock serializes");
        std::fs::write(path, text + "\n").map_err(|e| ScenarioError::io(path, e))
    }
}
