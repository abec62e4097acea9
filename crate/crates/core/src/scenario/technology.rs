use serde::{Deserialize, Serialize};

use super::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechCategory {
    HeatPump,
    GasBoiler,
    OilBoiler,
    PelletBoiler,
    Pv,
    Battery,
    Refurbishment,
}

impl TechCategory {
    pub const ALL: [TechCategory; 7] = [
        TechCategory::HeatPump,
        TechCategory::GasBoiler,
        TechCategory::OilBoiler,
        TechCategory::PelletBoiler,
        TechCategory::Pv,
        TechCategory::Battery,
        TechCategory::Refurbishment,
    ];

    pub fn is_heat_supply(self) -> bool {
        matches!(
            self,
            TechCategory::HeatPump | TechCategory::GasBoiler | TechCategory::OilBoiler | TechCategory::PelletBoiler
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TechCategory::HeatPump => "heat_pump",
            TechCategory::GasBoiler => "gas_boiler",
            TechCategory::OilBoiler => "oil_boiler",
            TechCategory::PelletBoiler => "pellet_boiler",
            TechCategory::Pv => "pv",
            TechCategory::Battery => "battery",
            TechCategory::Refurbishment => "refurbishment",
        }
    }
}

impl std::fmt::Display for TechCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Conversion efficiency: a constant, or a per-step series (heat pump COP).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Efficiency {
    Constant(f64),
    Series(Vec<f64>),
}

impl Efficiency {
    pub fn at(&self, step: usize) -> f64 {
        match self {
            Efficiency::Constant(v) => *v,
            Efficiency::Series(s) => s[step],
        }
    }
}

impl Default for Efficiency {
    fn default() -> Self {
        Efficiency::Constant(1.0)
    }
}

/// Cost and emission coefficients of one investable technology.
///
/// Capacities are in kW (kWp for PV, kWh for batteries, measure count for
/// refurbishment) and are given per dwelling; candidate lists for a
/// building scale them by its dwelling count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnologySpec {
    pub id: String,
    pub category: TechCategory,
    /// EUR per installation.
    pub capex_fixed: f64,
    /// EUR per unit of capacity.
    pub capex_per_unit: f64,
    /// EUR per kWh of output.
    pub opex_per_unit_output: f64,
    /// kg CO2 per installation.
    pub emis_fixed: f64,
    /// kg CO2 per unit of capacity.
    pub emis_per_unit: f64,
    /// kg CO2 per kWh of output.
    pub emis_per_output: f64,
    pub lifetime: u32,
    #[serde(default)]
    pub efficiency_or_cop: Efficiency,
    pub min_capacity: f64,
    pub max_capacity: f64,
}

impl TechnologySpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let field = |name: &str| format!("technologies[{}].{name}", self.id);
        if self.lifetime < 1 {
            return Err(ScenarioError::validation(field("lifetime"), "lifetime must be at least 1 year"));
        }
        if !(self.min_capacity >= 0.0 && self.min_capacity <= self.max_capacity) {
            return Err(ScenarioError::validation(field("min_capacity"), "0 <= min_capacity <= max_capacity violated"));
        }
        if !self.max_capacity.is_finite() {
            return Err(ScenarioError::validation(field("max_capacity"), "capacity bound must be finite"));
        }
        let ok = match &self.efficiency_or_cop {
            Efficiency::Constant(v) => *v > 0.0,
            Efficiency::Series(s) => !s.is_empty() && s.iter().all(|v| *v > 0.0),
        };
        if !ok {
            return Err(ScenarioError::validation(field("efficiency_or_cop"), "efficiencies must be positive"));
        }
        let coefficients = [
            self.capex_fixed,
            self.capex_per_unit,
            self.opex_per_unit_output,
            self.emis_fixed,
            self.emis_per_unit,
            self.emis_per_output,
        ];
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(ScenarioError::validation(field("coefficients"), "coefficients must be finite"));
        }
        Ok(())
    }

    /// Copy with capacity bounds scaled for a building with `dwellings` units.
    /// Refurbishment is priced per dwelling, so its fixed terms scale as well.
    pub fn scaled_for(&self, dwellings: u32) -> TechnologySpec {
        let k = dwellings.max(1) as f64;
        let mut spec = self.clone();
        if spec.category == TechCategory::Refurbishment {
            spec.capex_fixed *= k;
            spec.emis_fixed *= k;
        } else {
            spec.min_capacity *= k;
            spec.max_capacity *= k;
        }
        spec
    }
}

/// Placeholder catalogue; figures are order-of-magnitude assumptions.
///
/// `heat_pump_cop` is the per-step COP series of the climate the estate uses.
pub fn default_technologies(heat_pump_cop: &[f64]) -> Vec<TechnologySpec> {
    let spec = |id: &str, category, capex: (f64, f64), opex, emis: (f64, f64, f64), lifetime, eff, cap: (f64, f64)| {
        TechnologySpec {
            id: id.to_string(),
            category,
            capex_fixed: capex.0,
            capex_per_unit: capex.1,
            opex_per_unit_output: opex,
            emis_fixed: emis.0,
            emis_per_unit: emis.1,
            emis_per_output: emis.2,
            lifetime,
            efficiency_or_cop: eff,
            min_capacity: cap.0,
            max_capacity: cap.1,
        }
    };
    vec![
        spec(
            "heat_pump",
            TechCategory::HeatPump,
            (10000.0, 750.0),
            0.0,
            (1500.0, 120.0, 0.0),
            20,
            Efficiency::Series(heat_pump_cop.to_vec()),
            (3.0, 9.0),
        ),
        // Fuel cost and emissions per kWh of heat include boiler efficiency.
        spec(
            "gas_boiler",
            TechCategory::GasBoiler,
            (4500.0, 90.0),
            0.12 / 0.92,
            (400.0, 15.0, 0.201 / 0.92),
            20,
            Efficiency::Constant(0.92),
            (4.0, 40.0),
        ),
        spec(
            "oil_boiler",
            TechCategory::OilBoiler,
            (5500.0, 110.0),
            0.11 / 0.90,
            (500.0, 18.0, 0.266 / 0.90),
            20,
            Efficiency::Constant(0.90),
            (4.0, 40.0),
        ),
        spec(
            "pellet_boiler",
            TechCategory::PelletBoiler,
            (14000.0, 300.0),
            0.07 / 0.88,
            (900.0, 30.0, 0.036 / 0.88),
            20,
            Efficiency::Constant(0.88),
            (4.0, 40.0),
        ),
        spec(
            "pv",
            TechCategory::Pv,
            (1500.0, 1450.0),
            0.0,
            (0.0, 650.0, 0.0),
            25,
            Efficiency::Constant(1.0),
            (2.0, 8.0),
        ),
        spec(
            "battery",
            TechCategory::Battery,
            (1200.0, 750.0),
            0.0,
            (0.0, 90.0, 0.0),
            12,
            Efficiency::Constant(0.9),
            (2.0, 12.0),
        ),
        spec(
            "refurbishment",
            TechCategory::Refurbishment,
            (22000.0, 0.0),
            0.0,
            (3000.0, 0.0, 0.0),
            35,
            Efficiency::Constant(1.0),
            (1.0, 1.0),
        ),
    ]
}
