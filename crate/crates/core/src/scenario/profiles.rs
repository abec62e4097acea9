//! Standard profile templates used to synthesise demand and weather series.
//!
//! Each building profile is a seasonal energy share times a normalised
//! 24-hour shape. Annual heat demand comes from a specific demand per m² that
//! depends on the construction-year band. All figures are documented
//! assumptions (see `docs/profiles.md`).

use super::building::{BuildingKind, Climate};
use super::time::{Season, TimeGrid};

/// Heating plus hot water, morning and evening peaks.
const HEAT_SHAPE: [f64; 24] = [
    2.6, 2.5, 2.5, 2.5, 2.7, 3.4, 5.3, 6.2, 5.6, 4.6, 4.0, 3.7, 3.5, 3.4, 3.4, 3.6, 4.2, 5.2, 5.8, 5.7, 5.0, 4.3, 3.6,
    3.0,
];

/// Household electricity, loosely following the residential standard load profile.
const ELECTRIC_SHAPE: [f64; 24] = [
    2.4, 2.1, 2.0, 2.0, 2.0, 2.3, 3.3, 4.3, 4.6, 4.4, 4.3, 4.6, 5.1, 4.9, 4.4, 4.1, 4.3, 5.1, 6.3, 6.9, 6.6, 5.6, 4.2,
    3.2,
];

pub struct SeasonParameters {
    pub heat_share: f64,
    pub electric_share: f64,
    /// kWh per kWp over one day.
    pub pv_daily_yield: f64,
    pub sunrise: f64,
    pub sunset: f64,
    pub mean_temperature: f64,
}

pub fn season_parameters(season: Season) -> SeasonParameters {
    match season {
        Season::Winter => SeasonParameters {
            heat_share: 0.44,
            electric_share: 0.28,
            pv_daily_yield: 0.9,
            sunrise: 8.0,
            sunset: 16.5,
            mean_temperature: 1.5,
        },
        Season::Spring => SeasonParameters {
            heat_share: 0.22,
            electric_share: 0.24,
            pv_daily_yield: 3.3,
            sunrise: 6.0,
            sunset: 19.5,
            mean_temperature: 9.5,
        },
        Season::Summer => SeasonParameters {
            heat_share: 0.06,
            electric_share: 0.22,
            pv_daily_yield: 4.6,
            sunrise: 5.0,
            sunset: 21.0,
            mean_temperature: 18.0,
        },
        Season::Autumn => SeasonParameters {
            heat_share: 0.28,
            electric_share: 0.26,
            pv_daily_yield: 1.9,
            sunrise: 7.0,
            sunset: 18.5,
            mean_temperature: 10.5,
        },
    }
}

/// Specific space heat plus hot-water demand in kWh/(m²·a) by construction year.
pub fn specific_heat_demand(construction_year: i32) -> f64 {
    let space = match construction_year {
        ..=1918 => 210.0,
        1919..=1948 => 190.0,
        1949..=1978 => 165.0,
        1979..=1994 => 130.0,
        1995..=2009 => 95.0,
        _ => 55.0,
    };
    space + 12.5
}

pub const DETACHED_FLOOR_AREA: f64 = 140.0;
pub const DWELLING_FLOOR_AREA: f64 = 70.0;
pub const DETACHED_ELECTRICITY: f64 = 3500.0;
pub const DWELLING_ELECTRICITY: f64 = 2500.0;
pub const DWELLINGS_PER_BLOCK: u32 = 6;

pub fn floor_area(kind: BuildingKind, dwellings: u32) -> f64 {
    match kind {
        BuildingKind::Detached => DETACHED_FLOOR_AREA,
        BuildingKind::ApartmentBlock => DWELLING_FLOOR_AREA * dwellings as f64,
    }
}

pub fn annual_electricity(kind: BuildingKind, dwellings: u32) -> f64 {
    match kind {
        BuildingKind::Detached => DETACHED_ELECTRICITY,
        BuildingKind::ApartmentBlock => DWELLING_ELECTRICITY * dwellings as f64,
    }
}

/// Spreads `annual` kWh over the grid with seasonal shares and a daily shape.
pub fn shaped_series(grid: &TimeGrid, annual: f64, shape: &[f64; 24], share: impl Fn(Season) -> f64) -> Vec<f64> {
    let shape_sum: f64 = shape.iter().sum();
    // Days represented by each season in this grid.
    let mut season_days = [0.0; 4];
    for t in 0..grid.len() {
        season_days[grid.season(t) as usize] += grid.step_weight[t] / 24.0;
    }
    (0..grid.len())
        .map(|t| {
            let season = grid.season(t);
            let days = season_days[season as usize];
            if days <= 0.0 {
                return 0.0;
            }
            let daily = share(season) * annual / days;
            daily * shape[grid.hour(t) % 24] / shape_sum
        })
        .collect()
}

pub fn heat_series(grid: &TimeGrid, annual: f64) -> Vec<f64> {
    shaped_series(grid, annual, &HEAT_SHAPE, |s| season_parameters(s).heat_share)
}

pub fn electric_series(grid: &TimeGrid, annual: f64) -> Vec<f64> {
    shaped_series(grid, annual, &ELECTRIC_SHAPE, |s| season_parameters(s).electric_share)
}

/// COP of an air-source heat pump supplying 55 °C at a Carnot quality grade of 0.45.
pub fn heat_pump_cop(outdoor_temperature: f64) -> f64 {
    let supply = 55.0;
    let lift = (supply - outdoor_temperature).max(15.0);
    (0.45 * (supply + 273.15) / lift).clamp(1.5, 5.0)
}

pub fn climate(grid: &TimeGrid) -> Climate {
    let mut pv_yield = Vec::with_capacity(grid.len());
    let mut outdoor_temperature = Vec::with_capacity(grid.len());
    for t in 0..grid.len() {
        let p = season_parameters(grid.season(t));
        let hour = grid.hour(t) as f64;
        // Half-sine irradiance over daylight hours, integrated per hour.
        let daylight = p.sunset - p.sunrise;
        let frac = |h: f64| ((h - p.sunrise) / daylight).clamp(0.0, 1.0);
        let energy = |h0: f64, h1: f64| {
            let (a, b) = (frac(h0), frac(h1));
            ((std::f64::consts::PI * a).cos() - (std::f64::consts::PI * b).cos()) / 2.0
        };
        pv_yield.push(p.pv_daily_yield * energy(hour, hour + 1.0));
        let diurnal = -3.0 * ((hour - 3.0) / 24.0 * 2.0 * std::f64::consts::PI).cos();
        outdoor_temperature.push(p.mean_temperature + diurnal);
    }
    let heat_pump_cop = outdoor_temperature.iter().map(|&t| heat_pump_cop(t)).collect();
    Climate { pv_yield, outdoor_temperature, heat_pump_cop }
}
