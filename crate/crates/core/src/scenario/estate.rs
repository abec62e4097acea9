//! Synthetic housing estate with stochastic construction years.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::building::{Building, BuildingKind, BuildingStock, ExistingAsset};
use super::profiles;
use super::time::{TimeGrid, TimeResolution};
use super::ScenarioError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearBin {
    pub start: i32,
    /// Inclusive.
    pub end: i32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct YearHistogram {
    pub bins: Vec<YearBin>,
}

impl YearHistogram {
    /// Approximate shares of the German residential stock by construction period.
    pub fn german_stock() -> Self {
        let bins = [
            (1870, 1918, 0.14),
            (1919, 1948, 0.12),
            (1949, 1978, 0.43),
            (1979, 1994, 0.15),
            (1995, 2009, 0.10),
            (2010, 2023, 0.06),
        ];
        Self { bins: bins.iter().map(|&(start, end, weight)| YearBin { start, end, weight }).collect() }
    }

    pub fn uniform(start: i32, end: i32) -> Self {
        Self { bins: vec![YearBin { start, end, weight: 1.0 }] }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.bins.is_empty() {
            return Err(ScenarioError::EmptyHistogram);
        }
        let total: f64 = self.bins.iter().map(|b| b.weight).sum();
        if self.bins.iter().any(|b| !(b.weight >= 0.0) || b.end < b.start) || !(total > 0.0) {
            return Err(ScenarioError::EmptyHistogram);
        }
        Ok(())
    }

    /// Index of the bin containing `year`.
    pub fn bin_of(&self, year: i32) -> Option<usize> {
        self.bins.iter().position(|b| (b.start..=b.end).contains(&year))
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, n: usize) -> Result<Vec<i32>, ScenarioError> {
        self.validate()?;
        let index =
            WeightedIndex::new(self.bins.iter().map(|b| b.weight)).map_err(|_| ScenarioError::EmptyHistogram)?;
        Ok((0..n)
            .map(|_| {
                let bin = &self.bins[index.sample(rng)];
                rng.gen_range(bin.start..=bin.end)
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstateParams {
    pub n_detached: usize,
    pub n_blocks: usize,
    pub year_distribution: YearHistogram,
    pub base_year: i32,
    pub time_resolution: TimeResolution,
    /// Share of buildings with an existing PV system.
    pub pv_share: f64,
}

impl Default for EstateParams {
    fn default() -> Self {
        Self {
            n_detached: 58,
            n_blocks: 22,
            year_distribution: YearHistogram::german_stock(),
            base_year: 2024,
            time_resolution: TimeResolution::RepresentativeDays,
            pv_share: 0.14,
        }
    }
}

/// Generates the estate with default parameters apart from counts and years.
pub fn generate_estate(
    seed: u64,
    n_detached: usize,
    n_blocks: usize,
    year_distribution: &YearHistogram,
) -> Result<BuildingStock, ScenarioError> {
    let params =
        EstateParams { n_detached, n_blocks, year_distribution: year_distribution.clone(), ..Default::default() };
    generate_estate_with(seed, &params)
}

/// Buildings are numbered `B001..` and attached to nodes `N001..` in order.
pub fn generate_estate_with(seed: u64, params: &EstateParams) -> Result<BuildingStock, ScenarioError> {
    params.year_distribution.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = TimeGrid::new(params.time_resolution, params.base_year);
    let climate = profiles::climate(&grid);
    let n = params.n_detached + params.n_blocks;

    let mut kinds: Vec<BuildingKind> = std::iter::repeat_n(BuildingKind::Detached, params.n_detached)
        .chain(std::iter::repeat_n(BuildingKind::ApartmentBlock, params.n_blocks))
        .collect();
    kinds.shuffle(&mut rng);
    let years = params.year_distribution.sample(&mut rng, n)?;

    let n_pv = (params.pv_share * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut has_pv = vec![false; n];
    for &i in order.iter().take(n_pv) {
        has_pv[i] = true;
    }

    let mut buildings = Vec::with_capacity(n);
    for i in 0..n {
        let kind = kinds[i];
        let year = years[i];
        let dwellings = match kind {
            BuildingKind::Detached => 1,
            BuildingKind::ApartmentBlock => profiles::DWELLINGS_PER_BLOCK,
        };
        let heat_scale = rng.gen_range(0.9..1.1);
        let el_scale = rng.gen_range(0.85..1.15);
        let annual_heat = profiles::specific_heat_demand(year) * profiles::floor_area(kind, dwellings) * heat_scale;
        let annual_el = profiles::annual_electricity(kind, dwellings) * el_scale;
        let heat_demand = profiles::heat_series(&grid, annual_heat);
        let electric_base_demand = profiles::electric_series(&grid, annual_el);

        let peak = heat_demand.iter().copied().fold(0.0, f64::max);
        let heating = if year >= 2010 {
            if rng.gen_bool(0.5) {
                "heat_pump"
            } else {
                "gas_boiler"
            }
        } else if rng.gen_bool(0.6) {
            "gas_boiler"
        } else {
            "oil_boiler"
        };
        let mut existing_assets = vec![ExistingAsset {
            technology: heating.to_string(),
            capacity: (peak * 1.3 * 2.0).ceil() / 2.0,
            remaining_lifetime: rng.gen_range(0..=24) as f64,
        }];
        if has_pv[i] {
            existing_assets.push(ExistingAsset {
                technology: "pv".to_string(),
                capacity: 5.0 * (dwellings as f64).sqrt().ceil(),
                remaining_lifetime: rng.gen_range(12..=22) as f64,
            });
        }

        buildings.push(Building {
            id: format!("B{:03}", i + 1),
            kind,
            construction_year: year,
            dwellings,
            heat_demand,
            electric_base_demand,
            existing_assets,
            grid_node: format!("N{:03}", i + 1),
            refurbished: false,
        });
    }

    let stock = BuildingStock { format_version: 1, base_year: params.base_year, time_grid: grid, climate, buildings };
    stock.validate()?;
    Ok(stock)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_kinds() {
        let s = generate_estate(1, 58, 22, &YearHistogram::uniform(1950, 2000)).unwrap();
        assert_eq!(s.len(), 80);
        assert_eq!(s.buildings.iter().filter(|b| b.kind == BuildingKind::Detached).count(), 58);
        assert!(s.buildings.iter().all(|b| (1950..=2000).contains(&b.construction_year)));
    }

    #[test]
    fn deterministic_for_seed() {
        let h = YearHistogram::german_stock();
        assert_eq!(generate_estate(1, 58, 22, &h).unwrap(), generate_estate(1, 58, 22, &h).unwrap());
    }

    #[test]
    fn pv_share_is_honoured() {
        let s = generate_estate(3, 58, 22, &YearHistogram::german_stock()).unwrap();
        let with_pv = s.buildings.iter().filter(|b| b.existing_assets.iter().any(|a| a.technology == "pv")).count();
        assert_eq!(with_pv, 11); // round(0.14 * 80)
        assert!(s.buildings.iter().all(|b| !b.existing_assets.is_empty()));
    }

    #[test]
    fn empty_histogram_rejected() {
        let h = YearHistogram { bins: vec![] };
        assert!(matches!(generate_estate(1, 1, 1, &h), Err(ScenarioError::EmptyHistogram)));
        let zero = YearHistogram { bins: vec![YearBin { start: 1900, end: 1950, weight: 0.0 }] };
        assert!(matches!(generate_estate(1, 1, 1, &zero), Err(ScenarioError::EmptyHistogram)));
    }

    #[test]
    fn series_lengths_match_time_grid() {
        let s = generate_estate(5, 3, 2, &YearHistogram::german_stock()).unwrap();
        for b in &s.buildings {
            assert_eq!(b.heat_demand.len(), s.time_grid.len());
            assert_eq!(b.electric_base_demand.len(), s.time_grid.len());
        }
    }
}
