use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::ScenarioError;

pub const HOURS_PER_YEAR: f64 = 8760.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Season {
    Winter,
    Spring,
    Summer,
    Autumn,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Winter, Season::Spring, Season::Summer, Season::Autumn];

    pub fn of_month(month: u32) -> Season {
        match month {
            12 | 1 | 2 => Season::Winter,
            3..=5 => Season::Spring,
            6..=8 => Season::Summer,
            _ => Season::Autumn,
        }
    }

    fn representative_date(self, year: i32) -> NaiveDate {
        let month = match self {
            Season::Winter => 1,
            Season::Spring => 4,
            Season::Summer => 7,
            Season::Autumn => 10,
        };
        NaiveDate::from_ymd_opt(year, month, 15).expect("valid representative date")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeResolution {
    /// Four seasonal days of 24 hours, each hour weighted 91.25.
    #[default]
    RepresentativeDays,
    /// 365 days of 24 hours, unit weights.
    FullYear,
}

/// Hourly steps of one planning horizon with the number of hours each step stands for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon_year: i32,
    pub steps: Vec<NaiveDateTime>,
    pub step_weight: Vec<f64>,
    /// Steps per storage cycle; storage state is cyclic within each block.
    pub day_length: usize,
}

impl TimeGrid {
    pub fn new(resolution: TimeResolution, horizon_year: i32) -> Self {
        match resolution {
            TimeResolution::RepresentativeDays => Self::representative_days(horizon_year),
            TimeResolution::FullYear => Self::full_year(horizon_year),
        }
    }

    pub fn representative_days(horizon_year: i32) -> Self {
        let weight = HOURS_PER_YEAR / 96.0;
        let mut steps = Vec::with_capacity(96);
        for season in Season::ALL {
            let start = season.representative_date(horizon_year).and_hms_opt(0, 0, 0).unwrap();
            for h in 0..24 {
                steps.push(start + Duration::hours(h));
            }
        }
        Self { horizon_year, step_weight: vec![weight; steps.len()], steps, day_length: 24 }
    }

    pub fn full_year(horizon_year: i32) -> Self {
        let start = NaiveDate::from_ymd_opt(horizon_year, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let steps: Vec<NaiveDateTime> = (0..8760).map(|h| start + Duration::hours(h)).collect();
        Self { horizon_year, step_weight: vec![1.0; steps.len()], steps, day_length: 24 }
    }

    /// Same steps shifted to another calendar year.
    pub fn with_year(&self, year: i32) -> Self {
        let shift = year - self.horizon_year;
        let steps = self
            .steps
            .iter()
            .map(|t| {
                // Feb 29 falls back to Feb 28 in non-leap years.
                let d = NaiveDate::from_ymd_opt(t.year() + shift, t.month(), t.day())
                    .or_else(|| NaiveDate::from_ymd_opt(t.year() + shift, t.month(), 28))
                    .unwrap();
                d.and_time(t.time())
            })
            .collect();
        Self { horizon_year: year, steps, step_weight: self.step_weight.clone(), day_length: self.day_length }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn season(&self, step: usize) -> Season {
        Season::of_month(self.steps[step].month())
    }

    pub fn hour(&self, step: usize) -> usize {
        chrono::Timelike::hour(&self.steps[step]) as usize
    }

    /// Index ranges of the storage cycles.
    pub fn days(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        (0..self.len()).step_by(self.day_length.max(1)).map(move |s| s..(s + self.day_length).min(self.len()))
    }

    /// Weighted annual sum of a per-step series.
    pub fn annual(&self, series: &[f64]) -> f64 {
        series.iter().zip(&self.step_weight).map(|(v, w)| v * w).sum()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.steps.is_empty() {
            return Err(ScenarioError::validation("time_grid.steps", "at least one step required"));
        }
        if self.steps.len() != self.step_weight.len() {
            return Err(ScenarioError::validation("time_grid.step_weight", "length differs from steps"));
        }
        if self.step_weight.iter().any(|w| !(*w > 0.0)) {
            return Err(ScenarioError::validation("time_grid.step_weight", "weights must be positive"));
        }
        let total: f64 = self.step_weight.iter().sum();
        if (total - HOURS_PER_YEAR).abs() > 1e-6 {
            return Err(ScenarioError::validation(
                "time_grid.step_weight",
                format!("weights sum to {total}, expected {HOURS_PER_YEAR}"),
            ));
        }
        if self.day_length == 0 || !self.steps.len().is_multiple_of(self.day_length) {
            return Err(ScenarioError::validation("time_grid.day_length", "must divide the step count"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representative_grid_covers_a_year() {
        let g = TimeGrid::representative_days(2030);
        assert_eq!(g.len(), 96);
        g.validate().unwrap();
        assert_eq!(g.season(0), Season::Winter);
        assert_eq!(g.season(95), Season::Autumn);
        assert_eq!(g.days().count(), 4);
    }

    #[test]
    fn full_year_grid_is_valid() {
        let g = TimeGrid::full_year(2045);
        assert_eq!(g.len(), 8760);
        g.validate().unwrap();
        assert_eq!(g.days().count(), 365);
    }

    #[test]
    fn bad_weights_rejected() {
        let mut g = TimeGrid::representative_days(2030);
        g.step_weight[0] = 0.0;
        assert!(g.validate().is_err());
        let mut g = TimeGrid::representative_days(2030);
        g.step_weight[0] += 1.0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn with_year_keeps_weights() {
        let g = TimeGrid::representative_days(2045).with_year(2030);
        assert_eq!(g.horizon_year, 2030);
        assert_eq!(g.steps[0].year(), 2030);
        g.validate().unwrap();
    }
}
