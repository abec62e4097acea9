//! Grid expansion costs per kWh and their distribution over buildings by peak power.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::building::{annuity_factor, BuildingSolution};
use crate::scenario::{GecMode, QuantileBand};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocationError {
    #[error("energy base is zero, cannot spread {0:.2} EUR/a")]
    ZeroEnergyBase(f64),
    #[error("no quantile bands given")]
    NoBands,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GecResult {
    pub mode: GecMode,
    /// EUR per year.
    pub total_expansion_cost: f64,
    /// kWh per year.
    pub load: f64,
    pub feed_in: f64,
    pub energy_base: f64,
    /// ct per kWh.
    pub avg_gec: f64,
}

/// One-off reinforcement spending spread over the asset lifetime.
pub fn annualized_expansion_cost(cost_eur: f64, rate: f64, lifetime: u32) -> f64 {
    cost_eur * annuity_factor(rate, lifetime)
}

/// Average surcharge in ct/kWh for annual cost `cost` over the chosen energy base.
pub fn gec_from_energy(cost: f64, load: f64, feed_in: f64, mode: GecMode) -> Result<GecResult, AllocationError> {
    let energy_base = match mode {
        GecMode::LoadOnly => load,
        GecMode::LoadPlusFeedIn => load + feed_in,
    };
    let avg_gec = if cost == 0.0 {
        0.0
    } else if energy_base > 0.0 {
        100.0 * cost / energy_base
    } else {
        return Err(AllocationError::ZeroEnergyBase(cost));
    };
    Ok(GecResult { mode, total_expansion_cost: cost, load, feed_in, energy_base, avg_gec })
}

/// Average surcharge using the buildings' annual grid import and export.
pub fn average_gec(cost: f64, solutions: &[BuildingSolution], mode: GecMode) -> Result<GecResult, AllocationError> {
    let load = solutions.iter().map(|s| s.annual_import).sum();
    let feed_in = solutions.iter().map(|s| s.annual_export).sum();
    gec_from_energy(cost, load, feed_in, mode)
}

/// Largest hourly import or export, kW.
pub fn peak_metric(solution: &BuildingSolution) -> f64 {
    let s = &solution.schedule;
    s.grid_import.iter().chain(&s.grid_export).copied().fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileAssignment {
    pub building_id: String,
    pub peak_kw: f64,
    pub quantile: usize,
    pub multiplier: f64,
    /// ct per kWh.
    pub adjusted_gec: f64,
}

/// Buildings per band: the floor of each share, leftovers one by one from the lowest band up.
pub fn bucket_sizes(n: usize, bands: &[QuantileBand]) -> Vec<usize> {
    let mut sizes: Vec<usize> = bands.iter().map(|b| (b.share * n as f64 + 1e-9).floor() as usize).collect();
    let mut left = n.saturating_sub(sizes.iter().sum());
    let mut k = 0;
    while left > 0 && !sizes.is_empty() {
        sizes[k % bands.len()] += 1;
        left -= 1;
        k += 1;
    }
    sizes
}

/// Ranks buildings by peak (ties by id) and assigns contiguous bands.
///
/// The result keeps the input order.
pub fn assign_quantiles(
    peaks: &[(String, f64)],
    avg_gec: f64,
    bands: &[QuantileBand],
) -> Result<Vec<QuantileAssignment>, AllocationError> {
    if bands.is_empty() {
        return Err(AllocationError::NoBands);
    }
    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by(|&a, &b| peaks[a].1.total_cmp(&peaks[b].1).then_with(|| peaks[a].0.cmp(&peaks[b].0)));
    let mut band_of = vec![0; peaks.len()];
    let mut pos = 0;
    for (q, size) in bucket_sizes(peaks.len(), bands).into_iter().enumerate() {
        for &i in &order[pos..pos + size] {
            band_of[i] = q;
        }
        pos += size;
    }
    Ok(peaks
        .iter()
        .zip(band_of)
        .map(|((id, peak), q)| QuantileAssignment {
            building_id: id.clone(),
            peak_kw: *peak,
            quantile: q,
            multiplier: bands[q].multiplier,
            adjusted_gec: bands[q].multiplier * avg_gec,
        })
        .collect())
}

pub fn assign_from_solutions(
    solutions: &[BuildingSolution],
    gec: &GecResult,
    bands: &[QuantileBand],
) -> Result<Vec<QuantileAssignment>, AllocationError> {
    let peaks: Vec<(String, f64)> = solutions.iter().map(|s| (s.building_id.clone(), peak_metric(s))).collect();
    assign_quantiles(&peaks, gec.avg_gec, bands)
}

/// Grid fee including the building's share of expansion costs, ct/kWh.
pub fn adjusted_price(base: f64, assignment: &QuantileAssignment) -> f64 {
    base + assignment.adjusted_gec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_quantiles;
    use approx::assert_relative_eq;

    fn peaks(values: &[f64]) -> Vec<(String, f64)> {
        values.iter().enumerate().map(|(i, v)| (format!("B{i:03}"), *v)).collect()
    }

    #[test]
    fn gec_examples() {
        assert_eq!(gec_from_energy(0.0, 100_000.0, 0.0, GecMode::LoadOnly).unwrap().avg_gec, 0.0);
        assert_relative_eq!(gec_from_energy(1000.0, 100_000.0, 0.0, GecMode::LoadOnly).unwrap().avg_gec, 1.0);
        let g = gec_from_energy(1000.0, 100_000.0, 58_700.0, GecMode::LoadPlusFeedIn).unwrap();
        assert_relative_eq!(g.avg_gec, 0.63, epsilon = 5e-3);
        assert!(matches!(gec_from_energy(5.0, 0.0, 0.0, GecMode::LoadOnly), Err(AllocationError::ZeroEnergyBase(_))));
    }

    #[test]
    fn five_buildings_in_peak_order() {
        let a = assign_quantiles(&peaks(&[3.0, 1.0, 5.0, 2.0, 4.0]), 1.0, &default_quantiles()).unwrap();
        let m: Vec<f64> = a.iter().map(|x| x.multiplier).collect();
        assert_eq!(m, vec![1.0, 0.6, 1.4, 0.8, 1.2]);
    }

    #[test]
    fn equal_peaks_follow_id_order() {
        let a = assign_quantiles(&peaks(&[2.0; 10]), 1.0, &default_quantiles()).unwrap();
        let q: Vec<usize> = a.iter().map(|x| x.quantile).collect();
        assert_eq!(q, vec![0, 0, 1, 1, 2, 2, 3, 3, 4, 4]);
    }

    #[test]
    fn remainders_go_low() {
        assert_eq!(bucket_sizes(83, &default_quantiles()), vec![17, 17, 17, 16, 16]);
        assert_eq!(bucket_sizes(80, &default_quantiles()), vec![16; 5]);
        assert_eq!(bucket_sizes(4, &default_quantiles()), vec![1, 1, 1, 1, 0]);
    }

    #[test]
    fn price_examples() {
        let mut a = QuantileAssignment {
            building_id: "B".into(),
            peak_kw: 1.0,
            quantile: 2,
            multiplier: 1.0,
            adjusted_gec: 0.7480,
        };
        assert_relative_eq!(adjusted_price(7.22, &a), 7.968, epsilon = 1e-12);
        a.multiplier = 0.6;
        a.adjusted_gec = 0.6 * 0.2178;
        assert_relative_eq!(adjusted_price(7.22, &a), 7.35068, epsilon = 1e-12);
    }
}
