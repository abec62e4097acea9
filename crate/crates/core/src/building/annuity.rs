use serde::{Deserialize, Serialize};

use crate::scenario::TechnologySpec;

/// Share of an investment paid back per year over `lifetime` years at `rate`.
///
/// Falls back to straight-line depreciation `1/n` at a zero rate.
pub fn annuity_factor(rate: f64, lifetime: u32) -> f64 {
    assert!(lifetime >= 1, "lifetime must be at least one year");
    assert!(rate >= 0.0, "rate must be non-negative");
    let n = lifetime as f64;
    if rate == 0.0 {
        return 1.0 / n;
    }
    // (1+r)^n - 1 via expm1 keeps precision for tiny rates.
    let growth = (n * rate.ln_1p()).exp_m1();
    rate * (growth + 1.0) / growth
}

/// Annual cost and emission coefficients of one technology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnuityCoefficients {
    pub capex_fix_annuity: f64,
    pub capex_var_annuity: f64,
    pub opex_per_output: f64,
    pub emis_fix_annuity: f64,
    pub emis_var_annuity: f64,
    pub emis_per_output: f64,
}

/// Costs are discounted at `rate`; emissions are spread evenly over the lifetime.
pub fn build_coefficients(spec: &TechnologySpec, rate: f64) -> AnnuityCoefficients {
    let cost = annuity_factor(rate, spec.lifetime);
    let physical = annuity_factor(0.0, spec.lifetime);
    AnnuityCoefficients {
        capex_fix_annuity: spec.capex_fixed * cost,
        capex_var_annuity: spec.capex_per_unit * cost,
        opex_per_output: spec.opex_per_unit_output,
        emis_fix_annuity: spec.emis_fixed * physical,
        emis_var_annuity: spec.emis_per_unit * physical,
        emis_per_output: spec.emis_per_output,
    }
}
