//! Single-point evaluation for the `analytic` subcommand.

use crate::analytic::{self, NormalizedDoppler};
use crate::error::Result;
use crate::sysmodel::Scenario;

/// Every closed-form and quadrature quantity at one operating point, as
/// `(name, value)` pairs in display order.
pub fn analytic_report(scenario: &Scenario, target_index: i32) -> Result<Vec<(&'static str, f64)>> {
    scenario.validate()?;
    let v = scenario.mobility.max_velocity_mps;
    let cfg = &scenario.system;
    let budget = analytic::power_budget(v, cfg)?;
    let bounds = analytic::ici_bounds(v, cfg);
    let threshold = analytic::approx_validity_threshold(cfg);
    Ok(vec![
        ("max_velocity_mps", v),
        ("normalized_doppler", NormalizedDoppler::from_config(v, cfg).value()),
        ("useful_power", budget.useful),
        ("useful_power_by_leakage", analytic::effective_useful_power_by_leakage(v, cfg)?),
        ("leaked_power", budget.leaked),
        ("ici_exact", budget.ici),
        ("ici_finite_n", analytic::finite_n_ici(target_index, v, cfg)?),
        ("ici_lower", bounds.lower),
        ("ici_upper", bounds.upper),
        ("ici_approx", analytic::ici_approx(v, cfg)),
        ("approx_threshold_mps", threshold),
        ("approx_valid", if v < threshold { 1.0 } else { 0.0 }),
        ("capacity_exact", analytic::capacity_upper(v, cfg)?),
        ("capacity_approx", analytic::capacity_upper_approx(v, cfg)?),
        ("sum_rate", analytic::sum_rate_upper(v, cfg)?),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_at_default_point() {
        let report = analytic_report(&Scenario::default(), 0).unwrap();
        let get = |k: &str| report.iter().find(|(n, _)| *n == k).unwrap().1;
        assert!((get("normalized_doppler") - 0.377).abs() < 1e-3);
        assert!((get("useful_power") - get("useful_power_by_leakage")).abs() < 1e-8);
        assert_eq!(get("approx_valid"), 1.0);
    }
}
