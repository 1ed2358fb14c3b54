//! Built-in self-checks for the `check` subcommand: cross-route and
//! invariant oracles that should hold for any correct build.

use std::f64::consts::PI;

use crate::analytic;
use crate::error::Result;
use crate::montecarlo::{self, TrialPlan};
use crate::numerics::{integrate, sinc, sine_integral, QuadratureSpec};
use crate::sysmodel::{MobilityModel, Scenario, SystemConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Speed that produces a given normalized Doppler under `cfg`.
pub fn velocity_for(b: f64, cfg: &SystemConfig) -> f64 {
    b * cfg.wave_speed_mps * cfg.subcarrier_spacing_hz / (PI * cfg.carrier_frequency_hz)
}

fn outcome(name: &'static str, result: Result<(bool, String)>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome { name, passed, detail },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

pub fn run_checks() -> Vec<CheckOutcome> {
    let cfg = SystemConfig::default();
    vec![
        outcome("useful power: single vs double integral", (|| {
            let mut worst = 0.0f64;
            for i in 1..=10 {
                let v = velocity_for(0.2 * f64::from(i), &cfg);
                let a = analytic::effective_useful_power(v, &cfg)?;
                let b = analytic::effective_useful_power_by_leakage(v, &cfg)?;
                worst = worst.max((a - b).abs() / a);
            }
            Ok((worst <= 1e-8, format!("max relative gap {worst:.3e}")))
        })()),
        outcome("power conservation", (|| {
            let mut worst = 0.0f64;
            for i in 0..50 {
                let v = velocity_for(2.0 * f64::from(i) / 49.0, &cfg);
                let sum = analytic::effective_useful_power(v, &cfg)? + analytic::total_ici_power(v, &cfg)?;
                worst = worst.max((sum - cfg.effective_power).abs() / cfg.effective_power);
            }
            Ok((worst <= 1e-12, format!("max relative error {worst:.3e}")))
        })()),
        outcome("ICI polynomial sandwich, b in (0, 0.6]", (|| {
            let mut violations = 0;
            for i in 1..=100 {
                let v = velocity_for(0.006 * f64::from(i), &cfg);
                if !analytic::ici_bounds(v, &cfg).contains(analytic::total_ici_power(v, &cfg)?) {
                    violations += 1;
                }
            }
            Ok((violations == 0, format!("{violations} violations")))
        })()),
        outcome("ICI approximation error <= b^4/50", (|| {
            let mut violations = 0;
            for i in 1..=50 {
                let b = 0.01 * f64::from(i);
                let v = velocity_for(b, &cfg);
                let gap = (analytic::ici_approx(v, &cfg) - analytic::total_ici_power(v, &cfg)?).abs();
                if gap > b.powi(4) / 50.0 * cfg.effective_power {
                    violations += 1;
                }
            }
            Ok((violations == 0, format!("{violations} violations")))
        })()),
        outcome("leakage symmetry", (|| {
            let mut worst = 0.0f64;
            for k in 0..20 {
                let offset = 731.0 * f64::from(k);
                let d = analytic::leakage(offset, 100.0, &cfg)? - analytic::leakage(-offset, 100.0, &cfg)?;
                worst = worst.max(d.abs());
            }
            Ok((worst <= 1e-9, format!("max gap {worst:.3e}")))
        })()),
        outcome("leakage sum tends to one", (|| {
            let s = analytic::leakage_sum(0, 1000, 100.0, &cfg)?;
            Ok(((s - 1.0).abs() <= 5e-4, format!("sum at N=1000: {s:.9}")))
        })()),
        outcome("sinc-squared integral identity", (|| {
            let spec = QuadratureSpec::new(1e-13, 1e-15, 1 << 14)?;
            let mut worst = 0.0f64;
            for i in 1..=20 {
                let x = f64::from(i);
                let lhs = integrate(|t| sinc(t / PI).powi(2), 0.0, x, &spec)?;
                let rhs = sine_integral(2.0 * x)? - x.sin().powi(2) / x;
                worst = worst.max((lhs - rhs).abs() / rhs.abs());
            }
            Ok((worst <= 1e-9, format!("max relative gap {worst:.3e}")))
        })()),
        outcome("Monte Carlo ICI vs finite grid", (|| {
            let scenario = Scenario {
                mobility: MobilityModel::new(100.0)?,
                ..Scenario::default()
            };
            let e = montecarlo::estimate_total_ici(&TrialPlan::new(20_000, 7)?, &scenario)?;
            let exact = analytic::finite_n_ici(0, 100.0, &scenario.system)?;
            Ok((
                e.agrees_with(exact, 4.0),
                format!("{:.6e} ± {:.1e} vs {exact:.6e}", e.mean, e.std_error),
            ))
        })()),
    ]
}
