//! Named sweep outputs.
//!
//! Each output is a [`Metric`] trait object held by a [`MetricRegistry`] and
//! selected at runtime by the names listed in `sweep.outputs`. A metric turns
//! one resolved operating point into one or more output columns.

use crate::analytic;
use crate::error::{Error, Result};
use crate::montecarlo::{self, TrialPlan};
use crate::sysmodel::Scenario;

/// Everything a metric may read at one sweep point.
#[derive(Debug, Clone, Copy)]
pub struct PointContext<'a> {
    pub scenario: &'a Scenario,
    pub plan: &'a TrialPlan,
}

pub trait Metric: Send + Sync {
    /// Name used in `sweep.outputs`.
    fn name(&self) -> &'static str;

    /// Column names, in the order [`evaluate`](Metric::evaluate) returns values.
    fn columns(&self) -> &'static [&'static str];

    fn is_monte_carlo(&self) -> bool {
        false
    }

    fn evaluate(&self, point: &PointContext<'_>) -> Result<Vec<f64>>;
}

/// Ordered collection of metrics; registration order is the canonical column
/// order.
#[derive(Default)]
pub struct MetricRegistry {
    metrics: Vec<Box<dyn Metric>>,
}

impl MetricRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// All built-in outputs.
    pub fn builtin() -> Self {
        let mut registry = Self::new();
        let builtins: Vec<Box<dyn Metric>> = vec![
            Box::new(IciExact),
            Box::new(IciFiniteGrid),
            Box::new(IciBoundsMetric),
            Box::new(IciApprox),
            Box::new(IciMonteCarlo),
            Box::new(CapacityExact),
            Box::new(CapacityApprox),
            Box::new(CapacityMonteCarlo),
            Box::new(SumRate),
        ];
        for metric in builtins {
            registry.register(metric).expect("built-in names are unique");
        }
        registry
    }

    pub fn register(&mut self, metric: Box<dyn Metric>) -> Result<()> {
        if self.get(metric.name()).is_some() {
            return Err(Error::invalid(
                "sweep.outputs",
                format!("output `{}` is already registered", metric.name()),
            ));
        }
        self.metrics.push(metric);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&dyn Metric> {
        self.metrics.iter().find(|m| m.name() == name).map(|m| m.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.metrics.iter().map(|m| m.name()).collect()
    }
}

struct IciExact;

impl Metric for IciExact {
    fn name(&self) -> &'static str {
        "ici_exact"
    }
    fn columns(&self) -> &'static [&'static str] {
        &["ici_exact"]
    }
    fn evaluate(&self, p: &PointContext<'_>) -> Result<Vec<f64>> {
        let s = p.scenario;
        Ok(vec![analytic::total_ici_power(s.mobility.max_velocity_mps, &s.system)?])
    }
}

/// ICI on the target sub-carrier of the actual `2N + 1` grid.
struct IciFiniteGrid;

impl Metric for IciFiniteGrid {
    fn name(&self) -> &'static str {
        "ici_finite_n"
    }
    fn columns(&self) -> &'static [&'static str] {
        &["ici_finite_n"]
    }
    fn evaluate(&self, p: &PointContext<'_>) -> Result<Vec<f64>> {
        let s = p.scenario;
        Ok(vec![analytic::finite_n_ici(
            p.plan.target_index,
            s.mobility.max_velocity_mps,
            &s.system,
        )?])
    }
}

struct IciBoundsMetric;

impl Metric for IciBoundsMetric {
    fn name(&self) -> &'static str {
        "ici_bounds"
    }
    fn columns(&self) -> &'static [&'static str] {
        &["ici_lower", "ici_upper"]
    }
    fn evaluate(&self, p: &PointContext<'_>) -> Result<Vec<f64>> {
        let s = p.scenario;
        let b = analytic::ici_bounds(s.mobility.max_velocity_mps, &s.system);
        Ok(vec![b.lower, b.upper])
    }
}

struct IciApprox;

impl Metric for IciApprox {
    fn name(&self) -> &'static str {
        "ici_approx"
    }
    fn columns(&self) -> &'static [&'static str] {
        &["ici_approx"]
    }
    fn evaluate(&self, p: &PointContext<'_>) -> Result<Vec<f64>> {
        let s = p.scenario;
        Ok(vec![analytic::ici_approx(s.mobility.max_velocity_mps, &s.system)])
    }
}

struct IciMonteCarlo;

impl Metric for IciMonteCarlo {
    fn name(&self) -> &'static str {
        "ici_mc"
    }
    fn columns(&self) -> &'static [&'static str] {
        &["ici_mc", "ici_mc_stderr"]
    }
    fn is_monte_carlo(&self) -> bool {
        true
    }
    fn evaluate(&self, p: &PointContext<'_>) -> Result<Vec<f64>> {
        let e = montecarlo::estimate_total_ici(p.plan, p.scenario)?;
        Ok(vec![e.mean, e.std_error])
    }
}

struct CapacityExact;

impl Metric for CapacityExact {
    fn name(&self) -> &'static str {
        "capacity_exact"
    }
    fn columns(&self) -> &'static [&'static str] {
        &["capacity_exact"]
    }
    fn evaluate(&self, p: &PointContext<'_>) -> Result<Vec<f64>> {
        let s = p.scenario;
        Ok(vec![analytic::capacity_upper(s.mobility.max_velocity_mps, &s.system)?])
    }
}

struct CapacityApprox;

impl Metric for CapacityApprox {
    fn name(&self) -> &'static str {
        "capacity_approx"
    }
    fn columns(&self) -> &'static [&'static str] {
        &["capacity_approx"]
    }
    fn evaluate(&self, p: &PointContext<'_>) -> Result<Vec<f64>> {
        let s = p.scenario;
        Ok(vec![analytic::capacity_upper_approx(s.mobility.max_velocity_mps, &s.system)?])
    }
}

struct CapacityMonteCarlo;

impl Metric for CapacityMonteCarlo {
    fn name(&self) -> &'static str {
        "capacity_mc"
    }
    fn columns(&self) -> &'static [&'static str] {
        &["capacity_mc", "capacity_mc_stderr"]
    }
    fn is_monte_carlo(&self) -> bool {
        true
    }
    fn evaluate(&self, p: &PointContext<'_>) -> Result<Vec<f64>> {
        let e = montecarlo::estimate_ergodic_capacity(p.plan, p.scenario)?;
        Ok(vec![e.mean, e.std_error])
    }
}

struct SumRate;

impl Metric for SumRate {
    fn name(&self) -> &'static str {
        "sum_rate"
    }
    fn columns(&self) -> &'static [&'static str] {
        &["sum_rate"]
    }
    fn evaluate(&self, p: &PointContext<'_>) -> Result<Vec<f64>> {
        let s = p.scenario;
        Ok(vec![analytic::sum_rate_upper(s.mobility.max_velocity_mps, &s.system)?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Constant;

    impl Metric for Constant {
        fn name(&self) -> &'static str {
            "ici_exact"
        }
        fn columns(&self) -> &'static [&'static str] {
            &["x"]
        }
        fn evaluate(&self, _: &PointContext<'_>) -> Result<Vec<f64>> {
            Ok(vec![1.0])
        }
    }

    #[test]
    fn builtin_names_in_canonical_order() {
        assert_eq!(
            MetricRegistry::builtin().names(),
            [
                "ici_exact",
                "ici_finite_n",
                "ici_bounds",
                "ici_approx",
                "ici_mc",
                "capacity_exact",
                "capacity_approx",
                "capacity_mc",
                "sum_rate"
            ]
        );
    }

    #[test]
    fn duplicate_registration_fails() {
        let mut r = MetricRegistry::builtin();
        assert!(r.register(Box::new(Constant)).is_err());
        assert!(r.get("nope").is_none());
    }

    #[test]
    fn columns_match_values() {
        let r = MetricRegistry::builtin();
        let scenario = Scenario::default();
        let plan = TrialPlan::new(200, 1).unwrap();
        let ctx = PointContext {
            scenario: &scenario,
            plan: &plan,
        };
        for name in r.names() {
            let m = r.get(name).unwrap();
            assert_eq!(m.evaluate(&ctx).unwrap().len(), m.columns().len(), "{name}");
        }
    }
}
