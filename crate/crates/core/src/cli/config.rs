//! Flat `key = value` sweep configuration.
//!
//! ```text
//! # comment
//! system.carrier_frequency_hz = 900e6
//! mobility.max_velocity_mps = 100
//! sweep.axis = v_max
//! sweep.grid = 0, 10, 20
//! sweep.outputs = ici_exact, ici_mc
//! series.carrier_frequency_hz = 900e6, 3e9
//! mc.trials = 100000
//! ```
//!
//! Physical keys carry their unit as a suffix. Every key is optional; unset
//! keys take the defaults of [`SystemConfig`], [`CellConfig`],
//! [`MobilityModel`] and [`TrialPlan`].

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::cli::metrics::MetricRegistry;
use crate::error::{Error, Result};
use crate::montecarlo::TrialPlan;
use crate::sysmodel::{CellConfig, MobilityModel, Scenario, SystemConfig};

/// Monte Carlo outputs need at least this many trials.
pub const MIN_MC_TRIALS: u64 = 100;

const KNOWN_KEYS: &[&str] = &[
    "system.carrier_frequency_hz",
    "system.subcarrier_spacing_hz",
    "system.symbol_period_s",
    "system.half_subcarriers",
    "system.bandwidth_hz",
    "system.effective_power",
    "system.noise_variance",
    "system.snr_db",
    "system.wave_speed_mps",
    "mobility.max_velocity_mps",
    "cell.radius_m",
    "cell.path_loss_exponent",
    "cell.reference_loss",
    "cell.scatterer_radius_m",
    "cell.paths_per_device",
    "sweep.axis",
    "sweep.grid",
    "sweep.outputs",
    "mc.trials",
    "mc.seed",
    "mc.target_index",
    "mc.power_mode",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    MaxVelocity,
    SnrDb,
}

impl Axis {
    /// Config spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::MaxVelocity => "v_max",
            Axis::SnrDb => "snr_db",
        }
    }

    /// Output column name.
    pub fn column(self) -> &'static str {
        match self {
            Axis::MaxVelocity => "max_velocity_mps",
            Axis::SnrDb => "snr_db",
        }
    }

    fn apply(self, value: f64, scenario: &mut Scenario) {
        match self {
            Axis::MaxVelocity => scenario.mobility.max_velocity_mps = value,
            Axis::SnrDb => scenario.system = scenario.system.with_snr_db(value),
        }
    }
}

/// A scenario parameter that can be varied across curves of one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesParam {
    CarrierFrequency,
    SubcarrierSpacing,
    SnrDb,
    MaxVelocity,
    Bandwidth,
}

impl SeriesParam {
    const ALL: [SeriesParam; 5] = [
        SeriesParam::CarrierFrequency,
        SeriesParam::SubcarrierSpacing,
        SeriesParam::SnrDb,
        SeriesParam::MaxVelocity,
        SeriesParam::Bandwidth,
    ];

    pub fn column(self) -> &'static str {
        match self {
            SeriesParam::CarrierFrequency => "carrier_frequency_hz",
            SeriesParam::SubcarrierSpacing => "subcarrier_spacing_hz",
            SeriesParam::SnrDb => "snr_db",
            SeriesParam::MaxVelocity => "max_velocity_mps",
            SeriesParam::Bandwidth => "bandwidth_hz",
        }
    }

    fn key(self) -> String {
        format!("series.{}", self.column())
    }

    fn from_key(key: &str) -> Option<Self> {
        let name = key.strip_prefix("series.")?;
        Self::ALL.into_iter().find(|p| p.column() == name)
    }

    fn apply(self, value: f64, scenario: &mut Scenario) {
        let s = &mut scenario.system;
        match self {
            SeriesParam::CarrierFrequency => s.carrier_frequency_hz = value,
            SeriesParam::SubcarrierSpacing => s.subcarrier_spacing_hz = value,
            SeriesParam::SnrDb => *s = s.with_snr_db(value),
            SeriesParam::MaxVelocity => scenario.mobility.max_velocity_mps = value,
            SeriesParam::Bandwidth => s.bandwidth_hz = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub param: SeriesParam,
    pub values: Vec<f64>,
}

/// One fully resolved evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub series_values: Vec<f64>,
    pub axis_value: f64,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub base: Scenario,
    /// Curves; their cartesian product is swept, first series outermost.
    pub series: Vec<Series>,
    /// Output names in registry order.
    pub outputs: Vec<String>,
    pub plan: TrialPlan,
}

impl SweepSpec {
    /// All points, ordered by series combination and then by axis value.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut combos: Vec<Vec<f64>> = vec![Vec::new()];
        for series in &self.series {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    series.values.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push(*v);
                        next
                    })
                })
                .collect();
        }
        let mut points = Vec::with_capacity(combos.len() * self.grid.len());
        for combo in combos {
            for &axis_value in &self.grid {
                let mut scenario = self.base;
                for (series, value) in self.series.iter().zip(&combo) {
                    series.param.apply(*value, &mut scenario);
                }
                self.axis.apply(axis_value, &mut scenario);
                points.push(SweepPoint {
                    series_values: combo.clone(),
                    axis_value,
                    scenario,
                });
            }
        }
        points
    }

    /// Checks the spec and every point it expands to.
    pub fn validate(&self, registry: &MetricRegistry) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid("sweep.grid", "must not be empty"));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sweep.grid", "values must be finite"));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sweep.grid", "must be strictly increasing"));
        }
        if self.outputs.is_empty() {
            return Err(Error::invalid("sweep.outputs", "must name at least one output"));
        }
        for name in &self.outputs {
            if registry.get(name).is_none() {
                return Err(Error::invalid(
                    "sweep.outputs",
                    format!("unknown output `{name}` (known: {})", registry.names().join(", ")),
                ));
            }
        }
        for series in &self.series {
            if series.values.is_empty() {
                return Err(Error::invalid(series.param.key(), "must not be empty"));
            }
        }
        self.plan.validate()?;
        let needs_mc = self.outputs.iter().any(|n| registry.get(n).is_some_and(|m| m.is_monte_carlo()));
        if needs_mc && self.plan.trials < MIN_MC_TRIALS {
            return Err(Error::invalid(
                "mc.trials",
                format!("Monte Carlo outputs need at least {MIN_MC_TRIALS} trials"),
            ));
        }
        for point in self.points() {
            point.scenario.validate()?;
            point.scenario.system.check_index(self.plan.target_index).map_err(|_| {
                Error::invalid("mc.target_index", "must lie within [-N, N]")
            })?;
        }
        Ok(())
    }

    /// Canonical config text; parsing it yields an identical spec.
    pub fn to_config_string(&self) -> String {
        let s = &self.base.system;
        let c = &self.base.cell;
        let mut out = String::new();
        let mut put = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        put("system.carrier_frequency_hz", num(s.carrier_frequency_hz));
        put("system.subcarrier_spacing_hz", num(s.subcarrier_spacing_hz));
        put("system.symbol_period_s", num(s.symbol_period_s()));
        put("system.half_subcarriers", s.half_subcarriers.to_string());
        put("system.bandwidth_hz", num(s.bandwidth_hz));
        put("system.effective_power", num(s.effective_power));
        put("system.noise_variance", num(s.noise_variance));
        put("system.wave_speed_mps", num(s.wave_speed_mps));
        put("mobility.max_velocity_mps", num(self.base.mobility.max_velocity_mps));
        put("cell.radius_m", num(c.cell_radius_m));
        put("cell.path_loss_exponent", num(c.path_loss_exponent));
        put("cell.reference_loss", num(c.reference_loss));
        put("cell.scatterer_radius_m", num(c.scatterer_radius_m));
        put("cell.paths_per_device", c.paths_per_device.to_string());
        put("sweep.axis", self.axis.as_str().to_string());
        put("sweep.grid", list(&self.grid));
        put("sweep.outputs", self.outputs.join(", "));
        for series in &self.series {
            put(&series.param.key(), list(&series.values));
        }
        put("mc.trials", self.plan.trials.to_string());
        put("mc.seed", self.plan.seed.to_string());
        put("mc.target_index", self.plan.target_index.to_string());
        put("mc.power_mode", self.plan.mode.as_str().to_string());
        out
    }
}

/// Shortest text that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn list(values: &[f64]) -> String {
    values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(", ")
}

/// Parses and validates a sweep configuration document.
pub fn parse_config(text: &str, registry: &MetricRegistry) -> Result<SweepSpec> {
    let mut entries: HashMap<String, String> = HashMap::new();
    let mut series_order: Vec<SeriesParam> = Vec::new();
    for (number, raw) in text.lines().enumerate() {
        let line = number + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Syntax {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if let Some(param) = SeriesParam::from_key(key) {
            if !series_order.contains(&param) {
                series_order.push(param);
            }
        } else if !KNOWN_KEYS.contains(&key) {
            return Err(Error::UnknownKey(key.to_string()));
        }
        if entries.insert(key.to_string(), value.to_string()).is_some() {
            return Err(Error::Syntax {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    let doc = Document { entries };

    let defaults = SystemConfig::default();
    let spacing = doc.f64_or("system.subcarrier_spacing_hz", defaults.subcarrier_spacing_hz)?;
    let symbol_spacing_product = match doc.get("system.symbol_period_s") {
        Some(_) => SystemConfig::spacing_product_from_period(doc.f64_or("system.symbol_period_s", 0.0)?, spacing)?,
        None => defaults.symbol_spacing_product,
    };
    let mut system = SystemConfig {
        carrier_frequency_hz: doc.f64_or("system.carrier_frequency_hz", defaults.carrier_frequency_hz)?,
        subcarrier_spacing_hz: spacing,
        symbol_spacing_product,
        half_subcarriers: doc.int_or("system.half_subcarriers", defaults.half_subcarriers)?,
        bandwidth_hz: doc.f64_or("system.bandwidth_hz", defaults.bandwidth_hz)?,
        effective_power: doc.f64_or("system.effective_power", defaults.effective_power)?,
        noise_variance: defaults.noise_variance,
        wave_speed_mps: doc.f64_or("system.wave_speed_mps", defaults.wave_speed_mps)?,
    };
    match (doc.get("system.noise_variance"), doc.get("system.snr_db")) {
        (Some(_), Some(_)) => {
            return Err(Error::invalid(
                "system.snr_db",
                "set either system.snr_db or system.noise_variance, not both",
            ))
        }
        (Some(_), None) => system.noise_variance = doc.f64_or("system.noise_variance", 0.0)?,
        (None, Some(_)) => system = system.with_snr_db(doc.f64_or("system.snr_db", 0.0)?),
        (None, None) => {}
    }

    let cell_defaults = CellConfig::default();
    let cell = CellConfig {
        cell_radius_m: doc.f64_or("cell.radius_m", cell_defaults.cell_radius_m)?,
        path_loss_exponent: doc.f64_or("cell.path_loss_exponent", cell_defaults.path_loss_exponent)?,
        reference_loss: doc.f64_or("cell.reference_loss", cell_defaults.reference_loss)?,
        scatterer_radius_m: doc.f64_or("cell.scatterer_radius_m", cell_defaults.scatterer_radius_m)?,
        paths_per_device: doc.int_or("cell.paths_per_device", cell_defaults.paths_per_device)?,
    };
    let mobility = MobilityModel {
        max_velocity_mps: doc.f64_or("mobility.max_velocity_mps", MobilityModel::default().max_velocity_mps)?,
    };
    let base = Scenario {
        system,
        cell,
        mobility,
    };
    base.validate()?;

    let axis = match doc.get("sweep.axis").unwrap_or("v_max") {
        "v_max" => Axis::MaxVelocity,
        "snr_db" => Axis::SnrDb,
        other => return Err(Error::invalid("sweep.axis", format!("`{other}` is not v_max|snr_db"))),
    };
    let grid = match doc.get("sweep.grid") {
        Some(_) => doc.f64_list("sweep.grid")?,
        None => match axis {
            Axis::MaxVelocity => (0..=10).map(|k| f64::from(k) * 10.0).collect(),
            Axis::SnrDb => (0..=8).map(|k| f64::from(k) * 5.0).collect(),
        },
    };

    let requested: Vec<&str> = match doc.get("sweep.outputs") {
        Some(v) => split_list(v).collect(),
        None => vec!["ici_exact", "ici_bounds", "ici_approx"],
    };
    for name in &requested {
        if registry.get(name).is_none() {
            return Err(Error::invalid(
                "sweep.outputs",
                format!("unknown output `{name}` (known: {})", registry.names().join(", ")),
            ));
        }
    }
    let outputs: Vec<String> = registry
        .names()
        .into_iter()
        .filter(|n| requested.contains(n))
        .map(str::to_string)
        .collect();

    let series = series_order
        .into_iter()
        .map(|param| {
            Ok(Series {
                param,
                values: doc.f64_list(&param.key())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let plan_defaults = TrialPlan::default();
    let plan = TrialPlan {
        trials: doc.int_or("mc.trials", plan_defaults.trials)?,
        seed: doc.int_or("mc.seed", plan_defaults.seed)?,
        target_index: doc.int_or("mc.target_index", plan_defaults.target_index)?,
        mode: match doc.get("mc.power_mode") {
            Some(v) => v.parse()?,
            None => plan_defaults.mode,
        },
    };

    let spec = SweepSpec {
        axis,
        grid,
        base,
        series,
        outputs,
        plan,
    };
    spec.validate(registry)?;
    Ok(spec)
}

struct Document {
    entries: HashMap<String, String>,
}

impl Document {
    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_f64(key, v),
        }
    }

    fn int_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::invalid(key, format!("`{v}` is not a valid integer"))),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.get(key).unwrap_or("");
        split_list(raw).map(|v| parse_f64(key, v)).collect()
    }
}

fn split_list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let parsed: f64 = v
        .parse()
        .map_err(|_| Error::invalid(key, format!("`{v}` is not a number")))?;
    if !parsed.is_finite() {
        return Err(Error::invalid(key, "must be finite"));
    }
    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::PowerMode;
    use proptest::prelude::*;

    fn registry() -> MetricRegistry {
        MetricRegistry::builtin()
    }

    #[test]
    fn empty_document_gives_defaults() {
        let spec = parse_config("", &registry()).unwrap();
        assert_eq!(spec.base, Scenario::default());
        assert_eq!(spec.base.system.carrier_frequency_hz, 900e6);
        assert_eq!(spec.base.system.subcarrier_spacing_hz, 2500.0);
        assert_eq!(spec.base.system.symbol_period_s(), 1.0 / 2500.0);
        assert_eq!(spec.base.system.effective_power, 1.0);
        assert_eq!(spec.base.system.wave_speed_mps, 3e8);
        assert_eq!(spec.axis, Axis::MaxVelocity);
    }

    #[test]
    fn figure_three_style_document() {
        let text = "
            sweep.axis = v_max
            sweep.grid = 0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100
            sweep.outputs = ici_mc, ici_approx, ici_bounds, ici_exact   # any order
            series.carrier_frequency_hz = 900e6, 3e9
            mc.trials = 1000
        ";
        let spec = parse_config(text, &registry()).unwrap();
        assert_eq!(spec.outputs, ["ici_exact", "ici_bounds", "ici_approx", "ici_mc"]);
        assert_eq!(spec.grid.len(), 11);
        let points = spec.points();
        assert_eq!(points.len(), 22);
        assert_eq!(points[0].scenario.system.carrier_frequency_hz, 900e6);
        assert_eq!(points[11].scenario.system.carrier_frequency_hz, 3e9);
        assert_eq!(points[12].scenario.mobility.max_velocity_mps, 10.0);
    }

    #[test]
    fn negative_velocity_is_rejected() {
        let err = parse_config("mobility.max_velocity_mps = -5", &registry()).unwrap_err();
        assert!(err.to_string().contains("mobility.max_velocity_mps"), "{err}");
        let err = parse_config("sweep.grid = -5, 0", &registry()).unwrap_err();
        assert!(err.to_string().contains("mobility.max_velocity_mps"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("system.carrier_frequency = 9e8", &registry()).unwrap_err();
        assert!(matches!(&err, Error::UnknownKey(k) if k == "system.carrier_frequency"));
    }

    #[test]
    fn non_integer_symbol_product_is_rejected() {
        let err = parse_config("system.symbol_period_s = 5e-4", &registry()).unwrap_err();
        assert!(err.to_string().contains("system.symbol_period_s"), "{err}");
        let spec = parse_config("system.symbol_period_s = 8e-4", &registry()).unwrap();
        assert_eq!(spec.base.system.symbol_spacing_product, 2);
    }

    #[test]
    fn grid_must_increase() {
        assert!(parse_config("sweep.grid = 0, 10, 10", &registry()).is_err());
        assert!(parse_config("sweep.grid = ", &registry()).is_err());
    }

    #[test]
    fn mc_outputs_need_trials() {
        let err = parse_config("sweep.outputs = ici_mc\nmc.trials = 50", &registry()).unwrap_err();
        assert!(err.to_string().contains("mc.trials"));
        assert!(parse_config("sweep.outputs = ici_exact\nmc.trials = 50", &registry()).is_ok());
    }

    #[test]
    fn snr_and_noise_are_exclusive() {
        assert!(parse_config("system.snr_db = 20\nsystem.noise_variance = 0.01", &registry()).is_err());
        let spec = parse_config("system.snr_db = 0", &registry()).unwrap();
        assert_eq!(spec.base.system.noise_variance, 1.0);
    }

    #[test]
    fn syntax_errors_carry_line() {
        let err = parse_config("\n\nnot a pair", &registry()).unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 3, .. }));
        assert!(matches!(
            parse_config("mc.seed = 1\nmc.seed = 2", &registry()),
            Err(Error::Syntax { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn canonical_form_round_trips(
            fc in 1e8f64..6e9,
            v in 0.0f64..300.0,
            snr in -10.0f64..40.0,
            trials in 100u64..1_000_000,
            seed in any::<u64>(),
            target in -3i32..=3,
            product in 1u32..4,
            spacing_series in proptest::collection::vec(500.0f64..2500.0, 1..3),
            snr_axis in any::<bool>(),
        ) {
            let base = Scenario {
                system: SystemConfig {
                    carrier_frequency_hz: fc,
                    symbol_spacing_product: product,
                    ..SystemConfig::default()
                }
                .with_snr_db(snr),
                mobility: MobilityModel { max_velocity_mps: v },
                ..Scenario::default()
            };
            let spec = SweepSpec {
                axis: if snr_axis { Axis::SnrDb } else { Axis::MaxVelocity },
                grid: vec![0.0, 5.5, 20.0],
                base,
                series: vec![Series { param: SeriesParam::SubcarrierSpacing, values: spacing_series }],
                outputs: vec!["ici_exact".into(), "capacity_mc".into()],
                plan: TrialPlan { trials, seed, target_index: target, mode: PowerMode::Coherent },
            };
            let parsed = parse_config(&spec.to_config_string(), &registry()).unwrap();
            prop_assert_eq!(parsed, spec);
        }
    }
}
