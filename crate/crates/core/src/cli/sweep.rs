use rayon::prelude::*;

use crate::cli::config::SweepSpec;
use crate::cli::metrics::{MetricRegistry, PointContext};
use crate::error::{Error, Result};

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResultRow {
    pub series_values: Vec<f64>,
    pub axis_value: f64,
    /// One value per column of [`SweepTable::columns`]; empty when `error` is set.
    pub values: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub series_columns: Vec<String>,
    pub axis_column: String,
    pub columns: Vec<String>,
    pub rows: Vec<SweepResultRow>,
}

impl SweepTable {
    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }
}

/// Evaluates every requested output at every point of the sweep.
///
/// Points run in parallel; rows come back in point order. A failing point
/// yields a row carrying the error instead of aborting the sweep.
pub fn run_sweep(spec: &SweepSpec, registry: &MetricRegistry) -> Result<SweepTable> {
    spec.validate(registry)?;
    let metrics = spec
        .outputs
        .iter()
        .map(|name| {
            registry
                .get(name)
                .ok_or_else(|| Error::invalid("sweep.outputs", format!("unknown output `{name}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let columns = metrics
        .iter()
        .flat_map(|m| m.columns().iter().map(|c| c.to_string()))
        .collect();

    let rows = spec
        .points()
        .into_par_iter()
        .map(|point| {
            let ctx = PointContext {
                scenario: &point.scenario,
                plan: &spec.plan,
            };
            let mut values = Vec::new();
            let mut error = None;
            for metric in &metrics {
                match metric.evaluate(&ctx) {
                    Ok(v) if v.iter().all(|x| x.is_finite()) => values.extend(v),
                    Ok(_) => {
                        error = Some(format!("{}: non-finite value", metric.name()));
                        break;
                    }
                    Err(e) => {
                        error = Some(format!("{}: {e}", metric.name()));
                        break;
                    }
                }
            }
            if error.is_some() {
                values.clear();
            }
            SweepResultRow {
                series_values: point.series_values,
                axis_value: point.axis_value,
                values,
                error,
            }
        })
        .collect();

    Ok(SweepTable {
        series_columns: spec.series.iter().map(|s| s.param.column().to_string()).collect(),
        axis_column: spec.axis.column().to_string(),
        columns,
        rows,
    })
}
