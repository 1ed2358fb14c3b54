//! CSV and JSON serialization of sweep tables.
//!
//! Numbers are written with 12 significant digits in `%g` style, lines end in
//! LF, and nothing depends on time or environment, so equal tables give equal
//! bytes.

use std::io::{self, Write};

use crate::cli::sweep::{SweepResultRow, SweepTable};

const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (csv|json)")),
        }
    }
}

pub fn emit<W: Write>(table: &SweepTable, format: Format, out: &mut W) -> io::Result<()> {
    match format {
        Format::Csv => emit_csv(table, out),
        Format::Json => emit_json(table, out),
    }
}

fn header(table: &SweepTable) -> Vec<String> {
    let mut names = table.series_columns.clone();
    names.push(table.axis_column.clone());
    names.extend(table.columns.iter().cloned());
    if table.has_failures() {
        names.push("error".to_string());
    }
    names
}

fn leading_values(row: &SweepResultRow) -> impl Iterator<Item = f64> + '_ {
    row.series_values.iter().copied().chain(std::iter::once(row.axis_value))
}

fn emit_csv<W: Write>(table: &SweepTable, out: &mut W) -> io::Result<()> {
    writeln!(out, "{}", header(table).join(","))?;
    let failures = table.has_failures();
    for row in &table.rows {
        let mut cells: Vec<String> = leading_values(row).map(format_number).collect();
        match &row.error {
            None => cells.extend(row.values.iter().map(|v| format_number(*v))),
            Some(_) => cells.extend(std::iter::repeat_n(String::new(), table.columns.len())),
        }
        if failures {
            cells.push(row.error.as_deref().map(csv_quote).unwrap_or_default());
        }
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

fn emit_json<W: Write>(table: &SweepTable, out: &mut W) -> io::Result<()> {
    let names = header(table);
    if table.rows.is_empty() {
        return writeln!(out, "[]");
    }
    writeln!(out, "[")?;
    for (index, row) in table.rows.iter().enumerate() {
        let mut fields: Vec<String> = leading_values(row).map(format_number).collect();
        match &row.error {
            None => fields.extend(row.values.iter().map(|v| format_number(*v))),
            Some(_) => fields.extend(std::iter::repeat_n("null".to_string(), table.columns.len())),
        }
        if table.has_failures() {
            fields.push(match &row.error {
                Some(e) => serde_json::to_string(e).map_err(io::Error::other)?,
                None => "null".to_string(),
            });
        }
        let body = names
            .iter()
            .zip(&fields)
            .map(|(k, v)| Ok(format!("{}: {v}", serde_json::to_string(k).map_err(io::Error::other)?)))
            .collect::<io::Result<Vec<_>>>()?
            .join(", ");
        let separator = if index + 1 == table.rows.len() { "" } else { "," };
        writeln!(out, "  {{{body}}}{separator}")?;
    }
    writeln!(out, "]")
}

fn csv_quote(text: &str) -> String {
    format!("\"{}\"", text.replace('"', "\"\""))
}

/// `%.12g`: fixed notation for decimal exponents in `[-4, 12)`, scientific
/// otherwise, trailing zeros trimmed. The output is also a valid JSON number.
pub fn format_number(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let scientific = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, value);
    let (mantissa, exponent) = scientific.split_once('e').expect("scientific notation");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-4..SIGNIFICANT_DIGITS as i32).contains(&exponent) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exponent).max(0) as usize;
        trim_zeros(&format!("{value:.decimals$}"))
    } else {
        let sign = if exponent < 0 { "-" } else { "+" };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exponent.abs())
    }
}

fn trim_zeros(text: &str) -> String {
    if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        text.to_string()
    }
}
