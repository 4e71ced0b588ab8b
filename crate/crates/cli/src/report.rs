//! Rectangular result tables and their CSV renderings.

use std::io::Write;

use crate::CliError;

/// Marker printed for cells with no value, such as `zeta_max` without a violation.
pub const MISSING: &str = "--";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Missing,
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Missing => None,
        }
    }

    fn render(&self, precision: usize) -> String {
        match self {
            Cell::Num(v) => format_g(*v, precision),
            Cell::Missing => MISSING.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    /// Leading columns that identify a row (grid coordinates) rather than results.
    key_columns: usize,
    rows: Vec<Vec<Cell>>,
    /// Optional per-row series name, used only in plot data.
    labels: Vec<Option<String>>,
}

impl ResultTable {
    pub fn new(columns: &[&str], key_columns: usize) -> Self {
        assert!(key_columns <= columns.len());
        ResultTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            key_columns,
            rows: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<(), CliError> {
        self.push_labeled(row, None)
    }

    pub fn push_labeled(&mut self, row: Vec<Cell>, label: Option<&str>) -> Result<(), CliError> {
        if row.len() != self.columns.len() {
            return Err(CliError::Internal(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        if let Some(bad) = row.iter().position(|c| matches!(c, Cell::Num(v) if !v.is_finite())) {
            return Err(CliError::Internal(format!("non-finite value in column {}", self.columns[bad])));
        }
        self.rows.push(row);
        self.labels.push(label.map(str::to_string));
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W, precision: usize) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.render(precision)))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Long format: the key columns, then `series`, `quantity`, `value`; one line per result cell.
    /// Missing cells are skipped.
    pub fn write_plot_data<W: Write>(&self, out: W, precision: usize) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.columns[..self.key_columns].iter().map(String::as_str).collect();
        header.extend(["series", "quantity", "value"]);
        w.write_record(&header)?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let keys: Vec<String> = row[..self.key_columns].iter().map(|c| c.render(precision)).collect();
            let series = label.as_deref().unwrap_or("optimum");
            for (name, cell) in self.columns.iter().zip(row).skip(self.key_columns) {
                if let Cell::Num(v) = cell {
                    let mut rec = keys.clone();
                    rec.extend([series.to_string(), name.clone(), format_g(*v, precision)]);
                    w.write_record(&rec)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, precision: usize) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, precision).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// C-style `%.{p}g`: `p` significant digits, trailing zeros removed, exponent form when the
/// decimal exponent is below -4 or at least `p`.
pub fn format_g(v: f64, precision: usize) -> String {
    let p = precision.max(1);
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", p - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
