//! Long-format result tables and their CSV/JSON encodings.
//!
//! Floats are written with the shortest representation that parses back to
//! the same bits, so reading a file reproduces the grid exactly. Missing
//! values are empty CSV fields and JSON nulls.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub quantity: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(quantity: &str, columns: &[&str]) -> Self {
        Table { quantity: quantity.to_owned(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write<W: Write>(&self, format: Format, out: W) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                let mut out = out;
                serde_json::to_writer_pretty(&mut out, self)?;
                writeln!(out)
            }
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# quantity={}", self.quantity)?;
        writeln!(out, "{}", self.columns.join(","))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                if let Some(v) = v {
                    line.push_str(&format_float(*v));
                }
            }
            writeln!(out, "{line}")?;
        }
        out.flush()
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Table, String> {
        let mut lines = input.lines();
        let mut next = |what: &str| lines.next().ok_or_else(|| format!("missing {what}"))?.map_err(|e| e.to_string());
        let first = next("quantity line")?;
        let quantity = first.strip_prefix("# quantity=").ok_or_else(|| format!("bad first line {first:?}"))?;
        let columns: Vec<String> = next("header")?.split(',').map(str::to_owned).collect();
        let mut table = Table { quantity: quantity.to_owned(), columns, rows: Vec::new() };
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| e.to_string())?;
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| if f.is_empty() { Ok(None) } else { f.parse::<f64>().map(Some) })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| format!("row {i}: {e}"))?;
            if row.len() != table.columns.len() {
                return Err(format!("row {i}: {} fields, header has {}", row.len(), table.columns.len()));
            }
            table.rows.push(row);
        }
        Ok(table)
    }
}

/// Shortest round-trip form, in exponent notation outside `[1e-5, 1e16)`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let mut t = Table::new("demo", &["x", "y"]);
        t.rows.push(vec![Some(0.1 + 0.2), Some(1e-300)]);
        t.rows.push(vec![Some(f64::MIN_POSITIVE / 3.0), None]);
        t.rows.push(vec![Some(-0.0), Some(123456789.125)]);
        t.rows.push(vec![Some(7.811478274037049e-147), Some(6.02e23)]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().contains("7.811478274037049e-147,6.02e23"));
        let back = Table::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.columns, t.columns);
        for (a, b) in back.rows.iter().flatten().zip(t.rows.iter().flatten()) {
            assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
        }
    }

    #[test]
    fn json_keeps_nulls() {
        let mut t = Table::new("demo", &["x"]);
        t.rows.push(vec![None]);
        let mut buf = Vec::new();
        t.write(Format::Json, &mut buf).unwrap();
        let back: Table = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, t);
    }
}
