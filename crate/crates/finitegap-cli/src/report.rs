//! Deterministic CSV and JSONL serialization of sample tables and reports.

use std::io::Write;

use finitegap::verify::VerificationReport;
use finitegap::Complex64 as C64;
use serde_json::{Map, Value};

use crate::config::Format;

/// One table cell. Complex cells take two CSV columns and a `[re, im]` JSON pair.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Complex(C64),
    Int(i64),
    Text(String),
    Bool(bool),
}

/// Named columns and rows; a column's kind is fixed by its first row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }
}

/// Shortest round-trip text, switching to exponent form for very small or large values.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn json_f64(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

fn json_cell(c: &Cell) -> Value {
    match c {
        Cell::Real(v) => json_f64(*v),
        Cell::Complex(z) => Value::Array(vec![json_f64(z.re), json_f64(z.im)]),
        Cell::Int(i) => Value::from(*i),
        Cell::Text(s) => Value::from(s.as_str()),
        Cell::Bool(b) => Value::from(*b),
    }
}

pub fn write_table(t: &Table, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            let complex_cols: Vec<bool> = match t.rows.first() {
                Some(r) => r.iter().map(|c| matches!(c, Cell::Complex(_))).collect(),
                None => vec![false; t.columns.len()],
            };
            let header: Vec<String> = t
                .columns
                .iter()
                .zip(&complex_cols)
                .map(|(name, &cx)| if cx { format!("re_{name},im_{name}") } else { csv_field(name) })
                .collect();
            writeln!(out, "{}", header.join(","))?;
            for row in &t.rows {
                let cells: Vec<String> = row
                    .iter()
                    .map(|c| match c {
                        Cell::Real(v) => fmt_f64(*v),
                        Cell::Complex(z) => format!("{},{}", fmt_f64(z.re), fmt_f64(z.im)),
                        Cell::Int(i) => i.to_string(),
                        Cell::Text(s) => csv_field(s),
                        Cell::Bool(b) => b.to_string(),
                    })
                    .collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Format::Jsonl => {
            for row in &t.rows {
                let obj: Map<String, Value> = t.columns.iter().cloned().zip(row.iter().map(json_cell)).collect();
                writeln!(out, "{}", Value::Object(obj))?;
            }
        }
    }
    Ok(())
}

/// The report as a table with columns {suite, id, eq, residual, tol, pass}.
pub fn report_table(report: &VerificationReport) -> Table {
    let mut t = Table::new(&["suite", "id", "eq", "residual", "tol", "pass"]);
    for c in &report.checks {
        t.rows.push(vec![
            Cell::Text(c.suite.clone()),
            Cell::Text(c.id.clone()),
            Cell::Text(c.eq.clone()),
            Cell::Real(c.residual),
            Cell::Real(c.tol),
            Cell::Bool(c.pass()),
        ]);
    }
    t
}

/// Serialized report; `wall_time` adds the single footer line that varies between runs.
pub fn emit_report(report: &VerificationReport, format: Format, wall_time: bool) -> Vec<u8> {
    let mut buf = Vec::new();
    write_table(&report_table(report), format, &mut buf).expect("writing to memory");
    if wall_time {
        match format {
            Format::Csv => buf.extend(format!("# wall_time={}\n", report.wall_time).bytes()),
            Format::Jsonl => {
                let mut m = Map::new();
                m.insert("wall_time".into(), json_f64(report.wall_time));
                buf.extend(format!("{}\n", Value::Object(m)).bytes());
            }
        }
    }
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use finitegap::verify::Check;

    fn report(checks: Vec<Check>) -> VerificationReport {
        VerificationReport { suite: "x".into(), checks, wall_time: 0.25 }
    }

    fn one() -> Check {
        Check { suite: "s".into(), id: "a.b".into(), eq: "f(x, y) = 0".into(), residual: 1e-12, tol: 1e-8, fixed_tol: false }
    }

    #[test]
    fn empty_report_is_header_only() {
        let csv = emit_report(&report(vec![]), Format::Csv, false);
        assert_eq!(String::from_utf8(csv).unwrap(), "suite,id,eq,residual,tol,pass\n");
        assert!(emit_report(&report(vec![]), Format::Jsonl, false).is_empty());
    }

    #[test]
    fn single_passing_check() {
        let csv = String::from_utf8(emit_report(&report(vec![one()]), Format::Csv, false)).unwrap();
        assert_eq!(csv.lines().nth(1).unwrap(), "s,a.b,\"f(x, y) = 0\",1e-12,1e-8,true");
        let js = String::from_utf8(emit_report(&report(vec![one()]), Format::Jsonl, false)).unwrap();
        assert_eq!(js, "{\"suite\":\"s\",\"id\":\"a.b\",\"eq\":\"f(x, y) = 0\",\"residual\":1e-12,\"tol\":1e-8,\"pass\":true}\n");
    }

    #[test]
    fn serialization_is_deterministic_and_footer_is_last() {
        let r = report(vec![one(), one()]);
        assert_eq!(emit_report(&r, Format::Jsonl, false), emit_report(&r, Format::Jsonl, false));
        let with = String::from_utf8(emit_report(&r, Format::Csv, true)).unwrap();
        assert_eq!(with.lines().last().unwrap(), "# wall_time=0.25");
    }

    #[test]
    fn complex_columns() {
        let mut t = Table::new(&["x", "u"]);
        t.rows.push(vec![Cell::Real(0.5), Cell::Complex(C64::new(1.0, -2.0))]);
        let mut buf = Vec::new();
        write_table(&t, Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,re_u,im_u\n0.5,1,-2\n");
        let mut buf = Vec::new();
        write_table(&t, Format::Jsonl, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "{\"x\":0.5,\"u\":[1.0,-2.0]}\n");
    }

    #[test]
    fn failed_check_serializes_infinity() {
        let mut c = one();
        c.residual = f64::INFINITY;
        let js = String::from_utf8(emit_report(&report(vec![c.clone()]), Format::Jsonl, false)).unwrap();
        assert!(js.contains("\"residual\":null") && js.contains("\"pass\":false"));
        let csv = String::from_utf8(emit_report(&report(vec![c]), Format::Csv, false)).unwrap();
        assert!(csv.contains(",inf,"));
    }
}
