//! Minimal CSV tables: a header row of column names followed by data rows,
//! reals printed with 10 significant digits.

use std::fmt::Write as _;
use std::io::{self, Write};

const SIG_DIGITS: usize = 10;

/// Formats `x` with 10 significant digits: fixed notation for moderate
/// magnitudes, scientific otherwise, trailing zeros trimmed.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(v) => fmt_real(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_formatting() {
        assert_eq!(fmt_real(0.0), "0");
        assert_eq!(fmt_real(-0.0), "0");
        assert_eq!(fmt_real(0.5), "0.5");
        assert_eq!(fmt_real(1.0 / 3.0), "0.3333333333");
        assert_eq!(fmt_real(-0.2277203915), "-0.2277203915");
        assert_eq!(fmt_real(123456.789012345), "123456.789");
        assert_eq!(fmt_real(1.0e-7), "1e-7");
        assert_eq!(fmt_real(6.220960574271784e-16), "6.220960574e-16");
        assert_eq!(fmt_real(2.5e12), "2.5e12");
        assert_eq!(fmt_real(21.0), "21");
        assert_eq!(fmt_real(f64::NAN), "NaN");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["rho", "method", "value", "std_error"]);
        t.push(vec![Cell::Real(-0.5), "exact_sum".into(), Cell::Real(0.25), Cell::Empty]);
        assert_eq!(t.to_csv(), "rho,method,value,std_error\n-0.5,exact_sum,0.25,\n");
    }
}
