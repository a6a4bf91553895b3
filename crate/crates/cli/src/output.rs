//! Result tables and their CSV and plot-data renderings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    B(bool),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(x) => fmt_sig(*x),
            Cell::I(i) => i.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
        }
    }

    fn dat(&self) -> String {
        match self {
            Cell::B(b) => (*b as u8).to_string(),
            Cell::S(s) => format!("\"{s}\""),
            other => other.csv(),
        }
    }
}

/// Column-named rows. `blocks` lists row indices that start a new data block
/// (a blank line in plot data, as gnuplot's `splot` expects).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub blocks: Vec<usize>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn start_block(&mut self) {
        if !self.rows.is_empty() {
            self.blocks.push(self.rows.len());
        }
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()
    }

    pub fn write_dat(&self, path: &Path) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# {}", self.columns.join(" "))?;
        for (i, row) in self.rows.iter().enumerate() {
            if self.blocks.contains(&i) {
                writeln!(w)?;
            }
            let line: Vec<String> = row.iter().map(Cell::dat).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        w.flush()
    }
}

/// Formats with 12 significant digits, like C's `%.12g`.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        trim_zeros(format!("{:.*}", (11 - exp) as usize, v))
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-0.5), "-0.5");
        assert_eq!(fmt_sig(0.1 + 0.2), "0.3");
        assert_eq!(fmt_sig(0.060000000000000005), "0.06");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(2.0 / 3.0 * 1e-7), "6.66666666667e-8");
        assert_eq!(fmt_sig(123456789012345.0), "1.23456789012e14");
        assert_eq!(fmt_sig(99999999999.9), "99999999999.9");
        assert_eq!(fmt_sig(99999999999.99), "100000000000");
        assert_eq!(fmt_sig(f64::NAN), "NaN");
        assert_eq!(fmt_sig(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn formatted_values_round_trip_to_twelve_digits() {
        for &x in &[
            std::f64::consts::PI,
            -2.5e-9,
            7.123456789012345e5,
            1e-5,
            1e12,
        ] {
            let back: f64 = fmt_sig(x).parse().unwrap();
            assert!((back - x).abs() <= 5e-12 * x.abs(), "{x} -> {}", fmt_sig(x));
        }
    }

    #[test]
    fn plot_data_separates_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(["v0", "d", "ok"]);
        t.start_block();
        t.push(vec![Cell::F(1.0), Cell::I(1), Cell::B(true)]);
        t.start_block();
        t.push(vec![Cell::F(2.0), Cell::I(1), Cell::B(false)]);
        let p = dir.path().join("t.dat");
        t.write_dat(&p).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "# v0 d ok\n1 1 1\n\n2 1 0\n"
        );
        let p = dir.path().join("t.csv");
        t.write_csv(&p).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "v0,d,ok\n1,1,true\n2,1,false\n"
        );
    }
}
