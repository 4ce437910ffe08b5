//! Output tables: CSV with `#` comment headers, or JSON lines with a leading
//! meta object. Floats always carry 17 significant digits.

use std::io::Write;

use crate::error::{Result, SwiptError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
}

impl Cell {
    pub fn s(v: impl Into<String>) -> Cell {
        Cell::S(v.into())
    }

    fn plain(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::U(x) => x.to_string(),
            Cell::S(x) => x.clone(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::F(x) if x.is_finite() => fmt_f64(*x),
            Cell::F(_) => "null".into(),
            Cell::U(x) => x.to_string(),
            Cell::S(x) => serde_json::to_string(x).expect("string serialisation"),
        }
    }
}

/// `{:.16e}` for finite values, `NaN`, `inf` or `-inf` otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub meta: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: Cell) {
        self.meta.push((key.to_string(), value));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => self.render_csv(),
            Format::Jsonl => Ok(self.render_jsonl()),
        }
    }

    fn render_csv(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        for (k, v) in &self.meta {
            writeln!(buf, "# {k} = {}", v.plain()).expect("write to Vec");
        }
        let mut w = csv::Writer::from_writer(buf);
        let io = |e: csv::Error| SwiptError::Config(format!("csv output: {e}"));
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::plain)).map_err(io)?;
        }
        w.into_inner().map_err(|e| SwiptError::Config(format!("csv output: {e}")))
    }

    fn render_jsonl(&self) -> Vec<u8> {
        let object = |kind: &str, pairs: &mut dyn Iterator<Item = (&String, &Cell)>| {
            let mut line = format!("{{\"type\":\"{kind}\"");
            for (k, v) in pairs {
                line.push_str(&format!(",{}:{}", Cell::s(k.as_str()).json(), v.json()));
            }
            line.push_str("}\n");
            line
        };
        let mut out = object("meta", &mut self.meta.iter().map(|(k, v)| (k, v)));
        for row in &self.rows {
            out.push_str(&object("record", &mut self.columns.iter().zip(row.iter())));
        }
        out.into_bytes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_round_trip_exact() {
        for x in [421.15612345678901, 1e-300, 0.1, -3.5, 5e-4] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(2.0), "2.0000000000000000e0");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn renders_both_formats() {
        let mut t = Table::new(&["a", "b"]);
        t.meta("seed", Cell::U(7));
        t.push(vec![Cell::F(1.5), Cell::s("x")]);
        t.push(vec![Cell::F(f64::NAN), Cell::U(3)]);
        let csv = String::from_utf8(t.render(Format::Csv).unwrap()).unwrap();
        assert_eq!(csv, "# seed = 7\na,b\n1.5000000000000000e0,x\nNaN,3\n");
        let jl = String::from_utf8(t.render(Format::Jsonl).unwrap()).unwrap();
        let lines: Vec<&str> = jl.lines().collect();
        assert_eq!(lines[0], r#"{"type":"meta","seed":7}"#);
        assert_eq!(lines[2], r#"{"type":"record","a":null,"b":3}"#);
        for l in lines {
            serde_json::from_str::<serde_json::Value>(l).unwrap();
        }
    }
}
