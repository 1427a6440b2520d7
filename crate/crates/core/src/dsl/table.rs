use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ast::Format;
use super::DslError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub script: String,
    pub seed: u64,
    pub tolerance: f64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub run: String,
    pub quantity: String,
    pub value: f64,
}

/// Long-format results: one row per computed quantity, in execution order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub metadata: TableMetadata,
    pub rows: Vec<Row>,
}

impl ResultTable {
    pub const COLUMNS: [&'static str; 3] = ["run", "quantity", "value"];

    pub fn new(metadata: TableMetadata) -> Self {
        Self {
            metadata,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, run: &str, quantity: &str, value: f64) {
        self.rows.push(Row {
            run: run.to_string(),
            quantity: quantity.to_string(),
            value,
        });
    }

    pub fn get(&self, run: &str, quantity: &str) -> Option<f64> {
        self.rows
            .iter()
            .rev()
            .find(|r| r.run == run && r.quantity == quantity)
            .map(|r| r.value)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(Self::COLUMNS).expect("write to memory");
        for r in &self.rows {
            w.write_record([r.run.as_str(), r.quantity.as_str(), &format_float(r.value)])
                .expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 fields")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable table");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

pub fn emit_results(t: &ResultTable, format: Format, path: &Path) -> Result<(), DslError> {
    std::fs::write(path, t.render(format))
        .map_err(|e| DslError::io(format!("cannot write {}: {e}", path.display())))
}

/// `%.17g`: 17 significant digits, trailing zeros dropped.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    } else {
        strip_zeros(&format!("{x:.*}", (16 - exp) as usize)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> TableMetadata {
        TableMetadata {
            script: "t".into(),
            seed: 7,
            tolerance: 1e-9,
            version: "0".into(),
        }
    }

    #[test]
    fn printf_g17() {
        assert_eq!(format_float(0.1), "0.10000000000000001");
        assert_eq!(format_float(2.0), "2");
        assert_eq!(format_float(2.0f64.sqrt() * 2.0), "2.8284271247461903");
        assert_eq!(format_float(1e-9), "1.0000000000000001e-09");
        assert_eq!(format_float(1e20), "1e+20");
        assert_eq!(format_float(-0.5), "-0.5");
        assert_eq!(format_float(0.0001), "0.0001");
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(ResultTable::new(meta()).to_csv(), "run,quantity,value\r\n");
    }

    #[test]
    fn csv_quotes_fields() {
        let mut t = ResultTable::new(meta());
        t.push("a,b", "q\"x", 1.5);
        assert_eq!(t.to_csv(), "run,quantity,value\r\n\"a,b\",\"q\"\"x\",1.5\r\n");
    }

    #[test]
    fn json_round_trip() {
        let mut t = ResultTable::new(meta());
        t.push("chsh", "F", 2.0 * 2f64.sqrt());
        t.push("chsh", "E00", 0.1 + 0.2);
        assert_eq!(ResultTable::from_json(&t.to_json()).unwrap(), t);
    }
}
