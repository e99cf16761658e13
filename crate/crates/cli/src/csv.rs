//! Minimal CSV series with `# key: value` footer comments.

use std::fmt::Write as _;

use crate::error::CliError;

/// A rectangular numeric table plus trailing comment lines.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSeries {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub footer: Vec<(String, String)>,
}

/// Scientific notation with 17 significant digits, enough to round-trip f64.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

impl CsvSeries {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.footer.push((key.to_string(), value.to_string()));
    }

    pub fn footer_value(&self, key: &str) -> Option<&str> {
        self.footer.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        for (k, v) in &self.footer {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut lines = text.lines();
        let header_line = lines.next().ok_or_else(|| CliError::Config("empty CSV".into()))?;
        let mut series = CsvSeries::new(header_line.split(','));
        for (i, line) in lines.enumerate() {
            if let Some(comment) = line.strip_prefix("# ") {
                let (k, v) = comment
                    .split_once(": ")
                    .ok_or_else(|| CliError::Config(format!("line {}: malformed footer", i + 2)))?;
                series.note(k, v);
                continue;
            }
            let row = line
                .split(',')
                .map(|c| c.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Config(format!("line {}: {e}", i + 2)))?;
            if row.len() != series.header.len() {
                return Err(CliError::Config(format!("line {}: expected {} columns", i + 2, series.header.len())));
            }
            series.rows.push(row);
        }
        Ok(series)
    }
}
