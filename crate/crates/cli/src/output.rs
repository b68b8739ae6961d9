//! Self-describing CSV output: `#`-prefixed metadata lines (version,
//! command, resolved configuration as one JSON object, seed, tolerances),
//! then a column-name row, then the data.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Package version plus the git description embedded at build time.
pub fn version() -> &'static str {
    concat!(env!("CARGO_PKG_VERSION"), " (", env!("GIT_DESCRIBE"), ")")
}

/// One tabular result, with its provenance header.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// `(key, value)` pairs rendered as `# key: value`, in order.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Fixed data format: 13 significant digits, enough to reproduce any f64
/// comparison made downstream at the tolerances this tool works to.
pub fn format_float(x: f64) -> String {
    format!("{x:.12e}")
}

impl Report {
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            s.push_str("# ");
            s.push_str(k);
            s.push_str(": ");
            s.push_str(v);
            s.push('\n');
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.columns.len());
            let mut first = true;
            for x in row {
                if !first {
                    s.push(',');
                }
                s.push_str(&format_float(*x));
                first = false;
            }
            s.push('\n');
        }
        s
    }

    /// Write to `path`, or to stdout when no path is given.
    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        let text = self.render();
        match path {
            Some(p) => std::fs::write(p, text)?,
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

/// Extract the JSON payload of a `# config: …` header line, if present.
/// The inverse of what `render` writes — rerunning through this is the
/// reproducibility path.
pub fn config_line(text: &str) -> Option<&str> {
    text.lines()
        .find_map(|line| line.strip_prefix("# config: "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_header_columns_then_rows() {
        let r = Report {
            meta: vec![
                ("version".into(), "x 1.0".into()),
                ("config".into(), "{\"a\":1}".into()),
            ],
            columns: vec!["k".into(), "v".into()],
            rows: vec![vec![1.0, 2.5e-3], vec![2.0, f64::NAN]],
        };
        let text = r.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# version: x 1.0");
        assert_eq!(lines[1], "# config: {\"a\":1}");
        assert_eq!(lines[2], "k,v");
        assert!(lines[3].starts_with("1.000000000000e0,2.500000000000e-3"));
        assert!(lines[4].contains("NaN"));
        assert_eq!(config_line(&text), Some("{\"a\":1}"));
    }

    #[test]
    fn floats_round_trip_through_the_format() {
        for &x in &[
            1.0,
            -2.468013579e-5,
            8.8815863276e-2,
            1.9482845828e11,
            f64::MIN_POSITIVE,
        ] {
            let back: f64 = format_float(x).parse().unwrap();
            let rel = ((back - x) / x).abs();
            assert!(rel < 1e-12, "{x} -> {} -> {back}", format_float(x));
        }
    }
}
