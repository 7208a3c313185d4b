use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::io::to_json_string;

/// A CSV file with a `#` schema line, a header and numeric cells. `None`
/// cells are written empty.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub schema: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl CsvTable {
    pub fn new(schema: impl Into<String>, columns: Vec<&'static str>) -> Self {
        Self {
            schema: schema.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn push_values(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| Some(v)).collect());
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {}", self.schema);
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.map(format_cell).unwrap_or_default()).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

/// Integers stay integers; everything else gets 17 significant digits.
fn format_cell(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}

/// Collects output files and writes them when the command is done, so a
/// failed run leaves no partial set behind.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(PathBuf, String)>,
}

impl OutputSet {
    pub fn json<T: Serialize>(&mut self, path: PathBuf, value: &T) -> Result<()> {
        self.files.push((path, to_json_string(value)?));
        Ok(())
    }

    pub fn csv(&mut self, path: PathBuf, table: &CsvTable) {
        self.files.push((path, table.render()));
    }

    pub fn text(&mut self, path: PathBuf, contents: String) {
        self.files.push((path, contents));
    }

    pub fn write(self) -> Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.files.len());
        for (path, contents) in self.files {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_schema_header_and_empty_cells() {
        let mut t = CsvTable::new("tau: stroke time", vec!["tau", "chi"]);
        t.push(vec![Some(2.0), None]);
        t.push_values(&[3.0, 0.125]);
        assert_eq!(t.render(), "# tau: stroke time\ntau,chi\n2,\n3,1.2500000000000000e-1\n");
    }

    #[test]
    fn cells_round_trip() {
        let v = 0.1f64 + 0.2;
        let s = format_cell(v);
        assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
    }
}
