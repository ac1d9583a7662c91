use serde::Serialize;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Int(v) => write!(out, "{v}").unwrap(),
            // 17 significant digits round-trip every f64.
            Cell::Float(v) => write!(out, "{v:.16e}").unwrap(),
            Cell::Text(s) => out.push_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// A named table, one row per sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    /// Lines explaining the columns, written into the CSV header.
    #[serde(skip)]
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            notes: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn column(&mut self, name: impl Into<String>, note: impl Into<String>) {
        let name = name.into();
        self.notes.push(format!("{name}: {}", note.into()));
        self.columns.push(name);
    }

    /// Adds a family of columns described by one note on `pattern`.
    pub fn column_group(&mut self, names: impl IntoIterator<Item = String>, pattern: &str, note: &str) {
        let before = self.columns.len();
        self.columns.extend(names);
        if self.columns.len() > before {
            self.notes.push(format!("{pattern}: {note}"));
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// CSV text with `#` comment lines for the preamble and column notes.
    pub fn to_csv(&self, preamble: &[String]) -> String {
        let mut out = String::new();
        for line in preamble {
            writeln!(out, "# {line}").unwrap();
        }
        writeln!(out, "# columns:").unwrap();
        for note in &self.notes {
            writeln!(out, "#   {note}").unwrap();
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            for (k, cell) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }
}
