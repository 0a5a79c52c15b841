//! Report tables and their markdown and CSV renderings.
//!
//! Numbers are written with six significant digits; p-values at or below
//! 0.10 are bold in markdown.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::RunError;

pub const BOLD_P: f64 = 0.10;

/// Six significant digits, fixed notation for exponents in [-5, 5].
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.00000".into();
    }
    let sci = format!("{x:.5e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if (-5..=5).contains(&exp) {
        format!("{:.*}", (5 - exp) as usize, x)
    } else {
        sci
    }
}

/// Significance stars at 1%, 5% and 10%.
pub fn stars(p: f64) -> &'static str {
    if p <= 0.01 {
        "***"
    } else if p <= 0.05 {
        "**"
    } else if p <= 0.10 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Text,
    Int,
    /// A starred cell in a plain numeric column keeps only its value in CSV.
    Num,
    /// Statistic with stars and an optional lag in parentheses.
    Starred,
    P,
    /// Statistic followed by its p-value in parentheses.
    WithP,
    /// Estimate followed by its standard error in parentheses.
    Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Text(String),
    Int(i64),
    Num(f64),
    Starred { value: f64, stars: &'static str, lag: Option<usize> },
    P(f64),
    WithP { value: f64, p: f64 },
    Estimate { value: f64, se: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: Kind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: Kind) -> Self {
        Self { name: name.into(), kind }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem.
    pub id: String,
    pub title: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(id: impl Into<String>, title: impl Into<String>, columns: Vec<Column>) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            columns,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.id);
        self.rows.push(row);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn markdown(&self) -> String {
        let mut out = format!("# {}\n\n", self.title);
        let head: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        out.push_str(&format!("| {} |\n", head.join(" | ")));
        out.push_str(&format!("|{}\n", " --- |".repeat(head.len())));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(markdown_cell).collect();
            out.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
        if !self.notes.is_empty() {
            out.push('\n');
            for n in &self.notes {
                out.push_str(n);
                out.push('\n');
            }
        }
        out
    }

    pub fn csv(&self) -> String {
        let mut header = Vec::new();
        for c in &self.columns {
            let n = csv_field(&c.name);
            match c.kind {
                Kind::Starred => {
                    header.push(n.clone());
                    header.push(csv_field(&format!("{}_lag", c.name)));
                }
                Kind::WithP => {
                    header.push(n.clone());
                    header.push(csv_field(&format!("{}_p", c.name)));
                }
                Kind::Estimate => {
                    header.push(n.clone());
                    header.push(csv_field(&format!("{}_se", c.name)));
                }
                _ => header.push(n),
            }
        }
        let mut out = header.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut fields = Vec::new();
            for (c, cell) in self.columns.iter().zip(row) {
                let width = matches!(c.kind, Kind::Starred | Kind::WithP | Kind::Estimate) as usize + 1;
                let f = csv_cells(cell);
                fields.extend(f.iter().cloned().chain(std::iter::repeat(String::new())).take(width));
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes `<id>.md` and `<id>.csv`; returns their paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
        let md = dir.join(format!("{}.md", self.id));
        let csv = dir.join(format!("{}.csv", self.id));
        write_text(&md, &self.markdown())?;
        write_text(&csv, &self.csv())?;
        Ok(vec![md, csv])
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|e| RunError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn bold_if(text: String, p: f64) -> String {
    if p <= BOLD_P {
        format!("**{text}**")
    } else {
        text
    }
}

fn markdown_cell(c: &Cell) -> String {
    match c {
        Cell::Empty => String::new(),
        Cell::Text(s) => s.clone(),
        Cell::Int(i) => i.to_string(),
        Cell::Num(x) => sig6(*x),
        Cell::Starred { value, stars, lag } => match lag {
            Some(l) => format!("{}{} ({})", sig6(*value), stars, l),
            None => format!("{}{}", sig6(*value), stars),
        },
        Cell::P(p) => bold_if(sig6(*p), *p),
        Cell::WithP { value, p } => bold_if(format!("{} ({})", sig6(*value), sig6(*p)), *p),
        Cell::Estimate { value, se } => format!("{} ({})", sig6(*value), sig6(*se)),
    }
}

fn csv_cells(c: &Cell) -> Vec<String> {
    match c {
        Cell::Empty => vec![],
        Cell::Text(s) => vec![csv_field(s)],
        Cell::Int(i) => vec![i.to_string()],
        Cell::Num(x) | Cell::P(x) => vec![sig6(*x)],
        Cell::Starred { value, lag, .. } => vec![sig6(*value), lag.map(|l| l.to_string()).unwrap_or_default()],
        Cell::WithP { value, p } => vec![sig6(*value), sig6(*p)],
        Cell::Estimate { value, se } => vec![sig6(*value), sig6(*se)],
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(-0.064), "-0.0640000");
        assert_eq!(sig6(89.468), "89.4680");
        assert_eq!(sig6(-1393.9), "-1393.90");
        assert_eq!(sig6(9.9999996), "10.0000");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(0.0), "0.00000");
        assert_eq!(sig6(-0.0), "0.00000");
        assert_eq!(sig6(2.5e-7), "2.50000e-7");
        assert_eq!(sig6(0.1), "0.100000");
    }

    #[test]
    fn boundary_p_value_is_bold() {
        let mut t = Table::new("t", "T", vec![Column::new("p", Kind::P), Column::new("s", Kind::WithP)]);
        t.push(vec![Cell::P(0.10), Cell::WithP { value: 1.3, p: 0.1000001 }]);
        let md = t.markdown();
        assert!(md.contains("| **0.100000** | 1.30000 (0.100000) |"), "{md}");
    }

    #[test]
    fn csv_expands_composite_columns() {
        let mut t = Table::new(
            "t",
            "T",
            vec![
                Column::new("series", Kind::Text),
                Column::new("ADF C", Kind::Starred),
                Column::new("log-ML", Kind::Estimate),
            ],
        );
        t.push(vec![
            Cell::Text("oil, real".into()),
            Cell::Starred { value: -12.045, stars: "***", lag: Some(1) },
            Cell::Empty,
        ]);
        assert_eq!(t.csv(), "series,ADF C,ADF C_lag,log-ML,log-ML_se\n\"oil, real\",-12.0450,1,,\n");
        assert!(t.markdown().contains("| oil, real | -12.0450*** (1) |  |"));
    }
}
