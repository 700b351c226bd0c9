//! Column-schema'd sweep output shared by the grid, curve and cycle sweeps.

/// One cell of a sweep row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Bool(bool),
    /// Recorded per-cell failure; sweeps never abort on one.
    Missing,
}

/// A sweep result: fixed column schema, schema-complete rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl SweepTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    /// Appends a row; panics on schema mismatch (a sweep bug, not an input
    /// condition).
    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width {} does not match schema width {}",
            row.len(),
            self.columns.len()
        );
        self.rows.push(row);
    }

    pub fn num(&self, row: usize, col: &str) -> Option<f64> {
        let idx = self.columns.iter().position(|c| c == col)?;
        match self.rows.get(row)?.get(idx)? {
            Cell::Num(x) => Some(*x),
            _ => None,
        }
    }

    pub fn column_index(&self, col: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == col)
    }
}
