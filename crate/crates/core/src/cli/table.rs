use std::io::Write;

use serde::Serialize;

use crate::linalg::C64;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn numeric(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Real(x) => Some(*x),
            Cell::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => x.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Rectangular table; complex quantities occupy a `<name>_re`, `<name>_im` column pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TableError {
    #[error("column mismatch: {0}")]
    ColumnMismatch(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Row under construction, keyed in column order.
#[derive(Debug, Default)]
pub struct RowBuilder {
    names: Vec<String>,
    cells: Vec<Cell>,
}

impl RowBuilder {
    pub fn int(mut self, name: &str, v: i64) -> Self {
        self.names.push(name.into());
        self.cells.push(Cell::Int(v));
        self
    }

    pub fn real(mut self, name: &str, v: f64) -> Self {
        self.names.push(name.into());
        self.cells.push(Cell::Real(v));
        self
    }

    pub fn complex(mut self, name: &str, v: C64) -> Self {
        self.names.push(format!("{name}_re"));
        self.cells.push(Cell::Real(v.re));
        self.names.push(format!("{name}_im"));
        self.cells.push(Cell::Real(v.im));
        self
    }

    pub fn boolean(mut self, name: &str, v: bool) -> Self {
        self.names.push(name.into());
        self.cells.push(Cell::Bool(v));
        self
    }

    pub fn text(mut self, name: &str, v: &str) -> Self {
        self.names.push(name.into());
        self.cells.push(Cell::Text(v.into()));
        self
    }

    pub fn point(self, r: &[f64; 3]) -> Self {
        self.real("x", r[0]).real("y", r[1]).real("z", r[2])
    }
}

impl ResultTable {
    pub fn new() -> Self {
        ResultTable::default()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    /// Appends a row; the first row fixes the column set.
    pub fn push(&mut self, row: RowBuilder) -> Result<(), TableError> {
        if self.rows.is_empty() && self.columns.is_empty() {
            self.columns = row.names;
        } else if row.names != self.columns {
            return Err(TableError::ColumnMismatch(format!("row columns {:?} differ from {:?}", row.names, self.columns)));
        }
        self.rows.push(row.cells);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Result<usize, TableError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| TableError::ColumnMismatch(format!("no column `{name}`")))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TableError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| TableError::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        w.flush().map_err(|e| TableError::Io(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotKind {
    /// `x y value`, one scanline per distinct `x`, scanlines separated by a blank line.
    Heatmap { x: String, y: String, value: String },
    Line { x: String, y: String },
    /// `x y u v` arrows.
    Field { x: String, y: String, u: String, v: String },
}

/// Writes gnuplot-compatible whitespace-delimited data.
pub fn emit_plotdata<W: Write>(table: &ResultTable, kind: &PlotKind, mut out: W) -> Result<(), TableError> {
    let names: Vec<&String> = match kind {
        PlotKind::Heatmap { x, y, value } => vec![x, y, value],
        PlotKind::Line { x, y } => vec![x, y],
        PlotKind::Field { x, y, u, v } => vec![x, y, u, v],
    };
    let idx: Vec<usize> = names.iter().map(|n| table.column_index(n)).collect::<Result<_, _>>()?;
    let io = |e: std::io::Error| TableError::Io(e.to_string());
    writeln!(out, "# {}", names.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ")).map_err(io)?;
    let mut previous: Option<f64> = None;
    for (r, row) in table.rows().iter().enumerate() {
        let vals: Vec<f64> = idx
            .iter()
            .map(|&i| {
                row[i].numeric().ok_or_else(|| {
                    TableError::ColumnMismatch(format!("column `{}` is not numeric (row {r})", table.columns()[i]))
                })
            })
            .collect::<Result<_, _>>()?;
        if matches!(kind, PlotKind::Heatmap { .. }) {
            if previous.is_some_and(|p| p != vals[0]) {
                writeln!(out).map_err(io)?;
            }
            previous = Some(vals[0]);
        }
        let line: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(" ")).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ResultTable {
        let mut t = ResultTable::new();
        for i in 0..2 {
            for j in 0..2 {
                t.push(RowBuilder::default().real("x", i as f64).real("y", j as f64).boolean("ok", i == j).complex("B", C64::new(1.0, -2.0)))
                    .unwrap();
            }
        }
        t
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        table().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "x,y,ok,B_re,B_im");
        assert_eq!(text.lines().nth(1).unwrap(), "0,0,true,1,-2");
    }

    #[test]
    fn heatmap_blocks_and_mismatch() {
        let mut buf = Vec::new();
        let kind = PlotKind::Heatmap { x: "x".into(), y: "y".into(), value: "ok".into() };
        emit_plotdata(&table(), &kind, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# x y ok\n0 0 1\n0 1 0\n\n1 0 0\n1 1 1\n");
        let bad = PlotKind::Line { x: "x".into(), y: "missing".into() };
        assert!(matches!(emit_plotdata(&table(), &bad, Vec::new()), Err(TableError::ColumnMismatch(_))));
    }

    #[test]
    fn rows_must_match() {
        let mut t = table();
        assert!(t.push(RowBuilder::default().real("x", 0.0)).is_err());
    }
}
