//! Published reference values and their reproduction.
//!
//! Table 1 is the box (L = 1, states (1, 2, n3), n3 = 3..6) and Table 2 the
//! oscillator (ω = 1, states (0, 1, n3), n3 = 2..5), both in position space.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::information::{InformationReport, System};
use crate::orbitals::{Model, Space};
use crate::quadrature::QuadratureScheme;
use crate::wavefunction::{Configuration, SymmetryClass};

const REFERENCE_CSV: &str = include_str!("../data/reference_tables.csv");

/// Largest accepted `|computed - reference|` per cell.
pub const TABLE_TOLERANCE: f64 = 2e-3;

/// Row labels in display order, matching [`InformationReport::table_values`].
pub const QUANTITIES: [&str; 8] = ["s1", "s2", "s3", "I", "I3", "I_rho_gamma", "I_gamma_gamma", "I^3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableId {
    Box,
    Oscillator,
}

impl TableId {
    pub fn number(self) -> u8 {
        match self {
            TableId::Box => 1,
            TableId::Oscillator => 2,
        }
    }

    pub fn model(self) -> Model {
        match self {
            TableId::Box => Model::Box { length: 1.0 },
            TableId::Oscillator => Model::Oscillator { omega: 1.0 },
        }
    }
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "box" => Ok(TableId::Box),
            "2" | "ho" | "oscillator" => Ok(TableId::Oscillator),
            other => Err(Error::invalid(format!("unknown table '{other}' (expected 1 or 2)"))),
        }
    }
}

/// One published column: a state and its eight values.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceColumn {
    pub table: TableId,
    pub config: Configuration,
    pub values: [f64; 8],
}

impl ReferenceColumn {
    /// `A n3=3` style header.
    pub fn label(&self) -> String {
        format!("{} n3={}", self.config.symmetry.short(), self.config.ns[2])
    }
}

/// The published columns of one table, in the paper's column order.
pub fn reference_columns(table: TableId) -> Result<Vec<ReferenceColumn>> {
    let bad = |line: &str| Error::invalid(format!("malformed reference row '{line}'"));
    let mut out = Vec::new();
    for line in REFERENCE_CSV.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 13 {
            return Err(bad(line));
        }
        if fields[0].parse::<u8>().map_err(|_| bad(line))? != table.number() {
            continue;
        }
        let ns = fields[1..4]
            .iter()
            .map(|f| f.parse::<u32>().map_err(|_| bad(line)))
            .collect::<Result<Vec<_>>>()?;
        let symmetry: SymmetryClass = fields[4].parse()?;
        let mut values = [0.0; 8];
        for (v, f) in values.iter_mut().zip(&fields[5..]) {
            *v = f.parse().map_err(|_| bad(line))?;
        }
        let config = Configuration::new(table.model(), ns, symmetry, Space::Position)?;
        out.push(ReferenceColumn { table, config, values });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellComparison {
    pub column: String,
    pub quantity: String,
    pub reference: f64,
    pub computed: f64,
    pub delta: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct TableReproduction {
    pub table: TableId,
    pub columns: Vec<(ReferenceColumn, InformationReport)>,
    pub cells: Vec<CellComparison>,
}

impl TableReproduction {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(|c| c.pass)
    }

    pub fn offenders(&self) -> Vec<&CellComparison> {
        self.cells.iter().filter(|c| !c.pass).collect()
    }

    pub fn max_delta(&self) -> f64 {
        self.cells.iter().map(|c| c.delta.abs()).fold(0.0, f64::max)
    }

    /// Aligned text: one row per quantity, one computed/reference/delta
    /// triple per column.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Table {}", self.table.number());
        let _ = write!(s, "{:<15}", "");
        for (col, _) in &self.columns {
            let _ = write!(s, " {:>30}", col.label());
        }
        s.push('\n');
        for (q, name) in QUANTITIES.iter().enumerate() {
            let _ = write!(s, "{name:<15}");
            for (col, report) in &self.columns {
                let computed = report.table_values()[q];
                let reference = col.values[q];
                let _ = write!(s, " {computed:>9.4} ({reference:>7.4} {:>+8.1e})", computed - reference);
            }
            s.push('\n');
        }
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(
            s,
            "{verdict}: {} of {} cells within {TABLE_TOLERANCE:.0e}, max |delta| = {:.2e}",
            self.cells.iter().filter(|c| c.pass).count(),
            self.cells.len(),
            self.max_delta()
        );
        s
    }
}

/// Compares one report against a published column.
pub fn compare_column(column: &ReferenceColumn, report: &InformationReport) -> Vec<CellComparison> {
    let computed = report.table_values();
    QUANTITIES
        .iter()
        .enumerate()
        .map(|(q, name)| {
            let delta = computed[q] - column.values[q];
            CellComparison {
                column: column.label(),
                quantity: name.to_string(),
                reference: column.values[q],
                computed: computed[q],
                delta,
                pass: delta.abs() <= TABLE_TOLERANCE,
            }
        })
        .collect()
}

/// Recomputes every column of `table`; `scheme` defaults to the model's
/// default scheme.
pub fn reproduce(table: TableId, scheme: Option<QuadratureScheme>) -> Result<TableReproduction> {
    let scheme = scheme.unwrap_or_else(|| QuadratureScheme::default_for(&table.model(), Space::Position));
    let mut columns = Vec::new();
    let mut cells = Vec::new();
    for column in reference_columns(table)? {
        let report = System::from_configuration(&column.config, scheme)?.report()?;
        cells.extend(compare_column(&column, &report));
        columns.push((column, report));
    }
    Ok(TableReproduction { table, columns, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_data_loads() {
        let t1 = reference_columns(TableId::Box).unwrap();
        let t2 = reference_columns(TableId::Oscillator).unwrap();
        assert_eq!(t1.len(), 8);
        assert_eq!(t2.len(), 8);
        assert_eq!(t1[0].label(), "A n3=3");
        assert_eq!(t2[7].label(), "S n3=5");
        assert_eq!(t1[0].values[1], -0.4709);
        assert_eq!(t2[1].values[2], 4.1972);
    }

    #[test]
    fn published_rows_satisfy_the_hierarchy_to_rounding() {
        for table in [TableId::Box, TableId::Oscillator] {
            for col in reference_columns(table).unwrap() {
                let [s1, s2, s3, i, i3, irg, igg, ih] = col.values;
                for (derived, published) in [
                    (2.0 * s1 - s2, i),
                    (3.0 * s1 - s3, i3),
                    (s1 + s2 - s3, irg),
                    (2.0 * s2 - s1 - s3, igg),
                    (3.0 * s2 - 3.0 * s1 - s3, ih),
                ] {
                    assert!((derived - published).abs() <= 5e-4, "{} {derived} {published}", col.label());
                }
            }
        }
    }

    #[test]
    fn table_ids() {
        assert_eq!("1".parse::<TableId>().unwrap(), TableId::Box);
        assert_eq!("ho".parse::<TableId>().unwrap(), TableId::Oscillator);
        assert!("3".parse::<TableId>().is_err());
    }

    #[test]
    fn single_column_reproduces() {
        let col = &reference_columns(TableId::Box).unwrap()[0];
        let report = System::from_configuration(&col.config, QuadratureScheme::finite_default())
            .unwrap()
            .report()
            .unwrap();
        assert!(compare_column(col, &report).iter().all(|c| c.pass));
    }
}
