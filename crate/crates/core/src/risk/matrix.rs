use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::FieldError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RiskLevel {
    Low,
    Medium,
    High,
}

impl RiskLevel {
    pub const ALL: [RiskLevel; 3] = [RiskLevel::Low, RiskLevel::Medium, RiskLevel::High];

    pub fn as_str(self) -> &'static str {
        match self {
            RiskLevel::Low => "LOW",
            RiskLevel::Medium => "MEDIUM",
            RiskLevel::High => "HIGH",
        }
    }
}

impl fmt::Display for RiskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Two cuts split scores into three ordered bands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandScale {
    pub cuts: [u64; 2],
    pub labels: [String; 3],
}

impl BandScale {
    pub fn materiality() -> Self {
        Self { cuts: [40, 80], labels: ["LOW".into(), "MODERATE".into(), "CRITICAL".into()] }
    }

    pub fn complexity() -> Self {
        Self { cuts: [40, 80], labels: ["BASIC".into(), "INTERMEDIATE".into(), "ADVANCED".into()] }
    }

    /// Band index, 0 for the lowest.
    pub fn index(&self, score: u64) -> usize {
        if score < self.cuts[0] {
            0
        } else if score < self.cuts[1] {
            1
        } else {
            2
        }
    }

    pub fn band(&self, score: u64) -> &str {
        &self.labels[self.index(score)]
    }

    pub fn top(&self) -> &str {
        &self.labels[2]
    }

    /// Case-insensitive label lookup.
    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.eq_ignore_ascii_case(label))
    }

    pub fn validate(&self, field: &str) -> Vec<FieldError> {
        let mut errs = Vec::new();
        if self.cuts[0] > self.cuts[1] {
            errs.push(FieldError::new(format!("{field}.cuts"), "cuts must be ascending"));
        }
        for (i, l) in self.labels.iter().enumerate() {
            if l.trim().is_empty() {
                errs.push(FieldError::new(format!("{field}.labels[{i}]"), "label must not be empty"));
            }
            if self.labels[..i].iter().any(|p| p.eq_ignore_ascii_case(l)) {
                errs.push(FieldError::new(format!("{field}.labels[{i}]"), format!("duplicate label {l:?}")));
            }
        }
        errs
    }
}

pub fn band(score: u64, scale: &BandScale) -> &str {
    scale.band(score)
}

/// Total map from (materiality band, complexity band) to risk, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RiskMatrix {
    pub cells: [[RiskLevel; 3]; 3],
}

impl Default for RiskMatrix {
    fn default() -> Self {
        use RiskLevel::*;
        Self { cells: [[Low, Low, Medium], [Medium, Medium, High], [Medium, High, High]] }
    }
}

/// Label-keyed form used in configuration files:
/// `matrix.<materiality band>.<complexity band> = "<risk>"`.
pub type MatrixTable = BTreeMap<String, BTreeMap<String, RiskLevel>>;

impl RiskMatrix {
    pub fn assess(&self, materiality: usize, complexity: usize) -> RiskLevel {
        self.cells[materiality][complexity]
    }

    /// The first cell (by materiality row, then complexity column) where
    /// raising a band would lower the risk.
    pub fn monotonicity_violation(&self) -> Option<(usize, usize, &'static str)> {
        for m in 0..3 {
            for c in 0..3 {
                let here = self.cells[m][c];
                if m < 2 && self.cells[m + 1][c] < here {
                    return Some((m, c, "materiality"));
                }
                if c < 2 && self.cells[m][c + 1] < here {
                    return Some((m, c, "complexity"));
                }
            }
        }
        None
    }

    pub fn from_table(table: &MatrixTable, mat: &BandScale, cx: &BandScale) -> Result<Self, Vec<FieldError>> {
        let mut errs = Vec::new();
        let mut cells = [[RiskLevel::Low; 3]; 3];
        for (row_label, row) in table {
            if mat.position(row_label).is_none() {
                errs.push(FieldError::new(format!("matrix.{row_label}"), "not a materiality band label"));
            }
            for col_label in row.keys() {
                if cx.position(col_label).is_none() {
                    errs.push(FieldError::new(format!("matrix.{row_label}.{col_label}"), "not a complexity band label"));
                }
            }
        }
        for (m, ml) in mat.labels.iter().enumerate() {
            let row = table.iter().find(|(k, _)| k.eq_ignore_ascii_case(ml)).map(|(_, v)| v);
            for (c, cl) in cx.labels.iter().enumerate() {
                match row.and_then(|r| r.iter().find(|(k, _)| k.eq_ignore_ascii_case(cl))) {
                    Some((_, level)) => cells[m][c] = *level,
                    None => errs.push(FieldError::new(format!("matrix.{ml}.{cl}"), "missing matrix cell")),
                }
            }
        }
        if errs.is_empty() {
            Ok(Self { cells })
        } else {
            Err(errs)
        }
    }

    pub fn to_table(&self, mat: &BandScale, cx: &BandScale) -> MatrixTable {
        let mut out = MatrixTable::new();
        for (m, ml) in mat.labels.iter().enumerate() {
            let row = out.entry(ml.clone()).or_default();
            for (c, cl) in cx.labels.iter().enumerate() {
                row.insert(cl.clone(), self.cells[m][c]);
            }
        }
        out
    }
}
