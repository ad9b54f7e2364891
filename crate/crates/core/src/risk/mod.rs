//! Materiality and complexity scoring, banding and the risk matrix.

mod currency;
mod matrix;
mod metrics;
mod rules;

use serde::{Deserialize, Serialize};

pub use currency::is_currency_format;
pub use matrix::{band, BandScale, MatrixTable, RiskLevel, RiskMatrix};
pub use metrics::{analyze_formulas, compute_metrics, external_link_keys, Metric, MetricValue, MetricsProfile};
pub use rules::{
    default_complexity_rules, default_materiality_rules, score_complexity, score_materiality, validate_rules, Comparator, ComplexityRule,
    MaterialityKind, MaterialityRule, Score,
};

use crate::discovery::FileRecord;
use crate::error::{Error, FieldError, Result};
use crate::workbook::WorkbookFacts;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskAssessment {
    pub materiality_score: u64,
    pub complexity_score: u64,
    pub matched_materiality_rule_ids: Vec<String>,
    pub matched_complexity_rule_ids: Vec<String>,
    pub materiality_band: String,
    pub complexity_band: String,
    pub risk: RiskLevel,
    pub inherited_critical: bool,
    pub effective_materiality_band: String,
}

/// Everything needed to turn facts into an assessment.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskModel {
    pub materiality_rules: Vec<MaterialityRule>,
    pub complexity_rules: Vec<ComplexityRule>,
    pub materiality_scale: BandScale,
    pub complexity_scale: BandScale,
    pub matrix: RiskMatrix,
}

impl Default for RiskModel {
    fn default() -> Self {
        Self {
            materiality_rules: default_materiality_rules(),
            complexity_rules: default_complexity_rules(),
            materiality_scale: BandScale::materiality(),
            complexity_scale: BandScale::complexity(),
            matrix: RiskMatrix::default(),
        }
    }
}

impl RiskModel {
    /// Field-level problems first; a non-monotone matrix is reported on its own.
    pub fn validate(&self) -> Result<()> {
        let mut errs: Vec<FieldError> = validate_rules(&self.materiality_rules, &self.complexity_rules);
        errs.extend(self.materiality_scale.validate("scales.materiality"));
        errs.extend(self.complexity_scale.validate("scales.complexity"));
        if !errs.is_empty() {
            return Err(Error::ConfigInvalid(errs));
        }
        if let Some((m, c, axis)) = self.matrix.monotonicity_violation() {
            let (ml, cl) = (&self.materiality_scale.labels[m], &self.complexity_scale.labels[c]);
            return Err(Error::MatrixNotMonotone(format!(
                "matrix.{ml}.{cl} = {} is above the cell one {axis} band higher",
                self.matrix.cells[m][c]
            )));
        }
        Ok(())
    }

    /// Risk for a pair of band labels; `None` for unknown labels.
    pub fn assess_labels(&self, materiality: &str, complexity: &str) -> Option<RiskLevel> {
        let m = self.materiality_scale.position(materiality)?;
        let c = self.complexity_scale.position(complexity)?;
        Some(self.matrix.assess(m, c))
    }

    pub fn assess(&self, facts: Option<&WorkbookFacts>, record: &FileRecord, profile: &MetricsProfile) -> RiskAssessment {
        let mat = score_materiality(facts, record, &self.materiality_rules);
        let cx = score_complexity(profile, &self.complexity_rules);
        let m = self.materiality_scale.index(mat.points);
        let c = self.complexity_scale.index(cx.points);
        let materiality_band = self.materiality_scale.labels[m].clone();
        RiskAssessment {
            materiality_score: mat.points,
            complexity_score: cx.points,
            matched_materiality_rule_ids: mat.matched,
            matched_complexity_rule_ids: cx.matched,
            effective_materiality_band: materiality_band.clone(),
            materiality_band,
            complexity_band: self.complexity_scale.labels[c].clone(),
            risk: self.matrix.assess(m, c),
            inherited_critical: false,
        }
    }

    pub fn is_critical(&self, a: &RiskAssessment) -> bool {
        self.materiality_scale.position(&a.materiality_band) == Some(2)
    }

    /// Raises the effective materiality band to the top and recomputes risk
    /// from it and the assessment's own complexity band.
    pub fn mark_inherited(&self, a: &mut RiskAssessment) {
        if self.is_critical(a) {
            return;
        }
        a.inherited_critical = true;
        a.effective_materiality_band = self.materiality_scale.top().to_string();
        let c = self.complexity_scale.position(&a.complexity_band).unwrap_or(0);
        a.risk = self.matrix.assess(2, c);
    }
}
