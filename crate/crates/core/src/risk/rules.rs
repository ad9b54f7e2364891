use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::currency::is_currency_format;
use super::metrics::{Metric, MetricValue, MetricsProfile};
use crate::discovery::FileRecord;
use crate::error::FieldError;
use crate::formula::analyze;
use crate::pattern::TextPattern;
use crate::workbook::{ValueKind, WorkbookFacts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaterialityKind {
    CellTextContains,
    CurrencyExceeds,
    NumericExceeds,
    DocPropertyMatches,
    FileNameMatches,
    SheetNameMatches,
    PathMatches,
    HasExternalLinks,
}

impl MaterialityKind {
    fn needs_pattern(self) -> bool {
        matches!(
            self,
            Self::CellTextContains | Self::DocPropertyMatches | Self::FileNameMatches | Self::SheetNameMatches | Self::PathMatches
        )
    }

    fn needs_threshold(self) -> bool {
        matches!(self, Self::CurrencyExceeds | Self::NumericExceeds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialityRule {
    pub id: String,
    pub kind: MaterialityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Restricts doc-property-matches to one property key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub property: Option<String>,
    pub points: i64,
}

impl MaterialityRule {
    pub fn pattern(id: &str, kind: MaterialityKind, pattern: &str, points: i64) -> Self {
        Self { id: id.into(), kind, pattern: Some(pattern.into()), threshold: None, property: None, points }
    }

    pub fn threshold(id: &str, kind: MaterialityKind, threshold: f64, points: i64) -> Self {
        Self { id: id.into(), kind, pattern: None, threshold: Some(threshold), property: None, points }
    }

    fn validate(&self, field: &str, errs: &mut Vec<FieldError>) {
        let f = |s: &str| format!("{field}.{s}");
        if self.id.trim().is_empty() {
            errs.push(FieldError::new(f("id"), "rule id must not be empty"));
        }
        if self.points < 0 {
            errs.push(FieldError::new(f("points"), format!("rule {:?} has negative points {}", self.id, self.points)));
        }
        match (self.kind.needs_pattern(), &self.pattern) {
            (true, None) => errs.push(FieldError::new(f("pattern"), format!("rule {:?} requires a pattern", self.id))),
            (true, Some(p)) => {
                if let Err(e) = TextPattern::new(p) {
                    errs.push(FieldError::new(f("pattern"), format!("rule {:?}: {e}", self.id)));
                }
            }
            (false, Some(_)) => errs.push(FieldError::new(f("pattern"), format!("rule {:?} takes no pattern", self.id))),
            (false, None) => {}
        }
        match (self.kind.needs_threshold(), self.threshold) {
            (true, None) => errs.push(FieldError::new(f("threshold"), format!("rule {:?} requires a threshold", self.id))),
            (true, Some(t)) if !t.is_finite() => {
                errs.push(FieldError::new(f("threshold"), format!("rule {:?} threshold must be finite", self.id)))
            }
            (false, Some(_)) => errs.push(FieldError::new(f("threshold"), format!("rule {:?} takes no threshold", self.id))),
            _ => {}
        }
        if self.property.is_some() && self.kind != MaterialityKind::DocPropertyMatches {
            errs.push(FieldError::new(f("property"), format!("rule {:?}: property applies to doc-property-matches only", self.id)));
        }
    }

    /// Existential match over the workbook; `facts` is `None` when metrics
    /// are unavailable, leaving only name and path rules able to fire.
    pub fn matches(&self, facts: Option<&WorkbookFacts>, record: &FileRecord) -> bool {
        let pattern = self.pattern.as_deref().and_then(|p| TextPattern::new(p).ok());
        let text = |s: &str| pattern.as_ref().is_some_and(|p| p.matches(s));
        let threshold = self.threshold.unwrap_or(f64::INFINITY);
        match self.kind {
            MaterialityKind::FileNameMatches => text(&record.file_name()),
            MaterialityKind::PathMatches => text(&record.display_path()),
            _ => {
                let Some(facts) = facts else {
                    return false;
                };
                match self.kind {
                    MaterialityKind::CellTextContains => {
                        facts.cells.iter().any(|c| c.value_kind == ValueKind::Text && text(&c.cached_value))
                    }
                    MaterialityKind::CurrencyExceeds => {
                        facts.cells.iter().any(|c| is_currency_format(&c.number_format) && c.number().is_some_and(|v| v > threshold))
                    }
                    MaterialityKind::NumericExceeds => facts.cells.iter().any(|c| c.number().is_some_and(|v| v > threshold)),
                    MaterialityKind::DocPropertyMatches => facts
                        .doc_properties
                        .iter()
                        .any(|(k, v)| self.property.as_ref().is_none_or(|p| p.eq_ignore_ascii_case(k)) && text(v)),
                    MaterialityKind::SheetNameMatches => facts.sheets.iter().any(|s| text(&s.name)),
                    MaterialityKind::HasExternalLinks => {
                        !facts.external_targets.is_empty()
                            || facts
                                .formulas
                                .iter()
                                .any(|f| f.text.contains('[') && analyze(&f.text).is_ok_and(|s| !s.external_indexes.is_empty()))
                    }
                    MaterialityKind::FileNameMatches | MaterialityKind::PathMatches => unreachable!(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparator {
    GreaterThan,
    AtLeast,
    IsTrue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexityRule {
    pub id: String,
    pub metric: Metric,
    pub comparator: Comparator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub points: i64,
}

impl ComplexityRule {
    pub fn new(id: &str, metric: Metric, comparator: Comparator, threshold: Option<f64>, points: i64) -> Self {
        Self { id: id.into(), metric, comparator, threshold, points }
    }

    fn validate(&self, field: &str, errs: &mut Vec<FieldError>) {
        let f = |s: &str| format!("{field}.{s}");
        if self.id.trim().is_empty() {
            errs.push(FieldError::new(f("id"), "rule id must not be empty"));
        }
        if self.points < 0 {
            errs.push(FieldError::new(f("points"), format!("rule {:?} has negative points {}", self.id, self.points)));
        }
        let boolean = self.metric.is_boolean();
        match self.comparator {
            Comparator::IsTrue if !boolean => errs.push(FieldError::new(
                f("comparator"),
                format!("rule {:?}: is-true needs a boolean metric, {} is numeric", self.id, self.metric.as_str()),
            )),
            Comparator::GreaterThan | Comparator::AtLeast if boolean => {
                errs.push(FieldError::new(f("comparator"), format!("rule {:?}: {} is boolean; use is-true", self.id, self.metric.as_str())))
            }
            _ => {}
        }
        match (self.comparator, self.threshold) {
            (Comparator::IsTrue, Some(_)) => {
                errs.push(FieldError::new(f("threshold"), format!("rule {:?}: is-true takes no threshold", self.id)))
            }
            (Comparator::GreaterThan | Comparator::AtLeast, None) => {
                errs.push(FieldError::new(f("threshold"), format!("rule {:?} requires a threshold", self.id)))
            }
            (_, Some(t)) if !t.is_finite() => {
                errs.push(FieldError::new(f("threshold"), format!("rule {:?} threshold must be finite", self.id)))
            }
            _ => {}
        }
    }

    pub fn holds(&self, profile: &MetricsProfile) -> bool {
        if !profile.available && !self.metric.available_without_facts() {
            return false;
        }
        let t = self.threshold.unwrap_or(0.0);
        match (self.comparator, profile.value(self.metric)) {
            (Comparator::IsTrue, MetricValue::Flag(b)) => b,
            (Comparator::GreaterThan, MetricValue::Count(n)) => n as f64 > t,
            (Comparator::AtLeast, MetricValue::Count(n)) => n as f64 >= t,
            _ => false,
        }
    }
}

/// Validates a rule set, naming each offending rule by index and id.
pub fn validate_rules(materiality: &[MaterialityRule], complexity: &[ComplexityRule]) -> Vec<FieldError> {
    let mut errs = Vec::new();
    let mut seen = HashSet::new();
    for (i, r) in materiality.iter().enumerate() {
        let field = format!("materiality_rules[{i}]");
        r.validate(&field, &mut errs);
        if !seen.insert(r.id.as_str()) {
            errs.push(FieldError::new(format!("{field}.id"), format!("duplicate rule id {:?}", r.id)));
        }
    }
    let mut seen = HashSet::new();
    for (i, r) in complexity.iter().enumerate() {
        let field = format!("complexity_rules[{i}]");
        r.validate(&field, &mut errs);
        if !seen.insert(r.id.as_str()) {
            errs.push(FieldError::new(format!("{field}.id"), format!("duplicate rule id {:?}", r.id)));
        }
    }
    errs
}

/// A score and the rules that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Score {
    pub points: u64,
    pub matched: Vec<String>,
}

pub fn score_materiality(facts: Option<&WorkbookFacts>, record: &FileRecord, rules: &[MaterialityRule]) -> Score {
    let mut s = Score::default();
    for r in rules.iter().filter(|r| r.matches(facts, record)) {
        s.points += r.points.max(0) as u64;
        s.matched.push(r.id.clone());
    }
    s
}

pub fn score_complexity(profile: &MetricsProfile, rules: &[ComplexityRule]) -> Score {
    let mut s = Score::default();
    for r in rules.iter().filter(|r| r.holds(profile)) {
        s.points += r.points.max(0) as u64;
        s.matched.push(r.id.clone());
    }
    s
}

/// Rules anchored to the worked examples: "Income" text (10), a currency
/// value above 5,000,000 (80); more than one formula error (75), any
/// invisible cell (10), password protection (10).
pub fn default_materiality_rules() -> Vec<MaterialityRule> {
    vec![
        MaterialityRule::pattern("income-text", MaterialityKind::CellTextContains, "Income", 10),
        MaterialityRule::threshold("currency-over-5m", MaterialityKind::CurrencyExceeds, 5_000_000.0, 80),
    ]
}

pub fn default_complexity_rules() -> Vec<ComplexityRule> {
    vec![
        ComplexityRule::new("formula-errors-over-1", Metric::FormulaErrorCount, Comparator::GreaterThan, Some(1.0), 75),
        ComplexityRule::new("invisible-cells", Metric::InvisibleCellCount, Comparator::AtLeast, Some(1.0), 10),
        ComplexityRule::new("password-protected", Metric::IsPasswordProtected, Comparator::IsTrue, None, 10),
    ]
}
