use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::formula::{FormulaError, FormulaSummary};
use crate::workbook::{count_invisible_cells, hidden_census, ValueKind, WorkbookFacts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    WorksheetCount,
    FormulaCount,
    FormulaErrorCount,
    ArrayFormulaCount,
    MaxIfNesting,
    ExternalLinkCount,
    HasMacros,
    NamedItemCount,
    InvisibleCellCount,
    HiddenElementCount,
    VeryHiddenSheetCount,
    WorkbookSizeBytes,
    IsPasswordProtected,
    UnparsedFormulaCount,
}

impl Metric {
    pub const ALL: [Metric; 14] = [
        Metric::WorksheetCount,
        Metric::FormulaCount,
        Metric::FormulaErrorCount,
        Metric::ArrayFormulaCount,
        Metric::MaxIfNesting,
        Metric::ExternalLinkCount,
        Metric::HasMacros,
        Metric::NamedItemCount,
        Metric::InvisibleCellCount,
        Metric::HiddenElementCount,
        Metric::VeryHiddenSheetCount,
        Metric::WorkbookSizeBytes,
        Metric::IsPasswordProtected,
        Metric::UnparsedFormulaCount,
    ];

    pub fn is_boolean(self) -> bool {
        matches!(self, Metric::HasMacros | Metric::IsPasswordProtected)
    }

    /// Metrics still known when the workbook content cannot be read.
    pub fn available_without_facts(self) -> bool {
        matches!(self, Metric::IsPasswordProtected | Metric::WorkbookSizeBytes)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::WorksheetCount => "worksheet-count",
            Metric::FormulaCount => "formula-count",
            Metric::FormulaErrorCount => "formula-error-count",
            Metric::ArrayFormulaCount => "array-formula-count",
            Metric::MaxIfNesting => "max-if-nesting",
            Metric::ExternalLinkCount => "external-link-count",
            Metric::HasMacros => "has-macros",
            Metric::NamedItemCount => "named-item-count",
            Metric::InvisibleCellCount => "invisible-cell-count",
            Metric::HiddenElementCount => "hidden-element-count",
            Metric::VeryHiddenSheetCount => "very-hidden-sheet-count",
            Metric::WorkbookSizeBytes => "workbook-size-bytes",
            Metric::IsPasswordProtected => "is-password-protected",
            Metric::UnparsedFormulaCount => "unparsed-formula-count",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricValue {
    Count(u64),
    Flag(bool),
}

/// Complexity measurements for one workbook.
///
/// When `available` is false only `is_password_protected` and
/// `workbook_size_bytes` carry information; the reason says why.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MetricsProfile {
    pub available: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unavailable_reason: Option<String>,
    pub worksheet_count: u64,
    pub formula_count: u64,
    pub formula_error_count: u64,
    pub array_formula_count: u64,
    pub max_if_nesting: u64,
    pub external_link_count: u64,
    pub has_macros: bool,
    pub named_item_count: u64,
    pub invisible_cell_count: u64,
    pub hidden_element_count: u64,
    pub very_hidden_sheet_count: u64,
    pub workbook_size_bytes: u64,
    pub is_password_protected: bool,
    pub unparsed_formula_count: u64,
}

impl MetricsProfile {
    pub fn unavailable(reason: &str, size_bytes: u64, password_protected: bool) -> Self {
        Self {
            available: false,
            unavailable_reason: Some(reason.to_string()),
            workbook_size_bytes: size_bytes,
            is_password_protected: password_protected,
            ..Default::default()
        }
    }

    pub fn value(&self, m: Metric) -> MetricValue {
        use MetricValue::{Count, Flag};
        match m {
            Metric::WorksheetCount => Count(self.worksheet_count),
            Metric::FormulaCount => Count(self.formula_count),
            Metric::FormulaErrorCount => Count(self.formula_error_count),
            Metric::ArrayFormulaCount => Count(self.array_formula_count),
            Metric::MaxIfNesting => Count(self.max_if_nesting),
            Metric::ExternalLinkCount => Count(self.external_link_count),
            Metric::HasMacros => Flag(self.has_macros),
            Metric::NamedItemCount => Count(self.named_item_count),
            Metric::InvisibleCellCount => Count(self.invisible_cell_count),
            Metric::HiddenElementCount => Count(self.hidden_element_count),
            Metric::VeryHiddenSheetCount => Count(self.very_hidden_sheet_count),
            Metric::WorkbookSizeBytes => Count(self.workbook_size_bytes),
            Metric::IsPasswordProtected => Flag(self.is_password_protected),
            Metric::UnparsedFormulaCount => Count(self.unparsed_formula_count),
        }
    }
}

/// Distinct external workbooks: link parts plus `[n]` indexes used in
/// formulas. An index names its link part's target; unknown indexes and
/// parts without a path count by index.
pub fn external_link_keys(facts: &WorkbookFacts, indexes: &BTreeSet<u32>) -> BTreeSet<String> {
    let key = |n: u32| match facts.external_targets.get(n as usize - 1) {
        Some(t) if !t.is_empty() => t.to_lowercase(),
        _ => format!("[{n}]"),
    };
    let parts = (1..=facts.external_targets.len() as u32).map(key);
    let refs = indexes.iter().filter(|&&n| n > 0).map(|&n| key(n));
    parts.chain(refs).collect()
}

/// `formulas` is aligned with `facts.formulas`.
pub fn compute_metrics(facts: &WorkbookFacts, formulas: &[Result<FormulaSummary, FormulaError>]) -> MetricsProfile {
    if facts.encrypted {
        return MetricsProfile::unavailable("encrypted", facts.size_bytes, true);
    }
    let census = hidden_census(facts);
    let mut indexes = BTreeSet::new();
    let mut max_if = 0;
    let mut unparsed = 0;
    for f in formulas {
        match f {
            Ok(s) => {
                max_if = max_if.max(s.if_depth as u64);
                indexes.extend(s.external_indexes.iter().copied());
            }
            Err(_) => unparsed += 1,
        }
    }
    MetricsProfile {
        available: true,
        unavailable_reason: None,
        worksheet_count: facts.sheets.len() as u64,
        formula_count: facts.formulas.len() as u64,
        formula_error_count: facts.cells.iter().filter(|c| c.value_kind == ValueKind::Error).count() as u64,
        array_formula_count: facts.formulas.iter().filter(|f| f.is_array).count() as u64,
        max_if_nesting: max_if,
        external_link_count: external_link_keys(facts, &indexes).len() as u64,
        has_macros: facts.has_macros,
        named_item_count: facts.defined_names.len() as u64,
        invisible_cell_count: count_invisible_cells(facts),
        hidden_element_count: census.hidden_rows + census.hidden_columns + census.hidden_sheets,
        very_hidden_sheet_count: census.very_hidden_sheets,
        workbook_size_bytes: facts.size_bytes,
        is_password_protected: facts.workbook_protected || facts.any_sheet_protected(),
        unparsed_formula_count: unparsed,
    }
}

/// Analyzes every formula in `facts`, in order.
pub fn analyze_formulas(facts: &WorkbookFacts) -> Vec<Result<FormulaSummary, FormulaError>> {
    facts.formulas.iter().map(|f| crate::formula::analyze(&f.text)).collect()
}
