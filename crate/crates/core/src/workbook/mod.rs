//! Read-only extraction of structural facts from OOXML workbooks.
//!
//! Cached values are taken as stored; nothing is ever recalculated.

mod package;
mod styles;

use std::collections::{BTreeMap, HashMap};

use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};

use crate::discovery::{package_info, FileKind, FileRecord};
use crate::error::{ScanError, ScanErrorKind};
use package::{is_local, Package, Relationship};
pub use styles::{apply_tint, builtin_format, CellFormat, Rgb, Styles, Theme};

/// The error values a cell may cache.
pub const ERROR_VALUES: [&str; 7] = ["#REF!", "#DIV/0!", "#VALUE!", "#NAME?", "#N/A", "#NULL!", "#NUM!"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Visibility {
    #[default]
    Visible,
    Hidden,
    VeryHidden,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheetFacts {
    pub name: String,
    pub visibility: Visibility,
    pub hidden_row_count: u64,
    pub hidden_column_count: u64,
    pub protected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    Number,
    Text,
    Boolean,
    Error,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSnapshot {
    pub sheet: String,
    #[serde(rename = "ref")]
    pub cell_ref: String,
    pub value_kind: ValueKind,
    pub cached_value: String,
    pub number_format: String,
    pub font_color: Option<Rgb>,
    pub fill_color: Option<Rgb>,
    pub in_hidden_row: bool,
    pub in_hidden_column: bool,
}

impl CellSnapshot {
    pub fn number(&self) -> Option<f64> {
        match self.value_kind {
            ValueKind::Number => self.cached_value.trim().parse().ok(),
            _ => None,
        }
    }

    /// Non-empty and drawn in the colour of its own background.
    pub fn is_invisible(&self) -> bool {
        self.value_kind != ValueKind::Empty && matches!((&self.font_color, &self.fill_color), (Some(f), Some(b)) if f == b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaFacts {
    pub sheet: String,
    #[serde(rename = "ref")]
    pub cell_ref: String,
    pub text: String,
    pub is_array: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WorkbookFacts {
    pub sheets: Vec<SheetFacts>,
    pub cells: Vec<CellSnapshot>,
    pub formulas: Vec<FormulaFacts>,
    pub defined_names: Vec<String>,
    /// One entry per external link part, in `[n]` order; `""` when the
    /// part carries no path.
    pub external_targets: Vec<String>,
    pub has_macros: bool,
    pub encrypted: bool,
    pub workbook_protected: bool,
    pub doc_properties: BTreeMap<String, String>,
    pub size_bytes: u64,
}

impl WorkbookFacts {
    pub fn any_sheet_protected(&self) -> bool {
        self.sheets.iter().any(|s| s.protected)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HiddenCensus {
    pub hidden_sheets: u64,
    pub very_hidden_sheets: u64,
    pub hidden_rows: u64,
    pub hidden_columns: u64,
}

pub fn count_invisible_cells(facts: &WorkbookFacts) -> u64 {
    facts.cells.iter().filter(|c| c.is_invisible()).count() as u64
}

pub fn hidden_census(facts: &WorkbookFacts) -> HiddenCensus {
    let mut c = HiddenCensus::default();
    for s in &facts.sheets {
        match s.visibility {
            Visibility::Hidden => c.hidden_sheets += 1,
            Visibility::VeryHidden => c.very_hidden_sheets += 1,
            Visibility::Visible => {}
        }
        c.hidden_rows += s.hidden_row_count;
        c.hidden_columns += s.hidden_column_count;
    }
    c
}

/// Extracts facts from `bytes`, the content of `record`.
pub fn parse_workbook(record: &FileRecord, bytes: &[u8]) -> Result<WorkbookFacts, ScanError> {
    let fail = |kind, msg: String| ScanError::new(kind, &record.path, msg).nested(&record.container_chain);
    match record.kind {
        FileKind::EncryptedSpreadsheet => {
            return Ok(WorkbookFacts { encrypted: true, size_bytes: bytes.len() as u64, ..Default::default() });
        }
        FileKind::OoxmlSpreadsheet | FileKind::OoxmlMacroSpreadsheet => {}
        FileKind::LegacyBinarySpreadsheet => {
            return Err(fail(ScanErrorKind::UnsupportedFormat, "legacy binary workbook; metrics unavailable".into()))
        }
        other => return Err(fail(ScanErrorKind::UnsupportedFormat, format!("{other} is not a workbook"))),
    }
    parse_package(bytes).map_err(|e| match e {
        PackageError::Unsupported(m) => fail(ScanErrorKind::UnsupportedFormat, m),
        PackageError::Corrupt(m) => fail(ScanErrorKind::CorruptWorkbook, m),
    })
}

enum PackageError {
    Unsupported(String),
    Corrupt(String),
}

impl From<String> for PackageError {
    fn from(m: String) -> Self {
        PackageError::Corrupt(m)
    }
}

fn xml<'x>(text: &'x str, part: &str) -> Result<Document<'x>, PackageError> {
    Document::parse(text).map_err(|e| PackageError::Corrupt(format!("{part}: {e}")))
}

fn parse_package(bytes: &[u8]) -> Result<WorkbookFacts, PackageError> {
    let mut pkg = Package::open(bytes)?;
    let info =
        package_info(pkg.zip_mut()).ok_or_else(|| PackageError::Corrupt("no workbook part declared in [Content_Types].xml".into()))?;

    let root_rels = pkg.relationships("")?;
    let workbook_part = root_rels
        .iter()
        .find(|r| r.is("officeDocument") && !r.external)
        .map(|r| r.target.clone())
        .unwrap_or_else(|| "xl/workbook.xml".to_string());
    if workbook_part.to_ascii_lowercase().ends_with(".bin") {
        return Err(PackageError::Unsupported("binary workbook part; metrics unavailable".into()));
    }
    let workbook_xml =
        pkg.read_text(&workbook_part)?.ok_or_else(|| PackageError::Corrupt(format!("missing workbook part {workbook_part}")))?;
    let wb_rels = pkg.relationships(&workbook_part)?;
    let rel_by_id: HashMap<&str, &Relationship> = wb_rels.iter().map(|r| (r.id.as_str(), r)).collect();

    let theme = match wb_rels.iter().find(|r| r.is("theme")) {
        Some(r) => match pkg.read_text(&r.target)? {
            Some(t) => Theme::parse(&t)?,
            None => Theme::default(),
        },
        None => Theme::default(),
    };
    let styles = match wb_rels.iter().find(|r| r.is("styles")) {
        Some(r) => match pkg.read_text(&r.target)? {
            Some(t) => Styles::parse(&t, &theme)?,
            None => Styles::default(),
        },
        None => Styles::default(),
    };
    let shared = match wb_rels.iter().find(|r| r.is("sharedStrings")) {
        Some(r) => match pkg.read_text(&r.target)? {
            Some(t) => shared_strings(&t)?,
            None => Vec::new(),
        },
        None => Vec::new(),
    };

    let mut facts = WorkbookFacts { size_bytes: bytes.len() as u64, has_macros: info.macro_enabled, ..Default::default() };

    let doc = xml(&workbook_xml, &workbook_part)?;
    let root = doc.root_element();
    facts.workbook_protected = root
        .children()
        .find(|n| is_local(n, "workbookProtection"))
        .is_some_and(|p| p.attributes().any(|a| is_protection_flag(a.name(), a.value())));

    let mut sheet_entries = Vec::new();
    for node in root.descendants().filter(|n| is_local(n, "sheet")) {
        let name = node.attribute("name").unwrap_or_default().to_string();
        let visibility = match node.attribute("state") {
            Some("hidden") => Visibility::Hidden,
            Some("veryHidden") => Visibility::VeryHidden,
            _ => Visibility::Visible,
        };
        let rid = relationship_id(node);
        let target = rid.and_then(|id| rel_by_id.get(id)).filter(|r| !r.external).map(|r| (r.target.clone(), r.is("worksheet")));
        sheet_entries.push((name, visibility, target));
    }
    for node in root.descendants().filter(|n| is_local(n, "definedName")) {
        if let Some(name) = node.attribute("name") {
            facts.defined_names.push(name.to_string());
        }
    }
    let external_parts: Vec<Option<String>> = root
        .descendants()
        .filter(|n| is_local(n, "externalReference"))
        .map(|n| relationship_id(n).and_then(|id| rel_by_id.get(id)).map(|r| r.target.clone()))
        .collect();
    drop(doc);

    for part in external_parts {
        let target = match part {
            Some(p) => pkg
                .relationships(&p)?
                .into_iter()
                .find(|r| r.rel_type.to_ascii_lowercase().contains("externallinkpath"))
                .map(|r| r.target)
                .unwrap_or_default(),
            None => String::new(),
        };
        facts.external_targets.push(target);
    }

    for (name, visibility, target) in sheet_entries {
        let mut sheet = SheetFacts { name: name.clone(), visibility, hidden_row_count: 0, hidden_column_count: 0, protected: false };
        match target {
            Some((part, true)) => {
                let text = pkg.read_text(&part)?.ok_or_else(|| PackageError::Corrupt(format!("missing worksheet part {part}")))?;
                parse_sheet(&text, &part, &mut sheet, &shared, &styles, &mut facts.cells, &mut facts.formulas)?;
            }
            // Chartsheets and dialog sheets carry no cells.
            Some((_, false)) => {}
            None => return Err(PackageError::Corrupt(format!("sheet {name:?} has no resolvable part"))),
        }
        facts.sheets.push(sheet);
    }

    read_properties(&mut pkg, &root_rels, &mut facts.doc_properties)?;
    Ok(facts)
}

fn relationship_id<'a>(node: Node<'a, '_>) -> Option<&'a str> {
    node.attributes().find(|a| a.name() == "id" && a.namespace().is_some_and(|ns| ns.contains("relationships"))).map(|a| a.value())
}

fn is_truthy(v: &str) -> bool {
    v == "1" || v.eq_ignore_ascii_case("true")
}

fn is_protection_flag(name: &str, value: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    if lower.starts_with("lock") {
        return is_truthy(value);
    }
    (lower.contains("password") || lower.ends_with("hashvalue")) && !value.is_empty()
}

/// Concatenated run text, skipping phonetic hints.
fn rich_text(node: Node) -> String {
    let mut s = String::new();
    for d in node.descendants().filter(|n| is_local(n, "t")) {
        if d.ancestors().any(|a| is_local(&a, "rPh")) {
            continue;
        }
        s.push_str(d.text().unwrap_or_default());
    }
    s
}

fn shared_strings(text: &str) -> Result<Vec<String>, PackageError> {
    let doc = xml(text, "sharedStrings")?;
    Ok(doc.root_element().children().filter(|n| is_local(n, "si")).map(rich_text).collect())
}

/// Column letters to a 1-based number.
pub fn column_number(letters: &str) -> Option<u32> {
    if letters.is_empty() || letters.len() > 3 {
        return None;
    }
    letters.bytes().try_fold(0u32, |acc, b| b.is_ascii_alphabetic().then(|| acc * 26 + u32::from(b.to_ascii_uppercase() - b'A' + 1)))
}

pub fn column_letters(mut n: u32) -> String {
    let mut out = Vec::new();
    while n > 0 {
        let r = (n - 1) % 26;
        out.push(b'A' + r as u8);
        n = (n - 1) / 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

fn split_cell_ref(r: &str) -> Option<(u32, u32)> {
    let letters = r.bytes().take_while(u8::is_ascii_alphabetic).count();
    let col = column_number(&r[..letters])?;
    let row = r[letters..].parse().ok()?;
    Some((col, row))
}

const MAX_COLUMN: u32 = 16_384;

#[allow(clippy::too_many_arguments)]
fn parse_sheet(
    text: &str,
    part: &str,
    sheet: &mut SheetFacts,
    shared: &[String],
    styles: &Styles,
    cells: &mut Vec<CellSnapshot>,
    formulas: &mut Vec<FormulaFacts>,
) -> Result<(), PackageError> {
    let doc = xml(text, part)?;
    let root = doc.root_element();

    let mut hidden_cols: Vec<(u32, u32)> = Vec::new();
    for col in root.children().filter(|n| is_local(n, "cols")).flat_map(|c| c.children()).filter(|n| is_local(n, "col")) {
        let hidden = col.attribute("hidden").is_some_and(is_truthy)
            || col.attribute("width").and_then(|w| w.parse::<f64>().ok()).is_some_and(|w| w == 0.0);
        if !hidden {
            continue;
        }
        let min: u32 = col.attribute("min").and_then(|v| v.parse().ok()).unwrap_or(1).max(1);
        let max: u32 = col.attribute("max").and_then(|v| v.parse().ok()).unwrap_or(min).min(MAX_COLUMN);
        if max >= min {
            hidden_cols.push((min, max));
            sheet.hidden_column_count += u64::from(max - min + 1);
        }
    }
    let col_hidden = |c: u32| hidden_cols.iter().any(|&(a, b)| (a..=b).contains(&c));

    sheet.protected = root.children().find(|n| is_local(n, "sheetProtection")).is_some_and(|p| p.attribute("sheet").is_some_and(is_truthy));

    let mut shared_formulas: HashMap<String, String> = HashMap::new();
    let Some(data) = root.children().find(|n| is_local(n, "sheetData")) else {
        return Ok(());
    };
    let mut row_no = 0u32;
    for row in data.children().filter(|n| is_local(n, "row")) {
        row_no = row.attribute("r").and_then(|r| r.parse().ok()).unwrap_or(row_no + 1);
        let row_hidden = row.attribute("hidden").is_some_and(is_truthy)
            || row.attribute("ht").and_then(|h| h.parse::<f64>().ok()).is_some_and(|h| h == 0.0);
        if row_hidden {
            sheet.hidden_row_count += 1;
        }
        let mut col_no = 0u32;
        for c in row.children().filter(|n| is_local(n, "c")) {
            let (col, cell_row) = match c.attribute("r").and_then(split_cell_ref) {
                Some((col, r)) => (col, r),
                None => (col_no + 1, row_no),
            };
            col_no = col;
            let cell_ref = format!("{}{}", column_letters(col), cell_row);

            let formula = c.children().find(|n| is_local(n, "f")).and_then(|f| {
                let kind = f.attribute("t").unwrap_or("normal");
                let mut body = f.text().unwrap_or_default().to_string();
                if kind == "shared" {
                    let si = f.attribute("si").unwrap_or_default().to_string();
                    if body.trim().is_empty() {
                        body = shared_formulas.get(&si).cloned().unwrap_or_default();
                    } else {
                        shared_formulas.insert(si, body.clone());
                    }
                }
                let body = body.trim().strip_prefix('=').map(str::to_string).unwrap_or_else(|| body.trim().to_string());
                (!body.is_empty()).then_some((body, kind == "array"))
            });

            let raw_v = c.children().find(|n| is_local(n, "v")).and_then(|v| v.text()).map(str::to_string);
            let (value_kind, cached_value) = match c.attribute("t").unwrap_or("n") {
                "s" => match raw_v.as_deref().and_then(|v| v.trim().parse::<usize>().ok()).and_then(|i| shared.get(i)) {
                    Some(s) => (ValueKind::Text, s.clone()),
                    None => (ValueKind::Empty, String::new()),
                },
                "inlineStr" => match c.children().find(|n| is_local(n, "is")) {
                    Some(is) => (ValueKind::Text, rich_text(is)),
                    None => (ValueKind::Empty, String::new()),
                },
                "str" => match raw_v {
                    Some(v) => (ValueKind::Text, v),
                    None => (ValueKind::Empty, String::new()),
                },
                "b" => match raw_v.as_deref().map(str::trim) {
                    Some(v) => (ValueKind::Boolean, if is_truthy(v) { "TRUE" } else { "FALSE" }.to_string()),
                    None => (ValueKind::Empty, String::new()),
                },
                "e" => match raw_v {
                    Some(v) if ERROR_VALUES.contains(&v.trim()) => (ValueKind::Error, v.trim().to_string()),
                    // Newer error values (#SPILL!, #CALC!, ...) are kept as text.
                    Some(v) => (ValueKind::Text, v),
                    None => (ValueKind::Empty, String::new()),
                },
                _ => match raw_v {
                    Some(v) if !v.trim().is_empty() => (ValueKind::Number, v.trim().to_string()),
                    _ => (ValueKind::Empty, String::new()),
                },
            };

            if value_kind == ValueKind::Empty && formula.is_none() {
                continue;
            }
            let style: usize = c.attribute("s").and_then(|s| s.parse().ok()).unwrap_or(0);
            let fmt = styles.format(style);
            if let Some((text, is_array)) = formula {
                formulas.push(FormulaFacts { sheet: sheet.name.clone(), cell_ref: cell_ref.clone(), text, is_array });
            }
            cells.push(CellSnapshot {
                sheet: sheet.name.clone(),
                cell_ref,
                value_kind,
                cached_value,
                number_format: fmt.number_format,
                font_color: fmt.font_color,
                fill_color: fmt.fill_color,
                in_hidden_row: row_hidden,
                in_hidden_column: col_hidden(col),
            });
        }
    }
    Ok(())
}

fn read_properties(pkg: &mut Package, root_rels: &[Relationship], out: &mut BTreeMap<String, String>) -> Result<(), PackageError> {
    let part_for = |suffix: &str, fallback: &str| {
        root_rels.iter().find(|r| r.is(suffix) && !r.external).map(|r| r.target.clone()).unwrap_or_else(|| fallback.to_string())
    };
    for (part, custom) in [
        (part_for("core-properties", "docProps/core.xml"), false),
        (part_for("extended-properties", "docProps/app.xml"), false),
        (part_for("custom-properties", "docProps/custom.xml"), true),
    ] {
        let Some(text) = pkg.read_text(&part)? else {
            continue;
        };
        // Unreadable property parts never sink the workbook.
        let Ok(doc) = Document::parse(&text) else {
            continue;
        };
        for el in doc.root_element().children().filter(Node::is_element) {
            if custom {
                let Some(name) = el.attribute("name") else {
                    continue;
                };
                let value = el.children().find(Node::is_element).and_then(|v| v.text()).unwrap_or_default();
                out.insert(format!("custom.{name}"), value.trim().to_string());
            } else if !el.children().any(|c| c.is_element()) {
                out.insert(el.tag_name().name().to_string(), el.text().unwrap_or_default().trim().to_string());
            }
        }
    }
    Ok(())
}
