use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::{push_xml_decl, xml_escape, zip_bytes};

const NS_MAIN: &str = "http://schemas.openxmlformats.org/spreadsheetml/2006/main";
const NS_R: &str = "http://schemas.openxmlformats.org/officeDocument/2006/relationships";
const REL_BASE: &str = "http://schemas.openxmlformats.org/officeDocument/2006/relationships";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SheetState {
    #[default]
    Visible,
    Hidden,
    VeryHidden,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    /// Stored through the shared-string table.
    Text(String),
    InlineText(String),
    Bool(bool),
    Error(String),
    /// Formula string result (`t="str"`).
    FormulaText(String),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Color {
    /// ARGB hex, e.g. `FFFFFFFF`.
    Rgb(String),
    Theme(u32, f64),
    Indexed(u32),
    Auto,
}

impl Color {
    pub fn rgb(hex: &str) -> Self {
        Color::Rgb(hex.to_string())
    }

    fn attrs(&self) -> String {
        match self {
            Color::Rgb(v) => format!(r#"rgb="{v}""#),
            Color::Theme(t, tint) if *tint != 0.0 => format!(r#"theme="{t}" tint="{tint}""#),
            Color::Theme(t, _) => format!(r#"theme="{t}""#),
            Color::Indexed(i) => format!(r#"indexed="{i}""#),
            Color::Auto => r#"auto="1""#.to_string(),
        }
    }
}

/// Cell format; index 0 in the builder is always the default style.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CellStyle {
    pub builtin_num_fmt: Option<u32>,
    pub custom_num_fmt: Option<String>,
    pub font_color: Option<Color>,
    pub fill_color: Option<Color>,
    /// Pattern type other than solid, e.g. `gray125`.
    pub fill_pattern: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FormulaKind {
    Normal,
    Array,
    /// Master of a shared formula group.
    SharedMaster {
        si: u32,
        range: String,
    },
    /// Dependent cell of a shared formula group; carries no text.
    SharedChild {
        si: u32,
    },
}

#[derive(Debug, Clone)]
struct CellSpec {
    reference: String,
    value: Value,
    formula: Option<(String, FormulaKind)>,
    style: u32,
}

#[derive(Debug, Clone, Default)]
pub struct SheetBuilder {
    name: String,
    state: SheetState,
    cells: Vec<CellSpec>,
    hidden_rows: Vec<u32>,
    zero_height_rows: Vec<u32>,
    hidden_cols: Vec<(u32, u32)>,
    zero_width_cols: Vec<(u32, u32)>,
    protected: bool,
    omit_refs: bool,
}

impl SheetBuilder {
    pub fn state(&mut self, state: SheetState) -> &mut Self {
        self.state = state;
        self
    }

    pub fn cell(&mut self, reference: &str, value: Value) -> &mut Self {
        self.styled(reference, value, 0)
    }

    pub fn styled(&mut self, reference: &str, value: Value, style: u32) -> &mut Self {
        self.cells.push(CellSpec { reference: reference.into(), value, formula: None, style });
        self
    }

    pub fn text(&mut self, reference: &str, text: &str) -> &mut Self {
        self.cell(reference, Value::Text(text.into()))
    }

    pub fn number(&mut self, reference: &str, n: f64) -> &mut Self {
        self.cell(reference, Value::Number(n))
    }

    pub fn formula(&mut self, reference: &str, text: &str, cached: Value) -> &mut Self {
        self.formula_kind(reference, text, cached, FormulaKind::Normal)
    }

    pub fn formula_kind(&mut self, reference: &str, text: &str, cached: Value, kind: FormulaKind) -> &mut Self {
        self.cells.push(CellSpec { reference: reference.into(), value: cached, formula: Some((text.into(), kind)), style: 0 });
        self
    }

    /// 1-based row numbers.
    pub fn hide_row(&mut self, row: u32) -> &mut Self {
        self.hidden_rows.push(row);
        self
    }

    pub fn zero_height_row(&mut self, row: u32) -> &mut Self {
        self.zero_height_rows.push(row);
        self
    }

    /// 1-based inclusive column span.
    pub fn hide_cols(&mut self, min: u32, max: u32) -> &mut Self {
        self.hidden_cols.push((min, max));
        self
    }

    pub fn zero_width_cols(&mut self, min: u32, max: u32) -> &mut Self {
        self.zero_width_cols.push((min, max));
        self
    }

    pub fn protect(&mut self) -> &mut Self {
        self.protected = true;
        self
    }

    /// Writes `<c>` and `<row>` elements without `r` attributes.
    pub fn omit_cell_refs(&mut self) -> &mut Self {
        self.omit_refs = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct WorkbookBuilder {
    sheets: Vec<SheetBuilder>,
    styles: Vec<CellStyle>,
    defined_names: Vec<(String, String)>,
    external_links: Vec<Option<String>>,
    macro_enabled: bool,
    vba_part: bool,
    workbook_protected: bool,
    core_props: Vec<(String, String)>,
    app_props: Vec<(String, String)>,
    custom_props: Vec<(String, String)>,
    theme: bool,
    indexed_palette: Option<Vec<String>>,
}

impl Default for WorkbookBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl WorkbookBuilder {
    pub fn new() -> Self {
        Self {
            sheets: Vec::new(),
            styles: vec![CellStyle::default()],
            defined_names: Vec::new(),
            external_links: Vec::new(),
            macro_enabled: false,
            vba_part: false,
            workbook_protected: false,
            core_props: Vec::new(),
            app_props: Vec::new(),
            custom_props: Vec::new(),
            theme: true,
            indexed_palette: None,
        }
    }

    /// Adds a sheet and returns it for population.
    pub fn sheet(&mut self, name: &str) -> &mut SheetBuilder {
        self.sheets.push(SheetBuilder { name: name.into(), ..Default::default() });
        self.sheets.last_mut().expect("just pushed")
    }

    pub fn sheet_at(&mut self, idx: usize) -> &mut SheetBuilder {
        &mut self.sheets[idx]
    }

    /// Registers a cell style and returns its `s` index.
    pub fn style(&mut self, style: CellStyle) -> u32 {
        self.styles.push(style);
        (self.styles.len() - 1) as u32
    }

    pub fn defined_name(&mut self, name: &str, refers_to: &str) -> &mut Self {
        self.defined_names.push((name.into(), refers_to.into()));
        self
    }

    /// Adds an external workbook reference; the returned 1-based index is the
    /// `[n]` prefix formulas use to address it.
    pub fn external_link(&mut self, target: &str) -> u32 {
        self.external_links.push(Some(target.into()));
        self.external_links.len() as u32
    }

    /// An external link part whose path relationship is missing.
    pub fn external_link_without_path(&mut self) -> u32 {
        self.external_links.push(None);
        self.external_links.len() as u32
    }

    /// Declares the macro-enabled content type and adds a VBA project part.
    pub fn macro_enabled(&mut self) -> &mut Self {
        self.macro_enabled = true;
        self.vba_part = true;
        self
    }

    /// Adds a VBA project part while keeping the plain workbook content type.
    pub fn vba_part_only(&mut self) -> &mut Self {
        self.vba_part = true;
        self
    }

    pub fn protect_workbook(&mut self) -> &mut Self {
        self.workbook_protected = true;
        self
    }

    /// Core property by element name, e.g. `dc:title`, `cp:keywords`.
    pub fn core_property(&mut self, element: &str, value: &str) -> &mut Self {
        self.core_props.push((element.into(), value.into()));
        self
    }

    pub fn app_property(&mut self, element: &str, value: &str) -> &mut Self {
        self.app_props.push((element.into(), value.into()));
        self
    }

    pub fn custom_property(&mut self, name: &str, value: &str) -> &mut Self {
        self.custom_props.push((name.into(), value.into()));
        self
    }

    pub fn without_theme(&mut self) -> &mut Self {
        self.theme = false;
        self
    }

    /// Overrides the indexed colour palette with ARGB entries.
    pub fn indexed_palette(&mut self, colors: &[&str]) -> &mut Self {
        self.indexed_palette = Some(colors.iter().map(|c| c.to_string()).collect());
        self
    }

    pub fn build(&self) -> Vec<u8> {
        let mut parts: Vec<(String, Vec<u8>)> = Vec::new();
        let mut shared = SharedStrings::default();

        let sheet_xml: Vec<String> = self.sheets.iter().map(|s| sheet_part(s, &mut shared)).collect();

        parts.push(("[Content_Types].xml".into(), self.content_types().into_bytes()));
        parts.push(("_rels/.rels".into(), self.root_rels().into_bytes()));
        parts.push(("xl/workbook.xml".into(), self.workbook_part().into_bytes()));
        parts.push(("xl/_rels/workbook.xml.rels".into(), self.workbook_rels().into_bytes()));
        for (i, xml) in sheet_xml.into_iter().enumerate() {
            parts.push((format!("xl/worksheets/sheet{}.xml", i + 1), xml.into_bytes()));
        }
        parts.push(("xl/sharedStrings.xml".into(), shared.part().into_bytes()));
        parts.push(("xl/styles.xml".into(), self.styles_part().into_bytes()));
        if self.theme {
            parts.push(("xl/theme/theme1.xml".into(), THEME_XML.as_bytes().to_vec()));
        }
        for (i, target) in self.external_links.iter().enumerate() {
            let n = i + 1;
            parts.push((
                format!("xl/externalLinks/externalLink{n}.xml"),
                format!(
                    r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<externalLink xmlns="{NS_MAIN}" xmlns:r="{NS_R}"><externalBook r:id="rId1"><sheetNames><sheetName val="Sheet1"/></sheetNames></externalBook></externalLink>"#
                )
                .into_bytes(),
            ));
            let rels = match target {
                Some(t) => format!(
                    r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships"><Relationship Id="rId1" Type="{REL_BASE}/externalLinkPath" Target="{}" TargetMode="External"/></Relationships>"#,
                    xml_escape(t)
                ),
                None => r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships"></Relationships>"#
                    .to_string(),
            };
            parts.push((format!("xl/externalLinks/_rels/externalLink{n}.xml.rels"), rels.into_bytes()));
        }
        if self.vba_part {
            parts.push(("xl/vbaProject.bin".into(), vec![0xD0, 0xCF, 0x11, 0xE0, 0, 0, 0, 0]));
        }
        parts.push(("docProps/core.xml".into(), self.core_part().into_bytes()));
        parts.push(("docProps/app.xml".into(), self.app_part().into_bytes()));
        if !self.custom_props.is_empty() {
            parts.push(("docProps/custom.xml".into(), self.custom_part().into_bytes()));
        }
        zip_bytes(&parts)
    }

    fn content_types(&self) -> String {
        let main = if self.macro_enabled {
            "application/vnd.ms-excel.sheet.macroEnabled.main+xml"
        } else {
            "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml"
        };
        let mut s = String::new();
        push_xml_decl(&mut s);
        s.push_str(r#"<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">"#);
        s.push_str(r#"<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>"#);
        s.push_str(r#"<Default Extension="xml" ContentType="application/xml"/>"#);
        if self.vba_part {
            s.push_str(r#"<Default Extension="bin" ContentType="application/vnd.ms-office.vbaProject"/>"#);
        }
        let _ = write!(s, r#"<Override PartName="/xl/workbook.xml" ContentType="{main}"/>"#);
        for i in 0..self.sheets.len() {
            let _ = write!(
                s,
                r#"<Override PartName="/xl/worksheets/sheet{}.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml"/>"#,
                i + 1
            );
        }
        s.push_str(r#"<Override PartName="/xl/sharedStrings.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.sharedStrings+xml"/>"#);
        s.push_str(
            r#"<Override PartName="/xl/styles.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.styles+xml"/>"#,
        );
        if self.theme {
            s.push_str(
                r#"<Override PartName="/xl/theme/theme1.xml" ContentType="application/vnd.openxmlformats-officedocument.theme+xml"/>"#,
            );
        }
        for i in 0..self.external_links.len() {
            let _ = write!(
                s,
                r#"<Override PartName="/xl/externalLinks/externalLink{}.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.externalLink+xml"/>"#,
                i + 1
            );
        }
        s.push_str(r#"<Override PartName="/docProps/core.xml" ContentType="application/vnd.openxmlformats-package.core-properties+xml"/>"#);
        s.push_str(r#"<Override PartName="/docProps/app.xml" ContentType="application/vnd.openxmlformats-officedocument.extended-properties+xml"/>"#);
        if !self.custom_props.is_empty() {
            s.push_str(r#"<Override PartName="/docProps/custom.xml" ContentType="application/vnd.openxmlformats-officedocument.custom-properties+xml"/>"#);
        }
        s.push_str("</Types>");
        s
    }

    fn root_rels(&self) -> String {
        let mut s = String::new();
        push_xml_decl(&mut s);
        s.push_str(r#"<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">"#);
        let _ = write!(s, r#"<Relationship Id="rId1" Type="{REL_BASE}/officeDocument" Target="xl/workbook.xml"/>"#);
        s.push_str(r#"<Relationship Id="rId2" Type="http://schemas.openxmlformats.org/package/2006/relationships/metadata/core-properties" Target="docProps/core.xml"/>"#);
        let _ = write!(s, r#"<Relationship Id="rId3" Type="{REL_BASE}/extended-properties" Target="docProps/app.xml"/>"#);
        if !self.custom_props.is_empty() {
            let _ = write!(s, r#"<Relationship Id="rId4" Type="{REL_BASE}/custom-properties" Target="docProps/custom.xml"/>"#);
        }
        s.push_str("</Relationships>");
        s
    }

    fn workbook_part(&self) -> String {
        let mut s = String::new();
        push_xml_decl(&mut s);
        let _ = write!(s, r#"<workbook xmlns="{NS_MAIN}" xmlns:r="{NS_R}">"#);
        if self.workbook_protected {
            s.push_str(r#"<workbookProtection workbookPassword="CC3D" lockStructure="1"/>"#);
        }
        s.push_str("<sheets>");
        for (i, sheet) in self.sheets.iter().enumerate() {
            let state = match sheet.state {
                SheetState::Visible => "",
                SheetState::Hidden => r#" state="hidden""#,
                SheetState::VeryHidden => r#" state="veryHidden""#,
            };
            let _ = write!(s, r#"<sheet name="{}" sheetId="{}"{state} r:id="rIdS{}"/>"#, xml_escape(&sheet.name), i + 1, i + 1);
        }
        s.push_str("</sheets>");
        if !self.external_links.is_empty() {
            s.push_str("<externalReferences>");
            for i in 0..self.external_links.len() {
                let _ = write!(s, r#"<externalReference r:id="rIdX{}"/>"#, i + 1);
            }
            s.push_str("</externalReferences>");
        }
        if !self.defined_names.is_empty() {
            s.push_str("<definedNames>");
            for (name, refers) in &self.defined_names {
                let _ = write!(s, r#"<definedName name="{}">{}</definedName>"#, xml_escape(name), xml_escape(refers));
            }
            s.push_str("</definedNames>");
        }
        s.push_str("</workbook>");
        s
    }

    fn workbook_rels(&self) -> String {
        let mut s = String::new();
        push_xml_decl(&mut s);
        s.push_str(r#"<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">"#);
        for i in 0..self.sheets.len() {
            let _ = write!(s, r#"<Relationship Id="rIdS{}" Type="{REL_BASE}/worksheet" Target="worksheets/sheet{}.xml"/>"#, i + 1, i + 1);
        }
        let _ = write!(s, r#"<Relationship Id="rIdSS" Type="{REL_BASE}/sharedStrings" Target="sharedStrings.xml"/>"#);
        let _ = write!(s, r#"<Relationship Id="rIdST" Type="{REL_BASE}/styles" Target="/xl/styles.xml"/>"#);
        if self.theme {
            let _ = write!(s, r#"<Relationship Id="rIdTH" Type="{REL_BASE}/theme" Target="theme/theme1.xml"/>"#);
        }
        for i in 0..self.external_links.len() {
            let _ = write!(
                s,
                r#"<Relationship Id="rIdX{}" Type="{REL_BASE}/externalLink" Target="externalLinks/externalLink{}.xml"/>"#,
                i + 1,
                i + 1
            );
        }
        if self.vba_part {
            s.push_str(r#"<Relationship Id="rIdV" Type="http://schemas.microsoft.com/office/2006/relationships/vbaProject" Target="vbaProject.bin"/>"#);
        }
        s.push_str("</Relationships>");
        s
    }

    fn styles_part(&self) -> String {
        let mut num_fmts: BTreeMap<String, u32> = BTreeMap::new();
        let mut fonts = vec![r#"<font><sz val="11"/><color theme="1"/><name val="Calibri"/></font>"#.to_string()];
        let mut fills = vec![
            r#"<fill><patternFill patternType="none"/></fill>"#.to_string(),
            r#"<fill><patternFill patternType="gray125"/></fill>"#.to_string(),
        ];
        let mut xfs = Vec::new();
        for style in &self.styles {
            let num_fmt_id = match (&style.custom_num_fmt, style.builtin_num_fmt) {
                (Some(code), _) => {
                    let next = 164 + num_fmts.len() as u32;
                    *num_fmts.entry(code.clone()).or_insert(next)
                }
                (None, Some(id)) => id,
                (None, None) => 0,
            };
            let font_id = match &style.font_color {
                Some(c) => {
                    fonts.push(format!(r#"<font><sz val="11"/><color {}/><name val="Calibri"/></font>"#, c.attrs()));
                    fonts.len() - 1
                }
                None => 0,
            };
            let fill_id = match (&style.fill_color, &style.fill_pattern) {
                (Some(c), pattern) => {
                    let p = pattern.as_deref().unwrap_or("solid");
                    fills.push(format!(
                        r#"<fill><patternFill patternType="{p}"><fgColor {}/><bgColor indexed="64"/></patternFill></fill>"#,
                        c.attrs()
                    ));
                    fills.len() - 1
                }
                (None, Some(p)) => {
                    fills.push(format!(r#"<fill><patternFill patternType="{p}"/></fill>"#));
                    fills.len() - 1
                }
                (None, None) => 0,
            };
            xfs.push(format!(
                r#"<xf numFmtId="{num_fmt_id}" fontId="{font_id}" fillId="{fill_id}" borderId="0" xfId="0" applyNumberFormat="1" applyFont="1" applyFill="1"/>"#
            ));
        }
        let mut s = String::new();
        push_xml_decl(&mut s);
        let _ = write!(s, r#"<styleSheet xmlns="{NS_MAIN}">"#);
        if !num_fmts.is_empty() {
            let mut by_id: Vec<(&u32, &String)> = num_fmts.iter().map(|(k, v)| (v, k)).collect();
            by_id.sort();
            let _ = write!(s, r#"<numFmts count="{}">"#, by_id.len());
            for (id, code) in by_id {
                let _ = write!(s, r#"<numFmt numFmtId="{id}" formatCode="{}"/>"#, xml_escape(code));
            }
            s.push_str("</numFmts>");
        }
        let _ = write!(s, r#"<fonts count="{}">{}</fonts>"#, fonts.len(), fonts.concat());
        let _ = write!(s, r#"<fills count="{}">{}</fills>"#, fills.len(), fills.concat());
        s.push_str(r#"<borders count="1"><border/></borders>"#);
        s.push_str(r#"<cellStyleXfs count="1"><xf numFmtId="0" fontId="0" fillId="0" borderId="0"/></cellStyleXfs>"#);
        let _ = write!(s, r#"<cellXfs count="{}">{}</cellXfs>"#, xfs.len(), xfs.concat());
        if let Some(palette) = &self.indexed_palette {
            s.push_str("<colors><indexedColors>");
            for c in palette {
                let _ = write!(s, r#"<rgbColor rgb="{c}"/>"#);
            }
            s.push_str("</indexedColors></colors>");
        }
        s.push_str("</styleSheet>");
        s
    }

    fn core_part(&self) -> String {
        let mut s = String::new();
        push_xml_decl(&mut s);
        s.push_str(r#"<cp:coreProperties xmlns:cp="http://schemas.openxmlformats.org/package/2006/metadata/core-properties" xmlns:dc="http://purl.org/dc/elements/1.1/" xmlns:dcterms="http://purl.org/dc/terms/" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance">"#);
        for (el, v) in &self.core_props {
            let _ = write!(s, "<{el}>{}</{el}>", xml_escape(v));
        }
        s.push_str("</cp:coreProperties>");
        s
    }

    fn app_part(&self) -> String {
        let mut s = String::new();
        push_xml_decl(&mut s);
        s.push_str(r#"<Properties xmlns="http://schemas.openxmlformats.org/officeDocument/2006/extended-properties" xmlns:vt="http://schemas.openxmlformats.org/officeDocument/2006/docPropsVTypes"><Application>Microsoft Excel</Application>"#);
        for (el, v) in &self.app_props {
            let _ = write!(s, "<{el}>{}</{el}>", xml_escape(v));
        }
        s.push_str("</Properties>");
        s
    }

    fn custom_part(&self) -> String {
        let mut s = String::new();
        push_xml_decl(&mut s);
        s.push_str(r#"<Properties xmlns="http://schemas.openxmlformats.org/officeDocument/2006/custom-properties" xmlns:vt="http://schemas.openxmlformats.org/officeDocument/2006/docPropsVTypes">"#);
        for (i, (name, v)) in self.custom_props.iter().enumerate() {
            let _ = write!(
                s,
                r#"<property fmtid="{{D5CDD505-2E9C-101B-9397-08002B2CF9AE}}" pid="{}" name="{}"><vt:lpwstr>{}</vt:lpwstr></property>"#,
                i + 2,
                xml_escape(name),
                xml_escape(v)
            );
        }
        s.push_str("</Properties>");
        s
    }
}

#[derive(Default)]
struct SharedStrings {
    items: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl SharedStrings {
    fn intern(&mut self, s: &str) -> usize {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        self.items.push(s.to_string());
        self.index.insert(s.to_string(), self.items.len() - 1);
        self.items.len() - 1
    }

    fn part(&self) -> String {
        let mut s = String::new();
        push_xml_decl(&mut s);
        let _ = write!(s, r#"<sst xmlns="{NS_MAIN}" count="{}" uniqueCount="{}">"#, self.items.len(), self.items.len());
        for item in &self.items {
            // Split into two runs when long enough, exercising rich-text concatenation.
            if item.len() > 6 && item.is_char_boundary(3) {
                let (a, b) = item.split_at(3);
                let _ = write!(
                    s,
                    r#"<si><r><t xml:space="preserve">{}</t></r><r><rPr><b/></rPr><t xml:space="preserve">{}</t></r><rPh sb="0" eb="1"><t>ignored</t></rPh></si>"#,
                    xml_escape(a),
                    xml_escape(b)
                );
            } else {
                let _ = write!(s, r#"<si><t xml:space="preserve">{}</t></si>"#, xml_escape(item));
            }
        }
        s.push_str("</sst>");
        s
    }
}

fn split_ref(r: &str) -> (String, u32) {
    let letters: String = r.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    let row: u32 = r[letters.len()..].parse().expect("fixture cell reference");
    (letters, row)
}

fn sheet_part(sheet: &SheetBuilder, shared: &mut SharedStrings) -> String {
    let mut s = String::new();
    push_xml_decl(&mut s);
    let _ = write!(s, r#"<worksheet xmlns="{NS_MAIN}" xmlns:r="{NS_R}">"#);
    let mut cols: Vec<(u32, u32, &str)> = sheet
        .hidden_cols
        .iter()
        .map(|&(a, b)| (a, b, r#"width="9.14" hidden="1""#))
        .chain(sheet.zero_width_cols.iter().map(|&(a, b)| (a, b, r#"width="0" customWidth="1""#)))
        .collect();
    cols.sort();
    if !cols.is_empty() {
        s.push_str("<cols>");
        for (a, b, attrs) in cols {
            let _ = write!(s, r#"<col min="{a}" max="{b}" {attrs}/>"#);
        }
        s.push_str("</cols>");
    }

    let mut rows: BTreeMap<u32, Vec<&CellSpec>> = BTreeMap::new();
    for c in &sheet.cells {
        rows.entry(split_ref(&c.reference).1).or_default().push(c);
    }
    for &r in sheet.hidden_rows.iter().chain(&sheet.zero_height_rows) {
        rows.entry(r).or_default();
    }

    s.push_str("<sheetData>");
    for (row, cells) in rows {
        let mut attrs = String::new();
        if !sheet.omit_refs {
            let _ = write!(attrs, r#" r="{row}""#);
        }
        if sheet.hidden_rows.contains(&row) {
            attrs.push_str(r#" hidden="1""#);
        }
        if sheet.zero_height_rows.contains(&row) {
            attrs.push_str(r#" ht="0" customHeight="1""#);
        }
        let _ = write!(s, "<row{attrs}>");
        for c in cells {
            let mut cattrs = String::new();
            if !sheet.omit_refs {
                let _ = write!(cattrs, r#" r="{}""#, c.reference);
            }
            if c.style != 0 {
                let _ = write!(cattrs, r#" s="{}""#, c.style);
            }
            let (t, v) = match &c.value {
                Value::Number(n) => ("", Some(format!("<v>{n}</v>"))),
                Value::Text(t) => (r#" t="s""#, Some(format!("<v>{}</v>", shared.intern(t)))),
                Value::InlineText(t) => (r#" t="inlineStr""#, Some(format!("<is><t>{}</t></is>", xml_escape(t)))),
                Value::Bool(b) => (r#" t="b""#, Some(format!("<v>{}</v>", u8::from(*b)))),
                Value::Error(e) => (r#" t="e""#, Some(format!("<v>{}</v>", xml_escape(e)))),
                Value::FormulaText(t) => (r#" t="str""#, Some(format!("<v>{}</v>", xml_escape(t)))),
                Value::None => ("", None),
            };
            let f = match &c.formula {
                None => String::new(),
                Some((text, FormulaKind::Normal)) => format!("<f>{}</f>", xml_escape(text)),
                Some((text, FormulaKind::Array)) => {
                    format!(r#"<f t="array" ref="{}">{}</f>"#, c.reference, xml_escape(text))
                }
                Some((text, FormulaKind::SharedMaster { si, range })) => {
                    format!(r#"<f t="shared" ref="{range}" si="{si}">{}</f>"#, xml_escape(text))
                }
                Some((_, FormulaKind::SharedChild { si })) => format!(r#"<f t="shared" si="{si}"/>"#),
            };
            let _ = write!(s, "<c{cattrs}{t}>{f}{}</c>", v.unwrap_or_default());
        }
        s.push_str("</row>");
    }
    s.push_str("</sheetData>");
    if sheet.protected {
        s.push_str(r#"<sheetProtection password="CC3D" sheet="1" objects="1" scenarios="1"/>"#);
    }
    s.push_str("</worksheet>");
    s
}

const THEME_XML: &str = r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<a:theme xmlns:a="http://schemas.openxmlformats.org/drawingml/2006/main" name="Office Theme"><a:themeElements><a:clrScheme name="Office"><a:dk1><a:sysClr val="windowText" lastClr="000000"/></a:dk1><a:lt1><a:sysClr val="window" lastClr="FFFFFF"/></a:lt1><a:dk2><a:srgbClr val="44546A"/></a:dk2><a:lt2><a:srgbClr val="E7E6E6"/></a:lt2><a:accent1><a:srgbClr val="4472C4"/></a:accent1><a:accent2><a:srgbClr val="ED7D31"/></a:accent2><a:accent3><a:srgbClr val="A5A5A5"/></a:accent3><a:accent4><a:srgbClr val="FFC000"/></a:accent4><a:accent5><a:srgbClr val="5B9BD5"/></a:accent5><a:accent6><a:srgbClr val="70AD47"/></a:accent6><a:hlink><a:srgbClr val="0563C1"/></a:hlink><a:folHlink><a:srgbClr val="954F72"/></a:folHlink></a:clrScheme></a:themeElements></a:theme>"#;
