#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use proptest::prelude::*;
use sha2::{Digest, Sha256};
use sheetrisk_fixtures::{
    encrypted_workbook_bytes, legacy_workbook_bytes, ole_document_bytes, png_bytes, zip_bytes, CellStyle, Color, Value, WorkbookBuilder,
};

/// "Income" text plus a currency-formatted 6,000,000: materiality 90.
pub fn income_workbook() -> WorkbookBuilder {
    let mut wb = WorkbookBuilder::new();
    let money = wb.style(CellStyle { builtin_num_fmt: Some(7), ..Default::default() });
    wb.sheet("P&L").text("A1", "Net Income").styled("B1", Value::Number(6_000_000.0), money);
    wb
}

/// Two error cells, one white-on-white cell and a protected sheet:
/// complexity 95.
pub fn complex_workbook() -> WorkbookBuilder {
    let mut wb = WorkbookBuilder::new();
    let ghost =
        wb.style(CellStyle { font_color: Some(Color::rgb("FFFFFFFF")), fill_color: Some(Color::rgb("FFFFFFFF")), ..Default::default() });
    wb.sheet("Calc")
        .formula("A1", "1/0", Value::Error("#DIV/0!".into()))
        .formula("A2", "#REF!+1", Value::Error("#REF!".into()))
        .styled("A3", Value::Number(7.0), ghost)
        .protect();
    wb
}

pub fn plain_workbook(seed: u32) -> WorkbookBuilder {
    let mut wb = WorkbookBuilder::new();
    wb.sheet("Data").number("A1", f64::from(seed)).text("A2", "notes").formula("A3", "A1*2", Value::Number(f64::from(seed) * 2.0));
    wb
}

pub fn write(path: &Path, bytes: &[u8]) {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).unwrap();
    }
    fs::write(path, bytes).unwrap();
}

/// Identity of an expected record: on-disk path and container chain.
pub type Planted = (PathBuf, Vec<String>);

/// A mixed tree of 23 files: 9 spreadsheets (renamed, extensionless, in a
/// ZIP nested two deep, encrypted, legacy, macro-enabled) and 15 decoys.
pub fn planted_corpus(root: &Path) -> Vec<Planted> {
    let mut expected = Vec::new();
    let mut plant = |rel: &str, bytes: Vec<u8>, chain: &[&str]| {
        let p = root.join(rel);
        write(&p, &bytes);
        if !chain.is_empty() || !rel.ends_with(".zip") {
            expected.push((p, chain.iter().map(|s| s.to_string()).collect()));
        }
    };
    plant("finance/budget.xlsx", plain_workbook(1).build(), &[]);
    plant("finance/notes.dat", plain_workbook(2).build(), &[]);
    plant("finance/archive/LEDGER", plain_workbook(3).build(), &[]);
    plant("vault/locked.xlsx", encrypted_workbook_bytes(), &[]);
    plant("old/legacy.xls", legacy_workbook_bytes(), &[]);
    let mut macro_wb = plain_workbook(4);
    macro_wb.macro_enabled();
    plant("tools/macros.xlsm", macro_wb.build(), &[]);

    plant("exports/renamed.bin", plain_workbook(7).build(), &[]);

    let inner = zip_bytes(&[("deep/hidden.xlsx", plain_workbook(5).build()), ("readme.txt", b"text".to_vec())]);
    let outer = zip_bytes(&[("inner.zip", inner), ("top.xlsx", plain_workbook(6).build())]);
    write(&root.join("exports/bundle.zip"), &outer);
    let bundle = root.join("exports/bundle.zip");
    expected.push((bundle.clone(), vec!["inner.zip".into(), "deep/hidden.xlsx".into()]));
    expected.push((bundle, vec!["top.xlsx".into()]));

    // Decoys.
    let decoys: Vec<(&str, Vec<u8>)> = vec![
        ("readme.txt", b"hello".to_vec()),
        ("fake.xlsx", b"not a workbook at all".to_vec()),
        ("empty.xlsx", Vec::new()),
        ("image.png", png_bytes()),
        ("memo.doc", ole_document_bytes()),
        ("texts.zip", zip_bytes(&[("a.txt", b"a".to_vec()), ("b.txt", b"b".to_vec())])),
        ("data.csv", b"a,b\n1,2\n".to_vec()),
        ("truncated.xlsx", plain_workbook(8).build()[..30].to_vec()),
        ("docx.zip", zip_bytes(&[("[Content_Types].xml", b"<Types/>".to_vec()), ("word/document.xml", b"<w/>".to_vec())])),
        ("sub/notes.md", b"# notes".to_vec()),
        ("sub/config.json", b"{}".to_vec()),
        ("sub/pk.dat", b"PK\x03\x04garbage".to_vec()),
        ("sub/ole.bin", b"\xD0\xCF\x11\xE0\xA1\xB1\x1A\xE1short".to_vec()),
        ("sub/script.sh", b"#!/bin/sh\necho hi\n".to_vec()),
        ("sub/random.bin", (0..512u32).map(|i| (i * 37 % 251) as u8).collect()),
    ];
    for (rel, bytes) in decoys {
        write(&root.join("decoys").join(rel), &bytes);
    }
    expected.sort();
    expected
}

/// Per-file content hash and modification time for a whole tree.
pub fn tree_fingerprint(root: &Path) -> BTreeMap<PathBuf, (String, SystemTime)> {
    let mut out = BTreeMap::new();
    for entry in walkdir(root) {
        let meta = fs::metadata(&entry).unwrap();
        let hash = hex(&Sha256::digest(fs::read(&entry).unwrap()));
        out.insert(entry, (hash, meta.modified().unwrap()));
    }
    out
}

/// Hash over every path and its bytes, in sorted order.
pub fn tree_hash(root: &Path) -> String {
    let mut h = Sha256::new();
    for entry in walkdir(root) {
        h.update(entry.to_string_lossy().as_bytes());
        h.update([0]);
        h.update(fs::read(&entry).unwrap());
    }
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn walkdir(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

/// A formula with its IF nesting depth, tracked during generation.
pub fn formula_with_depth() -> impl Strategy<Value = (String, usize)> {
    let leaf = prop_oneof![
        (0u32..1000).prop_map(|n| (n.to_string(), 0)),
        (1u32..30, 1u32..200).prop_map(|(c, r)| (format!("{}{r}", sheetrisk_fixtures::column_letters(c)), 0)),
        Just(("\"x\"".to_string(), 0)),
        Just(("TRUE".to_string(), 0)),
        Just(("Sheet2!$B$3".to_string(), 0)),
        Just(("SUM(A1:C9)".to_string(), 0)),
        Just(("#N/A".to_string(), 0)),
        Just(("rate".to_string(), 0)),
    ];
    leaf.prop_recursive(8, 64, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(c, a, b)| (format!("IF({},{},{})", c.0, a.0, b.0), 1 + c.1.max(a.1).max(b.1))),
            (inner.clone(), inner.clone()).prop_map(|(c, a)| (format!("if({}, {})", c.0, a.0), 1 + c.1.max(a.1))),
            (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "^", "&", "=", "<>", "<="]))
                .prop_map(|(a, b, op)| (format!("{}{op}{}", a.0, b.0), a.1.max(b.1))),
            inner.clone().prop_map(|a| (format!("({})", a.0), a.1)),
            inner.clone().prop_map(|a| (format!("-{}", a.0), a.1)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| (format!("SUM({},{})", a.0, b.0), a.1.max(b.1))),
            inner.clone().prop_map(|a| (format!("IFERROR({},0)", a.0), a.1)),
            inner.prop_map(|a| (format!("_xlfn.IFS({},1)", a.0), a.1)),
        ]
    })
}

pub mod arb {
    use std::path::PathBuf;

    use chrono::{DateTime, Utc};
    use proptest::prelude::*;
    use sheetrisk::discovery::{extension_mismatch, FileKind, FileRecord};
    use sheetrisk::graph::{EdgeSource, ExternalTarget};
    use sheetrisk::inventory::{InventoryEntry, InventorySnapshot};
    use sheetrisk::risk::{MetricsProfile, RiskAssessment, RiskLevel};
    use sheetrisk::{ScanError, ScanErrorKind};

    pub fn time() -> impl Strategy<Value = DateTime<Utc>> {
        (0i64..4_000_000_000, 0u32..1_000_000_000).prop_map(|(s, n)| DateTime::from_timestamp(s, n).unwrap())
    }

    pub fn kind() -> impl Strategy<Value = FileKind> {
        prop::sample::select(FileKind::ALL.iter().copied().filter(|k| k.is_spreadsheet()).collect::<Vec<_>>())
    }

    pub fn level() -> impl Strategy<Value = RiskLevel> {
        prop::sample::select(RiskLevel::ALL.to_vec())
    }

    pub fn record() -> impl Strategy<Value = FileRecord> {
        (
            "[a-z]{1,6}(/[a-zA-Z0-9 ._-]{1,8}){0,2}",
            prop::collection::vec("[a-zA-Z0-9_/]{1,10}\\.(xlsx|zip|xls)", 0..3),
            any::<u64>(),
            time(),
            prop::option::of(time()),
            "[0-9a-f]{64}",
            kind(),
            prop::sample::select(vec!["xlsx", "xls", "dat", "", "xlsm", "zip"]),
        )
            .prop_map(|(path, chain, size, modified, created, hash, kind, ext)| FileRecord {
                path: PathBuf::from(format!("/{path}")),
                container_chain: chain,
                size_bytes: size,
                modified_at: modified,
                created_at: created,
                content_hash: hash,
                kind,
                extension: ext.to_string(),
                extension_mismatch: extension_mismatch(kind, ext),
            })
    }

    pub fn metrics() -> impl Strategy<Value = MetricsProfile> {
        (any::<bool>(), prop::collection::vec(0u64..10_000, 13), any::<[bool; 2]>(), prop::option::of("[a-z-]{1,12}")).prop_map(
            |(available, n, flags, reason)| MetricsProfile {
                available,
                unavailable_reason: if available { None } else { reason },
                worksheet_count: n[0],
                formula_count: n[1],
                formula_error_count: n[2],
                array_formula_count: n[3],
                max_if_nesting: n[4],
                external_link_count: n[5],
                has_macros: flags[0],
                named_item_count: n[6],
                invisible_cell_count: n[7],
                hidden_element_count: n[8],
                very_hidden_sheet_count: n[9],
                workbook_size_bytes: n[10],
                is_password_protected: flags[1],
                unparsed_formula_count: n[11],
            },
        )
    }

    pub fn assessment() -> impl Strategy<Value = RiskAssessment> {
        let bands = |labels: [&'static str; 3]| prop::sample::select(labels.to_vec()).prop_map(String::from);
        (
            0u64..500,
            0u64..500,
            prop::collection::vec("[a-z-]{1,10}", 0..3),
            prop::collection::vec("[a-z-]{1,10}", 0..3),
            bands(["LOW", "MODERATE", "CRITICAL"]),
            bands(["BASIC", "INTERMEDIATE", "ADVANCED"]),
            level(),
            any::<bool>(),
        )
            .prop_map(|(ms, cs, mr, cr, mb, cb, risk, inherited)| RiskAssessment {
                materiality_score: ms,
                complexity_score: cs,
                matched_materiality_rule_ids: mr,
                matched_complexity_rule_ids: cr,
                effective_materiality_band: if inherited { "CRITICAL".into() } else { mb.clone() },
                materiality_band: mb,
                complexity_band: cb,
                risk,
                inherited_critical: inherited,
            })
    }

    pub fn target() -> impl Strategy<Value = ExternalTarget> {
        ("[a-zA-Z0-9 ./\\\\:%]{1,20}", any::<bool>()).prop_map(|(t, part)| ExternalTarget {
            target: t,
            source: if part { EdgeSource::ExternalPart } else { EdgeSource::FormulaRef },
        })
    }

    pub fn entry() -> impl Strategy<Value = InventoryEntry> {
        (record(), metrics(), assessment(), prop::collection::vec(target(), 0..3))
            .prop_map(|(record, metrics, assessment, external_targets)| InventoryEntry { record, metrics, assessment, external_targets })
    }

    pub fn scan_error() -> impl Strategy<Value = ScanError> {
        (
            prop::sample::select(vec![ScanErrorKind::AccessDenied, ScanErrorKind::CorruptArchive, ScanErrorKind::CorruptWorkbook]),
            "/[a-z]{1,8}",
            prop::collection::vec("[a-z]{1,5}\\.zip", 0..2),
            "\\PC{0,20}",
        )
            .prop_map(|(kind, path, chain, msg)| ScanError::new(kind, path, msg).nested(&chain))
    }

    pub fn snapshot(max: usize) -> impl Strategy<Value = InventorySnapshot> {
        ("[A-Za-z0-9-]{1,20}", time(), time(), prop::collection::vec(entry(), 0..max), prop::collection::vec(scan_error(), 0..3)).prop_map(
            |(id, a, b, records, errors)| {
                let mut s = InventorySnapshot { scan_id: id, started_at: a.min(b), finished_at: a.max(b), records, errors };
                s.sort();
                s
            },
        )
    }
}
