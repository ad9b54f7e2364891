mod common;

use std::fs;
use std::path::Path;

use common::*;
use sheetrisk::config::{parse_config, PipelineConfig};
use sheetrisk::discovery::{discover, FileKind, ScanFilter, ScanRoot};
use sheetrisk::inventory::{diff, load_snapshot};
use sheetrisk::pipeline::{run_pipeline, ExitStatus};
use sheetrisk::risk::RiskLevel;
use sheetrisk_fixtures::WorkbookBuilder;

fn config(root: &Path, out: &Path) -> PipelineConfig {
    PipelineConfig::new(vec![ScanRoot::new(root)], out)
}

fn row<'a>(rows: &'a [sheetrisk::report::ReportRow], name: &str) -> &'a sheetrisk::report::ReportRow {
    rows.iter().find(|r| r.path.ends_with(name)).unwrap_or_else(|| panic!("no row for {name}"))
}

#[test]
fn worked_examples_end_to_end() {
    let root = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    write(&root.path().join("income.xlsx"), &income_workbook().build());
    write(&root.path().join("complex.xlsx"), &complex_workbook().build());

    let mut both = income_workbook();
    let ghost = both.style(sheetrisk_fixtures::CellStyle {
        font_color: Some(sheetrisk_fixtures::Color::rgb("FFFFFFFF")),
        fill_color: Some(sheetrisk_fixtures::Color::rgb("FFFFFFFF")),
        ..Default::default()
    });
    both.sheet("Calc")
        .formula("A1", "1/0", sheetrisk_fixtures::Value::Error("#DIV/0!".into()))
        .formula("A2", "NA()", sheetrisk_fixtures::Value::Error("#N/A".into()))
        .styled("A3", sheetrisk_fixtures::Value::Number(1.0), ghost)
        .protect();
    write(&root.path().join("both.xlsx"), &both.build());

    let outcome = run_pipeline(&config(root.path(), out.path())).unwrap();
    let rows = &outcome.bundle.inventory;

    let income = row(rows, "income.xlsx");
    assert_eq!((income.materiality_score, income.materiality_band.as_str()), (90, "CRITICAL"));
    assert_eq!(income.risk, RiskLevel::Medium);

    let complex = row(rows, "complex.xlsx");
    assert_eq!((complex.complexity_score, complex.complexity_band.as_str()), (95, "ADVANCED"));
    assert_eq!(complex.risk, RiskLevel::Medium);

    let both = row(rows, "both.xlsx");
    assert_eq!((both.materiality_score, both.complexity_score), (90, 95));
    assert_eq!(both.risk, RiskLevel::High);
    assert_eq!(outcome.bundle.high_risk.len(), 1);
    assert_eq!(outcome.status, ExitStatus::Violations);

    let csv = fs::read_to_string(out.path().join("inventory.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains("both.xlsx"));
}

#[test]
fn second_run_is_clean_and_reports_are_byte_identical() {
    let root = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    planted_corpus(root.path());
    write(&root.path().join("risky.xlsx"), &{
        let mut wb = income_workbook();
        wb.sheet("P&L").formula("C1", "1/0", sheetrisk_fixtures::Value::Error("#DIV/0!".into()));
        wb.sheet("P&L").formula("C2", "1/0", sheetrisk_fixtures::Value::Error("#DIV/0!".into()));
        wb.build()
    });
    let cfg = config(root.path(), out.path());

    let first = run_pipeline(&cfg).unwrap();
    assert_eq!(first.status, ExitStatus::Violations);
    let csv1 = fs::read(out.path().join("inventory.csv")).unwrap();

    let second = run_pipeline(&cfg).unwrap();
    assert!(second.diff.is_quiet(), "{:?}", second.diff);
    assert!(second.diff.newly_high_risk.is_empty());
    assert_eq!(second.status, ExitStatus::Clean);
    assert_eq!(second.previous.as_deref(), Some(first.snapshot_path.as_path()));
    assert_ne!(first.snapshot.scan_id, second.snapshot.scan_id);
    assert_eq!(fs::read(out.path().join("inventory.csv")).unwrap(), csv1);
    assert_eq!(load_snapshot(&first.snapshot_path).unwrap(), first.snapshot);
}

#[test]
fn pipeline_never_modifies_the_tree() {
    let root = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    planted_corpus(root.path());
    let before = tree_fingerprint(root.path());
    let hash = tree_hash(root.path());
    run_pipeline(&config(root.path(), out.path())).unwrap();
    assert_eq!(tree_fingerprint(root.path()), before);
    assert_eq!(tree_hash(root.path()), hash);
}

#[test]
fn planted_corpus_is_found_exactly() {
    let root = tempfile::tempdir().unwrap();
    let expected = planted_corpus(root.path());
    let found = discover(&[ScanRoot::new(root.path())], &ScanFilter::default(), None).unwrap();
    let ids: Vec<_> = found.records.iter().map(|r| (r.path.clone(), r.container_chain.clone())).collect();
    assert_eq!(ids, expected);
    let kind = |name: &str| found.records.iter().find(|r| r.file_name() == name).unwrap().kind;
    assert_eq!(kind("locked.xlsx"), FileKind::EncryptedSpreadsheet);
    assert_eq!(kind("legacy.xls"), FileKind::LegacyBinarySpreadsheet);
    assert_eq!(kind("macros.xlsm"), FileKind::OoxmlMacroSpreadsheet);
    assert!(found.records.iter().find(|r| r.file_name() == "notes.dat").unwrap().extension_mismatch);
}

#[test]
fn unreadable_content_stays_in_inventory() {
    let root = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    planted_corpus(root.path());
    let outcome = run_pipeline(&config(root.path(), out.path())).unwrap();
    let entry = |name: &str| outcome.snapshot.records.iter().find(|e| e.record.file_name() == name).unwrap();
    let locked = entry("locked.xlsx");
    assert!(!locked.metrics.available);
    assert!(locked.metrics.is_password_protected);
    assert_eq!(locked.assessment.matched_complexity_rule_ids, vec!["password-protected".to_string()]);
    assert_eq!(entry("legacy.xls").metrics.unavailable_reason.as_deref(), Some("legacy-format"));
    assert!(entry("hidden.xlsx").metrics.available);
    assert_eq!(outcome.bundle.summary.metrics_unavailable, 2);
}

#[test]
fn feeders_of_a_critical_workbook_inherit() {
    let root = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    // C feeds B feeds A; A is critical.
    let mut a = income_workbook();
    let b_link = a.external_link("B.xlsx");
    a.sheet("P&L").formula("D1", &format!("[{b_link}]Sheet1!A1"), sheetrisk_fixtures::Value::Number(1.0));
    write(&root.path().join("A.xlsx"), &a.build());
    let mut b = WorkbookBuilder::new();
    b.external_link("sub/C.xlsx");
    b.sheet("Sheet1").number("A1", 1.0);
    write(&root.path().join("B.xlsx"), &b.build());
    write(&root.path().join("sub/C.xlsx"), &plain_workbook(9).build());
    let mut d = WorkbookBuilder::new();
    d.external_link("missing.xlsx");
    d.sheet("S").number("A1", 1.0);
    write(&root.path().join("D.xlsx"), &d.build());

    let outcome = run_pipeline(&config(root.path(), out.path())).unwrap();
    let entry = |name: &str| outcome.snapshot.records.iter().find(|e| e.record.file_name() == name).unwrap();
    assert!(!entry("A.xlsx").assessment.inherited_critical);
    for feeder in ["B.xlsx", "C.xlsx"] {
        let a = &entry(feeder).assessment;
        assert!(a.inherited_critical, "{feeder}");
        assert_eq!(a.effective_materiality_band, "CRITICAL");
        assert_eq!(a.materiality_band, "LOW");
        assert_eq!(a.risk, RiskLevel::Medium);
    }
    assert!(!entry("D.xlsx").assessment.inherited_critical);
    assert_eq!(outcome.bundle.summary.dangling_feeders.len(), 1);
    let edges = fs::read_to_string(out.path().join("graph.tsv")).unwrap();
    assert_eq!(edges.lines().count(), 3);
    assert!(edges.lines().any(|l| l.contains("missing.xlsx\t") && l.ends_with("\tfalse")));
}

#[test]
fn since_last_scan_admits_changed_files() {
    let root = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    write(&root.path().join("old.xlsx"), &plain_workbook(1).build());
    let text = format!(
        "output_dir = {:?}\n[[roots]]\npath = {:?}\n[filter]\nname_patterns = [\"nomatch-*\"]\nsince_last_scan = true\n",
        out.path(),
        root.path()
    );
    let cfg = parse_config(&text, Path::new("/")).unwrap();
    let first = run_pipeline(&cfg).unwrap();
    // Nothing matches the name pattern and there is no prior scan.
    assert!(first.snapshot.records.is_empty());

    std::thread::sleep(std::time::Duration::from_millis(20));
    write(&root.path().join("new.xlsx"), &plain_workbook(2).build());
    let second = run_pipeline(&cfg).unwrap();
    let names: Vec<String> = second.snapshot.records.iter().map(|e| e.record.file_name()).collect();
    assert_eq!(names, vec!["new.xlsx".to_string()]);
    assert_eq!(second.diff.new.len(), 1);
}

#[test]
fn modified_and_deleted_files_show_in_the_diff() {
    let root = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    write(&root.path().join("a.xlsx"), &plain_workbook(1).build());
    write(&root.path().join("b.xlsx"), &plain_workbook(2).build());
    let cfg = config(root.path(), out.path());
    let first = run_pipeline(&cfg).unwrap();
    write(&root.path().join("a.xlsx"), &plain_workbook(3).build());
    fs::remove_file(root.path().join("b.xlsx")).unwrap();
    let second = run_pipeline(&cfg).unwrap();
    assert_eq!(second.diff.modified.len(), 1);
    assert_eq!(second.diff.deleted.len(), 1);
    assert_eq!(diff(&first.snapshot, &second.snapshot), second.diff);
}
