//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fail.

mod common;

use std::cell::Cell;
use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::DateTime;
use common::*;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use sheetrisk::config::PipelineConfig;
use sheetrisk::discovery::{discover, sniff_kind, FileKind, FileRecord, ScanFilter, ScanRoot};
use sheetrisk::formula::{analyze, if_nesting_depth, parse};
use sheetrisk::graph::{build_graph, propagate_criticality, ExternalTarget};
use sheetrisk::inventory::{load_snapshot, save_snapshot};
use sheetrisk::pipeline::run_pipeline;
use sheetrisk::risk::{RiskAssessment, RiskLevel, RiskModel};
use sheetrisk::workbook::parse_workbook;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn config(root: &Path, out: &Path) -> PipelineConfig {
    PipelineConfig::new(vec![ScanRoot::new(root)], out)
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn scored(name: &str, bytes: Vec<u8>) -> Result<(u64, String, u64, String), String> {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    write(&root.path().join(name), &bytes);
    let outcome = run_pipeline(&config(root.path(), out.path())).map_err(|e| e.to_string())?;
    let a = &outcome.snapshot.records.first().ok_or("no record")?.assessment;
    Ok((a.materiality_score, a.materiality_band.clone(), a.complexity_score, a.complexity_band.clone()))
}

fn materiality_vignette() -> Outcome {
    let (score, band, ..) = scored("income.xlsx", income_workbook().build())?;
    check(score == 90 && band == "CRITICAL", format!("got {score} {band}"))?;
    Ok(format!("score {score}, band {band}"))
}

fn complexity_vignette() -> Outcome {
    let (_, _, score, band) = scored("complex.xlsx", complex_workbook().build())?;
    check(score == 95 && band == "ADVANCED", format!("got {score} {band}"))?;
    Ok(format!("score {score}, band {band}"))
}

fn risk_matrix() -> Outcome {
    let model = RiskModel::default();
    let got = model.assess_labels("CRITICAL", "INTERMEDIATE");
    check(got == Some(RiskLevel::High), format!("assess(CRITICAL, INTERMEDIATE) = {got:?}"))?;
    let m = &model.matrix;
    let mut checked = 0;
    for i in 0..3 {
        for j in 0..3 {
            if i < 2 {
                check(m.assess(i + 1, j) >= m.assess(i, j), format!("row {i} to {} lowers risk at column {j}", i + 1))?;
            }
            if j < 2 {
                check(m.assess(i, j + 1) >= m.assess(i, j), format!("column {j} to {} lowers risk at row {i}", j + 1))?;
            }
            checked += 1;
        }
    }
    Ok(format!("HIGH; {checked} cells monotone"))
}

fn discovery_recall() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let expected = planted_corpus(root.path());
    let files = tree_fingerprint(root.path()).len();
    let planted_paths: BTreeSet<&PathBuf> = expected.iter().map(|(p, _)| p).collect();
    let decoys = files - planted_paths.len();
    check(files >= 20 && decoys >= 5, format!("{files} files, {decoys} decoys"))?;

    let found = discover(&[ScanRoot::new(root.path())], &ScanFilter::default(), None).map_err(|e| e.to_string())?;
    let ids: Vec<_> = found.records.iter().map(|r| (r.path.clone(), r.container_chain.clone())).collect();
    check(ids == expected, format!("found {ids:?}"))?;
    let has = |f: &dyn Fn(&FileRecord) -> bool, what: &str| check(found.records.iter().any(f), format!("missing {what}"));
    has(&|r| r.extension == "dat" && r.kind.is_spreadsheet(), "renamed .dat")?;
    has(&|r| r.extension.is_empty() && r.container_chain.is_empty(), "extensionless")?;
    has(&|r| r.container_chain.len() == 2, "depth-2 nested")?;
    has(&|r| r.kind == FileKind::EncryptedSpreadsheet, "encrypted")?;
    has(&|r| r.kind == FileKind::LegacyBinarySpreadsheet, "legacy")?;
    Ok(format!("{} of {} planted found among {files} files ({decoys} decoys)", ids.len(), expected.len()))
}

fn read_only() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    planted_corpus(root.path());
    let before = tree_fingerprint(root.path());
    let hash = tree_hash(root.path());
    run_pipeline(&config(root.path(), out.path())).map_err(|e| e.to_string())?;
    check(tree_hash(root.path()) == hash, "tree hash changed")?;
    check(tree_fingerprint(root.path()) == before, "a file hash or mtime changed")?;
    Ok(format!("{} files unchanged", before.len()))
}

fn idempotence() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    planted_corpus(root.path());
    write(&root.path().join("income.xlsx"), &income_workbook().build());
    let cfg = config(root.path(), out.path());
    run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let second = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let d = &second.diff;
    check(d.is_quiet(), format!("new {} modified {} deleted {}", d.new.len(), d.modified.len(), d.deleted.len()))?;
    check(second.status.code() == 0, format!("exit {}", second.status.code()))?;
    Ok(format!("empty diff, {} unchanged, exit 0", d.unchanged.len()))
}

fn propagation() -> Outcome {
    let model = RiskModel::default();
    let t = DateTime::from_timestamp(0, 0).unwrap();
    let rec =
        |name: &str| FileRecord::from_bytes(PathBuf::from(format!("/w/{name}")), name.as_bytes(), FileKind::OoxmlSpreadsheet, t, None);
    let assess = |mat: u64, cx: u64| {
        let (m, c) = (model.materiality_scale.index(mat), model.complexity_scale.index(cx));
        RiskAssessment {
            materiality_score: mat,
            complexity_score: cx,
            matched_materiality_rule_ids: Vec::new(),
            matched_complexity_rule_ids: Vec::new(),
            materiality_band: model.materiality_scale.labels[m].clone(),
            complexity_band: model.complexity_scale.labels[c].clone(),
            effective_materiality_band: model.materiality_scale.labels[m].clone(),
            risk: model.matrix.assess(m, c),
            inherited_critical: false,
        }
    };

    // C feeds B feeds A; only A is critical.
    let records = vec![rec("A.xlsx"), rec("B.xlsx"), rec("C.xlsx")];
    let targets = vec![vec![ExternalTarget::part("B.xlsx")], vec![ExternalTarget::part("C.xlsx")], vec![]];
    let g = build_graph(&records, &targets);
    let start = vec![assess(90, 0), assess(0, 50), assess(0, 0)];
    let once = propagate_criticality(&g, &start, &model);
    check(!once[0].inherited_critical, "A marked inherited")?;
    check(once[1].inherited_critical && once[2].inherited_critical, "B or C not marked")?;
    check(once[1].risk == RiskLevel::High && once[2].risk == RiskLevel::Medium, format!("risk {:?} {:?}", once[1].risk, once[2].risk))?;
    check(once[1].effective_materiality_band == "CRITICAL" && once[1].materiality_band == "LOW", "bands not recomputed")?;
    check(propagate_criticality(&g, &once, &model) == once, "second pass changed the chain")?;

    // A and B feed each other.
    let cycle = build_graph(&records[..2], &[vec![ExternalTarget::part("B.xlsx")], vec![ExternalTarget::part("A.xlsx")]]);
    let start = vec![assess(90, 0), assess(0, 0)];
    let once = propagate_criticality(&cycle, &start, &model);
    check(once[1].inherited_critical && !once[0].inherited_critical, "cycle marking wrong")?;
    check(propagate_criticality(&cycle, &once, &model) == once, "second pass changed the cycle")?;
    Ok("chain and cycle marked, risk recomputed, idempotent".into())
}

fn formula_depth() -> Outcome {
    let cases = Cell::new(0u32);
    let max = Cell::new(0usize);
    runner(600)
        .run(&formula_with_depth(), |(text, depth)| {
            let expr = parse(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
            if if_nesting_depth(&expr) != depth {
                return Err(TestCaseError::fail(format!("{text}: depth {} != {depth}", if_nesting_depth(&expr))));
            }
            let wrapped = parse(&format!("IF(1,{text},0)")).map_err(|e| TestCaseError::fail(e.to_string()))?;
            if if_nesting_depth(&wrapped) != depth + 1 {
                return Err(TestCaseError::fail(format!("IF(1,{text},0) is not one deeper")));
            }
            cases.set(cases.get() + 1);
            max.set(max.get().max(depth));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    check(cases.get() >= 500, format!("only {} cases", cases.get()))?;
    Ok(format!("{} formulas, max depth {}", cases.get(), max.get()))
}

fn parser_robustness() -> Outcome {
    let cases = Cell::new(0u32);
    let slowest = Cell::new(Duration::ZERO);
    let t = DateTime::from_timestamp(0, 0).unwrap();
    runner(10_000)
        .run(&proptest::collection::vec(proptest::num::u8::ANY, 0..=256), |bytes| {
            let start = Instant::now();
            let text = String::from_utf8_lossy(&bytes);
            let _ = parse(&text);
            let _ = analyze(&text);
            let record = FileRecord::from_bytes(PathBuf::from("/fuzz.bin"), &bytes, sniff_kind(&bytes), t, None);
            let _ = parse_workbook(&record, &bytes);
            let took = start.elapsed();
            slowest.set(slowest.get().max(took));
            cases.set(cases.get() + 1);
            if took > Duration::from_secs(1) {
                return Err(TestCaseError::fail(format!("{took:?} on {bytes:?}")));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    check(cases.get() >= 10_000, format!("only {} cases", cases.get()))?;
    Ok(format!("{} inputs, slowest {:?}", cases.get(), slowest.get()))
}

fn snapshot_round_trip() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    planted_corpus(root.path());
    let mut snapshot = run_pipeline(&config(root.path(), out.path())).map_err(|e| e.to_string())?.snapshot;
    let mut gen = runner(1);
    while snapshot.records.len() < 120 {
        snapshot.records.push(arb::entry().new_tree(&mut gen).map_err(|e| e.to_string())?.current());
    }
    snapshot.sort();
    let r = &snapshot.records;
    check(r.iter().any(|e| e.record.kind == FileKind::EncryptedSpreadsheet), "no encrypted record")?;
    check(r.iter().any(|e| e.record.kind == FileKind::LegacyBinarySpreadsheet), "no legacy record")?;
    check(r.iter().any(|e| e.record.container_chain.len() >= 2), "no nested record")?;

    let catalog = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = save_snapshot(&snapshot, catalog.path()).map_err(|e| e.to_string())?;
    let loaded = load_snapshot(&path).map_err(|e| e.to_string())?;
    check(loaded == snapshot, "loaded snapshot differs")?;
    Ok(format!("{} records", snapshot.records.len()))
}

fn performance() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    for i in 0..1_000u32 {
        write(&root.path().join(format!("books/{:02}/wb{i}.xlsx", i % 50)), &plain_workbook(i).build());
    }
    for i in 0..9_000u32 {
        let dir = root.path().join(format!("other/{:03}", i % 300));
        let (name, bytes): (String, Vec<u8>) = match i % 4 {
            0 => (format!("note{i}.txt"), format!("note {i}\n").into_bytes()),
            1 => (format!("fake{i}.xlsx"), format!("not a workbook {i}").into_bytes()),
            2 => (format!("data{i}.csv"), format!("a,b\n{i},{}\n", i * 2).into_bytes()),
            _ => (format!("blob{i}.bin"), (0..64u32).map(|b| (b * i % 251) as u8).collect()),
        };
        write(&dir.join(name), &bytes);
    }
    let files = tree_fingerprint(root.path()).len();
    check(files == 10_000, format!("{files} files generated"))?;

    let start = Instant::now();
    let outcome = run_pipeline(&config(root.path(), out.path())).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    check(outcome.snapshot.records.len() == 1_000, format!("{} records", outcome.snapshot.records.len()))?;
    check(took <= Duration::from_secs(60), format!("took {took:?}"))?;
    fs::remove_dir_all(out.path()).ok();
    Ok(format!("{files} files in {:.1}s", took.as_secs_f64()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("materiality vignette", materiality_vignette),
        ("complexity vignette", complexity_vignette),
        ("risk matrix", risk_matrix),
        ("discovery recall", discovery_recall),
        ("read-only", read_only),
        ("idempotence", idempotence),
        ("propagation", propagation),
        ("formula depth", formula_depth),
        ("parser robustness", parser_robustness),
        ("snapshot round-trip", snapshot_round_trip),
        ("performance", performance),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(f) {
            Ok(Ok(detail)) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {:>2} {name}: panicked", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
