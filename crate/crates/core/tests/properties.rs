mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use chrono::DateTime;
use common::arb;
use proptest::prelude::*;
use sheetrisk::discovery::{sniff_kind, FileId, FileRecord};
use sheetrisk::formula::{analyze, if_nesting_depth, parse};
use sheetrisk::graph::{propagate_criticality, EdgeSource, LinkEdge, LinkGraph, LinkNode};
use sheetrisk::inventory::{diff, load_snapshot, save_snapshot, InventorySnapshot};
use sheetrisk::risk::{BandScale, RiskAssessment, RiskLevel, RiskMatrix, RiskModel};
use sheetrisk::workbook::parse_workbook;

fn record_for(bytes: &[u8]) -> FileRecord {
    let t = DateTime::from_timestamp(0, 0).unwrap();
    FileRecord::from_bytes(PathBuf::from("/fuzz/input.bin"), bytes, sniff_kind(bytes), t, None)
}

fn assessment(model: &RiskModel, mat: u64, cx: u64) -> RiskAssessment {
    let m = model.materiality_scale.index(mat);
    let c = model.complexity_scale.index(cx);
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
}

fn graph(n: usize, edges: &[(usize, usize)]) -> LinkGraph {
    LinkGraph {
        nodes: (0..n)
            .map(|i| LinkNode {
                file_id: FileId { path: PathBuf::from(format!("/g/{i}.xlsx")), container_chain: Vec::new() },
                resolved: true,
            })
            .collect(),
        edges: edges.iter().map(|&(from, to)| LinkEdge { from, to, source: EdgeSource::ExternalPart }).collect(),
    }
}

/// Per-node (materiality, complexity) scores and feeder -> dependent edges.
type Network = (Vec<(u64, u64)>, Vec<(usize, usize)>);

fn network() -> impl Strategy<Value = Network> {
    (1usize..12).prop_flat_map(|n| (prop::collection::vec((0u64..120, 0u64..120), n), prop::collection::vec((0..n, 0..n), 0..n * 2)))
}

/// Fixpoint over the edge list: anything that feeds a marked node is marked.
fn reaches_critical(model: &RiskModel, a: &[RiskAssessment], edges: &[(usize, usize)]) -> Vec<bool> {
    let mut marked: Vec<bool> = a.iter().map(|x| model.is_critical(x)).collect();
    loop {
        let mut changed = false;
        for &(from, to) in edges {
            if marked[to] && !marked[from] {
                marked[from] = true;
                changed = true;
            }
        }
        if !changed {
            return marked;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]

    #[test]
    fn if_depth_matches_generation((text, depth) in common::formula_with_depth()) {
        let expr = parse(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(if_nesting_depth(&expr), depth, "{}", text);
        let wrapped = parse(&format!("IF(1,{text},0)")).unwrap();
        prop_assert_eq!(if_nesting_depth(&wrapped), depth + 1);
        prop_assert_eq!(analyze(&format!("={text}")).unwrap().if_depth, depth);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..=256)) {
        let start = Instant::now();
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse(&text);
        let _ = analyze(&text);
        let _ = parse_workbook(&record_for(&bytes), &bytes);
        prop_assert!(start.elapsed() <= Duration::from_secs(1));
    }

    #[test]
    fn formula_like_text_never_panics(text in "[=A-Z0-9(),:;!$\"'#.+*/^&<>{}\\[\\] -]{0,64}") {
        let _ = parse(&text);
        let _ = analyze(&text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snapshots_round_trip(snapshot in arb::snapshot(12)) {
        let dir = tempfile::tempdir().unwrap();
        let path = save_snapshot(&snapshot, dir.path()).unwrap();
        prop_assert_eq!(load_snapshot(&path).unwrap(), snapshot);
    }

    #[test]
    fn diff_partitions_both_sides(a in arb::snapshot(10), b in arb::snapshot(10), shared in prop::collection::vec(any::<bool>(), 10)) {
        let mut b = b;
        // Carry some of a's records over so unchanged and modified occur.
        for (e, keep) in a.records.iter().zip(&shared) {
            if *keep {
                let mut e = e.clone();
                if e.record.size_bytes % 2 == 0 {
                    e.record.content_hash = "0".repeat(64);
                }
                b.records.push(e);
            }
        }
        let dedup = |s: &mut InventorySnapshot| {
            s.sort();
            s.records.dedup_by(|x, y| x.id() == y.id());
        };
        let mut a = a;
        dedup(&mut a);
        dedup(&mut b);

        let d = diff(&a, &b);
        let before: BTreeSet<_> = a.records.iter().map(|e| e.id()).collect();
        let after: BTreeSet<_> = b.records.iter().map(|e| e.id()).collect();
        let set = |v: &[FileId]| v.iter().cloned().collect::<BTreeSet<_>>();

        let present: BTreeSet<_> = set(&d.new).union(&set(&d.modified)).cloned().collect::<BTreeSet<_>>().union(&set(&d.unchanged)).cloned().collect();
        prop_assert_eq!(present, after.clone());
        prop_assert_eq!(d.new.len() + d.modified.len() + d.unchanged.len(), after.len());
        prop_assert_eq!(set(&d.deleted), before.difference(&after).cloned().collect::<BTreeSet<_>>());
        prop_assert_eq!(set(&d.new), after.difference(&before).cloned().collect::<BTreeSet<_>>());
        for id in &d.newly_high_risk {
            let now = b.records.iter().find(|e| &e.id() == id).unwrap();
            prop_assert_eq!(now.assessment.risk, RiskLevel::High);
        }
        prop_assert!(diff(&b, &b).is_quiet());
        prop_assert!(diff(&b, &b).newly_high_risk.is_empty());
    }

    #[test]
    fn propagation_matches_reachability((scores, edges) in network()) {
        let model = RiskModel::default();
        let start: Vec<_> = scores.iter().map(|&(m, c)| assessment(&model, m, c)).collect();
        let g = graph(start.len(), &edges);
        let once = propagate_criticality(&g, &start, &model);
        let twice = propagate_criticality(&g, &once, &model);
        prop_assert_eq!(&twice, &once);

        let marked = reaches_critical(&model, &start, &edges);
        for (i, (before, after)) in start.iter().zip(&once).enumerate() {
            let critical = model.is_critical(before);
            prop_assert_eq!(after.inherited_critical, marked[i] && !critical, "node {}", i);
            prop_assert!(after.risk >= before.risk);
            prop_assert_eq!(after.materiality_score, before.materiality_score);
            prop_assert_eq!(&after.materiality_band, &before.materiality_band);
            prop_assert_eq!(&after.complexity_band, &before.complexity_band);
            if after.inherited_critical {
                prop_assert_eq!(after.effective_materiality_band.as_str(), "CRITICAL");
                let c = model.complexity_scale.position(&after.complexity_band).unwrap();
                prop_assert_eq!(after.risk, model.matrix.assess(2, c));
            } else {
                prop_assert_eq!(after, before);
            }
        }
        if !start.iter().any(|a| model.is_critical(a)) {
            prop_assert_eq!(once, start);
        }
    }

    #[test]
    fn bands_are_monotone_in_score(a in 0u64..1000, b in 0u64..1000, c0 in 0u64..200, c1 in 0u64..200) {
        let scale = BandScale { cuts: [c0.min(c1), c0.max(c1)], labels: ["a".into(), "b".into(), "c".into()] };
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(scale.index(lo) <= scale.index(hi));
        prop_assert_eq!(scale.index(hi) == 0, hi < scale.cuts[0]);
        prop_assert_eq!(scale.index(lo) == 2, lo >= scale.cuts[1]);
    }

    #[test]
    fn monotone_matrices_pass_validation(cells in prop::array::uniform3(prop::array::uniform3(arb::level()))) {
        let matrix = RiskMatrix { cells };
        let mut monotone = true;
        for m in 0..3 {
            for c in 0..3 {
                if m < 2 && cells[m + 1][c] < cells[m][c] {
                    monotone = false;
                }
                if c < 2 && cells[m][c + 1] < cells[m][c] {
                    monotone = false;
                }
            }
        }
        prop_assert_eq!(matrix.monotonicity_violation().is_none(), monotone);
        let model = RiskModel { matrix, ..RiskModel::default() };
        prop_assert_eq!(model.validate().is_ok(), monotone);
    }
}
