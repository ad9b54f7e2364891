//! Recursive ZIP expansion with depth and decompressed-size caps.

use std::io::{Cursor, Read};

use zip::ZipArchive;

use super::{sniff::sniff_kind, ArchiveLimits, FileKind, FileRecord};
use crate::error::{ScanError, ScanErrorKind};

/// Nested records found inside an archive plus whatever went wrong on the way.
#[derive(Debug, Default)]
pub struct Expansion {
    pub records: Vec<FileRecord>,
    pub errors: Vec<ScanError>,
}

/// Expands `record` (held in `bytes`), which sits `depth` archive levels deep.
///
/// Spreadsheet kinds are terminal and yield nothing. The decompressed-size
/// budget is shared by every level under one outer archive; once it runs out
/// the expansion stops and keeps what it already found.
pub fn expand_archive(record: &FileRecord, bytes: &[u8], depth: usize, limits: &ArchiveLimits) -> Expansion {
    let mut out = Expansion::default();
    if record.kind != FileKind::ZipArchive {
        return out;
    }
    let mut remaining = limits.budget_bytes;
    expand_into(record, bytes, depth, limits, &mut remaining, &mut out);
    out
}

/// Returns false once the budget is exhausted.
fn expand_into(parent: &FileRecord, bytes: &[u8], depth: usize, limits: &ArchiveLimits, remaining: &mut u64, out: &mut Expansion) -> bool {
    let err = |kind, msg: String| ScanError::new(kind, &parent.path, msg).nested(&parent.container_chain);

    if depth >= limits.max_depth {
        out.errors
            .push(err(ScanErrorKind::ArchiveDepthExceeded, format!("nesting depth {} reaches the cap of {}", depth, limits.max_depth)));
        return true;
    }
    let mut archive = match ZipArchive::new(Cursor::new(bytes)) {
        Ok(a) => a,
        Err(e) => {
            out.errors.push(err(ScanErrorKind::CorruptArchive, e.to_string()));
            return true;
        }
    };

    for i in 0..archive.len() {
        let mut entry = match archive.by_index(i) {
            Ok(e) => e,
            Err(e) => {
                out.errors.push(err(ScanErrorKind::CorruptArchive, format!("entry #{i}: {e}")));
                continue;
            }
        };
        if entry.is_dir() {
            continue;
        }
        let name = entry.name().map(|n| n.into_owned()).unwrap_or_else(|_| format!("#{i}"));
        let mut data = Vec::with_capacity(entry.size().min(*remaining).min(1 << 24) as usize);
        if let Err(e) = entry.by_ref().take(remaining.saturating_add(1)).read_to_end(&mut data) {
            out.errors.push(err(ScanErrorKind::CorruptArchive, format!("{name}: {e}")));
            continue;
        }
        if data.len() as u64 > *remaining {
            out.errors.push(err(
                ScanErrorKind::ArchiveBudgetExceeded,
                format!("{name}: decompressed size budget of {} bytes exhausted", limits.budget_bytes),
            ));
            return false;
        }
        *remaining -= data.len() as u64;
        drop(entry);

        let kind = sniff_kind(&data);
        if kind == FileKind::Other {
            continue;
        }
        let child = parent.nested(&name, kind, &data);
        if kind == FileKind::ZipArchive {
            if !expand_into(&child, &data, depth + 1, limits, remaining, out) {
                return false;
            }
        } else {
            out.records.push(child);
        }
    }
    true
}
