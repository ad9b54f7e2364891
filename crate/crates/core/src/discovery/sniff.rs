//! Content sniffing: a file's kind is decided from its bytes alone.

use std::io::{Cursor, Read, Seek};

use zip::ZipArchive;

use super::FileKind;

pub const ZIP_LOCAL_HEADER: [u8; 4] = [0x50, 0x4B, 0x03, 0x04];
/// End-of-central-directory signature; an empty archive starts with it.
pub const ZIP_EMPTY_ARCHIVE: [u8; 4] = [0x50, 0x4B, 0x05, 0x06];
pub const OLE_SIGNATURE: [u8; 8] = [0xD0, 0xCF, 0x11, 0xE0, 0xA1, 0xB1, 0x1A, 0xE1];

/// Bytes needed to decide whether a file could be anything but `Other`.
pub const HEADER_LEN: usize = 8;

const CONTENT_TYPES_LIMIT: u64 = 4 << 20;

const WORKBOOK_MAIN_TYPES: &[&str] = &[
    "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml",
    "application/vnd.openxmlformats-officedocument.spreadsheetml.template.main+xml",
    "application/vnd.ms-excel.sheet.macroEnabled.main+xml",
    "application/vnd.ms-excel.template.macroEnabled.main+xml",
    "application/vnd.ms-excel.addin.macroEnabled.main+xml",
    "application/vnd.ms-excel.sheet.binary.macroEnabled.main",
];

const VBA_PROJECT_TYPE: &str = "application/vnd.ms-office.vbaProject";

pub fn is_zip_header(header: &[u8]) -> bool {
    header.starts_with(&ZIP_LOCAL_HEADER) || header.starts_with(&ZIP_EMPTY_ARCHIVE)
}

pub fn is_ole_header(header: &[u8]) -> bool {
    header.starts_with(&OLE_SIGNATURE)
}

/// True when the leading bytes could belong to a spreadsheet or ZIP; every
/// other file sniffs as [`FileKind::Other`] without further reading.
pub fn is_candidate_header(header: &[u8]) -> bool {
    is_zip_header(header) || is_ole_header(header)
}

/// Classifies a file from its complete contents.
pub fn sniff_kind(bytes: &[u8]) -> FileKind {
    if is_zip_header(bytes) {
        return match ZipArchive::new(Cursor::new(bytes)) {
            Ok(mut archive) => match package_info(&mut archive) {
                Some(info) if info.macro_enabled => FileKind::OoxmlMacroSpreadsheet,
                Some(_) => FileKind::OoxmlSpreadsheet,
                None => FileKind::ZipArchive,
            },
            Err(_) => FileKind::Other,
        };
    }
    if is_ole_header(bytes) {
        return sniff_compound_file(bytes);
    }
    FileKind::Other
}

fn sniff_compound_file(bytes: &[u8]) -> FileKind {
    let Ok(cf) = cfb::CompoundFile::open(Cursor::new(bytes)) else {
        return FileKind::Other;
    };
    let names: Vec<String> = cf.read_root_storage().map(|e| e.name().to_ascii_lowercase()).collect();
    let has = |n: &str| names.iter().any(|x| x == n);
    if has("encryptioninfo") && has("encryptedpackage") {
        FileKind::EncryptedSpreadsheet
    } else if has("workbook") || has("book") {
        FileKind::LegacyBinarySpreadsheet
    } else {
        FileKind::Other
    }
}

/// What `[Content_Types].xml` says about an OOXML package.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct PackageInfo {
    pub macro_enabled: bool,
}

/// Returns `Some` when the archive declares a workbook main part.
pub(crate) fn package_info<R: Read + Seek>(archive: &mut ZipArchive<R>) -> Option<PackageInfo> {
    let xml = {
        let entry = archive.by_name("[Content_Types].xml").ok()?;
        let mut buf = String::new();
        entry.take(CONTENT_TYPES_LIMIT).read_to_string(&mut buf).ok()?;
        buf
    };
    let doc = roxmltree::Document::parse(&xml).ok()?;
    let types: Vec<&str> = doc
        .descendants()
        .filter(|n| n.has_tag_name("Override") || n.has_tag_name("Default"))
        .filter_map(|n| n.attribute("ContentType"))
        .collect();
    let main = types.iter().find(|t| WORKBOOK_MAIN_TYPES.iter().any(|w| w.eq_ignore_ascii_case(t)))?;
    let vba_part = archive.file_names().any(|n| n.is_ok_and(|n| n.to_ascii_lowercase().ends_with("vbaproject.bin")));
    let macro_enabled =
        main.to_ascii_lowercase().contains("macroenabled") || types.iter().any(|t| t.eq_ignore_ascii_case(VBA_PROJECT_TYPE)) || vba_part;
    Some(PackageInfo { macro_enabled })
}
