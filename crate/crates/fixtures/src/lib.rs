//! Byte-level fixture builders for tests.
//!
//! Workbooks are assembled part by part following the OOXML package layout
//! a desktop spreadsheet application writes, so every structural feature the
//! analyser looks at (sheet states, hidden rows, styles, themes, external
//! link parts, protection, VBA parts) can be planted deliberately.

use std::fmt::Write as _;
use std::io::{Cursor, Write};

use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipWriter};

mod workbook;

pub use workbook::{CellStyle, Color, FormulaKind, SheetBuilder, SheetState, Value, WorkbookBuilder};

/// Writes `entries` into an in-memory ZIP archive.
pub fn zip_bytes<N: AsRef<str>, B: AsRef<[u8]>>(entries: &[(N, B)]) -> Vec<u8> {
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let opts = SimpleFileOptions::default().compression_method(CompressionMethod::Deflated);
    for (name, data) in entries {
        zip.start_file(name.as_ref(), opts).expect("start zip entry");
        zip.write_all(data.as_ref()).expect("write zip entry");
    }
    zip.finish().expect("finish zip").into_inner()
}

/// An OLE compound file holding the streams of a legacy binary workbook.
pub fn legacy_workbook_bytes() -> Vec<u8> {
    compound_file(&[
        ("/Workbook", b"\x09\x08\x10\x00\x00\x06\x05\x00BIFF8-ish payload".as_slice()),
        ("/\u{5}SummaryInformation", b"summary".as_slice()),
    ])
}

/// An OLE compound file wrapping an encrypted OOXML package, as written when
/// a workbook is saved with an open password.
pub fn encrypted_workbook_bytes() -> Vec<u8> {
    compound_file(&[
        ("/EncryptionInfo", b"\x04\x00\x04\x00\x40\x00\x00\x00<encryption/>".as_slice()),
        ("/EncryptedPackage", &[0x5Au8; 4096]),
    ])
}

/// An OLE compound file that is not a workbook (e.g. a legacy document).
pub fn ole_document_bytes() -> Vec<u8> {
    compound_file(&[("/WordDocument", b"not a spreadsheet".as_slice())])
}

pub fn compound_file(streams: &[(&str, &[u8])]) -> Vec<u8> {
    let mut cf = cfb::CompoundFile::create(Cursor::new(Vec::new())).expect("create compound file");
    for (path, data) in streams {
        let mut s = cf.create_stream(path).expect("create stream");
        s.write_all(data).expect("write stream");
    }
    cf.flush().expect("flush compound file");
    cf.into_inner().into_inner()
}

/// A small PNG header followed by junk; enough to look like an image.
pub fn png_bytes() -> Vec<u8> {
    let mut v = vec![0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];
    v.extend_from_slice(&[0u8; 64]);
    v
}

/// Escapes text for inclusion in XML content or attribute values.
pub fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Zero-based column index to letters (0 -> A, 26 -> AA).
pub fn column_letters(mut col: u32) -> String {
    let mut s = String::new();
    loop {
        s.insert(0, (b'A' + (col % 26) as u8) as char);
        if col < 26 {
            break;
        }
        col = col / 26 - 1;
    }
    s
}

pub(crate) fn push_xml_decl(out: &mut String) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>"#);
}
