//! Finding spreadsheets under scan roots.
//!
//! Kinds are always sniffed from content; the file extension only feeds the
//! mismatch flag. Nothing under a root is ever opened for writing.

mod archive;
mod sniff;
mod walk;

use std::fmt;
use std::fs;
use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use chrono::{DateTime, NaiveDate, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use archive::{expand_archive, Expansion};
pub(crate) use sniff::package_info;
pub use sniff::{is_candidate_header, sniff_kind, HEADER_LEN, OLE_SIGNATURE, ZIP_LOCAL_HEADER};
pub use walk::Walk;

use crate::error::{Error, FieldError, Result, ScanError, ScanErrorKind};
use crate::pattern::TextPattern;

/// Extensions that claim to be spreadsheets.
pub const SPREADSHEET_EXTENSIONS: &[&str] = &["xls", "xlsx", "xlsm", "xlsb", "xlt", "xltx", "xltm", "xla", "xlam"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RootKind {
    #[default]
    FileShare,
    RepositoryExport,
    Workstation,
}

/// A directory tree to scan. Repositories and workstations are scanned as
/// locally mounted or exported trees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanRoot {
    pub path: PathBuf,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub kind: RootKind,
}

impl ScanRoot {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let label = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        Self { path, label, kind: RootKind::default() }
    }
}

/// Inclusive calendar-date window, e.g. one financial close cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    #[serde(deserialize_with = "calendar_date")]
    pub start: NaiveDate,
    #[serde(deserialize_with = "calendar_date")]
    pub end: NaiveDate,
}

/// Accepts a TOML date literal or a `YYYY-MM-DD` string.
fn calendar_date<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<NaiveDate, D::Error> {
    use serde::de::Error as _;
    let text = match toml::Value::deserialize(d)? {
        toml::Value::String(s) => s,
        toml::Value::Datetime(dt) if dt.time.is_none() && dt.offset.is_none() => dt.to_string(),
        other => return Err(D::Error::custom(format!("expected a date, found {other}"))),
    };
    NaiveDate::parse_from_str(&text, "%Y-%m-%d").map_err(D::Error::custom)
}

impl DateWindow {
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        let d = t.date_naive();
        self.start <= d && d <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanFilter {
    pub name_patterns: Vec<String>,
    pub modified_windows: Vec<DateWindow>,
    pub since_last_scan: bool,
    pub max_file_size_bytes: u64,
    pub follow_symlinks: bool,
}

impl Default for ScanFilter {
    fn default() -> Self {
        Self {
            name_patterns: Vec::new(),
            modified_windows: Vec::new(),
            since_last_scan: false,
            max_file_size_bytes: 256 << 20,
            follow_symlinks: false,
        }
    }
}

impl ScanFilter {
    pub fn validate(&self, prefix: &str) -> Vec<FieldError> {
        let mut errs = Vec::new();
        for (i, p) in self.name_patterns.iter().enumerate() {
            if let Err(e) = TextPattern::new(p) {
                errs.push(FieldError::new(format!("{prefix}.name_patterns[{i}]"), e));
            }
        }
        for (i, w) in self.modified_windows.iter().enumerate() {
            if w.start > w.end {
                errs.push(FieldError::new(format!("{prefix}.modified_windows[{i}]"), format!("start {} is after end {}", w.start, w.end)));
            }
        }
        if self.max_file_size_bytes == 0 {
            errs.push(FieldError::new(format!("{prefix}.max_file_size_bytes"), "must be positive"));
        }
        errs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchiveLimits {
    /// Maximum container-chain length of a nested record.
    pub max_depth: usize,
    /// Decompressed bytes allowed per outer archive.
    pub budget_bytes: u64,
}

impl Default for ArchiveLimits {
    fn default() -> Self {
        Self { max_depth: 3, budget_bytes: 512 << 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FileKind {
    OoxmlSpreadsheet,
    OoxmlMacroSpreadsheet,
    LegacyBinarySpreadsheet,
    EncryptedSpreadsheet,
    ZipArchive,
    Other,
}

impl FileKind {
    pub const ALL: [FileKind; 6] = [
        FileKind::OoxmlSpreadsheet,
        FileKind::OoxmlMacroSpreadsheet,
        FileKind::LegacyBinarySpreadsheet,
        FileKind::EncryptedSpreadsheet,
        FileKind::ZipArchive,
        FileKind::Other,
    ];

    pub fn is_spreadsheet(self) -> bool {
        matches!(
            self,
            FileKind::OoxmlSpreadsheet
                | FileKind::OoxmlMacroSpreadsheet
                | FileKind::LegacyBinarySpreadsheet
                | FileKind::EncryptedSpreadsheet
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FileKind::OoxmlSpreadsheet => "ooxml-spreadsheet",
            FileKind::OoxmlMacroSpreadsheet => "ooxml-macro-spreadsheet",
            FileKind::LegacyBinarySpreadsheet => "legacy-binary-spreadsheet",
            FileKind::EncryptedSpreadsheet => "encrypted-spreadsheet",
            FileKind::ZipArchive => "zip-archive",
            FileKind::Other => "other",
        }
    }
}

impl fmt::Display for FileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identity of a record within one scan: the on-disk path plus the chain of
/// archive entry names leading to it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FileId {
    pub path: PathBuf,
    pub container_chain: Vec<String>,
}

impl fmt::Display for FileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.path.display())?;
        for entry in &self.container_chain {
            write!(f, "!{entry}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub container_chain: Vec<String>,
    pub size_bytes: u64,
    pub modified_at: DateTime<Utc>,
    pub created_at: Option<DateTime<Utc>>,
    pub content_hash: String,
    pub kind: FileKind,
    pub extension: String,
    pub extension_mismatch: bool,
}

impl FileRecord {
    /// Builds a record for an on-disk file from its bytes and timestamps.
    pub fn from_bytes(path: PathBuf, bytes: &[u8], kind: FileKind, modified_at: DateTime<Utc>, created_at: Option<DateTime<Utc>>) -> Self {
        let extension = extension_of(&path.to_string_lossy());
        Self {
            extension_mismatch: extension_mismatch(kind, &extension),
            path,
            container_chain: Vec::new(),
            size_bytes: bytes.len() as u64,
            modified_at,
            created_at,
            content_hash: content_hash(bytes),
            kind,
            extension,
        }
    }

    /// A record for archive entry `name` inside `self`. Nested entries inherit
    /// the outer file's timestamps; their hash covers the decompressed bytes.
    pub fn nested(&self, name: &str, kind: FileKind, bytes: &[u8]) -> Self {
        let mut chain = self.container_chain.clone();
        chain.push(name.to_string());
        let extension = extension_of(name);
        Self {
            path: self.path.clone(),
            container_chain: chain,
            size_bytes: bytes.len() as u64,
            modified_at: self.modified_at,
            created_at: self.created_at,
            content_hash: content_hash(bytes),
            kind,
            extension_mismatch: extension_mismatch(kind, &extension),
            extension,
        }
    }

    pub fn id(&self) -> FileId {
        FileId { path: self.path.clone(), container_chain: self.container_chain.clone() }
    }

    /// Name of the innermost file: the last chain entry, else the path's file name.
    pub fn file_name(&self) -> String {
        match self.container_chain.last() {
            Some(entry) => entry.rsplit('/').next().unwrap_or(entry).to_string(),
            None => self.path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        }
    }

    /// `path!entry!entry` form used in reports and rule matching.
    pub fn display_path(&self) -> String {
        self.id().to_string()
    }

    fn sort_key(&self) -> (&Path, &[String]) {
        (&self.path, &self.container_chain)
    }
}

pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn extension_of(name: &str) -> String {
    let leaf = name.rsplit(['/', '\\']).next().unwrap_or(name);
    match leaf.rsplit_once('.') {
        Some((stem, ext)) if !stem.is_empty() => ext.to_lowercase(),
        _ => String::new(),
    }
}

pub fn extension_mismatch(kind: FileKind, extension: &str) -> bool {
    kind.is_spreadsheet() != SPREADSHEET_EXTENSIONS.contains(&extension)
}

pub(crate) fn system_time_utc(t: SystemTime) -> DateTime<Utc> {
    DateTime::<Utc>::from(t)
}

/// Compiled [`ScanFilter`] criteria.
///
/// Categories are OR-ed: a file passes when it matches any active criterion.
/// With no name patterns and no date windows every file passes and
/// `since_last_scan` cannot narrow anything.
#[derive(Debug, Clone)]
pub struct FilterCriteria {
    patterns: Vec<TextPattern>,
    windows: Vec<DateWindow>,
    since_last_scan: bool,
    pub(crate) max_file_size_bytes: u64,
    pub(crate) follow_symlinks: bool,
}

impl FilterCriteria {
    pub fn new(filter: &ScanFilter) -> Result<Self> {
        let errs = filter.validate("filter");
        if !errs.is_empty() {
            return Err(Error::ConfigInvalid(errs));
        }
        Ok(Self {
            patterns: filter.name_patterns.iter().map(|p| TextPattern::new(p).expect("validated")).collect(),
            windows: filter.modified_windows.clone(),
            since_last_scan: filter.since_last_scan,
            max_file_size_bytes: filter.max_file_size_bytes,
            follow_symlinks: filter.follow_symlinks,
        })
    }

    pub fn admits(&self, record: &FileRecord, last_scan_at: Option<DateTime<Utc>>) -> bool {
        if self.patterns.is_empty() && self.windows.is_empty() {
            return true;
        }
        let name = record.file_name();
        if self.patterns.iter().any(|p| p.matches(&name)) {
            return true;
        }
        let in_window = |t: DateTime<Utc>| self.windows.iter().any(|w| w.contains(t));
        if in_window(record.modified_at) || record.created_at.is_some_and(in_window) {
            return true;
        }
        matches!((self.since_last_scan, last_scan_at), (true, Some(t)) if record.modified_at > t)
    }
}

/// Discovery result: spreadsheet records sorted by identity, plus every
/// record- or root-level error met along the way.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Discovery {
    pub records: Vec<FileRecord>,
    pub errors: Vec<ScanError>,
}

#[derive(Debug, Clone)]
pub struct Discoverer {
    criteria: FilterCriteria,
    limits: ArchiveLimits,
}

impl Discoverer {
    pub fn new(filter: &ScanFilter, limits: ArchiveLimits) -> Result<Self> {
        Ok(Self { criteria: FilterCriteria::new(filter)?, limits })
    }

    pub fn limits(&self) -> &ArchiveLimits {
        &self.limits
    }

    /// Sequential walk over one root, yielding on-disk spreadsheet and ZIP
    /// records (unexpanded) and errors, in lexicographic order.
    pub fn walk<'a>(
        &'a self,
        root: &ScanRoot,
        last_scan_at: Option<DateTime<Utc>>,
    ) -> impl Iterator<Item = std::result::Result<FileRecord, ScanError>> + 'a {
        Walk::new(root, self.criteria.follow_symlinks).flat_map(move |item| {
            let items: Vec<_> = match item {
                Err(e) => vec![Err(e)],
                Ok(path) => {
                    let inspected = self.inspect(&path, last_scan_at, false);
                    inspected.outer.into_iter().map(Ok).chain(inspected.errors.into_iter().map(Err)).collect()
                }
            };
            items
        })
    }

    /// Walks every root, sniffs and hashes candidates in parallel, expands
    /// archives and returns the sorted, deduplicated spreadsheet set.
    pub fn discover(&self, roots: &[ScanRoot], last_scan_at: Option<DateTime<Utc>>) -> Result<Discovery> {
        if roots.is_empty() {
            return Err(Error::invalid("roots", "at least one scan root is required"));
        }
        let mut errors = Vec::new();
        let mut paths = Vec::new();
        let mut readable_roots = 0;
        for root in roots {
            let mut root_ok = true;
            for item in Walk::new(root, self.criteria.follow_symlinks) {
                match item {
                    Ok(p) => paths.push(p),
                    Err(e) => {
                        if e.kind == ScanErrorKind::RootUnreadable {
                            root_ok = false;
                        }
                        errors.push(e);
                    }
                }
            }
            readable_roots += usize::from(root_ok);
        }
        if readable_roots == 0 {
            return Err(Error::NoRootsScanned);
        }

        let inspected: Vec<Inspected> = paths.par_iter().map(|p| self.inspect(p, last_scan_at, true)).collect();

        let mut records = Vec::new();
        for item in inspected {
            records.extend(item.outer.into_iter().filter(|r| r.kind.is_spreadsheet()));
            records.extend(item.nested);
            errors.extend(item.errors);
        }
        records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        records.dedup_by(|a, b| a.sort_key() == b.sort_key());
        errors.sort();
        errors.dedup();
        Ok(Discovery { records, errors })
    }

    fn inspect(&self, path: &Path, last_scan_at: Option<DateTime<Utc>>, expand: bool) -> Inspected {
        let mut out = Inspected::default();
        let denied = |e: std::io::Error| ScanError::new(ScanErrorKind::AccessDenied, path, e.to_string());

        let meta = match fs::metadata(path) {
            Ok(m) => m,
            Err(e) => {
                out.errors.push(denied(e));
                return out;
            }
        };
        let mut header = [0u8; HEADER_LEN];
        let header_len = match fs::File::open(path).and_then(|f| read_up_to(f, &mut header)) {
            Ok(n) => n,
            Err(e) => {
                out.errors.push(denied(e));
                return out;
            }
        };
        if !is_candidate_header(&header[..header_len]) {
            return out;
        }
        if meta.len() > self.criteria.max_file_size_bytes {
            out.errors.push(ScanError::new(
                ScanErrorKind::FileTooLarge,
                path,
                format!("{} bytes exceeds the {} byte limit", meta.len(), self.criteria.max_file_size_bytes),
            ));
            return out;
        }
        let bytes = match fs::read(path) {
            Ok(b) => b,
            Err(e) => {
                out.errors.push(denied(e));
                return out;
            }
        };
        let kind = sniff_kind(&bytes);
        if kind == FileKind::Other {
            if sniff::is_zip_header(&bytes) {
                out.errors.push(ScanError::new(ScanErrorKind::CorruptArchive, path, "unreadable ZIP structure"));
            }
            return out;
        }
        let modified = meta.modified().map(system_time_utc).unwrap_or(DateTime::<Utc>::UNIX_EPOCH);
        let created = meta.created().ok().map(system_time_utc);
        let record = FileRecord::from_bytes(path.to_path_buf(), &bytes, kind, modified, created);

        if kind == FileKind::ZipArchive {
            if expand {
                let expansion = expand_archive(&record, &bytes, 0, &self.limits);
                out.nested.extend(expansion.records.into_iter().filter(|r| self.criteria.admits(r, last_scan_at)));
                out.errors.extend(expansion.errors);
            }
            out.outer = Some(record);
        } else if self.criteria.admits(&record, last_scan_at) {
            out.outer = Some(record);
        }
        out
    }
}

#[derive(Debug, Default)]
struct Inspected {
    outer: Option<FileRecord>,
    nested: Vec<FileRecord>,
    errors: Vec<ScanError>,
}

fn read_up_to(mut r: impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..])? {
            0 => break,
            k => n += k,
        }
    }
    Ok(n)
}

/// Discovers with default archive limits.
pub fn discover(roots: &[ScanRoot], filter: &ScanFilter, last_scan_at: Option<DateTime<Utc>>) -> Result<Discovery> {
    Discoverer::new(filter, ArchiveLimits::default())?.discover(roots, last_scan_at)
}

/// Re-reads the bytes of a record, following its container chain through
/// nested archives.
pub fn read_record_bytes(record: &FileRecord, limits: &ArchiveLimits) -> std::io::Result<Vec<u8>> {
    let mut bytes = fs::read(&record.path)?;
    for entry in &record.container_chain {
        let mut archive = zip::ZipArchive::new(Cursor::new(&bytes)).map_err(std::io::Error::other)?;
        let file = archive.by_name(entry).map_err(std::io::Error::other)?;
        let mut inner = Vec::new();
        file.take(limits.budget_bytes).read_to_end(&mut inner)?;
        bytes = inner;
    }
    Ok(bytes)
}
