use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// Top-level failures. Record-level problems never surface here; they are
/// collected as [`ScanError`] entries and carried in the scan output.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("no scan root could be read")]
    NoRootsScanned,

    #[error("invalid configuration: {}", join_fields(.0))]
    ConfigInvalid(Vec<FieldError>),

    #[error("risk matrix is not monotone: {0}")]
    MatrixNotMonotone(String),

    #[error("cannot write catalog {}: {source}", .path.display())]
    CatalogWriteFailed {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("catalog file {} is corrupt at line {line}: {message}", .path.display())]
    CatalogCorrupt { path: PathBuf, line: usize, message: String },

    #[error("cannot write report {}: {message}", .path.display())]
    ReportWriteFailed { path: PathBuf, message: String },

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NoRootsScanned => "no-roots-scanned",
            Error::ConfigInvalid(_) => "config-invalid",
            Error::MatrixNotMonotone(_) => "matrix-not-monotone",
            Error::CatalogWriteFailed { .. } => "catalog-write-failed",
            Error::CatalogCorrupt { .. } => "catalog-corrupt",
            Error::ReportWriteFailed { .. } => "report-write-failed",
            Error::Io { .. } => "io-error",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigInvalid(vec![FieldError::new(path, message)])
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One validation failure, addressed by a dotted field path such as
/// `materiality_rules[2].points`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn join_fields(errs: &[FieldError]) -> String {
    errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanErrorKind {
    RootUnreadable,
    AccessDenied,
    WalkFailed,
    FileTooLarge,
    CorruptArchive,
    ArchiveBudgetExceeded,
    ArchiveDepthExceeded,
    CorruptWorkbook,
    UnsupportedFormat,
}

impl ScanErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanErrorKind::RootUnreadable => "root-unreadable",
            ScanErrorKind::AccessDenied => "access-denied",
            ScanErrorKind::WalkFailed => "walk-failed",
            ScanErrorKind::FileTooLarge => "file-too-large",
            ScanErrorKind::CorruptArchive => "corrupt-archive",
            ScanErrorKind::ArchiveBudgetExceeded => "archive-budget-exceeded",
            ScanErrorKind::ArchiveDepthExceeded => "archive-depth-exceeded",
            ScanErrorKind::CorruptWorkbook => "corrupt-workbook",
            ScanErrorKind::UnsupportedFormat => "unsupported-format",
        }
    }
}

impl fmt::Display for ScanErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A record- or root-level problem encountered during a scan. The scan
/// carries on past these.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScanError {
    pub kind: ScanErrorKind,
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub container_chain: Vec<String>,
    pub message: String,
}

impl ScanError {
    pub fn new(kind: ScanErrorKind, path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self { kind, path: path.into(), container_chain: Vec::new(), message: message.into() }
    }

    pub fn nested(mut self, chain: &[String]) -> Self {
        self.container_chain = chain.to_vec();
        self
    }
}

impl fmt::Display for ScanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.path.display())?;
        for entry in &self.container_chain {
            write!(f, "!{entry}")?;
        }
        write!(f, ": {}", self.message)
    }
}
