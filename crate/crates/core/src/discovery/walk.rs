use std::path::PathBuf;

use walkdir::WalkDir;

use super::ScanRoot;
use crate::error::{ScanError, ScanErrorKind};

/// Deterministic depth-first listing of regular files under a root,
/// lexicographic within each directory. Unreadable subdirectories become
/// error items and the walk moves on.
pub struct Walk {
    inner: Option<walkdir::IntoIter>,
    pending: Option<ScanError>,
}

impl Walk {
    pub fn new(root: &ScanRoot, follow_symlinks: bool) -> Self {
        match std::fs::metadata(&root.path) {
            Ok(m) if m.is_dir() => {
                Self { inner: Some(WalkDir::new(&root.path).follow_links(follow_symlinks).sort_by_file_name().into_iter()), pending: None }
            }
            Ok(_) => Self::failed(root, "not a directory".into()),
            Err(e) => Self::failed(root, e.to_string()),
        }
    }

    fn failed(root: &ScanRoot, msg: String) -> Self {
        Self { inner: None, pending: Some(ScanError::new(ScanErrorKind::RootUnreadable, &root.path, msg)) }
    }
}

impl Iterator for Walk {
    type Item = Result<PathBuf, ScanError>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(e) = self.pending.take() {
            return Some(Err(e));
        }
        let inner = self.inner.as_mut()?;
        loop {
            match inner.next()? {
                Ok(entry) if entry.file_type().is_file() => return Some(Ok(entry.into_path())),
                Ok(_) => continue,
                Err(e) => {
                    let path = e.path().map(|p| p.to_path_buf()).unwrap_or_default();
                    let kind = match e.io_error().map(|io| io.kind()) {
                        Some(std::io::ErrorKind::PermissionDenied) => ScanErrorKind::AccessDenied,
                        _ => ScanErrorKind::WalkFailed,
                    };
                    return Some(Err(ScanError::new(kind, path, e.to_string())));
                }
            }
        }
    }
}
