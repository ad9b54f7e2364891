//! Pipeline configuration loaded from TOML.
//!
//! Every section except `roots` is optional. Relative paths resolve against
//! the directory holding the configuration file.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discovery::{ArchiveLimits, RootKind, ScanFilter, ScanRoot};
use crate::error::{Error, FieldError, Result};
use crate::risk::{BandScale, ComplexityRule, MaterialityRule, MatrixTable, RiskMatrix, RiskModel};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Csv,
    Structured,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Some(Self::Csv),
            "structured" | "json" | "jsonl" => Some(Self::Structured),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub roots: Vec<ScanRoot>,
    pub filter: ScanFilter,
    pub archive: ArchiveLimits,
    pub model: RiskModel,
    pub catalog_dir: PathBuf,
    pub output_dir: PathBuf,
    pub report_formats: BTreeSet<ReportFormat>,
}

impl PipelineConfig {
    /// Defaults everywhere; the catalog lives under `output_dir/catalog`.
    pub fn new(roots: Vec<ScanRoot>, output_dir: impl Into<PathBuf>) -> Self {
        let output_dir = output_dir.into();
        Self {
            roots,
            filter: ScanFilter::default(),
            archive: ArchiveLimits::default(),
            model: RiskModel::default(),
            catalog_dir: output_dir.join("catalog"),
            output_dir,
            report_formats: [ReportFormat::Csv, ReportFormat::Structured].into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.roots.is_empty() {
            errs.push(FieldError::new("roots", "at least one scan root is required"));
        }
        for (i, r) in self.roots.iter().enumerate() {
            if !r.path.is_absolute() {
                errs.push(FieldError::new(format!("roots[{i}].path"), "must be an absolute path"));
            }
        }
        errs.extend(self.filter.validate("filter"));
        if self.archive.max_depth == 0 {
            errs.push(FieldError::new("archive.max_depth", "must be at least 1"));
        }
        if self.report_formats.is_empty() {
            errs.push(FieldError::new("report_formats", "at least one format is required"));
        }
        for (field, dir) in [("output_dir", &self.output_dir), ("catalog_dir", &self.catalog_dir)] {
            if let Some(msg) = unwritable(dir) {
                errs.push(FieldError::new(field, msg));
            }
        }
        match self.model.validate() {
            Err(Error::ConfigInvalid(more)) => errs.extend(more),
            Err(other) if errs.is_empty() => return Err(other),
            _ => {}
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(errs))
        }
    }
}

/// Checks a directory that may not exist yet without creating anything.
fn unwritable(dir: &Path) -> Option<String> {
    let mut probe = dir;
    loop {
        match fs::metadata(probe) {
            Ok(m) if !m.is_dir() => return Some(format!("{} is not a directory", probe.display())),
            Ok(m) if m.permissions().readonly() => return Some(format!("{} is read-only", probe.display())),
            Ok(_) => return None,
            Err(_) => match probe.parent() {
                Some(p) if !p.as_os_str().is_empty() => probe = p,
                _ => return None,
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Option<u32>,
    #[serde(default)]
    roots: Vec<RawRoot>,
    #[serde(default)]
    filter: ScanFilter,
    #[serde(default)]
    archive: ArchiveLimits,
    materiality_rules: Option<Vec<MaterialityRule>>,
    complexity_rules: Option<Vec<ComplexityRule>>,
    #[serde(default)]
    scales: RawScales,
    matrix: Option<MatrixTable>,
    catalog_dir: Option<PathBuf>,
    output_dir: Option<PathBuf>,
    report_formats: Option<Vec<ReportFormat>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoot {
    path: PathBuf,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    kind: RootKind,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScales {
    materiality: Option<BandScale>,
    complexity: Option<BandScale>,
}

/// Parses configuration text; relative paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<PipelineConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let field = e
            .span()
            .map(|s| {
                let line = text[..s.start].matches('\n').count() + 1;
                format!("line {line}")
            })
            .unwrap_or_else(|| "config".into());
        Error::invalid(field, msg)
    })?;

    let mut errs = Vec::new();
    if let Some(v) = raw.schema_version {
        if v != CONFIG_SCHEMA_VERSION {
            errs.push(FieldError::new("schema_version", format!("unsupported version {v}; expected {CONFIG_SCHEMA_VERSION}")));
        }
    }
    let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
    let roots: Vec<ScanRoot> = raw
        .roots
        .into_iter()
        .map(|r| {
            let path = resolve(r.path);
            let mut root = ScanRoot::new(path);
            if let Some(label) = r.label {
                root.label = label;
            }
            root.kind = r.kind;
            root
        })
        .collect();

    let materiality_scale = raw.scales.materiality.unwrap_or_else(BandScale::materiality);
    let complexity_scale = raw.scales.complexity.unwrap_or_else(BandScale::complexity);
    let matrix = match &raw.matrix {
        None => RiskMatrix::default(),
        Some(table) => RiskMatrix::from_table(table, &materiality_scale, &complexity_scale).unwrap_or_else(|e| {
            errs.extend(e);
            RiskMatrix::default()
        }),
    };
    let model = RiskModel {
        materiality_rules: raw.materiality_rules.unwrap_or_else(crate::risk::default_materiality_rules),
        complexity_rules: raw.complexity_rules.unwrap_or_else(crate::risk::default_complexity_rules),
        materiality_scale,
        complexity_scale,
        matrix,
    };
    let output_dir = resolve(raw.output_dir.unwrap_or_else(|| PathBuf::from("sheetrisk-out")));
    let catalog_dir = raw.catalog_dir.map(resolve).unwrap_or_else(|| output_dir.join("catalog"));
    let mut config = PipelineConfig::new(roots, output_dir);
    config.catalog_dir = catalog_dir;
    config.filter = raw.filter;
    config.archive = raw.archive;
    config.model = model;
    if let Some(formats) = raw.report_formats {
        config.report_formats = formats.into_iter().collect();
    }

    match config.validate() {
        Ok(()) if errs.is_empty() => Ok(config),
        Ok(()) => Err(Error::ConfigInvalid(errs)),
        Err(Error::ConfigInvalid(more)) => {
            errs.extend(more);
            Err(Error::ConfigInvalid(errs))
        }
        Err(other) if errs.is_empty() => Err(other),
        Err(_) => Err(Error::ConfigInvalid(errs)),
    }
}

pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let base = fs::canonicalize(base).unwrap_or_else(|_| base.to_path_buf());
    parse_config(&text, &base)
}
