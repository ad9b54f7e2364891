//! Spreadsheet discovery, inventory and risk assessment.
//!
//! The pipeline finds every spreadsheet under a set of scan roots (by
//! content, including renamed and zipped files), extracts structural facts
//! from OOXML workbooks, scores materiality and complexity against
//! configurable rule grids, maps the two bands to a risk level, raises
//! feeders of critical workbooks to critical, and keeps a diffable
//! inventory of every scan.

pub mod config;
pub mod discovery;
pub mod error;
pub mod formula;
pub mod graph;
pub mod inventory;
pub mod pattern;
pub mod pipeline;
pub mod report;
pub mod risk;
pub mod workbook;

pub use error::{Error, FieldError, Result, ScanError, ScanErrorKind};
