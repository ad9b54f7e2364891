//! Part access and relationship resolution inside an OPC package.

use std::io::{Cursor, Read};

use zip::ZipArchive;

pub(crate) struct Package<'a> {
    zip: ZipArchive<Cursor<&'a [u8]>>,
    names: Vec<String>,
}

#[derive(Debug, Clone)]
pub(crate) struct Relationship {
    pub id: String,
    pub rel_type: String,
    /// Package part name without a leading `/`, or the raw target when external.
    pub target: String,
    pub external: bool,
}

impl Relationship {
    pub fn is(&self, suffix: &str) -> bool {
        self.rel_type.rsplit('/').next().is_some_and(|t| t.eq_ignore_ascii_case(suffix))
    }
}

impl<'a> Package<'a> {
    pub fn open(bytes: &'a [u8]) -> Result<Self, String> {
        let zip = ZipArchive::new(Cursor::new(bytes)).map_err(|e| e.to_string())?;
        let names = zip.file_names().filter_map(|n| n.ok().map(|n| n.into_owned())).collect();
        Ok(Self { zip, names })
    }

    pub fn zip_mut(&mut self) -> &mut ZipArchive<Cursor<&'a [u8]>> {
        &mut self.zip
    }

    /// Part names compare case-insensitively.
    fn lookup(&self, part: &str) -> Option<String> {
        let part = part.trim_start_matches('/');
        self.names.iter().find(|n| n.eq_ignore_ascii_case(part)).cloned()
    }

    pub fn read_bytes(&mut self, part: &str) -> Result<Option<Vec<u8>>, String> {
        let Some(name) = self.lookup(part) else {
            return Ok(None);
        };
        let mut entry = self.zip.by_name(&name).map_err(|e| format!("{name}: {e}"))?;
        let mut buf = Vec::with_capacity(entry.size().min(1 << 26) as usize);
        entry.read_to_end(&mut buf).map_err(|e| format!("{name}: {e}"))?;
        Ok(Some(buf))
    }

    pub fn read_text(&mut self, part: &str) -> Result<Option<String>, String> {
        let Some(bytes) = self.read_bytes(part)? else {
            return Ok(None);
        };
        let text = match bytes.strip_prefix(&[0xEF, 0xBB, 0xBF]) {
            Some(rest) => String::from_utf8(rest.to_vec()),
            None => String::from_utf8(bytes),
        };
        text.map(Some).map_err(|_| format!("{part}: not valid UTF-8"))
    }

    /// Relationships declared by `source` (`""` for the package root).
    pub fn relationships(&mut self, source: &str) -> Result<Vec<Relationship>, String> {
        let (dir, file) = split_part(source);
        let rels_part = if dir.is_empty() { format!("_rels/{file}.rels") } else { format!("{dir}/_rels/{file}.rels") };
        let Some(xml) = self.read_text(&rels_part)? else {
            return Ok(Vec::new());
        };
        let doc = roxmltree::Document::parse(&xml).map_err(|e| format!("{rels_part}: {e}"))?;
        let mut out = Vec::new();
        for node in doc.root_element().children().filter(|n| n.has_tag_name("Relationship") || is_local(n, "Relationship")) {
            let external = node.attribute("TargetMode").is_some_and(|m| m.eq_ignore_ascii_case("External"));
            let raw = node.attribute("Target").unwrap_or_default();
            let target = if external { raw.to_string() } else { resolve_target(dir, raw) };
            out.push(Relationship {
                id: node.attribute("Id").unwrap_or_default().to_string(),
                rel_type: node.attribute("Type").unwrap_or_default().to_string(),
                target,
                external,
            });
        }
        Ok(out)
    }
}

pub(crate) fn is_local(node: &roxmltree::Node, name: &str) -> bool {
    node.is_element() && node.tag_name().name() == name
}

fn split_part(part: &str) -> (&str, &str) {
    let part = part.trim_start_matches('/');
    match part.rsplit_once('/') {
        Some((d, f)) => (d, f),
        None => ("", part),
    }
}

/// Resolves a relative target against the source part's directory.
pub(crate) fn resolve_target(dir: &str, target: &str) -> String {
    let target = target.split('#').next().unwrap_or_default();
    let mut segments: Vec<&str> = if target.starts_with('/') { Vec::new() } else { dir.split('/').filter(|s| !s.is_empty()).collect() };
    for seg in target.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                segments.pop();
            }
            s => segments.push(s),
        }
    }
    segments.join("/")
}
