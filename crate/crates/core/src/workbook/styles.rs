//! Number formats, fonts, fills and colour resolution.

use std::collections::HashMap;

use roxmltree::{Document, Node};

use super::package::is_local;

/// Resolved colour as six uppercase hex digits.
pub type Rgb = String;

const DEFAULT_INDEXED: [&str; 64] = [
    "000000", "FFFFFF", "FF0000", "00FF00", "0000FF", "FFFF00", "FF00FF", "00FFFF", //
    "000000", "FFFFFF", "FF0000", "00FF00", "0000FF", "FFFF00", "FF00FF", "00FFFF", //
    "800000", "008000", "000080", "808000", "800080", "008080", "C0C0C0", "808080", //
    "9999FF", "993366", "FFFFCC", "CCFFFF", "660066", "FF8080", "0066CC", "CCCCFF", //
    "000080", "FF00FF", "FFFF00", "00FFFF", "800080", "800000", "008080", "0000FF", //
    "00CCFF", "CCFFFF", "CCFFCC", "FFFF99", "99CCFF", "FF99CC", "CC99FF", "FFCC99", //
    "3366FF", "33CCCC", "99CC00", "FFCC00", "FF9900", "FF6600", "666699", "969696", //
    "003366", "339966", "003300", "333300", "993300", "993366", "333399", "333333",
];

/// Built-in number format codes (en-US).
pub fn builtin_format(id: u32) -> Option<&'static str> {
    Some(match id {
        0 => "General",
        1 => "0",
        2 => "0.00",
        3 => "#,##0",
        4 => "#,##0.00",
        5 => r##""$"#,##0_);\("$"#,##0\)"##,
        6 => r##""$"#,##0_);[Red]\("$"#,##0\)"##,
        7 => r##""$"#,##0.00_);\("$"#,##0.00\)"##,
        8 => r##""$"#,##0.00_);[Red]\("$"#,##0.00\)"##,
        9 => "0%",
        10 => "0.00%",
        11 => "0.00E+00",
        12 => "# ?/?",
        13 => "# ??/??",
        14 => "mm-dd-yy",
        15 => "d-mmm-yy",
        16 => "d-mmm",
        17 => "mmm-yy",
        18 => "h:mm AM/PM",
        19 => "h:mm:ss AM/PM",
        20 => "h:mm",
        21 => "h:mm:ss",
        22 => "m/d/yy h:mm",
        37 => "#,##0 ;(#,##0)",
        38 => "#,##0 ;[Red](#,##0)",
        39 => "#,##0.00;(#,##0.00)",
        40 => "#,##0.00;[Red](#,##0.00)",
        41 => r##"_(* #,##0_);_(* \(#,##0\);_(* "-"_);_(@_)"##,
        42 => r##"_("$"* #,##0_);_("$"* \(#,##0\);_("$"* "-"_);_(@_)"##,
        43 => r##"_(* #,##0.00_);_(* \(#,##0.00\);_(* "-"??_);_(@_)"##,
        44 => r##"_("$"* #,##0.00_);_("$"* \(#,##0.00\);_("$"* "-"??_);_(@_)"##,
        45 => "mm:ss",
        46 => "[h]:mm:ss",
        47 => "mmss.0",
        48 => "##0.0E+0",
        49 => "@",
        _ => return None,
    })
}

/// Theme colour scheme in `theme="n"` index order.
#[derive(Debug, Clone, Default)]
pub struct Theme {
    colors: Vec<Option<Rgb>>,
}

impl Theme {
    pub fn parse(xml: &str) -> Result<Self, String> {
        let doc = Document::parse(xml).map_err(|e| format!("theme: {e}"))?;
        let Some(scheme) = doc.descendants().find(|n| is_local(n, "clrScheme")) else {
            return Ok(Self::default());
        };
        let slot = |name: &str| -> Option<Rgb> {
            let el = scheme.children().find(|n| is_local(n, name))?;
            let c = el.children().find(|n| n.is_element())?;
            let hex = match c.tag_name().name() {
                "srgbClr" => c.attribute("val"),
                "sysClr" => c.attribute("lastClr"),
                _ => None,
            }?;
            normalize_hex(hex)
        };
        // Index order swaps the light/dark pairs relative to document order.
        let order = ["lt1", "dk1", "lt2", "dk2", "accent1", "accent2", "accent3", "accent4", "accent5", "accent6", "hlink", "folHlink"];
        Ok(Self { colors: order.iter().map(|n| slot(n)).collect() })
    }

    fn get(&self, idx: u32) -> Option<&Rgb> {
        self.colors.get(idx as usize).and_then(Option::as_ref)
    }
}

fn normalize_hex(hex: &str) -> Option<Rgb> {
    let hex = hex.trim();
    let six = match hex.len() {
        8 => &hex[2..],
        6 => hex,
        _ => return None,
    };
    six.chars().all(|c| c.is_ascii_hexdigit()).then(|| six.to_ascii_uppercase())
}

/// Applies a tint in [-1, 1] through HLS lightness.
pub fn apply_tint(rgb: &str, tint: f64) -> Rgb {
    if tint == 0.0 {
        return rgb.to_string();
    }
    let byte = |i: usize| f64::from(u8::from_str_radix(&rgb[i..i + 2], 16).unwrap_or(0)) / 255.0;
    let (h, l, s) = rgb_to_hls(byte(0), byte(2), byte(4));
    let l = if tint < 0.0 { l * (1.0 + tint) } else { l * (1.0 - tint) + tint };
    let (r, g, b) = hls_to_rgb(h, l.clamp(0.0, 1.0), s);
    let to = |v: f64| (v * 255.0).round().clamp(0.0, 255.0) as u8;
    format!("{:02X}{:02X}{:02X}", to(r), to(g), to(b))
}

fn rgb_to_hls(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let l = (max + min) / 2.0;
    if max == min {
        return (0.0, l, 0.0);
    }
    let d = max - min;
    let s = if l <= 0.5 { d / (max + min) } else { d / (2.0 - max - min) };
    let h = if max == r {
        (g - b) / d + if g < b { 6.0 } else { 0.0 }
    } else if max == g {
        (b - r) / d + 2.0
    } else {
        (r - g) / d + 4.0
    };
    (h / 6.0, l, s)
}

fn hls_to_rgb(h: f64, l: f64, s: f64) -> (f64, f64, f64) {
    if s == 0.0 {
        return (l, l, l);
    }
    let q = if l < 0.5 { l * (1.0 + s) } else { l + s - l * s };
    let p = 2.0 * l - q;
    let channel = |mut t: f64| {
        if t < 0.0 {
            t += 1.0;
        }
        if t > 1.0 {
            t -= 1.0;
        }
        if t < 1.0 / 6.0 {
            p + (q - p) * 6.0 * t
        } else if t < 0.5 {
            q
        } else if t < 2.0 / 3.0 {
            p + (q - p) * (2.0 / 3.0 - t) * 6.0
        } else {
            p
        }
    };
    (channel(h + 1.0 / 3.0), channel(h), channel(h - 1.0 / 3.0))
}

#[derive(Debug, Clone, Copy, Default)]
struct Xf {
    num_fmt: u32,
    font: usize,
    fill: usize,
}

/// Resolved formatting for one `s` index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellFormat {
    pub number_format: String,
    pub font_color: Option<Rgb>,
    pub fill_color: Option<Rgb>,
}

#[derive(Debug, Clone, Default)]
pub struct Styles {
    xfs: Vec<Xf>,
    num_fmts: HashMap<u32, String>,
    fonts: Vec<Option<Rgb>>,
    fills: Vec<Option<Rgb>>,
}

const WHITE: &str = "FFFFFF";

impl Styles {
    pub fn parse(xml: &str, theme: &Theme) -> Result<Self, String> {
        let doc = Document::parse(xml).map_err(|e| format!("styles: {e}"))?;
        let root = doc.root_element();
        let child = |name: &str| root.children().find(|n| is_local(n, name));

        let palette: Vec<Rgb> = match child("colors").and_then(|c| c.children().find(|n| is_local(n, "indexedColors"))) {
            Some(ic) => ic
                .children()
                .filter(|n| is_local(n, "rgbColor"))
                .map(|n| n.attribute("rgb").and_then(normalize_hex).unwrap_or_default())
                .collect(),
            None => DEFAULT_INDEXED.iter().map(|s| s.to_string()).collect(),
        };
        let resolve = |n: Node| resolve_color(n, theme, &palette);

        let num_fmts = child("numFmts")
            .map(|nf| {
                nf.children()
                    .filter(|n| is_local(n, "numFmt"))
                    .filter_map(|n| Some((n.attribute("numFmtId")?.parse().ok()?, n.attribute("formatCode")?.to_string())))
                    .collect()
            })
            .unwrap_or_default();

        let fonts = child("fonts")
            .map(|f| {
                f.children()
                    .filter(|n| is_local(n, "font"))
                    .map(|font| font.children().find(|n| is_local(n, "color")).and_then(resolve))
                    .collect()
            })
            .unwrap_or_default();

        let fills = child("fills")
            .map(|f| {
                f.children()
                    .filter(|n| is_local(n, "fill"))
                    .map(|fill| {
                        let Some(pf) = fill.children().find(|n| is_local(n, "patternFill")) else {
                            // Gradient fills have no single colour.
                            return None;
                        };
                        match pf.attribute("patternType").unwrap_or("none") {
                            "none" => Some(WHITE.to_string()),
                            "solid" => pf.children().find(|n| is_local(n, "fgColor")).and_then(resolve),
                            _ => None,
                        }
                    })
                    .collect()
            })
            .unwrap_or_default();

        let xfs = child("cellXfs")
            .map(|x| {
                x.children()
                    .filter(|n| is_local(n, "xf"))
                    .map(|xf| {
                        let attr = |a: &str| xf.attribute(a).and_then(|v| v.parse().ok());
                        Xf {
                            num_fmt: attr("numFmtId").unwrap_or(0),
                            font: attr("fontId").unwrap_or(0) as usize,
                            fill: attr("fillId").unwrap_or(0) as usize,
                        }
                    })
                    .collect()
            })
            .unwrap_or_default();

        Ok(Self { xfs, num_fmts, fonts, fills })
    }

    pub fn format(&self, style: usize) -> CellFormat {
        let xf = self.xfs.get(style).or_else(|| self.xfs.first()).copied().unwrap_or_default();
        let number_format = self
            .num_fmts
            .get(&xf.num_fmt)
            .cloned()
            .or_else(|| builtin_format(xf.num_fmt).map(str::to_string))
            .unwrap_or_else(|| "General".to_string());
        // No styles part at all: an unfilled white sheet, font colour unknown.
        let fill_color = if self.fills.is_empty() { Some(WHITE.to_string()) } else { self.fills.get(xf.fill).cloned().flatten() };
        CellFormat { number_format, font_color: self.fonts.get(xf.font).cloned().flatten(), fill_color }
    }
}

fn resolve_color(node: Node, theme: &Theme, palette: &[Rgb]) -> Option<Rgb> {
    if node.attribute("auto").is_some_and(|v| v == "1" || v == "true") {
        return None;
    }
    let tint: f64 = node.attribute("tint").and_then(|t| t.parse().ok()).unwrap_or(0.0);
    let base = if let Some(rgb) = node.attribute("rgb") {
        normalize_hex(rgb)?
    } else if let Some(t) = node.attribute("theme") {
        theme.get(t.parse().ok()?)?.clone()
    } else {
        let i: usize = node.attribute("indexed")?.parse().ok()?;
        palette.get(i).filter(|s| !s.is_empty())?.clone()
    };
    Some(apply_tint(&base, tint))
}
