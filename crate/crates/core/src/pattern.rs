//! Case-insensitive text patterns shared by discovery filters and rules.

use glob::{MatchOptions, Pattern};

const OPTS: MatchOptions = MatchOptions { case_sensitive: false, require_literal_separator: false, require_literal_leading_dot: false };

/// A pattern is a glob when it contains `*`, `?` or `[`, otherwise a plain
/// substring. Both forms ignore case.
#[derive(Debug, Clone)]
pub enum TextPattern {
    Glob(Pattern),
    Substring(String),
}

impl TextPattern {
    pub fn new(raw: &str) -> Result<Self, String> {
        if raw.contains(['*', '?', '[']) {
            Pattern::new(raw).map(TextPattern::Glob).map_err(|e| e.to_string())
        } else {
            Ok(TextPattern::Substring(raw.to_lowercase()))
        }
    }

    pub fn matches(&self, text: &str) -> bool {
        match self {
            TextPattern::Glob(p) => p.matches_with(text, OPTS),
            TextPattern::Substring(s) => text.to_lowercase().contains(s.as_str()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glob_and_substring_ignore_case() {
        let g = TextPattern::new("*revenue*").unwrap();
        assert!(g.matches("Revenue Recognition.xls"));
        assert!(!g.matches("earnings.xlsx"));
        let s = TextPattern::new("income").unwrap();
        assert!(s.matches("Net INCOME"));
        assert!(!s.matches("Inc."));
    }

    #[test]
    fn glob_must_match_whole_text() {
        let g = TextPattern::new("2Q_????_earnings.xls").unwrap();
        assert!(g.matches("2q_2008_EARNINGS.xls"));
        assert!(!g.matches("old 2Q_2008_earnings.xls"));
    }

    #[test]
    fn bad_glob_is_rejected() {
        assert!(TextPattern::new("[abc").is_err());
    }
}
