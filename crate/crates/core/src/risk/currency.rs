//! Currency detection over raw number-format codes.

const SYMBOLS: &[char] =
    &['$', '€', '£', '¥', '¢', '₹', '₩', '₽', '₣', '₤', '₱', '₺', '₪', '₫', '₴', '₦', '฿', '₡', '₲', '₵', '₸', '₼', '₾'];

/// True when the code displays a currency symbol or is an accounting layout.
///
/// Bracketed sections are inspected separately: `[$€-407]` and `[$USD]`
/// carry a currency, while `[$-409]`, `[Red]` and `[h]` do not.
pub fn is_currency_format(code: &str) -> bool {
    let mut chars = code.chars().peekable();
    let mut plain = String::new();
    while let Some(c) = chars.next() {
        match c {
            '[' => {
                let mut inner = String::new();
                for d in chars.by_ref() {
                    if d == ']' {
                        break;
                    }
                    inner.push(d);
                }
                if let Some(rest) = inner.strip_prefix('$') {
                    let symbol = rest.split('-').next().unwrap_or_default();
                    if !symbol.trim().is_empty() {
                        return true;
                    }
                }
            }
            '\\' => {
                if let Some(d) = chars.next() {
                    plain.push(d);
                }
            }
            c => plain.push(c),
        }
    }
    if plain.chars().any(|c| SYMBOLS.contains(&c)) {
        return true;
    }
    // Accounting layouts pad with `_(`/`_-` and fill with `* `.
    (plain.contains("_(") || plain.contains("_-")) && plain.contains("* ")
}
