//! Formula tokenizer (en-US conventions: comma separators, `.` decimals).

use std::fmt;

use super::FormulaError;

/// Sheet and external-workbook qualifier written before `!`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Qualifier {
    /// The bracketed `[n]` external workbook index.
    pub workbook: Option<u32>,
    pub sheet: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefPart {
    Cell {
        col: u32,
        row: u32,
        col_abs: bool,
        row_abs: bool,
    },
    /// One end of a whole-column range such as `A:C`.
    Column {
        col: u32,
        abs: bool,
    },
    /// One end of a whole-row range such as `1:3`.
    Row {
        row: u32,
        abs: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefToken {
    pub qualifier: Option<Qualifier>,
    pub part: RefPart,
    /// The address as written, without its qualifier.
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Plus,
    Minus,
    Mul,
    Div,
    Pow,
    Concat,
    Percent,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Plus => "+",
            Op::Minus => "-",
            Op::Mul => "*",
            Op::Div => "/",
            Op::Pow => "^",
            Op::Concat => "&",
            Op::Percent => "%",
            Op::Eq => "=",
            Op::Ne => "<>",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Number(f64),
    Text(String),
    Bool(bool),
    Error(String),
    /// Function or defined name; also opaque structured references.
    Ident(String),
    Ref(RefToken),
    QualifiedName {
        qualifier: Qualifier,
        name: String,
    },
    Op(Op),
    Comma,
    Semicolon,
    Colon,
    LParen,
    RParen,
    LBrace,
    RBrace,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Number(n) => write!(f, "number {n}"),
            Token::Text(s) => write!(f, "string {s:?}"),
            Token::Bool(b) => write!(f, "boolean {}", if *b { "TRUE" } else { "FALSE" }),
            Token::Error(e) => write!(f, "error {e}"),
            Token::Ident(s) => write!(f, "identifier {s}"),
            Token::Ref(r) => write!(f, "reference {}", r.text),
            Token::QualifiedName { name, .. } => write!(f, "name {name}"),
            Token::Op(op) => write!(f, "operator {}", op.symbol()),
            Token::Comma => f.write_str("','"),
            Token::Semicolon => f.write_str("';'"),
            Token::Colon => f.write_str("':'"),
            Token::LParen => f.write_str("'('"),
            Token::RParen => f.write_str("')'"),
            Token::LBrace => f.write_str("'{'"),
            Token::RBrace => f.write_str("'}'"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub token: Token,
    /// Byte offset of the token's first character.
    pub offset: usize,
}

pub const ERROR_LITERALS: &[&str] =
    &["#NULL!", "#DIV/0!", "#VALUE!", "#REF!", "#NAME?", "#NUM!", "#N/A", "#GETTING_DATA", "#SPILL!", "#CALC!"];

const MAX_COL: u32 = 16_384;
const MAX_ROW: u32 = 1_048_576;

pub fn tokenize(text: &str) -> Result<Vec<Spanned>, FormulaError> {
    Lexer { src: text, pos: 0, out: Vec::new() }.run()
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    out: Vec<Spanned>,
}

enum Word {
    Cell(RefPart),
    Column(RefPart),
    Row(RefPart),
    Name,
}

impl<'a> Lexer<'a> {
    fn run(mut self) -> Result<Vec<Spanned>, FormulaError> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                c if c.is_whitespace() => {
                    self.bump();
                }
                '"' => {
                    let s = self.string()?;
                    self.push(Token::Text(s), start);
                }
                '#' => {
                    let e = self.error_literal()?;
                    self.push(Token::Error(e), start);
                }
                '\'' => self.quoted_qualifier()?,
                '[' => self.bracket()?,
                '(' => self.single(Token::LParen),
                ')' => self.single(Token::RParen),
                '{' => self.single(Token::LBrace),
                '}' => self.single(Token::RBrace),
                ',' => self.single(Token::Comma),
                ';' => self.single(Token::Semicolon),
                ':' => self.single(Token::Colon),
                '+' => self.single(Token::Op(Op::Plus)),
                '-' => self.single(Token::Op(Op::Minus)),
                '*' => self.single(Token::Op(Op::Mul)),
                '/' => self.single(Token::Op(Op::Div)),
                '^' => self.single(Token::Op(Op::Pow)),
                '&' => self.single(Token::Op(Op::Concat)),
                '%' => self.single(Token::Op(Op::Percent)),
                '=' => self.single(Token::Op(Op::Eq)),
                '<' => {
                    self.bump();
                    let op = match self.peek() {
                        Some('>') => Some(Op::Ne),
                        Some('=') => Some(Op::Le),
                        _ => None,
                    };
                    if let Some(op) = op {
                        self.bump();
                        self.push(Token::Op(op), start);
                    } else {
                        self.push(Token::Op(Op::Lt), start);
                    }
                }
                '>' => {
                    self.bump();
                    if self.peek() == Some('=') {
                        self.bump();
                        self.push(Token::Op(Op::Ge), start);
                    } else {
                        self.push(Token::Op(Op::Gt), start);
                    }
                }
                c if c.is_ascii_digit() || (c == '.' && self.peek_nth(1).is_some_and(|d| d.is_ascii_digit())) => self.number_or_row()?,
                c if is_word_start(c) => self.word()?,
                c => return Err(FormulaError::lex(start, format!("unexpected character {c:?}"))),
            }
        }
        Ok(self.out)
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn push(&mut self, token: Token, offset: usize) {
        self.out.push(Spanned { token, offset });
    }

    fn single(&mut self, token: Token) {
        let start = self.pos;
        self.bump();
        self.push(token, start);
    }

    fn string(&mut self) -> Result<String, FormulaError> {
        let start = self.pos;
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('"') if self.peek() == Some('"') => {
                    self.bump();
                    s.push('"');
                }
                Some('"') => return Ok(s),
                Some(c) => s.push(c),
                None => return Err(FormulaError::lex(start, "unterminated string literal")),
            }
        }
    }

    fn error_literal(&mut self) -> Result<String, FormulaError> {
        let start = self.pos;
        let rest = &self.src[start..];
        for lit in ERROR_LITERALS {
            if rest.len() >= lit.len() && rest.is_char_boundary(lit.len()) && rest[..lit.len()].eq_ignore_ascii_case(lit) {
                self.pos += lit.len();
                return Ok(lit.to_string());
            }
        }
        Err(FormulaError::lex(start, "unknown error literal"))
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&f) {
            self.bump();
        }
        &self.src[start..self.pos]
    }

    /// Everything up to the matching `]`, brackets included.
    fn balanced_brackets(&mut self) -> Result<&'a str, FormulaError> {
        let start = self.pos;
        let mut depth = 0usize;
        while let Some(c) = self.bump() {
            match c {
                '[' => depth += 1,
                ']' => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(&self.src[start..self.pos]);
                    }
                }
                _ => {}
            }
        }
        Err(FormulaError::lex(start, "unterminated '['"))
    }

    fn bracket(&mut self) -> Result<(), FormulaError> {
        let start = self.pos;
        let digits_len = self.src[start + 1..].chars().take_while(char::is_ascii_digit).count();
        let close = start + 1 + digits_len;
        if digits_len > 0 && self.src[close..].starts_with(']') {
            let index: u32 =
                self.src[start + 1..close].parse().map_err(|_| FormulaError::lex(start, "external workbook index out of range"))?;
            self.pos = close + 1;
            if self.peek() == Some('!') {
                self.bump();
                let q = Qualifier { workbook: Some(index), sheet: None };
                return self.after_bang(q, start);
            }
            if !self.peek().is_some_and(is_word_start) {
                return Err(FormulaError::lex(self.pos, "expected sheet name after external workbook index"));
            }
            let sheet = self.take_while(is_word_char).to_string();
            let sheet = self.maybe_3d(sheet);
            if self.peek() != Some('!') {
                return Err(FormulaError::lex(self.pos, "expected '!' after external sheet name"));
            }
            self.bump();
            return self.after_bang(Qualifier { workbook: Some(index), sheet: Some(sheet) }, start);
        }
        // Table-relative structured reference such as [@Amount]; opaque.
        let text = self.balanced_brackets()?.to_string();
        self.push(Token::Ident(text), start);
        Ok(())
    }

    fn quoted_qualifier(&mut self) -> Result<(), FormulaError> {
        let start = self.pos;
        self.bump();
        let mut content = String::new();
        loop {
            match self.bump() {
                Some('\'') if self.peek() == Some('\'') => {
                    self.bump();
                    content.push('\'');
                }
                Some('\'') => break,
                Some(c) => content.push(c),
                None => return Err(FormulaError::lex(start, "unterminated quoted sheet name")),
            }
        }
        if self.peek() != Some('!') {
            return Err(FormulaError::lex(self.pos, "expected '!' after quoted sheet name"));
        }
        self.bump();
        let mut q = Qualifier::default();
        let mut sheet = content.as_str();
        if let Some(rest) = sheet.strip_prefix('[') {
            if let Some((idx, tail)) = rest.split_once(']') {
                if let Ok(n) = idx.parse::<u32>() {
                    q.workbook = Some(n);
                    sheet = tail;
                }
            }
        }
        q.sheet = (!sheet.is_empty()).then(|| sheet.to_string());
        self.after_bang(q, start)
    }

    /// `Sheet1:Sheet3` style spans before `!`.
    fn maybe_3d(&mut self, first: String) -> String {
        if self.peek() != Some(':') {
            return first;
        }
        let save = self.pos;
        self.bump();
        if self.peek().is_some_and(is_word_start) {
            let second = self.take_while(is_word_char);
            if self.peek() == Some('!') {
                return format!("{first}:{second}");
            }
        }
        self.pos = save;
        first
    }

    /// Reads what follows `Qualifier!`: an address, a defined name or `#REF!`.
    fn after_bang(&mut self, qualifier: Qualifier, start: usize) -> Result<(), FormulaError> {
        match self.peek() {
            Some('#') => {
                let e = self.error_literal()?;
                self.push(Token::Error(e), start);
                Ok(())
            }
            Some(c) if is_word_start(c) || c.is_ascii_digit() => {
                let word = self.take_while(|c| is_word_char(c) || c.is_ascii_digit());
                match classify(word) {
                    Word::Cell(part) | Word::Column(part) | Word::Row(part)
                        if matches!(part, RefPart::Cell { .. }) || self.span_follows(&part) =>
                    {
                        self.push(Token::Ref(RefToken { qualifier: Some(qualifier), part, text: word.to_string() }), start);
                    }
                    _ if word.starts_with(|c: char| c.is_ascii_digit()) => {
                        return Err(FormulaError::lex(start, "malformed qualified reference"));
                    }
                    _ => self.push(Token::QualifiedName { qualifier, name: word.to_string() }, start),
                }
                Ok(())
            }
            _ => Err(FormulaError::lex(self.pos, "expected reference after '!'")),
        }
    }

    /// A column or row endpoint is only a reference when it forms a span
    /// with a neighbour of the same shape.
    fn span_follows(&self, part: &RefPart) -> bool {
        let rest = &self.src[self.pos..];
        let Some(after) = rest.strip_prefix(':') else {
            return false;
        };
        let word: String = after.chars().take_while(|&c| is_word_char(c) || c.is_ascii_digit()).collect();
        matches!((part, classify(&word)), (RefPart::Column { .. }, Word::Column(_)) | (RefPart::Row { .. }, Word::Row(_)))
    }

    fn span_precedes(&self, part: &RefPart) -> bool {
        let n = self.out.len();
        if n < 2 || self.out[n - 1].token != Token::Colon {
            return false;
        }
        matches!(
            (&self.out[n - 2].token, part),
            (Token::Ref(RefToken { part: RefPart::Column { .. }, .. }), RefPart::Column { .. })
                | (Token::Ref(RefToken { part: RefPart::Row { .. }, .. }), RefPart::Row { .. })
        )
    }

    fn number_or_row(&mut self) -> Result<(), FormulaError> {
        let start = self.pos;
        let digits = self.take_while(|c| c.is_ascii_digit());
        let is_plain_int = !digits.is_empty() && !matches!(self.peek(), Some('.' | 'e' | 'E'));
        if is_plain_int {
            if let Word::Row(part) = classify(digits) {
                if self.span_follows(&part) || self.span_precedes(&part) {
                    self.push(Token::Ref(RefToken { qualifier: None, part, text: digits.to_string() }), start);
                    return Ok(());
                }
            }
        }
        if self.peek() == Some('.') {
            self.bump();
            self.take_while(|c| c.is_ascii_digit());
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = self.pos;
            self.bump();
            if matches!(self.peek(), Some('+' | '-')) {
                self.bump();
            }
            if self.take_while(|c| c.is_ascii_digit()).is_empty() {
                self.pos = save;
                return Err(FormulaError::lex(save, "malformed exponent"));
            }
        }
        let text = &self.src[start..self.pos];
        let n: f64 = text.parse().map_err(|_| FormulaError::lex(start, "malformed number"))?;
        if !n.is_finite() {
            return Err(FormulaError::lex(start, "number out of range"));
        }
        self.push(Token::Number(n), start);
        Ok(())
    }

    fn word(&mut self) -> Result<(), FormulaError> {
        let start = self.pos;
        let word = self.take_while(|c| is_word_char(c) || c.is_ascii_digit());

        match self.peek() {
            Some('(') if !word.starts_with('$') => {
                self.push(Token::Ident(word.to_string()), start);
                return Ok(());
            }
            Some('!') => {
                self.bump();
                return self.after_bang(Qualifier { workbook: None, sheet: Some(word.to_string()) }, start);
            }
            Some(':') => {
                let save = self.pos;
                let sheet = self.maybe_3d(word.to_string());
                if self.pos != save {
                    self.bump();
                    return self.after_bang(Qualifier { workbook: None, sheet: Some(sheet) }, start);
                }
            }
            Some('[') if !word.starts_with('$') => {
                let brackets = self.balanced_brackets()?;
                self.push(Token::Ident(format!("{word}{brackets}")), start);
                return Ok(());
            }
            _ => {}
        }

        let token = match classify(word) {
            Word::Cell(part) => Token::Ref(RefToken { qualifier: None, part, text: word.to_string() }),
            Word::Column(part) | Word::Row(part) if self.span_follows(&part) || self.span_precedes(&part) => {
                Token::Ref(RefToken { qualifier: None, part, text: word.to_string() })
            }
            _ if word.starts_with('$') => return Err(FormulaError::lex(start, "malformed absolute reference")),
            _ if word.eq_ignore_ascii_case("TRUE") => Token::Bool(true),
            _ if word.eq_ignore_ascii_case("FALSE") => Token::Bool(false),
            _ => Token::Ident(word.to_string()),
        };
        self.push(token, start);
        Ok(())
    }
}

fn is_word_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '\\' || c == '$'
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '\\' | '$' | '?')
}

fn column_number(letters: &str) -> Option<u32> {
    if letters.is_empty() || letters.len() > 3 || !letters.chars().all(|c| c.is_ascii_alphabetic()) {
        return None;
    }
    let n = letters.bytes().fold(0u32, |acc, b| acc * 26 + u32::from(b.to_ascii_uppercase() - b'A' + 1));
    (n <= MAX_COL).then_some(n)
}

fn row_number(digits: &str) -> Option<u32> {
    if digits.is_empty() || digits.len() > 7 || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let n: u32 = digits.parse().ok()?;
    (1..=MAX_ROW).contains(&n).then_some(n)
}

fn classify(word: &str) -> Word {
    let (col_abs, rest) = match word.strip_prefix('$') {
        Some(r) => (true, r),
        None => (false, word),
    };
    let letters_len = rest.chars().take_while(char::is_ascii_alphabetic).count();
    let (letters, tail) = rest.split_at(letters_len);
    if letters.is_empty() {
        return match row_number(tail) {
            Some(row) => Word::Row(RefPart::Row { row, abs: col_abs }),
            None => Word::Name,
        };
    }
    let Some(col) = column_number(letters) else {
        return Word::Name;
    };
    if tail.is_empty() {
        return Word::Column(RefPart::Column { col, abs: col_abs });
    }
    let (row_abs, digits) = match tail.strip_prefix('$') {
        Some(d) => (true, d),
        None => (false, tail),
    };
    match row_number(digits) {
        Some(row) => Word::Cell(RefPart::Cell { col, row, col_abs, row_abs }),
        None => Word::Name,
    }
}
