//! Recursive-descent parser.
//!
//! Precedence, loosest first: comparison, `&`, `+ -`, `* /`, `^`, prefix
//! sign, postfix `%`, `:` range. Binary operators are left-associative.

use super::ast::{BinaryOp, CellRef, Expr, Literal, NameRef, UnaryOp};
use super::lexer::{tokenize, Op, Spanned, Token};
use super::FormulaError;

/// Nesting beyond this is rejected rather than risking the stack.
pub const MAX_NESTING: usize = 256;

/// Parses formula text without its leading `=`.
pub fn parse(text: &str) -> Result<Expr, FormulaError> {
    let tokens = tokenize(text)?;
    parse_tokens(&tokens, text.len())
}

pub fn parse_tokens(tokens: &[Spanned], end_offset: usize) -> Result<Expr, FormulaError> {
    if tokens.is_empty() {
        return Err(FormulaError::parse(0, "empty formula"));
    }
    let mut p = Parser { tokens, pos: 0, depth: 0, end_offset };
    let expr = p.expr()?;
    if let Some(t) = p.peek_spanned() {
        return Err(FormulaError::parse(t.offset, format!("unexpected {}", t.token)));
    }
    Ok(expr)
}

struct Parser<'t> {
    tokens: &'t [Spanned],
    pos: usize,
    depth: usize,
    end_offset: usize,
}

impl<'t> Parser<'t> {
    fn peek_spanned(&self) -> Option<&'t Spanned> {
        self.tokens.get(self.pos)
    }

    fn peek(&self) -> Option<&'t Token> {
        self.peek_spanned().map(|s| &s.token)
    }

    fn offset(&self) -> usize {
        self.peek_spanned().map_or(self.end_offset, |s| s.offset)
    }

    fn advance(&mut self) -> Option<&'t Token> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: &Token, what: &str) -> Result<(), FormulaError> {
        match self.peek() {
            Some(t) if t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(FormulaError::parse(self.offset(), format!("expected {what}, found {t}"))),
            None => Err(FormulaError::parse(self.end_offset, format!("expected {what}, found end of formula"))),
        }
    }

    fn enter(&mut self) -> Result<(), FormulaError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(FormulaError::parse(self.offset(), "formula nesting too deep"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, FormulaError> {
        self.enter()?;
        let e = self.comparison();
        self.depth -= 1;
        e
    }

    fn binary_level(
        &mut self,
        next: fn(&mut Self) -> Result<Expr, FormulaError>,
        op_of: fn(&Token) -> Option<BinaryOp>,
    ) -> Result<Expr, FormulaError> {
        let mut left = next(self)?;
        while let Some(op) = self.peek().and_then(op_of) {
            self.pos += 1;
            let right = next(self)?;
            left = Expr::Binary { op, left: Box::new(left), right: Box::new(right) };
        }
        Ok(left)
    }

    fn comparison(&mut self) -> Result<Expr, FormulaError> {
        self.binary_level(Self::concat, |t| match t {
            Token::Op(Op::Eq) => Some(BinaryOp::Eq),
            Token::Op(Op::Ne) => Some(BinaryOp::Ne),
            Token::Op(Op::Lt) => Some(BinaryOp::Lt),
            Token::Op(Op::Le) => Some(BinaryOp::Le),
            Token::Op(Op::Gt) => Some(BinaryOp::Gt),
            Token::Op(Op::Ge) => Some(BinaryOp::Ge),
            _ => None,
        })
    }

    fn concat(&mut self) -> Result<Expr, FormulaError> {
        self.binary_level(Self::additive, |t| matches!(t, Token::Op(Op::Concat)).then_some(BinaryOp::Concat))
    }

    fn additive(&mut self) -> Result<Expr, FormulaError> {
        self.binary_level(Self::multiplicative, |t| match t {
            Token::Op(Op::Plus) => Some(BinaryOp::Add),
            Token::Op(Op::Minus) => Some(BinaryOp::Sub),
            _ => None,
        })
    }

    fn multiplicative(&mut self) -> Result<Expr, FormulaError> {
        self.binary_level(Self::power, |t| match t {
            Token::Op(Op::Mul) => Some(BinaryOp::Mul),
            Token::Op(Op::Div) => Some(BinaryOp::Div),
            _ => None,
        })
    }

    fn power(&mut self) -> Result<Expr, FormulaError> {
        self.binary_level(Self::unary, |t| matches!(t, Token::Op(Op::Pow)).then_some(BinaryOp::Pow))
    }

    fn unary(&mut self) -> Result<Expr, FormulaError> {
        let op = match self.peek() {
            Some(Token::Op(Op::Minus)) => UnaryOp::Minus,
            Some(Token::Op(Op::Plus)) => UnaryOp::Plus,
            _ => return self.postfix(),
        };
        self.pos += 1;
        self.enter()?;
        let operand = self.unary();
        self.depth -= 1;
        Ok(Expr::Unary { op, operand: Box::new(operand?) })
    }

    fn postfix(&mut self) -> Result<Expr, FormulaError> {
        let mut e = self.range()?;
        while let Some(Token::Op(Op::Percent)) = self.peek() {
            self.pos += 1;
            e = Expr::Unary { op: UnaryOp::Percent, operand: Box::new(e) };
        }
        Ok(e)
    }

    fn range(&mut self) -> Result<Expr, FormulaError> {
        let mut e = self.primary()?;
        while let Some(Token::Colon) = self.peek() {
            self.pos += 1;
            let end = self.primary()?;
            e = Expr::Range { start: Box::new(e), end: Box::new(end) };
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, FormulaError> {
        let offset = self.offset();
        let Some(token) = self.advance() else {
            return Err(FormulaError::parse(self.end_offset, "unexpected end of formula"));
        };
        Ok(match token {
            Token::Number(n) => Expr::Literal(Literal::Number(*n)),
            Token::Text(s) => Expr::Literal(Literal::Text(s.clone())),
            Token::Bool(b) => Expr::Literal(Literal::Bool(*b)),
            Token::Error(e) => Expr::Literal(Literal::Error(e.clone())),
            Token::Ref(r) => Expr::CellRef(CellRef { qualifier: r.qualifier.clone(), part: r.part, text: r.text.clone() }),
            Token::Ident(name) | Token::QualifiedName { name, .. } if self.peek() == Some(&Token::LParen) => {
                self.pos += 1;
                let args = self.nested(Self::arguments)?;
                Expr::Call { name: name.clone(), args }
            }
            Token::Ident(name) => Expr::NameRef(NameRef { qualifier: None, name: name.clone() }),
            Token::QualifiedName { qualifier, name } => Expr::NameRef(NameRef { qualifier: Some(qualifier.clone()), name: name.clone() }),
            Token::LParen => {
                let inner = self.nested(Self::parenthesized)?;
                Expr::Paren(Box::new(inner))
            }
            Token::LBrace => self.nested(Self::array)?,
            other => return Err(FormulaError::parse(offset, format!("unexpected {other}"))),
        })
    }

    fn nested<T>(&mut self, f: fn(&mut Self) -> Result<T, FormulaError>) -> Result<T, FormulaError> {
        self.enter()?;
        let r = f(self);
        self.depth -= 1;
        r
    }

    /// After `(` of a call; consumes the closing `)`.
    fn arguments(&mut self) -> Result<Vec<Expr>, FormulaError> {
        let mut args = Vec::new();
        if self.peek() == Some(&Token::RParen) {
            self.pos += 1;
            return Ok(args);
        }
        loop {
            let arg = match self.peek() {
                Some(Token::Comma | Token::RParen) => Expr::Literal(Literal::Missing),
                _ => self.expr()?,
            };
            args.push(arg);
            match self.peek() {
                Some(Token::Comma) => self.pos += 1,
                Some(Token::RParen) => {
                    self.pos += 1;
                    return Ok(args);
                }
                Some(t) => return Err(FormulaError::parse(self.offset(), format!("expected ',' or ')', found {t}"))),
                None => return Err(FormulaError::parse(self.end_offset, "unclosed '(' in function call")),
            }
        }
    }

    fn parenthesized(&mut self) -> Result<Expr, FormulaError> {
        let mut e = self.expr()?;
        while self.peek() == Some(&Token::Comma) {
            self.pos += 1;
            let right = self.expr()?;
            e = Expr::Binary { op: BinaryOp::Union, left: Box::new(e), right: Box::new(right) };
        }
        self.expect(&Token::RParen, "')'")?;
        Ok(e)
    }

    fn array(&mut self) -> Result<Expr, FormulaError> {
        let mut rows = vec![Vec::new()];
        loop {
            let element = self.expr()?;
            rows.last_mut().expect("at least one row").push(element);
            match self.advance() {
                Some(Token::Comma) => {}
                Some(Token::Semicolon) => rows.push(Vec::new()),
                Some(Token::RBrace) => return Ok(Expr::Array(rows)),
                Some(t) => {
                    return Err(FormulaError::parse(self.tokens[self.pos - 1].offset, format!("expected ',', ';' or '}}', found {t}")))
                }
                None => return Err(FormulaError::parse(self.end_offset, "unclosed '{'")),
            }
        }
    }
}
