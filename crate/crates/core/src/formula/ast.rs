use super::lexer::{Qualifier, RefPart};

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Number(f64),
    Text(String),
    Bool(bool),
    Error(String),
    /// An omitted function argument, as in `IF(A1,,0)`.
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellRef {
    pub qualifier: Option<Qualifier>,
    pub part: RefPart,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameRef {
    pub qualifier: Option<Qualifier>,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Plus,
    Minus,
    /// Postfix `%`.
    Percent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// `,` inside parentheses.
    Union,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Literal),
    CellRef(CellRef),
    Range { start: Box<Expr>, end: Box<Expr> },
    NameRef(NameRef),
    Call { name: String, args: Vec<Expr> },
    Unary { op: UnaryOp, operand: Box<Expr> },
    Binary { op: BinaryOp, left: Box<Expr>, right: Box<Expr> },
    Array(Vec<Vec<Expr>>),
    Paren(Box<Expr>),
}

impl Expr {
    pub fn number(n: f64) -> Self {
        Expr::Literal(Literal::Number(n))
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Self {
        Expr::Call { name: name.to_string(), args }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Literal(_) | Expr::CellRef(_) | Expr::NameRef(_) => Vec::new(),
            Expr::Range { start, end } => vec![start, end],
            Expr::Call { args, .. } => args.iter().collect(),
            Expr::Unary { operand, .. } => vec![operand],
            Expr::Binary { left, right, .. } => vec![left, right],
            Expr::Array(rows) => rows.iter().flatten().collect(),
            Expr::Paren(inner) => vec![inner],
        }
    }

    /// Pre-order traversal with an explicit stack.
    pub fn visit(&self, mut f: impl FnMut(&Expr)) {
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            f(e);
            let children = e.children();
            stack.extend(children.into_iter().rev());
        }
    }
}
