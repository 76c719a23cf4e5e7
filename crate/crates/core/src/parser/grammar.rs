//! Lexer and operator-precedence parser for the Lagrangian expression
//! grammar: infix `+ - * / ^`, unary minus, `sin`, `cos`, the velocity
//! operator `d(name)`, integer literals, and parentheses. `^` binds tighter
//! than unary minus and takes a literal non-negative integer exponent.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl Span {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Syntax { line: self.line, col: self.col, msg: msg.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Int(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

/// Tokenizes expression text assembled from (original line number, text)
/// pairs, so error positions refer to the input file.
pub fn tokenize(lines: &[(usize, String)]) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (line_no, text) in lines {
        let mut chars = text.char_indices().peekable();
        while let Some((i, ch)) = chars.next() {
            let span = Span { line: *line_no, col: i + 1 };
            let kind = match ch {
                c if c.is_whitespace() => continue,
                '#' => break,
                '+' => TokenKind::Plus,
                '-' => TokenKind::Minus,
                '*' => TokenKind::Star,
                '/' => TokenKind::Slash,
                '^' => TokenKind::Caret,
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                '=' => TokenKind::Eq,
                c if c.is_ascii_digit() => {
                    let mut lit = String::from(c);
                    while let Some((_, c2)) = chars.peek() {
                        if c2.is_ascii_digit() {
                            lit.push(*c2);
                            chars.next();
                        } else if *c2 == '.' {
                            return Err(span.err(
                                "floating-point literals are not supported; use p/q rationals",
                            ));
                        } else {
                            break;
                        }
                    }
                    TokenKind::Int(lit)
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut name = String::from(c);
                    while let Some((_, c2)) = chars.peek() {
                        if c2.is_alphanumeric() || *c2 == '_' {
                            name.push(*c2);
                            chars.next();
                        } else {
                            break;
                        }
                    }
                    TokenKind::Ident(name)
                }
                other => return Err(span.err(format!("unexpected character `{other}`"))),
            };
            out.push(Token { kind, span });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Parsed expression tree; identifiers are still unresolved names.
#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Int(String, Span),
    Ident(String, Span),
    Neg(Box<Ast>, Span),
    Bin(BinOp, Box<Ast>, Box<Ast>, Span),
    Pow(Box<Ast>, u32, Span),
    Sin(Box<Ast>, Span),
    Cos(Box<Ast>, Span),
    /// Velocity of a declared variable.
    Velocity(String, Span),
}

impl Ast {
    pub fn span(&self) -> Span {
        match self {
            Ast::Int(_, s)
            | Ast::Ident(_, s)
            | Ast::Neg(_, s)
            | Ast::Bin(_, _, _, s)
            | Ast::Pow(_, _, s)
            | Ast::Sin(_, s)
            | Ast::Cos(_, s)
            | Ast::Velocity(_, s) => *s,
        }
    }

    /// All identifier uses (excluding function names), for validation.
    pub fn idents(&self, out: &mut Vec<(String, Span)>) {
        match self {
            Ast::Ident(name, s) => out.push((name.clone(), *s)),
            Ast::Velocity(name, s) => out.push((name.clone(), *s)),
            Ast::Neg(a, _) | Ast::Pow(a, _, _) | Ast::Sin(a, _) | Ast::Cos(a, _) => {
                a.idents(out)
            }
            Ast::Bin(_, a, b, _) => {
                a.idents(out);
                b.idents(out);
            }
            Ast::Int(..) => {}
        }
    }
}

pub const RESERVED: &[&str] = &["var", "param", "lagrangian", "gauge", "keep", "sin", "cos", "d"];

pub struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    end: Span,
}

impl<'t> Parser<'t> {
    pub fn new(tokens: &'t [Token]) -> Self {
        let end = tokens
            .last()
            .map(|t| Span { line: t.span.line, col: t.span.col + 1 })
            .unwrap_or(Span { line: 1, col: 1 });
        Parser { tokens, pos: 0, end }
    }

    /// Parses a complete expression; trailing tokens are an error.
    pub fn parse_all(mut self) -> Result<Ast> {
        let ast = self.parse_expr(0)?;
        if let Some(tok) = self.peek() {
            return Err(tok.span.err("unexpected trailing input"));
        }
        Ok(ast)
    }

    /// Parses one expression, stopping at the first token that cannot
    /// continue it (used for `name=value` lists).
    pub fn parse_value(&mut self) -> Result<Ast> {
        self.parse_expr(0)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub fn expect_ident(&mut self) -> Result<(String, Span)> {
        let end = self.end;
        match self.next() {
            Some(Token { kind: TokenKind::Ident(name), span }) => Ok((name, span)),
            Some(t) => Err(t.span.err("expected a name")),
            None => Err(end.err("expected a name")),
        }
    }

    pub fn expect_eq(&mut self) -> Result<()> {
        self.expect(&TokenKind::Eq, "`=`").map(|_| ())
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<Span> {
        let end = self.end;
        match self.next() {
            Some(t) if &t.kind == kind => Ok(t.span),
            Some(t) => Err(t.span.err(format!("expected {what}"))),
            None => Err(end.err(format!("expected {what}, found end of input"))),
        }
    }

    fn parse_expr(&mut self, min_bp: u8) -> Result<Ast> {
        let mut lhs = self.parse_prefix()?;
        loop {
            let Some((kind, span)) = self.peek().map(|t| (t.kind.clone(), t.span)) else {
                break;
            };
            let (op, lbp, rbp) = match kind {
                TokenKind::Plus => (BinOp::Add, 1, 2),
                TokenKind::Minus => (BinOp::Sub, 1, 2),
                TokenKind::Star => (BinOp::Mul, 3, 4),
                TokenKind::Slash => (BinOp::Div, 3, 4),
                TokenKind::Caret => {
                    self.next();
                    let exp = self.parse_exponent(span)?;
                    lhs = Ast::Pow(Box::new(lhs), exp, span);
                    continue;
                }
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.next();
            let rhs = self.parse_expr(rbp)?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs), span);
        }
        Ok(lhs)
    }

    fn parse_exponent(&mut self, caret: Span) -> Result<u32> {
        match self.next() {
            Some(Token { kind: TokenKind::Int(lit), span }) => {
                lit.parse::<u32>().map_err(|_| span.err("exponent out of range"))
            }
            _ => Err(caret.err("exponent must be a non-negative integer literal")),
        }
    }

    fn parse_prefix(&mut self) -> Result<Ast> {
        let end = self.end;
        let Some(tok) = self.next() else {
            return Err(end.err("expected an expression"));
        };
        match tok.kind {
            TokenKind::Int(lit) => Ok(Ast::Int(lit, tok.span)),
            TokenKind::Minus => {
                // `^` binds tighter than unary minus.
                let inner = self.parse_expr(6)?;
                Ok(Ast::Neg(Box::new(inner), tok.span))
            }
            TokenKind::LParen => {
                let inner = self.parse_expr(0)?;
                self.expect(&TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => match name.as_str() {
                "sin" | "cos" => {
                    self.expect(&TokenKind::LParen, "`(` after function name")?;
                    let arg = self.parse_expr(0)?;
                    self.expect(&TokenKind::RParen, "`)`")?;
                    Ok(if name == "sin" {
                        Ast::Sin(Box::new(arg), tok.span)
                    } else {
                        Ast::Cos(Box::new(arg), tok.span)
                    })
                }
                "d" => {
                    self.expect(&TokenKind::LParen, "`(` after `d`")?;
                    let var = match self.next() {
                        Some(Token { kind: TokenKind::Ident(v), .. }) => v,
                        Some(t) => {
                            return Err(t.span.err("`d(...)` takes a single variable name"))
                        }
                        None => return Err(end.err("`d(...)` takes a single variable name")),
                    };
                    self.expect(&TokenKind::RParen, "`)`")?;
                    Ok(Ast::Velocity(var, tok.span))
                }
                _ => Ok(Ast::Ident(name, tok.span)),
            },
            other => Err(tok.span.err(format!("unexpected token `{other:?}`"))),
        }
    }
}
