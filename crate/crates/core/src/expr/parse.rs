//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := primary ('^' exponent)?
//! exponent := INT | '(' '-'? INT ')'
//! primary  := NUMBER | 'x' INT | FUNC '(' expr ')' | '(' expr ')'
//! ```
//!
//! Decimal literals become exact rationals, and a quotient of two literals
//! (`2/3`) folds into a single rational constant.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::{Expr, ExprError, Func};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut column) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, column);
        if c == '\n' {
            line += 1;
            column = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            column += 1;
            i += 1;
            continue;
        }
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token {
                tok,
                line: l0,
                column: c0,
            });
            i += 1;
            column += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let int_part: String = chars[start..i].iter().collect();
            let mut frac_part = String::new();
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                let fs = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                frac_part = chars[fs..i].iter().collect();
                if frac_part.is_empty() {
                    return Err(ExprError::Syntax {
                        line: l0,
                        column: c0,
                        message: "malformed decimal literal".into(),
                    });
                }
            }
            if int_part.is_empty() && frac_part.is_empty() {
                return Err(ExprError::Syntax {
                    line: l0,
                    column: c0,
                    message: "malformed number".into(),
                });
            }
            column += i - start;
            let digits = format!("{int_part}{frac_part}");
            let num: BigInt = digits.parse().expect("digits only");
            let den = num_traits::pow(BigInt::from(10), frac_part.len());
            out.push(Token {
                tok: Tok::Num(BigRational::new(num, den)),
                line: l0,
                column: c0,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            column += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: l0,
                column: c0,
            });
            continue;
        }
        return Err(ExprError::Syntax {
            line: l0,
            column: c0,
            message: format!("unexpected character `{c}`"),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error(&self, t: &Token, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        let t = self.next();
        if t.tok == tok {
            Ok(())
        } else {
            Err(self.error(&t, format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Tok::Minus => {
                    self.next();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(negate(rhs)));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.next();
                    let rhs = self.unary()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Tok::Slash => {
                    self.next();
                    let rhs = self.unary()?;
                    lhs = match (lhs, rhs) {
                        (Expr::Const(a), Expr::Const(b)) if !b.is_zero() => Expr::Const(a / b),
                        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
                    };
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek().tok == Tok::Minus {
            self.next();
            let inner = self.unary()?;
            return Ok(negate(inner));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        self.next();
        let exponent = self.exponent()?;
        if self.peek().tok == Tok::Caret {
            let t = self.peek().clone();
            return Err(self.error(&t, "chained `^` is ambiguous; add parentheses"));
        }
        Ok(Expr::Pow(Box::new(base), exponent))
    }

    fn exponent(&mut self) -> Result<u32, ExprError> {
        let t = self.next();
        let (value, at) = match t.tok {
            Tok::Num(ref n) => (n.clone(), t.clone()),
            Tok::LParen => {
                let negative = if self.peek().tok == Tok::Minus {
                    self.next();
                    true
                } else {
                    false
                };
                let inner = self.next();
                let Tok::Num(n) = inner.tok.clone() else {
                    return Err(self.error(&inner, "expected an integer exponent"));
                };
                self.expect(Tok::RParen, "`)`")?;
                (if negative { -n } else { n }, inner)
            }
            Tok::Minus => {
                return Err(self.error(&t, "negative exponents are not allowed; use division"))
            }
            _ => return Err(self.error(&t, "expected an integer exponent")),
        };
        if !value.is_integer() {
            return Err(self.error(&at, "exponent must be an integer"));
        }
        if value.is_negative() {
            return Err(self.error(&at, "negative exponents are not allowed; use division"));
        }
        u32::try_from(value.to_integer())
            .map_err(|_| self.error(&at, "exponent too large"))
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let t = self.next();
        match t.tok {
            Tok::Num(n) => Ok(Expr::Const(n)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(ref name) => {
                if let Some(f) = Func::from_name(name) {
                    self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                if let Some(index) = variable_index(name) {
                    if index == 0 || index > self.dim {
                        return Err(ExprError::VariableOutOfRange {
                            index,
                            dim: self.dim,
                        });
                    }
                    return Ok(Expr::Var(index));
                }
                Err(ExprError::UnknownIdentifier {
                    name: name.clone(),
                    line: t.line,
                    column: t.column,
                })
            }
            Tok::Eof => Err(self.error(&t, "unexpected end of input")),
            _ => Err(self.error(&t, "expected a number, variable, function call or `(`")),
        }
    }
}

fn negate(e: Expr) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(-c),
        e => Expr::Neg(Box::new(e)),
    }
}

fn variable_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Parse `text` as an expression over the chart coordinates `x1..x{dim}`.
pub fn parse(text: &str, dim: usize) -> Result<Expr, ExprError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        dim,
    };
    let e = parser.expr()?;
    let t = parser.peek().clone();
    if t.tok != Tok::Eof {
        return Err(parser.error(&t, "unexpected trailing input"));
    }
    Ok(e)
}
