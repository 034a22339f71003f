//! Recursive-descent parser for the symbol and operator grammars.
//!
//! Both grammars share one lexical layer (whitespace-insensitive):
//!
//! ```text
//! expr     := ('+'|'-')? term (('+'|'-') term)*
//! term     := factor+                       -- juxtaposition multiplies
//! factor   := rational
//!           | 'i'
//!           | 'hbar' ('^' int)?             -- int may be negative
//!           | var ('^' uint)?               -- var: x,p (symbols) X,P (operators)
//!           | '(' expr ')'
//! rational := uint ('/' uint)?
//! ```
//!
//! For symbols juxtaposition is commutative; for operators it is the
//! non-commutative Weyl-algebra product applied in the written order.

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::rational::Rational;
use crate::scalar::ExactScalar;
use crate::symbol::PolySymbol;
use crate::weyl::NormalOperator;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: expected {}, found {found}", .expected.join(" or "))]
    Syntax {
        line: usize,
        col: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("negative exponent at {line}:{col}: variable '{var}' cannot carry exponent {exp}")]
    NegativeExponent {
        line: usize,
        col: usize,
        var: String,
        exp: String,
    },
    #[error("exponent overflow at {line}:{col}: {text}")]
    ExponentOverflow {
        line: usize,
        col: usize,
        text: String,
    },
}

pub fn parse_symbol(text: &str) -> Result<PolySymbol, ParseError> {
    Parser::new(text, Mode::Symbol)?.parse_expr_toplevel()
}

pub fn parse_operator(text: &str) -> Result<NormalOperator, ParseError> {
    Parser::new(text, Mode::Operator)?.parse_expr_toplevel()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Symbol,
    Operator,
}

/// Either algebra the grammar can denote into.
trait Algebra: Sized {
    const MODE: Mode;
    fn from_scalar(c: ExactScalar) -> Self;
    fn first_var(exp: u32) -> Self;
    fn second_var(exp: u32) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
}

impl Algebra for PolySymbol {
    const MODE: Mode = Mode::Symbol;
    fn from_scalar(c: ExactScalar) -> Self {
        PolySymbol::from_scalar(c)
    }
    fn first_var(exp: u32) -> Self {
        PolySymbol::monomial(exp, 0, ExactScalar::one())
    }
    fn second_var(exp: u32) -> Self {
        PolySymbol::monomial(0, exp, ExactScalar::one())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl Algebra for NormalOperator {
    const MODE: Mode = Mode::Operator;
    fn from_scalar(c: ExactScalar) -> Self {
        NormalOperator::from_scalar(c)
    }
    fn first_var(exp: u32) -> Self {
        NormalOperator::monomial(exp, 0, ExactScalar::one())
    }
    fn second_var(exp: u32) -> Self {
        NormalOperator::monomial(0, exp, ExactScalar::one())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Plus,
    Minus,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number '{n}'"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&ch) = chars.peek() {
        let (tline, tcol) = (line, col);
        let bump = |c: char, line: &mut usize, col: &mut usize| {
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        if ch.is_whitespace() {
            chars.next();
            bump(ch, &mut line, &mut col);
            continue;
        }
        let tok = match ch {
            '+' => {
                chars.next();
                bump(ch, &mut line, &mut col);
                Tok::Plus
            }
            '-' => {
                chars.next();
                bump(ch, &mut line, &mut col);
                Tok::Minus
            }
            '/' => {
                chars.next();
                bump(ch, &mut line, &mut col);
                Tok::Slash
            }
            '^' => {
                chars.next();
                bump(ch, &mut line, &mut col);
                Tok::Caret
            }
            '(' => {
                chars.next();
                bump(ch, &mut line, &mut col);
                Tok::LParen
            }
            ')' => {
                chars.next();
                bump(ch, &mut line, &mut col);
                Tok::RParen
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        digits.push(d);
                        chars.next();
                        bump(d, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                Tok::Num(digits.parse().expect("digit string"))
            }
            c if c.is_ascii_alphabetic() => {
                let mut ident = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() {
                        ident.push(d);
                        chars.next();
                        bump(d, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                Tok::Ident(ident)
            }
            other => {
                return Err(ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    expected: vec!["a term".into()],
                    found: format!("'{other}'"),
                })
            }
        };
        out.push(Spanned {
            tok,
            line: tline,
            col: tcol,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    mode: Mode,
}

impl Parser {
    fn new(text: &str, mode: Mode) -> Result<Self, ParseError> {
        Ok(Self {
            toks: lex(text)?,
            pos: 0,
            mode,
        })
    }

    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn advance(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError::Syntax {
            line: t.line,
            col: t.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        }
    }

    fn var_names(&self) -> (&'static str, &'static str) {
        match self.mode {
            Mode::Symbol => ("x", "p"),
            Mode::Operator => ("X", "P"),
        }
    }

    fn parse_expr_toplevel<A: Algebra>(&mut self) -> Result<A, ParseError> {
        debug_assert_eq!(self.mode, A::MODE);
        let value = self.parse_expr::<A>()?;
        if self.peek().tok != Tok::Eof {
            return Err(self.error(&["'+'", "'-'", "end of input"]));
        }
        Ok(value)
    }

    fn parse_expr<A: Algebra>(&mut self) -> Result<A, ParseError> {
        let mut negate = false;
        match self.peek().tok {
            Tok::Plus => {
                self.advance();
            }
            Tok::Minus => {
                self.advance();
                negate = true;
            }
            _ => {}
        }
        let mut acc = self.parse_term::<A>()?;
        if negate {
            acc = acc.neg();
        }
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.advance();
                    let t = self.parse_term::<A>()?;
                    acc = acc.add(&t);
                }
                Tok::Minus => {
                    self.advance();
                    let t = self.parse_term::<A>()?;
                    acc = acc.sub(&t);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn is_factor_start(&self) -> bool {
        matches!(self.peek().tok, Tok::Num(_) | Tok::Ident(_) | Tok::LParen)
    }

    fn parse_term<A: Algebra>(&mut self) -> Result<A, ParseError> {
        let mut acc = self.parse_factor::<A>()?;
        while self.is_factor_start() {
            let f = self.parse_factor::<A>()?;
            acc = acc.mul(&f);
        }
        Ok(acc)
    }

    fn parse_factor<A: Algebra>(&mut self) -> Result<A, ParseError> {
        let (v1, v2) = self.var_names();
        let t = self.peek().clone();
        match &t.tok {
            Tok::Num(_) => {
                let q = self.parse_rational()?;
                Ok(A::from_scalar(ExactScalar::from_rational(q)))
            }
            Tok::LParen => {
                self.advance();
                let inner = self.parse_expr::<A>()?;
                if self.peek().tok != Tok::RParen {
                    return Err(self.error(&["')'"]));
                }
                self.advance();
                Ok(inner)
            }
            Tok::Ident(name) => {
                let name = name.clone();
                if name == "i" {
                    self.advance();
                    Ok(A::from_scalar(ExactScalar::i()))
                } else if name == "hbar" {
                    self.advance();
                    let e = if self.peek().tok == Tok::Caret {
                        self.advance();
                        self.parse_signed_exponent()?
                    } else {
                        1
                    };
                    Ok(A::from_scalar(ExactScalar::hbar_pow(e)))
                } else if name == v1 || name == v2 {
                    self.advance();
                    let e = if self.peek().tok == Tok::Caret {
                        self.advance();
                        self.parse_unsigned_exponent(&name)?
                    } else {
                        1
                    };
                    Ok(if name == v1 {
                        A::first_var(e)
                    } else {
                        A::second_var(e)
                    })
                } else {
                    Err(self.error(&["a number", "'i'", "'hbar'", v1, v2, "'('"]))
                }
            }
            _ => Err(self.error(&["a number", "'i'", "'hbar'", v1, v2, "'('"])),
        }
    }

    fn parse_rational(&mut self) -> Result<Rational, ParseError> {
        let num = match self.advance() {
            Spanned {
                tok: Tok::Num(n), ..
            } => n,
            _ => unreachable!("caller checked for a number"),
        };
        if self.peek().tok == Tok::Slash {
            self.advance();
            match self.peek().tok.clone() {
                Tok::Num(d) if !d.is_zero() => {
                    self.advance();
                    Ok(Rational::new(num, d))
                }
                _ => Err(self.error(&["a nonzero denominator"])),
            }
        } else {
            Ok(Rational::from_integer(num))
        }
    }

    fn parse_signed_exponent(&mut self) -> Result<i64, ParseError> {
        let negative = if self.peek().tok == Tok::Minus {
            self.advance();
            true
        } else {
            false
        };
        let t = self.peek().clone();
        match &t.tok {
            Tok::Num(n) => {
                self.advance();
                let mag: i64 = n.try_into().map_err(|_| ParseError::ExponentOverflow {
                    line: t.line,
                    col: t.col,
                    text: n.to_string(),
                })?;
                Ok(if negative { -mag } else { mag })
            }
            _ => Err(self.error(&["an integer exponent"])),
        }
    }

    fn parse_unsigned_exponent(&mut self, var: &str) -> Result<u32, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Minus => {
                // report the signed value for the diagnostic
                self.advance();
                let text = match &self.peek().tok {
                    Tok::Num(n) => format!("-{n}"),
                    _ => "-".into(),
                };
                Err(ParseError::NegativeExponent {
                    line: t.line,
                    col: t.col,
                    var: var.to_string(),
                    exp: text,
                })
            }
            Tok::Num(n) => {
                self.advance();
                n.try_into().map_err(|_| ParseError::ExponentOverflow {
                    line: t.line,
                    col: t.col,
                    text: n.to_string(),
                })
            }
            _ => Err(self.error(&["a non-negative integer exponent"])),
        }
    }
}
