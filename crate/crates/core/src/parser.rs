//! Tokenizer and operator-precedence parser for the term subset.

use std::fmt;

use thiserror::Error;

use crate::symbol::Symbol;
use crate::term::{infix_op, prefix_op, Assoc, Clause, Literal, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("unterminated quoted atom starting at {pos}")]
    UnterminatedQuote { pos: Pos },
    #[error("empty input")]
    Empty,
    #[error("unexpected end of input at {pos}")]
    UnexpectedEof { pos: Pos },
    #[error("invalid clause at {pos}: {msg}")]
    Clause { pos: Pos, msg: String },
}

impl ParseError {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnterminatedQuote { pos }
            | ParseError::UnexpectedEof { pos }
            | ParseError::Clause { pos, .. } => Some(*pos),
            ParseError::Empty => None,
        }
    }

    /// Shift the reported position by a line offset (for incremental readers).
    pub fn offset_lines(self, lines: usize) -> ParseError {
        let shift = |p: Pos| Pos {
            line: p.line + lines,
            col: p.col,
        };
        match self {
            ParseError::Syntax { pos, msg } => ParseError::Syntax {
                pos: shift(pos),
                msg,
            },
            ParseError::UnterminatedQuote { pos } => {
                ParseError::UnterminatedQuote { pos: shift(pos) }
            }
            ParseError::UnexpectedEof { pos } => ParseError::UnexpectedEof { pos: shift(pos) },
            ParseError::Clause { pos, msg } => ParseError::Clause {
                pos: shift(pos),
                msg,
            },
            ParseError::Empty => ParseError::Empty,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Atom(String),
    Quoted(String),
    Var(String),
    Int(i64),
    Float(f64),
    Sym(&'static str),
    Open,
    Close,
    OpenList,
    CloseList,
    Comma,
    Bar,
    End,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
    /// Immediately followed by `(` with no layout in between.
    functional: bool,
}

const SYMBOLS: [&str; 13] = [
    ":-", "\\=", "=<", ">=", "+-", "=", "<", ">", ":", "+", "-", "#", "!",
];

struct Lexer<'a> {
    src: &'a [u8],
    text: &'a str,
    i: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            src: text.as_bytes(),
            text,
            i: 0,
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&self, k: usize) -> Option<u8> {
        self.src.get(self.i + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.text[self.i..].chars().next()?;
        self.i += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_layout(&mut self) {
        while let Some(b) = self.peek(0) {
            if b.is_ascii_whitespace() {
                self.bump();
            } else if b == b'%' {
                while let Some(c) = self.peek(0) {
                    if c == b'\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn err(&self, pos: Pos, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            pos,
            msg: msg.into(),
        }
    }

    fn word(&mut self) -> String {
        let start = self.i;
        while let Some(b) = self.peek(0) {
            if b.is_ascii_alphanumeric() || b == b'_' {
                self.bump();
            } else {
                break;
            }
        }
        self.text[start..self.i].to_string()
    }

    fn number(&mut self, pos: Pos) -> Result<Tok, ParseError> {
        let start = self.i;
        if self.peek(0) == Some(b'-') {
            self.bump();
        }
        while matches!(self.peek(0), Some(b) if b.is_ascii_digit()) {
            self.bump();
        }
        let mut float = false;
        if self.peek(0) == Some(b'.') && matches!(self.peek(1), Some(b) if b.is_ascii_digit()) {
            float = true;
            self.bump();
            while matches!(self.peek(0), Some(b) if b.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(0), Some(b'e' | b'E')) {
            let signed = matches!(self.peek(1), Some(b'+' | b'-'));
            let digit_at = if signed { 2 } else { 1 };
            if matches!(self.peek(digit_at), Some(b) if b.is_ascii_digit()) {
                float = true;
                for _ in 0..digit_at {
                    self.bump();
                }
                while matches!(self.peek(0), Some(b) if b.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        let text = &self.text[start..self.i];
        if float {
            text.parse::<f64>()
                .map(Tok::Float)
                .map_err(|_| self.err(pos, format!("bad float {text}")))
        } else {
            text.parse::<i64>()
                .map(Tok::Int)
                .map_err(|_| self.err(pos, format!("integer out of range: {text}")))
        }
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        self.skip_layout();
        let pos = self.pos();
        let Some(b) = self.peek(0) else {
            return Ok(Token {
                tok: Tok::Eof,
                pos,
                functional: false,
            });
        };
        let tok = if b.is_ascii_lowercase() {
            let mut name = self.word();
            // hyphenated identifiers such as h2o-1
            while self.peek(0) == Some(b'-')
                && matches!(self.peek(1), Some(c) if c.is_ascii_alphanumeric() || c == b'_')
            {
                self.bump();
                name.push('-');
                name.push_str(&self.word());
            }
            Tok::Atom(name)
        } else if b.is_ascii_uppercase() || b == b'_' {
            Tok::Var(self.word())
        } else if b.is_ascii_digit()
            || (b == b'-' && matches!(self.peek(1), Some(c) if c.is_ascii_digit()))
        {
            self.number(pos)?
        } else if b == b'\'' {
            self.bump();
            let mut s = String::new();
            loop {
                match self.bump() {
                    None => return Err(ParseError::UnterminatedQuote { pos }),
                    Some('\'') => {
                        if self.peek(0) == Some(b'\'') {
                            self.bump();
                            s.push('\'');
                        } else {
                            break;
                        }
                    }
                    Some(c) => s.push(c),
                }
            }
            Tok::Quoted(s)
        } else if b == b'.'
            && matches!(
                self.peek(1),
                None | Some(b' ' | b'\t' | b'\r' | b'\n' | b'%')
            )
        {
            self.bump();
            Tok::End
        } else {
            match b {
                b'(' => {
                    self.bump();
                    Tok::Open
                }
                b')' => {
                    self.bump();
                    Tok::Close
                }
                b'[' => {
                    self.bump();
                    Tok::OpenList
                }
                b']' => {
                    self.bump();
                    Tok::CloseList
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'|' => {
                    self.bump();
                    Tok::Bar
                }
                _ => {
                    let rest = &self.text[self.i..];
                    match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                        Some(sym) => {
                            for _ in 0..sym.len() {
                                self.bump();
                            }
                            Tok::Sym(sym)
                        }
                        None => {
                            let c = rest.chars().next().unwrap_or('?');
                            return Err(self.err(pos, format!("unexpected character {c:?}")));
                        }
                    }
                }
            }
        };
        let functional = self.peek(0) == Some(b'(')
            && matches!(tok, Tok::Atom(_) | Tok::Quoted(_) | Tok::Sym(_));
        Ok(Token {
            tok,
            pos,
            functional,
        })
    }
}

/// Operator-precedence parser over a token stream.
pub struct Parser<'a> {
    lexer: Lexer<'a>,
    look: Token,
    fresh: usize,
}

impl<'a> Parser<'a> {
    pub fn new(text: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(text);
        let look = lexer.next()?;
        Ok(Parser {
            lexer,
            look,
            fresh: 0,
        })
    }

    fn advance(&mut self) -> Result<Token, ParseError> {
        let next = self.lexer.next()?;
        Ok(std::mem::replace(&mut self.look, next))
    }

    pub fn at_eof(&self) -> bool {
        self.look.tok == Tok::Eof
    }

    fn unexpected(&self, what: &str) -> ParseError {
        if self.look.tok == Tok::Eof {
            ParseError::UnexpectedEof { pos: self.look.pos }
        } else {
            ParseError::Syntax {
                pos: self.look.pos,
                msg: format!("expected {what}, found {}", describe(&self.look.tok)),
            }
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.look.tok == tok {
            self.advance()?;
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn args(&mut self) -> Result<Vec<Term>, ParseError> {
        self.expect(Tok::Open, "'('")?;
        let mut args = vec![self.term(999)?];
        while self.look.tok == Tok::Comma {
            self.advance()?;
            args.push(self.term(999)?);
        }
        self.expect(Tok::Close, "',' or ')'")?;
        Ok(args)
    }

    fn primary(&mut self, max: u16) -> Result<(Term, u16), ParseError> {
        let tok = self.advance()?;
        let t = match tok.tok {
            Tok::Int(i) => Term::Int(i),
            Tok::Float(x) => Term::Float(x),
            Tok::Var(name) => {
                if name == "_" {
                    self.fresh += 1;
                    Term::var(&format!("_G{}", self.fresh))
                } else {
                    Term::var(&name)
                }
            }
            Tok::Open => {
                let inner = self.term(1200)?;
                self.expect(Tok::Close, "')'")?;
                inner
            }
            Tok::OpenList => {
                if self.look.tok == Tok::CloseList {
                    self.advance()?;
                    Term::atom("[]")
                } else {
                    let mut items = vec![self.term(999)?];
                    while self.look.tok == Tok::Comma {
                        self.advance()?;
                        items.push(self.term(999)?);
                    }
                    if self.look.tok == Tok::Bar {
                        return Err(ParseError::Syntax {
                            pos: self.look.pos,
                            msg: "list tails with '|' are not supported".into(),
                        });
                    }
                    self.expect(Tok::CloseList, "',' or ']'")?;
                    Term::list(items)
                }
            }
            Tok::Atom(name) | Tok::Quoted(name) => {
                if tok.functional {
                    let args = self.args()?;
                    Term::Compound(Symbol::intern(&name), args.into())
                } else {
                    Term::atom(&name)
                }
            }
            Tok::Sym(sym) => {
                if tok.functional {
                    let args = self.args()?;
                    Term::Compound(Symbol::intern(sym), args.into())
                } else if sym == "!" {
                    Term::atom("!")
                } else if let Some(p) = prefix_op(sym).filter(|&p| p <= max) {
                    let operand = self.term(p)?;
                    return Ok((Term::compound(sym, vec![operand]), p));
                } else {
                    return Err(ParseError::Syntax {
                        pos: tok.pos,
                        msg: format!("unexpected operator {sym}"),
                    });
                }
            }
            Tok::Eof => return Err(ParseError::UnexpectedEof { pos: tok.pos }),
            other => {
                return Err(ParseError::Syntax {
                    pos: tok.pos,
                    msg: format!("unexpected {}", describe(&other)),
                })
            }
        };
        Ok((t, 0))
    }

    /// Parse one term whose priority does not exceed `max`.
    pub fn term(&mut self, max: u16) -> Result<Term, ParseError> {
        let (mut left, mut left_prec) = self.primary(max)?;
        loop {
            let name: &str = match &self.look.tok {
                Tok::Sym(s) => s,
                Tok::Comma => ",",
                _ => break,
            };
            let Some((p, assoc)) = infix_op(name) else {
                break;
            };
            if p > max || left_prec > p - 1 {
                break;
            }
            let name = name.to_string();
            self.advance()?;
            let rmax = match assoc {
                Assoc::Xfx => p - 1,
                Assoc::Xfy => p,
            };
            let right = self.term(rmax)?;
            left = Term::compound(&name, vec![left, right]);
            left_prec = p;
        }
        Ok((left, left_prec).0)
    }

    /// Parse `Term.`; returns `None` at end of input.
    pub fn clause_term(&mut self) -> Result<Option<(Term, Pos)>, ParseError> {
        if self.at_eof() {
            return Ok(None);
        }
        let pos = self.look.pos;
        let t = self.term(1200)?;
        self.expect(Tok::End, "operator or '.'")?;
        // anonymous variables are numbered per clause
        self.fresh = 0;
        Ok(Some((t, pos)))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Atom(a) => format!("atom {a}"),
        Tok::Quoted(a) => format!("quoted atom '{a}'"),
        Tok::Var(v) => format!("variable {v}"),
        Tok::Int(i) => format!("integer {i}"),
        Tok::Float(x) => format!("float {x}"),
        Tok::Sym(s) => format!("'{s}'"),
        Tok::Open => "'('".into(),
        Tok::Close => "')'".into(),
        Tok::OpenList => "'['".into(),
        Tok::CloseList => "']'".into(),
        Tok::Comma => "','".into(),
        Tok::Bar => "'|'".into(),
        Tok::End => "end of clause".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parse a complete term; a single trailing `.` is tolerated.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text)?;
    if p.at_eof() {
        return Err(ParseError::Empty);
    }
    let t = p.term(1200)?;
    if p.look.tok == Tok::End {
        p.advance()?;
    }
    if !p.at_eof() {
        return Err(p.unexpected("end of input"));
    }
    Ok(t)
}

/// All `Term.` items of a text, with their start positions.
pub fn parse_clause_terms(text: &str) -> Result<Vec<(Term, Pos)>, ParseError> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    while let Some(item) = p.clause_term()? {
        out.push(item);
    }
    Ok(out)
}

/// Flatten a `,`-conjunction term into its conjuncts.
pub fn conjuncts(t: &Term) -> Vec<&Term> {
    let mut out = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::Compound(f, args) if f.as_str() == "," && args.len() == 2 => {
                out.push(&args[0]);
                cur = &args[1];
            }
            Term::Atom(s) if s.as_str() == "true" && out.is_empty() => return out,
            _ => {
                out.push(cur);
                return out;
            }
        }
    }
}

pub fn term_to_clause(t: &Term, pos: Pos) -> Result<Clause, ParseError> {
    let bad = |msg: String| ParseError::Clause { pos, msg };
    let (head_t, body_t) = match t {
        Term::Compound(f, args) if f.as_str() == ":-" && args.len() == 2 => {
            (&args[0], Some(&args[1]))
        }
        _ => (t, None),
    };
    let head = Literal::from_term(head_t).map_err(bad)?;
    if head.is_builtin() {
        return Err(ParseError::Clause {
            pos,
            msg: format!("builtin {} cannot be a clause head", head.pred),
        });
    }
    let body = match body_t {
        None => Vec::new(),
        Some(b) => conjuncts(b)
            .into_iter()
            .map(Literal::from_term)
            .collect::<Result<Vec<_>, _>>()
            .map_err(bad)?,
    };
    Ok(Clause { head, body })
}

/// Parse a sequence of facts `H.` and rules `H :- B1, ..., Bn.`
pub fn parse_program(text: &str) -> Result<Vec<Clause>, ParseError> {
    parse_clause_terms(text)?
        .iter()
        .map(|(t, pos)| term_to_clause(t, *pos))
        .collect()
}
