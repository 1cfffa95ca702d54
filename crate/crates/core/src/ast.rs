//! Contract syntax: the abstract syntax tree, a hand-written parser for the
//! ASCII surface syntax, validation, and a canonical pretty-printer.
//!
//! ```text
//! contract := "stipula" IDENT "{" "init" state fun* "}"
//! fun      := state IDENT "{" event* "}" "=>" state
//! event    := time ">>" state "=>" state
//! time     := "now" ("+" NAT)?
//! state    := "@" IDENT
//! ```
//!
//! `//` starts a comment that runs to the end of the line. Each event gets the
//! physical line it starts on as its line-code, and no line may hold two events.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Name of a contract state. Cheap to clone.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateName(Arc<str>);

impl StateName {
    pub fn new(name: &str) -> Self {
        StateName(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for StateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.0)
    }
}

impl From<&str> for StateName {
    fn from(s: &str) -> Self {
        StateName::new(s)
    }
}

impl Serialize for StateName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

/// `now + offset`; plain `now` is offset 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TimeExpr {
    pub offset: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct EventDecl {
    pub time: TimeExpr,
    pub from: StateName,
    pub to: StateName,
    /// Line-code: the 1-based source line of the declaration.
    pub line: u32,
}

impl EventDecl {
    pub fn new(offset: u32, from: &str, to: &str) -> Self {
        EventDecl {
            time: TimeExpr { offset },
            from: StateName::new(from),
            to: StateName::new(to),
            line: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FunctionDecl {
    pub from: StateName,
    pub name: String,
    pub body: Vec<EventDecl>,
    pub to: StateName,
}

impl FunctionDecl {
    pub fn new(from: &str, name: &str, body: Vec<EventDecl>, to: &str) -> Self {
        FunctionDecl {
            from: StateName::new(from),
            name: name.to_string(),
            body,
            to: StateName::new(to),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Contract {
    pub name: String,
    pub init: StateName,
    pub functions: Vec<FunctionDecl>,
}

/// A function clause `<Q f Q'>` or an event clause `<Q ev_n Q'>`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClauseId {
    Function {
        from: StateName,
        name: String,
        to: StateName,
    },
    Event {
        from: StateName,
        line: u32,
        to: StateName,
    },
}

impl ClauseId {
    pub fn from_state(&self) -> &StateName {
        match self {
            ClauseId::Function { from, .. } | ClauseId::Event { from, .. } => from,
        }
    }

    pub fn to_state(&self) -> &StateName {
        match self {
            ClauseId::Function { to, .. } | ClauseId::Event { to, .. } => to,
        }
    }

    /// The middle component: a function name or `ev<n>`.
    pub fn label(&self) -> String {
        match self {
            ClauseId::Function { name, .. } => name.clone(),
            ClauseId::Event { line, .. } => format!("ev{line}"),
        }
    }
}

impl fmt::Display for ClauseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{} {} {}>", self.from_state(), self.label(), self.to_state())
    }
}

impl Serialize for ClauseId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: u32, column: u32, message: String },
    #[error("duplicate function <{from} {name} {to}>")]
    DuplicateClause {
        from: StateName,
        name: String,
        to: StateName,
    },
    #[error("line {line} holds more than one event")]
    MultipleEventsPerLine { line: u32 },
}

impl Contract {
    pub fn new(name: &str, init: &str, functions: Vec<FunctionDecl>) -> Self {
        Contract {
            name: name.to_string(),
            init: StateName::new(init),
            functions,
        }
    }

    pub fn events(&self) -> impl Iterator<Item = &EventDecl> {
        self.functions.iter().flat_map(|f| f.body.iter())
    }

    pub fn event_count(&self) -> usize {
        self.functions.iter().map(|f| f.body.len()).sum()
    }

    pub fn event_at_line(&self, line: u32) -> Option<&EventDecl> {
        self.events().find(|e| e.line == line)
    }

    /// Every state mentioned anywhere in the contract.
    pub fn states(&self) -> BTreeSet<StateName> {
        let mut out = BTreeSet::new();
        out.insert(self.init.clone());
        for f in &self.functions {
            out.insert(f.from.clone());
            out.insert(f.to.clone());
            for e in &f.body {
                out.insert(e.from.clone());
                out.insert(e.to.clone());
            }
        }
        out
    }

    /// Checks clause uniqueness and line-code distinctness.
    pub fn validate(&self) -> Result<(), ParseError> {
        let mut seen = HashSet::new();
        for f in &self.functions {
            if !seen.insert((&f.from, &f.name, &f.to)) {
                return Err(ParseError::DuplicateClause {
                    from: f.from.clone(),
                    name: f.name.clone(),
                    to: f.to.clone(),
                });
            }
        }
        let mut lines = HashSet::new();
        for e in self.events() {
            if !lines.insert(e.line) {
                return Err(ParseError::MultipleEventsPerLine { line: e.line });
            }
        }
        Ok(())
    }

    /// Assigns each event the line-code it would get after `render`.
    pub fn renumbered(mut self) -> Self {
        // Lines 1 and 2 hold the header and `init`.
        let mut line = 3;
        for f in &mut self.functions {
            if f.body.is_empty() {
                line += 1;
                continue;
            }
            line += 1;
            for e in &mut f.body {
                e.line = line;
                line += 1;
            }
            line += 1;
        }
        self
    }
}

pub fn clause_ids(c: &Contract) -> BTreeSet<ClauseId> {
    let mut out = BTreeSet::new();
    for f in &c.functions {
        out.insert(ClauseId::Function {
            from: f.from.clone(),
            name: f.name.clone(),
            to: f.to.clone(),
        });
        for e in &f.body {
            out.insert(ClauseId::Event {
                from: e.from.clone(),
                line: e.line,
                to: e.to.clone(),
            });
        }
    }
    out
}

/// Canonical layout. Event line-codes in the output are positional, so
/// `parse(render(c)) == c.renumbered()`.
pub fn render(c: &Contract) -> String {
    let mut out = format!("stipula {} {{\n  init {}\n", c.name, c.init);
    for f in &c.functions {
        if f.body.is_empty() {
            out.push_str(&format!("  @{} {} {{ }} => @{}\n", f.from, f.name, f.to));
            continue;
        }
        out.push_str(&format!("  @{} {} {{\n", f.from, f.name));
        for e in &f.body {
            let time = match e.time.offset {
                0 => "now".to_string(),
                k => format!("now + {k}"),
            };
            out.push_str(&format!("    {time} >> @{} => @{}\n", e.from, e.to));
        }
        out.push_str(&format!("  }} => @{}\n", f.to));
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(u32),
    At,
    LBrace,
    RBrace,
    Plus,
    Shift,
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Nat(n) => write!(f, "`{n}`"),
            Tok::At => f.write_str("`@`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Shift => f.write_str("`>>`"),
            Tok::Arrow => f.write_str("`=>`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: u32,
    column: u32,
}

fn syntax(line: u32, column: u32, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let mut push = |tok: Tok| {
            toks.push(Spanned {
                tok,
                line: start_line,
                column: start_col,
            })
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '@' => push(Tok::At),
            '{' => push(Tok::LBrace),
            '}' => push(Tok::RBrace),
            '+' => push(Tok::Plus),
            '>' if chars.get(i + 1) == Some(&'>') => {
                push(Tok::Shift);
                i += 2;
                col += 2;
                continue;
            }
            '=' if chars.get(i + 1) == Some(&'>') => {
                push(Tok::Arrow);
                i += 2;
                col += 2;
                continue;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let n = digits
                    .parse::<u32>()
                    .map_err(|_| syntax(start_line, start_col, "number out of range"))?;
                push(Tok::Nat(n));
                col += (i - start) as u32;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                push(Tok::Ident(chars[start..i].iter().collect()));
                col += (i - start) as u32;
                continue;
            }
            other => return Err(syntax(line, col, format!("unexpected character {other:?}"))),
        }
        i += 1;
        col += 1;
    }
    toks.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(toks)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let t = self.peek();
        syntax(t.line, t.column, format!("expected {expected}, found {}", t.tok))
    }

    fn expect(&mut self, tok: Tok) -> Result<Spanned, ParseError> {
        if self.peek().tok == tok {
            Ok(self.next())
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Spanned, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => Ok(self.next()),
            _ => Err(self.unexpected(&format!("`{kw}`"))),
        }
    }

    fn state(&mut self) -> Result<StateName, ParseError> {
        self.expect(Tok::At)?;
        Ok(StateName::new(&self.ident()?))
    }

    fn contract(&mut self) -> Result<Contract, ParseError> {
        self.keyword("stipula")?;
        let name = self.ident()?;
        self.expect(Tok::LBrace)?;
        self.keyword("init")?;
        // `init Q` and `init @Q` are both accepted.
        if self.peek().tok == Tok::At {
            self.next();
        }
        let init = StateName::new(&self.ident()?);
        let mut functions = Vec::new();
        while self.peek().tok == Tok::At {
            functions.push(self.function()?);
        }
        self.expect(Tok::RBrace)?;
        if self.peek().tok != Tok::Eof {
            return Err(self.unexpected("end of input"));
        }
        Ok(Contract { name, init, functions })
    }

    fn function(&mut self) -> Result<FunctionDecl, ParseError> {
        let from = self.state()?;
        let name = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut body = Vec::new();
        while self.peek().tok != Tok::RBrace {
            body.push(self.event()?);
        }
        self.next();
        self.expect(Tok::Arrow)?;
        let to = self.state()?;
        Ok(FunctionDecl { from, name, body, to })
    }

    fn event(&mut self) -> Result<EventDecl, ParseError> {
        let now = match &self.peek().tok {
            Tok::Ident(s) if s == "now" => self.next(),
            _ => return Err(self.unexpected("`now` or `}`")),
        };
        let offset = if self.peek().tok == Tok::Plus {
            self.next();
            match self.peek().tok {
                Tok::Nat(n) => {
                    self.next();
                    n
                }
                _ => return Err(self.unexpected("a natural number")),
            }
        } else {
            0
        };
        self.expect(Tok::Shift)?;
        let from = self.state()?;
        self.expect(Tok::Arrow)?;
        let to = self.state()?;
        Ok(EventDecl {
            time: TimeExpr { offset },
            from,
            to,
            line: now.line,
        })
    }
}

pub fn parse(text: &str) -> Result<Contract, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let c = p.contract()?;
    c.validate()?;
    Ok(c)
}
