//! The workspace description language: schema, instance, procedure and goal
//! blocks in one UTF-8 text file (`.wf`), with `#` line comments.
//!
//! ```text
//! schema {
//!   relation LocVisits(facility, pId, timestp)
//! }
//! instance {
//!   LocVisits(facility: 1234, pId: 33, timestp: "070916 12:00")
//! }
//! procedure migrate {
//!   scope { LocVisits[*] }
//!   post { tgd: EVisits(facility: x, pId: y, timestp: z)
//!              -> LocVisits(facility: x, pId: y, timestp: z) }
//!   preserve { total LocVisits }
//! }
//! goal g1 { query: LocVisits(facility: x, insId: y) }
//! ```
//!
//! Terms are lowercase identifiers (variables) or quoted / numeric literals
//! (constants). Every diagnostic carries a line and column.

use std::collections::BTreeSet;
use std::fmt;

use chasemith_core::lang::{Cq, Egd, NamedAtom, StructureConstraint, Term, Tgd, TotalQuery, Var};
use chasemith_core::model::{AttrName, Instance, RelName, Schema, Tuple, Value};
use chasemith_core::procedures::{classify, Condition, PreserveQuery, Procedure, ProcedureClass};

/// A parsed workspace: one schema, one instance over it, the procedure
/// catalog in declaration order, and named goals.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub schema: Schema,
    pub instance: Instance,
    pub catalog: Vec<Procedure>,
    pub goals: Vec<(String, Goal)>,
}

#[derive(Debug, Clone)]
pub enum Goal {
    Tgd(Tgd),
    Egd(Egd),
    Query(Cq),
}

impl Workspace {
    pub fn procedure(&self, name: &str) -> Option<&Procedure> {
        self.catalog.iter().find(|p| p.name == name)
    }

    pub fn goal(&self, name: &str) -> Option<&Goal> {
        self.goals.iter().find(|(n, _)| n == name).map(|(_, g)| g)
    }

    pub fn classes(&self) -> Vec<(String, ProcedureClass)> {
        self.catalog
            .iter()
            .map(|p| (p.name.clone(), classify(p)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(String),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Arrow,
    Equals,
    Star,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier {s}"),
            Tok::Int(s) => write!(f, "number {s}"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::LBrace => write!(f, "'{{'"),
            Tok::RBrace => write!(f, "'}}'"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::LBracket => write!(f, "'['"),
            Tok::RBracket => write!(f, "']'"),
            Tok::Comma => write!(f, "','"),
            Tok::Colon => write!(f, "':'"),
            Tok::Arrow => write!(f, "'->'"),
            Tok::Equals => write!(f, "'='"),
            Tok::Star => write!(f, "'*'"),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            // Skip whitespace and comments.
            loop {
                match self.chars.peek() {
                    Some(c) if c.is_whitespace() => {
                        self.bump();
                    }
                    Some('#') => {
                        while let Some(c) = self.bump() {
                            if c == '\n' {
                                break;
                            }
                        }
                    }
                    _ => break,
                }
            }
            let (line, col) = (self.line, self.col);
            let c = match self.chars.peek() {
                Some(c) => *c,
                None => return Ok(out),
            };
            let tok = match c {
                '{' => {
                    self.bump();
                    Tok::LBrace
                }
                '}' => {
                    self.bump();
                    Tok::RBrace
                }
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                '[' => {
                    self.bump();
                    Tok::LBracket
                }
                ']' => {
                    self.bump();
                    Tok::RBracket
                }
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                ':' => {
                    self.bump();
                    Tok::Colon
                }
                '=' => {
                    self.bump();
                    Tok::Equals
                }
                '*' => {
                    self.bump();
                    Tok::Star
                }
                '-' => {
                    self.bump();
                    match self.chars.peek() {
                        Some('>') => {
                            self.bump();
                            Tok::Arrow
                        }
                        Some(d) if d.is_ascii_digit() => {
                            let mut digits = String::from("-");
                            while let Some(d) = self.chars.peek() {
                                if d.is_ascii_digit() {
                                    digits.push(*d);
                                    self.bump();
                                } else {
                                    break;
                                }
                            }
                            Tok::Int(canonical_int(&digits))
                        }
                        _ => return Err(self.error("expected '->' or a number after '-'")),
                    }
                }
                '"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            None => return Err(self.error("unterminated string literal")),
                            Some('"') => break,
                            Some('\\') => match self.bump() {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                other => {
                                    return Err(self.error(format!(
                                        "unknown escape {:?}",
                                        other.map(String::from).unwrap_or_default()
                                    )))
                                }
                            },
                            Some(c) => s.push(c),
                        }
                    }
                    Tok::Str(s)
                }
                d if d.is_ascii_digit() => {
                    let mut digits = String::new();
                    while let Some(d) = self.chars.peek() {
                        if d.is_ascii_digit() {
                            digits.push(*d);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Int(canonical_int(&digits))
                }
                a if a.is_ascii_alphabetic() || a == '_' => {
                    let mut ident = String::new();
                    while let Some(a) = self.chars.peek() {
                        if a.is_ascii_alphanumeric() || *a == '_' {
                            ident.push(*a);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(ident)
                }
                other => return Err(self.error(format!("unexpected character {other:?}"))),
            };
            out.push((tok, line, col));
        }
    }
}

fn canonical_int(digits: &str) -> String {
    digits
        .parse::<i128>()
        .map(|n| n.to_string())
        .unwrap_or_else(|_| digits.to_string())
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .map(|(_, l, c)| (*l, *c))
            .or_else(|| self.tokens.last().map(|(_, l, c)| (*l, *c)))
            .unwrap_or((1, 1))
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }

    fn core_error(&self, e: chasemith_core::Error) -> ParseError {
        self.error(e.to_string())
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _, _)| t)
    }

    fn next(&mut self) -> Result<Tok, ParseError> {
        let tok = self
            .tokens
            .get(self.pos)
            .map(|(t, _, _)| t.clone())
            .ok_or_else(|| self.error("unexpected end of input"))?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let got = self.next()?;
        if got == want {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.error(format!("expected {want}, found {got}")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            got => {
                self.pos -= 1;
                Err(self.error(format!("expected an identifier, found {got}")))
            }
        }
    }

    fn keyword(&mut self, word: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn workspace(&mut self) -> Result<Workspace, ParseError> {
        let mut schema = Schema::new();
        let mut declared: BTreeSet<String> = BTreeSet::new();
        let mut facts: Vec<(RelName, Tuple, usize, usize)> = Vec::new();
        let mut catalog: Vec<Procedure> = Vec::new();
        let mut goals: Vec<(String, Goal)> = Vec::new();

        while self.peek().is_some() {
            if self.keyword("schema") {
                self.expect(Tok::LBrace)?;
                while !self.keyword_rbrace()? {
                    if !self.keyword("relation") {
                        return Err(self.error("expected 'relation' or '}' in schema block"));
                    }
                    let name = self.ident()?;
                    if !declared.insert(name.clone()) {
                        return Err(self.error(format!("duplicate relation {name}")));
                    }
                    self.expect(Tok::LParen)?;
                    let mut attrs = Vec::new();
                    if !matches!(self.peek(), Some(Tok::RParen)) {
                        loop {
                            attrs.push(AttrName::new(self.ident()?));
                            if matches!(self.peek(), Some(Tok::Comma)) {
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    schema
                        .add_relation(RelName::new(&name), attrs)
                        .map_err(|e| self.core_error(e))?;
                }
            } else if self.keyword("instance") {
                self.expect(Tok::LBrace)?;
                while !self.keyword_rbrace()? {
                    let (line, col) = self.here();
                    let rel = RelName::new(self.ident()?);
                    self.expect(Tok::LParen)?;
                    let mut tuple = Tuple::new();
                    if !matches!(self.peek(), Some(Tok::RParen)) {
                        loop {
                            let attr = AttrName::new(self.ident()?);
                            self.expect(Tok::Colon)?;
                            let value = self.value()?;
                            if tuple.insert(attr.clone(), value).is_some() {
                                return Err(
                                    self.error(format!("duplicate attribute {attr} in tuple"))
                                );
                            }
                            if matches!(self.peek(), Some(Tok::Comma)) {
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    facts.push((rel, tuple, line, col));
                }
            } else if self.keyword("procedure") {
                let name = self.ident()?;
                if catalog.iter().any(|p| p.name == name) {
                    return Err(self.error(format!("duplicate procedure {name}")));
                }
                self.expect(Tok::LBrace)?;
                let mut scope = Vec::new();
                let mut pre = Vec::new();
                let mut post = Vec::new();
                let mut preserve = Vec::new();
                while !self.keyword_rbrace()? {
                    if self.keyword("scope") {
                        self.expect(Tok::LBrace)?;
                        while !self.keyword_rbrace()? {
                            scope.push(self.structure_constraint()?);
                        }
                    } else if self.keyword("pre") {
                        self.expect(Tok::LBrace)?;
                        while !self.keyword_rbrace()? {
                            pre.push(self.condition()?);
                        }
                    } else if self.keyword("post") {
                        self.expect(Tok::LBrace)?;
                        while !self.keyword_rbrace()? {
                            post.push(self.condition()?);
                        }
                    } else if self.keyword("preserve") {
                        self.expect(Tok::LBrace)?;
                        while !self.keyword_rbrace()? {
                            if self.keyword("total") {
                                preserve.push(PreserveQuery::Total(TotalQuery {
                                    rel: RelName::new(self.ident()?),
                                }));
                            } else if self.keyword("query") {
                                self.expect(Tok::Colon)?;
                                let atoms = self.atom_list()?;
                                let cq = Cq::all_free(atoms).map_err(|e| self.core_error(e))?;
                                preserve.push(PreserveQuery::Cq(cq));
                            } else {
                                return Err(self.error(
                                    "expected 'total <relation>' or 'query: <atoms>' in preserve",
                                ));
                            }
                        }
                    } else {
                        return Err(
                            self.error("expected 'scope', 'pre', 'post', 'preserve' or '}'")
                        );
                    }
                }
                catalog.push(Procedure {
                    name,
                    scope,
                    pre,
                    post,
                    preserve,
                });
            } else if self.keyword("goal") {
                let name = self.ident()?;
                if goals.iter().any(|(n, _)| n == &name) {
                    return Err(self.error(format!("duplicate goal {name}")));
                }
                self.expect(Tok::LBrace)?;
                let goal = if self.keyword("tgd") {
                    self.expect(Tok::Colon)?;
                    Goal::Tgd(self.tgd()?)
                } else if self.keyword("egd") {
                    self.expect(Tok::Colon)?;
                    Goal::Egd(self.egd()?)
                } else if self.keyword("query") {
                    self.expect(Tok::Colon)?;
                    let atoms = self.atom_list()?;
                    Goal::Query(Cq::boolean(atoms).map_err(|e| self.core_error(e))?)
                } else {
                    return Err(self.error("expected 'tgd:', 'egd:' or 'query:' in goal"));
                };
                self.expect(Tok::RBrace)?;
                goals.push((name, goal));
            } else {
                return Err(self.error("expected 'schema', 'instance', 'procedure' or 'goal'"));
            }
        }

        let mut instance = Instance::empty(schema.clone());
        for (rel, tuple, line, col) in facts {
            instance.insert(&rel, tuple).map_err(|e| ParseError {
                line,
                col,
                message: e.to_string(),
            })?;
        }
        Ok(Workspace {
            schema,
            instance,
            catalog,
            goals,
        })
    }

    /// Consumes a closing brace if present; errors at end of input.
    fn keyword_rbrace(&mut self) -> Result<bool, ParseError> {
        match self.peek() {
            Some(Tok::RBrace) => {
                self.pos += 1;
                Ok(true)
            }
            Some(_) => Ok(false),
            None => Err(self.error("unexpected end of input, expected '}'")),
        }
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        match self.next()? {
            Tok::Int(s) => Ok(Value::atom(s)),
            Tok::Str(s) => Ok(Value::atom(s)),
            got => {
                self.pos -= 1;
                Err(self.error(format!(
                    "expected a constant (number or quoted string), found {got}"
                )))
            }
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.next()? {
            Tok::Int(s) => Ok(Term::Const(Value::atom(s))),
            Tok::Str(s) => Ok(Term::Const(Value::atom(s))),
            Tok::Ident(s) => {
                if s.starts_with(|c: char| c.is_ascii_lowercase()) {
                    Ok(Term::Var(Var::new(s)))
                } else {
                    self.pos -= 1;
                    Err(self.error(format!(
                        "variables are lowercase; write \"{s}\" for the constant {s}"
                    )))
                }
            }
            got => {
                self.pos -= 1;
                Err(self.error(format!("expected a term, found {got}")))
            }
        }
    }

    fn atom(&mut self) -> Result<NamedAtom, ParseError> {
        let rel = RelName::new(self.ident()?);
        self.expect(Tok::LParen)?;
        let mut bindings = Vec::new();
        if !matches!(self.peek(), Some(Tok::RParen)) {
            loop {
                let attr = AttrName::new(self.ident()?);
                self.expect(Tok::Colon)?;
                let term = self.term()?;
                bindings.push((attr, term));
                if matches!(self.peek(), Some(Tok::Comma)) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        NamedAtom::new(rel, bindings).map_err(|e| self.core_error(e))
    }

    /// A comma-separated atom list; stops when the next tokens no longer
    /// look like `Ident (`.
    fn atom_list(&mut self) -> Result<Vec<NamedAtom>, ParseError> {
        let mut atoms = vec![self.atom()?];
        while matches!(self.peek(), Some(Tok::Comma)) {
            self.pos += 1;
            atoms.push(self.atom()?);
        }
        Ok(atoms)
    }

    fn structure_constraint(&mut self) -> Result<StructureConstraint, ParseError> {
        let rel = RelName::new(self.ident()?);
        self.expect(Tok::LBracket)?;
        let out = if matches!(self.peek(), Some(Tok::Star)) {
            self.pos += 1;
            StructureConstraint::wildcard(rel)
        } else {
            let mut attrs = vec![AttrName::new(self.ident()?)];
            while matches!(self.peek(), Some(Tok::Comma)) {
                self.pos += 1;
                attrs.push(AttrName::new(self.ident()?));
            }
            StructureConstraint::attrs(rel, attrs).map_err(|e| self.core_error(e))?
        };
        self.expect(Tok::RBracket)?;
        Ok(out)
    }

    fn tgd(&mut self) -> Result<Tgd, ParseError> {
        let premise = self.atom_list()?;
        self.expect(Tok::Arrow)?;
        let conclusion = self.atom_list()?;
        Tgd::new(premise, conclusion).map_err(|e| self.core_error(e))
    }

    fn egd(&mut self) -> Result<Egd, ParseError> {
        let premise = self.atom_list()?;
        self.expect(Tok::Arrow)?;
        let lhs = self.var()?;
        self.expect(Tok::Equals)?;
        let rhs = self.var()?;
        Egd::new(premise, lhs, rhs).map_err(|e| self.core_error(e))
    }

    fn var(&mut self) -> Result<Var, ParseError> {
        match self.term()? {
            Term::Var(v) => Ok(v),
            Term::Const(_) => {
                self.pos -= 1;
                Err(self.error("expected a variable"))
            }
        }
    }

    fn condition(&mut self) -> Result<Condition, ParseError> {
        if self.keyword("tgd") {
            self.expect(Tok::Colon)?;
            Ok(Condition::Tgd(self.tgd()?))
        } else if self.keyword("egd") {
            self.expect(Tok::Colon)?;
            Ok(Condition::Egd(self.egd()?))
        } else {
            Ok(Condition::Structure(self.structure_constraint()?))
        }
    }
}

/// Parses a workspace description.
pub fn parse_spec(text: &str) -> Result<Workspace, ParseError> {
    let tokens = Lexer::new(text).tokens()?;
    let mut parser = Parser { tokens, pos: 0 };
    parser.workspace()
}

// ---------------------------------------------------------------------------
// Serializer
// ---------------------------------------------------------------------------

/// Renders a workspace back into the description language. Reparsing the
/// output yields an equal workspace (canonical attribute and name order).
pub fn serialize(w: &Workspace) -> String {
    let mut out = String::new();
    out.push_str("schema {\n");
    for (rel, attrs) in w.schema.relations() {
        out.push_str(&format!(
            "  relation {rel}({})\n",
            attrs
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    out.push_str("}\n\ninstance {\n");
    for (rel, tuples) in w.instance.relations() {
        for t in tuples {
            let fields = t
                .iter()
                .map(|(a, v)| format!("{a}: {v}"))
                .collect::<Vec<_>>()
                .join(", ");
            out.push_str(&format!("  {rel}({fields})\n"));
        }
    }
    out.push_str("}\n");
    for p in &w.catalog {
        out.push_str(&format!("\nprocedure {} {{\n", p.name));
        out.push_str("  scope {");
        for c in &p.scope {
            out.push_str(&format!(" {c}"));
        }
        out.push_str(" }\n  pre {");
        for c in &p.pre {
            out.push_str(&format!(" {c}"));
        }
        out.push_str(" }\n  post {");
        for c in &p.post {
            out.push_str(&format!(" {c}"));
        }
        out.push_str(" }\n  preserve {");
        for q in &p.preserve {
            match q {
                PreserveQuery::Total(t) => out.push_str(&format!(" total {}", t.rel)),
                PreserveQuery::Cq(cq) => out.push_str(&format!(" query: {cq}")),
            }
        }
        out.push_str(" }\n}\n");
    }
    for (name, goal) in &w.goals {
        let body = match goal {
            Goal::Tgd(t) => t.to_string(),
            Goal::Egd(e) => e.to_string(),
            Goal::Query(q) => format!("query: {q}"),
        };
        out.push_str(&format!("\ngoal {name} {{ {body} }}\n"));
    }
    out
}
