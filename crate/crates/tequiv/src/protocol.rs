//! Timed protocol language: roles, scenarios, parser and renderer.
//!
//! Identifier conventions inside role bodies: an identifier starting with
//! an uppercase letter is a variable (bound by `new`, or by its first
//! occurrence in a `recv` pattern or on the left of an `if`); any other
//! identifier is a constant resolved against the scenario (player name or
//! text). Inside `pk(..)`/`sk(..)` a constant is always a player name.
//! Time identifiers are role-local unless they occur in a scenario `param`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use num::{BigInt, One, Zero};
use thiserror::Error;

use crate::terms::{name, Name, Sort, Term};
use crate::timecon::{Rat, Rel, TimeConstraint, TimeExpr, TimeVar};

/// Identifier standing for the current global time inside constraints.
pub const CUR: &str = "cur";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cmd {
    New { var: Name, tc: Option<TimeConstraint> },
    Send { term: Term, tc: Option<TimeConstraint> },
    Recv { term: Term, tc: Option<TimeConstraint> },
    If { lhs: Term, rhs: Term, tc: Option<TimeConstraint>, then: Vec<Cmd>, els: Vec<Cmd> },
}

impl Cmd {
    pub fn tc(&self) -> Option<&TimeConstraint> {
        match self {
            Cmd::New { tc, .. } | Cmd::Send { tc, .. } | Cmd::Recv { tc, .. } | Cmd::If { tc, .. } => tc.as_ref(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Role {
    pub name: Name,
    pub body: Vec<Cmd>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayerDecl {
    pub name: Name,
    pub role: Name,
    pub keys: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub name: Name,
    pub players: Vec<PlayerDecl>,
    pub knowledge: Vec<Term>,
    pub public: Vec<Name>,
    pub params: Vec<TimeConstraint>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProtocolFile {
    pub roles: Vec<Role>,
    pub scenarios: Vec<Scenario>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unbound variable `{var}`")]
    Unbound { line: usize, col: usize, var: String },
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("no scenario in input")]
    NoScenario,
    #[error("duplicate definition `{0}`")]
    Duplicate(String),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(Rat),
    Sym(&'static str),
    Eof,
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCT: [&str; 22] = [
    ":=", "<=", ">=", "{", "}", "(", ")", "[", "]", "<", ">", ",", ";", ":", "#", "=", "+", "-", "*", "/", ".", "!",
];

fn lex(src: &str) -> Result<Vec<Lexed>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut out = Vec::new();
    let bump = |c: char, line: &mut usize, col: &mut usize| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump(c, &mut line, &mut col);
            i += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (l0, c0) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Lexed { tok: Tok::Ident(s), line: l0, col: c0 });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let int: String = chars[start..i].iter().collect();
            let mut value = Rat::from_integer(int.parse::<BigInt>().expect("digits"));
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                let fs = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let frac: String = chars[fs..i].iter().collect();
                let denom = num::pow(BigInt::from(10), frac.len());
                value += Rat::new(frac.parse::<BigInt>().expect("digits"), denom);
            }
            col += i - start;
            out.push(Lexed { tok: Tok::Num(value), line: l0, col: c0 });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCT.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len();
                out.push(Lexed { tok: Tok::Sym(p), line: l0, col: c0 });
            }
            None => {
                return Err(ParseError::Syntax { line, col, msg: format!("unexpected character `{c}`") });
            }
        }
    }
    out.push(Lexed { tok: Tok::Eof, line, col });
    Ok(out)
}

fn is_var_name(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

const KEYWORDS: [&str; 16] = [
    "role", "scenario", "new", "send", "recv", "if", "then", "else", "enc", "pk", "sk", "key", "cur", "players",
    "knowledge", "param",
];

/// Where a term is being parsed; decides whether unbound variables bind.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Binding,
    Use,
    Ground,
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    scopes: Vec<BTreeMap<Name, Sort>>,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0, scopes: vec![BTreeMap::new()] })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let l = &self.toks[self.pos];
        Err(ParseError::Syntax { line: l.line, col: l.col, msg: msg.into() })
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(p) if *p == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(i) if i == s)
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_sym(s) {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_kw(s) {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.next();
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {}", describe(&t))),
        }
    }

    fn lookup(&self, v: &str) -> Option<Sort> {
        self.scopes.iter().rev().find_map(|s| s.get(v).copied())
    }

    fn bind(&mut self, v: &str, sort: Sort) {
        self.scopes.last_mut().expect("scope").insert(name(v), sort);
    }

    fn file(&mut self) -> Result<ProtocolFile, ParseError> {
        let mut f = ProtocolFile::default();
        loop {
            if matches!(self.peek(), Tok::Eof) {
                return Ok(f);
            }
            if self.is_kw("role") {
                let r = self.role()?;
                if f.roles.iter().any(|x| x.name == r.name) {
                    return Err(ParseError::Duplicate(r.name.to_string()));
                }
                f.roles.push(r);
            } else if self.is_kw("scenario") {
                let s = self.scenario()?;
                if f.scenarios.iter().any(|x| x.name == s.name) {
                    return Err(ParseError::Duplicate(s.name.to_string()));
                }
                f.scenarios.push(s);
            } else {
                return self.err(format!("expected `role` or `scenario`, found {}", describe(self.peek())));
            }
        }
    }

    fn role(&mut self) -> Result<Role, ParseError> {
        self.expect_kw("role")?;
        let n = self.ident()?;
        self.expect_sym("{")?;
        self.scopes = vec![BTreeMap::new()];
        let body = self.block()?;
        self.expect_sym("}")?;
        Ok(Role { name: name(&n), body })
    }

    fn block(&mut self) -> Result<Vec<Cmd>, ParseError> {
        let mut cmds = Vec::new();
        while !self.is_sym("}") {
            cmds.push(self.cmd()?);
        }
        Ok(cmds)
    }

    fn topt(&mut self) -> Result<Option<TimeConstraint>, ParseError> {
        if self.is_sym("#") {
            self.next();
            Ok(Some(self.tcon()?))
        } else {
            Ok(None)
        }
    }

    fn cmd(&mut self) -> Result<Cmd, ParseError> {
        match self.peek().clone() {
            Tok::Ident(k) if k == "new" => {
                self.next();
                let v = self.ident()?;
                if !is_var_name(&v) {
                    return self.err(format!("`new` needs a variable (uppercase identifier), found `{v}`"));
                }
                let tc = self.topt()?;
                self.expect_sym(";")?;
                self.bind(&v, Sort::Nonce);
                Ok(Cmd::New { var: name(&v), tc })
            }
            Tok::Ident(k) if k == "send" => {
                self.next();
                let term = self.term(Ctx::Use)?;
                let tc = self.topt()?;
                self.expect_sym(";")?;
                Ok(Cmd::Send { term, tc })
            }
            Tok::Ident(k) if k == "recv" => {
                self.next();
                let term = self.term(Ctx::Binding)?;
                let tc = self.topt()?;
                self.expect_sym(";")?;
                Ok(Cmd::Recv { term, tc })
            }
            Tok::Ident(k) if k == "if" => {
                self.next();
                self.scopes.push(BTreeMap::new());
                let lhs = self.term(Ctx::Binding)?;
                self.expect_sym(":=")?;
                let rhs = self.term(Ctx::Use)?;
                let tc = self.topt()?;
                self.expect_kw("then")?;
                self.expect_sym("{")?;
                let then = self.block()?;
                self.expect_sym("}")?;
                self.scopes.pop();
                self.expect_kw("else")?;
                self.expect_sym("{")?;
                self.scopes.push(BTreeMap::new());
                let els = self.block()?;
                self.scopes.pop();
                self.expect_sym("}")?;
                Ok(Cmd::If { lhs, rhs, tc, then, els })
            }
            t => self.err(format!("expected a command, found {}", describe(&t))),
        }
    }

    fn var_or_const(&mut self, id: &str, ctx: Ctx, owner: bool) -> Result<Term, ParseError> {
        if ctx == Ctx::Ground || !is_var_name(id) {
            return Ok(if owner { Term::player(id) } else { Term::text(id) });
        }
        if let Some(sort) = self.lookup(id) {
            return Ok(Term::Var(name(id), sort));
        }
        if ctx == Ctx::Binding {
            let sort = if owner { Sort::Player } else { Sort::Msg };
            self.bind(id, sort);
            return Ok(Term::Var(name(id), sort));
        }
        let l = &self.toks[self.pos.saturating_sub(1)];
        Err(ParseError::Unbound { line: l.line, col: l.col, var: id.to_string() })
    }

    fn term(&mut self, ctx: Ctx) -> Result<Term, ParseError> {
        if self.is_sym("<") {
            self.next();
            let mut elems = vec![self.term(ctx)?];
            while self.is_sym(",") {
                self.next();
                elems.push(self.term(ctx)?);
            }
            self.expect_sym(">")?;
            if elems.len() < 2 {
                return self.err("a tuple needs at least two elements");
            }
            return Ok(Term::Tuple(elems));
        }
        match self.peek().clone() {
            Tok::Ident(k) if k == "enc" => {
                self.next();
                self.expect_sym("(")?;
                let m = self.term(ctx)?;
                self.expect_sym(",")?;
                let key = self.term(ctx)?;
                self.expect_sym(")")?;
                Ok(Term::enc(m, key))
            }
            Tok::Ident(k) if k == "pk" || k == "sk" => {
                self.next();
                self.expect_sym("(")?;
                let id = self.ident()?;
                let owner = self.var_or_const(&id, ctx, true)?;
                self.expect_sym(")")?;
                Ok(if k == "pk" { Term::pk(owner) } else { Term::sk(owner) })
            }
            Tok::Ident(k) if k == "key" => {
                self.next();
                let id = self.ident()?;
                if is_var_name(&id) && ctx != Ctx::Ground {
                    if let Some(sort) = self.lookup(&id) {
                        return Ok(Term::Var(name(&id), sort));
                    }
                }
                Ok(Term::symk(&id))
            }
            Tok::Ident(_) => {
                let id = self.ident()?;
                self.var_or_const(&id, ctx, false)
            }
            t => self.err(format!("expected a term, found {}", describe(&t))),
        }
    }

    fn tcon(&mut self) -> Result<TimeConstraint, ParseError> {
        let lhs = self.texpr()?;
        let rel = match self.next() {
            Tok::Sym("=") => Rel::Eq,
            Tok::Sym("<=") => Rel::Le,
            Tok::Sym("<") => Rel::Lt,
            Tok::Sym(">") => Rel::Gt,
            Tok::Sym(">=") => Rel::Ge,
            t => {
                self.pos -= 1;
                return self.err(format!("expected a relation, found {}", describe(&t)));
            }
        };
        let rhs = self.texpr()?;
        Ok(TimeConstraint::new(lhs, rel, rhs))
    }

    fn texpr(&mut self) -> Result<TimeExpr, ParseError> {
        let mut acc = self.tterm()?;
        loop {
            if self.is_sym("+") {
                self.next();
                acc = acc.add(&self.tterm()?);
            } else if self.is_sym("-") {
                self.next();
                acc = acc.sub(&self.tterm()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn number(&mut self) -> Result<Rat, ParseError> {
        let Tok::Num(n) = self.next() else { unreachable!() };
        if self.is_sym("/") && matches!(self.peek_at(1), Tok::Num(_)) {
            self.next();
            let Tok::Num(d) = self.next() else { unreachable!() };
            if d.is_zero() {
                return self.err("division by zero");
            }
            return Ok(n / d);
        }
        Ok(n)
    }

    fn tterm(&mut self) -> Result<TimeExpr, ParseError> {
        if self.is_sym("-") {
            self.next();
            return Ok(self.tterm()?.scale(&-Rat::one()));
        }
        if matches!(self.peek(), Tok::Num(_)) {
            let n = self.number()?;
            if self.is_sym("*") {
                self.next();
                return Ok(self.tatom()?.scale(&n));
            }
            return Ok(TimeExpr::constant(n));
        }
        self.tatom()
    }

    fn tatom(&mut self) -> Result<TimeExpr, ParseError> {
        if self.is_sym("(") {
            self.next();
            let e = self.texpr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        match self.peek().clone() {
            Tok::Ident(s) if s == CUR => {
                self.next();
                Ok(TimeExpr::var(TimeVar::Param(name(CUR))))
            }
            Tok::Ident(_) => {
                let id = self.ident()?;
                Ok(TimeExpr::var(TimeVar::Param(name(&id))))
            }
            Tok::Num(_) => Ok(TimeExpr::constant(self.number()?)),
            t => self.err(format!("expected a time expression, found {}", describe(&t))),
        }
    }

    fn ground_terms_in_braces(&mut self) -> Result<Vec<Term>, ParseError> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.is_sym("}") {
            out.push(self.term(Ctx::Ground)?);
            if self.is_sym(",") {
                self.next();
            }
        }
        self.expect_sym("}")?;
        Ok(out)
    }

    fn scenario(&mut self) -> Result<Scenario, ParseError> {
        self.expect_kw("scenario")?;
        let n = self.ident()?;
        self.expect_sym("{")?;
        self.expect_kw("players")?;
        self.expect_sym(":")?;
        self.expect_sym("[")?;
        let mut players = Vec::new();
        if !self.is_sym("]") {
            loop {
                players.push(self.player()?);
                if self.is_sym(",") {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect_sym("]")?;
        self.expect_sym(";")?;
        self.expect_kw("knowledge")?;
        self.expect_sym(":")?;
        let knowledge = self.ground_terms_in_braces()?;
        self.expect_sym(";")?;
        let mut public = Vec::new();
        if self.is_kw("public") {
            self.next();
            self.expect_sym(":")?;
            self.expect_sym("{")?;
            while !self.is_sym("}") {
                public.push(name(&self.ident()?));
                if self.is_sym(",") {
                    self.next();
                }
            }
            self.expect_sym("}")?;
            self.expect_sym(";")?;
        }
        let mut params = Vec::new();
        while self.is_kw("param") {
            self.next();
            params.push(self.tcon()?);
            self.expect_sym(";")?;
        }
        self.expect_sym("}")?;
        Ok(Scenario { name: name(&n), players, knowledge, public, params })
    }

    fn player(&mut self) -> Result<PlayerDecl, ParseError> {
        let n = self.ident()?;
        self.expect_kw("as")?;
        let role = self.ident()?;
        let keys = if self.is_kw("keys") {
            self.next();
            self.ground_terms_in_braces()?
        } else {
            Vec::new()
        };
        Ok(PlayerDecl { name: name(&n), role: name(&role), keys })
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(n) => format!("number {n}"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

pub fn parse_file(src: &str) -> Result<ProtocolFile, ParseError> {
    Parser::new(src)?.file()
}

/// Parses a single `role` definition.
pub fn parse_role(src: &str) -> Result<Role, ParseError> {
    let mut p = Parser::new(src)?;
    let r = p.role()?;
    if !matches!(p.peek(), Tok::Eof) {
        return p.err("trailing input after role");
    }
    Ok(r)
}

/// Parses a role body (a command sequence without the `role` wrapper).
pub fn parse_body(src: &str) -> Result<Vec<Cmd>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut cmds = Vec::new();
    while !matches!(p.peek(), Tok::Eof) {
        cmds.push(p.cmd()?);
    }
    Ok(cmds)
}

impl ProtocolFile {
    pub fn role(&self, n: &str) -> Option<&Role> {
        self.roles.iter().find(|r| &*r.name == n)
    }

    pub fn scenario(&self, n: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| &*s.name == n)
    }

    /// Resolves a scenario by name, or the only scenario when `n` is `None`.
    pub fn resolve(&self, n: Option<&str>) -> Result<ResolvedScenario, ParseError> {
        let sc = match n {
            Some(n) => self.scenario(n).ok_or_else(|| ParseError::UnknownScenario(n.into()))?,
            None => self.scenarios.first().ok_or(ParseError::NoScenario)?,
        };
        ResolvedScenario::new(self, sc)
    }
}

/// A player with its role body resolved against the scenario vocabulary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedPlayer {
    pub name: Name,
    pub body: Vec<Cmd>,
    pub keys: Vec<Term>,
}

/// A scenario ready to become an initial configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedScenario {
    pub name: Name,
    pub players: Vec<ResolvedPlayer>,
    pub knowledge: Vec<Term>,
    pub params: Vec<TimeConstraint>,
    pub param_names: BTreeSet<Name>,
}

struct Vocab {
    players: BTreeSet<Name>,
    public: BTreeSet<Name>,
    params: BTreeSet<Name>,
}

impl Vocab {
    fn term(&self, t: &Term) -> Term {
        match t {
            Term::Text { name, .. } if self.players.contains(name) => Term::Player(name.clone()),
            Term::Text { name, .. } => Term::Text { name: name.clone(), public: self.public.contains(name) },
            Term::Pk(o) => Term::pk(self.term(o)),
            Term::Sk(o) => Term::sk(self.term(o)),
            Term::Enc(m, k) => Term::enc(self.term(m), self.term(k)),
            Term::Tuple(es) => Term::Tuple(es.iter().map(|e| self.term(e)).collect()),
            other => other.clone(),
        }
    }

    fn tc(&self, c: &TimeConstraint) -> TimeConstraint {
        c.rename(&|v| match v {
            TimeVar::Param(n) if &**n != CUR && !self.params.contains(n) => TimeVar::Local(0, n.clone()),
            other => other.clone(),
        })
    }

    fn cmds(&self, cmds: &[Cmd]) -> Vec<Cmd> {
        cmds.iter()
            .map(|c| match c {
                Cmd::New { var, tc } => Cmd::New { var: var.clone(), tc: tc.as_ref().map(|c| self.tc(c)) },
                Cmd::Send { term, tc } => Cmd::Send { term: self.term(term), tc: tc.as_ref().map(|c| self.tc(c)) },
                Cmd::Recv { term, tc } => Cmd::Recv { term: self.term(term), tc: tc.as_ref().map(|c| self.tc(c)) },
                Cmd::If { lhs, rhs, tc, then, els } => Cmd::If {
                    lhs: self.term(lhs),
                    rhs: self.term(rhs),
                    tc: tc.as_ref().map(|c| self.tc(c)),
                    then: self.cmds(then),
                    els: self.cmds(els),
                },
            })
            .collect()
    }
}

fn owners(t: &Term, out: &mut BTreeSet<Name>) {
    match t {
        Term::Pk(o) | Term::Sk(o) => {
            if let Term::Player(n) | Term::Text { name: n, .. } = &**o {
                out.insert(n.clone());
            }
        }
        Term::Enc(m, k) => {
            owners(m, out);
            owners(k, out);
        }
        Term::Tuple(es) => es.iter().for_each(|e| owners(e, out)),
        _ => {}
    }
}

fn cmd_terms<'a>(cmds: &'a [Cmd], out: &mut Vec<&'a Term>) {
    for c in cmds {
        match c {
            Cmd::New { .. } => {}
            Cmd::Send { term, .. } | Cmd::Recv { term, .. } => out.push(term),
            Cmd::If { lhs, rhs, then, els, .. } => {
                out.push(lhs);
                out.push(rhs);
                cmd_terms(then, out);
                cmd_terms(els, out);
            }
        }
    }
}

impl ResolvedScenario {
    pub fn new(file: &ProtocolFile, sc: &Scenario) -> Result<Self, ParseError> {
        let mut roles = Vec::new();
        for p in &sc.players {
            roles.push(file.role(&p.role).ok_or_else(|| ParseError::UnknownRole(p.role.to_string()))?);
        }
        let mut players: BTreeSet<Name> = sc.players.iter().map(|p| p.name.clone()).collect();
        let mut all_terms: Vec<&Term> = sc.knowledge.iter().collect();
        for p in &sc.players {
            all_terms.extend(p.keys.iter());
        }
        for r in &roles {
            cmd_terms(&r.body, &mut all_terms);
        }
        for t in all_terms {
            owners(t, &mut players);
        }
        let params: BTreeSet<Name> = sc
            .params
            .iter()
            .flat_map(|c| c.vars())
            .filter_map(|v| if let TimeVar::Param(n) = v { Some(n) } else { None })
            .collect();
        let vocab = Vocab { players, public: sc.public.iter().cloned().collect(), params: params.clone() };
        let resolved = sc
            .players
            .iter()
            .zip(&roles)
            .map(|(p, r)| ResolvedPlayer {
                name: p.name.clone(),
                body: vocab.cmds(&r.body),
                keys: p.keys.iter().map(|k| vocab.term(k)).collect(),
            })
            .collect();
        Ok(ResolvedScenario {
            name: sc.name.clone(),
            players: resolved,
            knowledge: sc.knowledge.iter().map(|t| vocab.term(t)).collect(),
            params: sc.params.clone(),
            param_names: params,
        })
    }
}

/// Loads `path[:scenario]` where the file holds roles and scenarios.
pub fn load_scenario(spec: &str) -> Result<ResolvedScenario, LoadError> {
    let (path, sc) = match spec.rsplit_once(':') {
        Some((p, s)) if !s.contains('/') && !s.is_empty() && !p.is_empty() => (p, Some(s)),
        _ => (spec, None),
    };
    let src = read_with_includes(std::path::Path::new(path), 0)?;
    let file = parse_file(&src).map_err(|e| LoadError::Parse(path.to_string(), e))?;
    file.resolve(sc).map_err(|e| LoadError::Parse(path.to_string(), e))
}

/// Reads a file, splicing in lines of the form `include "other";` with the
/// named file (relative to the including one).
fn read_with_includes(path: &std::path::Path, depth: usize) -> Result<String, LoadError> {
    let shown = path.display().to_string();
    if depth > 8 {
        return Err(LoadError::Io(shown, "include nesting too deep".into()));
    }
    let src = std::fs::read_to_string(path).map_err(|e| LoadError::Io(shown.clone(), e.to_string()))?;
    let mut out = String::new();
    for line in src.lines() {
        let t = line.trim();
        let inc = t.strip_prefix("include").and_then(|r| r.trim().strip_suffix(';')).map(str::trim);
        match inc.and_then(|r| r.strip_prefix('"')).and_then(|r| r.strip_suffix('"')) {
            Some(rel) => {
                let target = path.parent().unwrap_or(std::path::Path::new(".")).join(rel);
                out.push_str(&read_with_includes(&target, depth + 1)?);
            }
            None => out.push_str(line),
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("{0}: {1}")]
    Parse(String, ParseError),
}

fn render_term(t: &Term, out: &mut String) {
    match t {
        Term::Text { name, .. } | Term::Player(name) | Term::Var(name, _) => out.push_str(name),
        Term::SymKey(n) => {
            let _ = write!(out, "key {n}");
        }
        Term::Pk(o) | Term::Sk(o) => {
            out.push_str(if matches!(t, Term::Pk(_)) { "pk(" } else { "sk(" });
            render_term(o, out);
            out.push(')');
        }
        Term::Enc(m, k) => {
            out.push_str("enc(");
            render_term(m, out);
            out.push_str(", ");
            render_term(k, out);
            out.push(')');
        }
        Term::Tuple(es) => {
            out.push('<');
            for (i, e) in es.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_term(e, out);
            }
            out.push('>');
        }
        Term::Nonce(..) | Term::Sym(_) => {
            let _ = write!(out, "{t}");
        }
    }
}

pub fn render_term_dsl(t: &Term) -> String {
    let mut s = String::new();
    render_term(t, &mut s);
    s
}

fn render_tc(tc: &Option<TimeConstraint>, out: &mut String) {
    if let Some(c) = tc {
        let _ = write!(out, " # {}", render_tcon(c));
    }
}

fn render_texpr(e: &TimeExpr) -> String {
    let mut parts: Vec<String> = Vec::new();
    for (v, c) in &e.coeffs {
        let n = match v {
            TimeVar::Param(n) | TimeVar::Local(_, n) => n.to_string(),
            TimeVar::Clock(i) => format!("tG{i}"),
        };
        parts.push(if c.is_one() { n } else { format!("{}*{n}", render_rat(c)) });
    }
    if !e.constant.is_zero() || parts.is_empty() {
        parts.push(render_rat(&e.constant));
    }
    parts.join(" + ")
}

fn render_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn render_tcon(c: &TimeConstraint) -> String {
    format!("{} {} {}", render_texpr(&c.lhs), c.rel.symbol(), render_texpr(&c.rhs))
}

fn render_cmds(cmds: &[Cmd], indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    for c in cmds {
        out.push_str(&pad);
        match c {
            Cmd::New { var, tc } => {
                let _ = write!(out, "new {var}");
                render_tc(tc, out);
                out.push_str(";\n");
            }
            Cmd::Send { term, tc } | Cmd::Recv { term, tc } => {
                out.push_str(if matches!(c, Cmd::Send { .. }) { "send " } else { "recv " });
                render_term(term, out);
                render_tc(tc, out);
                out.push_str(";\n");
            }
            Cmd::If { lhs, rhs, tc, then, els } => {
                out.push_str("if ");
                render_term(lhs, out);
                out.push_str(" := ");
                render_term(rhs, out);
                render_tc(tc, out);
                out.push_str(" then {\n");
                render_cmds(then, indent + 1, out);
                let _ = writeln!(out, "{pad}}} else {{");
                render_cmds(els, indent + 1, out);
                let _ = writeln!(out, "{pad}}}");
            }
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = format!("role {} {{\n", self.name);
        render_cmds(&self.body, 1, &mut s);
        s.push_str("}\n");
        f.write_str(&s)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {} {{", self.name)?;
        let players: Vec<String> = self
            .players
            .iter()
            .map(|p| {
                if p.keys.is_empty() {
                    format!("{} as {}", p.name, p.role)
                } else {
                    let ks: Vec<String> = p.keys.iter().map(render_term_dsl).collect();
                    format!("{} as {} keys {{ {} }}", p.name, p.role, ks.join(", "))
                }
            })
            .collect();
        writeln!(f, "  players: [{}];", players.join(", "))?;
        let ks: Vec<String> = self.knowledge.iter().map(render_term_dsl).collect();
        writeln!(f, "  knowledge: {{ {} }};", ks.join(", "))?;
        if !self.public.is_empty() {
            let ps: Vec<&str> = self.public.iter().map(|n| &**n).collect();
            writeln!(f, "  public: {{ {} }};", ps.join(" "))?;
        }
        for p in &self.params {
            writeln!(f, "  param {};", render_tcon(p))?;
        }
        writeln!(f, "}}")
    }
}

impl fmt::Display for ProtocolFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.roles {
            writeln!(f, "{r}")?;
        }
        for s in &self.scenarios {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}
