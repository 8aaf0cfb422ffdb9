//! Linear time constraints over exact rationals: satisfiability with models,
//! projection by Fourier-Motzkin, the timed-match tautology check, and an
//! SMT-LIB2 subprocess bridge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::Duration;

use num::{BigInt, BigRational, One, Signed, Zero};
use serde::Serialize;
use wait_timeout::ChildExt;

use crate::terms::Name;

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// A time variable. Clocks are the global clock values of successive
/// configurations; locals belong to one player; params are rigid durations
/// shared by every configuration.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeVar {
    Clock(u32),
    Local(u32, Name),
    Param(Name),
}

impl TimeVar {
    pub fn is_param(&self) -> bool {
        matches!(self, TimeVar::Param(_))
    }

    pub fn smt_name(&self) -> String {
        match self {
            TimeVar::Clock(i) => format!("g{i}"),
            TimeVar::Local(p, n) => format!("l{p}_{n}"),
            TimeVar::Param(n) => format!("p_{n}"),
        }
    }
}

impl fmt::Display for TimeVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeVar::Clock(i) => write!(f, "tG{i}"),
            TimeVar::Local(p, n) => write!(f, "{n}@{p}"),
            TimeVar::Param(n) => write!(f, "{n}"),
        }
    }
}

impl fmt::Debug for TimeVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for TimeVar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Linear expression `constant + Σ coeff·var`; zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TimeExpr {
    pub constant: Rat,
    pub coeffs: BTreeMap<TimeVar, Rat>,
}

impl TimeExpr {
    pub fn constant(c: Rat) -> Self {
        TimeExpr { constant: c, coeffs: BTreeMap::new() }
    }

    pub fn var(v: TimeVar) -> Self {
        TimeExpr { constant: Rat::zero(), coeffs: BTreeMap::from([(v, Rat::one())]) }
    }

    pub fn add(&self, other: &TimeExpr) -> TimeExpr {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (v, c) in &other.coeffs {
            let e = out.coeffs.entry(v.clone()).or_insert_with(Rat::zero);
            *e += c;
            if e.is_zero() {
                out.coeffs.remove(v);
            }
        }
        out
    }

    pub fn scale(&self, k: &Rat) -> TimeExpr {
        if k.is_zero() {
            return TimeExpr::default();
        }
        TimeExpr {
            constant: &self.constant * k,
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
        }
    }

    pub fn sub(&self, other: &TimeExpr) -> TimeExpr {
        self.add(&other.scale(&rat(-1)))
    }

    pub fn vars(&self) -> impl Iterator<Item = &TimeVar> {
        self.coeffs.keys()
    }

    pub fn coeff(&self, v: &TimeVar) -> Rat {
        self.coeffs.get(v).cloned().unwrap_or_else(Rat::zero)
    }

    /// Replaces `v` by `e`.
    pub fn substitute(&self, v: &TimeVar, e: &TimeExpr) -> TimeExpr {
        match self.coeffs.get(v) {
            None => self.clone(),
            Some(c) => {
                let mut rest = self.clone();
                rest.coeffs.remove(v);
                rest.add(&e.scale(c))
            }
        }
    }

    pub fn rename(&self, f: &impl Fn(&TimeVar) -> TimeVar) -> TimeExpr {
        let mut out = TimeExpr::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            out = out.add(&TimeExpr::var(f(v)).scale(c));
        }
        out
    }

    pub fn eval(&self, model: &BTreeMap<TimeVar, Rat>) -> Rat {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * model.get(v).cloned().unwrap_or_else(Rat::zero);
        }
        acc
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn smt(&self) -> String {
        let mut parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(v, c)| if c.is_one() { v.smt_name() } else { format!("(* {} {})", smt_rat(c), v.smt_name()) })
            .collect();
        if !self.constant.is_zero() || parts.is_empty() {
            parts.push(smt_rat(&self.constant));
        }
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            format!("(+ {})", parts.join(" "))
        }
    }
}

fn smt_rat(r: &Rat) -> String {
    let body = if r.denom().is_one() {
        format!("{}", r.numer().abs())
    } else {
        format!("(/ {} {})", r.numer().abs(), r.denom())
    };
    if r.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for TimeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            let (neg, mag) = (c.is_negative(), c.abs());
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            if !mag.is_one() {
                write!(f, "{}*", fmt_rat(&mag))?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        if first {
            write!(f, "{}", fmt_rat(&self.constant))?;
        } else if !self.constant.is_zero() {
            let neg = self.constant.is_negative();
            write!(f, "{}{}", if neg { " - " } else { " + " }, fmt_rat(&self.constant.abs()))?;
        }
        Ok(())
    }
}

impl fmt::Debug for TimeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub enum Rel {
    Eq,
    Le,
    Lt,
    Gt,
    Ge,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Le => "<=",
            Rel::Lt => "<",
            Rel::Gt => ">",
            Rel::Ge => ">=",
        }
    }

    fn holds(self, l: &Rat, r: &Rat) -> bool {
        match self {
            Rel::Eq => l == r,
            Rel::Le => l <= r,
            Rel::Lt => l < r,
            Rel::Gt => l > r,
            Rel::Ge => l >= r,
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeConstraint {
    pub lhs: TimeExpr,
    pub rel: Rel,
    pub rhs: TimeExpr,
}

impl TimeConstraint {
    pub fn new(lhs: TimeExpr, rel: Rel, rhs: TimeExpr) -> Self {
        TimeConstraint { lhs, rel, rhs }
    }

    pub fn vars(&self) -> BTreeSet<TimeVar> {
        self.lhs.vars().chain(self.rhs.vars()).cloned().collect()
    }

    pub fn rename(&self, f: &impl Fn(&TimeVar) -> TimeVar) -> Self {
        TimeConstraint { lhs: self.lhs.rename(f), rel: self.rel, rhs: self.rhs.rename(f) }
    }

    pub fn substitute(&self, v: &TimeVar, e: &TimeExpr) -> Self {
        TimeConstraint { lhs: self.lhs.substitute(v, e), rel: self.rel, rhs: self.rhs.substitute(v, e) }
    }

    pub fn holds(&self, model: &BTreeMap<TimeVar, Rat>) -> bool {
        self.rel.holds(&self.lhs.eval(model), &self.rhs.eval(model))
    }

    fn to_lin(&self) -> Lin {
        let d = self.lhs.sub(&self.rhs);
        match self.rel {
            Rel::Eq => Lin::new(d, Kind::Eq),
            Rel::Ge => Lin::new(d, Kind::Ge),
            Rel::Gt => Lin::new(d, Kind::Gt),
            Rel::Le => Lin::new(d.scale(&rat(-1)), Kind::Ge),
            Rel::Lt => Lin::new(d.scale(&rat(-1)), Kind::Gt),
        }
    }

    pub fn smt(&self) -> String {
        let (l, r) = (self.lhs.smt(), self.rhs.smt());
        format!("({} {l} {r})", self.rel.symbol())
    }
}

impl fmt::Display for TimeConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.rel.symbol(), self.rhs)
    }
}

impl fmt::Debug for TimeConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for TimeConstraint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Conjunction of time constraints.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TimeSet {
    pub constraints: BTreeSet<TimeConstraint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(BTreeMap<TimeVar, Rat>),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

impl FromIterator<TimeConstraint> for TimeSet {
    fn from_iter<I: IntoIterator<Item = TimeConstraint>>(it: I) -> Self {
        TimeSet { constraints: it.into_iter().collect() }
    }
}

impl TimeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, c: TimeConstraint) {
        self.constraints.insert(c);
    }

    pub fn extend(&mut self, other: &TimeSet) {
        self.constraints.extend(other.constraints.iter().cloned());
    }

    pub fn iter(&self) -> impl Iterator<Item = &TimeConstraint> {
        self.constraints.iter()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<TimeVar> {
        self.constraints.iter().flat_map(|c| c.vars()).collect()
    }

    pub fn rename(&self, f: &impl Fn(&TimeVar) -> TimeVar) -> TimeSet {
        TimeSet { constraints: self.constraints.iter().map(|c| c.rename(f)).collect() }
    }

    pub fn holds(&self, model: &BTreeMap<TimeVar, Rat>) -> bool {
        self.constraints.iter().all(|c| c.holds(model))
    }

    /// Exact satisfiability over the reals, with a rational model on success.
    pub fn check(&self) -> SatResult {
        let lins: Vec<Lin> = self.constraints.iter().map(|c| c.to_lin()).collect();
        match solve(lins) {
            Some(model) => SatResult::Sat(model),
            None => SatResult::Unsat,
        }
    }

    pub fn is_satisfiable(&self) -> bool {
        self.check().is_sat()
    }

    /// `∃ vars. self` as a disjunction of conjunctions (empty when unsat).
    pub fn eliminate(&self, vars: &BTreeSet<TimeVar>) -> Vec<TimeSet> {
        let lins: Vec<Lin> = self.constraints.iter().map(|c| c.to_lin()).collect();
        match project(lins, vars) {
            Some(rest) => vec![TimeSet::from_iter(rest.into_iter().map(Lin::into_constraint))],
            None => Vec::new(),
        }
    }

    /// SMT-LIB2 satisfiability script for this set.
    pub fn to_smtlib(&self) -> String {
        let mut s = String::from("(set-logic LRA)\n");
        for v in self.vars() {
            s.push_str(&format!("(declare-const {} Real)\n", v.smt_name()));
        }
        for c in &self.constraints {
            s.push_str(&format!("(assert {})\n", c.smt()));
        }
        s.push_str("(check-sat)\n(exit)\n");
        s
    }

    fn smt_conj(&self) -> String {
        if self.constraints.is_empty() {
            "true".into()
        } else {
            format!("(and {})", self.constraints.iter().map(|c| c.smt()).collect::<Vec<_>>().join(" "))
        }
    }
}

impl fmt::Display for TimeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.constraints.iter().map(|c| c.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl fmt::Debug for TimeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Kind {
    Eq,
    Ge,
    Gt,
}

/// `expr (= | >= | >) 0`, scaled so the leading coefficient has magnitude 1.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
struct Lin {
    expr: TimeExpr,
    kind: Kind,
}

impl Lin {
    fn new(expr: TimeExpr, kind: Kind) -> Lin {
        let lead = expr.coeffs.values().next().cloned();
        let expr = match lead {
            Some(c) => {
                let k = if kind == Kind::Eq { Rat::one() / &c } else { Rat::one() / c.abs() };
                expr.scale(&k)
            }
            None => expr,
        };
        Lin { expr, kind }
    }

    fn trivially(&self) -> Option<bool> {
        if !self.expr.is_constant() {
            return None;
        }
        let c = &self.expr.constant;
        Some(match self.kind {
            Kind::Eq => c.is_zero(),
            Kind::Ge => !c.is_negative(),
            Kind::Gt => c.is_positive(),
        })
    }

    fn into_constraint(self) -> TimeConstraint {
        let rel = match self.kind {
            Kind::Eq => Rel::Eq,
            Kind::Ge => Rel::Ge,
            Kind::Gt => Rel::Gt,
        };
        TimeConstraint::new(self.expr, rel, TimeExpr::default())
    }
}

/// Removes constant atoms; `None` when one is false.
fn simplify(lins: Vec<Lin>) -> Option<Vec<Lin>> {
    let mut out = BTreeSet::new();
    for l in lins {
        match l.trivially() {
            Some(true) => {}
            Some(false) => return None,
            None => {
                out.insert(Lin::new(l.expr, l.kind));
            }
        }
    }
    Some(out.into_iter().collect())
}

enum Step {
    Solved(TimeVar, TimeExpr),
    Bounded(TimeVar, Vec<Lin>),
}

/// Eliminates `v` from `lins`. Returns the step record and the remainder.
fn eliminate_var(lins: Vec<Lin>, v: &TimeVar) -> (Step, Vec<Lin>) {
    if let Some(pos) = lins.iter().position(|l| l.kind == Kind::Eq && !l.expr.coeff(v).is_zero()) {
        let mut lins = lins;
        let eq = lins.swap_remove(pos);
        let c = eq.expr.coeff(v);
        let mut rest = eq.expr.clone();
        rest.coeffs.remove(v);
        let sol = rest.scale(&(-Rat::one() / c));
        let out = lins.into_iter().map(|l| Lin::new(l.expr.substitute(v, &sol), l.kind)).collect();
        return (Step::Solved(v.clone(), sol), out);
    }
    let (with, without): (Vec<Lin>, Vec<Lin>) = lins.into_iter().partition(|l| !l.expr.coeff(v).is_zero());
    let (lower, upper): (Vec<&Lin>, Vec<&Lin>) = with.iter().partition(|l| l.expr.coeff(v).is_positive());
    let mut out = without;
    for lo in &lower {
        for up in &upper {
            let (a, b) = (lo.expr.coeff(v), -up.expr.coeff(v));
            let combined = lo.expr.scale(&b).add(&up.expr.scale(&a));
            let kind = if lo.kind == Kind::Gt || up.kind == Kind::Gt { Kind::Gt } else { Kind::Ge };
            out.push(Lin::new(combined, kind));
        }
    }
    (Step::Bounded(v.clone(), with), out)
}

fn all_vars(lins: &[Lin]) -> BTreeSet<TimeVar> {
    lins.iter().flat_map(|l| l.expr.vars().cloned()).collect()
}

/// Picks the next variable among `candidates`: one with an equality if any,
/// else the one producing the fewest combinations.
fn pick(lins: &[Lin], candidates: &BTreeSet<TimeVar>) -> Option<TimeVar> {
    let present: BTreeSet<TimeVar> = all_vars(lins).intersection(candidates).cloned().collect();
    if let Some(v) = present
        .iter()
        .find(|v| lins.iter().any(|l| l.kind == Kind::Eq && !l.expr.coeff(v).is_zero()))
    {
        return Some(v.clone());
    }
    present
        .into_iter()
        .min_by_key(|v| {
            let lo = lins.iter().filter(|l| l.expr.coeff(v).is_positive()).count();
            let up = lins.iter().filter(|l| l.expr.coeff(v).is_negative()).count();
            lo * up
        })
}

fn project(lins: Vec<Lin>, vars: &BTreeSet<TimeVar>) -> Option<Vec<Lin>> {
    let mut cur = simplify(lins)?;
    while let Some(v) = pick(&cur, vars) {
        let (_, rest) = eliminate_var(cur, &v);
        cur = simplify(rest)?;
    }
    Some(cur)
}

fn solve(lins: Vec<Lin>) -> Option<BTreeMap<TimeVar, Rat>> {
    let mut cur = simplify(lins)?;
    let vars = all_vars(&cur);
    let mut steps = Vec::new();
    while let Some(v) = pick(&cur, &vars) {
        let (step, rest) = eliminate_var(cur, &v);
        steps.push(step);
        cur = simplify(rest)?;
    }
    let mut model: BTreeMap<TimeVar, Rat> = BTreeMap::new();
    for step in steps.into_iter().rev() {
        match step {
            Step::Solved(v, e) => {
                let val = e.eval(&model);
                model.insert(v, val);
            }
            Step::Bounded(v, bounds) => {
                let val = choose(&v, &bounds, &model);
                model.insert(v, val);
            }
        }
    }
    for v in vars {
        model.entry(v).or_insert_with(Rat::zero);
    }
    Some(model)
}

/// A value for `v` satisfying every bound given the already-chosen values.
fn choose(v: &TimeVar, bounds: &[Lin], model: &BTreeMap<TimeVar, Rat>) -> Rat {
    let mut lower: Option<(Rat, bool)> = None;
    let mut upper: Option<(Rat, bool)> = None;
    for l in bounds {
        let c = l.expr.coeff(v);
        let mut rest = l.expr.clone();
        rest.coeffs.remove(v);
        let bound = -rest.eval(model) / &c;
        let strict = l.kind == Kind::Gt;
        if c.is_positive() {
            if lower.as_ref().is_none_or(|(b, s)| bound > *b || (bound == *b && strict && !s)) {
                lower = Some((bound, strict));
            }
        } else if upper.as_ref().is_none_or(|(b, s)| bound < *b || (bound == *b && strict && !s)) {
            upper = Some((bound, strict));
        }
    }
    match (lower, upper) {
        (None, None) => Rat::zero(),
        (Some((l, s)), None) => if s { l + Rat::one() } else { l },
        (None, Some((u, s))) => if s { u - Rat::one() } else { u },
        (Some((l, _)), Some((u, _))) => {
            if l == u {
                l
            } else {
                (l + u) / rat(2)
            }
        }
    }
}

/// Whether `∀ vars(left). left ⇒ ∃ vars(right)∖shared. (right ∧ pairs)` is
/// valid. Params are shared and never eliminated.
pub fn check_timed_match(left: &TimeSet, right: &TimeSet, pairs: &[(TimeVar, TimeVar)]) -> bool {
    let mut body: Vec<Lin> = right.iter().map(|c| c.to_lin()).collect();
    for (l, r) in pairs {
        body.push(Lin::new(TimeExpr::var(l.clone()).sub(&TimeExpr::var(r.clone())), Kind::Eq));
    }
    let left_vars = left.vars();
    let hidden: BTreeSet<TimeVar> = all_vars(&body)
        .into_iter()
        .filter(|v| !v.is_param() && !left_vars.contains(v) && !pairs.iter().any(|(l, _)| l == v))
        .collect();
    let Some(phi) = project(body, &hidden) else {
        return !left.is_satisfiable();
    };
    let base: Vec<Lin> = left.iter().map(|c| c.to_lin()).collect();
    phi.iter().all(|atom| {
        negations(atom).into_iter().all(|neg| {
            let mut sys = base.clone();
            sys.push(neg);
            solve(sys).is_none()
        })
    })
}

fn negations(l: &Lin) -> Vec<Lin> {
    let neg = l.expr.scale(&rat(-1));
    match l.kind {
        Kind::Ge => vec![Lin::new(neg, Kind::Gt)],
        Kind::Gt => vec![Lin::new(neg, Kind::Ge)],
        Kind::Eq => vec![Lin::new(l.expr.clone(), Kind::Gt), Lin::new(neg, Kind::Gt)],
    }
}

/// SMT-LIB2 script whose answer is `unsat` exactly when
/// [`check_timed_match`] holds.
pub fn timed_match_smtlib(left: &TimeSet, right: &TimeSet, pairs: &[(TimeVar, TimeVar)]) -> String {
    let left_vars = left.vars();
    let mut outer: BTreeSet<TimeVar> = left_vars.clone();
    outer.extend(pairs.iter().map(|(l, _)| l.clone()));
    outer.extend(right.vars().into_iter().filter(|v| v.is_param()));
    let inner: BTreeSet<TimeVar> = right
        .vars()
        .into_iter()
        .chain(pairs.iter().map(|(_, r)| r.clone()))
        .filter(|v| !outer.contains(v))
        .collect();
    let eqs: Vec<String> = pairs.iter().map(|(l, r)| format!("(= {} {})", l.smt_name(), r.smt_name())).collect();
    let body = format!("(and {} {})", right.smt_conj(), if eqs.is_empty() { "true".into() } else { format!("(and {})", eqs.join(" ")) });
    let exists = if inner.is_empty() {
        body
    } else {
        let binders: Vec<String> = inner.iter().map(|v| format!("({} Real)", v.smt_name())).collect();
        format!("(exists ({}) {body})", binders.join(" "))
    };
    let mut s = String::from("(set-logic LRA)\n");
    for v in &outer {
        s.push_str(&format!("(declare-const {} Real)\n", v.smt_name()));
    }
    s.push_str(&format!("(assert {})\n", left.smt_conj()));
    s.push_str(&format!("(assert (not {exists}))\n(check-sat)\n(exit)\n"));
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmtStatus {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, thiserror::Error)]
pub enum SmtError {
    #[error("failed to start solver `{0}`: {1}")]
    Spawn(String, std::io::Error),
    #[error("solver i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver timed out after {0:?}")]
    Timeout(Duration),
    #[error("malformed solver reply: {0:?}")]
    Malformed(String),
    #[error("empty solver command")]
    EmptyCommand,
}

pub const DEFAULT_SMT_TIMEOUT: Duration = Duration::from_secs(30);

/// Runs `command` (whitespace-separated program and arguments), feeds it
/// `script` on stdin and parses the first status token of its reply.
pub fn smt_check(command: &str, script: &str, timeout: Duration) -> Result<SmtStatus, SmtError> {
    let mut parts = command.split_whitespace();
    let prog = parts.next().ok_or(SmtError::EmptyCommand)?;
    let mut child = Command::new(prog)
        .args(parts)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SmtError::Spawn(command.to_string(), e))?;
    {
        let mut stdin = child.stdin.take().expect("piped stdin");
        stdin.write_all(script.as_bytes())?;
    }
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut out = String::new();
        stdout.read_to_string(&mut out).map(|_| out)
    });
    if child.wait_timeout(timeout)?.is_none() {
        let _ = child.kill();
        let _ = child.wait();
        return Err(SmtError::Timeout(timeout));
    }
    let out = reader.join().map_err(|_| SmtError::Malformed("reader panicked".into()))??;
    for tok in out.split_whitespace() {
        match tok {
            "sat" => return Ok(SmtStatus::Sat),
            "unsat" => return Ok(SmtStatus::Unsat),
            "unknown" => return Ok(SmtStatus::Unknown),
            _ => {}
        }
    }
    Err(SmtError::Malformed(out))
}
