//! Symbolic configurations, the transition rules and trace enumeration.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::comparison::{eq_check, CompConstraint, CompSet};
use crate::derivability::{normalize_union, DerivSet, MinimalSet};
use crate::intruder::{check_subst, sgen, sgen_match, vars_in_order, GenSolution};
use crate::protocol::{Cmd, ResolvedScenario, CUR};
use crate::terms::{Name, SymSubst, Term, VarSubst};
use crate::timecon::{Rel, TimeConstraint, TimeExpr, TimeSet, TimeVar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Send,
    #[serde(rename = "-")]
    Recv,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Send => "+",
            Sign::Recv => "-",
        })
    }
}

/// An observable event: a message sent or received at a global time.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Label {
    pub sign: Sign,
    pub term: Term,
    pub at: TimeVar,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{} @ {}", self.sign, self.term, self.at)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayerState {
    pub id: u32,
    pub name: Name,
    pub cmds: Vec<Cmd>,
    pub keys: BTreeSet<Term>,
    pub next_nonce: u32,
}

/// A symbolic configuration together with the observable part of the trace
/// leading to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub players: Vec<PlayerState>,
    pub ik: MinimalSet,
    pub dc: DerivSet,
    pub eq: CompSet,
    pub tc: TimeSet,
    pub clock: u32,
    pub start_clock: u32,
    pub labels: Vec<Label>,
    pub next_sym: u32,
    pub next_clock: u32,
}

/// One transition: the successor and the symbol substitution it applied.
#[derive(Clone, Debug)]
pub struct Step {
    pub config: Configuration,
    pub ssb: SymSubst,
    pub player: u32,
}

fn subst_cmds(cmds: &[Cmd], f: &impl Fn(&Term) -> Term) -> Vec<Cmd> {
    cmds.iter()
        .map(|c| match c {
            Cmd::New { var, tc } => Cmd::New { var: var.clone(), tc: tc.clone() },
            Cmd::Send { term, tc } => Cmd::Send { term: f(term), tc: tc.clone() },
            Cmd::Recv { term, tc } => Cmd::Recv { term: f(term), tc: tc.clone() },
            Cmd::If { lhs, rhs, tc, then, els } => Cmd::If {
                lhs: f(lhs),
                rhs: f(rhs),
                tc: tc.clone(),
                then: subst_cmds(then, f),
                els: subst_cmds(els, f),
            },
        })
        .collect()
}

fn rename_cmd_times(cmds: &[Cmd], f: &impl Fn(&TimeVar) -> TimeVar) -> Vec<Cmd> {
    let rt = |tc: &Option<TimeConstraint>| tc.as_ref().map(|c| c.rename(f));
    cmds.iter()
        .map(|c| match c {
            Cmd::New { var, tc } => Cmd::New { var: var.clone(), tc: rt(tc) },
            Cmd::Send { term, tc } => Cmd::Send { term: term.clone(), tc: rt(tc) },
            Cmd::Recv { term, tc } => Cmd::Recv { term: term.clone(), tc: rt(tc) },
            Cmd::If { lhs, rhs, tc, then, els } => Cmd::If {
                lhs: lhs.clone(),
                rhs: rhs.clone(),
                tc: rt(tc),
                then: rename_cmd_times(then, f),
                els: rename_cmd_times(els, f),
            },
        })
        .collect()
}

impl Configuration {
    /// Initial configuration of a resolved scenario.
    pub fn initial(sc: &ResolvedScenario) -> Configuration {
        let players = sc
            .players
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let id = i as u32;
                let cmds = rename_cmd_times(&p.body, &|v| match v {
                    TimeVar::Local(_, n) => TimeVar::Local(id, n.clone()),
                    other => other.clone(),
                });
                let mut keys: BTreeSet<Term> = p.keys.iter().cloned().collect();
                keys.insert(Term::sk(Term::Player(p.name.clone())));
                PlayerState { id, name: p.name.clone(), cmds, keys, next_nonce: 0 }
            })
            .collect();
        let mut tc = TimeSet::from_iter(sc.params.iter().cloned());
        tc.insert(TimeConstraint::new(TimeExpr::var(TimeVar::Clock(0)), Rel::Ge, TimeExpr::default()));
        Configuration {
            players,
            ik: MinimalSet::from_terms(sc.knowledge.iter().cloned()),
            dc: DerivSet::new(),
            eq: CompSet::new(),
            tc,
            clock: 0,
            start_clock: 0,
            labels: Vec::new(),
            next_sym: 1,
            next_clock: 1,
        }
    }

    pub fn is_final(&self) -> bool {
        self.players.iter().all(|p| p.cmds.is_empty())
    }

    /// Applies a symbol substitution everywhere except `dc`, which the
    /// caller replaces with the solver's refined constraints.
    fn apply_ssb(&mut self, d: &SymSubst) {
        if d.is_empty() {
            return;
        }
        let f = |t: &Term| d.apply(t);
        for p in &mut self.players {
            p.cmds = subst_cmds(&p.cmds, &f);
            p.keys = p.keys.iter().map(f).collect();
        }
        self.ik = self.ik.apply(d);
        self.eq = self.eq.apply(d);
        for l in &mut self.labels {
            l.term = d.apply(&l.term);
        }
    }

    /// Starts a transition: allocates the next clock, orders it after the
    /// current one and adds the command's constraint. `false` if unsat.
    fn advance(&mut self, player: u32, tc: Option<&TimeConstraint>) -> bool {
        let c = self.next_clock;
        self.next_clock += 1;
        let now = TimeExpr::var(TimeVar::Clock(c));
        self.tc.insert(TimeConstraint::new(now.clone(), Rel::Ge, TimeExpr::var(TimeVar::Clock(self.clock))));
        if let Some(tc) = tc {
            let inst = tc.rename(&|v| match v {
                TimeVar::Param(n) if &**n == CUR => TimeVar::Clock(c),
                TimeVar::Local(_, n) => TimeVar::Local(player, n.clone()),
                other => other.clone(),
            });
            self.tc.insert(inst);
        }
        self.clock = c;
        self.tc.is_satisfiable()
    }

    fn now(&self) -> TimeVar {
        TimeVar::Clock(self.clock)
    }

    /// All successors of this configuration, players in canonical order.
    pub fn successors(&self) -> Vec<Step> {
        let mut out = Vec::new();
        for (idx, p) in self.players.iter().enumerate() {
            if p.cmds.is_empty() {
                continue;
            }
            out.extend(self.step_player(idx));
        }
        out
    }

    fn step_player(&self, idx: usize) -> Vec<Step> {
        let p = &self.players[idx];
        let id = p.id;
        let head = p.cmds[0].clone();
        let rest: Vec<Cmd> = p.cmds[1..].to_vec();
        match head {
            Cmd::New { var, tc } => {
                let mut c = self.clone();
                let pl = &mut c.players[idx];
                let nonce = Term::Nonce(pl.id, pl.next_nonce);
                pl.next_nonce += 1;
                let mut sb = VarSubst::new();
                sb.insert(var, nonce);
                pl.cmds = subst_cmds(&rest, &|t| sb.apply(t));
                if !c.advance(id, tc.as_ref()) {
                    return Vec::new();
                }
                vec![Step { config: c, ssb: SymSubst::new(), player: id }]
            }
            Cmd::Send { term, tc } => {
                let mut c = self.clone();
                c.players[idx].cmds = rest;
                if !c.advance(id, tc.as_ref()) {
                    return Vec::new();
                }
                c.ik = normalize_union(&c.ik, &MinimalSet::from_terms([term.clone()]));
                let at = c.now();
                c.labels.push(Label { sign: Sign::Send, term, at });
                vec![Step { config: c, ssb: SymSubst::new(), player: id }]
            }
            Cmd::Recv { term, tc } => self.step_recv(idx, term, rest, tc),
            Cmd::If { lhs, rhs, tc, then, els } => {
                let mut out = self.step_if_true(idx, &lhs, &rhs, tc.as_ref(), &then, &rest);
                out.extend(self.step_if_false(idx, &lhs, &rhs, tc.as_ref(), &els, &rest));
                out
            }
        }
    }

    fn step_recv(&self, idx: usize, pattern: Term, rest: Vec<Cmd>, tc: Option<TimeConstraint>) -> Vec<Step> {
        let id = self.players[idx].id;
        let mut next_sym = self.next_sym;
        let res = sgen(&pattern, &self.ik, &self.dc, &mut next_sym);
        let keys = &self.players[idx].keys;
        let mut sols = Vec::new();
        for sol in res.solutions {
            sols.extend(receivable(&pattern, &res.sb, keys, sol));
        }
        sols.sort();
        sols.dedup();
        let mut out = Vec::new();
        for sol in sols {
            let mut c = self.clone();
            c.next_sym = next_sym;
            c.players[idx].cmds = subst_cmds(&rest, &|t| res.sb.apply(t));
            c.apply_ssb(&sol.ssb);
            c.dc = sol.dc.clone();
            let msg = sol.ssb.apply(&res.sb.apply(&pattern));
            let pl = &mut c.players[idx];
            pl.keys = add_keys(&msg, &pl.keys);
            if !c.advance(id, tc.as_ref()) || !eq_check(&c.eq, &c.dc).is_sat() {
                continue;
            }
            let at = c.now();
            c.labels.push(Label { sign: Sign::Recv, term: msg, at });
            out.push(Step { config: c, ssb: sol.ssb, player: id });
        }
        out
    }

    fn step_if_true(
        &self,
        idx: usize,
        lhs: &Term,
        rhs: &Term,
        tc: Option<&TimeConstraint>,
        then: &[Cmd],
        rest: &[Cmd],
    ) -> Vec<Step> {
        let id = self.players[idx].id;
        let mut next_sym = self.next_sym;
        let res = sgen_match(lhs, rhs, &self.ik, &self.dc, &mut next_sym);
        let mut out = Vec::new();
        for sol in res.solutions {
            let mut c = self.clone();
            c.next_sym = next_sym;
            let cont: Vec<Cmd> = then.iter().chain(rest).cloned().collect();
            c.players[idx].cmds = subst_cmds(&cont, &|t| res.sb.apply(t));
            c.apply_ssb(&sol.ssb);
            let (l, r) = (sol.ssb.apply(&res.sb.apply(lhs)), sol.ssb.apply(&res.sb.apply(rhs)));
            if l != r {
                c.eq.insert(CompConstraint::eq(l, r));
            }
            c.dc = sol.dc.clone();
            if !c.advance(id, tc) || !eq_check(&c.eq, &c.dc).is_sat() {
                continue;
            }
            out.push(Step { config: c, ssb: sol.ssb, player: id });
        }
        out
    }

    fn step_if_false(
        &self,
        idx: usize,
        lhs: &Term,
        rhs: &Term,
        tc: Option<&TimeConstraint>,
        els: &[Cmd],
        rest: &[Cmd],
    ) -> Vec<Step> {
        let id = self.players[idx].id;
        let mut c = self.clone();
        let mut sb = VarSubst::new();
        for (v, _) in vars_in_order(lhs).into_iter().chain(vars_in_order(rhs)) {
            if sb.get(&v).is_none() {
                let s = c.next_sym;
                c.next_sym += 1;
                sb.insert(v, Term::Sym(s));
                c.dc.insert(s, c.ik.clone());
            }
        }
        c.eq.insert(CompConstraint::neq(sb.apply(lhs), sb.apply(rhs)));
        c.players[idx].cmds = els.iter().chain(rest).cloned().collect();
        if !c.advance(id, tc) || !eq_check(&c.eq, &c.dc).is_sat() {
            return Vec::new();
        }
        vec![Step { config: c, ssb: SymSubst::new(), player: id }]
    }
}

/// Refines a generation solution so that every encryption the receiver must
/// open (non-variable positions of the pattern) uses a key whose inverse the
/// receiver holds. Symbolic keys are case-split over the receiver's keys.
pub fn receivable(pattern: &Term, sb: &VarSubst, keys: &BTreeSet<Term>, sol: GenSolution) -> Vec<GenSolution> {
    match pattern {
        Term::Var(..) => vec![sol],
        Term::Tuple(es) => {
            let mut sols = vec![sol];
            for e in es {
                sols = sols.into_iter().flat_map(|s| receivable(e, sb, keys, s)).collect();
            }
            sols
        }
        Term::Enc(p, k) => {
            let key = sol.ssb.apply(&sb.apply(k));
            let mut opened = Vec::new();
            for held in keys {
                let Ok(inv) = held.inverse_key() else { continue };
                if key == inv {
                    opened.push(sol.clone());
                } else if !key.symbols().is_empty() {
                    if let Some(theta) = crate::comparison::unify(&[(key.clone(), inv)]) {
                        opened.extend(check_subst(&theta, &sol.ssb, &sol.dc));
                    }
                }
            }
            opened.sort();
            opened.dedup();
            opened.into_iter().flat_map(|s| receivable(p, sb, keys, s)).collect()
        }
        _ => vec![sol],
    }
}

/// Keys the receiver learns from `msg`: key atoms reachable through
/// encryptions it can open, iterated to a fixed point.
pub fn add_keys(msg: &Term, keys: &BTreeSet<Term>) -> BTreeSet<Term> {
    fn collect(t: &Term, keys: &BTreeSet<Term>, out: &mut BTreeSet<Term>) {
        match t {
            Term::SymKey(_) | Term::Sk(_) => {
                out.insert(t.clone());
            }
            Term::Tuple(es) => es.iter().for_each(|e| collect(e, keys, out)),
            Term::Enc(m, k)
                if k.inverse_key().is_ok_and(|inv| keys.contains(&inv)) => {
                    collect(m, keys, out);
                }
            _ => {}
        }
    }
    let mut acc = keys.clone();
    loop {
        let mut found = BTreeSet::new();
        collect(msg, &acc, &mut found);
        let before = acc.len();
        acc.extend(found);
        if acc.len() == before {
            return acc;
        }
    }
}

/// Observable of a trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Observable {
    pub start_clock: TimeVar,
    pub labels: Vec<Label>,
    pub ik: MinimalSet,
    pub dc: DerivSet,
    pub eq: CompSet,
    pub tc: TimeSet,
}

impl Configuration {
    pub fn observable(&self) -> Observable {
        Observable {
            start_clock: TimeVar::Clock(self.start_clock),
            labels: self.labels.clone(),
            ik: self.ik.clone(),
            dc: self.dc.clone(),
            eq: self.eq.clone(),
            tc: self.tc.clone(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct EnumOptions {
    /// Depth limit; `None` explores to quiescence.
    pub max_steps: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Enumeration {
    /// Final configurations of the maximal traces, in canonical order.
    pub finals: Vec<Configuration>,
    /// Number of configurations expanded in the search tree.
    pub states: usize,
    /// Whether the depth limit cut some branch.
    pub truncated: bool,
}

impl Enumeration {
    pub fn observables(&self) -> Vec<Observable> {
        self.finals.iter().map(|c| c.observable()).collect()
    }
}

/// Depth-first exploration to quiescence. `visit` sees every transition.
pub fn enumerate_with(
    root: &Configuration,
    opts: &EnumOptions,
    visit: &mut dyn FnMut(&Configuration, &Step),
) -> Enumeration {
    let mut finals = Vec::new();
    let mut states = 0;
    let mut truncated = false;
    let mut stack = vec![(root.clone(), 0usize)];
    while let Some((c, depth)) = stack.pop() {
        states += 1;
        if opts.max_steps.is_some_and(|m| depth >= m) {
            truncated = true;
            finals.push(c);
            continue;
        }
        let succ = c.successors();
        if succ.is_empty() {
            finals.push(c);
            continue;
        }
        for s in succ.iter() {
            visit(&c, s);
        }
        for s in succ.into_iter().rev() {
            stack.push((s.config, depth + 1));
        }
    }
    Enumeration { finals, states, truncated }
}

pub fn enumerate(root: &Configuration, opts: &EnumOptions) -> Enumeration {
    enumerate_with(root, opts, &mut |_, _| {})
}

/// Checks the trace invariants on one transition: knowledge only grows,
/// constraints stay acyclic, and later symbols may be instantiated by at
/// least what earlier ones can.
pub fn check_step_invariants(parent: &Configuration, step: &Step) -> Result<(), String> {
    let child = &step.config;
    if !child.dc.is_acyclic() {
        return Err(format!("cyclic derivability constraints: {}", child.dc));
    }
    let before = parent.ik.apply(&step.ssb);
    if !child.ik.covers(&before, &child.dc) {
        return Err(format!("knowledge shrank: {before} not covered by {}", child.ik));
    }
    let entries: Vec<(&u32, &MinimalSet)> = child.dc.iter().collect();
    for (i, (a, sa)) in entries.iter().enumerate() {
        for (b, sb) in &entries[i + 1..] {
            if !sb.covers(sa, &child.dc) {
                return Err(format!("constraint of sym({b}) does not cover that of earlier sym({a})"));
            }
        }
    }
    Ok(())
}

/// Renames every symbol, nonce, clock and local time variable of an
/// observable apart, keeping params shared.
pub fn rename_apart(o: &Observable, offset: u32) -> Observable {
    let term = |t: &Term| rename_term(t, offset);
    let tv = |v: &TimeVar| match v {
        TimeVar::Clock(i) => TimeVar::Clock(i + offset),
        TimeVar::Local(p, n) => TimeVar::Local(p + offset, n.clone()),
        other => other.clone(),
    };
    Observable {
        start_clock: tv(&o.start_clock),
        labels: o.labels.iter().map(|l| Label { sign: l.sign, term: term(&l.term), at: tv(&l.at) }).collect(),
        ik: o.ik.map_terms(term),
        dc: {
            let mut dc = DerivSet::new();
            for (s, set) in o.dc.iter() {
                dc.insert(s + offset, set.map_terms(term));
            }
            dc
        },
        eq: o.eq.map_terms(term),
        tc: o.tc.rename(&tv),
    }
}

pub fn rename_term(t: &Term, offset: u32) -> Term {
    t.map_leaves(&mut |x| match x {
        Term::Sym(s) => Some(Term::Sym(s + offset)),
        Term::Nonce(i, j) => Some(Term::Nonce(i + offset, *j)),
        _ => None,
    })
}

pub fn player_name(c: &Configuration, id: u32) -> Option<Name> {
    c.players.iter().find(|p| p.id == id).map(|p| p.name.clone())
}
