//! Brute-force ground engines used as test oracles for the symbolic
//! procedures. Deliberately self-contained: only the term type is shared.

use std::collections::{BTreeMap, BTreeSet};

use crate::terms::Term;

/// Limits on the ground terms considered by the oracles.
#[derive(Clone, Debug)]
pub struct Bounds {
    /// Maximal nesting of `enc` and tuple constructors.
    pub depth: usize,
    /// Maximal tuple width.
    pub width: usize,
    /// Maximal number of nodes.
    pub size: usize,
    /// Atoms everyone can produce.
    pub guessables: Vec<Term>,
}

impl Bounds {
    pub fn new(depth: usize, width: usize, size: usize, guessables: Vec<Term>) -> Self {
        Bounds { depth, width, size, guessables }
    }

    pub fn admits(&self, t: &Term) -> bool {
        nodes(t) <= self.size && height(t) <= self.depth && widest(t) <= self.width
    }
}

fn nodes(t: &Term) -> usize {
    match t {
        Term::Enc(m, k) => 1 + nodes(m) + nodes(k),
        Term::Tuple(es) => 1 + es.iter().map(nodes).sum::<usize>(),
        Term::Pk(x) | Term::Sk(x) => 1 + nodes(x),
        _ => 1,
    }
}

fn height(t: &Term) -> usize {
    match t {
        Term::Enc(m, k) => 1 + height(m).max(height(k)),
        Term::Tuple(es) => 1 + es.iter().map(height).max().unwrap_or(0),
        _ => 0,
    }
}

fn widest(t: &Term) -> usize {
    match t {
        Term::Enc(m, k) => widest(m).max(widest(k)),
        Term::Tuple(es) => es.iter().map(widest).fold(es.len(), usize::max),
        _ => 0,
    }
}

fn is_key(t: &Term) -> bool {
    matches!(t, Term::SymKey(_) | Term::Pk(_) | Term::Sk(_))
}

fn inverse(k: &Term) -> Option<Term> {
    match k {
        Term::SymKey(_) => Some(k.clone()),
        Term::Pk(o) => Some(Term::Sk(o.clone())),
        Term::Sk(o) => Some(Term::Pk(o.clone())),
        _ => None,
    }
}

fn everyone_has(t: &Term) -> bool {
    match t {
        Term::Player(_) => true,
        Term::Text { public, .. } => *public,
        Term::Pk(o) => matches!(**o, Term::Player(_)),
        _ => false,
    }
}

fn is_ground(t: &Term) -> bool {
    match t {
        Term::Sym(_) | Term::Var(..) => false,
        Term::Enc(m, k) => is_ground(m) && is_ground(k),
        Term::Tuple(es) => es.iter().all(is_ground),
        Term::Pk(x) | Term::Sk(x) => is_ground(x),
        _ => true,
    }
}

fn syms_of(t: &Term, out: &mut BTreeSet<u32>) {
    match t {
        Term::Sym(s) => {
            out.insert(*s);
        }
        Term::Enc(m, k) => {
            syms_of(m, out);
            syms_of(k, out);
        }
        Term::Tuple(es) => es.iter().for_each(|e| syms_of(e, out)),
        Term::Pk(x) | Term::Sk(x) => syms_of(x, out),
        _ => {}
    }
}

fn instantiate(t: &Term, theta: &BTreeMap<u32, Term>) -> Term {
    match t {
        Term::Sym(s) => theta.get(s).cloned().unwrap_or_else(|| t.clone()),
        Term::Enc(m, k) => Term::Enc(Box::new(instantiate(m, theta)), Box::new(instantiate(k, theta))),
        Term::Tuple(es) => Term::Tuple(es.iter().map(|e| instantiate(e, theta)).collect()),
        Term::Pk(x) => Term::Pk(Box::new(instantiate(x, theta))),
        Term::Sk(x) => Term::Sk(Box::new(instantiate(x, theta))),
        _ => t.clone(),
    }
}

fn synth(known: &BTreeSet<Term>, m: &Term) -> bool {
    if everyone_has(m) || known.contains(m) {
        return true;
    }
    match m {
        Term::Tuple(es) => es.iter().all(|e| synth(known, e)),
        Term::Enc(x, k) => is_key(k) && synth(known, x) && synth(known, k),
        _ => false,
    }
}

/// Closure of `base` under projection and decryption with synthesizable
/// inverse keys.
fn analyze(base: &[Term]) -> BTreeSet<Term> {
    let mut known: BTreeSet<Term> = base.iter().cloned().collect();
    loop {
        let mut added = Vec::new();
        for t in &known {
            match t {
                Term::Tuple(es) => added.extend(es.iter().filter(|e| !known.contains(*e)).cloned()),
                Term::Enc(x, k)
                    if !known.contains(&**x) && inverse(k).is_some_and(|inv| synth(&known, &inv)) => {
                        added.push((**x).clone());
                    }
                _ => {}
            }
        }
        if added.is_empty() {
            return known;
        }
        known.extend(added);
    }
}

/// Ground Dolev-Yao derivability of `m` from `base` and the guessables.
pub fn ground_derivable(base: &[Term], m: &Term) -> bool {
    synth(&analyze(base), m)
}

/// All ground terms within `b` obtained from `base` and the guessables by
/// encryption and tupling.
pub fn synthesis_closure(base: &[Term], b: &Bounds) -> BTreeSet<Term> {
    let mut set: BTreeSet<Term> = base.iter().chain(&b.guessables).filter(|t| b.admits(t)).cloned().collect();
    loop {
        let items: Vec<Term> = set.iter().cloned().collect();
        let mut fresh = BTreeSet::new();
        for m in &items {
            for k in items.iter().filter(|k| is_key(k)) {
                let e = Term::Enc(Box::new(m.clone()), Box::new(k.clone()));
                if b.admits(&e) && !set.contains(&e) {
                    fresh.insert(e);
                }
            }
        }
        let mut cur = Vec::new();
        extend_tuples(&items, b, &mut cur, &set, &mut fresh);
        if fresh.is_empty() {
            return set;
        }
        set.extend(fresh);
    }
}

fn extend_tuples(items: &[Term], b: &Bounds, cur: &mut Vec<Term>, seen: &BTreeSet<Term>, out: &mut BTreeSet<Term>) {
    if cur.len() >= 2 {
        let t = Term::Tuple(cur.clone());
        if b.admits(&t) && !seen.contains(&t) {
            out.insert(t);
        }
    }
    if cur.len() == b.width {
        return;
    }
    let used: usize = 1 + cur.iter().map(nodes).sum::<usize>();
    for it in items {
        if used + nodes(it) <= b.size {
            cur.push(it.clone());
            extend_tuples(items, b, cur, seen, out);
            cur.pop();
        }
    }
}

/// Derivability constraints in plain form: symbol to base set.
pub type GroundDc = BTreeMap<u32, Vec<Term>>;

/// A comparison constraint: `(is_equality, lhs, rhs)`.
pub type GroundEq = Vec<(bool, Term, Term)>;

fn atoms_of(t: &Term, out: &mut BTreeSet<Term>) {
    match t {
        Term::Enc(m, k) => {
            atoms_of(m, out);
            atoms_of(k, out);
        }
        Term::Tuple(es) => es.iter().for_each(|e| atoms_of(e, out)),
        Term::Sym(_) | Term::Var(..) => {}
        other => {
            out.insert(other.clone());
        }
    }
}

/// Bounded values a symbol may take. Symbols in the base set are
/// instantiated first; unconstrained symbols range over the closure of all
/// atoms mentioned by `dc`.
pub fn symbol_values(dc: &GroundDc, s: u32, b: &Bounds) -> BTreeSet<Term> {
    let Some(base) = dc.get(&s) else {
        let mut atoms = BTreeSet::new();
        dc.values().flatten().for_each(|t| atoms_of(t, &mut atoms));
        return synthesis_closure(&atoms.into_iter().collect::<Vec<_>>(), b);
    };
    let mut inner = BTreeSet::new();
    base.iter().for_each(|t| syms_of(t, &mut inner));
    let mut out = BTreeSet::new();
    for theta in assignments(dc, &inner, b) {
        let inst: Vec<Term> = base.iter().map(|t| instantiate(t, &theta)).collect();
        out.extend(synthesis_closure(&analyze(&inst).into_iter().collect::<Vec<_>>(), b));
    }
    out
}

/// Every assignment of bounded values to `syms`.
pub fn assignments(dc: &GroundDc, syms: &BTreeSet<u32>, b: &Bounds) -> Vec<BTreeMap<u32, Term>> {
    let mut out = vec![BTreeMap::new()];
    for s in syms {
        let vals = symbol_values(dc, *s, b);
        let mut next = Vec::with_capacity(out.len() * vals.len());
        for theta in &out {
            for v in &vals {
                let mut t = theta.clone();
                t.insert(*s, v.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

fn satisfies(eq: &GroundEq, theta: &BTreeMap<u32, Term>) -> bool {
    eq.iter().all(|(is_eq, l, r)| (instantiate(l, theta) == instantiate(r, theta)) == *is_eq)
}

/// Calls `f` on each ground instance of `t` whose symbol values lie within
/// `b` and respect `dc` and `eq`, until `f` returns `false`. Returns whether
/// the enumeration ran to completion.
pub fn for_each_instance(dc: &GroundDc, eq: &GroundEq, t: &Term, b: &Bounds, f: &mut dyn FnMut(Term) -> bool) -> bool {
    let mut in_term = BTreeSet::new();
    syms_of(t, &mut in_term);
    let mut in_eq = BTreeSet::new();
    for (_, l, r) in eq {
        syms_of(l, &mut in_eq);
        syms_of(r, &mut in_eq);
    }
    in_eq.retain(|s| !in_term.contains(s));
    let domains: Vec<(u32, Vec<Term>)> = in_term.iter().map(|s| (*s, symbol_values(dc, *s, b).into_iter().collect())).collect();
    let mut seen = BTreeSet::new();
    product(&domains, &mut BTreeMap::new(), &mut |theta| {
        if !eq.is_empty() && !extendable(dc, eq, &in_eq, theta, b) {
            return true;
        }
        let m = instantiate(t, theta);
        !seen.insert(m.clone()) || f(m)
    })
}

/// All instances visited by [`for_each_instance`].
pub fn ground_instances(dc: &GroundDc, eq: &GroundEq, t: &Term, b: &Bounds) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    for_each_instance(dc, eq, t, b, &mut |m| {
        out.insert(m);
        true
    });
    out
}

fn product(domains: &[(u32, Vec<Term>)], theta: &mut BTreeMap<u32, Term>, f: &mut dyn FnMut(&BTreeMap<u32, Term>) -> bool) -> bool {
    let Some(((s, vals), rest)) = domains.split_first() else { return f(theta) };
    for v in vals {
        theta.insert(*s, v.clone());
        if !product(rest, theta, f) {
            theta.remove(s);
            return false;
        }
    }
    theta.remove(s);
    true
}

fn extendable(dc: &GroundDc, eq: &GroundEq, rest: &BTreeSet<u32>, theta: &BTreeMap<u32, Term>, b: &Bounds) -> bool {
    assignments(dc, rest, b).into_iter().any(|extra| {
        let mut full = theta.clone();
        full.extend(extra);
        satisfies(eq, &full)
    })
}

fn match_ground(p: &Term, m: &Term, theta: &mut BTreeMap<u32, Term>) -> bool {
    match (p, m) {
        (Term::Sym(s), _) => match theta.get(s) {
            Some(v) => v == m,
            None => {
                theta.insert(*s, m.clone());
                true
            }
        },
        (Term::Enc(a, k), Term::Enc(x, y)) => match_ground(a, x, theta) && match_ground(k, y, theta),
        (Term::Tuple(xs), Term::Tuple(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_ground(x, y, theta))
        }
        (Term::Pk(x), Term::Pk(y)) | (Term::Sk(x), Term::Sk(y)) => match_ground(x, y, theta),
        _ => p == m,
    }
}

/// Whether the ground value `v` may instantiate symbol `s`.
pub fn value_allowed(dc: &GroundDc, s: u32, v: &Term, b: &Bounds) -> bool {
    let Some(base) = dc.get(&s) else { return true };
    let mut inner = BTreeSet::new();
    base.iter().for_each(|t| syms_of(t, &mut inner));
    if inner.is_empty() {
        return ground_derivable(base, v);
    }
    assignments(dc, &inner, b).iter().any(|theta| {
        let inst: Vec<Term> = base.iter().map(|t| instantiate(t, theta)).collect();
        ground_derivable(&inst, v)
    })
}

/// Whether ground `m` is an instance of `t` under `dc` and `eq`. Symbols of
/// `eq` that `t` does not fix are chosen existentially within `b`.
pub fn is_instance(dc: &GroundDc, eq: &GroundEq, t: &Term, m: &Term, b: &Bounds) -> bool {
    let mut theta = BTreeMap::new();
    if !is_ground(m) || !match_ground(t, m, &mut theta) {
        return false;
    }
    if !theta.iter().all(|(s, v)| value_allowed(dc, *s, v, b)) {
        return false;
    }
    let mut rest = BTreeSet::new();
    for (_, l, r) in eq {
        syms_of(l, &mut rest);
        syms_of(r, &mut rest);
    }
    rest.retain(|s| !theta.contains_key(s));
    extendable(dc, eq, &rest, &theta, b)
}

/// One side of a term comparison.
#[derive(Clone, Debug)]
pub struct GroundView {
    pub term: Term,
    pub dc: GroundDc,
    pub eq: GroundEq,
}

/// Bounded inclusion of the instances of `a` in those of `b_view`; returns a
/// counterexample when inclusion fails.
pub fn ground_included(a: &GroundView, b_view: &GroundView, b: &Bounds) -> Result<(), Term> {
    let mut bad = None;
    for_each_instance(&a.dc, &a.eq, &a.term, b, &mut |m| {
        if is_instance(&b_view.dc, &b_view.eq, &b_view.term, &m, b) {
            true
        } else {
            bad = Some(m);
            false
        }
    });
    bad.map_or(Ok(()), Err)
}

/// Bounded instance-set equality of two views.
pub fn ground_equiv_check(a: &GroundView, c: &GroundView, b: &Bounds) -> bool {
    ground_included(a, c, b).is_ok() && ground_included(c, a, b).is_ok()
}

/// Whether some assignment to the symbols of `eq` respects `dc` and
/// satisfies every constraint. Symbols not forced by an equality range over
/// their bounded values; forced values are unbounded.
pub fn ground_satisfiable(dc: &GroundDc, eq: &GroundEq, b: &Bounds) -> bool {
    let mut syms = BTreeSet::new();
    for (_, l, r) in eq {
        syms_of(l, &mut syms);
        syms_of(r, &mut syms);
    }
    search(dc, eq, &syms, BTreeMap::new(), b)
}

/// Extends `theta` with every value an equality forces. `None` on conflict.
fn propagate(dc: &GroundDc, eq: &GroundEq, mut theta: BTreeMap<u32, Term>, b: &Bounds) -> Option<BTreeMap<u32, Term>> {
    loop {
        let mut changed = false;
        for (is_eq, l, r) in eq {
            let (l, r) = (instantiate(l, &theta), instantiate(r, &theta));
            match (is_ground(&l), is_ground(&r)) {
                (true, true) => {
                    if (l == r) != *is_eq {
                        return None;
                    }
                }
                (false, true) | (true, false) if *is_eq => {
                    let (p, g) = if is_ground(&l) { (&r, &l) } else { (&l, &r) };
                    let mut forced = BTreeMap::new();
                    if !match_ground(p, g, &mut forced) {
                        return None;
                    }
                    for (s, v) in forced {
                        if !value_allowed(dc, s, &v, b) {
                            return None;
                        }
                        theta.insert(s, v);
                    }
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return Some(theta);
        }
    }
}

fn search(dc: &GroundDc, eq: &GroundEq, syms: &BTreeSet<u32>, theta: BTreeMap<u32, Term>, b: &Bounds) -> bool {
    let Some(theta) = propagate(dc, eq, theta, b) else { return false };
    let Some(s) = syms.iter().find(|s| !theta.contains_key(s)) else { return satisfies(eq, &theta) };
    symbol_values(dc, *s, b).into_iter().any(|v| {
        let mut t = theta.clone();
        t.insert(*s, v);
        search(dc, eq, syms, t, b)
    })
}
