//! Minimal knowledge sets, derivability constraints and their denotation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::toposort;
use petgraph::graphmap::DiGraphMap;
use serde::Serialize;
use thiserror::Error;

use crate::terms::{SymSubst, Term};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DerivError {
    #[error("derivability constraints are cyclic (involving sym({0}))")]
    Cyclic(u32),
}

/// A normalized knowledge set. Guessable terms are implicit and never stored.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MinimalSet {
    elems: BTreeSet<Term>,
}

fn held(set: &BTreeSet<Term>, t: &Term) -> bool {
    t.is_guessable() || set.contains(t)
}

/// Splits tuples recursively and drops guessable atoms.
fn flatten_into(t: &Term, out: &mut BTreeSet<Term>) {
    match t {
        Term::Tuple(es) => es.iter().for_each(|e| flatten_into(e, out)),
        t if t.is_guessable() => {}
        t => {
            out.insert(t.clone());
        }
    }
}

/// Normalizes `work`: closes it under projection and decryption, then drops
/// ciphertexts that can be rebuilt from their payload and key.
fn saturate(work: BTreeSet<Term>) -> BTreeSet<Term> {
    let mut known = BTreeSet::new();
    work.iter().for_each(|t| flatten_into(t, &mut known));
    loop {
        let mut additions = BTreeSet::new();
        for t in &known {
            if let Term::Enc(m, k) = t {
                if k.inverse_key().is_ok_and(|inv| held(&known, &inv)) {
                    flatten_into(m, &mut additions);
                }
            }
        }
        if additions.is_subset(&known) {
            break;
        }
        known.extend(additions);
    }
    let redundant: Vec<Term> = known
        .iter()
        .filter(|t| match t {
            Term::Enc(_, k) => held(&known, k) && k.inverse_key().is_ok_and(|inv| held(&known, &inv)),
            _ => false,
        })
        .cloned()
        .collect();
    for r in redundant {
        known.remove(&r);
    }
    known
}

impl MinimalSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Normalizes an arbitrary collection of terms.
    pub fn from_terms<I: IntoIterator<Item = Term>>(terms: I) -> Self {
        MinimalSet { elems: saturate(terms.into_iter().collect()) }
    }

    pub fn union(&self, other: &MinimalSet) -> MinimalSet {
        normalize_union(self, other)
    }

    pub fn with(&self, t: Term) -> MinimalSet {
        let mut e = self.elems.clone();
        e.insert(t);
        MinimalSet { elems: saturate(e) }
    }

    pub fn elems(&self) -> &BTreeSet<Term> {
        &self.elems
    }

    pub fn iter(&self) -> impl Iterator<Item = &Term> {
        self.elems.iter()
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Literal membership; guessables are implicitly members.
    pub fn contains(&self, t: &Term) -> bool {
        held(&self.elems, t)
    }

    pub fn symbols(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for t in &self.elems {
            t.collect_symbols(&mut out);
        }
        out
    }

    pub fn apply(&self, d: &SymSubst) -> MinimalSet {
        if d.is_empty() || self.symbols().is_disjoint(&d.domain()) {
            return self.clone();
        }
        MinimalSet::from_terms(self.elems.iter().map(|t| d.apply(t)))
    }

    pub fn map_terms(&self, f: impl Fn(&Term) -> Term) -> MinimalSet {
        MinimalSet::from_terms(self.elems.iter().map(f))
    }

    /// Checks the three structural conditions of a minimal set.
    pub fn is_minimal(&self) -> bool {
        self.elems.iter().all(|t| match t {
            Term::Tuple(_) => false,
            t if t.is_guessable() => false,
            Term::Enc(m, k) => match k.inverse_key() {
                Ok(inv) if held(&self.elems, &inv) => !held(&self.elems, k) && self.derives(m, &DerivSet::new()),
                _ => true,
            },
            _ => true,
        })
    }

    /// Ground Dolev-Yao derivability from this set, expanding symbols of the
    /// set's own members through `dc`.
    pub fn derives(&self, m: &Term, dc: &DerivSet) -> bool {
        if held(&self.elems, m) {
            return true;
        }
        match m {
            Term::Enc(a, k) => self.derives(a, dc) && self.derives(k, dc),
            Term::Tuple(es) => es.iter().all(|e| self.derives(e, dc)),
            Term::Pk(o) if matches!(**o, Term::Sym(_)) => self.derives(o, dc),
            Term::Sym(s) => match dc.get(*s) {
                Some(set) => set.iter().all(|e| self.derives(e, dc)),
                None => false,
            },
            _ => false,
        }
    }

    /// Every element of `other` is derivable from `self`.
    pub fn covers(&self, other: &MinimalSet, dc: &DerivSet) -> bool {
        other.iter().all(|t| self.derives(t, dc))
    }
}

impl fmt::Display for MinimalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, t) in self.elems.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for MinimalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub fn normalize_union(a: &MinimalSet, b: &MinimalSet) -> MinimalSet {
    let mut e = a.elems.clone();
    e.extend(b.elems.iter().cloned());
    MinimalSet { elems: saturate(e) }
}

/// Derivability constraints `dc(sym, S)`, at most one per symbol.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DerivSet {
    map: BTreeMap<u32, MinimalSet>,
}

impl DerivSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, s: u32) -> Option<&MinimalSet> {
        self.map.get(&s)
    }

    pub fn contains(&self, s: u32) -> bool {
        self.map.contains_key(&s)
    }

    pub fn insert(&mut self, s: u32, set: MinimalSet) {
        self.map.insert(s, set);
    }

    pub fn remove(&mut self, s: u32) -> Option<MinimalSet> {
        self.map.remove(&s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u32, &MinimalSet)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_map(&self) -> &BTreeMap<u32, MinimalSet> {
        &self.map
    }

    /// Applies `d` to every constraint set; constraints on symbols in the
    /// domain of `d` are dropped.
    pub fn apply(&self, d: &SymSubst) -> DerivSet {
        if d.is_empty() {
            return self.clone();
        }
        DerivSet {
            map: self
                .map
                .iter()
                .filter(|(s, _)| d.get(**s).is_none())
                .map(|(s, set)| (*s, set.apply(d)))
                .collect(),
        }
    }

    /// Edge `a → b` iff the set of `b` mentions `a`.
    pub fn dependency_graph(&self) -> DiGraphMap<u32, ()> {
        let mut g = DiGraphMap::new();
        for s in self.map.keys() {
            g.add_node(*s);
        }
        for (b, set) in &self.map {
            for a in set.symbols() {
                if self.map.contains_key(&a) {
                    g.add_edge(a, *b, ());
                }
            }
        }
        g
    }

    pub fn topological_order(&self) -> Result<Vec<u32>, DerivError> {
        toposort(&self.dependency_graph(), None).map_err(|c| DerivError::Cyclic(c.node_id()))
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    /// `m ∈ DC(sym)`. Unconstrained symbols admit any term.
    pub fn derives(&self, sym: u32, m: &Term) -> bool {
        match self.map.get(&sym) {
            Some(set) => set.derives(m, self),
            None => true,
        }
    }

    /// Bounded enumeration of the ground terms denoted by `t`, by applying
    /// the symbol expansions in reverse topological order.
    pub fn denotation_sample(&self, t: &Term, b: &SampleBounds) -> Result<BTreeSet<Term>, DerivError> {
        let order = self.topological_order()?;
        let mut cur: BTreeSet<Term> = BTreeSet::from([t.clone()]);
        let mut closures: BTreeMap<u32, Vec<Term>> = BTreeMap::new();
        for s in order.iter().rev() {
            if !cur.iter().any(|x| x.contains_sym(*s)) {
                continue;
            }
            let vals = closures
                .entry(*s)
                .or_insert_with(|| bounded_closure(self.map[s].elems.iter().cloned(), b, true))
                .clone();
            let mut next = BTreeSet::new();
            for x in &cur {
                if !x.contains_sym(*s) {
                    next.insert(x.clone());
                    continue;
                }
                for v in &vals {
                    let single = SymSubst(BTreeMap::from([(*s, v.clone())]));
                    let y = single.apply(x);
                    if b.admits(&y) {
                        next.insert(y);
                    }
                }
            }
            cur = next;
        }
        Ok(cur.into_iter().filter(|x| x.is_ground() && b.admits(x) && well_keyed(x)).collect())
    }
}

impl fmt::Display for DerivSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, set)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "dc(sym({s}), {set})")?;
        }
        Ok(())
    }
}

impl fmt::Debug for DerivSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Limits for bounded enumeration of term sets.
#[derive(Clone, Debug)]
pub struct SampleBounds {
    /// Maximal nesting of `enc`/tuple constructors.
    pub depth: usize,
    /// Maximal tuple width.
    pub width: usize,
    /// Maximal number of nodes.
    pub size: usize,
    /// The guessable atoms available to everyone.
    pub guessables: Vec<Term>,
}

impl SampleBounds {
    pub fn admits(&self, t: &Term) -> bool {
        t.size() <= self.size && nesting(t) <= self.depth && max_width(t) <= self.width
    }
}

fn nesting(t: &Term) -> usize {
    match t {
        Term::Enc(m, k) => 1 + nesting(m).max(nesting(k)),
        Term::Tuple(es) => 1 + es.iter().map(nesting).max().unwrap_or(0),
        _ => 0,
    }
}

fn max_width(t: &Term) -> usize {
    match t {
        Term::Enc(m, k) => max_width(m).max(max_width(k)),
        Term::Tuple(es) => es.len().max(es.iter().map(max_width).max().unwrap_or(0)),
        _ => 0,
    }
}

fn well_keyed(t: &Term) -> bool {
    match t {
        Term::Enc(m, k) => k.is_key() && well_keyed(m),
        Term::Tuple(es) => es.iter().all(well_keyed),
        _ => true,
    }
}

/// All terms within `b` built from `base` and the guessables by encryption
/// and tupling. With `symbolic_keys`, symbols may stand in key position.
fn bounded_closure(base: impl Iterator<Item = Term>, b: &SampleBounds, symbolic_keys: bool) -> Vec<Term> {
    let mut set: BTreeSet<Term> = base.chain(b.guessables.iter().cloned()).filter(|t| b.admits(t)).collect();
    loop {
        let items: Vec<Term> = set.iter().cloned().collect();
        let keys: Vec<&Term> = items.iter().filter(|k| k.is_key() || (symbolic_keys && k.is_sym())).collect();
        let mut fresh = Vec::new();
        for m in &items {
            for k in &keys {
                let e = Term::enc(m.clone(), (*k).clone());
                if b.admits(&e) && !set.contains(&e) {
                    fresh.push(e);
                }
            }
        }
        for w in 2..=b.width {
            let mut acc = Vec::new();
            tuples_of(&items, w, b.size.saturating_sub(1), &mut acc, &mut fresh, b, &set);
        }
        if fresh.is_empty() {
            return set.into_iter().collect();
        }
        set.extend(fresh);
    }
}

fn tuples_of(
    items: &[Term],
    w: usize,
    budget: usize,
    acc: &mut Vec<Term>,
    out: &mut Vec<Term>,
    b: &SampleBounds,
    seen: &BTreeSet<Term>,
) {
    if acc.len() == w {
        let t = Term::Tuple(acc.clone());
        if b.admits(&t) && !seen.contains(&t) {
            out.push(t);
        }
        return;
    }
    let remaining_slots = w - acc.len() - 1;
    for it in items {
        let sz = it.size();
        if sz + remaining_slots > budget {
            continue;
        }
        acc.push(it.clone());
        tuples_of(items, w, budget - sz, acc, out, b, seen);
        acc.pop();
    }
}
