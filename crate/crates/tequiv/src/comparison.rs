//! Equality/inequality constraints and their satisfiability.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::derivability::DerivSet;
use crate::intruder;
use crate::terms::{SymSubst, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CompKind {
    Eq,
    Neq,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CompConstraint {
    pub kind: CompKind,
    pub lhs: Term,
    pub rhs: Term,
}

impl CompConstraint {
    pub fn eq(lhs: Term, rhs: Term) -> Self {
        CompConstraint { kind: CompKind::Eq, lhs, rhs }
    }

    pub fn neq(lhs: Term, rhs: Term) -> Self {
        CompConstraint { kind: CompKind::Neq, lhs, rhs }
    }

    pub fn apply(&self, d: &SymSubst) -> Self {
        CompConstraint { kind: self.kind, lhs: d.apply(&self.lhs), rhs: d.apply(&self.rhs) }
    }

    pub fn map_terms(&self, f: impl Fn(&Term) -> Term) -> Self {
        CompConstraint { kind: self.kind, lhs: f(&self.lhs), rhs: f(&self.rhs) }
    }
}

impl fmt::Display for CompConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            CompKind::Eq => "Eq",
            CompKind::Neq => "Neq",
        };
        write!(f, "{k}({},{})", self.lhs, self.rhs)
    }
}

impl fmt::Debug for CompConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Conjunction of comparison constraints.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CompSet {
    pub constraints: BTreeSet<CompConstraint>,
}

impl FromIterator<CompConstraint> for CompSet {
    fn from_iter<I: IntoIterator<Item = CompConstraint>>(it: I) -> Self {
        CompSet { constraints: it.into_iter().collect() }
    }
}

impl CompSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, c: CompConstraint) {
        self.constraints.insert(c);
    }

    pub fn with(&self, c: CompConstraint) -> Self {
        let mut out = self.clone();
        out.insert(c);
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = &CompConstraint> {
        self.constraints.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    /// Applies `d`; syntactically trivial equalities are dropped.
    pub fn apply(&self, d: &SymSubst) -> Self {
        CompSet {
            constraints: self
                .constraints
                .iter()
                .map(|c| c.apply(d))
                .filter(|c| !(c.kind == CompKind::Eq && c.lhs == c.rhs))
                .collect(),
        }
    }

    pub fn map_terms(&self, f: impl Fn(&Term) -> Term) -> Self {
        CompSet { constraints: self.constraints.iter().map(|c| c.map_terms(&f)).collect() }
    }

    pub fn symbols(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for c in &self.constraints {
            c.lhs.collect_symbols(&mut out);
            c.rhs.collect_symbols(&mut out);
        }
        out
    }

    pub fn equalities(&self) -> impl Iterator<Item = &CompConstraint> {
        self.constraints.iter().filter(|c| c.kind == CompKind::Eq)
    }

    pub fn inequalities(&self) -> impl Iterator<Item = &CompConstraint> {
        self.constraints.iter().filter(|c| c.kind == CompKind::Neq)
    }
}

impl fmt::Display for CompSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.constraints.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for CompSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Syntactic most general unifier of all pairs, with symbols as the only
/// unification variables. When two symbols meet, the younger one is bound
/// to the older one.
pub fn unify(pairs: &[(Term, Term)]) -> Option<SymSubst> {
    let mut subst = SymSubst::new();
    let mut work: Vec<(Term, Term)> = pairs.to_vec();
    while let Some((a, b)) = work.pop() {
        let a = subst.apply(&a);
        let b = subst.apply(&b);
        if a == b {
            continue;
        }
        match (a, b) {
            (Term::Sym(x), Term::Sym(y)) => {
                let (young, old) = if x > y { (x, y) } else { (y, x) };
                subst.bind(young, Term::Sym(old));
            }
            (Term::Sym(x), t) | (t, Term::Sym(x)) => {
                if t.contains_sym(x) {
                    return None;
                }
                subst.bind(x, t);
            }
            (Term::Enc(m1, k1), Term::Enc(m2, k2)) => {
                work.push((*m1, *m2));
                work.push((*k1, *k2));
            }
            (Term::Tuple(xs), Term::Tuple(ys)) if xs.len() == ys.len() => {
                work.extend(xs.into_iter().zip(ys));
            }
            (Term::Pk(x), Term::Pk(y)) | (Term::Sk(x), Term::Sk(y)) => work.push((*x, *y)),
            _ => return None,
        }
    }
    Some(subst)
}

/// One-sided matching: symbols of `pattern` are bound to subterms of
/// `target`, whose own symbols are treated as constants.
pub fn match_term(pattern: &Term, target: &Term) -> Option<BTreeMap<u32, Term>> {
    let mut theta = BTreeMap::new();
    if match_into(pattern, target, &mut theta) {
        Some(theta)
    } else {
        None
    }
}

fn match_into(p: &Term, t: &Term, theta: &mut BTreeMap<u32, Term>) -> bool {
    match (p, t) {
        (Term::Sym(s), _) => match theta.get(s) {
            Some(bound) => bound == t,
            None => {
                theta.insert(*s, t.clone());
                true
            }
        },
        (Term::Enc(m1, k1), Term::Enc(m2, k2)) => match_into(m1, m2, theta) && match_into(k1, k2, theta),
        (Term::Tuple(xs), Term::Tuple(ys)) if xs.len() == ys.len() => {
            xs.iter().zip(ys).all(|(x, y)| match_into(x, y, theta))
        }
        (Term::Pk(x), Term::Pk(y)) | (Term::Sk(x), Term::Sk(y)) => match_into(x, y, theta),
        _ => p == t,
    }
}

/// Outcome of [`eq_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EqCheck {
    /// Satisfiable; carries the witnessing substitution and the refined
    /// derivability constraints it induces.
    Sat { witness: SymSubst, dc: DerivSet },
    Unsat,
}

impl EqCheck {
    pub fn is_sat(&self) -> bool {
        matches!(self, EqCheck::Sat { .. })
    }
}

/// Satisfiability of `eq` w.r.t. `dc`: unify the equalities, reject
/// syntactically violated inequalities, and require the unifier to be
/// consistent with the derivability constraints.
pub fn eq_check(eq: &CompSet, dc: &DerivSet) -> EqCheck {
    let pairs: Vec<(Term, Term)> = eq.equalities().map(|c| (c.lhs.clone(), c.rhs.clone())).collect();
    let Some(mgu) = unify(&pairs) else { return EqCheck::Unsat };
    let neqs: Vec<&CompConstraint> = eq.inequalities().collect();
    if neqs.iter().any(|c| mgu.apply(&c.lhs) == mgu.apply(&c.rhs)) {
        return EqCheck::Unsat;
    }
    for sol in intruder::check_subst(&mgu, &SymSubst::new(), dc) {
        if neqs.iter().all(|c| sol.ssb.apply(&c.lhs) != sol.ssb.apply(&c.rhs)) {
            return EqCheck::Sat { witness: sol.ssb, dc: sol.dc };
        }
    }
    EqCheck::Unsat
}

/// Whether a ground `m` belongs to `DC(t)` restricted by `eq`.
pub fn in_restricted_denotation(dc: &DerivSet, eq: &CompSet, t: &Term, m: &Term) -> bool {
    let Some(theta) = match_term(t, m) else { return false };
    if !theta.iter().all(|(s, v)| dc.derives(*s, v)) {
        return false;
    }
    let theta = SymSubst(theta);
    eq.iter().all(|c| {
        let (l, r) = (theta.apply(&c.lhs), theta.apply(&c.rhs));
        match c.kind {
            CompKind::Eq => l == r,
            CompKind::Neq => l != r,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivability::MinimalSet;

    fn sym(i: u32) -> Term {
        Term::Sym(i)
    }

    #[test]
    fn unify_with_occur_check() {
        assert!(unify(&[(sym(1), Term::tuple(vec![sym(1), Term::text("a")]))]).is_none());
        let s = unify(&[(
            Term::enc(Term::tuple(vec![Term::Nonce(0, 0), sym(3)]), Term::pk(Term::player("alice"))),
            Term::enc(Term::tuple(vec![sym(1), Term::Nonce(1, 0)]), Term::pk(sym(2))),
        )])
        .unwrap();
        assert_eq!(s.get(1), Some(&Term::Nonce(0, 0)));
        assert_eq!(s.get(2), Some(&Term::player("alice")));
        assert_eq!(s.get(3), Some(&Term::Nonce(1, 0)));
    }

    #[test]
    fn eq_check_basics() {
        assert!(eq_check(&CompSet::new(), &DerivSet::new()).is_sat());
        let t1 = Term::text("t1");
        let neq = CompSet::from_iter([CompConstraint::neq(t1.clone(), t1.clone())]);
        assert_eq!(eq_check(&neq, &DerivSet::new()), EqCheck::Unsat);
    }

    #[test]
    fn eq_check_with_nested_sets() {
        let (t1, t2) = (Term::text("t1"), Term::text("t2"));
        let mut dc = DerivSet::new();
        dc.insert(1, MinimalSet::from_terms([t1.clone()]));
        dc.insert(2, MinimalSet::from_terms([t1.clone(), t2.clone()]));
        let eq = CompSet::from_iter([CompConstraint::eq(sym(1), sym(2)), CompConstraint::eq(sym(2), t1.clone())]);
        assert!(eq_check(&eq, &dc).is_sat());
        let eq = CompSet::from_iter([CompConstraint::eq(sym(1), sym(2)), CompConstraint::eq(sym(2), t2)]);
        assert_eq!(eq_check(&eq, &dc), EqCheck::Unsat);
    }

    #[test]
    fn restricted_denotation_example() {
        let (t1, t2) = (Term::text("t1"), Term::text("t2"));
        let mut dc = DerivSet::new();
        dc.insert(1, MinimalSet::from_terms([t1.clone()]));
        dc.insert(2, MinimalSet::from_terms([t2.clone()]));
        let pair = Term::tuple(vec![sym(1), sym(2)]);
        let inst = Term::tuple(vec![t1.clone(), t2.clone()]);
        assert!(in_restricted_denotation(&dc, &CompSet::new(), &pair, &inst));
        let eq = CompSet::from_iter([CompConstraint::eq(sym(1), sym(2))]);
        assert!(!in_restricted_denotation(&dc, &eq, &pair, &inst));
        let neq = CompSet::from_iter([CompConstraint::neq(sym(1), t1.clone())]);
        assert!(!in_restricted_denotation(&dc, &neq, &Term::tuple(vec![sym(1), t2.clone()]), &inst));
    }
}
