//! Symbolic message generation for the Dolev-Yao intruder.

use std::collections::{BTreeMap, BTreeSet};

use crate::comparison::unify;
use crate::derivability::{DerivSet, MinimalSet};
use crate::terms::{Name, Sort, SymSubst, Term, VarSubst};

/// One way of producing the requested message: symbols fixed by `ssb`,
/// remaining symbols constrained by `dc`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GenSolution {
    pub ssb: SymSubst,
    pub dc: DerivSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenResult {
    /// Fresh symbols for the variables of the requested pattern.
    pub sb: VarSubst,
    pub solutions: Vec<GenSolution>,
}

/// Variables of `t` in order of first occurrence.
pub fn vars_in_order(t: &Term) -> Vec<(Name, Sort)> {
    fn go(t: &Term, seen: &mut BTreeSet<Name>, out: &mut Vec<(Name, Sort)>) {
        match t {
            Term::Var(n, s) => {
                if seen.insert(n.clone()) {
                    out.push((n.clone(), *s));
                }
            }
            Term::Pk(o) | Term::Sk(o) => go(o, seen, out),
            Term::Enc(m, k) => {
                go(m, seen, out);
                go(k, seen, out);
            }
            Term::Tuple(es) => es.iter().for_each(|e| go(e, seen, out)),
            _ => {}
        }
    }
    let mut out = Vec::new();
    go(t, &mut BTreeSet::new(), &mut out);
    out
}

/// Maps each variable of `terms` to a fresh symbol drawn from `next_sym`.
pub fn freshen(terms: &[&Term], next_sym: &mut u32) -> VarSubst {
    let mut sb = VarSubst::new();
    for t in terms {
        for (v, _) in vars_in_order(t) {
            if sb.get(&v).is_none() {
                sb.insert(v, Term::Sym(*next_sym));
                *next_sym += 1;
            }
        }
    }
    sb
}

fn finish(mut sols: Vec<GenSolution>) -> Vec<GenSolution> {
    sols.retain(|s| s.dc.is_acyclic());
    sols.sort();
    sols.dedup();
    sols
}

/// Generates `target` from `ik` under `dc`. Variables of `target` are first
/// replaced by fresh symbols.
pub fn sgen(target: &Term, ik: &MinimalSet, dc: &DerivSet, next_sym: &mut u32) -> GenResult {
    let sb = freshen(&[target], next_sym);
    let m = sb.apply(target);
    let solutions = finish(generate(&m, ik, &SymSubst::new(), dc));
    GenResult { sb, solutions }
}

/// Solutions for a symbolic `m` (no variables) from knowledge `k`, refining
/// the partial solution `(ssb, dc)`.
pub fn generate(m: &Term, k: &MinimalSet, ssb: &SymSubst, dc: &DerivSet) -> Vec<GenSolution> {
    let m = ssb.apply(m);
    let k = k.apply(ssb);
    let base = GenSolution { ssb: ssb.clone(), dc: dc.clone() };
    match &m {
        Term::Sym(s) => match dc.get(*s) {
            Some(own) => {
                if !k.covers(own, dc) && own.covers(&k, dc) {
                    let mut dc = dc.clone();
                    dc.insert(*s, k.clone());
                    vec![GenSolution { ssb: ssb.clone(), dc }]
                } else {
                    vec![base]
                }
            }
            None => {
                let mut dc = dc.clone();
                dc.insert(*s, k.clone());
                vec![GenSolution { ssb: ssb.clone(), dc }]
            }
        },
        t if t.is_guessable() => vec![base],
        Term::Pk(o) if matches!(**o, Term::Sym(_)) => generate(o, &k, ssb, dc),
        Term::Tuple(es) => {
            let mut sols = vec![base];
            for e in es {
                sols = sols.into_iter().flat_map(|s| generate(e, &k, &s.ssb, &s.dc)).collect();
                if sols.is_empty() {
                    break;
                }
            }
            sols
        }
        Term::Enc(p, key) => {
            let mut sols = generate(&Term::tuple(vec![(**p).clone(), (**key).clone()]), &k, ssb, dc);
            for c in k.iter().filter(|c| matches!(c, Term::Enc(..))) {
                if let Some(theta) = unify(&[(m.clone(), c.clone())]) {
                    sols.extend(check_subst(&theta, ssb, dc));
                }
            }
            sols
        }
        atom => {
            if k.contains(atom) {
                return vec![base];
            }
            let mut sols = Vec::new();
            if !atom.symbols().is_empty() {
                for c in k.iter().filter(|c| c.is_atomic() && !c.is_sym()) {
                    if let Some(theta) = unify(&[(atom.clone(), c.clone())]) {
                        sols.extend(check_subst(&theta, ssb, dc));
                    }
                }
            }
            sols
        }
    }
}

/// Threads each binding of `candidate` through [`check_bnd`], starting from
/// `(ambient, dc)`.
pub fn check_subst(candidate: &SymSubst, ambient: &SymSubst, dc: &DerivSet) -> Vec<GenSolution> {
    let mut sols = vec![GenSolution { ssb: ambient.clone(), dc: dc.clone() }];
    for (s, t) in candidate.iter() {
        sols = sols.into_iter().flat_map(|sol| bind_one(*s, t, sol)).collect();
        if sols.is_empty() {
            break;
        }
    }
    sols
}

fn bind_one(s: u32, t: &Term, sol: GenSolution) -> Vec<GenSolution> {
    let lhs = sol.ssb.apply(&Term::Sym(s));
    let rhs = sol.ssb.apply(t);
    if lhs == rhs {
        return vec![sol];
    }
    match (&lhs, &rhs) {
        (Term::Sym(x), _) => check_bnd(*x, &rhs, &sol.ssb, &sol.dc),
        (_, Term::Sym(y)) => check_bnd(*y, &lhs, &sol.ssb, &sol.dc),
        _ => match unify(&[(lhs, rhs)]) {
            Some(theta) => check_subst(&theta, &sol.ssb, &sol.dc),
            None => Vec::new(),
        },
    }
}

/// Binds `sym ↦ m` in the context `(ambient, dc)`, keeping only the
/// instances that respect `sym`'s derivability constraint.
pub fn check_bnd(sym: u32, m: &Term, ambient: &SymSubst, dc: &DerivSet) -> Vec<GenSolution> {
    let m = ambient.apply(m);
    if m == Term::Sym(sym) {
        return vec![GenSolution { ssb: ambient.clone(), dc: dc.clone() }];
    }
    if m.contains_sym(sym) {
        return Vec::new();
    }
    let single = SymSubst(BTreeMap::from([(sym, m.clone())]));
    let mut ssb1 = ambient.clone();
    ssb1.bind(sym, m.clone());
    let mut dc0 = dc.clone();
    let own = dc0.remove(sym);
    let mut dc1 = dc0.apply(&single);
    let Some(own) = own else {
        return vec![GenSolution { ssb: ssb1, dc: dc1 }];
    };
    match &m {
        Term::Sym(y) => {
            let set = match dc.get(*y) {
                None => own,
                Some(theirs) => {
                    if sym < *y {
                        own
                    } else {
                        theirs.clone()
                    }
                }
            };
            dc1.insert(*y, set.apply(&single));
            vec![GenSolution { ssb: ssb1, dc: dc1 }]
        }
        _ => generate(&m, &own.apply(&single), &ssb1, &dc1),
    }
}

/// Matching for conditionals: variables on either side become fresh symbols,
/// then both sides are unified and the unifier is checked against `dc`.
/// Fresh symbols left unconstrained are bound to the intruder knowledge.
pub fn sgen_match(lhs: &Term, rhs: &Term, ik: &MinimalSet, dc: &DerivSet, next_sym: &mut u32) -> GenResult {
    let sb = freshen(&[lhs, rhs], next_sym);
    let (l, r) = (sb.apply(lhs), sb.apply(rhs));
    let fresh: Vec<u32> = sb.0.values().filter_map(|t| if let Term::Sym(s) = t { Some(*s) } else { None }).collect();
    let Some(theta) = unify(&[(l, r)]) else {
        return GenResult { sb, solutions: Vec::new() };
    };
    let mut sols = check_subst(&theta, &SymSubst::new(), dc);
    for sol in &mut sols {
        for s in &fresh {
            if sol.ssb.get(*s).is_none() && !sol.dc.contains(*s) {
                sol.dc.insert(*s, ik.apply(&sol.ssb));
            }
        }
    }
    GenResult { sb, solutions: finish(sols) }
}
