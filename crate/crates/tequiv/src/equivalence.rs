//! Black-box terms, term approximation and timed observational equivalence.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use crate::comparison::{eq_check, match_term, unify, CompKind, CompSet, EqCheck};
use crate::derivability::{DerivSet, MinimalSet};
use crate::semantics::{enumerate, rename_apart, Configuration, EnumOptions, Enumeration, Observable};
use crate::terms::{SymSubst, Term};
use crate::timecon::{check_timed_match, smt_check, timed_match_smtlib, SmtError, SmtStatus, TimeVar};

/// Player index used for the shared nonces that replace paired black boxes.
pub const BIJECTION_PLAYER: u32 = u32::MAX;

/// Offset applied to the right observable's symbols, nonces and clocks.
pub const RENAME_OFFSET: u32 = 1 << 20;

/// Placeholder for the parts of a term hidden by black-box restriction.
pub fn star() -> Term {
    Term::public_text("*")
}

fn is_black_box(t: &Term, ik: &MinimalSet, dc: &DerivSet) -> bool {
    match t {
        Term::Nonce(..) => true,
        Term::Enc(_, k) => match k.inverse_key() {
            Ok(inv) => !ik.derives(&inv, dc),
            Err(_) => true,
        },
        _ => false,
    }
}

/// Nonces and undecryptable ciphertexts occurring in the labels.
pub fn black_box_set(o: &Observable) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    for l in &o.labels {
        for s in l.term.subterms() {
            if is_black_box(s, &o.ik, &o.dc) {
                out.insert(s.clone());
            }
        }
    }
    out
}

/// Replaces every part of `t` that is neither a black box nor contains one
/// by [`star`].
pub fn restrict_to_bb(t: &Term, bb: &BTreeSet<Term>) -> Term {
    if bb.contains(t) {
        return t.clone();
    }
    let r = match t {
        Term::Tuple(es) => Term::Tuple(es.iter().map(|e| restrict_to_bb(e, bb)).collect()),
        Term::Enc(m, k) => Term::Enc(Box::new(restrict_to_bb(m, bb)), Box::new(restrict_to_bb(k, bb))),
        Term::Pk(x) => Term::Pk(Box::new(restrict_to_bb(x, bb))),
        Term::Sk(x) => Term::Sk(Box::new(restrict_to_bb(x, bb))),
        _ => return star(),
    };
    let children_hidden = match &r {
        Term::Tuple(es) => es.iter().all(|e| *e == star()),
        Term::Enc(m, k) => **m == star() && **k == star(),
        Term::Pk(x) | Term::Sk(x) => **x == star(),
        _ => false,
    };
    if children_hidden {
        star()
    } else {
        r
    }
}

/// Pairs of black boxes (left, right) found by parallel traversal of the
/// label terms.
pub type Bijection = Vec<(Term, Term)>;

struct BijBuilder<'a> {
    left: &'a Observable,
    right: &'a Observable,
    fwd: BTreeMap<Term, Term>,
    bwd: BTreeMap<Term, Term>,
}

impl BijBuilder<'_> {
    fn bb_l(&self, t: &Term) -> bool {
        is_black_box(t, &self.left.ik, &self.left.dc)
    }

    fn bb_r(&self, t: &Term) -> bool {
        is_black_box(t, &self.right.ik, &self.right.dc)
    }

    fn contains_bb_l(&self, t: &Term) -> bool {
        t.subterms().into_iter().any(|s| self.bb_l(s))
    }

    fn contains_bb_r(&self, t: &Term) -> bool {
        t.subterms().into_iter().any(|s| self.bb_r(s))
    }

    fn pair(&mut self, a: &Term, b: &Term) -> bool {
        match (self.fwd.get(a), self.bwd.get(b)) {
            (Some(x), _) if x != b => false,
            (_, Some(y)) if y != a => false,
            _ => {
                self.fwd.insert(a.clone(), b.clone());
                self.bwd.insert(b.clone(), a.clone());
                true
            }
        }
    }

    fn walk(&mut self, a: &Term, b: &Term) -> bool {
        let (ba, bb) = (self.bb_l(a), self.bb_r(b));
        if ba && bb {
            return self.pair(a, b);
        }
        // A black box facing a symbol stays unpaired; term approximation
        // decides whether the symbol can stand for it.
        if ba || bb {
            return a.is_sym() || b.is_sym();
        }
        if !self.contains_bb_l(a) && !self.contains_bb_r(b) {
            return true;
        }
        if a.is_sym() || b.is_sym() {
            return true;
        }
        match (a, b) {
            (Term::Tuple(xs), Term::Tuple(ys)) if xs.len() == ys.len() => {
                xs.iter().zip(ys).all(|(x, y)| self.walk(x, y))
            }
            (Term::Enc(m1, k1), Term::Enc(m2, k2)) => self.walk(m1, m2) && self.walk(k1, k2),
            (Term::Pk(x), Term::Pk(y)) | (Term::Sk(x), Term::Sk(y)) => self.walk(x, y),
            _ => false,
        }
    }
}

/// The bijection induced by positional traversal, if it is consistent.
pub fn find_bijection(left: &Observable, right: &Observable) -> Option<Bijection> {
    if left.labels.len() != right.labels.len() {
        return None;
    }
    let mut b = BijBuilder { left, right, fwd: BTreeMap::new(), bwd: BTreeMap::new() };
    for (l, r) in left.labels.iter().zip(&right.labels) {
        if l.sign != r.sign || !b.walk(&l.term, &r.term) {
            return None;
        }
    }
    Some(b.fwd.into_iter().collect())
}

fn replace_in(o: &Observable, map: &BTreeMap<Term, Term>) -> Observable {
    if map.is_empty() {
        return o.clone();
    }
    let f = |t: &Term| t.replace_subterms(map);
    let mut dc = DerivSet::new();
    for (s, set) in o.dc.iter() {
        dc.insert(*s, MinimalSet::from_terms(set.iter().map(f)));
    }
    Observable {
        start_clock: o.start_clock.clone(),
        labels: o
            .labels
            .iter()
            .map(|l| crate::semantics::Label { sign: l.sign, term: f(&l.term), at: l.at.clone() })
            .collect(),
        ik: MinimalSet::from_terms(o.ik.iter().map(f)),
        dc,
        eq: o.eq.map_terms(f),
        tc: o.tc.clone(),
    }
}

/// Replaces each paired black box on both sides by the same fresh nonce.
pub fn apply_bijection(left: &Observable, right: &Observable, bij: &Bijection) -> (Observable, Observable) {
    let mut lm = BTreeMap::new();
    let mut rm = BTreeMap::new();
    for (i, (a, b)) in bij.iter().enumerate() {
        let n = Term::Nonce(BIJECTION_PLAYER, i as u32);
        lm.insert(a.clone(), n.clone());
        rm.insert(b.clone(), n);
    }
    (replace_in(left, &lm), replace_in(right, &rm))
}

/// Whether every instance of `m` under `dc` is an instance of the right
/// symbol `sym_r` under `dc_r`.
pub fn sym_der(sym_r: u32, m: &Term, dc: &DerivSet, dc_r: &DerivSet) -> bool {
    match dc_r.get(sym_r) {
        Some(set) => set.derives(m, dc),
        None => true,
    }
}

/// A matcher `θ` with `θ[m_r] = m` whose bindings all pass [`sym_der`].
pub fn term_approx(m: &Term, m_r: &Term, dc: &DerivSet, dc_r: &DerivSet) -> Option<SymSubst> {
    let theta = match_term(m_r, m)?;
    if theta.iter().all(|(s, t)| sym_der(*s, t, dc, dc_r)) {
        Some(SymSubst(theta))
    } else {
        None
    }
}

/// Whether some instantiation allowed by `dc` and `eq` makes `m1` and `m2`
/// equal.
pub fn can_eq(m1: &Term, m2: &Term, dc: &DerivSet, eq: &CompSet) -> bool {
    can_eq_with(m1, m2, dc, eq, &BTreeSet::new())
}

/// [`can_eq`] where the symbols in `free` are universally quantified
/// wildcards: any instance of them may be chosen.
pub fn can_eq_with(m1: &Term, m2: &Term, dc: &DerivSet, eq: &CompSet, free: &BTreeSet<u32>) -> bool {
    let Some(sigma) = unify(&[(m1.clone(), m2.clone())]) else { return false };
    let consistent = eq.iter().all(|c| {
        let (l, r) = (sigma.apply(&c.lhs), sigma.apply(&c.rhs));
        match c.kind {
            CompKind::Eq => unify(&[(l, r)]).is_some(),
            CompKind::Neq => l != r,
        }
    });
    if !consistent {
        return false;
    }
    let mut dc = dc.clone();
    for s in free {
        dc.insert(*s, MinimalSet::new());
    }
    let ok = sigma.iter().all(|(s, t)| free.contains(s) || dc.derives(*s, t));
    ok
}

/// Restricted denotation inclusion of the left label terms in the right
/// ones. Both observables must already share paired black boxes.
pub fn term_eq_approx(left: &Observable, right: &Observable) -> bool {
    let EqCheck::Sat { witness: w, dc } = eq_check(&left.eq, &left.dc) else { return true };
    let EqCheck::Sat { witness: w_r, dc: dc_r } = eq_check(&right.eq, &right.dc) else { return false };
    let m = w.apply_closed(&Term::tuple(left.labels.iter().map(|l| l.term.clone()).collect()));
    let m_r = w_r.apply_closed(&Term::tuple(right.labels.iter().map(|l| l.term.clone()).collect()));
    let Some(theta) = term_approx(&m, &m_r, &dc, &dc_r) else { return false };
    let eq = CompSet::from_iter(left.eq.iter().map(|c| c.map_terms(|t| w.apply_closed(t))));
    let mut left_syms = m.symbols();
    left_syms.extend(eq.symbols());
    right.eq.iter().filter(|c| c.kind == CompKind::Neq).all(|c| {
        // Right symbols left unbound by θ come from failed matches and are
        // universally quantified, so they act as unification variables.
        let a = theta.apply(&w_r.apply_closed(&c.lhs));
        let b = theta.apply(&w_r.apply_closed(&c.rhs));
        let free: BTreeSet<u32> =
            a.symbols().union(&b.symbols()).copied().filter(|s| !dc.contains(*s) && !left_syms.contains(s)).collect();
        !can_eq_with(&w.apply_closed(&a), &w.apply_closed(&b), &dc, &eq, &free)
    })
}

/// How timing obligations are discharged.
#[derive(Clone, Debug)]
pub enum Solver {
    Internal,
    External { command: String, timeout: Duration },
}

#[derive(Clone, Debug)]
pub struct EquivOptions {
    pub solver: Solver,
    pub jobs: usize,
    /// Require term equivalence in both directions for every matched pair
    /// instead of inclusion in the direction being checked.
    pub strict_terms: bool,
}

impl Default for EquivOptions {
    fn default() -> Self {
        EquivOptions { solver: Solver::Internal, jobs: 1, strict_terms: false }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EquivError {
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error("solver returned unknown on a timing obligation")]
    Unknown,
}

fn timed_match(o: &Observable, o_r: &Observable, solver: &Solver) -> Result<bool, EquivError> {
    let mut pairs: Vec<(TimeVar, TimeVar)> = vec![(o.start_clock.clone(), o_r.start_clock.clone())];
    pairs.extend(o.labels.iter().zip(&o_r.labels).map(|(a, b)| (a.at.clone(), b.at.clone())));
    let swapped: Vec<(TimeVar, TimeVar)> = pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
    match solver {
        Solver::Internal => {
            Ok(check_timed_match(&o.tc, &o_r.tc, &pairs) && check_timed_match(&o_r.tc, &o.tc, &swapped))
        }
        Solver::External { command, timeout } => {
            for (a, b, p) in [(&o.tc, &o_r.tc, &pairs), (&o_r.tc, &o.tc, &swapped)] {
                match smt_check(command, &timed_match_smtlib(a, b, p), *timeout)? {
                    SmtStatus::Unsat => {}
                    SmtStatus::Sat => return Ok(false),
                    SmtStatus::Unknown => return Err(EquivError::Unknown),
                }
            }
            Ok(true)
        }
    }
}

/// Checks the five equivalence conditions in order. `Ok(None)` means
/// equivalent; `Ok(Some(n))` names the first failing condition. The right
/// observable must already be renamed apart from the left one.
pub fn observable_equiv(o: &Observable, o_r: &Observable, solver: &Solver) -> Result<Option<u8>, EquivError> {
    observable_match(o, o_r, solver, true)
}

/// Like [`observable_equiv`], but with `mutual_terms == false` condition 4
/// only requires the terms of `o` to be included in those of `o_r`.
pub fn observable_match(o: &Observable, o_r: &Observable, solver: &Solver, mutual_terms: bool) -> Result<Option<u8>, EquivError> {
    if o.labels.len() != o_r.labels.len() {
        return Ok(Some(1));
    }
    if o.labels.iter().zip(&o_r.labels).any(|(a, b)| a.sign != b.sign) {
        return Ok(Some(2));
    }
    let Some(bij) = find_bijection(o, o_r) else { return Ok(Some(3)) };
    let (l, r) = apply_bijection(o, o_r, &bij);
    if !term_eq_approx(&l, &r) || (mutual_terms && !term_eq_approx(&r, &l)) {
        return Ok(Some(4));
    }
    if !timed_match(o, o_r, solver)? {
        return Ok(Some(5));
    }
    Ok(None)
}

/// Human-readable rendering of an observable for reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObservableReport {
    pub labels: Vec<String>,
    pub ik: String,
    pub dc: String,
    pub eq: String,
    pub tc: Vec<String>,
}

impl ObservableReport {
    pub fn of(o: &Observable) -> Self {
        ObservableReport {
            labels: o.labels.iter().map(|l| l.to_string()).collect(),
            ik: o.ik.to_string(),
            dc: o.dc.to_string(),
            eq: o.eq.to_string(),
            tc: o.tc.iter().map(|c| c.smt()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    /// Side of the observable that has no equivalent on the other side.
    pub side: Side,
    pub index: usize,
    /// Furthest condition reached against any candidate (1 to 5).
    pub condition: u8,
    pub observable: ObservableReport,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub equivalent: bool,
    pub left_observables: usize,
    pub right_observables: usize,
    pub states_explored: [usize; 2],
    pub witness: Option<Witness>,
}

type Bucket = (usize, Vec<crate::semantics::Sign>);

fn bucket(o: &Observable) -> Bucket {
    (o.labels.len(), o.labels.iter().map(|l| l.sign).collect())
}

/// Finds the first observable of `from` with no equivalent in `to`.
/// Returns its index and the furthest failing condition.
fn approximates(from: &[Observable], to: &[Observable], opts: &EquivOptions) -> Result<Option<(usize, u8)>, EquivError> {
    let (solver, jobs) = (&opts.solver, opts.jobs);
    let mut buckets: BTreeMap<Bucket, Vec<&Observable>> = BTreeMap::new();
    for o in to {
        buckets.entry(bucket(o)).or_default().push(o);
    }
    let lens: BTreeSet<usize> = to.iter().map(|o| o.labels.len()).collect();
    let check = |(i, o): (usize, &Observable)| -> Result<Option<(usize, u8)>, EquivError> {
        let Some(cands) = buckets.get(&bucket(o)) else {
            return Ok(Some((i, if lens.contains(&o.labels.len()) { 2 } else { 1 })));
        };
        let mut furthest = 3;
        for c in cands {
            match observable_match(o, c, solver, opts.strict_terms)? {
                None => return Ok(None),
                Some(n) => furthest = furthest.max(n),
            }
        }
        Ok(Some((i, furthest)))
    };
    if jobs <= 1 {
        for item in from.iter().enumerate() {
            if let Some(w) = check(item)? {
                return Ok(Some(w));
            }
        }
        return Ok(None);
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
    pool.install(|| {
        let results: Vec<Result<Option<(usize, u8)>, EquivError>> = from.par_iter().enumerate().map(check).collect();
        for r in results {
            if let Some(w) = r? {
                return Ok(Some(w));
            }
        }
        Ok(None)
    })
}

/// Observational equivalence of two sets of observables, both directions.
pub fn config_equiv(
    left: &[Observable],
    right: &[Observable],
    states: [usize; 2],
    opts: &EquivOptions,
) -> Result<Verdict, EquivError> {
    let right_renamed: Vec<Observable> = right.iter().map(|o| rename_apart(o, RENAME_OFFSET)).collect();
    let mut witness = None;
    if let Some((i, c)) = approximates(left, &right_renamed, opts)? {
        witness = Some(Witness { side: Side::Left, index: i, condition: c, observable: ObservableReport::of(&left[i]) });
    } else if let Some((i, c)) = approximates(&right_renamed, left, opts)? {
        witness = Some(Witness { side: Side::Right, index: i, condition: c, observable: ObservableReport::of(&right[i]) });
    }
    Ok(Verdict {
        equivalent: witness.is_none(),
        left_observables: left.len(),
        right_observables: right.len(),
        states_explored: states,
        witness,
    })
}

/// Result of a full run: the verdict and both enumerations.
#[derive(Clone, Debug)]
pub struct Run {
    pub verdict: Verdict,
    pub left: Enumeration,
    pub right: Enumeration,
}

/// Enumerates both configurations (concurrently when `opts.jobs > 1`) and
/// checks observational equivalence.
pub fn verify(left: &Configuration, right: &Configuration, enum_opts: &EnumOptions, opts: &EquivOptions) -> Result<Run, EquivError> {
    let (le, re) = if opts.jobs > 1 {
        std::thread::scope(|s| {
            let h = s.spawn(|| enumerate(right, enum_opts));
            let l = enumerate(left, enum_opts);
            (l, h.join().expect("enumeration thread panicked"))
        })
    } else {
        (enumerate(left, enum_opts), enumerate(right, enum_opts))
    };
    let verdict = config_equiv(&le.observables(), &re.observables(), [le.states, re.states], opts)?;
    Ok(Run { verdict, left: le, right: re })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::CompConstraint;
    use crate::semantics::{Label, Sign};
    use crate::timecon::TimeSet;

    fn k(s: &str) -> Term {
        Term::symk(s)
    }

    fn t(s: &str) -> Term {
        Term::text(s)
    }

    fn obs(labels: Vec<Term>, ik: Vec<Term>) -> Observable {
        Observable {
            start_clock: TimeVar::Clock(0),
            labels: labels
                .into_iter()
                .enumerate()
                .map(|(i, term)| Label { sign: Sign::Send, term, at: TimeVar::Clock(i as u32 + 1) })
                .collect(),
            ik: MinimalSet::from_terms(ik),
            dc: DerivSet::new(),
            eq: CompSet::new(),
            tc: TimeSet::new(),
        }
    }

    #[test]
    fn restriction_example() {
        let m = Term::tuple(vec![
            Term::Nonce(0, 0),
            t("t1"),
            Term::enc(Term::tuple(vec![t("t2"), Term::enc(t("t3"), k("k2"))]), k("k1")),
        ]);
        let o = obs(vec![m.clone()], vec![k("k1")]);
        let bb = black_box_set(&o);
        assert_eq!(bb, BTreeSet::from([Term::Nonce(0, 0), Term::enc(t("t3"), k("k2"))]));
        let expect = Term::tuple(vec![
            Term::Nonce(0, 0),
            star(),
            Term::enc(Term::tuple(vec![star(), Term::enc(t("t3"), k("k2"))]), star()),
        ]);
        assert_eq!(restrict_to_bb(&m, &bb), expect);
        assert_eq!(restrict_to_bb(&t("t1"), &bb), star());
    }

    #[test]
    fn bijection_examples() {
        let e1 = Term::enc(t("t1"), k("k1"));
        let e2 = Term::enc(t("t2"), k("k2"));
        let f1 = Term::enc(t("u1"), k("j1"));
        let f2 = Term::enc(t("u2"), k("j2"));
        let l1 = obs(vec![e1.clone(), e2.clone(), Term::tuple(vec![e1.clone(), e2.clone()])], vec![]);
        let l2 = obs(vec![f1.clone(), f2.clone(), Term::tuple(vec![f2.clone(), f1.clone()])], vec![]);
        let l3 = obs(vec![f1.clone(), f2.clone(), Term::tuple(vec![f1.clone(), f2.clone()])], vec![]);
        assert!(find_bijection(&l1, &l2).is_none());
        let b = find_bijection(&l1, &l3).unwrap();
        assert_eq!(b, vec![(e1, f1), (e2, f2)]);
        assert_eq!(find_bijection(&l1, &l1).unwrap().iter().filter(|(a, b)| a == b).count(), 2);
    }

    #[test]
    fn sym_der_and_term_approx_example() {
        let nv = Term::Nonce(BIJECTION_PLAYER, 0);
        let mut dc = DerivSet::new();
        dc.insert(1, MinimalSet::from_terms([t("t1"), k("k1")]));
        dc.insert(2, MinimalSet::from_terms([t("t1"), t("t2"), k("k1"), k("k2")]));
        let s_r = RENAME_OFFSET + 1;
        let mut dc_r = DerivSet::new();
        dc_r.insert(s_r, MinimalSet::from_terms([nv.clone(), t("t1"), k("k1"), t("t2"), k("k2")]));
        assert!(sym_der(s_r, &Term::Sym(2), &dc, &dc_r));
        assert!(sym_der(s_r, &nv, &dc, &dc_r));
        assert!(!sym_der(s_r, &Term::Nonce(0, 3), &dc, &dc_r));
        let inner = Term::tuple(vec![nv.clone(), Term::public_text("t"), Term::Sym(1), Term::Sym(2)]);
        let m = Term::tuple(vec![nv.clone(), Term::enc(inner.clone(), k("k1"))]);
        let m_r = Term::tuple(vec![nv.clone(), Term::enc(Term::Sym(s_r), k("k1"))]);
        let theta = term_approx(&m, &m_r, &dc, &dc_r).unwrap();
        assert_eq!(theta.get(s_r), Some(&inner));
        assert!(term_approx(&m_r, &m, &dc_r, &dc).is_none());
        assert!(term_approx(&m, &m, &dc, &dc).is_some());
    }

    #[test]
    fn can_eq_examples() {
        let n1 = Term::Nonce(0, 0);
        let mut dc = DerivSet::new();
        dc.insert(1, MinimalSet::from_terms([n1.clone()]));
        dc.insert(2, MinimalSet::from_terms([n1.clone()]));
        let target = Term::enc(Term::tuple(vec![n1.clone(), Term::Sym(2)]), Term::pk(Term::player("alice")));
        assert!(can_eq(&Term::Sym(1), &target, &dc, &CompSet::new()));
        assert!(!can_eq(&t("t1"), &t("t2"), &dc, &CompSet::new()));
        let mut dc3 = DerivSet::new();
        dc3.insert(3, MinimalSet::from_terms([t("x")]));
        assert!(!can_eq(&Term::Sym(3), &n1, &dc3, &CompSet::new()));
    }

    #[test]
    fn neq_blocks_term_eq_approx() {
        let n1 = Term::Nonce(0, 0);
        let alice = Term::player("alice");
        let sent = Term::enc(Term::tuple(vec![n1.clone(), alice.clone()]), Term::pk(Term::player("eve")));
        let ik = vec![n1.clone(), Term::sk(Term::player("eve"))];
        let mut left = obs(vec![sent.clone(), Term::Sym(1), Term::public_text("error")], ik.clone());
        left.labels[1].sign = Sign::Recv;
        left.dc.insert(1, left.ik.clone());
        let mut right = left.clone();
        right.dc.insert(2, right.ik.clone());
        right.eq.insert(CompConstraint::neq(
            Term::Sym(1),
            Term::enc(Term::tuple(vec![n1.clone(), Term::Sym(2)]), Term::pk(alice)),
        ));
        let right = rename_apart(&right, RENAME_OFFSET);
        let bij = find_bijection(&left, &right).unwrap();
        let (l, r) = apply_bijection(&left, &right, &bij);
        assert!(term_eq_approx(&r, &l));
        assert!(!term_eq_approx(&l, &r));
        let unsat = Observable { eq: CompSet::from_iter([CompConstraint::neq(t("a"), t("a"))]), ..l.clone() };
        assert!(term_eq_approx(&unsat, &r));
    }

    #[test]
    fn self_equivalence_and_length() {
        let o = obs(vec![Term::Nonce(0, 0), t("a")], vec![]);
        let r = rename_apart(&o, RENAME_OFFSET);
        assert_eq!(observable_equiv(&o, &r, &Solver::Internal).unwrap(), None);
        let short = obs(vec![Term::Nonce(0, 0)], vec![]);
        assert_eq!(observable_equiv(&o, &short, &Solver::Internal).unwrap(), Some(1));
    }
}
