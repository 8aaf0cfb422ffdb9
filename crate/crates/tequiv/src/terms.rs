//! Message terms, substitutions and term classification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Interned-ish identifier used for names, texts and variables.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// Sort of a protocol variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Sort {
    Msg,
    Player,
    Nonce,
}

/// Symbolic message term.
///
/// `Pk` and `Sk` carry their owner as a boxed term which is always a
/// player name, a variable or a symbol.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Text { name: Name, public: bool },
    Player(Name),
    Nonce(u32, u32),
    SymKey(Name),
    Pk(Box<Term>),
    Sk(Box<Term>),
    Var(Name, Sort),
    Sym(u32),
    Enc(Box<Term>, Box<Term>),
    Tuple(Vec<Term>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TermError {
    #[error("not a key: {0}")]
    NotAKey(Term),
}

impl Term {
    pub fn text(s: &str) -> Term {
        Term::Text { name: name(s), public: false }
    }

    pub fn public_text(s: &str) -> Term {
        Term::Text { name: name(s), public: true }
    }

    pub fn player(s: &str) -> Term {
        Term::Player(name(s))
    }

    pub fn symk(s: &str) -> Term {
        Term::SymKey(name(s))
    }

    pub fn pk(owner: Term) -> Term {
        Term::Pk(Box::new(owner))
    }

    pub fn sk(owner: Term) -> Term {
        Term::Sk(Box::new(owner))
    }

    pub fn var(s: &str) -> Term {
        Term::Var(name(s), Sort::Msg)
    }

    pub fn enc(m: Term, k: Term) -> Term {
        Term::Enc(Box::new(m), Box::new(k))
    }

    /// Builds a tuple; a singleton collapses to its element.
    pub fn tuple(mut elems: Vec<Term>) -> Term {
        if elems.len() == 1 {
            elems.pop().unwrap()
        } else {
            Term::Tuple(elems)
        }
    }

    pub fn is_sym(&self) -> bool {
        matches!(self, Term::Sym(_))
    }

    pub fn is_key(&self) -> bool {
        matches!(self, Term::SymKey(_) | Term::Pk(_) | Term::Sk(_))
    }

    pub fn is_nonce(&self) -> bool {
        matches!(self, Term::Nonce(..))
    }

    /// True for terms without structure (everything except `Enc`/`Tuple`).
    pub fn is_atomic(&self) -> bool {
        !matches!(self, Term::Enc(..) | Term::Tuple(_))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(..) | Term::Sym(_) => false,
            Term::Pk(o) | Term::Sk(o) => o.is_ground(),
            Term::Enc(m, k) => m.is_ground() && k.is_ground(),
            Term::Tuple(es) => es.iter().all(Term::is_ground),
            _ => true,
        }
    }

    /// No variables (symbols allowed).
    pub fn is_symbolic(&self) -> bool {
        match self {
            Term::Var(..) => false,
            Term::Pk(o) | Term::Sk(o) => o.is_symbolic(),
            Term::Enc(m, k) => m.is_symbolic() && k.is_symbolic(),
            Term::Tuple(es) => es.iter().all(Term::is_symbolic),
            _ => true,
        }
    }

    /// Player names, public keys of named players and public texts.
    pub fn is_guessable(&self) -> bool {
        match self {
            Term::Player(_) => true,
            Term::Text { public, .. } => *public,
            Term::Pk(o) => matches!(**o, Term::Player(_)),
            _ => false,
        }
    }

    pub fn inverse_key(&self) -> Result<Term, TermError> {
        match self {
            Term::Pk(o) => Ok(Term::Sk(o.clone())),
            Term::Sk(o) => Ok(Term::Pk(o.clone())),
            Term::SymKey(_) => Ok(self.clone()),
            other => Err(TermError::NotAKey(other.clone())),
        }
    }

    pub fn symbols(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    pub fn collect_symbols(&self, out: &mut BTreeSet<u32>) {
        match self {
            Term::Sym(s) => {
                out.insert(*s);
            }
            Term::Pk(o) | Term::Sk(o) => o.collect_symbols(out),
            Term::Enc(m, k) => {
                m.collect_symbols(out);
                k.collect_symbols(out);
            }
            Term::Tuple(es) => es.iter().for_each(|e| e.collect_symbols(out)),
            _ => {}
        }
    }

    pub fn variables(&self) -> BTreeSet<(Name, Sort)> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<(Name, Sort)>) {
        match self {
            Term::Var(n, s) => {
                out.insert((n.clone(), *s));
            }
            Term::Pk(o) | Term::Sk(o) => o.collect_vars(out),
            Term::Enc(m, k) => {
                m.collect_vars(out);
                k.collect_vars(out);
            }
            Term::Tuple(es) => es.iter().for_each(|e| e.collect_vars(out)),
            _ => {}
        }
    }

    pub fn contains_sym(&self, s: u32) -> bool {
        match self {
            Term::Sym(x) => *x == s,
            Term::Pk(o) | Term::Sk(o) => o.contains_sym(s),
            Term::Enc(m, k) => m.contains_sym(s) || k.contains_sym(s),
            Term::Tuple(es) => es.iter().any(|e| e.contains_sym(s)),
            _ => false,
        }
    }

    /// Every subterm, including `self`, in pre-order.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            out.push(t);
            match t {
                Term::Pk(o) | Term::Sk(o) => stack.push(o),
                Term::Enc(m, k) => {
                    stack.push(k);
                    stack.push(m);
                }
                Term::Tuple(es) => stack.extend(es.iter().rev()),
                _ => {}
            }
        }
        out
    }

    /// Number of constructor nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Pk(o) | Term::Sk(o) => o.size(),
            Term::Enc(m, k) => 1 + m.size() + k.size(),
            Term::Tuple(es) => 1 + es.iter().map(Term::size).sum::<usize>(),
            _ => 1,
        }
    }

    /// Rebuilds the term bottom-up, giving `f` the chance to replace each
    /// leaf-like node (variables, symbols, constants).
    pub fn map_leaves(&self, f: &mut impl FnMut(&Term) -> Option<Term>) -> Term {
        match self {
            Term::Pk(o) => match f(self) {
                Some(t) => t,
                None => Term::Pk(Box::new(o.map_leaves(f))),
            },
            Term::Sk(o) => match f(self) {
                Some(t) => t,
                None => Term::Sk(Box::new(o.map_leaves(f))),
            },
            Term::Enc(m, k) => Term::enc(m.map_leaves(f), k.map_leaves(f)),
            Term::Tuple(es) => Term::tuple(es.iter().map(|e| e.map_leaves(f)).collect()),
            _ => f(self).unwrap_or_else(|| self.clone()),
        }
    }

    /// Replaces whole subterms equal to a key of `map`, outermost first.
    pub fn replace_subterms(&self, map: &BTreeMap<Term, Term>) -> Term {
        if let Some(t) = map.get(self) {
            return t.clone();
        }
        match self {
            Term::Pk(o) => Term::Pk(Box::new(o.replace_subterms(map))),
            Term::Sk(o) => Term::Sk(Box::new(o.replace_subterms(map))),
            Term::Enc(m, k) => Term::enc(m.replace_subterms(map), k.replace_subterms(map)),
            Term::Tuple(es) => Term::tuple(es.iter().map(|e| e.replace_subterms(map)).collect()),
            _ => self.clone(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Text { name, .. } | Term::Player(name) | Term::SymKey(name) => write!(f, "{name}"),
            Term::Nonce(i, j) => write!(f, "n({i},{j})"),
            Term::Pk(o) => write!(f, "pk({o})"),
            Term::Sk(o) => write!(f, "sk({o})"),
            Term::Var(n, _) => write!(f, "{n}"),
            Term::Sym(s) => write!(f, "sym({s})"),
            Term::Enc(m, k) => write!(f, "enc({m},{k})"),
            Term::Tuple(es) => {
                write!(f, "<")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ">")
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Variable substitution (`σ`).
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarSubst(pub BTreeMap<Name, Term>);

impl VarSubst {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, v: Name, t: Term) {
        self.0.insert(v, t);
    }

    pub fn get(&self, v: &str) -> Option<&Term> {
        self.0.get(v)
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.0.is_empty() {
            return t.clone();
        }
        t.map_leaves(&mut |leaf| match leaf {
            Term::Var(n, _) => self.0.get(n).cloned(),
            _ => None,
        })
    }
}

/// Symbol substitution (`δ`). Kept idempotent by [`SymSubst::bind`].
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymSubst(pub BTreeMap<u32, Term>);

impl SymSubst {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, s: u32) -> Option<&Term> {
        self.0.get(&s)
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.0.is_empty() {
            return t.clone();
        }
        t.map_leaves(&mut |leaf| match leaf {
            Term::Sym(s) => self.0.get(s).cloned(),
            _ => None,
        })
    }

    /// Applies the substitution until no domain symbol is left. Useful when
    /// the map is given in triangular form.
    pub fn apply_closed(&self, t: &Term) -> Term {
        let mut cur = t.clone();
        for _ in 0..=self.0.len() {
            let next = self.apply(&cur);
            if next == cur {
                return cur;
            }
            cur = next;
        }
        cur
    }

    /// Adds `s ↦ t`, first applying the binding to the existing range.
    /// `t` must already be normalized w.r.t. `self`.
    pub fn bind(&mut self, s: u32, t: Term) {
        let single = SymSubst(BTreeMap::from([(s, t.clone())]));
        for v in self.0.values_mut() {
            if v.contains_sym(s) {
                *v = single.apply(v);
            }
        }
        self.0.insert(s, t);
    }

    /// `self` followed by `other`: `(other ∘ self)[t] = other[self[t]]`.
    pub fn then(&self, other: &SymSubst) -> SymSubst {
        let mut out: BTreeMap<u32, Term> =
            self.0.iter().map(|(k, v)| (*k, other.apply(v))).collect();
        for (k, v) in &other.0 {
            out.entry(*k).or_insert_with(|| v.clone());
        }
        SymSubst(out)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u32, &Term)> {
        self.0.iter()
    }

    pub fn domain(&self) -> BTreeSet<u32> {
        self.0.keys().copied().collect()
    }
}

impl fmt::Display for SymSubst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (s, t)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "sym({s}) -> {t}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(i: u32) -> Term {
        Term::Sym(i)
    }

    #[test]
    fn var_subst_replaces_inside_encryption() {
        let mut s = VarSubst::new();
        s.insert(name("v"), Term::pk(Term::player("bob")));
        let t = Term::enc(Term::var("v"), Term::symk("k"));
        assert_eq!(s.apply(&t), Term::enc(Term::pk(Term::player("bob")), Term::symk("k")));

        let mut s = VarSubst::new();
        s.insert(name("Y"), Term::Nonce(1, 0));
        let t = Term::enc(Term::var("Y"), Term::pk(Term::Var(name("Z"), Sort::Player)));
        assert_eq!(
            s.apply(&t),
            Term::enc(Term::Nonce(1, 0), Term::pk(Term::Var(name("Z"), Sort::Player)))
        );
        assert_eq!(VarSubst::new().apply(&t), t);
    }

    #[test]
    fn triangular_symbol_substitution_reaches_ground_term() {
        let symk = Term::symk("symk");
        let d = SymSubst(BTreeMap::from([
            (4, sym(2)),
            (2, Term::enc(sym(1), symk.clone())),
            (1, Term::sk(Term::player("eve"))),
        ]));
        let t = Term::enc(sym(4), Term::pk(Term::player("bob")));
        assert_eq!(
            d.apply_closed(&t),
            Term::enc(
                Term::enc(Term::sk(Term::player("eve")), symk),
                Term::pk(Term::player("bob"))
            )
        );
    }

    #[test]
    fn lowe_substitution() {
        let na = Term::Nonce(0, 0);
        let nb = Term::Nonce(1, 0);
        let d = SymSubst(BTreeMap::from([(1, na.clone()), (2, Term::player("alice")), (3, nb.clone())]));
        let t = Term::enc(Term::tuple(vec![sym(1), nb.clone()]), Term::pk(sym(2)));
        assert_eq!(d.apply(&t), Term::enc(Term::tuple(vec![na, nb]), Term::pk(Term::player("alice"))));
    }

    #[test]
    fn symbols_and_classification() {
        let t = Term::enc(Term::tuple(vec![sym(1), Term::Nonce(1, 0)]), Term::pk(sym(2)));
        assert_eq!(t.symbols(), BTreeSet::from([1, 2]));
        assert!(t.is_symbolic() && !t.is_ground());
        assert!(Term::Nonce(0, 0).symbols().is_empty());
        assert_eq!(sym(4).symbols(), BTreeSet::from([4]));
        assert!(Term::pk(Term::player("alice")).is_guessable());
        assert!(!Term::sk(Term::player("eve")).is_guessable());
        assert!(!Term::Nonce(0, 0).is_guessable());
        assert!(Term::public_text("error").is_guessable());
        assert!(!Term::text("secret").is_guessable());
    }

    #[test]
    fn inverse_keys() {
        let a = Term::player("alice");
        assert_eq!(Term::pk(a.clone()).inverse_key().unwrap(), Term::sk(a));
        assert_eq!(Term::symk("k").inverse_key().unwrap(), Term::symk("k"));
        let pair = Term::tuple(vec![Term::text("a"), Term::text("b")]);
        assert!(matches!(pair.inverse_key(), Err(TermError::NotAKey(_))));
    }

    #[test]
    fn singleton_tuple_collapses_and_rendering() {
        assert_eq!(Term::tuple(vec![sym(3)]), sym(3));
        let t = Term::enc(Term::tuple(vec![Term::Nonce(0, 1), Term::player("alice")]), Term::pk(Term::player("eve")));
        assert_eq!(t.to_string(), "enc(<n(0,1),alice>,pk(eve))");
    }

    #[test]
    fn bind_keeps_substitution_idempotent() {
        let mut d = SymSubst::new();
        d.bind(1, Term::tuple(vec![sym(2), Term::text("a")]));
        d.bind(2, Term::Nonce(0, 0));
        assert_eq!(d.get(1).unwrap(), &Term::tuple(vec![Term::Nonce(0, 0), Term::text("a")]));
        for t in d.0.values() {
            assert!(t.symbols().is_disjoint(&d.domain()));
        }
    }
}
