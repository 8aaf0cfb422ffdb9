//! Acceptance suite: one PASS/FAIL line per criterion. Hard criteria make
//! the process exit non-zero; soft ones only report.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tequiv::comparison::{eq_check, CompConstraint, CompKind, CompSet};
use tequiv::derivability::{DerivSet, MinimalSet};
use tequiv::equivalence::{term_approx, term_eq_approx, verify, EquivOptions};
use tequiv::intruder::sgen;
use tequiv::oracle::{self, Bounds, GroundDc, GroundEq, GroundView};
use tequiv::protocol::{load_scenario, parse_file, Cmd};
use tequiv::semantics::{check_step_invariants, enumerate, enumerate_with, Configuration, EnumOptions, Label, Observable, Sign};
use tequiv::terms::Term;
use tequiv::timecon::{check_timed_match, rat, smt_check, timed_match_smtlib, Rel, SatResult, SmtStatus, TimeConstraint, TimeExpr, TimeSet, TimeVar};

/// Per-comparison wall-clock limit.
const VERDICT_LIMIT: Duration = Duration::from_secs(60);
/// Allowed factor between our counts and the reference counts.
const COUNT_FACTOR: f64 = 3.0;
const RANDOM_PROTOCOLS: usize = 50;
const APPROX_INSTANCES: usize = 500;
const EQ_APPROX_INSTANCES: usize = 300;
const SAT_INSTANCES: usize = 500;
const SGEN_INSTANCES: usize = 300;
const LINEAR_SYSTEMS: usize = 1000;
const EXISTS_FORALL: usize = 100;
const MAX_TIME_VARS: u32 = 6;
const SMT_TIMEOUT: Duration = Duration::from_secs(20);

struct Outcome {
    id: u8,
    hard: bool,
    pass: bool,
    skipped: bool,
    detail: String,
}

fn outcome(id: u8, hard: bool, pass: bool, detail: String) -> Outcome {
    Outcome { id, hard, pass, skipped: false, detail }
}

fn corpus(file: &str) -> String {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    dir.join(file).to_string_lossy().into_owned()
}

fn config(file: &str) -> Configuration {
    let sc = load_scenario(&corpus(file)).unwrap_or_else(|e| panic!("{file}: {e}"));
    Configuration::initial(&sc)
}

/// Left, right, expected verdict, reference observable and state counts.
type Row = (&'static str, &'static str, bool, [usize; 2], [usize; 2]);

const TABLE: [Row; 4] = [
    ("redpill_vm.scn", "redpill_real.scn", false, [19, 19], [74, 74]),
    ("passport_same.scn", "passport_diff.scn", false, [36, 27], [138, 112]),
    ("passport_fixed_same.scn", "passport_fixed_diff.scn", true, [36, 27], [138, 112]),
    ("anonymous_same.scn", "anonymous_other.scn", false, [2, 3], [7, 9]),
];

const SCENARIOS: [&str; 9] = [
    "ns.tproto",
    "redpill_vm.scn",
    "redpill_real.scn",
    "passport_same.scn",
    "passport_diff.scn",
    "passport_fixed_same.scn",
    "passport_fixed_diff.scn",
    "anonymous_same.scn",
    "anonymous_other.scn",
];

struct Measured {
    name: String,
    equivalent: bool,
    expected: bool,
    elapsed: Duration,
    observables: [usize; 2],
    states: [usize; 2],
    reference: ([usize; 2], [usize; 2]),
}

fn run_table() -> Vec<Measured> {
    TABLE
        .iter()
        .map(|(l, r, expected, obs, states)| {
            let t = Instant::now();
            let run = verify(&config(l), &config(r), &EnumOptions::default(), &EquivOptions::default()).expect("verify");
            let v = run.verdict;
            Measured {
                name: format!("{} vs {}", l.trim_end_matches(".scn"), r.trim_end_matches(".scn")),
                equivalent: v.equivalent,
                expected: *expected,
                elapsed: t.elapsed(),
                observables: [v.left_observables, v.right_observables],
                states: v.states_explored,
                reference: (*obs, *states),
            }
        })
        .collect()
}

fn verdict_word(e: bool) -> &'static str {
    if e {
        "Equiv"
    } else {
        "Not Equiv"
    }
}

fn criterion1(table: &[Measured]) -> Outcome {
    let bad: Vec<String> = table
        .iter()
        .filter(|m| m.equivalent != m.expected || m.elapsed >= VERDICT_LIMIT)
        .map(|m| format!("{}: {} in {:?}", m.name, verdict_word(m.equivalent), m.elapsed))
        .collect();
    let summary: Vec<String> =
        table.iter().map(|m| format!("{}={} ({:.2}s)", m.name, verdict_word(m.equivalent), m.elapsed.as_secs_f64())).collect();
    let detail = if bad.is_empty() { summary.join(", ") } else { bad.join("; ") };
    outcome(1, true, bad.is_empty(), detail)
}

fn within(ours: usize, theirs: usize) -> bool {
    let (a, b) = (ours.max(1) as f64, theirs.max(1) as f64);
    a / b <= COUNT_FACTOR && b / a <= COUNT_FACTOR
}

fn criterion2(table: &[Measured]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in table {
        let (ro, rs) = m.reference;
        let fits = (0..2).all(|i| within(m.observables[i], ro[i]) && within(m.states[i], rs[i]));
        ok &= fits;
        parts.push(format!(
            "{}: obs {}/{} (ref {}/{}), states {}/{} (ref {}/{}){}",
            m.name,
            m.observables[0],
            m.observables[1],
            ro[0],
            ro[1],
            m.states[0],
            m.states[1],
            rs[0],
            rs[1],
            if fits { "" } else { " OUTSIDE 3x" }
        ));
    }
    outcome(2, false, ok, parts.join("; "))
}

// ---------------------------------------------------------------------------
// Random protocols.

fn random_term(rng: &mut ChaCha8Rng, bound: &[String], depth: u32) -> String {
    let atoms = ["a", "b", "p0", "pk(p1)"];
    let leaf = |rng: &mut ChaCha8Rng| {
        if !bound.is_empty() && rng.gen_bool(0.6) {
            bound.choose(rng).unwrap().clone()
        } else {
            atoms.choose(rng).unwrap().to_string()
        }
    };
    if depth == 0 || rng.gen_bool(0.5) {
        return leaf(rng);
    }
    match rng.gen_range(0..3) {
        0 => format!("<{}, {}>", random_term(rng, bound, depth - 1), random_term(rng, bound, depth - 1)),
        1 => format!("enc({}, key k)", random_term(rng, bound, depth - 1)),
        _ => format!("enc({}, pk(p1))", random_term(rng, bound, depth - 1)),
    }
}

fn random_pattern(rng: &mut ChaCha8Rng, fresh: &str, bound: &[String]) -> String {
    let other = random_term(rng, bound, 0);
    match rng.gen_range(0..4) {
        0 => fresh.to_string(),
        1 => format!("<{fresh}, {other}>"),
        2 => format!("enc({fresh}, key k)"),
        _ => format!("enc(<{fresh}, {other}>, pk(p0))"),
    }
}

fn random_role(rng: &mut ChaCha8Rng, name: &str) -> String {
    let mut body = String::new();
    let mut bound: Vec<String> = Vec::new();
    let mut clocks: Vec<String> = Vec::new();
    let mut budget = rng.gen_range(1..=6);
    let mut n = 0;
    while budget > 0 {
        n += 1;
        let roll = rng.gen_range(0..10);
        if roll < 2 {
            let v = format!("N{n}");
            body.push_str(&format!("  new {v};\n"));
            bound.push(v);
            budget -= 1;
        } else if roll < 5 {
            let tc = match clocks.choose(rng) {
                Some(c) if rng.gen_bool(0.5) => format!(" # cur = {c} + d"),
                _ => String::new(),
            };
            body.push_str(&format!("  send {}{tc};\n", random_term(rng, &bound, 2)));
            budget -= 1;
        } else if roll < 8 {
            let v = format!("X{n}");
            let pat = random_pattern(rng, &v, &bound);
            let tc = if rng.gen_bool(0.5) {
                let c = format!("t{n}");
                clocks.push(c.clone());
                format!(" # {c} = cur")
            } else {
                String::new()
            };
            body.push_str(&format!("  recv {pat}{tc};\n"));
            bound.push(v);
            budget -= 1;
        } else if budget >= 3 && !bound.is_empty() {
            let l = bound.choose(rng).unwrap().clone();
            let r = random_term(rng, &bound, 1);
            body.push_str(&format!("  if {l} := {r} then {{\n    send ok;\n  }} else {{\n    send no;\n  }}\n"));
            budget -= 3;
        }
    }
    format!("role {name} {{\n{body}}}\n")
}

fn random_protocol(rng: &mut ChaCha8Rng) -> String {
    let roles = rng.gen_range(1..=2);
    let mut src = String::new();
    let mut players = Vec::new();
    for i in 0..roles {
        src.push_str(&random_role(rng, &format!("R{i}")));
        players.push(format!("p{i} as R{i}"));
    }
    let pool = ["a", "key k", "enc(a, key k)", "enc(<b, a>, pk(p1))"];
    let k = rng.gen_range(0..=2);
    let knowledge: Vec<&str> = pool.choose_multiple(rng, k).copied().collect();
    src.push_str(&format!(
        "scenario rnd {{\n  players: [{}];\n  knowledge: {{ {} }};\n  public: {{ ok no }};\n  param d > 0;\n}}\n",
        players.join(", "),
        knowledge.join(" ")
    ));
    src
}

fn random_protocols() -> Vec<(String, Configuration)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..RANDOM_PROTOCOLS)
        .map(|_| {
            let src = random_protocol(&mut rng);
            let file = parse_file(&src).unwrap_or_else(|e| panic!("generated protocol does not parse: {e}\n{src}"));
            let sc = file.resolve(None).unwrap_or_else(|e| panic!("generated protocol does not resolve: {e}\n{src}"));
            (src, Configuration::initial(&sc))
        })
        .collect()
}

fn criterion3() -> Outcome {
    let t = Instant::now();
    let mut problems = Vec::new();
    let mut total = 0usize;
    for f in SCENARIOS {
        let en = enumerate(&config(f), &EnumOptions::default());
        total += en.states;
        if en.truncated {
            problems.push(f.to_string());
        }
    }
    for (src, c) in random_protocols() {
        let en = enumerate(&c, &EnumOptions::default());
        total += en.states;
        if en.truncated {
            problems.push(src);
        }
    }
    let elapsed = t.elapsed();
    let pass = problems.is_empty() && elapsed < VERDICT_LIMIT;
    outcome(
        3,
        true,
        pass,
        format!(
            "{} corpus scenarios + {RANDOM_PROTOCOLS} random protocols, {total} states, {:.2}s{}",
            SCENARIOS.len(),
            elapsed.as_secs_f64(),
            if problems.is_empty() { String::new() } else { format!(", truncated: {problems:?}") }
        ),
    )
}

// ---------------------------------------------------------------------------
// Random terms and constraints for the oracle comparisons.

fn ta() -> Term {
    Term::text("a")
}
fn tb() -> Term {
    Term::text("b")
}
fn k() -> Term {
    Term::symk("k")
}
fn alice() -> Term {
    Term::player("alice")
}
fn pk_alice() -> Term {
    Term::pk(alice())
}

/// Depth 2, width 3; every guessable atom of the generated terms is listed.
fn bounds() -> Bounds {
    Bounds::new(2, 3, 5, vec![alice(), pk_alice()])
}

fn gen_term(rng: &mut ChaCha8Rng, leaves: &[Term], depth: u32) -> Term {
    if depth == 0 || rng.gen_bool(0.45) {
        return leaves.choose(rng).unwrap().clone();
    }
    match rng.gen_range(0..3) {
        0 => {
            let w = rng.gen_range(2..=3);
            Term::tuple((0..w).map(|_| gen_term(rng, leaves, depth - 1)).collect())
        }
        1 => Term::enc(gen_term(rng, leaves, depth - 1), k()),
        _ => Term::enc(gen_term(rng, leaves, depth - 1), pk_alice()),
    }
}

fn ground_pool() -> Vec<Term> {
    vec![
        ta(),
        tb(),
        k(),
        Term::enc(ta(), k()),
        Term::enc(tb(), pk_alice()),
        Term::enc(Term::tuple(vec![ta(), tb()]), k()),
        Term::tuple(vec![ta(), Term::enc(tb(), k())]),
    ]
}

fn random_set(rng: &mut ChaCha8Rng) -> MinimalSet {
    let n = rng.gen_range(0..=2);
    MinimalSet::from_terms(ground_pool().choose_multiple(rng, n).cloned())
}

/// Replaces random subterms of `t` by symbols from `syms`.
fn generalize(rng: &mut ChaCha8Rng, t: &Term, syms: &[u32], p: f64) -> Term {
    if rng.gen_bool(p) {
        return Term::Sym(*syms.choose(rng).unwrap());
    }
    match t {
        Term::Tuple(es) => Term::Tuple(es.iter().map(|e| generalize(rng, e, syms, p)).collect()),
        Term::Enc(m, key) => Term::enc(generalize(rng, m, syms, p), (**key).clone()),
        _ => t.clone(),
    }
}

fn fits(t: &Term) -> bool {
    bounds().admits(&t.map_leaves(&mut |x| if x.is_sym() { Some(ta()) } else { None }))
}

fn ground_dc(dc: &DerivSet) -> GroundDc {
    dc.iter().map(|(s, set)| (*s, set.iter().cloned().collect())).collect()
}

fn ground_eq(eq: &CompSet) -> GroundEq {
    eq.iter().map(|c| (c.kind == CompKind::Eq, c.lhs.clone(), c.rhs.clone())).collect()
}

struct Pair {
    m: Term,
    dc: DerivSet,
    m_r: Term,
    dc_r: DerivSet,
}

fn random_pair(rng: &mut ChaCha8Rng) -> Pair {
    let left_syms = [1u32, 2];
    let right_syms = [101u32, 102];
    let leaves = [ta(), tb(), alice(), Term::Sym(1), Term::Sym(2)];
    let m = loop {
        let m = gen_term(rng, &leaves, 2);
        if fits(&m) {
            break m;
        }
    };
    let m_r = loop {
        let cand = if rng.gen_bool(0.7) {
            let p = rng.gen_range(0.15..0.6);
            generalize(rng, &m.map_leaves(&mut |x| if x.is_sym() { Some(ta()) } else { None }), &right_syms, p)
        } else {
            gen_term(rng, &[ta(), tb(), alice(), Term::Sym(101), Term::Sym(102)], 2)
        };
        if fits(&cand) {
            break cand;
        }
    };
    let mut dc = DerivSet::new();
    for s in left_syms.iter().filter(|s| m.contains_sym(**s)) {
        dc.insert(*s, random_set(rng));
    }
    let mut dc_r = DerivSet::new();
    for s in right_syms.iter().filter(|s| m_r.contains_sym(**s)) {
        if rng.gen_bool(0.9) {
            dc_r.insert(*s, random_set(rng));
        }
    }
    Pair { m, dc, m_r, dc_r }
}

fn view(t: &Term, dc: &DerivSet, eq: &CompSet) -> GroundView {
    GroundView { term: t.clone(), dc: ground_dc(dc), eq: ground_eq(eq) }
}

fn criterion4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let b = bounds();
    let (mut mismatches, mut positives) = (Vec::new(), 0);
    for _ in 0..APPROX_INSTANCES {
        let p = random_pair(&mut rng);
        let symbolic = term_approx(&p.m, &p.m_r, &p.dc, &p.dc_r).is_some();
        let ground = oracle::ground_included(&view(&p.m, &p.dc, &CompSet::new()), &view(&p.m_r, &p.dc_r, &CompSet::new()), &b);
        positives += symbolic as usize;
        if symbolic != ground.is_ok() {
            mismatches.push(format!("m={} dc=[{}] m'={} dc'=[{}] symbolic={symbolic} oracle={ground:?}", p.m, p.dc, p.m_r, p.dc_r));
        }
    }
    report_mismatches(4, APPROX_INSTANCES, positives, mismatches)
}

fn report_mismatches(id: u8, n: usize, positives: usize, mismatches: Vec<String>) -> Outcome {
    let mut detail = format!("{n} instances ({positives} positive), {} mismatches", mismatches.len());
    if let Some(first) = mismatches.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    outcome(id, true, mismatches.is_empty(), detail)
}

fn random_constraints(rng: &mut ChaCha8Rng, t: &Term, syms: &[u32]) -> CompSet {
    let present: Vec<u32> = syms.iter().copied().filter(|s| t.contains_sym(*s)).collect();
    let mut eq = CompSet::new();
    if present.is_empty() {
        return eq;
    }
    let rhs_pool = [ta(), tb(), alice(), Term::enc(ta(), k()), Term::tuple(vec![ta(), tb()])];
    for _ in 0..rng.gen_range(0..=2) {
        let s = Term::Sym(*present.choose(rng).unwrap());
        let g = rhs_pool.choose(rng).unwrap().clone();
        eq.insert(if rng.gen_bool(0.3) { CompConstraint::eq(s, g) } else { CompConstraint::neq(s, g) });
    }
    eq
}

fn observable(m: &Term, dc: &DerivSet, eq: &CompSet) -> Observable {
    Observable {
        start_clock: TimeVar::Clock(0),
        labels: vec![Label { sign: Sign::Send, term: m.clone(), at: TimeVar::Clock(1) }],
        ik: MinimalSet::new(),
        dc: dc.clone(),
        eq: eq.clone(),
        tc: TimeSet::new(),
    }
}

fn criterion5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let b = bounds();
    let (mut mismatches, mut positives) = (Vec::new(), 0);
    let mut n = 0;
    while n < EQ_APPROX_INSTANCES {
        let p = random_pair(&mut rng);
        let eq = random_constraints(&mut rng, &p.m, &[1, 2]);
        let eq_r = random_constraints(&mut rng, &p.m_r, &[101, 102]);
        if eq.len() + eq_r.len() > 3 {
            continue;
        }
        n += 1;
        let symbolic = term_eq_approx(&observable(&p.m, &p.dc, &eq), &observable(&p.m_r, &p.dc_r, &eq_r));
        let ground = oracle::ground_included(&view(&p.m, &p.dc, &eq), &view(&p.m_r, &p.dc_r, &eq_r), &b);
        positives += symbolic as usize;
        if symbolic != ground.is_ok() {
            mismatches.push(format!(
                "m={} dc=[{}] eq=[{}] m'={} dc'=[{}] eq'=[{}] symbolic={symbolic} oracle={ground:?}",
                p.m, p.dc, eq, p.m_r, p.dc_r, eq_r
            ));
        }
    }
    report_mismatches(5, EQ_APPROX_INSTANCES, positives, mismatches)
}

fn criterion6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let b = bounds();
    let (mut mismatches, mut positives) = (Vec::new(), 0);
    let syms = [Term::Sym(1), Term::Sym(2), Term::Sym(3)];
    let mut leaves = vec![ta(), tb(), alice()];
    leaves.extend(syms.iter().cloned());
    for _ in 0..SAT_INSTANCES {
        let mut eq = CompSet::new();
        for _ in 0..rng.gen_range(1..=3) {
            let l = gen_term(&mut rng, &leaves, 1);
            let r = gen_term(&mut rng, &leaves, 1);
            eq.insert(if rng.gen_bool(0.6) { CompConstraint::eq(l, r) } else { CompConstraint::neq(l, r) });
        }
        let mut dc = DerivSet::new();
        for s in eq.symbols() {
            dc.insert(s, random_set(&mut rng));
        }
        let symbolic = eq_check(&eq, &dc).is_sat();
        let ground = oracle::ground_satisfiable(&ground_dc(&dc), &ground_eq(&eq), &b);
        positives += symbolic as usize;
        if symbolic != ground {
            mismatches.push(format!("eq=[{eq}] dc=[{dc}] symbolic={symbolic} oracle={ground}"));
        }
    }
    report_mismatches(6, SAT_INSTANCES, positives, mismatches)
}

fn criterion7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let b = bounds();
    let (mut mismatches, mut solutions) = (Vec::new(), 0);
    let leaves = [ta(), tb(), alice(), Term::var("X"), Term::var("Y")];
    let atoms = [ta(), tb(), k()];
    for _ in 0..SGEN_INSTANCES {
        let target = loop {
            let t = gen_term(&mut rng, &leaves, 2);
            let shape = t.map_leaves(&mut |x| if matches!(x, Term::Var(..)) { Some(ta()) } else { None });
            if !t.variables().is_empty() && b.admits(&shape) {
                break t;
            }
        };
        let ik = loop {
            let s = random_set(&mut rng);
            if !s.is_empty() {
                break s;
            }
        };
        let base: Vec<Term> = ik.iter().cloned().collect();
        let mut next_sym = 1;
        let res = sgen(&target, &ik, &DerivSet::new(), &mut next_sym);
        let pattern = res.sb.apply(&target);
        let sols: Vec<(Term, GroundDc)> = res.solutions.iter().map(|s| (s.ssb.apply(&pattern), ground_dc(&s.dc))).collect();
        solutions += sols.len();
        for (t, dc) in &sols {
            if let Some(m) = oracle::ground_instances(dc, &vec![], t, &b).into_iter().find(|m| !oracle::ground_derivable(&base, m)) {
                mismatches.push(format!("unsound: target={target} ik={ik} solution {t} admits {m}"));
            }
        }
        // Completeness: every derivable instance of the pattern is covered.
        let syms: Vec<u32> = pattern.symbols().into_iter().collect();
        let cap = (b.size + 1).saturating_sub(pattern.size());
        let values: Vec<Term> = oracle::synthesis_closure(&atoms, &b).into_iter().filter(|v| v.size() <= cap).collect();
        let mut theta = BTreeMap::new();
        let mut missed = None;
        cover(&syms, &values, &mut theta, &mut |theta| {
            if missed.is_some() {
                return;
            }
            let m = tequiv::terms::SymSubst(theta.clone()).apply(&pattern);
            if b.admits(&m)
                && oracle::ground_derivable(&base, &m)
                && !sols.iter().any(|(t, dc)| oracle::is_instance(dc, &vec![], t, &m, &b))
            {
                missed = Some(m);
            }
        });
        if let Some(m) = missed {
            mismatches.push(format!("incomplete: target={target} ik={ik} misses {m}"));
        }
    }
    report_mismatches(7, SGEN_INSTANCES, solutions, mismatches)
}

fn cover(syms: &[u32], values: &[Term], theta: &mut BTreeMap<u32, Term>, f: &mut dyn FnMut(&BTreeMap<u32, Term>)) {
    let Some((s, rest)) = syms.split_first() else { return f(theta) };
    for v in values {
        theta.insert(*s, v.clone());
        cover(rest, values, theta, f);
    }
    theta.remove(s);
}

// ---------------------------------------------------------------------------
// Time solver differential.

fn smt_command() -> Option<String> {
    let ok = std::process::Command::new("z3").arg("-version").output().map(|o| o.status.success()).unwrap_or(false);
    ok.then(|| "z3 -in".to_string())
}

fn random_expr(rng: &mut ChaCha8Rng, vars: &[TimeVar]) -> TimeExpr {
    let mut e = TimeExpr::constant(rat(rng.gen_range(-4..=4)));
    for _ in 0..rng.gen_range(1..=2) {
        let v = vars.choose(rng).unwrap().clone();
        e = e.add(&TimeExpr::var(v).scale(&rat(rng.gen_range(-2..=2))));
    }
    e
}

fn random_system(rng: &mut ChaCha8Rng, vars: &[TimeVar], n: usize) -> TimeSet {
    let rels = [Rel::Eq, Rel::Le, Rel::Lt, Rel::Ge, Rel::Gt];
    TimeSet::from_iter((0..n).map(|_| {
        let rel = *rels.choose(rng).unwrap();
        TimeConstraint::new(random_expr(rng, vars), rel, random_expr(rng, vars))
    }))
}

fn criterion8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let solver = smt_command();
    let mut mismatches = Vec::new();
    let mut bad_models = 0;
    let mut sats = 0;
    let systems: Vec<TimeSet> = (0..LINEAR_SYSTEMS)
        .map(|_| {
            let nv = rng.gen_range(1..=MAX_TIME_VARS);
            let vars: Vec<TimeVar> = (0..nv).map(TimeVar::Clock).collect();
            let nc = rng.gen_range(1..=6);
            random_system(&mut rng, &vars, nc)
        })
        .collect();
    let internal: Vec<bool> = systems
        .iter()
        .map(|ts| match ts.check() {
            SatResult::Sat(model) => {
                sats += 1;
                if !ts.holds(&model) {
                    bad_models += 1;
                }
                true
            }
            SatResult::Unsat => false,
        })
        .collect();
    let mut instances = Vec::new();
    for _ in 0..EXISTS_FORALL {
        let shared = rng.gen_range(1..=2u32);
        let left_vars: Vec<TimeVar> = (0..shared + rng.gen_range(0..=1)).map(TimeVar::Clock).collect();
        let right_vars: Vec<TimeVar> = (0..shared + rng.gen_range(0..=2)).map(|i| TimeVar::Clock(100 + i)).collect();
        let mut with_param = right_vars.clone();
        with_param.push(TimeVar::Param("d".into()));
        let n = rng.gen_range(1..=3);
        let left = random_system(&mut rng, &left_vars, n);
        let n = rng.gen_range(1..=3);
        let right = random_system(&mut rng, &with_param, n);
        let pairs: Vec<(TimeVar, TimeVar)> = (0..shared).map(|i| (TimeVar::Clock(i), TimeVar::Clock(100 + i))).collect();
        let ours = check_timed_match(&left, &right, &pairs);
        instances.push((left, right, pairs, ours));
    }
    let Some(cmd) = solver else {
        let mut o = outcome(
            8,
            true,
            bad_models == 0,
            format!("no z3 on PATH; only model re-evaluation checked: {sats} models, {bad_models} invalid"),
        );
        o.skipped = true;
        return o;
    };
    let scripts: Vec<(String, bool, String)> = systems
        .iter()
        .zip(&internal)
        .map(|(ts, ours)| (ts.to_smtlib(), !*ours, format!("system {ts:?}")))
        .chain(instances.iter().map(|(l, r, p, ours)| (timed_match_smtlib(l, r, p), *ours, format!("match left={l:?} right={r:?} pairs={p:?}"))))
        .collect();
    let results: Vec<Result<SmtStatus, String>> = std::thread::scope(|s| {
        let chunks: Vec<_> = scripts
            .chunks(scripts.len().div_ceil(8))
            .map(|chunk| {
                let cmd = &cmd;
                s.spawn(move || chunk.iter().map(|(sc, _, _)| smt_check(cmd, sc, SMT_TIMEOUT).map_err(|e| e.to_string())).collect::<Vec<_>>())
            })
            .collect();
        chunks.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    let mut unknown = 0;
    for ((_, expect_unsat, what), res) in scripts.iter().zip(results) {
        match res {
            Ok(SmtStatus::Unsat) if *expect_unsat => {}
            Ok(SmtStatus::Sat) if !*expect_unsat => {}
            Ok(SmtStatus::Unknown) | Err(_) => unknown += 1,
            Ok(st) => mismatches.push(format!("{what}: external {st:?}")),
        }
    }
    let pass = mismatches.is_empty() && bad_models == 0 && unknown == 0;
    let mut detail = format!(
        "{LINEAR_SYSTEMS} systems ({sats} sat) + {EXISTS_FORALL} exists-forall vs `{cmd}`: {} mismatches, {bad_models} invalid models, {unknown} unknown",
        mismatches.len()
    );
    if let Some(first) = mismatches.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    outcome(8, true, pass, detail)
}

fn criterion9() -> Outcome {
    let mut steps = 0usize;
    let mut violations = Vec::new();
    let roots: Vec<Configuration> = SCENARIOS.iter().map(|f| config(f)).chain(random_protocols().into_iter().map(|(_, c)| c)).collect();
    for root in &roots {
        enumerate_with(root, &EnumOptions::default(), &mut |parent, step| {
            steps += 1;
            if let Err(e) = check_step_invariants(parent, step) {
                violations.push(e);
            }
        });
    }
    let mut detail = format!("{steps} steps over the corpus and random protocols, {} violations", violations.len());
    if let Some(v) = violations.first() {
        detail.push_str(&format!("; first: {v}"));
    }
    outcome(9, true, violations.is_empty(), detail)
}

fn criterion10() -> Outcome {
    let root = config("ns.tproto");
    let mut hits = 0;
    enumerate_with(&root, &EnumOptions::default(), &mut |parent, step| {
        let final_recv = step.player == 0
            && matches!(parent.players[0].cmds.first(), Some(Cmd::Recv { .. }))
            && step.config.players[0].cmds.len() == 1;
        if final_recv
            && step.ssb.get(1) == Some(&Term::Nonce(0, 0))
            && step.ssb.get(2) == Some(&alice())
            && step.ssb.get(3) == Some(&Term::Nonce(1, 0))
        {
            hits += 1;
        }
    });
    outcome(10, true, hits > 0, format!("{hits} receive steps with [sym1->Na, sym2->alice, sym3->Nb]"))
}

fn main() {
    let table = run_table();
    let jobs: Vec<fn() -> Outcome> = vec![criterion3, criterion4, criterion5, criterion6, criterion7, criterion8, criterion9, criterion10];
    let mut results = vec![criterion1(&table), criterion2(&table)];
    let timings: Vec<(Outcome, Duration)> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|f| {
                s.spawn(move || {
                    let t = Instant::now();
                    let o = f();
                    (o, t.elapsed())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });
    results.extend(timings.into_iter().map(|(mut o, t)| {
        o.detail.push_str(&format!(" [{:.1}s]", t.as_secs_f64()));
        o
    }));
    let mut hard_failures = BTreeSet::new();
    for o in &results {
        let status = match (o.pass, o.skipped, o.hard) {
            (true, true, _) => "SKIP",
            (true, false, _) => "PASS",
            (false, _, true) => "FAIL",
            (false, _, false) => "FAIL (soft)",
        };
        println!("criterion {:>2}: {status}: {}", o.id, o.detail);
        if !o.pass && o.hard {
            hard_failures.insert(o.id);
        }
    }
    if !hard_failures.is_empty() {
        eprintln!("hard criteria failed: {hard_failures:?}");
        std::process::exit(1);
    }
}
