use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};

use super::gen::{assignments, Gen};
use leakcount::allsmt::{all_bc, all_dfs, EnumerationResult};
use leakcount::eval::eval;
use leakcount::sat::{Engine, SatError, SolverConfig};
use leakcount::symexec::PathSummary;
use leakcount::{Sort, Term, Value};

pub fn projections(r: &EnumerationResult) -> BTreeSet<Vec<bool>> {
    r.models.iter().map(|m| m.important.clone()).collect()
}

pub fn both(phi: &Term, important: &[String], relevant: &[String]) -> BTreeSet<Vec<bool>> {
    let bc = all_bc(phi, important, relevant, None).unwrap();
    let dfs = all_dfs(phi, important, relevant, None).unwrap();
    assert_eq!(bc.count as usize, bc.models.len());
    assert_eq!(dfs.count as usize, dfs.models.len());
    let mut a = bc.models.clone();
    let mut b = dfs.models.iter().map(|m| m.important.clone()).collect::<Vec<_>>();
    a.sort();
    b.sort();
    assert_eq!(a.iter().map(|m| m.important.clone()).collect::<Vec<_>>(), b);
    assert_eq!(projections(&bc).len(), bc.models.len(), "duplicate projection");
    assert!(bc.count <= 1u64 << important.len().min(63));
    projections(&bc)
}

pub fn mutually_exclusive(name: &str, s: &[PathSummary]) {
    let mut e = Engine::new();
    let lits: Vec<_> = s.iter().map(|x| e.literal(&x.pc).unwrap()).collect();
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            assert!(!e.check_lits(&[lits[i], lits[j]]).is_sat(), "{name}: paths {i} and {j} overlap");
        }
    }
}


/// Random formula `seed` with up to 12 important bits and at most 18 bits
/// in total, against the projected truth table.
pub fn truth_table_case(seed: u64) {
    let mut g = Gen::new(seed, vec![]);
    let wx = g.rng.gen_range(1..=5);
    let wy = g.rng.gen_range(1..=4);
    let bv = vec![("x".to_string(), Sort::BitVec(wx)), ("y".to_string(), Sort::BitVec(wy))];
    let k = g.rng.gen_range(1..=(18 - wx - wy).min(12));
    let ps: Vec<String> = (0..k).map(|i| format!("q{i}")).collect();
    let mut vars = bv.clone();
    vars.extend(ps.iter().map(|p| (p.clone(), Sort::Bool)));
    g.vars = vars.clone();
    let w = g.rng.gen_range(1..=6);
    g.vars = bv.clone();
    let out = g.term(Sort::BitVec(w), 3);
    g.vars = vars.clone();
    let side = g.term(Sort::Bool, 3);
    // Some bits are tied to a bit-vector term, the rest stay free but
    // may appear in the side condition.
    let mut parts = vec![side];
    for (i, p) in ps.iter().enumerate() {
        let pv = Term::bool_var(p);
        if (i as u32) < w && g.rng.gen_bool(0.7) {
            let bit = Term::eq(Term::extract(i as u32, i as u32, out.clone()), Term::bv_const(1, 1));
            parts.push(Term::eq(pv, bit));
        } else {
            parts.push(Term::or(vec![pv.clone(), Term::not(pv)]));
        }
    }
    let phi = Term::and(parts);

    let mut expected = BTreeSet::new();
    let mut witnesses: HashMap<Vec<bool>, usize> = HashMap::new();
    for env in assignments(&vars) {
        if eval(&phi, &env).unwrap().as_bool() {
            let proj: Vec<bool> = ps.iter().map(|p| env[p].as_bool()).collect();
            *witnesses.entry(proj.clone()).or_default() += 1;
            expected.insert(proj);
        }
    }
    let free: BTreeSet<String> = phi.free_vars().into_iter().map(|(n, _)| n).collect();
    let rel: Vec<String> = ["x", "y"].iter().map(|s| s.to_string()).filter(|n| free.contains(n)).collect();
    let got = both(&phi, &ps, &rel);
    assert_eq!(got, expected, "seed {seed}: {phi}");

    // Relevant values come from a real witness.
    let r = all_bc(&phi, &ps, &rel, None).unwrap();
    for m in &r.models {
        let mut env = m.relevant.clone().into_iter().collect::<HashMap<_, _>>();
        for (n, s) in &bv {
            env.entry(n.clone()).or_insert(Value::bv(0, s.width().unwrap()));
        }
        for (p, &b) in ps.iter().zip(&m.important) {
            env.insert(p.clone(), Value::Bool(b));
        }
        assert!(eval(&phi, &env).unwrap().as_bool(), "seed {seed}: {m:?}");
    }
}

/// Random push/pop/assert/check script `seed`, checked against a fresh
/// plain engine after every query.
pub fn incremental_case(seed: u64) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let vars = vec![
        ("a".to_string(), Sort::BitVec(4)),
        ("b".to_string(), Sort::BitVec(4)),
        ("c".to_string(), Sort::BitVec(3)),
        ("p".to_string(), Sort::Bool),
    ];
    let mut g = Gen::new(seed ^ 0x5eed, vars);
    let learning = seed % 2 == 1;
    let mut e = Engine::with_config(SolverConfig { learning, ..Default::default() });
    let mut stack: Vec<Vec<Term>> = vec![vec![]];
    for step in 0..30 {
        match rng.gen_range(0..10) {
            0..=3 => {
                let t = g.term(Sort::Bool, 3);
                e.assert_term(&t).unwrap();
                stack.last_mut().unwrap().push(t);
            }
            4..=5 => {
                e.push();
                stack.push(vec![]);
            }
            6..=7 => {
                let n = rng.gen_range(1..=2u32);
                let r = e.pop(n);
                if n as usize >= stack.len() {
                    assert_eq!(r, Err(SatError::StackUnderflow { requested: n, depth: stack.len() as u32 - 1 }));
                } else {
                    r.unwrap();
                    stack.truncate(stack.len() - n as usize);
                }
            }
            8 => {
                let visible: Vec<Term> = stack.iter().flatten().cloned().collect();
                let mut fresh = Engine::from_terms(&visible, SolverConfig::plain()).unwrap();
                assert_eq!(e.check(), fresh.check(), "seed {seed} step {step}");
            }
            _ => {
                // Assumptions hold for one check only.
                let t = g.term(Sort::Bool, 2);
                let mut visible: Vec<Term> = stack.iter().flatten().cloned().collect();
                visible.push(t.clone());
                let mut fresh = Engine::from_terms(&visible, SolverConfig::plain()).unwrap();
                assert_eq!(e.check_assuming(&[t]).unwrap(), fresh.check(), "seed {seed} step {step}");
            }
        }
    }
    let visible: Vec<Term> = stack.iter().flatten().cloned().collect();
    let mut fresh = Engine::from_terms(&visible, SolverConfig::plain()).unwrap();
    assert_eq!(e.check(), fresh.check(), "seed {seed} final");
}
