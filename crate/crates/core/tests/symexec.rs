mod common;

use std::collections::{BTreeSet, HashMap};

use common::props::mutually_exclusive;
use common::*;
use leakcount::eval::eval;
use leakcount::gcl::{interpret, parse, version_name, SourceProgram};
use leakcount::sat::Engine;
use leakcount::symexec::{bmc_formula, execute, Mode, PathSummary, Verdict};
use leakcount::{Env, Op, Term, Value};

fn input_env(p: &SourceProgram, inputs: &HashMap<String, u64>) -> Env {
    p.inputs().map(|d| (version_name(&d.name, 0), Value::bv(inputs[&d.name], d.width))).collect()
}

fn equivalent(a: &Term, b: &Term) -> bool {
    let mut e = Engine::new();
    e.assert_term(&Term::not(Term::eq(a.clone(), b.clone()))).unwrap();
    !e.check().is_sat()
}

fn sat(t: &Term) -> bool {
    let mut e = Engine::new();
    e.assert_term(t).unwrap();
    e.check().is_sat()
}

#[test]
fn straight_line_has_one_path() {
    let p = parse("low int8 x; output int8 O;\nO = x + 1;\nO = O * 2;").unwrap();
    for mode in [Mode::Classical, Mode::Deferred] {
        let s = execute(&p, 1, mode).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].pc, Term::tt());
        assert_eq!(s[0].verdict, Verdict::Completed);
        let x = Term::bv_var("x_0", 8);
        let expected = Term::bin(Op::BvMul, Term::bin(Op::BvAdd, x, Term::bv_const(1, 8)), Term::bv_const(2, 8));
        assert!(equivalent(&s[0].out, &expected));
    }
}

#[test]
fn sanitize_has_two_summaries() {
    let s = execute(&load("sanitize.gcl"), 1, Mode::Classical).unwrap();
    assert_eq!(s.len(), 2);
    let h = Term::bv_var("H_0", 32);
    let small = Term::bin(Op::BvUlt, h.clone(), Term::bv_const(16, 32));
    assert!(equivalent(&s[0].pc, &small));
    assert!(equivalent(&s[0].out, &Term::bin(Op::BvAdd, h, Term::bv_const(8, 32))));
    assert!(equivalent(&s[1].pc, &Term::not(small)));
    assert_eq!(s[1].out, Term::bv_const(8, 32));
    assert!(s.iter().all(|x| x.verdict == Verdict::Completed));
}

/// The three violating disjuncts of the branch/assert example. Exploration
/// takes the inner then-side first, so the first two come out swapped.
#[test]
fn branch_assert_disjuncts() {
    let p = load("branch_assert.gcl");
    let s = execute(&p, 2, Mode::Deferred).unwrap();
    assert_eq!(s.len(), 3);
    let x = Term::bv_var("x_0", 8);
    let k = |v| Term::bv_const(v, 8);
    let x1 = Term::bin(Op::BvAdd, x.clone(), k(1));
    let gt5 = Term::bin(Op::BvUgt, x.clone(), k(5));
    let lt = |a: &Term, v| Term::bin(Op::BvUlt, a.clone(), k(v));
    let expected = [
        Term::and(vec![gt5.clone(), Term::not(lt(&x1, 3)), Term::not(lt(&x1, 10))]),
        Term::and(vec![gt5.clone(), lt(&x1, 3), Term::not(lt(&x, 10))]),
        Term::and(vec![Term::not(gt5), Term::not(lt(&x, 10))]),
    ];
    let got = bmc_formula(&s);
    assert_eq!(got.len(), 3);
    for (g, e) in got.iter().zip([&expected[1], &expected[0], &expected[2]]) {
        assert!(equivalent(g, e), "{g} vs {e}");
    }
    // x_0 = 11 takes the outer branch and fails the assertion.
    let env: Env = [("x_0".to_string(), Value::bv(11, 8))].into();
    assert!(eval(&got[1], &env).unwrap().as_bool());
}

#[test]
fn assertion_free_program_needs_no_solving() {
    let s = execute(&load("sanitize.gcl"), 4, Mode::Deferred).unwrap();
    assert!(bmc_formula(&s).is_empty());
}

#[test]
fn bmc_disjuncts_match_interpreter() {
    let p = load("sanitize8_assert.gcl");
    let s = execute(&p, 4, Mode::Deferred).unwrap();
    let d = bmc_formula(&s);
    assert_eq!(d.len(), 2);
    let mut violating = 0;
    for inputs in all_inputs(&p) {
        let env = input_env(&p, &inputs);
        let by_formula = d.iter().any(|t| eval(t, &env).unwrap().as_bool());
        let by_run = !interpret(&p, &inputs, 1).failed_asserts.is_empty();
        assert_eq!(by_formula, by_run, "{inputs:?}");
        violating += by_run as u32;
    }
    // 13..15 overflow the first assertion, every large H trips the second.
    assert_eq!(violating, 3 + 240);
}

#[test]
fn bound_counts_branch_decisions() {
    let p = parse("low int4 n; local int4 i; output int4 O;\nwhile (i < n) { i = i + 1; O = O + 2; }").unwrap();
    let s = execute(&p, 3, Mode::Classical).unwrap();
    let verdicts: Vec<Verdict> = s.iter().map(|x| x.verdict).collect();
    // n = 0, 1, 2 finish; the run still looping after three tests stops.
    assert_eq!(verdicts, [Verdict::BoundHit, Verdict::Completed, Verdict::Completed, Verdict::Completed]);
    assert!(s.iter().all(|x| x.decisions.len() <= 3));

    // Concrete loops still count their tests.
    let fib = load("fib_secret.gcl");
    assert_eq!(execute(&fib, 6, Mode::Classical).unwrap()[0].verdict, Verdict::BoundHit);
    let done = execute(&fib, 7, Mode::Classical).unwrap();
    assert_eq!(done.len(), 1);
    assert_eq!(done[0].out, Term::bv_const(8, 8));
}

#[test]
fn assumes_are_tagged() {
    let p = parse("low int4 x; output int4 O;\nif (x < 3) { assume(x > 5); O = 1; } else { assume(x != 7); O = 2; }").unwrap();
    let classical = execute(&p, 2, Mode::Classical).unwrap();
    assert_eq!(classical.iter().map(|s| s.verdict).collect::<Vec<_>>(), [Verdict::AssumeViolated, Verdict::Completed]);
    let deferred = execute(&p, 2, Mode::Deferred).unwrap();
    assert_eq!(deferred.iter().map(|s| s.verdict).collect::<Vec<_>>(), [Verdict::Completed, Verdict::Completed]);
    assert!(!sat(&deferred[0].pc));

    let p = parse("low int4 x; output int4 O;\nassume(false);\nassert(x == 1);").unwrap();
    let s = execute(&p, 1, Mode::Deferred).unwrap();
    assert_eq!(s[0].verdict, Verdict::AssumeViolated);
    assert!(bmc_formula(&s).is_empty());
}

#[test]
fn path_conditions_are_mutually_exclusive() {
    for name in corpus_files() {
        let p = load(&name);
        let s = execute(&p, depth(&name), Mode::Classical).unwrap();
        mutually_exclusive(&name, &s);
        let d = execute(&p, depth(&name), Mode::Deferred).unwrap();
        if d.len() <= 128 {
            mutually_exclusive(&name, &d);
        }
    }
}

/// Every input that passes the assumes follows exactly one summary, whose
/// output term agrees with the interpreter.
#[test]
fn summaries_cover_every_input() {
    for name in corpus_files() {
        let p = load(&name);
        if p.input_bits() > 16 {
            continue;
        }
        let s = execute(&p, depth(&name), Mode::Classical).unwrap();
        assert!(s.iter().all(|x| x.verdict != Verdict::BoundHit), "{name}: depth too small");
        for inputs in all_inputs(&p) {
            let run = interpret(&p, &inputs, unwind(&name));
            if !run.feasible {
                continue;
            }
            let env = input_env(&p, &inputs);
            let hits: Vec<&PathSummary> =
                s.iter().filter(|x| x.verdict.finished() && eval(&x.pc, &env).unwrap().as_bool()).collect();
            assert_eq!(hits.len(), 1, "{name} {inputs:?}");
            assert_eq!(eval(&hits[0].out, &env).unwrap().bits(), run.output, "{name} {inputs:?}");
            let violated = hits[0].assert_term.as_ref().is_some_and(|t| eval(t, &env).unwrap().as_bool());
            assert_eq!(violated, !run.failed_asserts.is_empty(), "{name} {inputs:?}");
        }
    }
}

/// Classical mode keeps exactly the deferred paths with satisfiable pc.
#[test]
fn classical_is_deferred_minus_infeasible() {
    for name in corpus_files() {
        let p = load(&name);
        let d = execute(&p, depth(&name), Mode::Deferred).unwrap();
        if d.len() > 256 {
            continue;
        }
        let c = execute(&p, depth(&name), Mode::Classical).unwrap();
        let key = |x: &PathSummary| (x.decisions.clone(), x.pc.clone(), x.out.clone());
        let kept: BTreeSet<_> = d
            .iter()
            .filter(|x| x.verdict != Verdict::AssumeViolated && sat(&x.pc))
            .map(|x| format!("{:?}", key(x)))
            .collect();
        let classical: BTreeSet<_> =
            c.iter().filter(|x| x.verdict != Verdict::AssumeViolated).map(|x| format!("{:?}", key(x))).collect();
        assert_eq!(kept, classical, "{name}");
    }
}
