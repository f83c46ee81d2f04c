mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use common::*;
use leakcount::bmc::{
    check_concurrent, enumerate_counterexamples, generate_tests, reliability, BmcConfig, BmcError, BmcVerdict,
    Counterexample,
};
use leakcount::eval::eval;
use leakcount::gcl::{interpret, parse, unroll, version_name, SourceProgram, SsaStmt};
use leakcount::sat::SolverConfig;
use leakcount::symexec::{execute, Mode, Verdict};
use leakcount::{Env, Value};

fn cfg(depth: u32, workers: usize, batch: usize, stop_on_first: bool) -> BmcConfig {
    BmcConfig { workers, batch, stop_on_first, ..BmcConfig::new(depth) }
}

fn to_hash(i: &BTreeMap<String, u64>) -> HashMap<String, u64> {
    i.iter().map(|(k, v)| (k.clone(), *v)).collect()
}

fn assert_valid(name: &str, p: &SourceProgram, unwind: u32, cs: &[Counterexample]) {
    for c in cs {
        let run = interpret(p, &to_hash(&c.inputs), unwind);
        assert!(run.feasible, "{name}: {:?}", c.inputs);
        assert!(!run.failed_asserts.is_empty(), "{name}: {:?} does not fail", c.inputs);
    }
}

fn with_asserts() -> Vec<String> {
    corpus_files().into_iter().filter(|n| load(n).has_assertions()).collect()
}

#[test]
fn branch_assert_is_violated() {
    let p = load("branch_assert.gcl");
    let r = check_concurrent(&p, &cfg(2, 1, 200, true)).unwrap();
    assert_eq!(r.verdict, BmcVerdict::Violated);
    assert_eq!(r.counterexamples.len(), 1);
    let x = r.counterexamples[0].inputs["x"];
    assert!(x >= 9, "x = {x}");
    assert_valid("branch_assert", &p, 1, &r.counterexamples);
    assert_eq!((r.stats.paths, r.stats.disjuncts, r.stats.batches), (3, 3, 1));
}

#[test]
fn assertion_free_program_solves_nothing() {
    let r = check_concurrent(&load("sanitize.gcl"), &cfg(4, 2, 10, false)).unwrap();
    assert_eq!(r.verdict, BmcVerdict::Safe);
    assert_eq!((r.stats.batches, r.stats.checks), (0, 0));
    assert!(r.counterexamples.is_empty());
}

#[test]
fn bad_config_is_rejected() {
    let p = load("sanitize.gcl");
    assert!(matches!(check_concurrent(&p, &cfg(1, 0, 1, true)), Err(BmcError::Config(_))));
    assert!(matches!(check_concurrent(&p, &cfg(1, 1, 0, true)), Err(BmcError::Config(_))));
}

#[test]
fn bubble_sort() {
    let safe = check_concurrent(&load("bubble5.gcl"), &cfg(10, 4, 200, true)).unwrap();
    assert_eq!(safe.verdict, BmcVerdict::Safe);
    assert_eq!(safe.stats.disjuncts, 1024);
    let p = load("bubble5_neg.gcl");
    let bad = check_concurrent(&p, &cfg(10, 4, 200, true)).unwrap();
    assert_eq!(bad.verdict, BmcVerdict::Violated);
    // The sort always succeeds, so any input fails the negated assertion.
    assert_valid("bubble5_neg", &p, 1, &bad.counterexamples);
    assert_eq!(bad.counterexamples[0].inputs.len(), 5);
}

/// Verdict and the set of violating disjuncts do not depend on the number
/// of workers or the batch size.
#[test]
fn result_is_independent_of_workers_and_batches() {
    for name in with_asserts() {
        let p = load(&name);
        let d = depth(&name);
        let reference = check_concurrent(&p, &cfg(d, 1, 1, false)).unwrap();
        let classes = |cs: &[Counterexample]| cs.iter().map(|c| c.disjunct.unwrap()).collect::<BTreeSet<_>>();
        let expected = classes(&reference.counterexamples);
        assert_eq!(reference.counterexamples.len(), expected.len());
        assert_valid(&name, &p, unwind(&name), &reference.counterexamples);
        if let Some(v) = expectations(&name).get("bmc") {
            let want = if v == "safe" { BmcVerdict::Safe } else { BmcVerdict::Violated };
            assert_eq!(reference.verdict, want, "{name}");
        }
        for workers in [1, 2, 4] {
            for batch in [1, 10, 200] {
                let all = check_concurrent(&p, &cfg(d, workers, batch, false)).unwrap();
                assert_eq!(all.verdict, reference.verdict, "{name} {workers}x{batch}");
                assert_eq!(classes(&all.counterexamples), expected, "{name} {workers}x{batch}");
                assert_valid(&name, &p, unwind(&name), &all.counterexamples);
                let first = check_concurrent(&p, &cfg(d, workers, batch, true)).unwrap();
                assert_eq!(first.verdict, reference.verdict, "{name} {workers}x{batch}");
                // Workers already solving when the latch closes may still report.
                assert!(first.counterexamples.len() <= workers);
                assert_eq!(first.counterexamples.is_empty(), first.verdict == BmcVerdict::Safe);
                assert!(classes(&first.counterexamples).is_subset(&expected));
                assert_valid(&name, &p, unwind(&name), &first.counterexamples);
            }
        }
    }
}

#[test]
fn counterexample_limit() {
    let p = load("sanitize8_assert.gcl");
    let mut c = cfg(4, 2, 1, false);
    let all = check_concurrent(&p, &c).unwrap();
    assert_eq!(all.counterexamples.len(), 2);
    c.max_counterexamples = Some(1);
    let one = check_concurrent(&p, &c).unwrap();
    assert_eq!(one.verdict, BmcVerdict::Violated);
    assert_eq!(one.counterexamples.len(), 1);
}

/// Error classes by brute force: run the SSA form on every input and
/// collect the guard valuations of the runs that fail an assertion.
fn brute_classes(p: &SourceProgram, unwind: u32) -> BTreeSet<Vec<bool>> {
    let ssa = unroll(p, unwind).unwrap();
    let mut classes = BTreeSet::new();
    for inputs in all_inputs(p) {
        let mut env: Env = p.inputs().map(|d| (version_name(&d.name, 0), Value::bv(inputs[&d.name], d.width))).collect();
        let (mut feasible, mut failed) = (true, false);
        let holds = |t, env: &Env| eval(t, env).unwrap().as_bool();
        for s in &ssa.stmts {
            match s {
                SsaStmt::GuardDef { name, cond } => {
                    let v = eval(cond, &env).unwrap();
                    env.insert(name.clone(), v);
                }
                SsaStmt::Assign { var, value, .. } => {
                    let v = eval(value, &env).unwrap();
                    env.insert(var.clone(), v);
                }
                SsaStmt::Assume { guard, cond } => feasible &= !holds(guard, &env) || holds(cond, &env),
                SsaStmt::Assert { guard, cond, .. } => failed |= holds(guard, &env) && !holds(cond, &env),
            }
        }
        if feasible && failed {
            classes.insert(ssa.guards.iter().map(|g| env[g].as_bool()).collect());
        }
    }
    classes
}

#[test]
fn error_classes() {
    let solver = SolverConfig::default();
    let r = enumerate_counterexamples(&load("cbmc_example.gcl"), 1, None, &solver).unwrap();
    assert_eq!(r.counterexamples.len(), 2);
    assert_eq!(r.verdict, BmcVerdict::Violated);
    let r = enumerate_counterexamples(&load("no_flow.gcl"), 1, None, &solver).unwrap();
    assert_eq!((r.verdict, r.counterexamples.len()), (BmcVerdict::Safe, 0));

    let buggy = parse(
        "high int4 H; local int4 L; output int4 O;\n\
         L = 8;\n\
         if (H < 6) { O = H + L; assert(O < 12); } else { O = L; assert(H != 9); }\n\
         if (O == 8) assert(H != 6);",
    )
    .unwrap();
    let r = enumerate_counterexamples(&buggy, 1, None, &solver).unwrap();
    let got: BTreeSet<Vec<bool>> = r.counterexamples.iter().map(|c| c.guards.clone().unwrap()).collect();
    assert_eq!(got, brute_classes(&buggy, 1));
    assert!(got.len() >= 2);
    assert_valid("buggy", &buggy, 1, &r.counterexamples);

    for name in with_asserts() {
        let p = load(&name);
        if p.input_bits() > 16 {
            continue;
        }
        let r = enumerate_counterexamples(&p, unwind(&name), None, &solver).unwrap();
        let got: BTreeSet<Vec<bool>> = r.counterexamples.iter().map(|c| c.guards.clone().unwrap()).collect();
        assert_eq!(got.len(), r.counterexamples.len(), "{name}");
        assert_eq!(got, brute_classes(&p, unwind(&name)), "{name}");
        assert_valid(&name, &p, unwind(&name), &r.counterexamples);
        if let Some(n) = expectations(&name).get("classes") {
            assert_eq!(got.len().to_string(), *n, "{name}");
        }
    }
}

#[test]
fn generated_tests_cover_every_path() {
    let solver = SolverConfig::default();
    let foo = load("foo.gcl");
    let tests = generate_tests(&foo, 1, None, &solver).unwrap();
    assert_eq!(tests.len().to_string(), expectations("foo.gcl")["tests"]);

    let line = parse("low int8 x; output int8 O;\nO = x + 1;").unwrap();
    assert_eq!(generate_tests(&line, 1, None, &solver).unwrap().len(), 1);

    for name in corpus_files() {
        let p = load(&name);
        if p.input_bits() > 16 || name.starts_with("bubble") {
            continue;
        }
        let tests = generate_tests(&p, unwind(&name), None, &solver).unwrap();
        let summaries: Vec<_> =
            execute(&p, depth(&name), Mode::Classical).unwrap().into_iter().filter(|s| s.verdict.finished()).collect();
        let mut covered = BTreeSet::new();
        for t in &tests {
            let env: Env = p.inputs().map(|d| (version_name(&d.name, 0), Value::bv(t[&d.name], d.width))).collect();
            assert!(interpret(&p, &to_hash(t), unwind(&name)).feasible, "{name}");
            let hit = summaries.iter().position(|s| eval(&s.pc, &env).unwrap().as_bool());
            covered.insert(hit.unwrap_or_else(|| panic!("{name}: {t:?} follows no path")));
        }
        assert_eq!(covered.len(), summaries.len(), "{name}: some path has no test");
        assert!(tests.len() >= summaries.len());
    }
}

#[test]
fn reliability_matches_brute_force() {
    let solver = SolverConfig::default();
    let progs = [
        "low int4 x; output int4 O;\nif (x > 5) { x = x + 1; if (x < 3) x = x - 1; else assert(false); }",
        "high int4 H; low int2 L; output int4 O;\nassume(L != 3);\nO = H + zext(L, 4);\nassert(O < 14);",
    ];
    for src in progs {
        let p = parse(src).unwrap();
        let r = reliability(&p, 8, None, &solver).unwrap();
        let (mut t, mut f) = (0, 0);
        for inputs in all_inputs(&p) {
            let run = interpret(&p, &inputs, 1);
            if run.feasible {
                if run.failed_asserts.is_empty() {
                    t += 1
                } else {
                    f += 1
                }
            }
        }
        assert_eq!((r.t, r.f, r.g), (t, f, 0), "{src}");
        assert_eq!(r.reliability, t as f64 / (t + f) as f64);
    }
    // x <= 5 skips the assert, and x = 15 wraps to 0 and takes the inner
    // then side: 7 of 16 inputs finish.
    let p = parse(progs[0]).unwrap();
    assert_eq!(reliability(&p, 8, None, &solver).unwrap().t, 7);

    let looping = parse("low int2 n; local int2 i; output int2 O;\nwhile (i < n) i = i + 1;").unwrap();
    let r = reliability(&looping, 2, None, &solver).unwrap();
    // n = 0 and n = 1 finish within two tests; n = 2, 3 are cut.
    assert_eq!((r.t, r.f, r.g), (2, 0, 2));
    assert_eq!(r.reliability, 0.5);
    let summaries = execute(&looping, 2, Mode::Classical).unwrap();
    assert_eq!(summaries.iter().filter(|s| s.verdict == Verdict::BoundHit).count(), 1);
}
