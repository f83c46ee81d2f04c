mod common;

use std::collections::HashMap;

use common::*;
use leakcount::formula::{abstract_bool, conjuncts, encode, encode_property, instrument, is_propositional, FormulaError};
use leakcount::gcl::{parse, unroll};
use leakcount::sat::{Engine, SolverConfig};
use leakcount::smtlib::{emit_script, emit_terms, parse_script};
use leakcount::term::{rename, Op, Term};
use leakcount::Value;

fn bv(n: &str, w: u32) -> Term {
    Term::bv_var(n, w)
}

fn k(v: u64, w: u32) -> Term {
    Term::bv_const(v, w)
}

fn unsat(terms: &[Term]) -> bool {
    !Engine::from_terms(terms, SolverConfig::default()).unwrap().check().is_sat()
}

fn primed(t: &Term) -> Term {
    rename(t, &|n| (!n.ends_with("_0")).then(|| format!("{n}'")))
}

#[test]
fn encode_sanitize_matches_boxed_formula() {
    let ssa = unroll(&load("sanitize.gcl"), 1).unwrap();
    let c = encode(&ssa);
    let h = bv("H_0", 32);
    let g = Term::bool_var("g!0");
    assert_eq!(
        conjuncts(&c),
        vec![
            Term::eq(bv("L_1", 32), k(8, 32)),
            Term::eq(g.clone(), Term::bin(Op::BvUlt, h.clone(), k(16, 32))),
            Term::eq(bv("O_1", 32), Term::ite(g.clone(), Term::bin(Op::BvAdd, h.clone(), bv("L_1", 32)), k(0, 32))),
            Term::eq(bv("O_2", 32), Term::ite(Term::not(g.clone()), bv("L_1", 32), bv("O_1", 32))),
        ]
    );
    // The phi-merge form, over primed copies of the non-input names.
    let boxed = primed(&Term::and(vec![
        Term::eq(bv("L_1", 32), k(8, 32)),
        Term::eq(Term::bool_var("g_0"), Term::bin(Op::BvUlt, h.clone(), k(16, 32))),
        Term::eq(bv("O_1", 32), Term::bin(Op::BvAdd, h.clone(), bv("L_1", 32))),
        Term::eq(bv("O_2", 32), bv("L_1", 32)),
        Term::eq(bv("O_3", 32), Term::ite(Term::bool_var("g_0"), bv("O_1", 32), bv("O_2", 32))),
    ]));
    assert!(unsat(&[c, boxed, Term::not(Term::eq(ssa.output.clone(), bv("O_3'", 32)))]));
}

#[test]
fn encode_single_assignment() {
    let ssa = unroll(&parse("output int8 O;\nO = 3;").unwrap(), 1).unwrap();
    assert_eq!(encode(&ssa), Term::eq(bv("O_1", 8), k(3, 8)));
    assert_eq!(encode_property(&ssa), Term::tt());
}

#[test]
fn encode_cbmc_example_equivalent_to_reference() {
    let ssa = unroll(&load("cbmc_example.gcl"), 1).unwrap();
    let c = encode(&ssa);
    let p = encode_property(&ssa);
    let ne1 = Term::not(Term::eq(bv("x_1", 8), k(1, 8)));
    let z = Term::not(Term::eq(bv("z_0", 8), k(0, 8)));
    let c_ref = Term::and(vec![
        Term::eq(bv("x_1", 8), Term::bin(Op::BvAdd, bv("x_0", 8), bv("y_0", 8))),
        Term::eq(bv("x_2", 8), Term::ite(ne1.clone(), k(2, 8), bv("x_1", 8))),
        Term::eq(
            bv("x_3", 8),
            Term::ite(Term::and(vec![ne1.clone(), z]), Term::bin(Op::BvAdd, bv("x_2", 8), k(1, 8)), bv("x_2", 8)),
        ),
    ]);
    let p_ref = Term::and(vec![
        Term::implies(ne1, Term::bin(Op::BvUgt, bv("y_0", 8), k(1, 8))),
        Term::bin(Op::BvUle, bv("x_3", 8), k(3, 8)),
    ]);
    let same = Term::and(vec![Term::eq(bv("x_3", 8), bv("x_3'", 8)), Term::eq(p.clone(), primed(&p_ref))]);
    assert!(unsat(&[c, primed(&c_ref), Term::not(same)]));
}

/// Models of the encoding, restricted to inputs, are exactly the feasible
/// runs, with the same output.
#[test]
fn encode_agrees_with_interpreter() {
    for name in corpus_files() {
        let p = load(&name);
        if p.input_bits() > 16 {
            continue;
        }
        let ssa = unroll(&p, unwind(&name)).unwrap();
        let mut e = Engine::from_terms(&[encode(&ssa)], SolverConfig::default()).unwrap();
        let input_vars: Vec<(String, u32)> = ssa.inputs().iter().map(|(n, d)| (n.clone(), d.width)).collect();
        let out_var = Term::bv_var("O!out", ssa.output_width);
        e.assert_term(&Term::eq(out_var.clone(), ssa.output.clone())).unwrap();
        for inputs in all_inputs(&p) {
            let direct = leakcount::gcl::interpret(&p, &inputs, unwind(&name));
            let mut lits = Vec::new();
            for ((n, w), d) in input_vars.iter().zip(p.inputs()) {
                lits.extend(e.value_literals(&bv(n, *w), Value::bv(inputs[&d.name], *w)).unwrap());
            }
            let r = e.check_lits(&lits);
            assert_eq!(r.is_sat(), direct.feasible, "{name} {inputs:?}");
            if direct.feasible {
                assert_eq!(e.eval(&out_var).unwrap().bits(), direct.output, "{name} {inputs:?}");
            }
        }
    }
}

#[test]
fn instrument_sanitize() {
    let ssa = unroll(&load("sanitize.gcl"), 1).unwrap();
    let f = instrument(&encode(&ssa), &ssa.output, &["H_0".to_string()]).unwrap();
    assert_eq!(f.important.len(), 32);
    assert_eq!(f.important[0], "p!1");
    assert_eq!(
        f.bindings[0],
        Term::eq(Term::bool_var("p!1"), Term::eq(Term::extract(0, 0, bv("O_2", 32)), k(1, 1)))
    );
    assert_eq!(
        f.bindings[31],
        Term::eq(Term::bool_var("p!32"), Term::eq(Term::extract(31, 31, bv("O_2", 32)), k(1, 1)))
    );
    // each p_i occurs in exactly one binding
    for (i, p) in f.important.iter().enumerate() {
        let owners = f.bindings.iter().filter(|b| b.mentions(&|n| n == p)).count();
        assert_eq!(owners, 1, "{p}");
        assert!(f.bindings[i].mentions(&|n| n == p));
    }
    assert!(f.relevant.iter().all(|(n, _)| !f.important.contains(n)));
}

#[test]
fn instrument_small_outputs() {
    let ssa = unroll(&load("password.gcl"), 1).unwrap();
    let f = instrument(&encode(&ssa), &ssa.output, &[]).unwrap();
    assert_eq!(f.important, vec!["p!1"]);

    let ssa = unroll(&load("mix_dup8.gcl"), 1).unwrap();
    let f = instrument(&encode(&ssa), &ssa.output, &["H_0".to_string()]).unwrap();
    assert_eq!(f.important.len(), 16);
    assert_eq!(f.relevant.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(), vec!["H_0"]);
}

#[test]
fn instrument_rejects_unknown_names() {
    let ssa = unroll(&load("sanitize.gcl"), 1).unwrap();
    let c = encode(&ssa);
    assert_eq!(
        instrument(&c, &bv("Q_1", 32), &[]).unwrap_err(),
        FormulaError::UnknownVariable("Q_1".into())
    );
    assert_eq!(
        instrument(&c, &ssa.output, &["nope".to_string()]).unwrap_err(),
        FormulaError::UnknownVariable("nope".into())
    );
    // an output that is never assigned is a constant and needs no variable
    let ssa = unroll(&load("cbmc_example.gcl"), 1).unwrap();
    assert!(ssa.output.is_const());
    assert_eq!(instrument(&encode(&ssa), &ssa.output, &[]).unwrap().important.len(), 8);
}

fn branch_phi() -> (Term, Vec<(&'static str, Term)>) {
    let x0 = bv("x_0", 8);
    let x1 = bv("x_1", 8);
    let one = k(1, 8);
    let atoms = vec![
        ("G_1", Term::bin(Op::BvUgt, x0.clone(), k(5, 8))),
        ("G_2", Term::bin(Op::BvUlt, x1.clone(), k(3, 8))),
        ("A_1", Term::eq(x1.clone(), Term::bin(Op::BvAdd, x0, one.clone()))),
        ("A_2", Term::eq(bv("x_2", 8), Term::bin(Op::BvSub, x1.clone(), one.clone()))),
        ("A_3", Term::eq(bv("y_1", 8), Term::bin(Op::BvAdd, x1, one))),
    ];
    let at = |n: &str| atoms.iter().find(|(m, _)| *m == n).unwrap().1.clone();
    let t = |i: u32| Term::bool_var(&format!("T_{i}"));
    let or = |a: Term, b: Term| Term::or(vec![a, b]);
    let phi = Term::and(vec![
        or(Term::not(at("G_1")), t(1)),
        or(at("G_1"), t(2)),
        or(Term::not(at("G_1")), at("A_1")),
        or(Term::not(at("G_2")), t(3)),
        or(Term::not(at("G_2")), at("A_2")),
        or(at("G_2"), t(4)),
        or(at("G_2"), at("A_3")),
    ]);
    (phi, atoms)
}

#[test]
fn abstraction_of_branch_formula() {
    let (phi, atoms) = branch_phi();
    let (skel, map) = abstract_bool(&phi);
    assert!(is_propositional(&skel));
    assert_eq!(map.len(), 5);
    // rename the fresh variables to the names used for the same atoms
    let names: HashMap<String, String> = map
        .entries()
        .iter()
        .map(|(v, a)| (v.clone(), atoms.iter().find(|(_, b)| b == a).unwrap().0.to_string()))
        .collect();
    let named = rename(&skel, &|n| names.get(n).cloned());
    let v = |n: &str| Term::bool_var(n);
    let or = |a: Term, b: Term| Term::or(vec![a, b]);
    let expected = Term::and(vec![
        or(Term::not(v("G_1")), v("T_1")),
        or(v("G_1"), v("T_2")),
        or(Term::not(v("G_1")), v("A_1")),
        or(Term::not(v("G_2")), v("T_3")),
        or(Term::not(v("G_2")), v("A_2")),
        or(v("G_2"), v("T_4")),
        or(v("G_2"), v("A_3")),
    ]);
    assert_eq!(named, expected);
    assert_eq!(map.refine(&skel), phi);
    for (var, atom) in map.entries() {
        assert_eq!(map.var_for(atom), Some(var.as_str()));
        assert_eq!(map.atom_for(var), Some(atom));
    }
}

#[test]
fn abstraction_trivial_and_shared() {
    let p = Term::or(vec![Term::bool_var("p"), Term::not(Term::bool_var("q"))]);
    let (skel, map) = abstract_bool(&p);
    assert_eq!(skel, p);
    assert!(map.is_empty());

    let x = bv("x", 8);
    let gt = Term::bin(Op::BvUgt, x.clone(), k(5, 8));
    let t = Term::and(vec![gt.clone(), Term::implies(gt.clone(), Term::eq(bv("y", 8), k(1, 8)))]);
    let (skel, map) = abstract_bool(&t);
    assert_eq!(map.len(), 2);
    let a0 = Term::bool_var(map.var_for(&gt).unwrap());
    assert_eq!(skel.args()[0], a0);
    assert_eq!(skel.args()[1].args()[0], a0);
}

/// Every model of skeleton plus definitions satisfies the original formula.
#[test]
fn abstraction_equisatisfiable_on_corpus() {
    for name in corpus_files() {
        let ssa = unroll(&load(&name), unwind(&name)).unwrap();
        let f = instrument(&encode(&ssa), &ssa.output, &[]).unwrap();
        let t = Term::and(vec![f.formula(), encode_property(&ssa)]);
        let (skel, map) = abstract_bool(&t);
        assert!(is_propositional(&skel), "{name}");
        assert_eq!(map.refine(&skel), t, "{name}");
        let mut parts = vec![skel.clone()];
        parts.extend(map.definitions());
        let mut e = Engine::from_terms(&parts, SolverConfig::default()).unwrap();
        let direct = Engine::from_terms(&[t.clone()], SolverConfig::default()).unwrap().check();
        let r = e.check();
        assert_eq!(r, direct, "{name}");
        if r.is_sat() {
            assert!(e.eval(&t).unwrap().as_bool(), "{name}");
        }
    }
}

#[test]
fn smt_round_trip_on_corpus() {
    for name in corpus_files() {
        let ssa = unroll(&load(&name), unwind(&name)).unwrap();
        let relevant: Vec<String> = ssa.inputs().into_iter().map(|(n, _)| n).collect();
        let c = encode(&ssa);
        let relevant: Vec<String> = relevant.into_iter().filter(|n| c.mentions(&|m| m == n)).collect();
        let f = instrument(&c, &ssa.output, &relevant).unwrap();
        let text = f.emit();
        let s = parse_script(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        assert_eq!(emit_script(&s), text, "{name}");
        let mut expected = conjuncts(&f.base);
        expected.extend(f.bindings.iter().cloned());
        assert_eq!(s.assertions(), expected, "{name}");
    }
    let text = std::fs::read_to_string(corpus_dir().join("smt/branch_paths.smt2")).unwrap();
    let s = parse_script(&text).unwrap();
    assert_eq!(s.assertions().len(), 12);
    assert_eq!(parse_script(&emit_script(&s)).unwrap(), s);
    assert_eq!(emit_terms(&[Term::tt()]), "(set-logic QF_BV)\n(assert true)\n");
}

#[test]
fn sanitize_emission_golden() {
    let ssa = unroll(&load("sanitize.gcl"), 1).unwrap();
    let f = instrument(&encode(&ssa), &ssa.output, &["H_0".to_string()]).unwrap();
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/sanitize.smt2");
    if std::env::var_os("LEAKCOUNT_BLESS").is_some() {
        std::fs::write(&path, f.emit()).unwrap();
    }
    assert_eq!(f.emit(), std::fs::read_to_string(&path).unwrap());
}
