//! Seeded random terms for oracle tests.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use leakcount::term::{Op, Sort, Term};

pub struct Gen {
    pub rng: ChaCha8Rng,
    pub vars: Vec<(String, Sort)>,
}

const BV_BIN: &[Op] = &[
    Op::BvAnd,
    Op::BvOr,
    Op::BvXor,
    Op::BvAdd,
    Op::BvSub,
    Op::BvMul,
    Op::BvUdiv,
    Op::BvUrem,
    Op::BvSdiv,
    Op::BvSrem,
    Op::BvShl,
    Op::BvLshr,
    Op::BvAshr,
];

const BV_CMP: &[Op] = &[
    Op::BvUlt,
    Op::BvUle,
    Op::BvUgt,
    Op::BvUge,
    Op::BvSlt,
    Op::BvSle,
    Op::BvSgt,
    Op::BvSge,
];

impl Gen {
    pub fn new(seed: u64, vars: Vec<(String, Sort)>) -> Gen {
        use rand::SeedableRng;
        Gen { rng: ChaCha8Rng::seed_from_u64(seed), vars }
    }

    fn leaf(&mut self, sort: Sort) -> Term {
        let candidates: Vec<&(String, Sort)> = self.vars.iter().filter(|(_, s)| *s == sort).collect();
        if !candidates.is_empty() && self.rng.gen_bool(0.75) {
            let (n, s) = candidates.choose(&mut self.rng).unwrap();
            return Term::var(n, *s);
        }
        match sort {
            Sort::Bool => Term::bool_const(self.rng.gen()),
            Sort::BitVec(w) => Term::bv_const(self.rng.gen::<u64>(), w),
        }
    }

    fn widths(&self) -> Vec<u32> {
        let mut w: Vec<u32> = self.vars.iter().filter_map(|(_, s)| s.width()).collect();
        w.sort();
        w.dedup();
        if w.is_empty() {
            w.push(3);
        }
        w
    }

    pub fn term(&mut self, sort: Sort, depth: u32) -> Term {
        if depth == 0 || self.rng.gen_bool(0.2) {
            return self.leaf(sort);
        }
        let d = depth - 1;
        match sort {
            Sort::Bool => match self.rng.gen_range(0..8) {
                0 => Term::not(self.term(Sort::Bool, d)),
                1 => Term::and(vec![self.term(Sort::Bool, d), self.term(Sort::Bool, d)]),
                2 => Term::or(vec![self.term(Sort::Bool, d), self.term(Sort::Bool, d)]),
                3 => Term::implies(self.term(Sort::Bool, d), self.term(Sort::Bool, d)),
                4 => Term::app(Op::Xor, vec![self.term(Sort::Bool, d), self.term(Sort::Bool, d)]).unwrap(),
                5 => Term::ite(self.term(Sort::Bool, d), self.term(Sort::Bool, d), self.term(Sort::Bool, d)),
                6 => {
                    let w = *self.widths().choose(&mut self.rng).unwrap();
                    Term::eq(self.term(Sort::BitVec(w), d), self.term(Sort::BitVec(w), d))
                }
                _ => {
                    let w = *self.widths().choose(&mut self.rng).unwrap();
                    let op = *BV_CMP.choose(&mut self.rng).unwrap();
                    Term::bin(op, self.term(Sort::BitVec(w), d), self.term(Sort::BitVec(w), d))
                }
            },
            Sort::BitVec(w) => match self.rng.gen_range(0..7) {
                0 => Term::un(if self.rng.gen() { Op::BvNot } else { Op::BvNeg }, self.term(sort, d)),
                1 => Term::ite(self.term(Sort::Bool, d), self.term(sort, d), self.term(sort, d)),
                2 if w > 1 => {
                    // concat of two extracts of wider/narrower pieces
                    let k = self.rng.gen_range(1..w);
                    let hi = self.term(Sort::BitVec(w), d);
                    let lo = self.term(Sort::BitVec(w), d);
                    Term::app(Op::Concat, vec![Term::extract(w - 1, k, hi), Term::extract(k - 1, 0, lo)]).unwrap()
                }
                3 if w > 1 => {
                    let k = self.rng.gen_range(1..w);
                    let op = if self.rng.gen() { Op::ZeroExt(w - k) } else { Op::SignExt(w - k) };
                    Term::app(op, vec![Term::extract(k - 1, 0, self.term(sort, d))]).unwrap()
                }
                _ => {
                    let op = *BV_BIN.choose(&mut self.rng).unwrap();
                    Term::bin(op, self.term(sort, d), self.term(sort, d))
                }
            },
        }
    }
}

/// All assignments to `vars` (total bits must be small).
pub fn assignments(vars: &[(String, Sort)]) -> Vec<leakcount::Env> {
    use leakcount::Value;
    let total: u32 = vars.iter().map(|(_, s)| s.width().unwrap_or(1)).sum();
    assert!(total <= 20);
    (0..1u64 << total)
        .map(|mut bits| {
            let mut env = leakcount::Env::new();
            for (n, s) in vars {
                let w = s.width().unwrap_or(1);
                let v = bits & ((1 << w) - 1);
                bits >>= w;
                env.insert(
                    n.clone(),
                    match s {
                        Sort::Bool => Value::Bool(v == 1),
                        Sort::BitVec(w) => Value::bv(v, *w),
                    },
                );
            }
            env
        })
        .collect()
}
