//! Shared inputs for the benchmarks.

use std::path::PathBuf;

use leakcount::gcl::{self, SourceProgram};
use leakcount::Term;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus(name: &str) -> SourceProgram {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    gcl::parse(&text).unwrap_or_else(|e| panic!("{}", e.render(name)))
}

/// Random 3-CNF over `vars` Boolean variables as one conjunction.
pub fn random_3cnf(seed: u64, vars: u32, clauses: u32) -> Term {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cs = (0..clauses)
        .map(|_| {
            let lits = (0..3)
                .map(|_| {
                    let v = Term::bool_var(&format!("v{}", rng.gen_range(0..vars)));
                    if rng.gen() {
                        v
                    } else {
                        Term::not(v)
                    }
                })
                .collect();
            Term::or(lits)
        })
        .collect();
    Term::and(cs)
}
