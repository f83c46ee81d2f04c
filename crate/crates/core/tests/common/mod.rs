#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use leakcount::gcl::{self, interpret, SourceProgram};

pub mod gen;
pub mod props;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn load(name: &str) -> SourceProgram {
    let path = corpus_dir().join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    gcl::parse(&text).unwrap_or_else(|e| panic!("{}", e.render(name)))
}

/// Every `.gcl` file directly in the corpus directory, sorted.
pub fn corpus_files() -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .filter_map(|e| {
            let n = e.unwrap().file_name().into_string().unwrap();
            n.ends_with(".gcl").then_some(n)
        })
        .collect();
    v.sort();
    v
}

pub fn expectations(name: &str) -> BTreeMap<String, String> {
    let path = corpus_dir().join(name.replace(".gcl", ".expect"));
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

pub fn unwind(name: &str) -> u32 {
    expectations(name).get("unwind").map_or(1, |v| v.parse().unwrap())
}

pub fn depth(name: &str) -> u32 {
    expectations(name).get("depth").map_or(32, |v| v.parse().unwrap())
}

/// All input valuations of `p` (by declared name), in lexicographic order.
pub fn all_inputs(p: &SourceProgram) -> Vec<HashMap<String, u64>> {
    let decls: Vec<_> = p.inputs().cloned().collect();
    let total: u32 = decls.iter().map(|d| d.width).sum();
    assert!(total <= 20, "too many input bits for enumeration");
    (0u64..1 << total)
        .map(|mut bits| {
            let mut m = HashMap::new();
            for d in &decls {
                m.insert(d.name.clone(), bits & ((1 << d.width) - 1));
                bits >>= d.width;
            }
            m
        })
        .collect()
}

/// Distinct outputs over all feasible runs.
pub fn brute_outputs(p: &SourceProgram, bound: u32) -> BTreeSet<u64> {
    all_inputs(p)
        .iter()
        .map(|i| interpret(p, i, bound))
        .filter(|o| o.feasible)
        .map(|o| o.output)
        .collect()
}
