//! Golden runs over a directory of `.gcl` programs with `.expect` sidecars.
//!
//! A sidecar holds `key=value` lines. `depth` (branch decisions, default 32)
//! and `unwind` (loop unwinding, default 1) set the analysis bounds; `N`,
//! `capacity`, `bound`, `labels`, `bmc`, `classes` and `tests` are checked.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use leakcount::bmc::{check_concurrent, enumerate_counterexamples, generate_tests, BmcConfig, BmcVerdict};
use leakcount::qif::{capacity, QifQuery};
use leakcount::sat::SolverConfig;
use leakcount::selfcomp::{label_paths, LabelOptions};
use leakcount::symexec::{execute, Mode};

use crate::report::{bits3, Check, CorpusReport, FileResult, LabelReport};

const CHECKED: [&str; 7] = ["N", "capacity", "bound", "labels", "bmc", "classes", "tests"];
const PARAMS: [&str; 2] = ["depth", "unwind"];

#[derive(Debug)]
pub struct MissingExpectation {
    pub file: String,
    pub reason: String,
}

impl fmt::Display for MissingExpectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: missing expectation: {}", self.file, self.reason)
    }
}

impl std::error::Error for MissingExpectation {}

fn missing(file: &str, reason: impl Into<String>) -> MissingExpectation {
    MissingExpectation { file: file.to_string(), reason: reason.into() }
}

pub fn parse_expect(file: &str, text: &str) -> Result<BTreeMap<String, String>, MissingExpectation> {
    let mut m = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| missing(file, format!("line {}: not key=value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !CHECKED.contains(&k) && !PARAMS.contains(&k) {
            return Err(missing(file, format!("line {}: unknown key {k}", i + 1)));
        }
        m.insert(k.to_string(), v.to_string());
    }
    if !m.keys().any(|k| CHECKED.contains(&k.as_str())) {
        return Err(missing(file, "no checkable key"));
    }
    for k in PARAMS {
        if let Some(v) = m.get(k) {
            v.parse::<u32>().map_err(|_| missing(file, format!("{k}={v} is not a bound")))?;
        }
    }
    Ok(m)
}

fn check_file(dir: &Path, name: &str, max_input_bits: u32) -> Result<FileResult> {
    let path = dir.join(name);
    let exp_path = path.with_extension("expect");
    let exp_text = std::fs::read_to_string(&exp_path).map_err(|_| missing(name, "no .expect file"))?;
    let exp = parse_expect(name, &exp_text)?;
    let src = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let p = leakcount::gcl::parse(&src).map_err(|e| anyhow::anyhow!(e.render(name)))?;
    let param = |k: &str, d: u32| exp.get(k).map_or(d, |v| v.parse().unwrap());
    let (depth, unwind) = (param("depth", 32), param("unwind", 1));
    let solver = SolverConfig::default();

    let mut actual: BTreeMap<&str, String> = BTreeMap::new();
    if exp.contains_key("N") || exp.contains_key("capacity") {
        let r = capacity(&QifQuery::new(p.clone(), unwind))?;
        actual.insert("N", r.n.to_string());
        actual.insert("capacity", bits3(r.capacity_bits));
    }
    if exp.contains_key("bound") || exp.contains_key("labels") {
        let opts = LabelOptions { max_input_bits, ..Default::default() };
        let l = label_paths(&p, &execute(&p, depth, Mode::Classical)?, &opts)?;
        let r = LabelReport::new(name, depth, true, &l);
        actual.insert("bound", r.upper_bound.clone());
        actual.insert("labels", r.labels_key());
    }
    if exp.contains_key("bmc") {
        let cfg = BmcConfig { workers: 2, ..BmcConfig::new(depth) };
        let r = check_concurrent(&p, &cfg)?;
        let v = match r.verdict {
            BmcVerdict::Safe => "safe",
            BmcVerdict::Violated => "violated",
        };
        actual.insert("bmc", v.to_string());
    }
    if exp.contains_key("classes") {
        let r = enumerate_counterexamples(&p, unwind, None, &solver)?;
        actual.insert("classes", r.counterexamples.len().to_string());
    }
    if exp.contains_key("tests") {
        actual.insert("tests", generate_tests(&p, unwind, None, &solver)?.len().to_string());
    }

    let checks: Vec<Check> = CHECKED
        .iter()
        .filter_map(|k| {
            let expected = exp.get(*k)?.clone();
            let actual = actual[k].clone();
            Some(Check { key: k.to_string(), ok: expected == actual, expected, actual })
        })
        .collect();
    Ok(FileResult { file: name.to_string(), pass: checks.iter().all(|c| c.ok), checks })
}

/// Check every `.gcl` file directly in `dir`, in name order.
pub fn run_corpus(dir: &Path, max_input_bits: u32) -> Result<CorpusReport> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".gcl"))
        .collect();
    names.sort();
    let mut results = Vec::new();
    for n in &names {
        results.push(check_file(dir, n, max_input_bits)?);
    }
    let passed = results.iter().filter(|r| r.pass).count();
    Ok(CorpusReport { command: "corpus", dir: dir.display().to_string(), failed: results.len() - passed, passed, results })
}
