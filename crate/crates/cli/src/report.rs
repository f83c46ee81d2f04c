//! Machine-readable reports and their text renderings. Both come from the
//! same structs, so the numbers always agree.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use leakcount::bmc::{BmcResult, Counterexample, ReliabilityReport};
use leakcount::qif::QifReport;
use leakcount::selfcomp::{Label, Labeling};
use leakcount::symexec::PathSummary;
use leakcount::Value;
use serde::Serialize;
use serde_json::json;

pub fn bits3(x: f64) -> String {
    format!("{x:.3}")
}

fn value_json(v: &Value) -> serde_json::Value {
    match *v {
        Value::Bool(b) => json!(b),
        Value::Bv { bits, .. } => json!(bits),
    }
}

#[derive(Serialize)]
pub struct Timings {
    pub encode_ms: f64,
    pub count_ms: f64,
}

#[derive(Serialize)]
pub struct CapacityReport {
    pub command: &'static str,
    pub file: String,
    pub bound: u32,
    pub route: &'static str,
    pub algorithm: &'static str,
    pub policy: Option<u32>,
    pub n: u64,
    pub capacity_bits: f64,
    pub capacity: String,
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<u64>>,
    pub checks: u64,
    pub timings: Timings,
    pub warnings: Vec<String>,
}

impl CapacityReport {
    pub fn new(file: &str, bound: u32, route: &'static str, algorithm: &'static str, policy: Option<u32>, r: QifReport) -> Self {
        CapacityReport {
            command: "capacity",
            file: file.to_string(),
            bound,
            route,
            algorithm,
            policy,
            n: r.n,
            capacity_bits: r.capacity_bits,
            capacity: bits3(r.capacity_bits),
            verdict: r.verdict.name(),
            outputs: r.outputs,
            checks: r.checks,
            timings: Timings {
                encode_ms: r.timings.encode.as_secs_f64() * 1e3,
                count_ms: r.timings.count.as_secs_f64() * 1e3,
            },
            warnings: r.warnings,
        }
    }

    pub fn text(&self) -> String {
        let mut s = format!("N={} capacity={} bits\n", self.n, self.capacity);
        if let (Some(k), "insecureAtPolicy") = (self.policy, self.verdict) {
            let _ = writeln!(s, "insecure at policy k={k}: at least {} outputs", self.n);
        }
        if let Some(o) = &self.outputs {
            let list: Vec<String> = o.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "outputs: {}", list.join(" "));
        }
        s
    }
}

#[derive(Serialize)]
pub struct PathReport {
    pub pc: String,
    pub out: String,
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub in_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<BTreeMap<String, serde_json::Value>>,
}

impl PathReport {
    pub fn summary(s: &PathSummary) -> PathReport {
        PathReport {
            pc: s.pc.to_string(),
            out: s.out.to_string(),
            verdict: s.verdict.name(),
            label: None,
            in_count: None,
            witness: None,
        }
    }
}

#[derive(Serialize)]
pub struct LabelCounts {
    pub clean: usize,
    pub indirect: usize,
    pub direct: usize,
}

#[derive(Serialize)]
pub struct LabelStats {
    pub df_checks: u64,
    pub if_checks: u64,
    pub df_skipped: u64,
}

#[derive(Serialize)]
pub struct LabelReport {
    pub command: &'static str,
    pub file: String,
    pub bound: u32,
    pub optimizations: bool,
    pub paths: Vec<PathReport>,
    pub labels: LabelCounts,
    pub sum_direct_inputs: u64,
    pub upper_bound_bits: f64,
    pub upper_bound: String,
    pub stats: LabelStats,
}

impl LabelReport {
    pub fn new(file: &str, bound: u32, optimizations: bool, l: &Labeling) -> Self {
        let b = l.bound();
        let paths = l
            .paths
            .iter()
            .map(|p| PathReport {
                label: Some(p.label.name()),
                in_count: p.in_count,
                witness: p.witness.as_ref().map(|w| w.iter().map(|(k, v)| (k.clone(), value_json(v))).collect()),
                ..PathReport::summary(&p.summary)
            })
            .collect();
        LabelReport {
            command: "label",
            file: file.to_string(),
            bound,
            optimizations,
            paths,
            labels: LabelCounts { clean: l.count(Label::Clean), indirect: l.count(Label::Indirect), direct: l.count(Label::Direct) },
            sum_direct_inputs: b.sum_direct_inputs,
            upper_bound_bits: b.upper_bound_bits,
            upper_bound: bits3(b.upper_bound_bits),
            stats: LabelStats { df_checks: l.stats.df_checks, if_checks: l.stats.if_checks, df_skipped: l.stats.df_skipped },
        }
    }

    /// Label counts in `.expect` form: nonzero entries only, `direct`,
    /// `indirect`, `clean` order.
    pub fn labels_key(&self) -> String {
        let l = &self.labels;
        let parts: Vec<String> = [("direct", l.direct), ("indirect", l.indirect), ("clean", l.clean)]
            .iter()
            .filter(|(_, n)| *n > 0)
            .map(|(k, n)| format!("{k}:{n}"))
            .collect();
        parts.join(",")
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for (i, p) in self.paths.iter().enumerate() {
            let _ = write!(s, "path {i}: {}", p.label.unwrap_or("-"));
            if let Some(n) = p.in_count {
                let _ = write!(s, " in={n}");
            }
            let _ = writeln!(s, " pc={} out={}", p.pc, p.out);
            if let Some(w) = &p.witness {
                let vals: Vec<String> = w.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let _ = writeln!(s, "  witness: {}", vals.join(" "));
            }
        }
        let l = &self.labels;
        let _ = writeln!(s, "labels: clean={} indirect={} direct={}", l.clean, l.indirect, l.direct);
        let _ = writeln!(s, "bound={} bits", self.upper_bound);
        s
    }
}

#[derive(Serialize)]
pub struct CounterexampleReport {
    pub inputs: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disjunct: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guards: Option<Vec<bool>>,
}

impl From<Counterexample> for CounterexampleReport {
    fn from(c: Counterexample) -> Self {
        CounterexampleReport { inputs: c.inputs, disjunct: c.disjunct, guards: c.guards }
    }
}

#[derive(Serialize)]
pub struct BmcStatsReport {
    pub paths: u64,
    pub disjuncts: u64,
    pub batches: u64,
    pub batches_solved: u64,
    pub checks: u64,
    pub elapsed_ms: f64,
}

#[derive(Serialize)]
pub struct Reliability {
    pub t: u64,
    pub f: u64,
    pub g: u64,
    pub reliability: f64,
}

#[derive(Serialize)]
pub struct BmcReport {
    pub command: &'static str,
    pub file: String,
    /// `check`, `classes`, `tests` or `reliability`.
    pub mode: &'static str,
    pub bound: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<&'static str>,
    pub counterexamples: Vec<CounterexampleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tests: Option<Vec<BTreeMap<String, u64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reliability: Option<Reliability>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<BmcStatsReport>,
}

fn inputs_line(i: &BTreeMap<String, u64>) -> String {
    i.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

impl BmcReport {
    pub fn empty(file: &str, mode: &'static str, bound: u32) -> Self {
        BmcReport {
            command: "bmc",
            file: file.to_string(),
            mode,
            bound,
            verdict: None,
            counterexamples: Vec::new(),
            tests: None,
            reliability: None,
            stats: None,
        }
    }

    pub fn result(file: &str, mode: &'static str, bound: u32, r: BmcResult) -> Self {
        let s = r.stats;
        BmcReport {
            verdict: Some(r.verdict.name()),
            counterexamples: r.counterexamples.into_iter().map(Into::into).collect(),
            stats: Some(BmcStatsReport {
                paths: s.paths,
                disjuncts: s.disjuncts,
                batches: s.batches,
                batches_solved: s.batches_solved,
                checks: s.checks,
                elapsed_ms: s.elapsed.as_secs_f64() * 1e3,
            }),
            ..BmcReport::empty(file, mode, bound)
        }
    }

    pub fn reliability(file: &str, bound: u32, r: ReliabilityReport) -> Self {
        BmcReport {
            reliability: Some(Reliability { t: r.t, f: r.f, g: r.g, reliability: r.reliability }),
            ..BmcReport::empty(file, "reliability", bound)
        }
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        if let Some(v) = self.verdict {
            let _ = writeln!(s, "verdict={v}");
        }
        if self.mode == "classes" {
            let _ = writeln!(s, "classes={}", self.counterexamples.len());
        }
        for c in &self.counterexamples {
            let _ = write!(s, "counterexample: {}", inputs_line(&c.inputs));
            if let Some(d) = c.disjunct {
                let _ = write!(s, " (disjunct {d})");
            }
            if let Some(g) = &c.guards {
                let g: String = g.iter().map(|&b| if b { '1' } else { '0' }).collect();
                let _ = write!(s, " (guards {g})");
            }
            s.push('\n');
        }
        if let Some(t) = &self.tests {
            let _ = writeln!(s, "tests={}", t.len());
            for i in t {
                let _ = writeln!(s, "test: {}", inputs_line(i));
            }
        }
        if let Some(r) = &self.reliability {
            let _ = writeln!(s, "T={} F={} G={} reliability={:.4}", r.t, r.f, r.g, r.reliability);
        }
        if let Some(st) = &self.stats {
            let _ = writeln!(s, "paths={} disjuncts={} batches={} checks={}", st.paths, st.disjuncts, st.batches, st.checks);
        }
        s
    }
}

#[derive(Serialize)]
pub struct ScriptReport {
    pub command: &'static str,
    pub file: String,
    pub output: String,
    pub check_sat: Vec<&'static str>,
    pub models: Vec<u64>,
}

#[derive(Serialize)]
pub struct Check {
    pub key: String,
    pub expected: String,
    pub actual: String,
    pub ok: bool,
}

#[derive(Serialize)]
pub struct FileResult {
    pub file: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

#[derive(Serialize)]
pub struct CorpusReport {
    pub command: &'static str,
    pub dir: String,
    pub results: Vec<FileResult>,
    pub passed: usize,
    pub failed: usize,
}

impl CorpusReport {
    pub fn text(&self) -> String {
        let mut s = String::new();
        for r in &self.results {
            let _ = writeln!(s, "{} {}", if r.pass { "PASS" } else { "FAIL" }, r.file);
            for c in r.checks.iter().filter(|c| !c.ok) {
                let _ = writeln!(s, "  {}: expected {} got {}", c.key, c.expected, c.actual);
            }
        }
        let _ = writeln!(s, "passed={} failed={}", self.passed, self.failed);
        s
    }
}
