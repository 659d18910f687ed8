//! Acceptance run: every suite at its defaults, one line per criterion.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qkz_verify::{run_one, CheckRecord, RunConfig, Suite};

struct Criterion {
    number: usize,
    title: &'static str,
    suite: Suite,
    /// Record-id prefixes covered, each with the number of records expected.
    groups: Vec<(String, usize)>,
    budget: Option<Duration>,
}

fn kernel_groups() -> Vec<(String, usize)> {
    let mut g = Vec::new();
    for case in ["n2l1", "n3l1", "n4l1", "n4l2"] {
        for what in ["rank", "gap", "kernel-angle", "image-angle"] {
            g.push((format!("kernel/{case}/{what}"), 1));
        }
    }
    g
}

fn vanishing_groups() -> Vec<(String, usize)> {
    let mut g = Vec::new();
    for (case, subsets) in [("n2l1", 2), ("n4l2", 6)] {
        for mu in ["mu0", "mu1"] {
            for family in ["g", "w", "r-closed"] {
                g.push((format!("vanishing/{case}/{mu}/{family}/"), subsets));
            }
        }
    }
    g
}

fn criteria() -> Vec<Criterion> {
    let one = |p: &str, k: usize| vec![(p.to_string(), k)];
    let secs = |s: u64| Some(Duration::from_secs(s));
    vec![
        Criterion { number: 1, title: "Barnes integral closed form, k = 0..4, three μ", suite: Suite::Barnes, groups: one("barnes/", 15), budget: secs(10) },
        Criterion { number: 2, title: "det M product formula, exact, n ≤ 6", suite: Suite::Detm, groups: one("detm/", 30), budget: secs(1) },
        Criterion { number: 3, title: "det of the hypergeometric matrix vs closed form", suite: Suite::DetIntegral, groups: one("det-integral/", 8), budget: secs(300) },
        Criterion { number: 4, title: "qKZ shift equations and image in the singular space", suite: Suite::Shift, groups: one("shift/", 10), budget: None },
        Criterion { number: 5, title: "μ-differential equation", suite: Suite::MuOde, groups: one("mu-ode/", 3), budget: None },
        Criterion {
            number: 6,
            title: "total differences integrate to zero",
            suite: Suite::Vanishing,
            groups: vanishing_groups(),
            budget: None,
        },
        Criterion { number: 7, title: "kernel and image of the hypergeometric map at μ = 0", suite: Suite::Kernel, groups: kernel_groups(), budget: None },
        Criterion { number: 8, title: "A₀ spectrum and kernel dimension, n ≤ 5", suite: Suite::Spectrum, groups: one("spectrum/", 20), budget: None },
        Criterion {
            number: 9,
            title: "exterior-algebra dimensions, sl₂ triple, Jordan–Wigner, divisibility",
            suite: Suite::Grassmann,
            groups: vec![
                ("grassmann/dims/".into(), 44),
                ("grassmann/sl2/".into(), 5),
                ("grassmann/jw-faithful/".into(), 5),
                ("grassmann/jw-phi1/".into(), 5),
                ("grassmann/jw-phi2/".into(), 5),
                ("grassmann/divisibility/".into(), 4),
            ],
            budget: None,
        },
        Criterion { number: 10, title: "q → i subspace limit, geometric decay", suite: Suite::Grassmann, groups: one("grassmann/subspace-limit/n4l2/", 2), budget: None },
        Criterion {
            number: 11,
            title: "randomized identities, 100 points per family",
            suite: Suite::Identities,
            groups: ["yang-baxter", "weight-antisymmetrization", "xi1-expansion", "xi2-expansion", "mu-shift-compatibility", "l-commutes-k-tilde", "contour-independence"]
                .iter()
                .map(|f| (format!("identities/{f}/"), 100))
                .collect(),
            budget: None,
        },
    ]
}

/// Problems with one criterion; empty when it holds.
fn judge(c: &Criterion, records: &[CheckRecord], elapsed: Duration) -> Vec<String> {
    let mut problems = Vec::new();
    for (prefix, expected) in &c.groups {
        let matching: Vec<&CheckRecord> = records.iter().filter(|r| r.id.starts_with(prefix.as_str())).collect();
        if matching.len() != *expected {
            problems.push(format!("{prefix}: {} records, expected {expected}", matching.len()));
        }
        for r in matching.iter().filter(|r| !r.pass) {
            problems.push(format!("{} failed (residual {:?}, tolerance {})", r.id, r.residual, r.tolerance));
        }
    }
    if let Some(budget) = c.budget {
        if elapsed > budget {
            problems.push(format!("took {:.2} s, budget {:.0} s", elapsed.as_secs_f64(), budget.as_secs_f64()));
        }
    }
    problems
}

fn main() -> ExitCode {
    let cfg = RunConfig::default();
    let mut results: BTreeMap<&'static str, (Vec<CheckRecord>, Duration)> = BTreeMap::new();
    let mut errors = Vec::new();
    let start = Instant::now();
    for suite in Suite::ALL {
        let t = Instant::now();
        match run_one(suite, &cfg) {
            Ok(records) => {
                results.insert(suite.name(), (records, t.elapsed()));
            }
            Err(e) => errors.push(format!("{}: {e}", suite.name())),
        }
    }
    let total = start.elapsed();

    let mut failed = 0;
    for c in criteria() {
        let mut problems = match results.get(c.suite.name()) {
            Some((records, elapsed)) => judge(&c, records, *elapsed),
            None => vec![format!("suite {} did not run", c.suite.name())],
        };
        if c.number == 11 && total > Duration::from_secs(600) {
            problems.push(format!("full run took {:.1} s, budget 600 s", total.as_secs_f64()));
        }
        let elapsed = results.get(c.suite.name()).map_or(0.0, |(_, d)| d.as_secs_f64());
        let status = if problems.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status}  {} ({} suite, {elapsed:.2} s)", c.number, c.title, c.suite.name());
        for p in &problems {
            println!("    {p}");
        }
        failed += usize::from(!problems.is_empty());
    }

    let all: Vec<&CheckRecord> = results.values().flat_map(|(r, _)| r).collect();
    let extra_failures: Vec<&str> = all.iter().filter(|r| !r.pass).map(|r| r.id.as_str()).collect();
    println!("all suites: {} records in {:.2} s, {} failing", all.len(), total.as_secs_f64(), extra_failures.len());
    for e in &errors {
        println!("    error: {e}");
    }
    for id in &extra_failures {
        println!("    failing: {id}");
    }
    if failed == 0 && errors.is_empty() && extra_failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
