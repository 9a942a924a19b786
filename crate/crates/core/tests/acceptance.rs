//! The thirteen acceptance criteria. Every tolerance is pinned here rather
//! than read back from the suite, so a loosened suite default cannot make a
//! criterion pass. Prints one line per criterion.

use std::time::Instant;

use fraccalc::report::VerificationReport;
use fraccalc::suites::{run_suite, SuiteConfig};

struct Criterion {
    id: u32,
    title: &'static str,
    budget_s: f64,
    /// (suite, case pattern with `*` wildcards, pinned tolerance)
    checks: Vec<(&'static str, &'static str, f64)>,
}

fn glob(pattern: &str, name: &str) -> bool {
    let parts: Vec<&str> = pattern.split('*').collect();
    if parts.len() == 1 {
        return pattern == name;
    }
    let mut rest = name;
    for (k, p) in parts.iter().enumerate() {
        if k == 0 {
            match rest.strip_prefix(p) {
                Some(r) => rest = r,
                None => return false,
            }
        } else if k == parts.len() - 1 {
            return rest.ends_with(p);
        } else {
            match rest.find(p) {
                Some(i) => rest = &rest[i + p.len()..],
                None => return false,
            }
        }
    }
    true
}

fn criteria() -> Vec<Criterion> {
    let h1023: f64 = 1.0 / 1023.0;
    let h_sym: f64 = 2.0 / 1024.0;
    vec![
        Criterion {
            id: 1,
            title: "kernel annihilation",
            budget_s: 5.0,
            checks: vec![
                ("ftfc", "kappa-annihilation-alpha-0.25", 5e-2 * 0.1f64.powf(-0.75)),
                ("ftfc", "kappa-annihilation-alpha-0.5", 5e-2 * 0.1f64.powf(-0.5)),
                ("ftfc", "kappa-annihilation-alpha-0.75", 5e-2 * 0.1f64.powf(-0.25)),
                // order cases carry the shortfall below 0.4
                ("ftfc", "kappa-annihilation-alpha-*-order", 0.0),
            ],
        },
        Criterion { id: 2, title: "constant closed form", budget_s: 2.0, checks: vec![("ftfc", "constant-closed-form", 1e-3)] },
        Criterion {
            id: 3,
            title: "classical fundamental theorem round trip",
            budget_s: 10.0,
            checks: vec![
                ("ftfc", "roundtrip-*-c0", 10.0 * h1023.powf(0.5)),
                ("ftfc", "roundtrip-*-c1", 10.0 * h1023.powf(0.5)),
                // |order - 0.5| for c = 1; shortfall below 0.3 for c = 0
                ("ftfc", "roundtrip-*-c1-order", 0.2),
                ("ftfc", "roundtrip-*-c0-order", 0.0),
            ],
        },
        Criterion {
            id: 4,
            title: "semigroup",
            budget_s: 5.0,
            checks: vec![("semigroup", "composed-vs-oracle", 1e-2), ("semigroup", "composed-vs-direct", 1e-2)],
        },
        Criterion {
            id: 5,
            title: "step weak derivative",
            budget_s: 20.0,
            checks: vec![
                ("weak-step", "grid-vs-closed-form", h_sym.powf(0.5)),
                ("weak-step", "grid-vs-closed-form-order", 0.0),
                ("weak-step", "pairing-bump-*", 1e-5),
                // 1e-2 / (largest impostor residual): <= 1 means the impostor fails
                ("weak-step", "caputo-control-rejected", 1.0),
            ],
        },
        Criterion {
            id: 6,
            title: "backend agreement",
            budget_s: 10.0,
            checks: vec![
                ("backend-agreement", "gl-vs-rl", 5e-3),
                ("backend-agreement", "fourier-vs-rl", 5e-3),
                // |ratio - 2| within 30%
                ("backend-agreement", "gl-halving-ratio", 0.6),
            ],
        },
        Criterion {
            id: 7,
            title: "pollution decay",
            budget_s: 2.0,
            checks: vec![("pollution", "*-slope", 0.15), ("pollution", "*-monotone-decay", 0.0)],
        },
        Criterion {
            id: 8,
            title: "product rule",
            budget_s: 30.0,
            checks: vec![("product", "*-reconstruction-m*", 1e-4), ("product", "*-remainder-nonincreasing", 0.0)],
        },
        Criterion {
            id: 9,
            title: "chain rule",
            budget_s: 10.0,
            checks: vec![("chain", "square-vs-direct", 1e-4), ("chain", "identity-remainder", 0.0)],
        },
        Criterion {
            id: 10,
            title: "integration by parts",
            budget_s: 10.0,
            checks: vec![("ibp", "overlapping-pairing", 1e-5), ("ibp", "classical-pairing", 1e-8)],
        },
        Criterion { id: 11, title: "mollifier commutation", budget_s: 10.0, checks: vec![("mollifier", "commute-eps-*", 5e-3)] },
        Criterion {
            id: 12,
            title: "distributions",
            budget_s: 20.0,
            checks: vec![
                ("dist-delta", "probe-*-vs-oracle", 1e-6),
                ("dist-delta", "probe-*-cutoff-independence", 1e-8),
                ("dist-pou", "probe-*-pou-vs-cutoff", 1e-8),
                ("dist-limit", "gap-ratio", 0.1),
            ],
        },
        Criterion {
            id: 13,
            title: "weak fundamental theorem",
            budget_s: 10.0,
            checks: vec![("ftwfc", "step-reconstruction", h_sym.powf(0.5)), ("ftwfc", "step-reconstruction-order", 0.0)],
        },
    ]
}

fn evaluate(c: &Criterion) -> (bool, String) {
    let start = Instant::now();
    let mut reports: Vec<VerificationReport> = Vec::new();
    let mut failures = Vec::new();
    for (suite, _, _) in &c.checks {
        if reports.iter().any(|r| r.suite == *suite) {
            continue;
        }
        match run_suite(suite, &SuiteConfig::default()) {
            Ok(r) => reports.push(r),
            Err(e) => failures.push(format!("{suite}: {e}")),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let mut worst = 0.0f64;
    for (suite, pattern, tol) in &c.checks {
        let Some(r) = reports.iter().find(|r| r.suite == *suite) else { continue };
        let hits: Vec<_> = r.cases.iter().filter(|k| glob(pattern, &k.name)).collect();
        if hits.is_empty() {
            failures.push(format!("{suite}/{pattern}: no such case"));
        }
        for k in hits {
            if !(k.residual <= *tol) {
                failures.push(format!("{suite}/{}: {:.3e} > {:.3e}", k.name, k.residual, tol));
            }
            if *tol > 0.0 {
                worst = worst.max(k.residual / tol);
            }
        }
    }
    if elapsed > c.budget_s {
        failures.push(format!("runtime {elapsed:.2}s over {:.0}s", c.budget_s));
    }
    let pass = failures.is_empty();
    let line = format!(
        "criterion {:>2} {:<42} {}  worst residual/tol {:.3}  {:.2}s{}",
        c.id,
        c.title,
        if pass { "PASS" } else { "FAIL" },
        worst,
        elapsed,
        if pass { String::new() } else { format!("  [{}]", failures.join("; ")) }
    );
    (pass, line)
}

// Runs without the libtest harness so the criterion lines are never captured.
fn main() {
    glob_self_check();
    let mut failed = Vec::new();
    for c in criteria() {
        let (pass, line) = evaluate(&c);
        println!("{line}");
        if !pass {
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", criteria().len());
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}

fn glob_self_check() {
    assert!(glob("pairing-bump-*", "pairing-bump-07"));
    assert!(glob("*-reconstruction-m*", "left-reconstruction-m3"));
    assert!(glob("roundtrip-*-c1-order", "roundtrip-sin-c1-order"));
    assert!(!glob("roundtrip-*-c1", "roundtrip-sin-c1-order"));
    assert!(glob("gap-ratio", "gap-ratio"));
    assert!(!glob("gap-ratio", "gap-ratio-2"));
}
