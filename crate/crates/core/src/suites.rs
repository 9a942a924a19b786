//! Named verification suites. Each builds its own inputs, runs the library
//! checks and returns one report; the command line and the acceptance test
//! both go through [`run_suite`].

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::derivative::{caputo_derivative, fourier_derivative, gl_derivative, rl_derivative};
use crate::dist::{
    dist_apply, dist_consistency_limit, dist_fourier_derivative, dist_frac_derivative_compact,
    dist_frac_derivative_general, Cutoff, Distribution, PartitionOfUnity,
};
use crate::error::{Error, Result};
use crate::grid::{make_grid, sample, sample_excluding, Grid, GridFunction, GridKind, Interval};
use crate::report::{loglog_slope, measured_order, Case, VerificationReport};
use crate::rules::{
    chain_rule_expand, ftfc_constant, ftfc_reconstruct, ftwfc_verify, general_kernel_check, integration_by_parts_check,
    product_rule_expand, semigroup_check,
};
use crate::special::{gam, Direction};
use crate::weak::{
    default_family, mollify_at, pollution_derivative, step_weak_derivative, verify_weak_derivative,
    weak_derivative_compute, MollifierSpec, Smooth, StepFunction, TestFunction,
};

pub const SUITES: [&str; 16] = [
    "backend-agreement",
    "chain",
    "dist-delta",
    "dist-limit",
    "dist-pou",
    "fourier-rl",
    "ftfc",
    "ftwfc",
    "general-kernel",
    "gl-rl",
    "ibp",
    "mollifier",
    "pollution",
    "product",
    "semigroup",
    "weak-step",
];

/// Overrides for a suite run. Unset fields take the suite's own defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SuiteConfig {
    pub alpha: Option<f64>,
    /// Resolution; its meaning (node count or 1/h) is per suite.
    pub n: Option<usize>,
    /// Overrides every case tolerance that is not an order requirement.
    pub tol: Option<f64>,
    /// Half-width of the periodic window for the Fourier backend.
    pub window: Option<f64>,
    /// Highest product-rule order checked.
    pub m: Option<usize>,
}

impl SuiteConfig {
    fn alpha(&self, default: f64) -> f64 {
        self.alpha.unwrap_or(default)
    }

    fn n(&self, default: usize) -> usize {
        self.n.unwrap_or(default)
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<VerificationReport> {
    let report = match name {
        "ftfc" => ftfc(cfg),
        "ftwfc" => ftwfc(cfg),
        "semigroup" => semigroup(cfg),
        "product" => product(cfg),
        "chain" => chain(cfg),
        "pollution" => pollution(cfg),
        "weak-step" => weak_step(cfg),
        "ibp" => ibp(cfg),
        "mollifier" => mollifier(cfg),
        "gl-rl" => gl_rl(cfg),
        "fourier-rl" => fourier_rl(cfg),
        "backend-agreement" => backend_agreement(cfg),
        "dist-delta" => dist_delta(cfg),
        "dist-pou" => dist_pou(cfg),
        "dist-limit" => dist_limit(cfg),
        "general-kernel" => general_kernel(cfg),
        _ => Err(Error::InvalidArgument(format!("unknown suite '{name}'; known: {}", SUITES.join(", ")))),
    }?;
    let mut report = report.sorted();
    report.suite = name.to_string();
    Ok(report)
}

fn interval(a: f64, b: f64) -> Interval {
    Interval::new(a, b).expect("literal interval")
}

fn uniform(a: f64, b: f64, nodes: usize) -> Result<Grid> {
    make_grid(interval(a, b), nodes, GridKind::Uniform)
}

/// Sup of |a - b| over finite pairs at nodes where `keep` holds.
fn sup_diff(a: &GridFunction, b: &GridFunction, keep: impl Fn(f64) -> bool) -> f64 {
    a.sup_diff_where(b, keep)
}

fn sup_abs(u: &GridFunction, keep: impl Fn(f64) -> bool) -> f64 {
    u.nodes()
        .iter()
        .zip(u.values())
        .filter(|(x, v)| v.is_finite() && keep(**x))
        .fold(0.0, |m, (_, v)| m.max(v.abs()))
}

fn order_of(errs: [f64; 2], hs: [f64; 2]) -> Option<f64> {
    (errs[0] > 0.0 && errs[1] > 0.0).then(|| measured_order(errs[0], errs[1], hs[0], hs[1]))
}

/// Error constant for the round trip on [0.1, 1]: the kappa term alone
/// contributes about d1^alpha x^(-1-alpha), i.e. 8 h^0.5 at x = 0.1.
const ROUNDTRIP_C: f64 = 10.0;

/// Constant multiples of kappa^alpha are annihilated, a constant has its
/// closed-form derivative, and the two-way fundamental theorem holds.
fn ftfc(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let n = cfg.n(1024);
    let alphas: Vec<f64> = match cfg.alpha {
        Some(a) => vec![a],
        None => vec![0.25, 0.5, 0.75],
    };
    let mut r = VerificationReport::new("ftfc", alphas[alphas.len() / 2]);
    let keep = |x: f64| x >= 0.1;
    for &alpha in &alphas {
        let kap = |x: f64| x.powf(alpha - 1.0);
        let scale = 0.1f64.powf(alpha - 1.0);
        let mut errs = [0.0; 2];
        let mut hs = [0.0; 2];
        for (k, nodes) in [n / 2, n].into_iter().enumerate() {
            let g = make_grid(interval(0.0, 1.0), nodes, GridKind::Graded(2.0 / alpha))?;
            let d = rl_derivative(&sample_excluding(kap, &g, Direction::Left)?, Direction::Left, alpha)?;
            errs[k] = sup_abs(&d, keep);
            hs[k] = 1.0 / (nodes - 1) as f64;
        }
        r.push(Case::new(format!("kappa-annihilation-alpha-{alpha}"), errs[1], cfg.tol(5e-2 * scale)));
        r.push(Case::order(format!("kappa-annihilation-alpha-{alpha}-order"), order_of(errs, hs), 0.4));
    }

    let alpha = cfg.alpha(0.5);
    let g = uniform(0.0, 1.0, n)?;
    let d = rl_derivative(&sample(|_| 2.0, &g)?, Direction::Left, alpha)?;
    let exact = d.map(|x, _| 2.0 * x.powf(-alpha) / gam(1.0 - alpha));
    let rel = d
        .nodes()
        .iter()
        .zip(d.values().iter().zip(exact.values()))
        .skip(1)
        .fold(0.0f64, |m, (_, (p, q))| m.max(((p - q) / q).abs()));
    r.push(Case::new("constant-closed-form", rel, cfg.tol(1e-3)));

    // round trip D(c kappa + I f) = f; f's error from the weakly singular
    // integral and kappa's from its own derivative both enter
    let predicted = alpha.min(1.0 - alpha);
    let bump = TestFunction::bump(0.5, 0.3);
    let fs: [(&str, Box<dyn Fn(f64) -> f64>); 3] = [
        ("one", Box::new(|_| 1.0)),
        ("sin", Box::new(|x: f64| (2.0 * PI * x).sin())),
        ("bump", Box::new(move |x| bump.eval(x))),
    ];
    for (label, f) in &fs {
        for c in [0.0, 1.0] {
            let mut errs = [0.0; 2];
            let mut hs = [0.0; 2];
            for (k, nodes) in [n / 2, n].into_iter().enumerate() {
                let g = uniform(0.0, 1.0, nodes)?;
                let fg = sample(f, &g)?;
                let big = ftfc_reconstruct(&fg, Direction::Left, alpha, c)?;
                let d = rl_derivative(&big, Direction::Left, alpha)?;
                errs[k] = sup_diff(&d, &fg, keep);
                hs[k] = 1.0 / (nodes - 1) as f64;
            }
            let name = format!("roundtrip-{label}-c{c}");
            r.push(Case::new(name.clone(), errs[1], cfg.tol(ROUNDTRIP_C * hs[1].powf(predicted))));
            let p = order_of(errs, hs);
            if c != 0.0 {
                r.push(Case::order_near(format!("{name}-order"), p, predicted, 0.2));
            } else {
                // without the kappa term the scheme can only do better
                let mut case = Case::order(format!("{name}-order"), p, predicted - 0.2);
                if p.is_some_and(|p| p > predicted + 0.2) {
                    case = case.warn(format!("order exceeds the bound rate {predicted:.2}; checked one-sided"));
                }
                r.push(case);
            }
        }
    }
    Ok(r)
}

/// u = c kappa + I(weak derivative of u) for a step, kappa itself and a
/// smooth function vanishing at the anchor.
fn ftwfc(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let alpha = cfg.alpha(0.5);
    let n = cfg.n(1024);
    let mut r = VerificationReport::new("ftwfc", alpha);
    let step = StepFunction::two_level(interval(-1.0, 1.0), 0.0, 1.0, 2.0)?;
    let mut errs = [0.0; 2];
    let mut hs = [0.0; 2];
    let mut warnings = Vec::new();
    // the jump and the anchor each spoil an O(h)-wide neighbourhood
    let away = |x: f64| x >= -0.9 && x.abs() >= 0.1;
    for (k, m) in [n / 2, n].into_iter().enumerate() {
        let g = uniform(-1.0, 1.0, m + 1)?;
        let u = sample(|x| step.eval(x), &g)?;
        let rep = ftwfc_verify(&u, Direction::Left, alpha, &away, f64::INFINITY)?;
        let c = &rep.cases[0];
        errs[k] = c.residual;
        hs[k] = 2.0 / m as f64;
        warnings = c.warnings.clone();
    }
    let mut case = Case::new("step-reconstruction", errs[1], cfg.tol(hs[1].powf(1.0 - alpha)));
    case.warnings = warnings;
    r.push(case);
    r.push(Case::order("step-reconstruction-order", order_of(errs, hs), 0.4));

    let g = uniform(0.0, 1.0, n + 1)?;
    let h = 1.0 / n as f64;
    let smooth = sample(|x| x * x, &g)?;
    let rep = ftwfc_verify(&smooth, Direction::Left, alpha, &|_| true, cfg.tol(h))?;
    let mut c = rep.cases[0].clone();
    c.name = "smooth-reconstruction".into();
    r.push(c);

    // kappa has weak derivative 0, so the theorem reduces to u = c kappa;
    // re-integrating the grid derivative instead would only replay the
    // first-cell spike
    let kap = sample_excluding(|x| x.powf(alpha - 1.0), &g, Direction::Left)?;
    let c = ftfc_constant(&kap, Direction::Left, alpha)?;
    let rec = ftfc_reconstruct(&sample(|_| 0.0, &g)?, Direction::Left, alpha, c.value)?;
    r.push(Case::new("kappa-constant-term", sup_diff(&kap, &rec, |_| true), cfg.tol(1e-10)));
    Ok(r)
}

/// D^alpha D^beta u against D^(alpha+beta) u and a closed form.
fn semigroup(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let total = cfg.alpha(0.5);
    let (a, b) = (0.5 * total, 0.5 * total);
    let n = cfg.n(1024);
    let g = uniform(0.0, 1.0, n + 1)?;
    let u = sample(|x| x * x, &g)?;
    let oracle = |x: f64| 2.0 / gam(3.0 - total) * x.powf(2.0 - total);
    let mut r = semigroup_check(&u, Direction::Left, a, b, Some(&oracle), &|_| true, cfg.tol(1e-2))?;
    r.alpha = total;
    Ok(r)
}

/// Product rule D(u psi) = sum of corrections + remainder, in both
/// directions, with the remainder shrinking as m grows.
fn product(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let alpha = cfg.alpha(0.5);
    let n = cfg.n(2048);
    let g = uniform(-1.0, 1.0, n + 1)?;
    let bump = TestFunction::bump(0.0, 0.9);
    let u = sample(|x| bump.eval(x), &g)?;
    let psi = |_k: usize, x: f64| x.exp();
    let direct = |dir| rl_derivative(&sample(|x| bump.eval(x) * x.exp(), &g)?, dir, alpha);
    let mut r = VerificationReport::new("product", alpha);
    for (dir, tag) in [(Direction::Left, "left"), (Direction::Right, "right")] {
        let d = direct(dir)?;
        let mut norms = Vec::new();
        for m in 1..=cfg.m.unwrap_or(3).max(1) {
            let e = product_rule_expand(&u, &psi, dir, alpha, m)?;
            let res = sup_diff(&e.total(), &d, |_| true);
            r.push(Case::new(format!("{tag}-reconstruction-m{m}"), res, cfg.tol(1e-4)));
            norms.push(e.remainder.sup_norm());
        }
        let growth = norms.windows(2).fold(0.0f64, |g, w| g.max(w[1] - w[0]));
        let listed: Vec<String> = norms.iter().map(|v| format!("{v:.3e}")).collect();
        let case = Case::new(format!("{tag}-remainder-nonincreasing"), growth, 0.0)
            .warn(format!("remainder sup norms {}", listed.join(", ")));
        r.push(case);
    }
    Ok(r)
}

/// Chain rule main term + remainder against the direct derivative of phi(f).
fn chain(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let alpha = cfg.alpha(0.5);
    let n = cfg.n(4096);
    let g = uniform(-1.0, 1.0, n + 1)?;
    let bump = TestFunction::bump(0.0, 0.9);
    let f = move |x: f64| bump.eval(x);
    let df = rl_derivative(&sample(f, &g)?, Direction::Left, alpha)?;
    let mut r = VerificationReport::new("chain", alpha);

    let (main, rem) = chain_rule_expand(&f, &|s| s * s, Some(0.0), &g, Direction::Left, alpha)?;
    let direct = rl_derivative(&sample(|x| f(x) * f(x), &g)?, Direction::Left, alpha)?;
    let total = main.values().iter().zip(rem.values()).map(|(a, b)| a + b).collect();
    let total = GridFunction::with_excluded(g.clone(), total, Direction::Left)?;
    r.push(Case::new("square-vs-direct", sup_diff(&total, &direct, |_| true), cfg.tol(1e-4)));

    let (main, rem) = chain_rule_expand(&f, &|s| s, Some(1.0), &g, Direction::Left, alpha)?;
    r.push(Case::new("identity-remainder", rem.sup_norm(), cfg.tol(0.0)));
    r.push(Case::new("identity-main", sup_diff(&main, &df, |_| true), cfg.tol(1e-12)));

    let (main, rem) = chain_rule_expand(&f, &|s| 3.0 * s, Some(3.0), &g, Direction::Left, alpha)?;
    r.push(Case::new("linear-remainder", rem.sup_norm(), cfg.tol(0.0)));
    r.push(Case::new("linear-main", sup_diff(&main, &df.map(|_, v| 3.0 * v), |_| true), cfg.tol(1e-12)));
    Ok(r)
}

/// The opposite-side derivative of a test function decays like
/// |x|^(-1-alpha) away from its support.
fn pollution(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let alpha = cfg.alpha(0.5);
    let phi = TestFunction::bump(0.0, 0.25);
    let b = phi.support().1;
    let xs: Vec<f64> = (0..40).map(|k| b + 1.0 * 10f64.powf(k as f64 / 39.0)).collect();
    let mut r = VerificationReport::new("pollution", alpha);
    for (dir, tag, sgn) in [(Direction::Left, "left", 1.0), (Direction::Right, "right", -1.0)] {
        let vals = xs.iter().map(|x| pollution_derivative(&phi, dir, alpha, sgn * x)).collect::<Result<Vec<f64>>>()?;
        // distances from the centre, so the fit sees the pure power law
        let dist: Vec<f64> = xs.iter().map(|x| x - phi.center).collect();
        let slope = loglog_slope(&dist, &vals);
        r.push(Case::new(format!("{tag}-slope"), (slope + 1.0 + alpha).abs(), cfg.tol(0.15)).with_order(Some(-slope)));
        let rises = vals.windows(2).filter(|w| w[1].abs() > w[0].abs()).count();
        r.push(Case::new(format!("{tag}-monotone-decay"), rises as f64, 0.0));
    }
    Ok(r)
}

/// The closed-form weak derivative of a two-level step: computed on a grid,
/// checked against the test family, and a Caputo-type impostor rejected.
fn weak_step(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let alpha = cfg.alpha(0.5);
    let n = cfg.n(1024);
    let iv = interval(-1.0, 1.0);
    let step = StepFunction::two_level(iv, 0.0, 1.0, 2.0)?;
    let closed = |x: f64| step_weak_derivative(&step, Direction::Left, alpha, x).unwrap_or(0.0);
    let keep = |x: f64| x >= -0.9 && x.abs() >= 0.1;
    let mut r = VerificationReport::new("weak-step", alpha);

    let mut errs = [0.0; 2];
    let mut hs = [0.0; 2];
    let mut label = String::new();
    for (k, m) in [n / 2, n].into_iter().enumerate() {
        let g = uniform(-1.0, 1.0, m + 1)?;
        let (d, diag) = weak_derivative_compute(&sample(|x| step.eval(x), &g)?, Direction::Left, alpha)?;
        errs[k] = sup_diff(&d, &sample(|x| if keep(x) { closed(x) } else { 0.0 }, &g)?, keep);
        hs[k] = 2.0 / m as f64;
        label = format!("{}: TV ratios {:.3}, {:.3}", diag.label(), diag.ratios[0], diag.ratios[1]);
    }
    r.push(Case::new("grid-vs-closed-form", errs[1], cfg.tol(hs[1].powf(1.0 - alpha))).warn(label));
    r.push(Case::order("grid-vs-closed-form-order", order_of(errs, hs), 0.4));

    let family = default_family(iv);
    let u = |x: f64| step.eval(x);
    let pairing = verify_weak_derivative(&u, &closed, &[-1.0, 0.0], iv, Direction::Left, alpha, &family, cfg.tol(1e-5))?;
    for mut c in pairing.cases {
        c.name = format!("pairing-{}", c.name);
        r.push(c);
    }

    // u = 1 has Caputo derivative 0 but weak derivative kappa/Gamma(1-alpha);
    // the pairing must reject v = 0 by a clear margin
    let one = |_x: f64| 1.0;
    let zero = |_x: f64| 0.0;
    let control = verify_weak_derivative(&one, &zero, &[], iv, Direction::Left, alpha, &family, f64::INFINITY)?;
    let worst = control.max_residual();
    r.push(
        Case::new("caputo-control-rejected", 1e-2 / worst, 1.0)
            .warn(format!("largest pairing residual for the Caputo impostor: {worst:.3e}")),
    );
    Ok(r)
}

/// Integration by parts between left and right derivatives of two bumps.
fn ibp(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let alpha = cfg.alpha(0.5);
    let n = cfg.n(4096);
    let u = TestFunction::bump(-0.2, 0.6);
    let v = TestFunction::bump(0.3, 0.5);
    let mut r = VerificationReport::new("ibp", alpha);
    let main = integration_by_parts_check(&u, &v, alpha, n, cfg.tol(1e-5))?;
    for mut c in main.cases {
        c.name = format!("overlapping-{}", c.name);
        r.push(c);
    }
    let classical = integration_by_parts_check(&u, &v, 1.0, n, cfg.tol(1e-8))?;
    for mut c in classical.cases {
        c.name = format!("classical-{}", c.name);
        r.push(c);
    }
    // u right of v: both sides vanish identically
    let disjoint = integration_by_parts_check(&TestFunction::bump(0.5, 0.3), &TestFunction::bump(-0.5, 0.3), alpha, n, cfg.tol(1e-12))?;
    for mut c in disjoint.cases {
        c.name = format!("disjoint-{}", c.name);
        r.push(c);
    }
    Ok(r)
}

/// Mollification commutes with the weak derivative away from the boundary.
fn mollifier(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let alpha = cfg.alpha(0.5);
    let n = cfg.n(4096);
    let step = StepFunction::two_level(interval(-1.0, 1.0), 0.0, 1.0, 2.0)?;
    let u = |x: f64| step.eval(x);
    let du = |x: f64| step_weak_derivative(&step, Direction::Left, alpha, x).unwrap_or(0.0);
    let mut r = VerificationReport::new("mollifier", alpha);
    for eps in [0.05, 0.1] {
        let spec = MollifierSpec::new(eps)?;
        let g = uniform(-1.0 - eps, 1.0, n + 1)?;
        let nodes = g.nodes().to_vec();
        let ue: Vec<f64> = nodes.par_iter().map(|&x| mollify_at(&u, &spec, &[-1.0, 0.0, 1.0], x)).collect::<Result<_>>()?;
        let (d, _) = weak_derivative_compute(&GridFunction::new(g.clone(), ue)?, Direction::Left, alpha)?;
        let keep = |x: f64| x >= -1.0 + eps && x <= 1.0 - eps;
        let res = nodes
            .par_iter()
            .zip(d.values())
            .filter(|(x, _)| keep(**x))
            .map(|(&x, &v)| mollify_at(&du, &spec, &[-1.0, 0.0], x).map(|m| (m - v).abs()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        r.push(Case::new(format!("commute-eps-{eps}"), res, cfg.tol(5e-3)));
    }
    Ok(r)
}

fn backend_bump() -> TestFunction {
    TestFunction::bump(0.0, 1.0)
}

/// Grid RL derivative of the backend bump on [-1, 1] with step 1/n.
fn rl_reference(alpha: f64, n: usize) -> Result<GridFunction> {
    let phi = backend_bump();
    let g = uniform(-1.0, 1.0, 2 * n + 1)?;
    rl_derivative(&sample(|x| phi.eval(x), &g)?, Direction::Left, alpha)
}

fn gl_cases(alpha: f64, n: usize, cfg: &SuiteConfig) -> Result<Vec<Case>> {
    let phi = backend_bump();
    let reference = rl_reference(alpha, n)?;
    let h = 1.0 / n as f64;
    let iv = interval(-1.0, 1.0);
    let pts: Vec<(f64, f64)> = reference.nodes().iter().copied().zip(reference.values().iter().copied()).step_by(4).collect();
    let errs = |step: f64| -> Result<f64> {
        let e = pts
            .par_iter()
            .map(|&(x, v)| gl_derivative(|y| phi.eval(y), iv, Direction::Left, alpha, step, x).map(|g| (g - v).abs()))
            .collect::<Result<Vec<f64>>>()?;
        Ok(e.into_iter().fold(0.0, f64::max))
    };
    let (e1, e2) = (errs(h)?, errs(0.5 * h)?);
    let ratio = e1 / e2;
    Ok(vec![
        Case::new("gl-vs-rl", e1, cfg.tol(5e-3)),
        Case::new("gl-halving-ratio", (ratio - 2.0).abs(), 0.6).with_order(Some(ratio.log2())),
    ])
}

fn fourier_cases(alpha: f64, n: usize, cfg: &SuiteConfig) -> Result<Vec<Case>> {
    let phi = backend_bump();
    let reference = rl_reference(alpha, n)?;
    let w = cfg.window.unwrap_or(10.0);
    let m = (2.0 * w * n as f64).round() as usize;
    let g = uniform(-w, w, m + 1)?;
    let (d, warnings) = fourier_derivative(&sample(|x| phi.eval(x), &g)?, alpha)?;
    let res = reference
        .nodes()
        .iter()
        .zip(reference.values())
        .fold(0.0f64, |acc, (x, v)| acc.max((d.interp(*x) - v).abs()));
    let mut c = Case::new("fourier-vs-rl", res, cfg.tol(5e-3));
    c.warnings = warnings;
    Ok(vec![c])
}

/// Grünwald–Letnikov against the grid RL derivative.
fn gl_rl(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let alpha = cfg.alpha(0.5);
    let mut r = VerificationReport::new("gl-rl", alpha);
    for c in gl_cases(alpha, cfg.n(1024), cfg)? {
        r.push(c);
    }
    Ok(r)
}

/// Fourier multiplier against the grid RL derivative.
fn fourier_rl(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let alpha = cfg.alpha(0.5);
    let mut r = VerificationReport::new("fourier-rl", alpha);
    for c in fourier_cases(alpha, cfg.n(1024), cfg)? {
        r.push(c);
    }
    Ok(r)
}

/// All backends on the same bump, plus Caputo = RL when u(a) = 0.
fn backend_agreement(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let alpha = cfg.alpha(0.5);
    let n = cfg.n(1024);
    let mut r = VerificationReport::new("backend-agreement", alpha);
    for c in gl_cases(alpha, n, cfg)?.into_iter().chain(fourier_cases(alpha, n, cfg)?) {
        r.push(c);
    }
    let phi = backend_bump();
    let g = uniform(-1.0, 1.0, 2 * n + 1)?;
    let u = sample(|x| phi.eval(x), &g)?;
    let rl = rl_derivative(&u, Direction::Left, alpha)?;
    let cap = caputo_derivative(&u, Direction::Left, alpha)?;
    r.push(Case::new("caputo-vs-rl", sup_diff(&rl, &cap, |_| true), cfg.tol(1e-14)));
    Ok(r)
}

fn delta_probes() -> Vec<TestFunction> {
    vec![
        TestFunction::bump(0.3, 0.5),
        TestFunction::bump(0.5, 0.6),
        TestFunction::bump(-0.2, 0.5),
        TestFunction::new(0.0, 0.4, 1.5).expect("valid bump"),
    ]
}

/// The derivative of a delta against an independent quadrature, cutoff
/// independence, and the support law.
fn dist_delta(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let alpha = cfg.alpha(0.5);
    let delta = Distribution::Delta(0.0);
    let narrow = dist_frac_derivative_compact(&delta, Direction::Left, alpha, Cutoff::new(0.0, 0.0, 0.3)?)?;
    let wide = dist_frac_derivative_compact(&delta, Direction::Left, alpha, Cutoff::new(0.0, 0.0, 0.8)?)?;
    let mut r = VerificationReport::new("dist-delta", alpha);
    for (k, phi) in delta_probes().iter().enumerate() {
        let (_, hi) = phi.support();
        // right derivative at 0: int_0^inf -phi'(t) t^-alpha dt / Gamma(1-alpha);
        // t = s^(1/(1-alpha)) makes the integrand smooth
        let oracle = if hi <= 0.0 {
            0.0
        } else {
            let q = 1.0 / (1.0 - alpha);
            let smax = hi.powf(1.0 - alpha);
            let tol = crate::quad::Tol::rel(1e-12).with_abs(1e-15);
            crate::quad::integrate(|s| -phi.deriv(s.powf(q)) * q, 0.0, smax, tol)?.value / gam(1.0 - alpha)
        };
        let v = dist_apply(&narrow, phi)?;
        r.push(Case::new(format!("probe-{k}-vs-oracle"), (v - oracle).abs(), cfg.tol(1e-6)));
        r.push(Case::new(format!("probe-{k}-cutoff-independence"), (v - dist_apply(&wide, phi)?).abs(), cfg.tol(1e-8)));
    }
    // a left derivative of a distribution supported at 0 lives on [0, inf)
    let outside = dist_apply(&narrow, &TestFunction::bump(-0.6, 0.5))?;
    r.push(Case::new("support-law", outside.abs(), cfg.tol(1e-12)));

    // a smooth regular distribution: cutoffs of different widths agree
    let g = TestFunction::bump(0.0, 0.4);
    let reg = Distribution::regular(move |x| g.eval(x), interval(-0.5, 0.5), vec![])?;
    let a = dist_frac_derivative_compact(&reg, Direction::Left, alpha, Cutoff::new(-0.5, 0.5, 0.3)?)?;
    let b = dist_frac_derivative_compact(&reg, Direction::Left, alpha, Cutoff::new(-0.5, 0.5, 0.8)?)?;
    let phi = TestFunction::bump(0.2, 0.5);
    r.push(Case::new("regular-cutoff-independence", (dist_apply(&a, &phi)? - dist_apply(&b, &phi)?).abs(), cfg.tol(1e-8)));

    // Fourier form for a probe even about the delta
    let even = TestFunction::bump(0.0, 0.5);
    let (fv, warnings) = dist_fourier_derivative(&delta, alpha, &even, interval(-10.0, 10.0), 1 << 15)?;
    let direct = dist_apply(&narrow, &even)?;
    let mut c = Case::new("fourier-even-probe", (fv - direct).abs(), cfg.tol(5e-3));
    c.warnings = warnings;
    r.push(c);
    Ok(r)
}

/// Partition-of-unity extension against the compact cutoff, and both
/// against the step's closed-form weak derivative.
fn dist_pou(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let alpha = cfg.alpha(0.5);
    let iv = interval(-1.0, 1.0);
    let step = StepFunction::two_level(iv, 0.0, 1.0, 2.0)?;
    let u = Distribution::step(&step)?;
    let compact = dist_frac_derivative_compact(&u, Direction::Left, alpha, Cutoff::new(-1.0, 1.0, 0.5)?)?;
    let general = dist_frac_derivative_general(&u, Direction::Left, alpha, PartitionOfUnity::standard(interval(-2.0, 2.0))?)?;
    let mut r = VerificationReport::new("dist-pou", alpha);
    let probes = [
        TestFunction::bump(-0.5, 0.3),
        TestFunction::bump(0.0, 0.4),
        TestFunction::bump(0.4, 0.5),
        TestFunction::bump(0.8, 0.15),
    ];
    for (k, phi) in probes.iter().enumerate() {
        let a = dist_apply(&compact, phi)?;
        let b = dist_apply(&general, phi)?;
        r.push(Case::new(format!("probe-{k}-pou-vs-cutoff"), (a - b).abs(), cfg.tol(1e-8)));
        let (lo, hi) = phi.support();
        let v = |x: f64| step_weak_derivative(&step, Direction::Left, alpha, x).unwrap_or(0.0);
        let cuts: Vec<f64> = [0.0].into_iter().filter(|c| *c > lo && *c < hi).collect();
        let exact = crate::quad::integrate_pts(|x| v(x) * phi.eval(x), lo, hi, &cuts, crate::quad::Tol::rel(1e-11).with_abs(1e-15))?;
        r.push(Case::new(format!("probe-{k}-closed-form"), (a - exact).abs(), cfg.tol(1e-7)));
    }
    Ok(r)
}

/// As alpha -> 1 the derived action approaches the classical derivative.
fn dist_limit(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let probe = TestFunction::bump(0.3, 0.5);
    let rep = dist_consistency_limit(&Distribution::Delta(0.0), Direction::Left, &probe)?;
    Ok(rep.to_report(cfg.tol(0.1)))
}

/// General kernels: Heaviside gives Newton–Leibniz, the RL kernel gives the
/// fundamental theorem, and a smooth kernel with f = 0 is pure anchor term.
fn general_kernel(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let alpha = cfg.alpha(0.5);
    let n = cfg.n(1024);
    let mut r = VerificationReport::new("general-kernel", alpha);

    let g = uniform(0.0, 1.0, n + 1)?;
    let heav = |x: f64, y: f64| if x >= y { 1.0 } else { 0.0 };
    let f = sample(f64::cos, &g)?;
    let big = sample(|x| 2.0 + x.sin(), &g)?;
    let rep = general_kernel_check(&big, &f, &heav, 0.0, 0.0, 2.0, cfg.tol(1e-6))?;
    let mut c = rep.cases[0].clone();
    c.name = "heaviside".into();
    r.push(c);

    let rl = move |x: f64, y: f64| if x > y { (x - y).powf(alpha - 1.0) / gam(alpha) } else { 0.0 };
    let big = ftfc_reconstruct(&f, Direction::Left, alpha, 1.0)?;
    let rep = general_kernel_check(&big, &f, &rl, alpha - 1.0, 0.0, gam(alpha), cfg.tol(1e-6))?;
    let mut c = rep.cases[0].clone();
    c.name = "rl-kernel".into();
    r.push(c);

    let smooth = |x: f64, y: f64| (x * y).cos() + x - y;
    let zero = sample(|_| 0.0, &g)?;
    let big = sample(|x| 1.5 * smooth(x, 0.0), &g)?;
    let rep = general_kernel_check(&big, &zero, &smooth, 0.0, 0.0, 1.5, cfg.tol(1e-14))?;
    let mut c = rep.cases[0].clone();
    c.name = "anchor-only".into();
    r.push(c);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(matches!(run_suite("nope", &SuiteConfig::default()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn names_are_sorted_and_unique() {
        let mut s = SUITES.to_vec();
        s.sort();
        s.dedup();
        assert_eq!(s, SUITES.to_vec());
    }
}
