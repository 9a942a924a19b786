//! Distributions as symbolic action trees: regular functions, point masses
//! and weak fractional derivatives of them.

use crate::derivative::{check_alpha, fourier_derivative};
use crate::error::{Error, Result};
use crate::grid::{make_grid, sample, GridFunction, GridKind, Interval};
use crate::quad::{integrate_pts, Tol};
use crate::report::{Case, VerificationReport};
use crate::special::Direction;
use crate::weak::{test_deriv, Smooth, StepFunction, TestFunction};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

/// A function handed to a distribution: values on [lo, hi] (zero outside),
/// with the points where it is only piecewise smooth.
pub struct Probe<'a> {
    pub f: &'a (dyn Fn(f64) -> f64 + Sync),
    pub lo: f64,
    pub hi: f64,
    pub kinks: Vec<f64>,
}

/// Smooth step: 0 for t <= 0, 1 for t >= 1, C-infinity in between, and
/// s(t) + s(1-t) = 1.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let p = (-1.0 / t).exp();
        let q = (-1.0 / (1.0 - t)).exp();
        p / (p + q)
    }
}

/// psi = 1 on [lo, hi], 0 outside [lo - width, hi + width].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

impl Cutoff {
    pub fn new(lo: f64, hi: f64, width: f64) -> Result<Self> {
        if !(lo <= hi && width > 0.0 && lo.is_finite() && hi.is_finite() && width.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad cutoff [{lo}, {hi}] width {width}")));
        }
        Ok(Cutoff { lo, hi, width })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.lo {
            smooth_step((x - (self.lo - self.width)) / self.width)
        } else if x > self.hi {
            smooth_step(((self.hi + self.width) - x) / self.width)
        } else {
            1.0
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo - self.width, self.hi + self.width)
    }
}

/// Members psi_j supported on (o + (j-1) h, o + (j+1) h), j in jmin..=jmax.
/// Neighbouring members sum to one exactly in exact arithmetic, so the sum is
/// 1 on [o + jmin h, o + jmax h].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionOfUnity {
    pub origin: f64,
    pub spacing: f64,
    pub jmin: i64,
    pub jmax: i64,
}

impl PartitionOfUnity {
    /// Members of length 2h overlapping by h whose sum is 1 on `interval`.
    pub fn covering(interval: Interval, spacing: f64) -> Result<Self> {
        if !interval.is_finite() {
            return Err(Error::InfiniteInterval);
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidArgument(format!("spacing {spacing} must be positive")));
        }
        let jmin = (interval.a / spacing).floor() as i64;
        let jmax = (interval.b / spacing).ceil() as i64;
        Ok(PartitionOfUnity { origin: 0.0, spacing, jmin, jmax })
    }

    /// The default: length 2, overlap 1.
    pub fn standard(interval: Interval) -> Result<Self> {
        PartitionOfUnity::covering(interval, 1.0)
    }

    pub fn member_support(&self, j: i64) -> (f64, f64) {
        (self.origin + (j - 1) as f64 * self.spacing, self.origin + (j + 1) as f64 * self.spacing)
    }

    pub fn covered(&self) -> (f64, f64) {
        (self.origin + self.jmin as f64 * self.spacing, self.origin + self.jmax as f64 * self.spacing)
    }

    pub fn eval(&self, j: i64, x: f64) -> f64 {
        if j < self.jmin || j > self.jmax {
            return 0.0;
        }
        let t = (x - self.origin) / self.spacing - (j - 1) as f64;
        if t <= 1.0 {
            smooth_step(t)
        } else {
            smooth_step(2.0 - t)
        }
    }

    pub fn sum(&self, x: f64) -> f64 {
        (self.jmin..=self.jmax).map(|j| self.eval(j, x)).sum()
    }
}

/// How the opposite-direction derivative of a test function is brought back
/// to a compactly supported function before the parent acts on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extension {
    Cutoff(Cutoff),
    Partition(PartitionOfUnity),
}

#[derive(Clone)]
pub struct Regular {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub interval: Interval,
    pub breaks: Vec<f64>,
}

impl Regular {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, interval: Interval, breaks: Vec<f64>) -> Result<Self> {
        if !interval.is_finite() {
            return Err(Error::InfiniteInterval);
        }
        Ok(Regular { f: Arc::new(f), interval, breaks })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.interval.contains(x) {
            (self.f)(x)
        } else {
            0.0
        }
    }
}

impl fmt::Debug for Regular {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Regular([{}, {}], breaks {:?})", self.interval.a, self.interval.b, self.breaks)
    }
}

#[derive(Debug, Clone)]
pub struct Derived {
    pub parent: Distribution,
    pub dir: Direction,
    pub alpha: f64,
    pub extension: Extension,
}

#[derive(Debug, Clone)]
pub enum Distribution {
    Regular(Regular),
    Delta(f64),
    Derived(Box<Derived>),
}

impl Distribution {
    pub fn regular(f: impl Fn(f64) -> f64 + Send + Sync + 'static, interval: Interval, breaks: Vec<f64>) -> Result<Self> {
        Ok(Distribution::Regular(Regular::new(f, interval, breaks)?))
    }

    pub fn from_grid(u: GridFunction) -> Result<Self> {
        let iv = u.grid().interval();
        Distribution::regular(move |x| u.interp(x), iv, Vec::new())
    }

    pub fn step(s: &StepFunction) -> Result<Self> {
        let s2 = s.clone();
        Distribution::regular(move |x| s2.eval(x), s.interval, s.breakpoints.clone())
    }

    /// Convex hull of the support. Derived distributions are unbounded on
    /// their polluted side.
    pub fn hull(&self) -> (f64, f64) {
        match self {
            Distribution::Regular(r) => (r.interval.a, r.interval.b),
            Distribution::Delta(x0) => (*x0, *x0),
            Distribution::Derived(d) => {
                let (c, e) = d.parent.hull();
                match d.dir {
                    Direction::Left => (c, f64::INFINITY),
                    Direction::Right => (f64::NEG_INFINITY, e),
                }
            }
        }
    }

    fn apply_probe(&self, p: &Probe<'_>) -> Result<f64> {
        match self {
            Distribution::Delta(x0) => Ok(if *x0 >= p.lo && *x0 <= p.hi { (p.f)(*x0) } else { 0.0 }),
            Distribution::Regular(r) => {
                let lo = r.interval.a.max(p.lo);
                let hi = r.interval.b.min(p.hi);
                if hi <= lo {
                    return Ok(0.0);
                }
                let mut cuts: Vec<f64> = r.breaks.iter().chain(&p.kinks).copied().filter(|x| *x > lo && *x < hi).collect();
                cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                cuts.dedup();
                integrate_pts(|x| r.eval(x) * (p.f)(x), lo, hi, &cuts, Tol::rel(1e-9).with_abs(1e-13))
            }
            Distribution::Derived(_) => {
                Err(Error::Unsupported("a derived distribution can act only on test functions".into()))
            }
        }
    }
}

/// Region where the opposite-direction derivative of phi can be nonzero.
fn polluted_range(phi: &TestFunction, opp: Direction) -> (f64, f64) {
    let (lo, hi) = phi.support();
    match opp {
        Direction::Left => (lo, f64::INFINITY),
        Direction::Right => (f64::NEG_INFINITY, hi),
    }
}

fn derived_term(parent: &Distribution, phi: &TestFunction, opp: Direction, alpha: f64, weight: &(dyn Fn(f64) -> f64 + Sync), wsupp: (f64, f64), extra: &[f64]) -> Result<f64> {
    let (pl, ph) = polluted_range(phi, opp);
    let (lo, hi) = (pl.max(wsupp.0), ph.min(wsupp.1));
    if hi <= lo {
        return Ok(0.0);
    }
    let g = |x: f64| weight(x) * test_deriv(phi, opp, alpha, x);
    let (sl, sh) = phi.support();
    let mut kinks = vec![sl, sh];
    kinks.extend_from_slice(extra);
    parent.apply_probe(&Probe { f: &g, lo, hi, kinks })
}

/// Evaluates the stored action of u on phi.
pub fn dist_apply(u: &Distribution, phi: &TestFunction) -> Result<f64> {
    match u {
        Distribution::Delta(x0) => Ok(phi.eval(*x0)),
        Distribution::Regular(_) => {
            let (lo, hi) = phi.support();
            u.apply_probe(&Probe { f: &|x| phi.eval(x), lo, hi, kinks: Vec::new() })
        }
        Distribution::Derived(d) => {
            let opp = d.dir.opposite();
            match &d.extension {
                Extension::Cutoff(c) => {
                    let (a, b) = c.support();
                    let kinks = [c.lo, c.hi];
                    derived_term(&d.parent, phi, opp, d.alpha, &|x| c.eval(x), (a, b), &kinks)
                }
                Extension::Partition(p) => partition_sum(&d.parent, phi, opp, d.alpha, p),
            }
        }
    }
}

/// sum_j u(psi_j D phi), members taken outward from phi along the polluted
/// side. Stops once the partial sums settle (relative change below 1e-12)
/// and the remaining members cannot meet the parent's support.
fn partition_sum(parent: &Distribution, phi: &TestFunction, opp: Direction, alpha: f64, p: &PartitionOfUnity) -> Result<f64> {
    let (hl, hh) = parent.hull();
    let (cl, ch) = p.covered();
    if hl < cl || hh > ch {
        return Err(Error::InvalidArgument(format!("partition covers [{cl}, {ch}] but the support hull is [{hl}, {hh}]")));
    }
    let (sl, sh) = phi.support();
    let js: Vec<i64> = match opp {
        // right derivative of phi is polluted to the left: walk down from phi
        Direction::Right => {
            let start = (((sh - p.origin) / p.spacing).ceil() as i64 + 1).min(p.jmax);
            (p.jmin..=start).rev().collect()
        }
        Direction::Left => {
            let start = (((sl - p.origin) / p.spacing).floor() as i64 - 1).max(p.jmin);
            (start..=p.jmax).collect()
        }
    };
    let mut sum = 0.0;
    let mut partials = Vec::new();
    for j in js {
        let w = |x: f64| p.eval(j, x);
        let (a, b) = p.member_support(j);
        let mid = 0.5 * (a + b);
        let term = derived_term(parent, phi, opp, alpha, &w, (a, b), &[mid])?;
        let prev = sum;
        sum += term;
        partials.push(sum);
        let beyond = match opp {
            Direction::Right => b < hl,
            Direction::Left => a > hh,
        };
        if beyond && (sum - prev).abs() <= 1e-12 * sum.abs().max(1e-300) {
            return Ok(sum);
        }
        if partials.len() > 100_000 {
            return Err(Error::NonConvergentSum(partials));
        }
    }
    Ok(sum)
}

/// Weak derivative of a compactly supported distribution through a cutoff
/// that equals one on its support.
pub fn dist_frac_derivative_compact(u: &Distribution, dir: Direction, alpha: f64, psi: Cutoff) -> Result<Distribution> {
    check_alpha(alpha, "dist_frac_derivative_compact")?;
    if matches!(u, Distribution::Derived(_)) {
        return Err(Error::Unsupported("iterated distributional derivatives".into()));
    }
    let (c, d) = u.hull();
    for x in [c, d] {
        let v = psi.eval(x);
        if v != 1.0 {
            return Err(Error::CutoffMismatch { x, value: v });
        }
    }
    Ok(Distribution::Derived(Box::new(Derived { parent: u.clone(), dir, alpha, extension: Extension::Cutoff(psi) })))
}

/// Weak derivative through a partition of unity.
pub fn dist_frac_derivative_general(u: &Distribution, dir: Direction, alpha: f64, pou: PartitionOfUnity) -> Result<Distribution> {
    check_alpha(alpha, "dist_frac_derivative_general")?;
    if matches!(u, Distribution::Derived(_)) {
        return Err(Error::Unsupported("iterated distributional derivatives".into()));
    }
    Ok(Distribution::Derived(Box::new(Derived { parent: u.clone(), dir, alpha, extension: Extension::Partition(pou) })))
}

/// (-1)^[alpha] u(F D^alpha phi), with the Fourier derivative taken on the
/// uniform window with n nodes. Returns the value and backend warnings.
pub fn dist_fourier_derivative(u: &Distribution, alpha: f64, phi: &TestFunction, window: Interval, n: usize) -> Result<(f64, Vec<String>)> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidOrder(alpha));
    }
    let (lo, hi) = phi.support();
    if !(lo > window.a && hi < window.b) {
        let edge = phi.eval(window.a).abs().max(phi.eval(window.b).abs());
        return Err(Error::InsufficientDecay(edge));
    }
    let g = make_grid(window, n, GridKind::Uniform)?;
    let (d, warnings) = fourier_derivative(&sample(|x| phi.eval(x), &g)?, alpha)?;
    let sign = if (alpha.floor() as i64) % 2 == 0 { 1.0 } else { -1.0 };
    let v = match u {
        Distribution::Delta(x0) => d.interp(*x0),
        Distribution::Regular(r) => {
            // trapezoid on the nodes of the window; exact over a full period
            let x = d.nodes();
            let h = x[1] - x[0];
            x[..x.len() - 1].iter().zip(d.values()).map(|(x, v)| h * r.eval(*x) * v).sum()
        }
        Distribution::Derived(_) => return Err(Error::Unsupported("Fourier derivative of a derived distribution".into())),
    };
    Ok((sign * v, warnings))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
    pub classical: f64,
    pub gaps: Vec<f64>,
    pub monotone: bool,
}

impl LimitReport {
    /// Cases: each gap (informational) and the final-over-first gap ratio,
    /// which must be below `ratio_tol`.
    pub fn to_report(&self, ratio_tol: f64) -> VerificationReport {
        let mut r = VerificationReport::new("dist-limit", 1.0);
        for (a, g) in self.alphas.iter().zip(&self.gaps) {
            r.push(Case::new(format!("gap-alpha-{a}"), *g, f64::INFINITY));
        }
        let ratio = if self.gaps[0] == 0.0 { 0.0 } else { self.gaps[self.gaps.len() - 1] / self.gaps[0] };
        let mut c = Case::new("gap-ratio", ratio, ratio_tol);
        if !self.monotone {
            c = c.warn("gaps not monotone in alpha");
        }
        r.push(c);
        r
    }
}

/// Derived actions at alpha in {0.9, 0.99, 0.999} against the classical
/// distributional derivative -u(phi').
pub fn dist_consistency_limit(u: &Distribution, dir: Direction, probe: &TestFunction) -> Result<LimitReport> {
    let alphas = vec![0.9, 0.99, 0.999];
    let (c, d) = u.hull();
    let psi = Cutoff::new(c, d, 0.5)?;
    let classical = match u {
        Distribution::Delta(x0) => -probe.deriv(*x0),
        _ => -u.apply_probe(&Probe { f: &|x| probe.deriv(x), lo: probe.support().0, hi: probe.support().1, kinks: Vec::new() })?,
    };
    let mut values = Vec::new();
    for &a in &alphas {
        let du = dist_frac_derivative_compact(u, dir, a, psi)?;
        values.push(dist_apply(&du, probe)?);
    }
    let gaps: Vec<f64> = values.iter().map(|v| (v - classical).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    Ok(LimitReport { alphas, values, classical, gaps, monotone })
}

/// JSON form used by the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistDescriptor {
    Delta { x0: f64 },
    Regular { csv: String },
    Derived { dir: Direction, alpha: f64, of: Box<DistDescriptor> },
}

impl DistDescriptor {
    /// Builds the distribution; CSV paths are resolved against `base`.
    /// Derived descriptors use a cutoff of width 0.5 around the parent.
    pub fn build(&self, base: &Path) -> Result<Distribution> {
        match self {
            DistDescriptor::Delta { x0 } => Ok(Distribution::Delta(*x0)),
            DistDescriptor::Regular { csv } => Distribution::from_grid(GridFunction::load(&base.join(csv))?),
            DistDescriptor::Derived { dir, alpha, of } => {
                let parent = of.build(base)?;
                let (c, d) = parent.hull();
                dist_frac_derivative_compact(&parent, *dir, *alpha, Cutoff::new(c, d, 0.5)?)
            }
        }
    }
}
