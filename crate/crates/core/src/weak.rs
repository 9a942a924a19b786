//! Test functions, mollifiers, pollution tails, step functions and the
//! integration-by-parts check that defines weak fractional derivatives.

use crate::derivative::{check_alpha, rl_derivative};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, Interval};
use crate::integral::rl_integral;
use crate::quad::{integrate, integrate_lenient, upper_weight_lenient, Tol};
use crate::report::{Case, VerificationReport};
use crate::special::{gam, Direction};
use rayon::prelude::*;

/// Inner quadrature tolerance for pointwise derivatives of test functions.
const INNER: Tol = Tol { abs: 1e-16, rel: 1e-11, max_intervals: 4000 };

/// A smooth function with compact support and a known first derivative.
pub trait Smooth: Sync {
    fn eval(&self, x: f64) -> f64;
    fn deriv(&self, x: f64) -> f64;
    fn support(&self) -> (f64, f64);
}

/// amplitude * exp(1/((x-c)^2/r^2 - 1)) on |x - c| < r, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub center: f64,
    pub radius: f64,
    pub amplitude: f64,
}

impl TestFunction {
    pub fn new(center: f64, radius: f64, amplitude: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && center.is_finite() && amplitude.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad test function c={center} r={radius} A={amplitude}")));
        }
        Ok(TestFunction { center, radius, amplitude })
    }

    pub fn bump(center: f64, radius: f64) -> Self {
        TestFunction { center, radius, amplitude: 1.0 }
    }

    /// k-th derivative by the recurrence on exp(1/(s^2-1)) times a rational in s.
    pub fn nth_deriv(&self, k: usize, x: f64) -> f64 {
        let s = (x - self.center) / self.radius;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        // d^k/ds^k e^{g(s)} = P_k(s, q) e^{g}, with q = 1/(s^2-1); keep P as polynomial in (s, q)
        // represented densely: p[i][j] * s^i q^j.
        let deg = 3 * k + 2;
        let mut p = vec![vec![0.0; deg + 1]; deg + 1];
        p[0][0] = 1.0;
        for _ in 0..k {
            let mut np = vec![vec![0.0; deg + 1]; deg + 1];
            for i in 0..=deg {
                for j in 0..=deg {
                    let c = p[i][j];
                    if c == 0.0 {
                        continue;
                    }
                    // d/ds s^i = i s^(i-1)
                    if i > 0 {
                        np[i - 1][j] += c * i as f64;
                    }
                    // d/ds q^j = j q^(j-1) * (-2 s q^2) = -2 j s q^(j+1)
                    if j > 0 && j + 1 <= deg && i + 1 <= deg {
                        np[i + 1][j + 1] += -2.0 * j as f64 * c;
                    }
                    // times g'(s) = -2 s q^2
                    if i + 1 <= deg && j + 2 <= deg {
                        np[i + 1][j + 2] += -2.0 * c;
                    }
                }
            }
            p = np;
        }
        let q = 1.0 / (s * s - 1.0);
        let mut poly = 0.0;
        for (i, row) in p.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if *c != 0.0 {
                    poly += c * s.powi(i as i32) * q.powi(j as i32);
                }
            }
        }
        self.amplitude * q.exp() * poly / self.radius.powi(k as i32)
    }
}

impl Smooth for TestFunction {
    fn eval(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.radius;
        if s.abs() >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 / (s * s - 1.0)).exp()
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.radius;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 / (s * s - 1.0);
        self.amplitude * q.exp() * (-2.0 * s * q * q) / self.radius
    }

    fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// The reflection y -> -y of a smooth function.
struct Mirror<'a>(&'a dyn Smooth);

impl Smooth for Mirror<'_> {
    fn eval(&self, x: f64) -> f64 {
        self.0.eval(-x)
    }
    fn deriv(&self, x: f64) -> f64 {
        -self.0.deriv(-x)
    }
    fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.0.support();
        (-hi, -lo)
    }
}

/// Left RL derivative on the line of a compactly supported smooth function.
fn left_test_deriv(phi: &dyn Smooth, alpha: f64, x: f64) -> f64 {
    let (lo, hi) = phi.support();
    if x <= lo {
        return 0.0;
    }
    if x > hi {
        return left_pollution_derivative(phi, alpha, x);
    }
    // phi(lo) = 0, so the RL and Caputo forms agree
    let m = 0.5 * (lo + x);
    let near = upper_weight_lenient(|y| phi.deriv(y), m, x, 1.0 - alpha, INNER);
    let far = integrate_lenient(|y| phi.deriv(y) * (x - y).powf(-alpha), lo, m, INNER).value;
    (near + far) / gam(1.0 - alpha)
}

fn left_pollution_derivative(phi: &dyn Smooth, alpha: f64, x: f64) -> f64 {
    let (lo, hi) = phi.support();
    let v = integrate_lenient(|y| phi.eval(y) * (x - y).powf(-alpha - 1.0), lo, hi, INNER).value;
    -alpha / gam(1.0 - alpha) * v
}

/// Classical RL derivative of a test function at any real x: exactly 0 on
/// the unpolluted side, the finite-interval derivative on the support, and
/// the pollution tail L' (Left) or R' (Right) beyond it.
pub fn test_deriv(phi: &dyn Smooth, dir: Direction, alpha: f64, x: f64) -> f64 {
    match dir {
        Direction::Left => left_test_deriv(phi, alpha, x),
        Direction::Right => left_test_deriv(&Mirror(phi), alpha, -x),
    }
}

/// L'(x) = -alpha/Gamma(1-alpha) int phi(y) (x-y)^(-alpha-1) dy beyond the
/// support on the polluted side (R' mirrored for Right).
pub fn pollution_derivative(phi: &dyn Smooth, dir: Direction, alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha, "pollution_derivative")?;
    let (lo, hi) = phi.support();
    match dir {
        Direction::Left if x > hi => Ok(left_pollution_derivative(phi, alpha, x)),
        Direction::Right if x < lo => Ok(left_pollution_derivative(&Mirror(phi), alpha, -x)),
        _ => Err(Error::Domain { what: "pollution_derivative", x }),
    }
}

/// L(x) = 1/Gamma(sigma) int phi(y) (x-y)^(sigma-1) dy beyond the support.
pub fn pollution_tail(phi: &dyn Smooth, dir: Direction, sigma: f64, x: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::OrderOutOfRange { what: "pollution_tail", value: sigma });
    }
    let (lo, hi) = phi.support();
    let tol = Tol::rel(1e-10).with_abs(1e-300);
    let v = match dir {
        Direction::Left if x > hi => integrate(|y| phi.eval(y) * (x - y).powf(sigma - 1.0), lo, hi, tol)?.value,
        Direction::Right if x < lo => integrate(|y| phi.eval(y) * (y - x).powf(sigma - 1.0), lo, hi, tol)?.value,
        _ => return Err(Error::Domain { what: "pollution_tail", x }),
    };
    Ok(v / gam(sigma))
}

/// int_{-1}^{1} exp(1/(t^2-1)) dt
fn bump_mass() -> f64 {
    integrate_lenient(|t: f64| if t.abs() < 1.0 { (1.0 / (t * t - 1.0)).exp() } else { 0.0 }, -1.0, 1.0, Tol::rel(1e-14))
        .value
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierSpec {
    pub epsilon: f64,
    pub normalization: f64,
}

impl MollifierSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("mollifier width {epsilon} must be positive")));
        }
        Ok(MollifierSpec { epsilon, normalization: epsilon * bump_mass() })
    }

    /// eta_eps(x), unit mass on [-eps, eps].
    pub fn eta(&self, x: f64) -> f64 {
        let s = x / self.epsilon;
        if s.abs() >= 1.0 {
            0.0
        } else {
            (1.0 / (s * s - 1.0)).exp() / self.normalization
        }
    }
}

/// (eta_eps * u)(x) by quadrature over [x-eps, x+eps], split at the points
/// where u jumps or is singular. u is taken as already zero-extended.
pub fn mollify_at(u: &dyn Fn(f64) -> f64, spec: &MollifierSpec, breaks: &[f64], x: f64) -> Result<f64> {
    let e = spec.epsilon;
    let tol = Tol::rel(1e-9).with_abs(1e-14);
    crate::quad::integrate_pts(|y| spec.eta(x - y) * u(y), x - e, x + e, breaks, tol)
}

/// Mollified function as a closure.
pub fn mollify<'a>(
    u: &'a (dyn Fn(f64) -> f64 + Sync),
    spec: MollifierSpec,
    breaks: &'a [f64],
) -> impl Fn(f64) -> Result<f64> + Sync + 'a {
    move |x| mollify_at(u, &spec, breaks, x)
}

/// Mollifier applied to grid data through its piecewise-linear interpolant.
pub fn mollify_grid(u: &GridFunction, spec: &MollifierSpec, x: f64) -> Result<f64> {
    let e = spec.epsilon;
    let breaks: Vec<f64> = u.nodes().iter().copied().filter(|n| (n - x).abs() < e).collect();
    mollify_at(&|y| u.interp(y), spec, &breaks, x)
}

/// Piecewise constant, left-continuous, zero outside its interval.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub interval: Interval,
    pub breakpoints: Vec<f64>,
    pub levels: Vec<f64>,
}

impl StepFunction {
    pub fn new(interval: Interval, breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if !interval.is_finite() {
            return Err(Error::InfiniteInterval);
        }
        if levels.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidArgument("need one level per piece".into()));
        }
        let mut prev = interval.a;
        for &t in &breakpoints {
            if !(t > prev && t < interval.b) {
                return Err(Error::InvalidArgument(format!("breakpoint {t} not increasing and interior")));
            }
            prev = t;
        }
        Ok(StepFunction { interval, breakpoints, levels })
    }

    /// lambda on (a, t], mu on (t, b).
    pub fn two_level(interval: Interval, t: f64, lambda: f64, mu: f64) -> Result<Self> {
        StepFunction::new(interval, vec![t], vec![lambda, mu])
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.interval.a || x > self.interval.b {
            return 0.0;
        }
        let k = self.breakpoints.iter().filter(|t| **t < x).count();
        self.levels[k]
    }
}

/// Closed-form weak derivative of a step function: the constant formula for
/// the first level plus one shifted kernel per jump.
pub fn step_weak_derivative(s: &StepFunction, dir: Direction, alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha, "step_weak_derivative")?;
    let iv = s.interval;
    if s.breakpoints.contains(&x) {
        return Err(Error::Domain { what: "step_weak_derivative (breakpoint)", x });
    }
    let g = gam(1.0 - alpha);
    match dir {
        Direction::Left => {
            if !(x > iv.a && x <= iv.b) {
                return Err(Error::Domain { what: "step_weak_derivative", x });
            }
            let mut v = s.levels[0] * (x - iv.a).powf(-alpha);
            for (k, &t) in s.breakpoints.iter().enumerate() {
                if t < x {
                    v += (s.levels[k + 1] - s.levels[k]) * (x - t).powf(-alpha);
                }
            }
            Ok(v / g)
        }
        Direction::Right => {
            if !(x >= iv.a && x < iv.b) {
                return Err(Error::Domain { what: "step_weak_derivative", x });
            }
            let last = s.levels.len() - 1;
            let mut v = s.levels[last] * (iv.b - x).powf(-alpha);
            for (k, &t) in s.breakpoints.iter().enumerate() {
                if t > x {
                    v += (s.levels[k] - s.levels[k + 1]) * (t - x).powf(-alpha);
                }
            }
            Ok(v / g)
        }
    }
}

/// 16 bumps with centers at the midpoints of 16 equal cells of the inner 80%
/// and radii alternating 5% and 10% of the interval length.
pub fn default_family(interval: Interval) -> Vec<TestFunction> {
    let len = interval.len();
    let start = interval.a + 0.1 * len;
    let step = 0.8 * len / 16.0;
    (0..16)
        .map(|k| {
            let r = if k % 2 == 0 { 0.05 * len } else { 0.1 * len };
            TestFunction::bump(start + (k as f64 + 0.5) * step, r)
        })
        .collect()
}

/// Weak-derivative check for one test function:
/// | int v phi - (-1)^[alpha] int u * (opposite-direction D^alpha phi) | over the interval.
pub fn weak_pairing_residual(
    u: &(dyn Fn(f64) -> f64 + Sync),
    v: &(dyn Fn(f64) -> f64 + Sync),
    singular: &[f64],
    interval: Interval,
    dir: Direction,
    alpha: f64,
    phi: &TestFunction,
) -> Result<f64> {
    let (lo, hi) = phi.support();
    let tol = Tol::rel(1e-10).with_abs(1e-14);
    let lhs = crate::quad::integrate_pts(|x| v(x) * phi.eval(x), lo, hi, singular, tol)?;
    let opp = dir.opposite();
    // the opposite derivative is polluted on the side the integral runs toward
    let (from, to) = match opp {
        Direction::Right => (interval.a, hi.min(interval.b)),
        Direction::Left => (lo.max(interval.a), interval.b),
    };
    let mut cuts = singular.to_vec();
    cuts.push(lo);
    cuts.push(hi);
    let rhs = crate::quad::integrate_pts(|x| u(x) * test_deriv(phi, opp, alpha, x), from, to, &cuts, tol)?;
    Ok((lhs - rhs).abs())
}

/// Checks that v is the weak derivative of u on the interval against a test
/// family. Each test function is one case; the report passes iff all do.
#[allow(clippy::too_many_arguments)]
pub fn verify_weak_derivative(
    u: &(dyn Fn(f64) -> f64 + Sync),
    v: &(dyn Fn(f64) -> f64 + Sync),
    singular: &[f64],
    interval: Interval,
    dir: Direction,
    alpha: f64,
    family: &[TestFunction],
    tol: f64,
) -> Result<VerificationReport> {
    check_alpha(alpha, "verify_weak_derivative")?;
    if !interval.is_finite() {
        return Err(Error::InfiniteInterval);
    }
    for phi in family {
        let (lo, hi) = phi.support();
        if !(lo > interval.a && hi < interval.b) {
            return Err(Error::InvalidArgument(format!("test function support [{lo}, {hi}] not interior")));
        }
    }
    let residuals: Vec<Result<f64>> = family
        .par_iter()
        .map(|phi| weak_pairing_residual(u, v, singular, interval, dir, alpha, phi))
        .collect();
    let mut report = VerificationReport::new("weak-derivative", alpha);
    for (k, r) in residuals.into_iter().enumerate() {
        report.push(Case::new(format!("bump-{k:02}"), r?, tol));
    }
    Ok(report)
}

/// Total-variation growth of the discrete derivative of I^{1-alpha} u over
/// two coarsenings. A heuristic stand-in for absolute continuity.
#[derive(Debug, Clone, PartialEq)]
pub struct AcDiagnostic {
    /// total variation on the grid, the grid coarsened by 2, and by 4
    pub total_variation: [f64; 3],
    /// fine/half and half/quarter ratios
    pub ratios: [f64; 2],
    pub suspect_non_ac: bool,
}

impl AcDiagnostic {
    pub fn label(&self) -> &'static str {
        if self.suspect_non_ac {
            "suspect-non-AC (heuristic)"
        } else {
            "clean (heuristic)"
        }
    }
}

fn coarsen(u: &GridFunction) -> Result<GridFunction> {
    let n = u.len();
    let mut idx: Vec<usize> = (0..n).step_by(2).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    let nodes: Vec<f64> = idx.iter().map(|&i| u.nodes()[i]).collect();
    let vals: Vec<f64> = idx.iter().map(|&i| u.values()[i]).collect();
    let g = Grid::from_nodes(nodes)?;
    Ok(match u.excluded() {
        Some(d) => GridFunction::with_excluded(g, vals, d)?,
        None => GridFunction::new(g, vals)?,
    })
}

fn derivative_tv(w: &GridFunction) -> f64 {
    let x = w.nodes();
    let v = w.values();
    let slopes: Vec<f64> = (0..x.len() - 1).map(|j| (v[j + 1] - v[j]) / (x[j + 1] - x[j])).collect();
    slopes.windows(2).map(|s| (s[1] - s[0]).abs()).sum()
}

/// Weak derivative on a grid (same engine as `rl_derivative`) with the
/// absolute-continuity diagnostic attached.
pub fn weak_derivative_compute(u: &GridFunction, dir: Direction, alpha: f64) -> Result<(GridFunction, AcDiagnostic)> {
    let d = rl_derivative(u, dir, alpha)?;
    let mut tv = [0.0; 3];
    let mut level = u.clone();
    for (k, slot) in tv.iter_mut().enumerate() {
        if k > 0 {
            if level.len() < 7 {
                break;
            }
            level = coarsen(&level)?;
        }
        *slot = derivative_tv(&rl_integral(&level, dir, 1.0 - alpha)?);
    }
    let ratios = [tv[0] / tv[1], tv[1] / tv[2]];
    let suspect = ratios.iter().all(|r| *r > 2.0);
    Ok((d, AcDiagnostic { total_variation: tv, ratios, suspect_non_ac: suspect }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bump_derivatives_match_differences() {
        let phi = TestFunction::new(0.2, 0.7, 1.5).unwrap();
        for &x in &[-0.3, 0.0, 0.25, 0.6] {
            let h = 1e-5;
            let fd = (phi.eval(x + h) - phi.eval(x - h)) / (2.0 * h);
            assert_relative_eq!(phi.deriv(x), fd, max_relative = 1e-7);
            assert_relative_eq!(phi.nth_deriv(1, x), phi.deriv(x), max_relative = 1e-12);
            let fd2 = (phi.nth_deriv(2, x + h) - phi.nth_deriv(2, x - h)) / (2.0 * h);
            assert_relative_eq!(phi.nth_deriv(3, x), fd2, max_relative = 1e-6);
        }
        assert_eq!(phi.eval(1.0), 0.0);
    }

    #[test]
    fn unpolluted_side_is_exactly_zero() {
        let phi = TestFunction::bump(0.0, 1.0);
        assert_eq!(test_deriv(&phi, Direction::Left, 0.5, -1.0), 0.0);
        assert_eq!(test_deriv(&phi, Direction::Left, 0.5, -7.0), 0.0);
        assert_eq!(test_deriv(&phi, Direction::Right, 0.5, 1.0), 0.0);
        assert_eq!(test_deriv(&phi, Direction::Right, 0.5, 3.0), 0.0);
    }

    #[test]
    fn pollution_matches_caputo_form() {
        // beyond the support, L' equals the Caputo-form integral of phi'
        let phi = TestFunction::bump(0.0, 1.0);
        for &x in &[1.5, 3.0] {
            let caputo = integrate(|y| phi.deriv(y) * (x - y).powf(-0.5), -1.0, 1.0, Tol::rel(1e-12)).unwrap().value
                / gam(0.5);
            assert_relative_eq!(test_deriv(&phi, Direction::Left, 0.5, x), caputo, max_relative = 1e-9);
            assert_relative_eq!(test_deriv(&phi, Direction::Right, 0.5, -x), caputo, max_relative = 1e-9);
        }
        assert!(pollution_derivative(&phi, Direction::Left, 0.5, 0.5).is_err());
        assert!(pollution_tail(&phi, Direction::Left, 0.5, 0.5).is_err());
    }

    #[test]
    fn mollifier_basics() {
        let m = MollifierSpec::new(0.1).unwrap();
        assert_relative_eq!(bump_mass(), 0.44399381616807943, max_relative = 1e-12);
        let mass = integrate(|x| m.eta(x), -0.1, 0.1, Tol::rel(1e-13)).unwrap().value;
        assert!((mass - 1.0).abs() < 1e-10);
        let one = |_: f64| 1.0;
        assert_relative_eq!(mollify_at(&one, &m, &[], 0.3).unwrap(), 1.0, max_relative = 1e-9);
        let step = |x: f64| if x > 0.0 { 1.0 } else { 0.0 };
        assert!(mollify_at(&step, &m, &[0.0], -0.2).unwrap().abs() < 1e-12);
        assert_relative_eq!(mollify_at(&step, &m, &[0.0], 0.2).unwrap(), 1.0, max_relative = 1e-9);
        assert_relative_eq!(mollify_at(&step, &m, &[0.0], 0.0).unwrap(), 0.5, max_relative = 1e-9);
    }

    #[test]
    fn step_closed_form() {
        let iv = Interval::new(-1.0, 1.0).unwrap();
        let s = StepFunction::two_level(iv, 0.0, 1.0, 2.0).unwrap();
        let v = step_weak_derivative(&s, Direction::Left, 0.5, 0.5).unwrap();
        assert_relative_eq!(v, (1.0 / 1.5f64.sqrt() + 1.0 / 0.5f64.sqrt()) / gam(0.5), max_relative = 1e-14);
        // high-precision value of the same expression
        assert_relative_eq!(v, 1.2585434267646463, max_relative = 1e-13);
        assert!(step_weak_derivative(&s, Direction::Left, 0.5, 0.0).is_err());
        let flat = StepFunction::two_level(iv, 0.0, 3.0, 3.0).unwrap();
        for &x in &[-0.5, 0.25, 0.9] {
            let c = 3.0 * (x + 1.0f64).powf(-0.5) / gam(0.5);
            assert_relative_eq!(step_weak_derivative(&flat, Direction::Left, 0.5, x).unwrap(), c, max_relative = 1e-14);
        }
        let v = step_weak_derivative(&s, Direction::Left, 0.5, -0.5).unwrap();
        assert_relative_eq!(v, 0.5f64.powf(-0.5) / gam(0.5), max_relative = 1e-14);
        assert_eq!(s.eval(0.0), 1.0);
        assert_eq!(s.eval(1e-12), 2.0);
        assert_eq!(s.eval(1.5), 0.0);
    }

    #[test]
    fn default_family_is_interior() {
        let iv = Interval::new(-1.0, 1.0).unwrap();
        let fam = default_family(iv);
        assert_eq!(fam.len(), 16);
        for phi in &fam {
            let (lo, hi) = phi.support();
            assert!(lo > iv.a && hi < iv.b);
        }
    }
}
