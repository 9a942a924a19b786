//! Fundamental theorems, semigroup and decomposition laws, integration by
//! parts, and product and chain rules with remainders.

use crate::derivative::{check_alpha, rl_derivative};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::integral::{directional, rl_integral, rl_integral_any};
use crate::quad::{gauss_legendre, integrate, integrate_lower_weight, integrate_upper_weight, trapezoid, Tol};
use crate::report::{measured_order, Case, VerificationReport};
use crate::special::{gam, product_coefficient, Direction};
use crate::weak::{test_deriv, weak_derivative_compute, Smooth, TestFunction};
use rayon::prelude::*;
use serde::Serialize;

/// The constant of the fundamental theorem in the Gamma(sigma) normalization:
/// lim I^sigma f at the anchored endpoint, divided by Gamma(sigma).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FtfcConstant {
    pub direction: Direction,
    pub sigma: f64,
    pub value: f64,
}

impl FtfcConstant {
    /// The extrapolated limit of I^sigma f itself.
    pub fn limit(&self) -> f64 {
        self.value * gam(self.sigma)
    }

    /// Coefficient of kappa^alpha (alpha = 1 - sigma) that makes the
    /// reconstruction exact: the limit divided by Gamma(alpha), since
    /// I^(1-alpha) kappa^alpha = Gamma(alpha). Equals `value` only at alpha = 1/2.
    pub fn kappa_coefficient(&self) -> f64 {
        self.limit() / gam(1.0 - self.sigma)
    }
}

/// Node values of `u` and their distances from the anchored endpoint, ordered
/// outward from the anchor.
fn from_anchor(u: &GridFunction, dir: Direction) -> (Vec<f64>, Vec<f64>) {
    let x = u.nodes();
    let v = u.values();
    let n = x.len();
    match dir {
        Direction::Left => ((0..n).map(|i| x[i] - x[0]).collect(), v.to_vec()),
        Direction::Right => ((0..n).rev().map(|i| x[n - 1] - x[i]).collect(), v.iter().rev().copied().collect()),
    }
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> [f64; 3] {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *o = det(mk) / d;
    }
    out
}

/// The anchored-endpoint limit of I^(1-alpha) f. The three nodes nearest the
/// anchor are fitted with A (x-a)^(alpha-1) + B + C (x-a), the expansion of
/// f = A kappa^alpha + smooth; since I^(1-alpha) kappa^alpha = Gamma(alpha)
/// and bounded parts integrate to zero at the anchor, the limit is
/// A Gamma(alpha). Fitting f rather than the grid integral avoids the bias of
/// the first-cell model at an excluded anchor. Returns exactly 0 when the
/// limit is below 10 h ||f|| (h the spacing at the anchor).
pub fn ftfc_constant(f: &GridFunction, dir: Direction, alpha: f64) -> Result<FtfcConstant> {
    check_alpha(alpha, "ftfc_constant")?;
    if f.len() < 4 {
        return Err(Error::InvalidCount(f.len()));
    }
    let sigma = 1.0 - alpha;
    let (d, v) = from_anchor(f, dir);
    let e = alpha - 1.0;
    let a_coef = if e.abs() < 0.05 {
        // kappa exponent too close to the constant term to separate
        (v[1] - v[2]) / (d[1].powf(e) - d[2].powf(e))
    } else {
        let row = |k: usize| [d[k].powf(e), 1.0, d[k]];
        solve3([row(1), row(2), row(3)], [v[1], v[2], v[3]])[0]
    };
    let limit = a_coef * gam(alpha);
    let sup = f.values().iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    let value = if limit.abs() < 10.0 * d[1] * sup { 0.0 } else { limit / gam(sigma) };
    Ok(FtfcConstant { direction: dir, sigma, value })
}

/// F = c kappa^alpha + I^alpha f. When c != 0 the anchored endpoint is excluded.
pub fn ftfc_reconstruct(f: &GridFunction, dir: Direction, alpha: f64, c: f64) -> Result<GridFunction> {
    check_alpha(alpha, "ftfc_reconstruct")?;
    let integ = rl_integral(f, dir, alpha)?;
    if c == 0.0 {
        return Ok(integ);
    }
    let iv = f.grid().interval();
    let anchor = iv.anchor(dir);
    let vals = integ.nodes().iter().zip(integ.values()).map(|(x, v)| c * (x - anchor).abs().powf(alpha - 1.0) + v).collect();
    GridFunction::with_excluded(f.grid().clone(), vals, dir)
}

/// Sup of |a - b| over nodes where both are finite and `keep` holds.
fn sup_diff(a: &GridFunction, b: &GridFunction, keep: impl Fn(f64) -> bool) -> f64 {
    a.nodes()
        .iter()
        .zip(a.values().iter().zip(b.values()))
        .filter(|(x, (p, q))| p.is_finite() && q.is_finite() && keep(**x))
        .fold(0.0, |m, (_, (p, q))| m.max((p - q).abs()))
}

/// Checks F = C tau(., c_anchor) + I_tau f with I_tau f(x) = int tau(x,y) f(y) dy
/// over the grid interval. `exponent` is the declared behaviour
/// tau(x,y) ~ |x-y|^exponent at the diagonal and must exceed -1.
#[allow(clippy::too_many_arguments)]
pub fn general_kernel_check(
    big_f: &GridFunction,
    f: &GridFunction,
    tau: &(dyn Fn(f64, f64) -> f64 + Sync),
    exponent: f64,
    c_anchor: f64,
    big_c: f64,
    tol: f64,
) -> Result<VerificationReport> {
    if !(exponent > -1.0) {
        return Err(Error::NonIntegrableKernel(exponent));
    }
    if big_f.grid() != f.grid() {
        return Err(Error::InvalidGrid("F and f must share a grid".into()));
    }
    let x = f.nodes();
    let n = x.len();
    let (gx, gw) = gauss_legendre(8);
    let s = exponent + 1.0;
    let qtol = Tol::rel(1e-11).with_abs(1e-15);
    let integ: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x[i];
            let mut sum = 0.0;
            for j in 0..n - 1 {
                let (lo, hi) = (x[j], x[j + 1]);
                if hi == xi {
                    sum += integrate_upper_weight(|y| tau(xi, y) * (xi - y).powf(-exponent) * f.interp(y), lo, hi, s, qtol)?;
                } else if lo == xi {
                    sum += integrate_lower_weight(|y| tau(xi, y) * (y - xi).powf(-exponent) * f.interp(y), lo, hi, s, qtol)?;
                } else {
                    let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                    for (t, w) in gx.iter().zip(&gw) {
                        let y = c + r * t;
                        sum += r * w * tau(xi, y) * f.interp(y);
                    }
                }
            }
            Ok(sum)
        })
        .collect();
    let mut res = 0.0f64;
    for (i, v) in integ.into_iter().enumerate() {
        let v = v?;
        let (xi, fv) = (x[i], big_f.values()[i]);
        let k = tau(xi, c_anchor);
        if fv.is_finite() && k.is_finite() {
            res = res.max((fv - big_c * k - v).abs());
        }
    }
    let mut r = VerificationReport::new("general-kernel", f64::NAN);
    r.push(Case::new("reconstruction", res, tol));
    Ok(r)
}

/// u = c kappa^alpha + I^alpha (weak derivative of u), checked on the nodes
/// where `keep` holds (the anchor never counts). The constant uses the
/// Gamma(sigma) normalization; when the check fails but passes with the
/// Gamma(alpha) normalization, a warning names the discrepancy instead of
/// rescaling.
pub fn ftwfc_verify(u: &GridFunction, dir: Direction, alpha: f64, keep: &dyn Fn(f64) -> bool, tol: f64) -> Result<VerificationReport> {
    let (d, diag) = weak_derivative_compute(u, dir, alpha)?;
    let c = ftfc_constant(u, dir, alpha)?;
    let rec = ftfc_reconstruct(&d, dir, alpha, c.value)?;
    let res = sup_diff(u, &rec, keep);
    let mut case = Case::new("reconstruction", res, tol);
    if diag.suspect_non_ac {
        case = case.warn(format!("{}: TV ratios {:.3}, {:.3}", diag.label(), diag.ratios[0], diag.ratios[1]));
    }
    if !case.pass && c.value != 0.0 {
        let alt = ftfc_reconstruct(&d, dir, alpha, c.kappa_coefficient())?;
        let r2 = sup_diff(u, &alt, keep);
        if r2 <= tol {
            case = case.warn(format!(
                "constant off by Gamma(alpha)/Gamma(1-alpha): residual {r2:.3e} with I^(1-alpha)u(anchor)/Gamma(alpha)"
            ));
        }
    }
    let mut r = VerificationReport::new("ftwfc", alpha);
    r.push(case);
    Ok(r)
}

/// Compares D^alpha(D^beta u) with D^(alpha+beta) u, and each with an
/// optional exact oracle, on nodes satisfying `keep`.
pub fn semigroup_check(
    u: &GridFunction,
    dir: Direction,
    alpha: f64,
    beta: f64,
    oracle: Option<&dyn Fn(f64) -> f64>,
    keep: &dyn Fn(f64) -> bool,
    tol: f64,
) -> Result<VerificationReport> {
    check_alpha(alpha, "semigroup_check (alpha)")?;
    check_alpha(beta, "semigroup_check (beta)")?;
    check_alpha(alpha + beta, "semigroup_check (alpha + beta)")?;
    if beta <= 1.0 / u.len() as f64 || alpha <= 1.0 / u.len() as f64 {
        return Err(Error::InvalidArgument(format!("orders must exceed the grid threshold 1/n = {}", 1.0 / u.len() as f64)));
    }
    let composed = rl_derivative(&rl_derivative(u, dir, beta)?, dir, alpha)?;
    let direct = rl_derivative(u, dir, alpha + beta)?;
    let mut r = VerificationReport::new("semigroup", alpha + beta);
    r.push(Case::new("composed-vs-direct", sup_diff(&composed, &direct, keep), tol));
    if let Some(o) = oracle {
        let exact = composed.map(|x, _| o(x));
        r.push(Case::new("composed-vs-oracle", sup_diff(&composed, &exact, keep), tol));
        r.push(Case::new("direct-vs-oracle", sup_diff(&direct, &exact, keep), tol));
    }
    Ok(r)
}

/// Three-point derivative on a nonuniform grid, skipping NaN entries at an
/// excluded end (one-sided next to it and at the ends).
fn first_derivative(x: &[f64], v: &[f64], start: usize, end: usize) -> Vec<f64> {
    let mut out = vec![f64::NAN; x.len()];
    let fwd = |i: usize| {
        let (h1, h2) = (x[i + 1] - x[i], x[i + 2] - x[i + 1]);
        (-(2.0 * h1 + h2) / (h1 * (h1 + h2))) * v[i] + ((h1 + h2) / (h1 * h2)) * v[i + 1] - (h1 / (h2 * (h1 + h2))) * v[i + 2]
    };
    let bwd = |i: usize| {
        let (h1, h2) = (x[i - 1] - x[i - 2], x[i] - x[i - 1]);
        (h2 / (h1 * (h1 + h2))) * v[i - 2] - ((h1 + h2) / (h1 * h2)) * v[i - 1] + ((2.0 * h2 + h1) / (h2 * (h1 + h2))) * v[i]
    };
    out[start] = fwd(start);
    out[end] = bwd(end);
    for i in start + 1..end {
        let (hl, hr) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        out[i] = (hl * hl * v[i + 1] - hr * hr * v[i - 1] + (hr * hr - hl * hl) * v[i]) / (hl * hr * (hl + hr));
    }
    out
}

/// Order 1 < alpha < 2: the order-sigma weak derivative first, then one
/// discrete first derivative (with the sign (-1) per order for Right).
pub fn decompose_high_order(u: &GridFunction, dir: Direction, alpha: f64) -> Result<GridFunction> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::Unsupported(format!("decompose_high_order supports 1 < alpha < 2, got {alpha}")));
    }
    if u.len() < 4 {
        return Err(Error::InvalidCount(u.len()));
    }
    let w = rl_derivative(u, dir, alpha - 1.0)?;
    let n = u.len();
    let (start, end) = match dir {
        Direction::Left => (1, n - 1),
        Direction::Right => (0, n - 2),
    };
    let sign = match dir {
        Direction::Left => 1.0,
        Direction::Right => -1.0,
    };
    let d: Vec<f64> = first_derivative(u.nodes(), w.values(), start, end).into_iter().map(|v| sign * v).collect();
    GridFunction::with_excluded(u.grid().clone(), d, dir)
}

/// Composite trapezoid of g over [lo, hi] with n nodes.
fn trap(g: impl Fn(f64) -> f64 + Sync, lo: f64, hi: f64, n: usize) -> f64 {
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let vs: Vec<f64> = xs.par_iter().map(|x| g(*x)).collect();
    trapezoid(&xs, &vs)
}

fn ibp_residual(u: &TestFunction, v: &TestFunction, alpha: f64, n: usize) -> f64 {
    let (ul, uh) = u.support();
    let (vl, vh) = v.support();
    if alpha == 1.0 {
        let lhs = trap(|x| u.deriv(x) * v.eval(x), vl, vh, n);
        let rhs = -trap(|x| u.eval(x) * v.deriv(x), ul, uh, n);
        return (lhs - rhs).abs();
    }
    let lhs = trap(|x| test_deriv(u, Direction::Left, alpha, x) * v.eval(x), vl, vh, n);
    let rhs = trap(|x| u.eval(x) * test_deriv(v, Direction::Right, alpha, x), ul, uh, n);
    (lhs - rhs).abs()
}

/// |int (left D^alpha u) v - (-1)^[alpha] int u (right D^alpha v)| for test
/// functions on the line, by n-node trapezoid sums over each support (exact
/// to spectral order for these integrands). Also runs n/2 for an order.
pub fn integration_by_parts_check(u: &TestFunction, v: &TestFunction, alpha: f64, n: usize, tol: f64) -> Result<VerificationReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::OrderOutOfRange { what: "integration_by_parts_check (needs 0 < alpha <= 1)", value: alpha });
    }
    if n < 8 {
        return Err(Error::InvalidCount(n));
    }
    let fine = ibp_residual(u, v, alpha, n);
    let coarse = ibp_residual(u, v, alpha, n / 2 + 1);
    let order = if fine > 1e-14 && coarse > fine {
        Some(measured_order(coarse, fine, 1.0 / (n / 2) as f64, 1.0 / (n - 1) as f64))
    } else {
        None
    };
    let mut r = VerificationReport::new("ibp", alpha);
    r.push(Case::new("pairing", fine, tol).with_order(order));
    Ok(r)
}

/// k-th derivative of the multiplier psi, k = 0 ..= m + 1.
pub type Derivs<'a> = &'a (dyn Fn(usize, f64) -> f64 + Sync);

#[derive(Debug, Clone, PartialEq)]
pub struct ProductRuleExpansion {
    /// D^alpha u times psi
    pub leading: GridFunction,
    /// term k (1-based) is (+-1)^k C_{k,alpha} I^(k-alpha) u D^k psi
    pub corrections: Vec<GridFunction>,
    pub remainder: GridFunction,
    pub coefficients: Vec<f64>,
}

impl ProductRuleExpansion {
    pub fn total(&self) -> GridFunction {
        let mut vals = self.leading.values().to_vec();
        for c in &self.corrections {
            for (t, v) in vals.iter_mut().zip(c.values()) {
                *t += v;
            }
        }
        for (t, v) in vals.iter_mut().zip(self.remainder.values()) {
            *t += v;
        }
        GridFunction::from_parts(self.leading.grid().clone(), vals, self.leading.excluded())
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |p, j| p * j as f64)
}

/// psi(y) minus its degree-m Taylor polynomial at x, given psi(y) and the
/// derivatives d[j] = psi^(j)(x).
fn taylor_gap(psi_y: f64, d: &[f64], x: f64, y: f64) -> f64 {
    let mut t = 0.0;
    let mut p = 1.0;
    for (j, dj) in d.iter().enumerate() {
        t += dj * p / factorial(j);
        p *= y - x;
    }
    psi_y - t
}

/// The same gap as (1/m!) int_x^y psi^(m+1)(z) (y-z)^m dz by Gauss–Legendre;
/// used where y is close to x and the Taylor difference would cancel.
fn taylor_gap_gl(psi: &dyn Fn(usize, f64) -> f64, m: usize, x: f64, y: f64, gx: &[f64], gw: &[f64]) -> f64 {
    let (c, r) = (0.5 * (x + y), 0.5 * (x - y));
    let mut s = 0.0;
    for (t, w) in gx.iter().zip(gw) {
        let z = c + r * t;
        s += w * psi(m + 1, z) * (y - z).powi(m as i32);
    }
    -r * s / factorial(m)
}

/// Left remainder (1/Gamma(-alpha)) int_a^x u(y) [psi(y) - T_m(y; x)] (x-y)^(-1-alpha) dy
/// at node i, cellwise 8-point Gauss–Legendre on the linear model of u.
/// `psi_at` holds psi at the Gauss points of every cell, row-major.
#[allow(clippy::too_many_arguments)]
fn left_remainder_at_node(
    nodes: &[f64],
    vals: &[f64],
    i: usize,
    first_const: bool,
    psi: &dyn Fn(usize, f64) -> f64,
    psi_at: &[f64],
    alpha: f64,
    m: usize,
) -> f64 {
    let x = nodes[i];
    let (gx, gw) = gauss_legendre(GL_POINTS);
    let d: Vec<f64> = (0..=m).map(|j| psi(j, x)).collect();
    let mut sum = 0.0;
    for j in 0..i {
        let (lo, hi) = (nodes[j], nodes[j + 1]);
        let (u0, u1) = if j == 0 && first_const { (vals[1], vals[1]) } else { (vals[j], vals[j + 1]) };
        if u0 == 0.0 && u1 == 0.0 {
            continue;
        }
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (q, (t, w)) in gx.iter().zip(&gw).enumerate() {
            let y = c + r * t;
            let uy = u0 + (u1 - u0) * (y - lo) / (hi - lo);
            let gap = if j + 1 == i {
                taylor_gap_gl(psi, m, x, y, &gx, &gw)
            } else {
                taylor_gap(psi_at[j * GL_POINTS + q], &d, x, y)
            };
            sum += r * w * uy * gap * (x - y).powf(-1.0 - alpha);
        }
    }
    sum / gam(-alpha)
}

const GL_POINTS: usize = 8;

fn mirrored_derivs(psi: Derivs<'_>, dir: Direction) -> impl Fn(usize, f64) -> f64 + Sync + '_ {
    move |k, z| match dir {
        Direction::Left => psi(k, z),
        Direction::Right => {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            s * psi(k, -z)
        }
    }
}

/// Expands D^alpha(u psi) into leading term, m corrections and the remainder.
/// Right is the mirror image of Left, so its corrections carry (-1)^k.
pub fn product_rule_expand(u: &GridFunction, psi: Derivs<'_>, dir: Direction, alpha: f64, m: usize) -> Result<ProductRuleExpansion> {
    check_alpha(alpha, "product_rule_expand")?;
    if m == 0 {
        return Err(Error::InvalidArgument("product rule needs m >= 1".into()));
    }
    let d = rl_derivative(u, dir, alpha)?;
    let leading = d.map(|x, v| v * psi(0, x));
    let mut corrections = Vec::with_capacity(m);
    let mut coefficients = Vec::with_capacity(m);
    for k in 1..=m {
        let ck = product_coefficient(k, alpha);
        let sign = match dir {
            Direction::Right if k % 2 == 1 => -1.0,
            _ => 1.0,
        };
        let ik = rl_integral_any(u, dir, k as f64 - alpha)?;
        corrections.push(ik.map(|x, v| sign * ck * v * psi(k, x)));
        coefficients.push(ck);
    }
    let mpsi = mirrored_derivs(psi, dir);
    // directional() hands the kernel the mirrored nodes for Right
    let oriented: Vec<f64> = match dir {
        Direction::Left => u.nodes().to_vec(),
        Direction::Right => u.nodes().iter().rev().map(|x| -x).collect(),
    };
    let (gx, _) = gauss_legendre(GL_POINTS);
    let psi_at: Vec<f64> = oriented
        .windows(2)
        .flat_map(|c| {
            let (mid, r) = (0.5 * (c[0] + c[1]), 0.5 * (c[1] - c[0]));
            gx.iter().map(|t| mpsi(0, mid + r * t)).collect::<Vec<_>>()
        })
        .collect();
    let rem = directional(u, dir, |nodes, vals, i, fc| left_remainder_at_node(nodes, vals, i, fc, &mpsi, &psi_at, alpha, m));
    let remainder = GridFunction::from_parts(u.grid().clone(), rem, None);
    Ok(ProductRuleExpansion { leading, corrections, remainder, coefficients })
}

/// Remainder of the product rule at one point for a callable u, by adaptive
/// quadrature. Independent of the grid path; used as its oracle.
#[allow(clippy::too_many_arguments)]
pub fn product_rule_remainder_at(
    u: &dyn Fn(f64) -> f64,
    psi: Derivs<'_>,
    a: f64,
    b: f64,
    dir: Direction,
    alpha: f64,
    m: usize,
    x: f64,
) -> Result<f64> {
    check_alpha(alpha, "product_rule_remainder_at")?;
    let mpsi = mirrored_derivs(psi, dir);
    let (lo, xx, uu): (f64, f64, Box<dyn Fn(f64) -> f64 + '_>) = match dir {
        Direction::Left => (a, x, Box::new(|y| u(y))),
        Direction::Right => (-b, -x, Box::new(|y| u(-y))),
    };
    if xx <= lo {
        return Ok(0.0);
    }
    let (gx, gw) = gauss_legendre(16);
    let split = xx - (0.05f64).min(xx - lo);
    let tol = Tol::rel(1e-11).with_abs(1e-15);
    let near = integrate(
        |y| uu(y) * taylor_gap_gl(&mpsi, m, xx, y, &gx, &gw) * (xx - y).powf(-1.0 - alpha),
        split,
        xx,
        tol,
    )?
    .value;
    let d: Vec<f64> = (0..=m).map(|j| mpsi(j, xx)).collect();
    let far = integrate(|y| uu(y) * taylor_gap(mpsi(0, y), &d, xx, y) * (xx - y).powf(-1.0 - alpha), lo, split, tol)?.value;
    Ok((near + far) / gam(-alpha))
}

/// Main term phi(f)/f D^alpha f and remainder R_0(f, phi(f)/f) on a grid.
/// `dphi0` supplies phi'(0), the ratio's value where f vanishes.
pub fn chain_rule_expand(
    f: &(dyn Fn(f64) -> f64 + Sync),
    phi: &(dyn Fn(f64) -> f64 + Sync),
    dphi0: Option<f64>,
    grid: &Grid,
    dir: Direction,
    alpha: f64,
) -> Result<(GridFunction, GridFunction)> {
    check_alpha(alpha, "chain_rule_expand")?;
    let g = |y: f64| {
        let fy = f(y);
        if fy == 0.0 {
            dphi0.unwrap_or(f64::NAN)
        } else {
            phi(fy) / fy
        }
    };
    if dphi0.is_none() {
        if let Some(x) = grid.nodes().iter().find(|x| f(**x) == 0.0) {
            return Err(Error::RatioSingularity(*x));
        }
    }
    let fs = crate::grid::sample(f, grid)?;
    let d = rl_derivative(&fs, dir, alpha)?;
    let main = d.map(|x, v| g(x) * v);
    let iv = grid.interval();
    let tol = Tol::rel(1e-10).with_abs(1e-13);
    let scale = -1.0 / gam(-alpha);
    // g(x) - g(y) at rounding level (phi(s) = 3s gives 3f/f = 3 +- 1 ulp) is
    // noise the adaptive rule would chase forever
    let gap = |a: f64, b: f64| {
        let d = a - b;
        if d.abs() <= 8.0 * f64::EPSILON * a.abs().max(b.abs()) {
            0.0
        } else {
            d
        }
    };
    let rem: Vec<Result<f64>> = grid
        .nodes()
        .par_iter()
        .map(|&x| {
            // mirror Right onto Left
            let (lo, xx, s) = match dir {
                Direction::Left => (iv.a, x, 1.0),
                Direction::Right => (-iv.b, -x, -1.0),
            };
            if xx <= lo {
                return Ok(0.0);
            }
            let gx = g(x);
            let fm = |y: f64| f(s * y);
            let gm = |y: f64| g(s * y);
            let mid = 0.5 * (lo + xx);
            // [g(x) - g(y)]/(x - y) stays bounded; the weight (x-y)^(-alpha) is removed by substitution
            let near = integrate_upper_weight(
                |y| {
                    let dg = gap(gx, gm(y));
                    if dg == 0.0 {
                        0.0
                    } else {
                        fm(y) * dg / (xx - y)
                    }
                },
                mid,
                xx,
                1.0 - alpha,
                tol,
            )?;
            let far = integrate(
                |y| {
                    let dg = gap(gx, gm(y));
                    if dg == 0.0 {
                        0.0
                    } else {
                        fm(y) * dg * (xx - y).powf(-1.0 - alpha)
                    }
                },
                lo,
                mid,
                tol,
            )?
            .value;
            Ok(scale * (near + far))
        })
        .collect();
    let rem: Vec<f64> = rem.into_iter().collect::<Result<_>>()?;
    if let Some(i) = rem.iter().position(|v| !v.is_finite()) {
        return Err(Error::RatioSingularity(grid.nodes()[i]));
    }
    Ok((main, GridFunction::new(grid.clone(), rem)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample, sample_excluding, GridKind, Interval};
    use approx::assert_relative_eq;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn constant_of_kappa_is_one_at_half() {
        let g = make_grid(unit(), 1025, GridKind::Graded(4.0)).unwrap();
        let k = sample_excluding(|x| x.powf(-0.5), &g, Direction::Left).unwrap();
        let c = ftfc_constant(&k, Direction::Left, 0.5).unwrap();
        assert!((c.value - 1.0).abs() < 1e-3, "{}", c.value);
        let b = sample(|x| (3.0 * x).sin() + 1.0, &g).unwrap();
        assert_eq!(ftfc_constant(&b, Direction::Left, 0.5).unwrap().value, 0.0);
    }

    #[test]
    fn constant_right_mirrors_left() {
        let g = make_grid(unit(), 1025, GridKind::Uniform).unwrap();
        let k = sample_excluding(|x| 2.0 * (1.0 - x).powf(-0.5), &g, Direction::Right).unwrap();
        let c = ftfc_constant(&k, Direction::Right, 0.5).unwrap();
        assert!((c.value - 2.0).abs() < 2e-2, "{}", c.value);
    }

    #[test]
    fn normalization_differs_off_half() {
        // I^(1-alpha) kappa^alpha = Gamma(alpha), so the Gamma(sigma) form gives Gamma(alpha)/Gamma(1-alpha)
        let g = make_grid(unit(), 2049, GridKind::Graded(8.0)).unwrap();
        let k = sample_excluding(|x| x.powf(-0.75), &g, Direction::Left).unwrap();
        let c = ftfc_constant(&k, Direction::Left, 0.25).unwrap();
        assert!((c.value - gam(0.25) / gam(0.75)).abs() < 1e-2, "{}", c.value);
        assert!((c.kappa_coefficient() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn reconstruct_examples() {
        let g = make_grid(unit(), 257, GridKind::Uniform).unwrap();
        let zero = sample(|_| 0.0, &g).unwrap();
        let f = ftfc_reconstruct(&zero, Direction::Left, 0.5, 1.0).unwrap();
        for (x, v) in g.nodes().iter().zip(f.values()).skip(1) {
            assert_eq!(*v, x.powf(-0.5));
        }
        let one = sample(|_| 1.0, &g).unwrap();
        let f = ftfc_reconstruct(&one, Direction::Left, 0.5, 0.0).unwrap();
        for (x, v) in g.nodes().iter().zip(f.values()) {
            assert_relative_eq!(*v, x.sqrt() / gam(1.5), epsilon = 1e-13);
        }
    }

    #[test]
    fn heaviside_kernel_is_newton_leibniz() {
        let g = make_grid(unit(), 129, GridKind::Uniform).unwrap();
        let f = sample(|x| x.cos(), &g).unwrap();
        let big = sample(|x| 2.0 + x.sin(), &g).unwrap();
        let h = |x: f64, y: f64| if x >= y { 1.0 } else { 0.0 };
        let r = general_kernel_check(&big, &f, &h, 0.0, 0.0, 2.0, 1e-4).unwrap();
        assert!(r.all_pass(), "{:?}", r);
        assert!(matches!(general_kernel_check(&big, &f, &h, -1.0, 0.0, 2.0, 1e-4), Err(Error::NonIntegrableKernel(_))));
    }

    #[test]
    fn decomposition_power_rule() {
        let g = make_grid(unit(), 1025, GridKind::Uniform).unwrap();
        let u = sample(|x| x * x, &g).unwrap();
        let d = decompose_high_order(&u, Direction::Left, 1.5).unwrap();
        let c = gam(3.0) / gam(1.5);
        let err = g
            .nodes()
            .iter()
            .zip(d.values())
            .filter(|(x, _)| **x >= 0.1)
            .fold(0.0f64, |m, (x, v)| m.max((v - c * x.sqrt()).abs()));
        assert!(err < 1e-3, "{err}");
        assert!(decompose_high_order(&u, Direction::Left, 2.0).is_err());
        assert!(decompose_high_order(&u, Direction::Left, 1.0).is_err());
    }

    #[test]
    fn psi_one_and_psi_x() {
        let iv = Interval::new(-1.0, 1.0).unwrap();
        let g = make_grid(iv, 513, GridKind::Uniform).unwrap();
        let phi = TestFunction::bump(0.0, 0.9);
        let u = sample(|x| phi.eval(x), &g).unwrap();
        let one = |k: usize, _x: f64| if k == 0 { 1.0 } else { 0.0 };
        let e = product_rule_expand(&u, &one, Direction::Left, 0.5, 2).unwrap();
        assert!(e.remainder.values().iter().all(|v| *v == 0.0));
        assert!(e.corrections.iter().all(|c| c.values().iter().all(|v| *v == 0.0)));
        let lin = |k: usize, x: f64| match k {
            0 => x,
            1 => 1.0,
            _ => 0.0,
        };
        for dir in [Direction::Left, Direction::Right] {
            let e = product_rule_expand(&u, &lin, dir, 0.5, 1).unwrap();
            assert_relative_eq!(e.coefficients[0], 0.5, max_relative = 1e-15);
            assert!(e.remainder.sup_norm() < 1e-12);
            let direct = rl_derivative(&u.map(|x, v| x * v), dir, 0.5).unwrap();
            let r = sup_diff(&direct, &e.total(), |_| true);
            // the two grid paths agree to discretization order h^(2-alpha)
            assert!(r < 5e-4, "{dir:?} {r}");
        }
    }

    #[test]
    fn remainder_grid_matches_oracle() {
        let iv = Interval::new(-1.0, 1.0).unwrap();
        let g = make_grid(iv, 1025, GridKind::Uniform).unwrap();
        let phi = TestFunction::bump(0.0, 0.9);
        let u = sample(|x| phi.eval(x), &g).unwrap();
        let ex = |_k: usize, x: f64| x.exp();
        for dir in [Direction::Left, Direction::Right] {
            let e = product_rule_expand(&u, &ex, dir, 0.5, 2).unwrap();
            for &i in &[300usize, 512, 800] {
                let x = g.nodes()[i];
                let o = product_rule_remainder_at(&|y| phi.eval(y), &ex, -1.0, 1.0, dir, 0.5, 2, x).unwrap();
                assert!((e.remainder.values()[i] - o).abs() < 1e-5, "{dir:?} {x}: {} vs {o}", e.remainder.values()[i]);
            }
        }
    }

    #[test]
    fn remainder_closed_form_for_cube() {
        // u = 1, psi = x^3 on (0, 1): R_1 = D(x^3) - x^-a x^3/G(1-a) - a x^(1-a)/G(2-a) 3x^2.
        // A cubic separates psi(y) - T_1(y; x) from psi(x) - T_1(x; y).
        let a = 0.5;
        let g = make_grid(Interval::new(0.0, 1.0).unwrap(), 257, GridKind::Uniform).unwrap();
        let u = sample(|_| 1.0, &g).unwrap();
        let cube = |k: usize, x: f64| match k {
            0 => x * x * x,
            1 => 3.0 * x * x,
            2 => 6.0 * x,
            3 => 6.0,
            _ => 0.0,
        };
        let e = product_rule_expand(&u, &cube, Direction::Left, a, 1).unwrap();
        for i in [64usize, 128, 256] {
            let x = g.nodes()[i];
            let exact = x.powf(3.0 - a) * (6.0 / gam(4.0 - a) - 1.0 / gam(1.0 - a) - 3.0 * a / gam(2.0 - a));
            assert_relative_eq!(e.remainder.values()[i], exact, max_relative = 1e-5);
        }
    }

    #[test]
    fn chain_rule_identity_is_exact() {
        let iv = Interval::new(-1.0, 1.0).unwrap();
        let g = make_grid(iv, 257, GridKind::Uniform).unwrap();
        let phi = TestFunction::bump(0.0, 0.9);
        let f = |x: f64| phi.eval(x);
        let (main, rem) = chain_rule_expand(&f, &|s| s, Some(1.0), &g, Direction::Left, 0.5).unwrap();
        assert!(rem.values().iter().all(|v| *v == 0.0));
        let d = rl_derivative(&sample(f, &g).unwrap(), Direction::Left, 0.5).unwrap();
        assert_eq!(main.values()[1..], d.values()[1..]);
        assert!(matches!(
            chain_rule_expand(&f, &|s| s * s, None, &g, Direction::Left, 0.5),
            Err(Error::RatioSingularity(_))
        ));
    }
}
