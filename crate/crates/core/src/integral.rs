//! Riemann–Liouville fractional integrals: product quadrature on grids and an
//! adaptive scalar oracle.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Interval};
use crate::quad::{integrate, integrate_upper_weight, Tol};
use crate::special::{gam, Direction};
use rayon::prelude::*;

/// Cells with h/d below this use the series for the linear moment.
const SERIES_RATIO: f64 = 0.25;
const SERIES_TERMS: usize = 32;

/// Series coefficients e_k with
/// (1/h) int_cell (x-y)^(s-1) (y - x_j) dy = d0^s * sum_k e_k r^k, r = h/d0.
fn moment_series(s: f64) -> [f64; SERIES_TERMS] {
    let mut e = [0.0; SERIES_TERMS];
    // binom(s, k) and binom(s+1, k) by recurrence
    let (mut b0, mut b1) = (1.0, 1.0);
    for k in 1..=SERIES_TERMS + 1 {
        b0 *= (s - (k - 1) as f64) / k as f64;
        b1 *= (s + 1.0 - (k - 1) as f64) / k as f64;
        if k >= 2 {
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            e[k - 2] = sign * (b0 / s - b1 / (s + 1.0));
        }
    }
    e
}

/// Product-trapezoid weights of the left integral at node `i`, accumulated
/// into a value. `first_const` models the first cell as constant u_1.
pub(crate) fn left_integral_at_node(
    nodes: &[f64],
    vals: &[f64],
    i: usize,
    s: f64,
    series: &[f64; SERIES_TERMS],
    first_const: bool,
) -> f64 {
    let x = nodes[i];
    let mut sum = 0.0;
    let mut comp = 0.0;
    // walk cells from the one touching x outward so d1^s is reused
    let mut d1s = 0.0f64;
    for j in (0..i).rev() {
        let d0 = x - nodes[j];
        let d1 = x - nodes[j + 1];
        let h = nodes[j + 1] - nodes[j];
        let d0s = d0.powf(s);
        let a_mom = crate::derivative::pow_diff(d0s, d1s, h, d0, s) / s;
        let b_over_h = if h < SERIES_RATIO * d0 {
            let r = h / d0;
            let mut acc = 0.0;
            for c in series.iter().rev() {
                acc = acc * r + c;
            }
            d0s * acc * r
        } else {
            let d0s1 = d0s * d0;
            let d1s1 = d1s * d1;
            (d0 * (d0s - d1s) / s - (d0s1 - d1s1) / (s + 1.0)) / h
        };
        let term = if j == 0 && first_const {
            a_mom * vals[1]
        } else {
            (a_mom - b_over_h) * vals[j] + b_over_h * vals[j + 1]
        };
        // Neumaier summation
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        d1s = d0s;
    }
    sum + comp
}

/// Runs a left-anchored node kernel in the requested direction. Right is
/// computed on the negated grid, which preserves every spacing exactly.
pub(crate) fn directional<F>(u: &GridFunction, dir: Direction, kernel: F) -> Vec<f64>
where
    F: Fn(&[f64], &[f64], usize, bool) -> f64 + Sync,
{
    let (nodes, vals, first_const) = match dir {
        Direction::Left => (u.nodes().to_vec(), u.values().to_vec(), u.excluded() == Some(Direction::Left)),
        Direction::Right => (
            u.nodes().iter().rev().map(|x| -x).collect::<Vec<_>>(),
            u.values().iter().rev().copied().collect::<Vec<_>>(),
            u.excluded() == Some(Direction::Right),
        ),
    };
    let out: Vec<f64> = (0..nodes.len()).into_par_iter().map(|i| kernel(&nodes, &vals, i, first_const)).collect();
    match dir {
        Direction::Left => out,
        Direction::Right => out.into_iter().rev().collect(),
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma <= 1.0 {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange { what: "fractional integral (needs 0 < sigma <= 1)", value: sigma })
    }
}

/// Left or right RL integral of order sigma in (0, 1] by piecewise-linear
/// product integration. An excluded anchored endpoint is treated as constant
/// on its cell.
pub fn rl_integral(u: &GridFunction, dir: Direction, sigma: f64) -> Result<GridFunction> {
    check_sigma(sigma)?;
    let series = moment_series(sigma);
    let scale = 1.0 / gam(sigma);
    let vals = directional(u, dir, |nodes, vals, i, fc| {
        scale * left_integral_at_node(nodes, vals, i, sigma, &series, fc)
    });
    Ok(GridFunction::from_parts(u.grid().clone(), vals, None))
}

/// RL integral of any positive order: integer steps of order 1 followed by
/// the fractional remainder (the operators commute).
pub fn rl_integral_any(u: &GridFunction, dir: Direction, order: f64) -> Result<GridFunction> {
    if !(order > 0.0 && order.is_finite()) {
        return Err(Error::InvalidOrder(order));
    }
    let mut w = u.clone();
    let mut left = order;
    while left > 1.0 {
        w = rl_integral(&w, dir, 1.0)?;
        left -= 1.0;
    }
    rl_integral(&w, dir, left)
}

/// High-accuracy RL integral of a callable at one point. The kernel
/// singularity at y = x is removed by substitution; an endpoint singularity
/// of f is handled by adaptive bisection.
pub fn rl_integral_at(
    f: impl Fn(f64) -> f64,
    interval: Interval,
    dir: Direction,
    sigma: f64,
    x: f64,
    rtol: f64,
) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidOrder(sigma));
    }
    if !(x >= interval.a && x <= interval.b) {
        return Err(Error::Domain { what: "rl_integral_at", x });
    }
    let tol = Tol::rel(rtol).with_abs(1e-300);
    let raw = match dir {
        Direction::Left => weighted_to_point(&f, interval.a, x, sigma, tol)?,
        Direction::Right => weighted_to_point(&|y: f64| f(-y), -interval.b, -x, sigma, tol)?,
    };
    Ok(raw / gam(sigma))
}

/// int_lo^x f(y) (x - y)^(s-1) dy.
pub(crate) fn weighted_to_point(f: &dyn Fn(f64) -> f64, lo: f64, x: f64, s: f64, tol: Tol) -> Result<f64> {
    if x <= lo {
        return Ok(0.0);
    }
    if s >= 1.0 {
        return Ok(integrate(|y| f(y) * (x - y).powf(s - 1.0), lo, x, tol)?.value);
    }
    let m = 0.5 * (lo + x);
    let near = integrate_upper_weight(f, m, x, s, tol)?;
    let far = integrate(|y| f(y) * (x - y).powf(s - 1.0), lo, m, tol.with_abs(tol.rel * near.abs().max(1e-300)))?;
    Ok(near + far.value)
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample, GridKind};
    use approx::assert_relative_eq;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn order_one_is_the_antiderivative() {
        let g = make_grid(unit(), 11, GridKind::Uniform).unwrap();
        let u = sample(|_| 1.0, &g).unwrap();
        let w = rl_integral(&u, Direction::Left, 1.0).unwrap();
        for (x, v) in g.nodes().iter().zip(w.values()) {
            assert_relative_eq!(*v, *x, epsilon = 1e-15);
        }
    }

    #[test]
    fn half_integral_of_one() {
        let g = make_grid(unit(), 65, GridKind::Uniform).unwrap();
        let u = sample(|_| 1.0, &g).unwrap();
        let w = rl_integral(&u, Direction::Left, 0.5).unwrap();
        assert_eq!(w.values()[0], 0.0);
        assert_relative_eq!(w.values()[64], 1.1283791671, max_relative = 1e-10);
        let w = rl_integral(&u, Direction::Right, 0.5).unwrap();
        assert_relative_eq!(w.values()[0], 1.1283791671, max_relative = 1e-10);
        assert_eq!(w.values()[64], 0.0);
    }

    #[test]
    fn rejects_bad_sigma() {
        let g = make_grid(unit(), 5, GridKind::Uniform).unwrap();
        let u = sample(|_| 1.0, &g).unwrap();
        assert!(rl_integral(&u, Direction::Left, 1.5).is_err());
        assert!(rl_integral(&u, Direction::Left, 0.0).is_err());
    }

    #[test]
    fn oracle_examples() {
        let v = rl_integral_at(|_| 1.0, unit(), Direction::Left, 0.5, 1.0, 1e-10).unwrap();
        assert_relative_eq!(v, 1.1283791671, max_relative = 1e-10);
        let v = rl_integral_at(|y| y, unit(), Direction::Left, 1.0, 1.0, 1e-10).unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-12);
        let v = rl_integral_at(|y| y.powf(-0.5), unit(), Direction::Left, 0.5, 0.5, 1e-10).unwrap();
        assert_relative_eq!(v, 1.7724538509, max_relative = 1e-9);
    }

    #[test]
    fn series_matches_direct_moment() {
        let s = 0.3;
        let e = moment_series(s);
        let (d0, h) = (1.0f64, 0.2);
        let d1 = d0 - h;
        let direct = (d0 * (d0.powf(s) - d1.powf(s)) / s - (d0.powf(s + 1.0) - d1.powf(s + 1.0)) / (s + 1.0)) / h;
        let r = h / d0;
        let series: f64 = e.iter().enumerate().map(|(k, c)| c * r.powi(k as i32 + 1)).sum();
        assert_relative_eq!(series, direct, max_relative = 1e-13);
    }
}
