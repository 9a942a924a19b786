//! Riemann–Liouville, Caputo, Grünwald–Letnikov and Fourier derivatives of
//! order 0 < alpha < 1.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Interval};
use crate::integral::directional;
use crate::special::{gam, gl_coefficients, Direction};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

pub(crate) fn check_alpha(alpha: f64, what: &'static str) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange { what, value: alpha })
    }
}

/// Cells whose far end sits below this fraction of x - x_0 use the series for e_j.
const NEAR_ANCHOR: f64 = 0.25;
const H_TERMS: usize = 30;

/// Coefficients of H(t) = (1-t)^p - 1 + p t = sum_{k>=2} c_k t^k.
fn h_coefficients(p: f64) -> [f64; H_TERMS] {
    let mut c = [0.0; H_TERMS];
    let mut b = -p; // (-1)^k binom(p, k) at k = 1
    for k in 2..H_TERMS + 2 {
        b *= -(p - (k - 1) as f64) / k as f64;
        c[k - 2] = b;
    }
    c
}

fn h_series(c: &[f64; H_TERMS], t: f64) -> f64 {
    let mut acc = 0.0;
    for ck in c.iter().rev() {
        acc = acc * t + ck;
    }
    acc * t * t
}

/// d/dx of the order 1-alpha product integral of the piecewise-linear model,
/// evaluated at node i (left-anchored, i >= 1).
///
/// Telescoped as X^-alpha (u_i + sum_j (u_{j+1} - u_j) e_j), X = x - x_0,
/// where 1 + e_j is the cell mean of (1 - t)^-alpha in t = (y - x_0)/X.
/// Near the anchor e_j is O(t) and comes from a series, so samples that blow
/// up there (kappa on a graded mesh) do not cancel catastrophically.
pub(crate) fn left_derivative_at_node(nodes: &[f64], vals: &[f64], i: usize, alpha: f64, first_const: bool) -> f64 {
    if i == 0 {
        return f64::NAN;
    }
    let x = nodes[i];
    let big = x - nodes[0];
    let p = 1.0 - alpha;
    let coef = h_coefficients(p);
    let xa = big.powf(alpha);
    let start = usize::from(first_const);
    let mut sum = vals[i];
    let mut comp = 0.0;
    let mut d1p = 0.0f64;
    for j in (start..i).rev() {
        let d0 = x - nodes[j];
        let h = nodes[j + 1] - nodes[j];
        let t1 = (nodes[j + 1] - nodes[0]) / big;
        let e = if t1 < NEAR_ANCHOR {
            let t0 = (nodes[j] - nodes[0]) / big;
            (h_series(&coef, t0) - h_series(&coef, t1)) / (p * (t1 - t0))
        } else {
            let d0p = d0.powf(p);
            let e = pow_diff(d0p, d1p, h, d0, p) / (p * h) * xa - 1.0;
            d1p = d0p;
            e
        };
        let term = (vals[j + 1] - vals[j]) * e;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    (sum + comp) / xa
}

/// d0^p - (d0 - h)^p given d0p = d0^p and d1p = (d0 - h)^p, without the
/// cancellation the plain difference suffers when h << d0.
pub(crate) fn pow_diff(d0p: f64, d1p: f64, h: f64, d0: f64, p: f64) -> f64 {
    if h < 0.25 * d0 {
        -d0p * (p * (-h / d0).ln_1p()).exp_m1()
    } else {
        d0p - d1p
    }
}

/// RL derivative on a grid. The value at the anchored endpoint is not
/// reported.
pub fn rl_derivative(u: &GridFunction, dir: Direction, alpha: f64) -> Result<GridFunction> {
    check_alpha(alpha, "rl_derivative (needs 0 < alpha < 1; use decompose for 1 < alpha < 2)")?;
    let scale = 1.0 / gam(1.0 - alpha);
    let vals = directional(u, dir, |nodes, vals, i, fc| scale * left_derivative_at_node(nodes, vals, i, alpha, fc));
    GridFunction::with_excluded(u.grid().clone(), vals, dir)
}

/// Caputo derivative in weak form: the RL derivative of u - u(anchor).
pub fn caputo_derivative(u: &GridFunction, dir: Direction, alpha: f64) -> Result<GridFunction> {
    check_alpha(alpha, "caputo_derivative")?;
    if u.excluded() == Some(dir) {
        return Err(Error::InvalidArgument("Caputo derivative needs the value at the anchored endpoint".into()));
    }
    let anchor = match dir {
        Direction::Left => u.values()[0],
        Direction::Right => u.values()[u.len() - 1],
    };
    rl_derivative(&u.map(|_, v| v - anchor), dir, alpha)
}

/// Truncated Grünwald–Letnikov sum at x with step h.
pub fn gl_derivative(
    f: impl Fn(f64) -> f64,
    interval: Interval,
    dir: Direction,
    alpha: f64,
    h: f64,
    x: f64,
) -> Result<f64> {
    check_alpha(alpha, "gl_derivative")?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step h = {h} must be positive")));
    }
    if !(x >= interval.a && x <= interval.b) {
        return Err(Error::Domain { what: "gl_derivative", x });
    }
    let reach = match dir {
        Direction::Left => x - interval.a,
        Direction::Right => interval.b - x,
    };
    // tiny slack so a reach that is an exact multiple of h is not cut short by rounding
    let n = (reach / h * (1.0 + 1e-12)).floor() as usize;
    let w = gl_coefficients(alpha, n + 1);
    let step = match dir {
        Direction::Left => -h,
        Direction::Right => h,
    };
    let mut sum = 0.0;
    for (k, c) in w.iter().enumerate() {
        sum += c * f(x + k as f64 * step);
    }
    Ok(sum / h.powf(alpha))
}

/// Fourier derivative with multiplier (i xi)^alpha on the principal branch.
/// The grid must be uniform; it is treated as one period (last node
/// identified with the first). Returns the result and any warnings.
pub fn fourier_derivative(u: &GridFunction, alpha: f64) -> Result<(GridFunction, Vec<String>)> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidOrder(alpha));
    }
    if u.excluded().is_some() {
        return Err(Error::InvalidArgument("Fourier derivative needs every sample".into()));
    }
    let nodes = u.nodes();
    let n = nodes.len() - 1;
    let h = (nodes[n] - nodes[0]) / n as f64;
    for w in nodes.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h {
            return Err(Error::InvalidGrid("Fourier derivative needs a uniform grid".into()));
        }
    }
    let mut warnings = Vec::new();
    let sup = u.sup_norm();
    let edge = u.values()[0].abs().max(u.values()[n].abs());
    if edge > 1e-12 * sup {
        warnings.push(format!("insufficient padding: boundary value {edge:e} exceeds 1e-12 of sup {sup:e}"));
    }
    let mut buf: Vec<Complex64> = u.values()[..n].iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let period = h * n as f64;
    let half = std::f64::consts::FRAC_PI_2 * alpha;
    for (k, z) in buf.iter_mut().enumerate() {
        let (kk, nyquist) = if 2 * k < n {
            (k as f64, false)
        } else if 2 * k == n {
            (k as f64, true)
        } else {
            (k as f64 - n as f64, false)
        };
        let xi = 2.0 * PI * kk / period;
        let m = if xi == 0.0 {
            if alpha == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        } else if nyquist {
            // the two branches at +-xi average to a real multiplier
            Complex64::new(xi.abs().powf(alpha) * half.cos(), 0.0)
        } else {
            Complex64::from_polar(xi.abs().powf(alpha), half * xi.signum())
        };
        *z *= m;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let mut vals: Vec<f64> = buf.iter().map(|z| z.re / n as f64).collect();
    vals.push(vals[0]);
    Ok((GridFunction::new(u.grid().clone(), vals)?, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample, GridKind};
    use approx::assert_relative_eq;

    #[test]
    fn constant_closed_form() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let g = make_grid(iv, 33, GridKind::Uniform).unwrap();
        let u = sample(|_| 2.0, &g).unwrap();
        let d = rl_derivative(&u, Direction::Left, 0.5).unwrap();
        assert!(d.values()[0].is_nan());
        for (x, v) in g.nodes().iter().zip(d.values()).skip(1) {
            assert_relative_eq!(*v, 2.0 * x.powf(-0.5) / gam(0.5), max_relative = 1e-13);
        }
        assert_relative_eq!(0.5f64.powf(-0.5) / gam(0.5), 0.7978845608028654, max_relative = 1e-14);
        let c = caputo_derivative(&u, Direction::Left, 0.5).unwrap();
        assert!(c.values()[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn alpha_range() {
        let g = make_grid(Interval::new(0.0, 1.0).unwrap(), 5, GridKind::Uniform).unwrap();
        let u = sample(|_| 1.0, &g).unwrap();
        assert!(matches!(rl_derivative(&u, Direction::Left, 1.5), Err(Error::OrderOutOfRange { .. })));
    }

    #[test]
    fn gl_of_constant_tends_to_closed_form() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let exact = 0.5f64.powf(-0.5) / gam(0.5);
        let e1 = (gl_derivative(|_| 1.0, iv, Direction::Left, 0.5, 1e-3, 0.5).unwrap() - exact).abs();
        let e2 = (gl_derivative(|_| 1.0, iv, Direction::Left, 0.5, 5e-4, 0.5).unwrap() - exact).abs();
        assert!(e1 < 1e-3 && e2 < e1);
    }

    #[test]
    fn fourier_identity_and_first_derivative() {
        let iv = Interval::new(-8.0, 8.0).unwrap();
        let g = make_grid(iv, 513, GridKind::Uniform).unwrap();
        let u = sample(|x: f64| (-x * x).exp(), &g).unwrap();
        let (d0, w) = fourier_derivative(&u, 0.0).unwrap();
        assert!(w.is_empty());
        for (a, b) in d0.values().iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let (d1, _) = fourier_derivative(&u, 1.0).unwrap();
        for (x, v) in g.nodes().iter().zip(d1.values()) {
            assert!((v - (-2.0 * x * (-x * x).exp())).abs() < 1e-8);
        }
    }

    #[test]
    fn pow_diff_keeps_relative_accuracy() {
        // reference: the plain difference where it cannot cancel, otherwise
        // p * int_{d0-h}^{d0} t^(p-1) dt by composite Simpson
        let reference = |d0: f64, h: f64, p: f64| {
            if h >= 0.1 * d0 {
                return d0.powf(p) - (d0 - h).powf(p);
            }
            let n = 64;
            let f = |t: f64| t.powf(p - 1.0);
            let step = h / n as f64;
            let mut s = f(d0 - h) + f(d0);
            for k in 1..n {
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(d0 - h + k as f64 * step);
            }
            p * s * step / 3.0
        };
        for &p in &[-0.9, -0.5, 0.25, 0.5, 0.75] {
            for &r in &[1e-12, 1e-8, 1e-4, 0.01, 0.2, 0.5, 0.9] {
                let d0: f64 = 3.7;
                let h = r * d0;
                let got = pow_diff(d0.powf(p), (d0 - h).powf(p), h, d0, p);
                let want = reference(d0, h, p);
                assert!(((got - want) / want).abs() < 1e-12, "p={p} r={r}: {got} vs {want}");
            }
        }
    }
}
