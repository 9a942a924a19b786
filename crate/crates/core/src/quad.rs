//! Adaptive Gauss–Kronrod quadrature with helpers for algebraic endpoint
//! singularities, plus fixed Gauss–Legendre rules.

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525617585,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tol {
    pub fn rel(rel: f64) -> Tol {
        Tol { abs: 1e-300, rel, max_intervals: 4000 }
    }

    pub fn with_abs(mut self, abs: f64) -> Tol {
        self.abs = abs;
        self
    }
}

impl Default for Tol {
    fn default() -> Self {
        Tol::rel(1e-10).with_abs(1e-15)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// One 21-point Kronrod panel: (value, error estimate).
fn qk21(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = WGK[10] * fc;
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let hl = h.abs();
    let value = resk * h;
    resabs *= hl;
    resasc *= hl;
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err)
}

/// Globally adaptive bisection on [a, b].
pub fn integrate(f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: Tol) -> Result<QuadResult> {
    let (r, ok) = adapt(f, a, b, tol);
    if ok {
        Ok(r)
    } else {
        Err(Error::NonConvergence { achieved: r.error, intervals: r.intervals })
    }
}

/// Like `integrate` but returns the best estimate even without convergence.
pub fn integrate_lenient(f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: Tol) -> QuadResult {
    adapt(f, a, b, tol).0
}

fn adapt(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: Tol) -> (QuadResult, bool) {
    if a == b {
        return (QuadResult { value: 0.0, error: 0.0, intervals: 0 }, true);
    }
    let mut segs: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    let (v, e) = qk21(&mut f, a, b);
    segs.push((a, b, v, e));
    let mut total = v;
    let mut err = e;
    loop {
        let res = QuadResult { value: total, error: err, intervals: segs.len() };
        if !total.is_finite() || !err.is_finite() {
            return (res, false);
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            return (res, true);
        }
        if segs.len() >= tol.max_intervals {
            return (res, false);
        }
        let (imax, _) = segs
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, s)| if s.3 > be { (i, s.3) } else { (bi, be) });
        let (sa, sb, sv, se) = segs[imax];
        let m = 0.5 * (sa + sb);
        if !(m > sa.min(sb) && m < sa.max(sb)) {
            return (res, false);
        }
        let (v1, e1) = qk21(&mut f, sa, m);
        let (v2, e2) = qk21(&mut f, m, sb);
        segs[imax] = (sa, m, v1, e1);
        segs.push((m, sb, v2, e2));
        total += v1 + v2 - sv;
        err += e1 + e2 - se;
        if segs.len() % 64 == 0 {
            // re-sum to keep drift out of the running totals
            total = segs.iter().map(|s| s.2).sum();
            err = segs.iter().map(|s| s.3).sum();
        }
    }
}

/// Integrates over [a, b] split at the given interior points.
pub fn integrate_pts(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, pts: &[f64], tol: Tol) -> Result<f64> {
    let mut cuts: Vec<f64> = pts.iter().copied().filter(|p| *p > a && *p < b).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(b);
    let mut sum = 0.0;
    for w in edges.windows(2) {
        // the tolerance is applied per piece; pieces are few, so this stays conservative
        sum += integrate(&mut f, w[0], w[1], tol)?.value;
    }
    Ok(sum)
}

/// Integral over [lo, hi] of f(y) (hi - y)^(s - 1), s > 0, with the
/// singularity at `hi` removed by the substitution t = (hi - y)^s.
pub fn integrate_upper_weight(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, s: f64, tol: Tol) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    if s == 1.0 {
        return Ok(integrate(f, lo, hi, tol)?.value);
    }
    let top = (hi - lo).powf(s);
    let r = integrate(
        |t| {
            let d = t.powf(1.0 / s);
            if d >= hi - lo {
                f(lo)
            } else {
                f(hi - d)
            }
        },
        0.0,
        top,
        tol,
    )?;
    Ok(r.value / s)
}

/// Best-effort version of `integrate_upper_weight`.
pub fn upper_weight_lenient(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, s: f64, tol: Tol) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if s == 1.0 {
        return integrate_lenient(f, lo, hi, tol).value;
    }
    let top = (hi - lo).powf(s);
    let r = integrate_lenient(
        |t| {
            let d = t.powf(1.0 / s);
            f(if d >= hi - lo { lo } else { hi - d })
        },
        0.0,
        top,
        tol,
    );
    r.value / s
}

/// Integral over [lo, hi] of f(y) (y - lo)^(s - 1), the mirror of
/// `integrate_upper_weight`.
pub fn integrate_lower_weight(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, s: f64, tol: Tol) -> Result<f64> {
    integrate_upper_weight(|y| f(lo + hi - y), lo, hi, s, tol)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite trapezoid sum over samples on a grid.
pub fn trapezoid(nodes: &[f64], values: &[f64]) -> f64 {
    nodes.windows(2).zip(values.windows(2)).map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1])).sum()
}
