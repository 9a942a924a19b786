//! Gamma function, fractional binomial weights and the kernel functions.

use crate::error::{Error, Result};
use crate::grid::Interval;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn opposite(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Direction::Left),
            "right" => Ok(Direction::Right),
            _ => Err(Error::Parse(format!("direction must be left or right, got {s:?}"))),
        }
    }
}

/// An order alpha > 0 split as [alpha] + sigma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder {
    alpha: f64,
    int_part: u32,
    frac_part: f64,
}

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidOrder(alpha));
        }
        let fl = alpha.floor();
        Ok(FracOrder { alpha, int_part: fl as u32, frac_part: alpha - fl })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn int_part(&self) -> u32 {
        self.int_part
    }

    pub fn frac_part(&self) -> f64 {
        self.frac_part
    }

    /// (-1)^[alpha]
    pub fn sign(&self) -> f64 {
        if self.int_part % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Checks 0 < alpha < 1, the range of the classical derivative backends.
    pub fn require_unit(&self, what: &'static str) -> Result<f64> {
        if self.alpha < 1.0 {
            Ok(self.alpha)
        } else {
            Err(Error::OrderOutOfRange { what, value: self.alpha })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub direction: Direction,
    pub alpha: FracOrder,
    pub interval: Interval,
}

const LANCZOS_G: f64 = 6.024680040776729583740234375;
const LANCZOS_G_MINUS_HALF: f64 = 5.524680040776729583740234375;
const LANCZOS_NUM: [f64; 13] = [
    23531376880.410759688572007674451636754734846804940,
    42919803642.649098768957899047001988850926355848959,
    35711959237.355668049440185451547166705960488635843,
    17921034426.037209699919755754458931112671403265390,
    6039542586.3520280050642916443072979210699388420708,
    1439720407.3117216736632230727949123939715485786772,
    248874557.86205415651146038641322942321632125127801,
    31426415.585400194380614231628318205362874684987640,
    2876370.6289353724412254090516208496135991145378768,
    186056.26539522349504029498971604569928220784236328,
    8071.6720023658162106380029022722506138218516325024,
    210.82427775157934587250973392071336271166969580291,
    2.5066282746310002701649081771338373386264310793408,
];
const LANCZOS_DEN: [f64; 13] = [
    0.0,
    39916800.0,
    120543840.0,
    150917976.0,
    105258076.0,
    45995730.0,
    13339535.0,
    2637558.0,
    357423.0,
    32670.0,
    1925.0,
    66.0,
    1.0,
];

/// Largest argument with a finite Gamma value.
pub const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

fn lanczos_sum(x: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    if x < 5.0 {
        for i in (0..13).rev() {
            num = num * x + LANCZOS_NUM[i];
            den = den * x + LANCZOS_DEN[i];
        }
    } else {
        for i in 0..13 {
            num = num / x + LANCZOS_NUM[i];
            den = den / x + LANCZOS_DEN[i];
        }
    }
    num / den
}

fn sin_pi(x: f64) -> f64 {
    // reduce to [-0.25, 0.25] turns so sin(pi x) keeps full relative accuracy near integers
    let y = x.abs() % 2.0;
    let n = (2.0 * y).round();
    let r = match n as i64 {
        0 => (PI * y).sin(),
        1 => (PI * (y - 0.5)).cos(),
        2 => -(PI * (y - 1.0)).sin(),
        3 => -(PI * (y - 1.5)).cos(),
        _ => (PI * (y - 2.0)).sin(),
    };
    if x < 0.0 {
        -r
    } else {
        r
    }
}

/// Gamma function for real arguments.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain { what: "gamma", x });
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::GammaPole(x));
    }
    if x > GAMMA_MAX_ARG {
        return Err(Error::GammaOverflow(x));
    }
    if x == x.floor() && x <= 23.0 {
        let mut f = 1.0;
        let mut k = 2.0;
        while k < x {
            f *= k;
            k += 1.0;
        }
        return Ok(f);
    }
    let absx = x.abs();
    if absx < 1e-20 {
        return Ok(1.0 / x);
    }
    let y = absx + LANCZOS_G_MINUS_HALF;
    // rounding error committed in forming y, folded back in below
    let z = if absx > LANCZOS_G_MINUS_HALF {
        let q = y - absx;
        q - LANCZOS_G_MINUS_HALF
    } else {
        let q = y - LANCZOS_G_MINUS_HALF;
        q - absx
    };
    let z = z * LANCZOS_G / y;
    let r = if x < 0.0 {
        let mut r = -PI / sin_pi(absx) / absx * y.exp() / lanczos_sum(absx);
        r -= z * r;
        if absx < 140.0 {
            r /= y.powf(absx - 0.5);
        } else {
            let s = y.powf(absx / 2.0 - 0.25);
            r /= s;
            r /= s;
        }
        r
    } else {
        let mut r = lanczos_sum(absx) / y.exp();
        r += z * r;
        if absx > 140.0 {
            let s = y.powf(absx / 2.0 - 0.25);
            r *= s;
            r *= s;
        } else {
            r *= y.powf(absx - 0.5);
        }
        r
    };
    if r.is_infinite() {
        return Err(Error::GammaOverflow(x));
    }
    Ok(r)
}

/// 1/Gamma(x), defined as 0 at the poles.
pub fn rgamma(x: f64) -> f64 {
    match gamma(x) {
        Ok(g) => 1.0 / g,
        Err(Error::GammaPole(_)) => 0.0,
        Err(Error::GammaOverflow(_)) => 0.0,
        Err(_) => f64::NAN,
    }
}

/// Gamma for arguments known to be valid; panics on poles.
pub(crate) fn gam(x: f64) -> f64 {
    gamma(x).expect("gamma argument must avoid poles")
}

/// kappa_-(x) = (x-a)^(alpha-1), kappa_+(x) = (b-x)^(alpha-1).
pub fn kappa(spec: &KernelSpec, x: f64) -> Result<f64> {
    let iv = spec.interval;
    let inside = x > iv.a && x < iv.b;
    let at_far = match spec.direction {
        Direction::Left => x == iv.b,
        Direction::Right => x == iv.a,
    };
    if !(inside || at_far) || !x.is_finite() {
        return Err(Error::Domain { what: "kappa", x });
    }
    let d = match spec.direction {
        Direction::Left => x - iv.a,
        Direction::Right => iv.b - x,
    };
    if !d.is_finite() {
        return Err(Error::InfiniteInterval);
    }
    Ok(d.powf(spec.alpha.alpha() - 1.0))
}

/// Signed Grünwald–Letnikov weight (-1)^k binom(alpha, k), by recurrence.
pub fn gl_coefficient(alpha: FracOrder, k: usize) -> f64 {
    let a = alpha.alpha();
    let mut c = 1.0;
    for j in 1..=k {
        c *= (j as f64 - 1.0 - a) / j as f64;
    }
    c
}

/// First `n` Grünwald–Letnikov weights.
pub fn gl_coefficients(alpha: f64, n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n);
    let mut c = 1.0;
    for j in 0..n {
        if j > 0 {
            c *= (j as f64 - 1.0 - alpha) / j as f64;
        }
        w.push(c);
    }
    w
}

/// C_{k,alpha} = Gamma(1+alpha) / (Gamma(1+k) Gamma(1-k+alpha)), i.e. binom(alpha, k).
pub fn product_coefficient(k: usize, alpha: f64) -> f64 {
    let mut c = 1.0;
    for j in 1..=k {
        c *= (alpha - (j - 1) as f64) / j as f64;
    }
    c
}

/// The same coefficient from the Gamma ratio, for cross-checking.
pub fn product_coefficient_gamma(k: usize, alpha: f64) -> f64 {
    gam(1.0 + alpha) * rgamma(1.0 + k as f64) * rgamma(1.0 - k as f64 + alpha)
}
