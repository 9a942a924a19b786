//! Verification reports shared by the library checks and the CLI.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub measured_order: Option<f64>,
    pub pass: bool,
    pub warnings: Vec<String>,
}

impl Case {
    /// pass is residual <= tolerance; a NaN residual fails.
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Case {
        Case {
            name: name.into(),
            residual,
            tolerance,
            measured_order: None,
            pass: residual <= tolerance,
            warnings: Vec::new(),
        }
    }

    pub fn with_order(mut self, order: Option<f64>) -> Case {
        self.measured_order = order;
        self
    }

    /// An order requirement as its own case: the residual is the shortfall
    /// max(0, min - order), with tolerance 0. A missing order fails.
    pub fn order(name: impl Into<String>, order: Option<f64>, min: f64) -> Case {
        let shortfall = match order {
            Some(p) if p.is_finite() => (min - p).max(0.0),
            _ => f64::INFINITY,
        };
        Case::new(name, shortfall, 0.0).with_order(order)
    }

    /// Two-sided order requirement: residual |order - predicted|, tolerance `band`.
    pub fn order_near(name: impl Into<String>, order: Option<f64>, predicted: f64, band: f64) -> Case {
        let gap = match order {
            Some(p) if p.is_finite() => (p - predicted).abs(),
            _ => f64::INFINITY,
        };
        Case::new(name, gap, band).with_order(order)
    }

    pub fn warn(mut self, w: impl Into<String>) -> Case {
        self.warnings.push(w.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub alpha: f64,
    pub cases: Vec<Case>,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>, alpha: f64) -> Self {
        VerificationReport { suite: suite.into(), alpha, cases: Vec::new() }
    }

    pub fn push(&mut self, c: Case) {
        self.cases.push(c);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.cases.extend(other.cases);
    }

    pub fn all_pass(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.cases.iter().fold(0.0, |m, c| if c.residual.is_nan() { f64::NAN } else { m.max(c.residual) })
    }

    pub fn case(&self, name: &str) -> Option<&Case> {
        self.cases.iter().find(|c| c.name == name)
    }

    /// Cases sorted by name, for stable output.
    pub fn sorted(mut self) -> Self {
        self.cases.sort_by(|a, b| a.name.cmp(&b.name));
        self
    }
}

/// Observed convergence order from errors at two step sizes.
pub fn measured_order(err_coarse: f64, err_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (err_coarse / err_fine).ln() / (h_coarse / h_fine).ln()
}

/// Least-squares slope of log|y| against log x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_follows_tolerance() {
        assert!(Case::new("a", 1e-3, 1e-3).pass);
        assert!(!Case::new("a", 2e-3, 1e-3).pass);
        assert!(!Case::new("a", f64::NAN, 1e-3).pass);
    }

    #[test]
    fn orders_and_slopes() {
        assert!((measured_order(4e-2, 1e-2, 0.2, 0.1) - 2.0).abs() < 1e-12);
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        assert!((loglog_slope(&xs, &ys) + 1.5).abs() < 1e-12);
    }

    #[test]
    fn sorted_by_name() {
        let mut r = VerificationReport::new("s", 0.5);
        r.push(Case::new("b", 0.0, 1.0));
        r.push(Case::new("a", 0.0, 1.0));
        let r = r.sorted();
        assert_eq!(r.cases[0].name, "a");
    }
}
