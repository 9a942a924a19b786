//! Intervals, meshes, sampled functions and the `x,value` CSV format.

use crate::error::{Error, Result};
use crate::special::{gam, Direction};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    /// Endpoints may be infinite; `a < b` is required.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a.is_nan() || b.is_nan() || a >= b || a == f64::INFINITY || b == f64::NEG_INFINITY {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(Interval { a, b })
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.a && x < self.b
    }

    /// Clips infinite endpoints to the window [-x, x].
    pub fn truncate(&self, window: f64) -> Result<Interval> {
        if !(window.is_finite() && window > 0.0) {
            return Err(Error::InfiniteInterval);
        }
        let a = if self.a.is_finite() { self.a } else { -window };
        let b = if self.b.is_finite() { self.b } else { window };
        Interval::new(a, b)
    }

    pub fn anchor(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Left => self.a,
            Direction::Right => self.b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    Uniform,
    /// node_i = a + (b-a) (i/(n-1))^gamma, clustered at `a`.
    Graded(f64),
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    interval: Interval,
    nodes: Vec<f64>,
    kind: GridKind,
}

pub fn make_grid(interval: Interval, n: usize, kind: GridKind) -> Result<Grid> {
    if n < 3 {
        return Err(Error::InvalidCount(n));
    }
    if !interval.is_finite() {
        return Err(Error::InfiniteInterval);
    }
    let (a, b) = (interval.a, interval.b);
    let m = (n - 1) as f64;
    let nodes: Vec<f64> = match kind {
        GridKind::Uniform => (0..n)
            .map(|i| {
                // build each half from its own endpoint so grids on (-c, c) are exactly antisymmetric
                if 2 * i < n {
                    a + (b - a) * (i as f64 / m)
                } else {
                    b - (b - a) * ((n - 1 - i) as f64 / m)
                }
            })
            .collect(),
        GridKind::Graded(g) => {
            if !(g.is_finite() && g >= 1.0) {
                return Err(Error::InvalidGrid(format!("grading exponent {g} must be >= 1")));
            }
            (0..n).map(|i| a + (b - a) * (i as f64 / m).powf(g)).collect()
        }
        GridKind::Explicit => {
            return Err(Error::InvalidGrid("explicit grids are built with Grid::from_nodes".into()))
        }
    };
    let mut nodes = nodes;
    nodes[0] = a;
    nodes[n - 1] = b;
    Grid::checked(interval, nodes, kind)
}

impl Grid {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Grid> {
        if nodes.len() < 3 {
            return Err(Error::InvalidCount(nodes.len()));
        }
        let interval = Interval::new(nodes[0], nodes[nodes.len() - 1])?;
        Grid::checked(interval, nodes, GridKind::Explicit)
    }

    fn checked(interval: Interval, nodes: Vec<f64>, kind: GridKind) -> Result<Grid> {
        if !interval.is_finite() {
            return Err(Error::InfiniteInterval);
        }
        for w in nodes.windows(2) {
            if !(w[0] < w[1]) || !w[1].is_finite() {
                return Err(Error::InvalidGrid(format!("nodes not strictly increasing at {} -> {}", w[0], w[1])));
            }
        }
        Ok(Grid { interval, nodes, kind })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Nodes x -> -x in reverse order. Spacings are preserved bit for bit.
    pub fn negated(&self) -> Grid {
        let nodes: Vec<f64> = self.nodes.iter().rev().map(|x| -x).collect();
        let interval = Interval { a: -self.interval.b, b: -self.interval.a };
        Grid { interval, nodes, kind: GridKind::Explicit }
    }

    /// Index of the cell [x_j, x_{j+1}] containing x (clamped to the grid).
    pub fn locate(&self, x: f64) -> usize {
        let n = self.nodes.len();
        match self.nodes.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }
}

/// Samples on a grid. Every value is finite except possibly the one at an
/// excluded anchored endpoint, which is stored as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    excluded: Option<Direction>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::LengthMismatch { nodes: grid.len(), values: values.len() });
        }
        for (x, v) in grid.nodes().iter().zip(&values) {
            if !v.is_finite() {
                return Err(Error::NonFiniteSample { x: *x, value: *v });
            }
        }
        Ok(GridFunction { grid, values, excluded: None })
    }

    /// Like `new`, but the value at the anchored endpoint of `end` is not
    /// reported (it is set to NaN whatever was passed).
    pub fn with_excluded(grid: Grid, mut values: Vec<f64>, end: Direction) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::LengthMismatch { nodes: grid.len(), values: values.len() });
        }
        let skip = end_index(grid.len(), end);
        values[skip] = f64::NAN;
        for (i, (x, v)) in grid.nodes().iter().zip(&values).enumerate() {
            if i != skip && !v.is_finite() {
                return Err(Error::NonFiniteSample { x: *x, value: *v });
            }
        }
        Ok(GridFunction { grid, values, excluded: Some(end) })
    }

    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>, excluded: Option<Direction>) -> Self {
        GridFunction { grid, values, excluded }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn excluded(&self) -> Option<Direction> {
        self.excluded
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the excluded node, if any.
    pub fn excluded_index(&self) -> Option<usize> {
        self.excluded.map(|d| end_index(self.len(), d))
    }

    /// Piecewise-linear interpolant; zero outside the grid.
    pub fn interp(&self, x: f64) -> f64 {
        let nodes = self.grid.nodes();
        if x < nodes[0] || x > nodes[nodes.len() - 1] || x.is_nan() {
            return 0.0;
        }
        let j = self.grid.locate(x);
        let (x0, x1) = (nodes[j], nodes[j + 1]);
        let (mut v0, mut v1) = (self.values[j], self.values[j + 1]);
        // an excluded endpoint is modelled as constant on its first cell
        if v0.is_nan() {
            v0 = v1;
        }
        if v1.is_nan() {
            v1 = v0;
        }
        let t = (x - x0) / (x1 - x0);
        v0 + (v1 - v0) * t
    }

    /// Pointwise map keeping the excluded marker.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let values = self.nodes().iter().zip(&self.values).map(|(x, v)| f(*x, *v)).collect();
        GridFunction { grid: self.grid.clone(), values, excluded: self.excluded }
    }

    /// Sup norm over reported nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup of |self - other| over reported nodes with `keep(x)` true.
    pub fn sup_diff_where(&self, other: &GridFunction, keep: impl Fn(f64) -> bool) -> f64 {
        let mut m = 0.0f64;
        for (i, x) in self.nodes().iter().enumerate() {
            let (u, v) = (self.values[i], other.values[i]);
            if keep(*x) && u.is_finite() && v.is_finite() {
                m = m.max((u - v).abs());
            }
        }
        m
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wr.write_record(["x", "value"])?;
        for (x, v) in self.nodes().iter().zip(&self.values) {
            wr.write_record([fmt17(*x), fmt17(*v)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<GridFunction> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "value" {
            return Err(Error::Parse(format!("expected header x,value, got {:?}", headers.iter().collect::<Vec<_>>())));
        }
        let (mut xs, mut vs) = (Vec::new(), Vec::new());
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number {s:?}", line + 2)))
            };
            xs.push(parse(&rec[0])?);
            vs.push(parse(&rec[1])?);
        }
        let grid = Grid::from_nodes(xs)?;
        let n = vs.len();
        if vs[0].is_nan() && vs[1..].iter().all(|v| v.is_finite()) {
            GridFunction::with_excluded(grid, vs, Direction::Left)
        } else if vs[n - 1].is_nan() && vs[..n - 1].iter().all(|v| v.is_finite()) {
            GridFunction::with_excluded(grid, vs, Direction::Right)
        } else {
            GridFunction::new(grid, vs)
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<GridFunction> {
        let f = std::fs::File::open(path)?;
        GridFunction::read_csv(std::io::BufReader::new(f))
    }
}

fn end_index(n: usize, end: Direction) -> usize {
    match end {
        Direction::Left => 0,
        Direction::Right => n - 1,
    }
}

/// 17 significant digits, enough to round-trip any f64.
fn fmt17(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn sample(f: impl Fn(f64) -> f64, grid: &Grid) -> Result<GridFunction> {
    let values: Vec<f64> = grid.nodes().iter().map(|&x| f(x)).collect();
    GridFunction::new(grid.clone(), values)
}

/// Samples everywhere except the anchored endpoint of `end`.
pub fn sample_excluding(f: impl Fn(f64) -> f64, grid: &Grid, end: Direction) -> Result<GridFunction> {
    let skip = end_index(grid.len(), end);
    let values: Vec<f64> =
        grid.nodes().iter().enumerate().map(|(i, &x)| if i == skip { f64::NAN } else { f(x) }).collect();
    GridFunction::with_excluded(grid.clone(), values, end)
}

/// Bound on the part of a fractional integral of order sigma cut off by a
/// truncation window: sup|f| X^sigma / Gamma(sigma + 1).
pub fn truncation_tail_bound(sup_f: f64, extent: f64, sigma: f64) -> f64 {
    sup_f * extent.powf(sigma) / gam(sigma + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_and_graded_nodes() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let g = make_grid(iv, 5, GridKind::Uniform).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = make_grid(iv, 3, GridKind::Graded(2.0)).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 1.0]);
        assert_eq!(make_grid(iv, 2, GridKind::Uniform), Err(Error::InvalidCount(2)));
        let inf = Interval::new(f64::NEG_INFINITY, 0.0).unwrap();
        assert_eq!(make_grid(inf, 5, GridKind::Uniform), Err(Error::InfiniteInterval));
        let g = make_grid(inf.truncate(3.0).unwrap(), 4, GridKind::Uniform).unwrap();
        assert_eq!(g.nodes(), &[-3.0, -2.0, -1.0, 0.0]);
    }

    #[test]
    fn symmetric_uniform_grid_is_exactly_antisymmetric() {
        let g = make_grid(Interval::new(-1.3, 1.3).unwrap(), 1001, GridKind::Uniform).unwrap();
        let n = g.len();
        for i in 0..n {
            assert_eq!(g.nodes()[i], -g.nodes()[n - 1 - i]);
        }
    }

    #[test]
    fn sampling() {
        let g = Grid::from_nodes(vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(sample(|x| x * x, &g).unwrap().values(), &[0.0, 0.25, 1.0]);
        assert_eq!(sample(|_| 3.0, &g).unwrap().values(), &[3.0, 3.0, 3.0]);
        match sample(|x| 1.0 / x, &g) {
            Err(Error::NonFiniteSample { x, .. }) => assert_eq!(x, 0.0),
            other => panic!("{other:?}"),
        }
        let k = sample_excluding(|x| 1.0 / x, &g, Direction::Left).unwrap();
        assert!(k.values()[0].is_nan());
        assert_eq!(k.excluded_index(), Some(0));
    }

    #[test]
    fn csv_layout() {
        let g = Grid::from_nodes(vec![0.0, 0.5, 1.0]).unwrap();
        let u = sample(|x| x, &g).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("x,value\n"));
        assert!(!s.contains('\r'));
        assert_eq!(s.lines().count(), 4);
    }

    #[test]
    fn csv_keeps_excluded_endpoint() {
        let g = make_grid(Interval::new(0.0, 1.0).unwrap(), 9, GridKind::Uniform).unwrap();
        let u = sample_excluding(|x| x.powf(-0.5), &g, Direction::Left).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let back = GridFunction::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.excluded(), Some(Direction::Left));
        assert_eq!(back.values()[1..], u.values()[1..]);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(GridFunction::read_csv("x,value\n0,1\n0.5,oops\n1,2\n".as_bytes()).is_err());
        assert!(GridFunction::read_csv("a,b\n0,1\n0.5,1\n1,2\n".as_bytes()).is_err());
        assert!(GridFunction::read_csv("x,value\n0,1\n0.5,inf\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn interp_is_linear() {
        let g = Grid::from_nodes(vec![0.0, 1.0, 3.0]).unwrap();
        let u = GridFunction::new(g, vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(u.interp(0.5), 1.0);
        assert_eq!(u.interp(2.0), 1.0);
        assert_eq!(u.interp(-1.0), 0.0);
    }
}
