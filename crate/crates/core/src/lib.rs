//! Classical and weak fractional calculus in one dimension.

pub mod derivative;
pub mod dist;
pub mod error;
pub mod grid;
pub mod integral;
pub mod quad;
pub mod report;
pub mod rules;
pub mod special;
pub mod suites;
pub mod weak;

pub use error::{Error, Result};
pub use grid::{make_grid, sample, Grid, GridFunction, GridKind, Interval};
pub use special::{gamma, kappa, Direction, FracOrder, KernelSpec};
