//! Linear boundary value problems `y' = A(t; eps) y + f(t; eps)`,
//! `U_eps y = c_eps` with Stieltjes-measure boundary operators, their Green
//! matrices, and parameter sweeps that measure how solutions and Green
//! matrices converge as `eps -> 0`.

pub mod boundary;
pub mod cli;
pub mod config;
pub mod error;
pub mod green;
pub mod lab;
pub mod linalg;
pub mod ode;
pub mod quadrature;
pub mod registry;
pub mod report;

pub use boundary::{Atom, BoundaryMeasure, HTransform};
pub use error::{Error, Result};
pub use green::{check_wellposed, green_apply, green_matrix, solve_bvp, BVProblem, GreenMatrix};
pub use lab::{run_sweep, FamilyScenario, SweepSettings};
pub use linalg::{AbsNorm, CMat, CVec, C64};
pub use ode::{CoeffFn, Func, Interval, Matrizant, VecFn};
pub use report::ConvergenceReport;
