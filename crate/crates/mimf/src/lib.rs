//! Polyhedral relaxations for mixed-integer multilinear functions.
//!
//! A mixed-integer multilinear function (MIMF) is a product of box-bounded
//! continuous variables and 0-1 variables. This crate builds the classical
//! building blocks (McCormick envelopes, Fortet linearization, the
//! extreme-point lambda formulation) and two disjunctive convex-hull
//! relaxations of a full MIMF in an extended variable space, one based on
//! extreme points and one based on recursive McCormick envelopes. It ships
//! with an embedded bounded-simplex LP solver and branch-and-bound, a
//! brute-force hull oracle for empirical verification, a benchmark harness
//! for a family of random MINLPs, and MPS/JSON file formats behind a CLI.
//!
//! ```
//! use mimf::model::{LinearModel, VarKind};
//! use mimf::relax::{build_f_lambda, MimfTerm};
//! use mimf::solver::solve_lp;
//!
//! let mut m = LinearModel::minimize("example");
//! let x1 = m.add_variable("x1", 1.0, 2.0, VarKind::Continuous).unwrap();
//! let x2 = m.add_variable("x2", 1.0, 2.0, VarKind::Continuous).unwrap();
//! let z = m.add_variable("z", 0.0, 1.0, VarKind::Binary).unwrap();
//! let term = MimfTerm::new(vec![x1, x2], vec![(1.0, 2.0); 2], vec![z]).unwrap();
//! let handle = build_f_lambda(&mut m, &term).unwrap();
//! m.set_objective(mimf::model::LinearExpr::term(handle.phi_hat, 1.0)).unwrap();
//! let result = solve_lp(&m);
//! assert_eq!(result.status, mimf::solver::SolveStatus::Optimal);
//! ```

pub mod bench;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod relax;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
