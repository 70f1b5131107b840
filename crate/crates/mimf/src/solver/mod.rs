//! Embedded LP/MILP solving: primal simplex with dual re-optimization
//! inside a best-bound branch-and-bound, plus the LP-gap metric.

mod branch_bound;
mod simplex;

pub use branch_bound::{solve_milp, MilpOptions};

use std::time::Instant;

use crate::model::LinearModel;
use simplex::{LpStatus, Simplex};

/// Solver outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
    IterLimit,
}

/// Outcome of an LP or MILP solve.
///
/// `point` is populated for Optimal results (and for NodeLimit when an
/// incumbent exists); `best_bound` is the proven bound on the optimum,
/// which for Optimal results equals the objective.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: f64,
    pub point: Vec<f64>,
    pub lp_iterations: u64,
    pub bb_nodes: u64,
    pub wall_time: f64,
    pub best_bound: f64,
}

/// Row duals and reduced costs taken from the final simplex basis,
/// together with a dual objective evaluated independently from the
/// original data.
#[derive(Clone, Debug)]
pub struct LpDuals {
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub dual_objective: f64,
}

/// Solves the continuous relaxation of the model (binaries relaxed to
/// their bounds).
pub fn solve_lp(model: &LinearModel) -> SolveResult {
    solve_lp_with_duals(model).0
}

/// Like [`solve_lp`] but also returns dual information for Optimal results.
pub fn solve_lp_with_duals(model: &LinearModel) -> (SolveResult, Option<LpDuals>) {
    let start = Instant::now();
    let mut sx = Simplex::from_model(model);
    let status = sx.primal_solve();
    let wall = start.elapsed().as_secs_f64();
    match status {
        LpStatus::Optimal => {
            let objective = sx.objective_value(model);
            let point = sx.extract_point();
            let (row_duals, reduced_costs, dual_objective) = sx.extract_duals(model);
            (
                SolveResult {
                    status: SolveStatus::Optimal,
                    objective,
                    point,
                    lp_iterations: sx.iterations,
                    bb_nodes: 0,
                    wall_time: wall,
                    best_bound: objective,
                },
                Some(LpDuals {
                    row_duals,
                    reduced_costs,
                    dual_objective,
                }),
            )
        }
        other => (
            SolveResult {
                status: match other {
                    LpStatus::Infeasible => SolveStatus::Infeasible,
                    LpStatus::Unbounded => SolveStatus::Unbounded,
                    _ => SolveStatus::IterLimit,
                },
                objective: f64::NAN,
                point: Vec::new(),
                lp_iterations: sx.iterations,
                bb_nodes: 0,
                wall_time: wall,
                best_bound: f64::NAN,
            },
            None,
        ),
    }
}

/// LP gap in percent: `(opt - lb) / opt * 100`.
///
/// Undefined for `opt == 0`; reported as NaN so downstream tables show a
/// distinguished value rather than a misleading number.
pub fn lp_gap(opt: f64, lb: f64) -> f64 {
    if opt == 0.0 {
        return f64::NAN;
    }
    (opt - lb) / opt * 100.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinearExpr, LinearModel, Sense, VarKind};

    #[test]
    fn minimal_lp() {
        // min x s.t. x >= 3, x in [0, 10]
        let mut m = LinearModel::minimize("t");
        let x = m.add_variable("x", 0.0, 10.0, VarKind::Continuous).unwrap();
        m.add_constraint(LinearExpr::term(x, 1.0), Sense::Ge, 3.0, "c")
            .unwrap();
        m.set_objective(LinearExpr::term(x, 1.0)).unwrap();
        let r = solve_lp(&m);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-9);
        assert!((r.point[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_pair() {
        let mut m = LinearModel::minimize("t");
        let x = m.add_variable("x", 0.0, 10.0, VarKind::Continuous).unwrap();
        m.add_constraint(LinearExpr::term(x, 1.0), Sense::Le, 1.0, "c1")
            .unwrap();
        m.add_constraint(LinearExpr::term(x, 1.0), Sense::Ge, 2.0, "c2")
            .unwrap();
        let r = solve_lp(&m);
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut m = LinearModel::maximize("t");
        let x = m
            .add_variable("x", 0.0, f64::INFINITY, VarKind::Continuous)
            .unwrap();
        m.set_objective(LinearExpr::term(x, 1.0)).unwrap();
        let r = solve_lp(&m);
        assert_eq!(r.status, SolveStatus::Unbounded);
    }

    #[test]
    fn equality_rows_and_maximization() {
        // max 3a + 2b s.t. a + b = 4, a - b <= 2, a, b in [0, 10]
        // At optimum a - b = 2 and a + b = 4 -> a = 3, b = 1, obj = 11.
        let mut m = LinearModel::maximize("t");
        let a = m.add_variable("a", 0.0, 10.0, VarKind::Continuous).unwrap();
        let b = m.add_variable("b", 0.0, 10.0, VarKind::Continuous).unwrap();
        let mut e = LinearExpr::new();
        e.add_term(a, 1.0).add_term(b, 1.0);
        m.add_constraint(e, Sense::Eq, 4.0, "sum").unwrap();
        let mut e = LinearExpr::new();
        e.add_term(a, 1.0).add_term(b, -1.0);
        m.add_constraint(e, Sense::Le, 2.0, "diff").unwrap();
        let mut obj = LinearExpr::new();
        obj.add_term(a, 3.0).add_term(b, 2.0);
        m.set_objective(obj).unwrap();
        let r = solve_lp(&m);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 11.0).abs() < 1e-8);
    }

    #[test]
    fn duality_holds_at_optimum() {
        let mut m = LinearModel::minimize("t");
        let x = m.add_variable("x", 0.0, 10.0, VarKind::Continuous).unwrap();
        let y = m.add_variable("y", 0.0, 10.0, VarKind::Continuous).unwrap();
        let mut e = LinearExpr::new();
        e.add_term(x, 1.0).add_term(y, 2.0);
        m.add_constraint(e, Sense::Ge, 4.0, "c1").unwrap();
        let mut e = LinearExpr::new();
        e.add_term(x, 3.0).add_term(y, 1.0);
        m.add_constraint(e, Sense::Ge, 6.0, "c2").unwrap();
        let mut obj = LinearExpr::new();
        obj.add_term(x, 2.0).add_term(y, 3.0);
        m.set_objective(obj).unwrap();
        let (r, duals) = solve_lp_with_duals(&m);
        assert_eq!(r.status, SolveStatus::Optimal);
        let duals = duals.unwrap();
        assert!(
            (duals.dual_objective - r.objective).abs() <= 1e-6 * (1.0 + r.objective.abs()),
            "primal {} vs dual {}",
            r.objective,
            duals.dual_objective
        );
    }

    #[test]
    fn gap_formula() {
        assert!((lp_gap(100.0, 97.0) - 3.0).abs() < 1e-12);
        assert_eq!(lp_gap(50.0, 50.0), 0.0);
        assert!(lp_gap(0.0, 1.0).is_nan());
        // Table-style consistency: opt 366.0 at a 3.1% gap puts the bound
        // near 354.654.
        let lb = 366.0 * (1.0 - 3.1 / 100.0);
        assert!((lp_gap(366.0, lb) - 3.1).abs() < 1e-9);
        assert!((lb - 354.654).abs() < 1e-9);
    }
}
