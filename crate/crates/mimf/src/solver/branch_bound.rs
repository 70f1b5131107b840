//! Best-bound branch-and-bound over the bounded simplex.
//!
//! Branching picks the most-fractional binary (ties to the lowest id) and
//! dives first into the child that fixes the variable toward its nearest
//! integer. Node LPs re-use the previous basis through dual
//! re-optimization, since bound changes keep the basis dual feasible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::simplex::{LpStatus, Simplex};
use super::{SolveResult, SolveStatus};
use crate::model::{LinearModel, ObjSense, VarId, INTEGRALITY_TOL};


/// Branch-and-bound limits.
#[derive(Clone, Copy, Debug)]
pub struct MilpOptions {
    pub node_limit: u64,
    /// Relative incumbent/bound gap at which the search stops as Optimal.
    pub rel_gap_tol: f64,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            node_limit: 100_000,
            rel_gap_tol: 1e-6,
        }
    }
}

struct Node {
    bound: f64,
    id: u64,
    fixings: Vec<(u32, bool)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap pops the "greatest" node: prefer the smallest bound,
        // then the most recently created node (dive on ties).
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then(self.id.cmp(&other.id))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn fractionality(v: f64) -> f64 {
    v.abs().min((v - 1.0).abs())
}

/// Deterministic rounding heuristic: fix the free binaries to roundings
/// of the node LP point (0.5 threshold, then round-up) and solve what
/// remains. With `trim` set, a greedy pass then tries switching the
/// costliest on-binaries off one at a time, keeping improvements.
/// Restores the node's own fixings before returning.
#[allow(clippy::too_many_arguments)]
fn rounding_heuristic(
    sx: &mut Simplex,
    model: &LinearModel,
    binaries: &[VarId],
    orig_bounds: &[(f64, f64)],
    applied: &[(u32, bool)],
    point: &[f64],
    trim: bool,
) -> Option<(f64, Vec<f64>)> {
    let sign = if model.obj_sense() == ObjSense::Max {
        -1.0
    } else {
        1.0
    };
    let is_applied = |ord: usize| applied.iter().find(|(o, _)| *o as usize == ord);
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for threshold in [0.5, 1e-6] {
        let assign: Vec<f64> = binaries
            .iter()
            .enumerate()
            .map(|(ord, &b)| match is_applied(ord) {
                Some((_, up)) => f64::from(*up),
                None => f64::from(point[b.index()] >= threshold),
            })
            .collect();
        for (ord, &b) in binaries.iter().enumerate() {
            sx.set_var_bounds(b.index(), assign[ord], assign[ord]);
        }
        if sx.dual_reoptimize() == LpStatus::Optimal {
            let obj = sx.objective_min_form(model);
            if best.as_ref().map_or(true, |(b, _, _)| obj < *b) {
                best = Some((obj, sx.extract_point(), assign));
            }
        }
    }
    if trim {
        if let Some((mut bobj, mut bpoint, mut assign)) = best.take() {
            for (ord, &b) in binaries.iter().enumerate() {
                sx.set_var_bounds(b.index(), assign[ord], assign[ord]);
            }
            let coef = |b: VarId| sign * model.objective().coefficient(b);
            let mut order: Vec<usize> = (0..binaries.len())
                .filter(|&o| {
                    is_applied(o).is_none() && assign[o] == 1.0 && coef(binaries[o]) > 0.0
                })
                .collect();
            order.sort_by(|&a, &b| {
                coef(binaries[b])
                    .partial_cmp(&coef(binaries[a]))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            for o in order {
                sx.set_var_bounds(binaries[o].index(), 0.0, 0.0);
                let improved = sx.dual_reoptimize() == LpStatus::Optimal && {
                    let obj = sx.objective_min_form(model);
                    if obj < bobj - 1e-12 {
                        bobj = obj;
                        bpoint = sx.extract_point();
                        true
                    } else {
                        false
                    }
                };
                if improved {
                    assign[o] = 0.0;
                } else {
                    sx.set_var_bounds(binaries[o].index(), 1.0, 1.0);
                }
            }
            best = Some((bobj, bpoint, assign));
        }
    }
    // Back to the node's own subproblem bounds.
    for (ord, &b) in binaries.iter().enumerate() {
        match is_applied(ord) {
            Some((_, up)) => {
                let v = f64::from(*up);
                sx.set_var_bounds(b.index(), v, v);
            }
            None => {
                let (lo, hi) = orig_bounds[ord];
                sx.set_var_bounds(b.index(), lo, hi);
            }
        }
    }
    best.map(|(obj, point, _)| (obj, point))
}

/// Solves a mixed-binary model to optimality (within the relative gap
/// tolerance) or until the node limit is hit, in which case the best
/// incumbent and proven bound are returned with status NodeLimit.
pub fn solve_milp(model: &LinearModel, opts: &MilpOptions) -> SolveResult {
    let start = Instant::now();
    let sign = if model.obj_sense() == ObjSense::Max {
        -1.0
    } else {
        1.0
    };
    let binaries: Vec<VarId> = model.binary_ids();
    let orig_bounds: Vec<(f64, f64)> = binaries
        .iter()
        .map(|&b| {
            let v = model.variable(b);
            (v.lower, v.upper)
        })
        .collect();

    let trace = std::env::var("MIMF_BB_TRACE").is_ok();
    let mut sx = Simplex::from_model(model);
    let mut nodes: u64 = 1;
    let root = sx.primal_solve();
    let done = |status, objective: f64, point, best_bound, sx: &Simplex, nodes| SolveResult {
        status,
        objective,
        point,
        lp_iterations: sx.iterations,
        bb_nodes: nodes,
        wall_time: start.elapsed().as_secs_f64(),
        best_bound,
    };
    match root {
        LpStatus::Infeasible => {
            return done(
                SolveStatus::Infeasible,
                f64::NAN,
                Vec::new(),
                f64::NAN,
                &sx,
                nodes,
            )
        }
        LpStatus::Unbounded => {
            return done(
                SolveStatus::Unbounded,
                f64::NAN,
                Vec::new(),
                f64::NAN,
                &sx,
                nodes,
            )
        }
        LpStatus::IterLimit => {
            return done(
                SolveStatus::IterLimit,
                f64::NAN,
                Vec::new(),
                f64::NAN,
                &sx,
                nodes,
            )
        }
        LpStatus::Optimal => {}
    }

    let mut orig_bounds = orig_bounds;
    let mut incumbent: Option<(f64, Vec<f64>)> = None; // (min-form objective, point)
    let gap_closed = |inc: f64, bound: f64| (inc - bound) <= opts.rel_gap_tol * inc.abs().max(1.0);

    let mut root_obj = sx.objective_min_form(model);
    let root_point = sx.extract_point();
    let root_integral = binaries
        .iter()
        .all(|&b| fractionality(root_point[b.index()]) <= INTEGRALITY_TOL);
    if root_integral {
        return done(
            SolveStatus::Optimal,
            sign * root_obj,
            root_point,
            sign * root_obj,
            &sx,
            nodes,
        );
    }

    // Root incumbent from the rounding heuristic, then reduced-cost
    // fixing: a nonbasic binary whose reduced cost already lifts the root
    // bound past the incumbent can be fixed to its bound for the whole
    // tree (no better solution can sit on the other side).
    let mut root_rc: Vec<Option<(f64, bool)>> = binaries
        .iter()
        .map(|&b| sx.structural_reduced_cost(b.index()))
        .collect();
    if trace {
        eprintln!("bb: root solved ({} iters), starting heuristic", sx.iterations);
    }
    if let Some((hobj, hpoint)) =
        rounding_heuristic(&mut sx, model, &binaries, &orig_bounds, &[], &root_point, true)
    {
        if trace {
            eprintln!("bb: heuristic incumbent {} ({} iters)", sign * hobj, sx.iterations);
        }
        incumbent = Some((hobj, hpoint));
    }
    let mut needs_resolve = true; // the heuristic left its own basis behind
    for _round in 0..3 {
        let Some((inc, _)) = incumbent.as_ref() else {
            break;
        };
        let inc = *inc;
        let mut fixed_any = false;
        for (ord, &b) in binaries.iter().enumerate() {
            let (lo, hi) = orig_bounds[ord];
            if lo == hi {
                continue;
            }
            if let Some((d, at_upper)) = root_rc[ord] {
                if !at_upper && d > 0.0 && root_obj + d >= inc - 1e-12 {
                    orig_bounds[ord] = (0.0, 0.0);
                    sx.set_var_bounds(b.index(), 0.0, 0.0);
                    fixed_any = true;
                } else if at_upper && d < 0.0 && root_obj - d >= inc - 1e-12 {
                    orig_bounds[ord] = (1.0, 1.0);
                    sx.set_var_bounds(b.index(), 1.0, 1.0);
                    fixed_any = true;
                }
            }
        }
        if !fixed_any && !needs_resolve {
            break;
        }
        match sx.dual_reoptimize() {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                // The fixes only exclude solutions no better than the
                // incumbent, so the incumbent is optimal.
                let (obj, point) = incumbent.take().unwrap();
                return done(SolveStatus::Optimal, sign * obj, point, sign * obj, &sx, nodes);
            }
            _ => break,
        }
        needs_resolve = false;
        root_obj = sx.objective_min_form(model);
        if gap_closed(inc, root_obj) {
            let (obj, point) = incumbent.take().unwrap();
            return done(
                SolveStatus::Optimal,
                sign * obj,
                point,
                sign * root_obj,
                &sx,
                nodes,
            );
        }
        let point = sx.extract_point();
        if binaries
            .iter()
            .all(|&b| fractionality(point[b.index()]) <= INTEGRALITY_TOL)
        {
            // Restricted root is integral; the better of it and the
            // incumbent is optimal.
            if root_obj < inc {
                return done(
                    SolveStatus::Optimal,
                    sign * root_obj,
                    point,
                    sign * root_obj,
                    &sx,
                    nodes,
                );
            }
            let (obj, ipoint) = incumbent.take().unwrap();
            return done(SolveStatus::Optimal, sign * obj, ipoint, sign * obj, &sx, nodes);
        }
        root_rc = binaries
            .iter()
            .map(|&b| sx.structural_reduced_cost(b.index()))
            .collect();
        if !fixed_any {
            break;
        }
    }
    if needs_resolve {
        // No incumbent was found; bring the simplex back to the root.
        if sx.dual_reoptimize() != LpStatus::Optimal {
            return done(
                SolveStatus::IterLimit,
                f64::NAN,
                Vec::new(),
                sign * root_obj,
                &sx,
                nodes,
            );
        }
        root_obj = sx.objective_min_form(model);
    }

    let mut next_id: u64 = 0;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    // Nearest-integer child of the node just branched: processed next,
    // so the search dives depth-first until a dive ends, then falls back
    // to the best-bound heap.
    let mut pending: Option<Node> = None;
    // Fixings currently applied to the simplex; nodes are applied by
    // prefix diff so a dive step changes a single bound.
    let mut applied: Vec<(u32, bool)> = Vec::new();

    heap.push(Node {
        bound: root_obj,
        id: next_id,
        fixings: Vec::new(),
    });
    next_id += 1;
    let mut first = true;

    let final_result = loop {
        let (node, from_heap) = match pending.take() {
            Some(n) => (n, false),
            None => match heap.pop() {
                Some(n) => (n, true),
                None => {
                    // Tree exhausted.
                    break match incumbent.take() {
                        Some((obj, point)) => {
                            done(SolveStatus::Optimal, sign * obj, point, sign * obj, &sx, nodes)
                        }
                        None => done(
                            SolveStatus::Infeasible,
                            f64::NAN,
                            Vec::new(),
                            f64::NAN,
                            &sx,
                            nodes,
                        ),
                    };
                }
            },
        };
        // The proven global bound is the minimum over every open node.
        let global_bound = heap
            .peek()
            .map_or(node.bound, |top| node.bound.min(top.bound));
        if let Some((inc, _)) = &incumbent {
            if from_heap && gap_closed(*inc, global_bound) {
                let (obj, point) = incumbent.take().unwrap();
                break done(
                    SolveStatus::Optimal,
                    sign * obj,
                    point,
                    sign * global_bound,
                    &sx,
                    nodes,
                );
            }
            if gap_closed(*inc, node.bound) {
                continue; // this node alone cannot improve the incumbent
            }
        }
        if nodes >= opts.node_limit {
            let (obj, point) = match incumbent.take() {
                Some((o, p)) => (sign * o, p),
                None => (f64::NAN, Vec::new()),
            };
            break done(
                SolveStatus::NodeLimit,
                obj,
                point,
                sign * global_bound,
                &sx,
                nodes,
            );
        }

        let status = if first {
            first = false;
            LpStatus::Optimal // root LP is already solved
        } else {
            let prefix = applied
                .iter()
                .zip(&node.fixings)
                .take_while(|(a, b)| a == b)
                .count();
            let diff = (applied.len() - prefix) + (node.fixings.len() - prefix);
            for &(ord, _) in &applied[prefix..] {
                let (lo, hi) = orig_bounds[ord as usize];
                sx.set_var_bounds(binaries[ord as usize].index(), lo, hi);
            }
            for &(ord, up) in &node.fixings[prefix..] {
                let v = f64::from(up);
                sx.set_var_bounds(binaries[ord as usize].index(), v, v);
            }
            applied.clear();
            applied.extend_from_slice(&node.fixings);
            nodes += 1;
            if trace && nodes % 500 == 0 {
                eprintln!(
                    "bb: {} nodes, incumbent {:?}, bound {:.6}",
                    nodes,
                    incumbent.as_ref().map(|(o, _)| sign * o),
                    sign * global_bound
                );
            }
            // Re-optimizing dually across a distant jump costs about as
            // much as solving fresh; only dive-sized diffs warm-start.
            if diff > 16 {
                sx.primal_solve()
            } else {
                sx.dual_reoptimize()
            }
        };
        match status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => continue, // cannot happen under tightened bounds
            LpStatus::IterLimit => {
                let (obj, point) = match incumbent.take() {
                    Some((o, p)) => (sign * o, p),
                    None => (f64::NAN, Vec::new()),
                };
                break done(
                    SolveStatus::IterLimit,
                    obj,
                    point,
                    sign * global_bound,
                    &sx,
                    nodes,
                );
            }
            LpStatus::Optimal => {}
        }
        let obj = sx.objective_min_form(model);
        if let Some((inc, _)) = &incumbent {
            if gap_closed(*inc, obj) {
                continue; // prune by bound
            }
        }
        let point = sx.extract_point();
        // Most fractional binary, lowest id on ties.
        let mut branch: Option<(usize, f64)> = None;
        for (ord, &b) in binaries.iter().enumerate() {
            let f = fractionality(point[b.index()]);
            if f > INTEGRALITY_TOL && branch.map_or(true, |(_, bf)| f > bf) {
                branch = Some((ord, f));
            }
        }
        match branch {
            None => {
                // Integral: candidate incumbent.
                if incumbent.as_ref().map_or(true, |(inc, _)| obj < *inc) {
                    incumbent = Some((obj, point));
                }
            }
            Some((ord, _)) => {
                // A strong incumbent early makes the bound pruning bite;
                // refresh it occasionally as the tree tightens.
                if nodes % 64 == 0 {
                    if let Some((hobj, hpoint)) = rounding_heuristic(
                        &mut sx,
                        model,
                        &binaries,
                        &orig_bounds,
                        &applied,
                        &point,
                        false,
                    ) {
                        if incumbent.as_ref().map_or(true, |(inc, _)| hobj < *inc) {
                            incumbent = Some((hobj, hpoint));
                        }
                    }
                }
                let v = point[binaries[ord].index()];
                let nearest_up = v >= 0.5;
                let mut away = node.fixings.clone();
                away.push((ord as u32, !nearest_up));
                heap.push(Node {
                    bound: obj,
                    id: next_id,
                    fixings: away,
                });
                next_id += 1;
                let mut near = node.fixings;
                near.push((ord as u32, nearest_up));
                pending = Some(Node {
                    bound: obj,
                    id: next_id,
                    fixings: near,
                });
                next_id += 1;
            }
        }
    };
    final_result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinearExpr, LinearModel, Sense, VarKind};
    use crate::rng::Xorshift64Star;
    use crate::solver::{solve_lp, SolveStatus};

    fn knapsack_toy() -> LinearModel {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 4, binaries
        let mut m = LinearModel::maximize("knap");
        let a = m.add_variable("a", 0.0, 1.0, VarKind::Binary).unwrap();
        let b = m.add_variable("b", 0.0, 1.0, VarKind::Binary).unwrap();
        let c = m.add_variable("c", 0.0, 1.0, VarKind::Binary).unwrap();
        let mut e = LinearExpr::new();
        e.add_term(a, 2.0).add_term(b, 3.0).add_term(c, 1.0);
        m.add_constraint(e, Sense::Le, 4.0, "cap").unwrap();
        let mut obj = LinearExpr::new();
        obj.add_term(a, 5.0).add_term(b, 4.0).add_term(c, 3.0);
        m.set_objective(obj).unwrap();
        m
    }

    /// Exhaustive enumeration over binary assignments, solving the LP that
    /// remains after fixing. Independent of the branch-and-bound path.
    pub(crate) fn enumerate_binaries_oracle(model: &LinearModel) -> Option<f64> {
        let binaries = model.binary_ids();
        let nb = binaries.len();
        let mut best: Option<f64> = None;
        for mask in 0u64..(1u64 << nb) {
            let mut fixed = model.clone();
            for (i, &b) in binaries.iter().enumerate() {
                let v = if mask >> i & 1 == 1 { 1.0 } else { 0.0 };
                fixed.set_bounds(b, v, v).unwrap();
            }
            let r = solve_lp(&fixed);
            if r.status == SolveStatus::Optimal {
                let better = match (model.obj_sense(), best) {
                    (_, None) => true,
                    (crate::model::ObjSense::Min, Some(b)) => r.objective < b,
                    (crate::model::ObjSense::Max, Some(b)) => r.objective > b,
                };
                if better {
                    best = Some(r.objective);
                }
            }
        }
        best
    }

    #[test]
    fn knapsack_matches_enumeration() {
        let m = knapsack_toy();
        let oracle = enumerate_binaries_oracle(&m).unwrap();
        let r = solve_milp(&m, &MilpOptions::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - oracle).abs() < 1e-6);
        // a + c fits (weight 3) for 8; every heavier pick is worse or infeasible.
        assert!((oracle - 8.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_binaries_solve_in_one_node() {
        let mut m = LinearModel::minimize("t");
        let z = m.add_variable("z", 0.0, 1.0, VarKind::Binary).unwrap();
        let x = m.add_variable("x", 0.0, 5.0, VarKind::Continuous).unwrap();
        // z forced to 1 by a constraint; objective pulls x to z.
        m.add_constraint(LinearExpr::term(z, 1.0), Sense::Ge, 1.0, "fix")
            .unwrap();
        let mut e = LinearExpr::new();
        e.add_term(x, 1.0).add_term(z, -1.0);
        m.add_constraint(e, Sense::Ge, 0.0, "link").unwrap();
        m.set_objective(LinearExpr::term(x, 1.0)).unwrap();
        let r = solve_milp(&m, &MilpOptions::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.bb_nodes, 1);
        let lp = solve_lp(&m);
        assert!((r.objective - lp.objective).abs() < 1e-9);
    }

    #[test]
    fn random_milps_match_enumeration() {
        let mut rng = Xorshift64Star::new(2024);
        for trial in 0..12 {
            let nb = 2 + rng.below(5); // up to 6 binaries here; the acceptance suite goes to 12
            let nc = 1 + rng.below(4);
            let mut m = if rng.flip() {
                LinearModel::minimize("r")
            } else {
                LinearModel::maximize("r")
            };
            let mut vars = Vec::new();
            for i in 0..nb {
                vars.push(m.add_variable(&format!("z{i}"), 0.0, 1.0, VarKind::Binary).unwrap());
            }
            for i in 0..nc {
                vars.push(
                    m.add_variable(&format!("x{i}"), 0.0, rng.range(1.0, 4.0), VarKind::Continuous)
                        .unwrap(),
                );
            }
            let nrows = 2 + rng.below(4);
            for r in 0..nrows {
                let mut e = LinearExpr::new();
                for &v in &vars {
                    if rng.uniform() < 0.7 {
                        e.add_term(v, rng.range(-2.0, 3.0));
                    }
                }
                if e.is_empty() {
                    continue;
                }
                let sense = if rng.flip() { Sense::Le } else { Sense::Ge };
                m.add_constraint(e, sense, rng.range(-1.0, 4.0), &format!("c{r}"))
                    .unwrap();
            }
            let mut obj = LinearExpr::new();
            for &v in &vars {
                obj.add_term(v, rng.range(-2.0, 2.0));
            }
            m.set_objective(obj).unwrap();

            let oracle = enumerate_binaries_oracle(&m);
            let r = solve_milp(&m, &MilpOptions::default());
            match oracle {
                None => assert_eq!(
                    r.status,
                    SolveStatus::Infeasible,
                    "trial {trial}: oracle says infeasible"
                ),
                Some(best) => {
                    assert_eq!(r.status, SolveStatus::Optimal, "trial {trial}");
                    assert!(
                        (r.objective - best).abs() <= 1e-6 * (1.0 + best.abs()),
                        "trial {trial}: bb {} vs oracle {}",
                        r.objective,
                        best
                    );
                }
            }
        }
    }

    #[test]
    fn node_limit_returns_incumbent_and_bound() {
        let m = knapsack_toy();
        let r = solve_milp(
            &m,
            &MilpOptions {
                node_limit: 1,
                rel_gap_tol: 1e-6,
            },
        );
        // Either the root already proves optimality or we stop at the limit.
        if r.status == SolveStatus::NodeLimit {
            assert!(r.best_bound.is_finite());
        }
    }
}
