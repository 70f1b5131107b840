//! Brute-force ground truth for the disjunctive relaxations: vertex
//! enumeration of the term's graph, convex-membership LP tests, the
//! constructive decompositions behind the two hull theorems, and an
//! empirical probe of the projection conjecture.
//!
//! The disjunct membership checks here are written straight from the set
//! definitions and never consult the formulation builders, so they stay an
//! independent check on what the builders produce.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{LinearExpr, LinearModel, ObjSense, Sense, VarKind};
use crate::relax::{
    build_f_lambda, enumerate_extreme_points, MimfTerm, RelaxationHandle,
};
use crate::rng::Xorshift64Star;
use crate::solver::{solve_lp, SolveStatus};

/// Size guard for full graph enumeration.
const MAX_GRAPH_FACTORS: usize = 16;
/// Size guard for the conjecture probe.
const MAX_CONJECTURE_FACTORS: usize = 10;

/// One vertex of the term's graph: a box corner, a binary assignment, and
/// the exact product value.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphVertex {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub phi: f64,
}

impl GraphVertex {
    /// Stacked coordinates (x, z, phi) used by the membership tests.
    pub fn stacked(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.extend_from_slice(&self.z);
        v.push(self.phi);
        v
    }
}

/// Full coordinates of a point in one of the lifted formulations:
/// `lifted` holds the lambda weights for the extreme-point formulation or
/// the xz lifts for the recursive-McCormick one.
#[derive(Clone, Debug, PartialEq)]
pub struct HullPoint {
    pub x: Vec<f64>,
    pub phi_hat: f64,
    pub lifted: Vec<f64>,
    pub z: Vec<f64>,
    pub z_hat: f64,
}

impl HullPoint {
    /// Reads the formulation coordinates out of a solver point for an
    /// extreme-point handle.
    pub fn from_f_lambda(point: &[f64], term: &MimfTerm, handle: &RelaxationHandle) -> Self {
        Self {
            x: term.continuous().iter().map(|v| point[v.index()]).collect(),
            phi_hat: point[handle.phi_hat.index()],
            lifted: handle.lambdas.iter().map(|v| point[v.index()]).collect(),
            z: term.binaries().iter().map(|v| point[v.index()]).collect(),
            z_hat: handle.z_hat.map_or(1.0, |v| point[v.index()]),
        }
    }

    /// Reads the effective bilinear coordinates out of a solver point for
    /// a recursive-McCormick handle (x holds the two effective factors).
    pub fn from_f_rmc(point: &[f64], term: &MimfTerm, handle: &RelaxationHandle) -> Self {
        Self {
            x: handle
                .effective_factors
                .iter()
                .map(|v| point[v.index()])
                .collect(),
            phi_hat: point[handle.phi_hat.index()],
            lifted: handle.xz_lifted.iter().map(|v| point[v.index()]).collect(),
            z: term.binaries().iter().map(|v| point[v.index()]).collect(),
            z_hat: handle.z_hat.map_or(1.0, |v| point[v.index()]),
        }
    }

    fn coordinates(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.push(self.phi_hat);
        v.extend_from_slice(&self.lifted);
        v.extend_from_slice(&self.z);
        v.push(self.z_hat);
        v
    }

    /// Infinity-norm distance between two points with equal layout.
    pub fn max_residual(&self, other: &HullPoint) -> f64 {
        self.coordinates()
            .iter()
            .zip(other.coordinates())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Convex combination `(1 - w) * p0 + w * p1`.
    pub fn combine(p0: &HullPoint, p1: &HullPoint, w: f64) -> HullPoint {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter()
                .zip(b)
                .map(|(x0, x1)| (1.0 - w) * x0 + w * x1)
                .collect()
        };
        HullPoint {
            x: mix(&p0.x, &p1.x),
            phi_hat: (1.0 - w) * p0.phi_hat + w * p1.phi_hat,
            lifted: mix(&p0.lifted, &p1.lifted),
            z: mix(&p0.z, &p1.z),
            z_hat: (1.0 - w) * p0.z_hat + w * p1.z_hat,
        }
    }
}

/// Which disjunct a trivial decomposition landed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Disjunct {
    Off,
    On,
}

/// Result of a theorem decomposition.
#[derive(Clone, Debug)]
pub enum Decomposition {
    /// `z_hat` was already integral; the point itself lies in a disjunct.
    Trivial { disjunct: Disjunct },
    /// `point = (1 - weight) * p0 + weight * p1` with `p0` in the off
    /// disjunct and `p1` in the on disjunct.
    Split {
        p0: HullPoint,
        p1: HullPoint,
        weight: f64,
    },
}

/// All `2^(|I|+|J|)` graph vertices, box corners crossed with binary
/// assignments, in binary-counting order (x bits first, LSB on the first
/// variable).
pub fn graph_vertices(term: &MimfTerm) -> Result<Vec<GraphVertex>> {
    let ni = term.ni();
    let nj = term.nj();
    if ni + nj > MAX_GRAPH_FACTORS {
        return Err(Error::SizeGuard {
            limit: MAX_GRAPH_FACTORS,
            got: ni + nj,
        });
    }
    let corners = if ni == 0 {
        vec![crate::relax::ExtremePoint {
            coordinates: Vec::new(),
            product_value: 1.0,
        }]
    } else {
        enumerate_extreme_points(term.bounds())?
    };
    let mut out = Vec::with_capacity(corners.len() << nj);
    for zmask in 0u64..(1u64 << nj) {
        let z: Vec<f64> = (0..nj).map(|j| f64::from(zmask >> j & 1 == 1)).collect();
        let zprod: f64 = z.iter().product();
        for c in &corners {
            out.push(GraphVertex {
                x: c.coordinates.clone(),
                z: z.clone(),
                phi: c.product_value * zprod,
            });
        }
    }
    Ok(out)
}

/// Minimal infinity-norm slack with which `point` can be written as a
/// convex combination of `vertices` (a feasibility LP with slack
/// minimization).
pub fn membership_slack(point: &[f64], vertices: &[Vec<f64>]) -> Result<f64> {
    if vertices.is_empty() {
        return Err(Error::EmptyVertexSet);
    }
    let dim = point.len();
    for v in vertices {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let mut m = LinearModel::new("membership", ObjSense::Min);
    let lams: Vec<_> = (0..vertices.len())
        .map(|k| m.add_variable(&format!("l{k}"), 0.0, 1.0, VarKind::Continuous))
        .collect::<Result<_>>()?;
    let slack = m.add_variable("s", 0.0, f64::INFINITY, VarKind::Continuous)?;
    let mut sum = LinearExpr::new();
    for &l in &lams {
        sum.add_term(l, 1.0);
    }
    m.add_constraint(sum, Sense::Eq, 1.0, "simplex")?;
    for d in 0..dim {
        let mut lo = LinearExpr::new();
        let mut hi = LinearExpr::new();
        for (k, v) in vertices.iter().enumerate() {
            if v[d] != 0.0 {
                lo.add_term(lams[k], v[d]);
                hi.add_term(lams[k], v[d]);
            }
        }
        lo.add_term(slack, -1.0);
        m.add_constraint(lo, Sense::Le, point[d], &format!("lo{d}"))?;
        hi.add_term(slack, 1.0);
        m.add_constraint(hi, Sense::Ge, point[d], &format!("hi{d}"))?;
    }
    m.set_objective(LinearExpr::term(slack, 1.0))?;
    let r = solve_lp(&m);
    if r.status != SolveStatus::Optimal {
        return Err(Error::InfeasiblePoint(format!(
            "membership LP ended with status {:?}",
            r.status
        )));
    }
    Ok(r.objective.max(0.0))
}

/// True when the point lies in the convex hull of the vertices within the
/// given tolerance.
pub fn membership_in_conv(point: &[f64], vertices: &[Vec<f64>], tolerance: f64) -> Result<bool> {
    Ok(membership_slack(point, vertices)? <= tolerance)
}

/// Violation of the off-disjunct conditions for the extreme-point
/// formulation: `phi_hat = 0`, `lambda = 0`, `z_hat = 0`,
/// `1'z <= |J| - 1`, `x` in the box, `z` in the unit cube.
pub fn x0_violation(p: &HullPoint, term: &MimfTerm) -> f64 {
    let mut v: f64 = p.phi_hat.abs().max(p.z_hat.abs());
    for &l in &p.lifted {
        v = v.max(l.abs());
    }
    for (i, &(lo, hi)) in term.bounds().iter().enumerate() {
        v = v.max(lo - p.x[i]).max(p.x[i] - hi);
    }
    let zsum: f64 = p.z.iter().sum();
    v = v.max(zsum - (term.nj() as f64 - 1.0));
    for &z in &p.z {
        v = v.max(-z).max(z - 1.0);
    }
    v.max(0.0)
}

/// Violation of the on-disjunct conditions for the extreme-point
/// formulation: lambda on the unit simplex reproducing `x` and `phi_hat`,
/// `z = 1`, `z_hat = 1`.
pub fn x1_violation(p: &HullPoint, term: &MimfTerm) -> f64 {
    let points = match enumerate_extreme_points(term.bounds()) {
        Ok(pts) => pts,
        Err(_) => return f64::INFINITY,
    };
    let mut v: f64 = (p.z_hat - 1.0).abs();
    for &z in &p.z {
        v = v.max((z - 1.0).abs());
    }
    let lsum: f64 = p.lifted.iter().sum();
    v = v.max((lsum - 1.0).abs());
    for &l in &p.lifted {
        v = v.max(-l);
    }
    for (i, &xi) in p.x.iter().enumerate() {
        let rebuilt: f64 = points
            .iter()
            .zip(&p.lifted)
            .map(|(pt, l)| pt.coordinates[i] * l)
            .sum();
        v = v.max((xi - rebuilt).abs());
    }
    let phi_rebuilt: f64 = points
        .iter()
        .zip(&p.lifted)
        .map(|(pt, l)| pt.product_value * l)
        .sum();
    v = v.max((p.phi_hat - phi_rebuilt).abs());
    v.max(0.0)
}

/// Violation of the off disjunct for the recursive-McCormick formulation
/// (`x` holds the two effective factors, `lifted` the xz pair).
pub fn z0_violation(p: &HullPoint, factor_bounds: &[(f64, f64)]) -> f64 {
    let mut v: f64 = p.phi_hat.abs().max(p.z_hat.abs());
    for &xz in &p.lifted {
        v = v.max(xz.abs());
    }
    for (i, &(lo, hi)) in factor_bounds.iter().enumerate() {
        v = v.max(lo - p.x[i]).max(p.x[i] - hi);
    }
    let zsum: f64 = p.z.iter().sum();
    v = v.max(zsum - (p.z.len() as f64 - 1.0));
    for &z in &p.z {
        v = v.max(-z).max(z - 1.0);
    }
    v.max(0.0)
}

/// Violation of the on disjunct for the recursive-McCormick formulation:
/// `xz = x`, `(x, phi_hat)` inside the bilinear envelope, `z = 1`,
/// `z_hat = 1`.
pub fn z1_violation(p: &HullPoint, factor_bounds: &[(f64, f64)]) -> f64 {
    let (l1, u1) = factor_bounds[0];
    let (l2, u2) = factor_bounds[1];
    let mut v: f64 = (p.z_hat - 1.0).abs();
    for &z in &p.z {
        v = v.max((z - 1.0).abs());
    }
    for i in 0..2 {
        v = v.max((p.lifted[i] - p.x[i]).abs());
        let (lo, hi) = factor_bounds[i];
        v = v.max(lo - p.x[i]).max(p.x[i] - hi);
    }
    let (x1, x2, phi) = (p.x[0], p.x[1], p.phi_hat);
    v = v.max(u2 * x1 + u1 * x2 - u1 * u2 - phi);
    v = v.max(l2 * x1 + l1 * x2 - l1 * l2 - phi);
    v = v.max(phi - (u2 * x1 + l1 * x2 - l1 * u2));
    v = v.max(phi - (l2 * x1 + u1 * x2 - u1 * l2));
    v.max(0.0)
}

const TRIVIAL_ZHAT_TOL: f64 = 1e-12;

/// Constructive decomposition behind the extreme-point hull theorem. For
/// fractional `z_hat` the split is
///
/// ```text
/// p0 = ((x - sum lambda_k xi_k) / (1 - z_hat), 0, 0, (z - z_hat 1) / (1 - z_hat), 0)
/// p1 = (sum (lambda_k / z_hat) xi_k, phi_hat / z_hat, lambda / z_hat, 1, 1)
/// ```
///
/// and `point = (1 - z_hat) p0 + z_hat p1` holds to round-off. Both pieces
/// are validated against their disjunct; a point that violates the
/// formulation rows surfaces here as a decomposition error.
pub fn decompose_theorem1(point: &HullPoint, term: &MimfTerm) -> Result<Decomposition> {
    let w = point.z_hat;
    if w <= TRIVIAL_ZHAT_TOL {
        return Ok(Decomposition::Trivial {
            disjunct: Disjunct::Off,
        });
    }
    if w >= 1.0 - TRIVIAL_ZHAT_TOL {
        return Ok(Decomposition::Trivial {
            disjunct: Disjunct::On,
        });
    }
    let points = enumerate_extreme_points(term.bounds())?;
    let ni = term.ni();
    let mut lift_x = vec![0.0; ni];
    for (pt, &l) in points.iter().zip(&point.lifted) {
        for i in 0..ni {
            lift_x[i] += pt.coordinates[i] * l;
        }
    }
    let p0 = HullPoint {
        x: (0..ni)
            .map(|i| (point.x[i] - lift_x[i]) / (1.0 - w))
            .collect(),
        phi_hat: 0.0,
        lifted: vec![0.0; point.lifted.len()],
        z: point.z.iter().map(|&z| (z - w) / (1.0 - w)).collect(),
        z_hat: 0.0,
    };
    let p1 = HullPoint {
        x: (0..ni).map(|i| lift_x[i] / w).collect(),
        phi_hat: point.phi_hat / w,
        lifted: point.lifted.iter().map(|&l| l / w).collect(),
        z: vec![1.0; point.z.len()],
        z_hat: 1.0,
    };
    let amp = (1.0 / w).max(1.0 / (1.0 - w));
    let tol = 1e-7 * (1.0 + amp);
    let v0 = x0_violation(&p0, term);
    if v0 > tol {
        return Err(Error::DecompositionFailed(format!(
            "p0 violates the off disjunct by {v0:.3e}"
        )));
    }
    let v1 = x1_violation(&p1, term);
    if v1 > tol {
        return Err(Error::DecompositionFailed(format!(
            "p1 violates the on disjunct by {v1:.3e}"
        )));
    }
    Ok(Decomposition::Split { p0, p1, weight: w })
}

/// Analogous decomposition for the recursive-McCormick hull: the on piece
/// takes `xz / z_hat` (for x, xz, and phi_hat alike), the off piece takes
/// `(x - xz) / (1 - z_hat)` with zeroed lifts.
pub fn decompose_theorem2(point: &HullPoint, factor_bounds: &[(f64, f64)]) -> Result<Decomposition> {
    if factor_bounds.len() != 2 || point.x.len() != 2 || point.lifted.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: point.x.len().max(point.lifted.len()),
        });
    }
    let w = point.z_hat;
    if w <= TRIVIAL_ZHAT_TOL {
        return Ok(Decomposition::Trivial {
            disjunct: Disjunct::Off,
        });
    }
    if w >= 1.0 - TRIVIAL_ZHAT_TOL {
        return Ok(Decomposition::Trivial {
            disjunct: Disjunct::On,
        });
    }
    let p0 = HullPoint {
        x: (0..2)
            .map(|i| (point.x[i] - point.lifted[i]) / (1.0 - w))
            .collect(),
        phi_hat: 0.0,
        lifted: vec![0.0; 2],
        z: point.z.iter().map(|&z| (z - w) / (1.0 - w)).collect(),
        z_hat: 0.0,
    };
    let p1 = HullPoint {
        x: (0..2).map(|i| point.lifted[i] / w).collect(),
        phi_hat: point.phi_hat / w,
        lifted: (0..2).map(|i| point.lifted[i] / w).collect(),
        z: vec![1.0; point.z.len()],
        z_hat: 1.0,
    };
    let amp = (1.0 / w).max(1.0 / (1.0 - w));
    let tol = 1e-7 * (1.0 + amp);
    let v0 = z0_violation(&p0, factor_bounds);
    if v0 > tol {
        return Err(Error::DecompositionFailed(format!(
            "q0 violates the off disjunct by {v0:.3e}"
        )));
    }
    let v1 = z1_violation(&p1, factor_bounds);
    if v1 > tol {
        return Err(Error::DecompositionFailed(format!(
            "q1 violates the on disjunct by {v1:.3e}"
        )));
    }
    Ok(Decomposition::Split { p0, p1, weight: w })
}

/// A projected optimum that failed the hull membership test.
#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub direction: usize,
    pub point: Vec<f64>,
    pub slack: f64,
}

/// Outcome of [`check_projection_conjecture`]. Counterexamples are hard
/// evidence against the conjecture; an empty list is evidence for it, not
/// a proof.
#[derive(Clone, Debug, Serialize)]
pub struct ConjectureReport {
    pub ni: usize,
    pub nj: usize,
    pub bounds: Vec<(f64, f64)>,
    pub directions: usize,
    pub counterexamples: Vec<Counterexample>,
    pub max_membership_slack: f64,
    pub vertices_total: usize,
    pub vertex_lift_failures: Vec<usize>,
}

impl ConjectureReport {
    pub fn all_clear(&self) -> bool {
        self.counterexamples.is_empty() && self.vertex_lift_failures.is_empty()
    }
}

/// Probes the conjecture that projecting the extreme-point formulation
/// onto `(x, z, phi_hat)` yields the hull of the graph: maximizes random
/// unit directions over the formulation (binaries relaxed), tests each
/// projected optimum for hull membership, and checks that every graph
/// vertex lifts to a feasible formulation point.
pub fn check_projection_conjecture(
    bounds: &[(f64, f64)],
    nj: usize,
    directions: usize,
    tolerance: f64,
    seed: u64,
) -> Result<ConjectureReport> {
    let ni = bounds.len();
    if ni + nj > MAX_CONJECTURE_FACTORS {
        return Err(Error::SizeGuard {
            limit: MAX_CONJECTURE_FACTORS,
            got: ni + nj,
        });
    }
    let mut m = LinearModel::new("conjecture", ObjSense::Max);
    let xs: Vec<_> = (0..ni)
        .map(|i| m.add_variable(&format!("x{i}"), bounds[i].0, bounds[i].1, VarKind::Continuous))
        .collect::<Result<_>>()?;
    let zs: Vec<_> = (0..nj)
        .map(|j| m.add_variable(&format!("z{j}"), 0.0, 1.0, VarKind::Binary))
        .collect::<Result<_>>()?;
    let term = MimfTerm::new(xs.clone(), bounds.to_vec(), zs.clone())?;
    let handle = build_f_lambda(&mut m, &term)?;
    let vertices = graph_vertices(&term)?;
    let stacked: Vec<Vec<f64>> = vertices.iter().map(|v| v.stacked()).collect();

    let mut rng = Xorshift64Star::new(seed);
    let mut counterexamples = Vec::new();
    let mut max_slack = 0.0f64;
    for dir in 0..directions {
        let c = rng.unit_vector(ni + nj + 1);
        let mut obj = LinearExpr::new();
        for (i, &x) in xs.iter().enumerate() {
            obj.add_term(x, c[i]);
        }
        for (j, &z) in zs.iter().enumerate() {
            obj.add_term(z, c[ni + j]);
        }
        obj.add_term(handle.phi_hat, c[ni + nj]);
        m.set_objective(obj)?;
        let r = solve_lp(&m);
        if r.status != SolveStatus::Optimal {
            return Err(Error::InfeasiblePoint(format!(
                "conjecture LP ended with status {:?}",
                r.status
            )));
        }
        let mut projected: Vec<f64> = xs.iter().map(|v| r.point[v.index()]).collect();
        projected.extend(zs.iter().map(|v| r.point[v.index()]));
        projected.push(r.point[handle.phi_hat.index()]);
        let slack = membership_slack(&projected, &stacked)?;
        max_slack = max_slack.max(slack);
        if slack > tolerance {
            counterexamples.push(Counterexample {
                direction: dir,
                point: projected,
                slack,
            });
        }
    }

    // Every graph vertex must lift to a feasible formulation point:
    // lambda is z_hat times the indicator of the vertex's corner.
    let mut vertex_lift_failures = Vec::new();
    for (vi, v) in vertices.iter().enumerate() {
        let mut point = vec![0.0; m.num_variables()];
        for (i, &x) in xs.iter().enumerate() {
            point[x.index()] = v.x[i];
        }
        for (j, &z) in zs.iter().enumerate() {
            point[z.index()] = v.z[j];
        }
        let zprod: f64 = v.z.iter().product();
        if let Some(zh) = handle.z_hat {
            point[zh.index()] = zprod;
        }
        if !handle.lambdas.is_empty() {
            let mut corner = 0usize;
            for i in 0..ni {
                if bounds[i].1 != bounds[i].0 && v.x[i] == bounds[i].1 {
                    corner |= 1 << i;
                }
            }
            let weight = if handle.z_hat.is_some() { zprod } else { 1.0 };
            point[handle.lambdas[corner].index()] = weight;
        }
        point[handle.phi_hat.index()] = v.phi;
        let ev = m.evaluate(&point)?;
        if ev.max_violation > tolerance {
            vertex_lift_failures.push(vi);
        }
    }

    Ok(ConjectureReport {
        ni,
        nj,
        bounds: bounds.to_vec(),
        directions,
        counterexamples,
        max_membership_slack: max_slack,
        vertices_total: vertices.len(),
        vertex_lift_failures,
    })
}
