//! Extreme-point machinery: corner enumeration, the lambda formulation of
//! a purely continuous product, and the disjunctive extreme-point
//! relaxation of a full mixed-integer term.

use crate::error::{Error, Result};
use crate::model::{LinearExpr, LinearModel, Sense, VarKind};

use super::mccormick::interval_product_bounds;
use super::{require_continuous, require_finite, ExtremePoint, Formulation, FormulationBuilder, MimfTerm, RelaxationHandle};

/// Guard against enumerating more than 2^30 corners.
const MAX_ENUMERATED_FACTORS: usize = 30;

/// All `2^|I|` corners of the box in binary-counting order: bit i selects
/// the upper bound of the i-th variable, with the least-significant bit on
/// the first variable. Duplicate corners from degenerate bounds are kept
/// so indexing stays positional.
pub fn enumerate_extreme_points(bounds: &[(f64, f64)]) -> Result<Vec<ExtremePoint>> {
    if bounds.is_empty() {
        return Err(Error::EmptyTerm);
    }
    if bounds.len() > MAX_ENUMERATED_FACTORS {
        return Err(Error::SizeGuard {
            limit: MAX_ENUMERATED_FACTORS,
            got: bounds.len(),
        });
    }
    for (i, &b) in bounds.iter().enumerate() {
        require_finite(b, &format!("factor {i}"))?;
    }
    let n = bounds.len();
    let count = 1usize << n;
    let mut points = Vec::with_capacity(count);
    for k in 0..count {
        let mut coordinates = Vec::with_capacity(n);
        let mut product = 1.0;
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            let c = if k >> i & 1 == 1 { hi } else { lo };
            coordinates.push(c);
            product *= c;
        }
        points.push(ExtremePoint {
            coordinates,
            product_value: product,
        });
    }
    Ok(points)
}

/// Simplex-weight hull of a continuous product: lambda in the unit
/// simplex, `x = sum lambda_k xi_k`, `phi_hat = sum lambda_k prod_k`.
pub(crate) fn lambda_formulation(
    model: &mut LinearModel,
    term: &MimfTerm,
) -> Result<RelaxationHandle> {
    if term.nj() != 0 {
        return Err(Error::UnexpectedBinaries);
    }
    for &x in term.continuous() {
        require_continuous(model, x)?;
    }
    let points = enumerate_extreme_points(term.bounds())?;
    let (plo, phi) = interval_product_bounds(term.bounds());
    let tag = model.next_aux_tag();
    let phi_hat = model.add_variable(&format!("lm{tag}_phi"), plo, phi, VarKind::Continuous)?;
    let lambdas: Vec<_> = (0..points.len())
        .map(|k| model.add_variable(&format!("lm{tag}_l{k}"), 0.0, 1.0, VarKind::Continuous))
        .collect::<Result<_>>()?;

    let mut sum = LinearExpr::new();
    for &l in &lambdas {
        sum.add_term(l, 1.0);
    }
    model.add_constraint(sum, Sense::Eq, 1.0, &format!("lm{tag}_sum"))?;

    for (i, &x) in term.continuous().iter().enumerate() {
        let mut row = LinearExpr::new();
        for (k, p) in points.iter().enumerate() {
            row.add_term(lambdas[k], p.coordinates[i]);
        }
        row.add_term(x, -1.0);
        model.add_constraint(row, Sense::Eq, 0.0, &format!("lm{tag}_x{i}"))?;
    }

    let mut row = LinearExpr::new();
    for (k, p) in points.iter().enumerate() {
        row.add_term(lambdas[k], p.product_value);
    }
    row.add_term(phi_hat, -1.0);
    model.add_constraint(row, Sense::Eq, 0.0, &format!("lm{tag}_phi"))?;

    let mut h = RelaxationHandle::new(Formulation::Lambda, phi_hat);
    h.lambdas = lambdas;
    Ok(h)
}

/// Disjunctive extreme-point relaxation of `prod x_i * prod z_j`.
///
/// The rows are the Fortet block on `z_hat`, `1'lambda = z_hat`,
/// `phi_hat = sum lambda_k prod_k`, and the two-sided links
/// `sum lambda_k xi_k + l (1 - z_hat) <= x <= sum lambda_k xi_k + u (1 - z_hat)`.
///
/// Degenerate shapes: with no binaries this reduces to the plain lambda
/// formulation (no `z_hat`); with no continuous factors it reduces to the
/// Fortet block with `phi_hat` aliased to `z_hat`.
pub(crate) fn build_f_lambda(
    builder: &mut FormulationBuilder<'_>,
    term: &MimfTerm,
) -> Result<RelaxationHandle> {
    if term.nj() == 0 {
        let mut h = lambda_formulation(builder.model(), term)?;
        h.formulation = Formulation::FLambda;
        return Ok(h);
    }
    if term.ni() == 0 {
        let zhat = builder.fortet_z_hat(term.binaries())?;
        let mut h = RelaxationHandle::new(Formulation::FLambda, zhat);
        h.z_hat = Some(zhat);
        return Ok(h);
    }
    {
        let model = builder.model();
        for &x in term.continuous() {
            require_continuous(model, x)?;
        }
    }
    let points = enumerate_extreme_points(term.bounds())?;
    let (plo, phi) = interval_product_bounds(term.bounds());
    let zhat = builder.fortet_z_hat(term.binaries())?;
    let model = builder.model();
    let tag = model.next_aux_tag();
    // phi_hat = 0 is feasible (the off branch), so widen its box to zero.
    let phi_hat = model.add_variable(
        &format!("fl{tag}_phi"),
        plo.min(0.0),
        phi.max(0.0),
        VarKind::Continuous,
    )?;
    let lambdas: Vec<_> = (0..points.len())
        .map(|k| model.add_variable(&format!("fl{tag}_l{k}"), 0.0, 1.0, VarKind::Continuous))
        .collect::<Result<_>>()?;

    let mut sum = LinearExpr::new();
    for &l in &lambdas {
        sum.add_term(l, 1.0);
    }
    sum.add_term(zhat, -1.0);
    model.add_constraint(sum, Sense::Eq, 0.0, &format!("fl{tag}_sum"))?;

    let mut row = LinearExpr::new();
    for (k, p) in points.iter().enumerate() {
        row.add_term(lambdas[k], p.product_value);
    }
    row.add_term(phi_hat, -1.0);
    model.add_constraint(row, Sense::Eq, 0.0, &format!("fl{tag}_phi"))?;

    for (i, &x) in term.continuous().iter().enumerate() {
        let (lo, hi) = term.bounds()[i];
        // sum lambda_k xi_k[i] - lo z_hat - x <= -lo
        let mut row = LinearExpr::new();
        for (k, p) in points.iter().enumerate() {
            row.add_term(lambdas[k], p.coordinates[i]);
        }
        row.add_term(zhat, -lo).add_term(x, -1.0);
        model.add_constraint(row, Sense::Le, -lo, &format!("fl{tag}_xl{i}"))?;
        // x - sum lambda_k xi_k[i] + hi z_hat <= hi
        let mut row = LinearExpr::new();
        row.add_term(x, 1.0);
        for (k, p) in points.iter().enumerate() {
            row.add_term(lambdas[k], -p.coordinates[i]);
        }
        row.add_term(zhat, hi);
        model.add_constraint(row, Sense::Le, hi, &format!("fl{tag}_xu{i}"))?;
    }

    let mut h = RelaxationHandle::new(Formulation::FLambda, phi_hat);
    h.z_hat = Some(zhat);
    h.lambdas = lambdas;
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinearModel, VarId};
    use crate::solver::{solve_lp, SolveStatus};

    fn term_model(
        ni: usize,
        nj: usize,
        bounds: &[(f64, f64)],
    ) -> (LinearModel, MimfTerm, Vec<VarId>, Vec<VarId>) {
        let mut m = LinearModel::minimize("lam");
        let xs: Vec<VarId> = (0..ni)
            .map(|i| {
                m.add_variable(&format!("x{i}"), bounds[i].0, bounds[i].1, VarKind::Continuous)
                    .unwrap()
            })
            .collect();
        let zs: Vec<VarId> = (0..nj)
            .map(|j| m.add_variable(&format!("z{j}"), 0.0, 1.0, VarKind::Binary).unwrap())
            .collect();
        let term = MimfTerm::new(xs.clone(), bounds.to_vec(), zs.clone()).unwrap();
        (m, term, xs, zs)
    }

    fn var_range(model: &LinearModel, v: VarId) -> (f64, f64) {
        let mut lo_m = model.clone();
        lo_m.set_objective(LinearExpr::term(v, 1.0)).unwrap();
        let lo = solve_lp(&lo_m);
        assert_eq!(lo.status, SolveStatus::Optimal, "min side");
        let mut hi_m = model.clone();
        hi_m.set_objective(LinearExpr::term(v, -1.0)).unwrap();
        let hi = solve_lp(&hi_m);
        assert_eq!(hi.status, SolveStatus::Optimal, "max side");
        (lo.objective, -hi.objective)
    }

    #[test]
    fn enumeration_order_and_products() {
        let pts = enumerate_extreme_points(&[(1.0, 2.0)]).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].coordinates, vec![1.0]);
        assert_eq!(pts[0].product_value, 1.0);
        assert_eq!(pts[1].coordinates, vec![2.0]);
        assert_eq!(pts[1].product_value, 2.0);

        let pts = enumerate_extreme_points(&[(1.0, 2.0), (3.0, 4.0)]).unwrap();
        let coords: Vec<Vec<f64>> = pts.iter().map(|p| p.coordinates.clone()).collect();
        assert_eq!(
            coords,
            vec![
                vec![1.0, 3.0],
                vec![2.0, 3.0],
                vec![1.0, 4.0],
                vec![2.0, 4.0]
            ]
        );
        let products: Vec<f64> = pts.iter().map(|p| p.product_value).collect();
        assert_eq!(products, vec![3.0, 6.0, 4.0, 8.0]);
    }

    #[test]
    fn degenerate_bounds_keep_duplicate_corners() {
        let pts = enumerate_extreme_points(&[(5.0, 5.0), (0.0, 1.0)]).unwrap();
        assert_eq!(pts.len(), 4);
        let products: Vec<f64> = pts.iter().map(|p| p.product_value).collect();
        assert_eq!(products, vec![0.0, 0.0, 5.0, 5.0]);
    }

    #[test]
    fn size_guard_trips() {
        let bounds = vec![(0.0, 1.0); 31];
        assert!(matches!(
            enumerate_extreme_points(&bounds),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn single_variable_hull_is_the_graph() {
        // |I| = 1: the formulation forces phi = x exactly.
        let (mut m, term, xs, _) = term_model(1, 0, &[(0.5, 3.0)]);
        let h = super::super::lambda_formulation(&mut m, &term).unwrap();
        for probe in [0.5, 1.1, 2.7, 3.0] {
            let mut fixed = m.clone();
            fixed.set_bounds(xs[0], probe, probe).unwrap();
            let (lo, hi) = var_range(&fixed, h.phi_hat);
            assert!((lo - probe).abs() < 1e-8 && (hi - probe).abs() < 1e-8);
        }
    }

    #[test]
    fn bilinear_lambda_matches_mccormick_range() {
        // |I| = 2 on [1,2]^2 at (1.5, 1.5): the lambda polytope projects to
        // the McCormick interval [2.0, 2.5].
        let (mut m, term, xs, _) = term_model(2, 0, &[(1.0, 2.0), (1.0, 2.0)]);
        let h = super::super::lambda_formulation(&mut m, &term).unwrap();
        m.set_bounds(xs[0], 1.5, 1.5).unwrap();
        m.set_bounds(xs[1], 1.5, 1.5).unwrap();
        let (lo, hi) = var_range(&m, h.phi_hat);
        assert!((lo - 2.0).abs() < 1e-8, "lo = {lo}");
        assert!((hi - 2.5).abs() < 1e-8, "hi = {hi}");
    }

    #[test]
    fn vertex_forces_product_in_three_dims() {
        let (mut m, term, xs, _) = term_model(3, 0, &[(0.0, 1.0); 3]);
        let h = super::super::lambda_formulation(&mut m, &term).unwrap();
        for x in &xs {
            m.set_bounds(*x, 1.0, 1.0).unwrap();
        }
        let (lo, hi) = var_range(&m, h.phi_hat);
        assert!((lo - 1.0).abs() < 1e-8 && (hi - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_terms_with_binaries() {
        let (mut m, term, _, _) = term_model(1, 1, &[(0.0, 1.0)]);
        assert!(matches!(
            super::super::lambda_formulation(&mut m, &term),
            Err(Error::UnexpectedBinaries)
        ));
    }

    #[test]
    fn f_lambda_off_branch_forces_zero() {
        // Fixing z_hat = 0: lambdas and phi collapse to zero, x stays free
        // in its box.
        let (mut m, term, xs, _zs) = term_model(2, 1, &[(1.0, 2.0), (1.0, 2.0)]);
        let h = super::super::build_f_lambda(&mut m, &term).unwrap();
        let zhat = h.z_hat.unwrap();
        m.set_bounds(zhat, 0.0, 0.0).unwrap();
        let (plo, phi) = var_range(&m, h.phi_hat);
        assert!(plo.abs() < 1e-9 && phi.abs() < 1e-9);
        for &l in &h.lambdas {
            let (llo, lhi) = var_range(&m, l);
            assert!(llo.abs() < 1e-9 && lhi.abs() < 1e-9);
        }
        let (xlo, xhi) = var_range(&m, xs[0]);
        assert!((xlo - 1.0).abs() < 1e-9 && (xhi - 2.0).abs() < 1e-9);
    }

    #[test]
    fn f_lambda_on_branch_is_the_lambda_formulation() {
        // Fixing z_hat = 1 and z = 1 reduces to the plain lambda rows.
        let bounds = [(1.0, 2.0), (1.0, 2.0)];
        let (mut m, term, xs, zs) = term_model(2, 1, &bounds);
        let h = super::super::build_f_lambda(&mut m, &term).unwrap();
        m.set_bounds(zs[0], 1.0, 1.0).unwrap();

        let (mut plain, plain_term, plain_xs, _) = term_model(2, 0, &bounds);
        let hp = super::super::lambda_formulation(&mut plain, &plain_term).unwrap();

        for probe in [(1.0, 1.0), (1.5, 1.5), (1.2, 1.9), (2.0, 1.3)] {
            let mut a = m.clone();
            a.set_bounds(xs[0], probe.0, probe.0).unwrap();
            a.set_bounds(xs[1], probe.1, probe.1).unwrap();
            let ra = var_range(&a, h.phi_hat);
            let mut b = plain.clone();
            b.set_bounds(plain_xs[0], probe.0, probe.0).unwrap();
            b.set_bounds(plain_xs[1], probe.1, probe.1).unwrap();
            let rb = var_range(&b, hp.phi_hat);
            assert!((ra.0 - rb.0).abs() < 1e-7 && (ra.1 - rb.1).abs() < 1e-7);
        }
    }

    #[test]
    fn f_lambda_fixed_fractional_point_is_feasible() {
        // |I| = 2, |J| = 1 on [1,2]^2 at x = (1.5, 1.5), z = 0.5,
        // z_hat = 0.5, lambda = 0.125 each: feasible, and the phi row
        // forces phi = 0.125 * (1 + 2 + 2 + 4) = 1.125.
        let (mut m, term, xs, zs) = term_model(2, 1, &[(1.0, 2.0), (1.0, 2.0)]);
        let h = super::super::build_f_lambda(&mut m, &term).unwrap();
        let mut point = vec![0.0; m.num_variables()];
        point[xs[0].index()] = 1.5;
        point[xs[1].index()] = 1.5;
        point[zs[0].index()] = 0.5;
        point[h.z_hat.unwrap().index()] = 0.5;
        for &l in &h.lambdas {
            point[l.index()] = 0.125;
        }
        point[h.phi_hat.index()] = 1.125;
        let ev = m.evaluate(&point).unwrap();
        assert!(ev.max_violation < 1e-12, "violation {}", ev.max_violation);

        // Any other phi value breaks the equality row.
        point[h.phi_hat.index()] = 1.2;
        let ev = m.evaluate(&point).unwrap();
        assert!(ev.max_violation > 1e-3);
    }

    #[test]
    fn f_lambda_row_and_lambda_counts() {
        for (ni, nj) in [(1, 1), (2, 1), (2, 2), (3, 2), (4, 3)] {
            let bounds = vec![(1.0, 2.0); ni];
            let (mut m, term, _, _) = term_model(ni, nj, &bounds);
            let rows_before = m.num_constraints();
            let h = super::super::build_f_lambda(&mut m, &term).unwrap();
            assert_eq!(h.lambdas.len(), 1 << ni, "2^|I| lambdas");
            // Fortet block (|J| + 1), sum and phi equalities, and the
            // two-sided x links (2 |I|).
            let expected = (nj + 1) + 2 + 2 * ni;
            assert_eq!(m.num_constraints() - rows_before, expected);
        }
    }

    #[test]
    fn f_lambda_degenerate_shapes() {
        // |J| = 0 falls back to the lambda formulation.
        let (mut m, term, _, _) = term_model(2, 0, &[(1.0, 2.0), (1.0, 2.0)]);
        let h = super::super::build_f_lambda(&mut m, &term).unwrap();
        assert_eq!(h.formulation, Formulation::FLambda);
        assert!(h.z_hat.is_none());
        assert_eq!(h.lambdas.len(), 4);

        // |I| = 0 is the Fortet block with phi aliased to z_hat.
        let (mut m, term, _, _) = term_model(0, 2, &[]);
        let h = super::super::build_f_lambda(&mut m, &term).unwrap();
        assert_eq!(h.phi_hat, h.z_hat.unwrap());
        assert!(h.lambdas.is_empty());
    }
}
