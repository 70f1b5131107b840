//! McCormick envelopes: the bilinear hull block, interval product bounds,
//! and the left-to-right recursive chain for longer products.

use crate::error::{Error, Result};
use crate::model::{LinearExpr, LinearModel, Sense, VarId, VarKind};

use super::{require_continuous, require_finite};

/// Tightest box containing the product of intervals, computed pairwise:
/// the product of two intervals is the min/max of the four endpoint
/// products. The empty product is (1, 1).
pub fn interval_product_bounds(bounds: &[(f64, f64)]) -> (f64, f64) {
    let mut acc = (1.0f64, 1.0f64);
    for &(lo, hi) in bounds {
        let cands = [acc.0 * lo, acc.0 * hi, acc.1 * lo, acc.1 * hi];
        let mut lo2 = cands[0];
        let mut hi2 = cands[0];
        for &c in &cands[1..] {
            lo2 = lo2.min(c);
            hi2 = hi2.max(c);
        }
        acc = (lo2, hi2);
    }
    acc
}

/// Adds `phi_hat` bounded by the corner products and the four hull
/// inequalities of the bilinear envelope over the box:
///
/// ```text
/// phi >= u2 x1 + u1 x2 - u1 u2      phi >= l2 x1 + l1 x2 - l1 l2
/// phi <= u2 x1 + l1 x2 - l1 u2      phi <= l2 x1 + u1 x2 - u1 l2
/// ```
pub(crate) fn add_mccormick_rows(
    model: &mut LinearModel,
    x1: VarId,
    x2: VarId,
    (l1, u1): (f64, f64),
    (l2, u2): (f64, f64),
) -> Result<VarId> {
    require_continuous(model, x1)?;
    require_continuous(model, x2)?;
    require_finite((l1, u1), &model.variable(x1).name)?;
    require_finite((l2, u2), &model.variable(x2).name)?;
    let (plo, phi_hi) = interval_product_bounds(&[(l1, u1), (l2, u2)]);
    let tag = model.next_aux_tag();
    let phi = model.add_variable(&format!("mc{tag}_phi"), plo, phi_hi, VarKind::Continuous)?;

    let mut row = LinearExpr::new();
    row.add_term(x1, u2).add_term(x2, u1).add_term(phi, -1.0);
    model.add_constraint(row, Sense::Le, u1 * u2, &format!("mc{tag}_g1"))?;

    let mut row = LinearExpr::new();
    row.add_term(x1, l2).add_term(x2, l1).add_term(phi, -1.0);
    model.add_constraint(row, Sense::Le, l1 * l2, &format!("mc{tag}_g2"))?;

    let mut row = LinearExpr::new();
    row.add_term(phi, 1.0).add_term(x1, -u2).add_term(x2, -l1);
    model.add_constraint(row, Sense::Le, -l1 * u2, &format!("mc{tag}_l1"))?;

    let mut row = LinearExpr::new();
    row.add_term(phi, 1.0).add_term(x1, -l2).add_term(x2, -u1);
    model.add_constraint(row, Sense::Le, -u1 * l2, &format!("mc{tag}_l2"))?;

    Ok(phi)
}

/// Chains McCormick blocks left to right over all factors but the last:
/// `w2` relaxes `x1*x2`, then `w_t` relaxes `w_{t-1}*x_t` up to factor
/// `|I|-1`. Returns the last chain variable with its interval bounds and
/// the intermediates created. With exactly two factors the first variable
/// is returned unchanged and no rows are added.
pub(crate) fn recursive_mccormick_chain(
    model: &mut LinearModel,
    continuous: &[VarId],
    bounds: &[(f64, f64)],
) -> Result<(VarId, (f64, f64), Vec<VarId>)> {
    let ni = continuous.len();
    if ni < 2 {
        return Err(Error::TooFewFactors { needed: 2, got: ni });
    }
    if bounds.len() != ni {
        return Err(Error::DimensionMismatch {
            expected: ni,
            got: bounds.len(),
        });
    }
    let mut carrier = continuous[0];
    let mut carrier_bounds = bounds[0];
    let mut chain = Vec::new();
    for t in 1..ni - 1 {
        let w = add_mccormick_rows(model, carrier, continuous[t], carrier_bounds, bounds[t])?;
        carrier_bounds = interval_product_bounds(&[carrier_bounds, bounds[t]]);
        carrier = w;
        chain.push(w);
    }
    Ok((carrier, carrier_bounds, chain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_lp, SolveStatus};

    fn boxed_pair(l: f64, u: f64) -> (LinearModel, VarId, VarId) {
        let mut m = LinearModel::minimize("mc");
        let x1 = m.add_variable("x1", l, u, VarKind::Continuous).unwrap();
        let x2 = m.add_variable("x2", l, u, VarKind::Continuous).unwrap();
        (m, x1, x2)
    }

    fn phi_range(model: LinearModel, phi: VarId) -> (f64, f64) {
        let mut min_model = model.clone();
        min_model.set_objective(LinearExpr::term(phi, 1.0)).unwrap();
        let lo = solve_lp(&min_model);
        assert_eq!(lo.status, SolveStatus::Optimal);
        let mut neg_model = model;
        neg_model.set_objective(LinearExpr::term(phi, -1.0)).unwrap();
        let hi = solve_lp(&neg_model);
        assert_eq!(hi.status, SolveStatus::Optimal);
        (lo.objective, -hi.objective)
    }

    #[test]
    fn interval_products() {
        assert_eq!(interval_product_bounds(&[(1.0, 2.0), (3.0, 4.0)]), (3.0, 8.0));
        assert_eq!(
            interval_product_bounds(&[(-1.0, 2.0), (-3.0, 4.0)]),
            (-6.0, 8.0)
        );
        assert_eq!(interval_product_bounds(&[(0.0, 0.0), (5.0, 9.0)]), (0.0, 0.0));
        assert_eq!(interval_product_bounds(&[]), (1.0, 1.0));
    }

    #[test]
    fn corner_is_exact_on_unit_box() {
        let (mut m, x1, x2) = boxed_pair(0.0, 1.0);
        let h = super::super::mccormick_bilinear(&mut m, x1, x2, (0.0, 1.0), (0.0, 1.0)).unwrap();
        m.set_bounds(x1, 1.0, 1.0).unwrap();
        m.set_bounds(x2, 1.0, 1.0).unwrap();
        let (lo, hi) = phi_range(m, h.phi_hat);
        assert!((lo - 1.0).abs() < 1e-9);
        assert!((hi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn midpoint_range_on_shifted_box() {
        // x1, x2 in [1,2]^2 at (1.5, 1.5): the four envelope inequalities
        // give phi in [2.0, 2.5].
        let (mut m, x1, x2) = boxed_pair(1.0, 2.0);
        let h = super::super::mccormick_bilinear(&mut m, x1, x2, (1.0, 2.0), (1.0, 2.0)).unwrap();
        m.set_bounds(x1, 1.5, 1.5).unwrap();
        m.set_bounds(x2, 1.5, 1.5).unwrap();
        let (lo, hi) = phi_range(m, h.phi_hat);
        assert!((lo - 2.0).abs() < 1e-8, "lo = {lo}");
        assert!((hi - 2.5).abs() < 1e-8, "hi = {hi}");
    }

    #[test]
    fn symmetric_box_origin() {
        // x1, x2 in [-1,1]^2 at (0, 0): phi ranges over [-1, 1], matching
        // corner-product enumeration.
        let (mut m, x1, x2) = boxed_pair(-1.0, 1.0);
        let h = super::super::mccormick_bilinear(&mut m, x1, x2, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        m.set_bounds(x1, 0.0, 0.0).unwrap();
        m.set_bounds(x2, 0.0, 0.0).unwrap();
        let (lo, hi) = phi_range(m, h.phi_hat);
        assert!((lo + 1.0).abs() < 1e-8);
        assert!((hi - 1.0).abs() < 1e-8);
    }

    #[test]
    fn infinite_bounds_rejected() {
        let mut m = LinearModel::minimize("mc");
        let x1 = m
            .add_variable("x1", 0.0, f64::INFINITY, VarKind::Continuous)
            .unwrap();
        let x2 = m.add_variable("x2", 0.0, 1.0, VarKind::Continuous).unwrap();
        let err = super::super::mccormick_bilinear(&mut m, x1, x2, (0.0, f64::INFINITY), (0.0, 1.0))
            .unwrap_err();
        assert!(matches!(err, Error::InfiniteBounds(_)));
    }

    #[test]
    fn chain_counts_blocks_and_bounds() {
        // Two factors: no rows, first variable returned.
        let mut m = LinearModel::minimize("ch");
        let ids: Vec<VarId> = (0..2)
            .map(|i| {
                m.add_variable(&format!("x{i}"), 1.0, 2.0, VarKind::Continuous)
                    .unwrap()
            })
            .collect();
        let (v, b) =
            super::super::recursive_mccormick_chain(&mut m, &ids, &[(1.0, 2.0); 2]).unwrap();
        assert_eq!(v, ids[0]);
        assert_eq!(b, (1.0, 2.0));
        assert_eq!(m.num_constraints(), 0);

        // Three factors on [1,2]^3: one block, w in [1,4].
        let mut m = LinearModel::minimize("ch3");
        let ids: Vec<VarId> = (0..3)
            .map(|i| {
                m.add_variable(&format!("x{i}"), 1.0, 2.0, VarKind::Continuous)
                    .unwrap()
            })
            .collect();
        let (w, b) =
            super::super::recursive_mccormick_chain(&mut m, &ids, &[(1.0, 2.0); 3]).unwrap();
        assert_ne!(w, ids[0]);
        assert_eq!(b, (1.0, 4.0));
        assert_eq!(m.num_constraints(), 4);

        // Four factors: two chained blocks, 8 inequality rows.
        let mut m = LinearModel::minimize("ch4");
        let ids: Vec<VarId> = (0..4)
            .map(|i| {
                m.add_variable(&format!("x{i}"), 1.0, 2.0, VarKind::Continuous)
                    .unwrap()
            })
            .collect();
        let (_, b) =
            super::super::recursive_mccormick_chain(&mut m, &ids, &[(1.0, 2.0); 4]).unwrap();
        assert_eq!(b, (1.0, 8.0));
        assert_eq!(m.num_constraints(), 8);

        // One factor is too few.
        let mut m = LinearModel::minimize("ch1");
        let id = m.add_variable("x", 1.0, 2.0, VarKind::Continuous).unwrap();
        assert!(matches!(
            super::super::recursive_mccormick_chain(&mut m, &[id], &[(1.0, 2.0)]),
            Err(Error::TooFewFactors { .. })
        ));
    }

    #[test]
    fn corner_product_oracle_brackets_mccormick() {
        // Randomized: at any point of the box, the true product lies within
        // the envelope's phi range.
        use crate::rng::Xorshift64Star;
        let mut rng = Xorshift64Star::new(11);
        for _ in 0..25 {
            let l1 = rng.range(-2.0, 1.0);
            let u1 = l1 + rng.range(0.1, 3.0);
            let l2 = rng.range(-2.0, 1.0);
            let u2 = l2 + rng.range(0.1, 3.0);
            let mut m = LinearModel::minimize("r");
            let x1 = m.add_variable("x1", l1, u1, VarKind::Continuous).unwrap();
            let x2 = m.add_variable("x2", l2, u2, VarKind::Continuous).unwrap();
            let h = super::super::mccormick_bilinear(&mut m, x1, x2, (l1, u1), (l2, u2)).unwrap();
            let p1 = rng.range(l1, u1);
            let p2 = rng.range(l2, u2);
            m.set_bounds(x1, p1, p1).unwrap();
            m.set_bounds(x2, p2, p2).unwrap();
            let (lo, hi) = phi_range(m, h.phi_hat);
            let truth = p1 * p2;
            assert!(lo <= truth + 1e-7 && truth <= hi + 1e-7);
        }
    }
}
