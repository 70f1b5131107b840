//! Fortet linearization of a product of binaries: |J|+1 rows describing
//! the convex hull of the graph of the product.

use crate::error::{Error, Result};
use crate::model::{LinearExpr, LinearModel, Sense, VarId, VarKind};

use super::require_binary;

/// Adds `z_hat` in [0, 1] with `z_hat <= z_j` for every j and
/// `z_hat >= 1'z - |J| + 1`. Returns the `z_hat` id.
pub(crate) fn add_fortet_rows(model: &mut LinearModel, binaries: &[VarId]) -> Result<VarId> {
    if binaries.is_empty() {
        return Err(Error::EmptyTerm);
    }
    let mut seen = std::collections::HashSet::new();
    for &z in binaries {
        require_binary(model, z)?;
        if !seen.insert(z) {
            return Err(Error::DuplicateTermVariable);
        }
    }
    let tag = model.next_aux_tag();
    let zhat = model.add_variable(&format!("ft{tag}_zhat"), 0.0, 1.0, VarKind::Continuous)?;
    for (j, &z) in binaries.iter().enumerate() {
        let mut row = LinearExpr::new();
        row.add_term(zhat, 1.0).add_term(z, -1.0);
        model.add_constraint(row, Sense::Le, 0.0, &format!("ft{tag}_ub{j}"))?;
    }
    let mut row = LinearExpr::new();
    for &z in binaries {
        row.add_term(z, 1.0);
    }
    row.add_term(zhat, -1.0);
    model.add_constraint(
        row,
        Sense::Le,
        binaries.len() as f64 - 1.0,
        &format!("ft{tag}_lb"),
    )?;
    Ok(zhat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LinearModel;
    use crate::solver::{solve_lp, SolveStatus};

    fn binary_model(nj: usize) -> (LinearModel, Vec<VarId>) {
        let mut m = LinearModel::minimize("ft");
        let ids = (0..nj)
            .map(|j| m.add_variable(&format!("z{j}"), 0.0, 1.0, VarKind::Binary).unwrap())
            .collect();
        (m, ids)
    }

    fn zhat_range(model: &LinearModel, zhat: VarId) -> (f64, f64) {
        let mut lo_m = model.clone();
        lo_m.set_objective(LinearExpr::term(zhat, 1.0)).unwrap();
        let lo = solve_lp(&lo_m);
        assert_eq!(lo.status, SolveStatus::Optimal);
        let mut hi_m = model.clone();
        hi_m.set_objective(LinearExpr::term(zhat, -1.0)).unwrap();
        let hi = solve_lp(&hi_m);
        (lo.objective, -hi.objective)
    }

    #[test]
    fn all_ones_forces_one() {
        let (mut m, ids) = binary_model(3);
        let h = super::super::fortet_binary_product(&mut m, &ids).unwrap();
        for &z in &ids {
            m.set_bounds(z, 1.0, 1.0).unwrap();
        }
        let (lo, hi) = zhat_range(&m, h.phi_hat);
        assert!((lo - 1.0).abs() < 1e-9 && (hi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_zero_forces_zero() {
        let (mut m, ids) = binary_model(2);
        let h = super::super::fortet_binary_product(&mut m, &ids).unwrap();
        m.set_bounds(ids[0], 1.0, 1.0).unwrap();
        m.set_bounds(ids[1], 0.0, 0.0).unwrap();
        let (lo, hi) = zhat_range(&m, h.phi_hat);
        assert!(lo.abs() < 1e-9 && hi.abs() < 1e-9);
    }

    #[test]
    fn exhaustive_three_binaries() {
        // All 2^3 binary points force z_hat to the exact product.
        let (mut m, ids) = binary_model(3);
        let h = super::super::fortet_binary_product(&mut m, &ids).unwrap();
        assert_eq!(m.num_constraints(), 4); // |J| + 1 rows
        for mask in 0u32..8 {
            let mut fixed = m.clone();
            let mut product = 1.0;
            for (j, &z) in ids.iter().enumerate() {
                let v = f64::from(mask >> j & 1);
                product *= v;
                fixed.set_bounds(z, v, v).unwrap();
            }
            let (lo, hi) = zhat_range(&fixed, h.phi_hat);
            assert!(
                (lo - product).abs() < 1e-9 && (hi - product).abs() < 1e-9,
                "mask {mask}: [{lo}, {hi}] vs {product}"
            );
        }
    }

    #[test]
    fn non_binary_input_rejected() {
        let mut m = LinearModel::minimize("ft");
        let x = m.add_variable("x", 0.0, 1.0, VarKind::Continuous).unwrap();
        let err = super::super::fortet_binary_product(&mut m, &[x]).unwrap_err();
        assert!(matches!(err, Error::NotBinary(_)));
    }
}
