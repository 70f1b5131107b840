//! Disjunctive recursive-McCormick relaxation of a mixed-integer term.
//!
//! The continuous prefix is chained into one lifted factor, leaving two
//! effective continuous factors (w, x_last). On top of those the builder
//! adds the Fortet block for `z_hat`, lifted products `xz_f = x_f * z_hat`,
//! four perspective-McCormick inequalities tying `phi_hat` to the lifted
//! pair, and per-factor bound and linking rows:
//!
//! ```text
//! z_hat * l <= xz <= z_hat * u
//! x - (1 - z_hat) u <= xz <= x - (1 - z_hat) l
//! ```

use crate::error::Result;
use crate::model::{LinearExpr, LinearModel, Sense, VarId, VarKind};

use super::mccormick::interval_product_bounds;
use super::{require_continuous, require_finite, Formulation, FormulationBuilder, MimfTerm, RelaxationHandle};

/// Adds the bound and linking rows for one lifted factor.
fn add_lift_rows(
    model: &mut LinearModel,
    tag: u32,
    f: usize,
    x: VarId,
    xz: VarId,
    zhat: VarId,
    (lo, hi): (f64, f64),
) -> Result<()> {
    // lo z_hat - xz <= 0 and xz - hi z_hat <= 0
    let mut row = LinearExpr::new();
    row.add_term(zhat, lo).add_term(xz, -1.0);
    model.add_constraint(row, Sense::Le, 0.0, &format!("rm{tag}_zb{f}l"))?;
    let mut row = LinearExpr::new();
    row.add_term(xz, 1.0).add_term(zhat, -hi);
    model.add_constraint(row, Sense::Le, 0.0, &format!("rm{tag}_zb{f}u"))?;
    // x - xz + hi z_hat <= hi and xz - x - lo z_hat <= -lo
    let mut row = LinearExpr::new();
    row.add_term(x, 1.0).add_term(xz, -1.0).add_term(zhat, hi);
    model.add_constraint(row, Sense::Le, hi, &format!("rm{tag}_ln{f}l"))?;
    let mut row = LinearExpr::new();
    row.add_term(xz, 1.0).add_term(x, -1.0).add_term(zhat, -lo);
    model.add_constraint(row, Sense::Le, -lo, &format!("rm{tag}_ln{f}u"))?;
    Ok(())
}

pub(crate) fn build_f_rmc(
    builder: &mut FormulationBuilder<'_>,
    term: &MimfTerm,
) -> Result<RelaxationHandle> {
    {
        let model = builder.model();
        for (i, &x) in term.continuous().iter().enumerate() {
            require_continuous(model, x)?;
            require_finite(term.bounds()[i], &model.variable(x).name)?;
        }
    }
    // No continuous factors: the product is the Fortet z_hat.
    if term.ni() == 0 {
        let zhat = builder.fortet_z_hat(term.binaries())?;
        let mut h = RelaxationHandle::new(Formulation::FRmc, zhat);
        h.z_hat = Some(zhat);
        return Ok(h);
    }
    // Purely continuous: a plain recursive-McCormick chain ending in one
    // bilinear envelope block.
    if term.nj() == 0 {
        if term.ni() == 1 {
            // The product of one variable is itself.
            let h = RelaxationHandle {
                effective_factors: vec![term.continuous()[0]],
                effective_bounds: vec![term.bounds()[0]],
                ..RelaxationHandle::new(Formulation::FRmc, term.continuous()[0])
            };
            return Ok(h);
        }
        let (carrier, carrier_bounds, chain) =
            builder.recursive_mccormick_chain(term.continuous(), term.bounds())?;
        let last = *term.continuous().last().unwrap();
        let last_bounds = *term.bounds().last().unwrap();
        let mc = builder.mccormick_bilinear(carrier, last, carrier_bounds, last_bounds)?;
        let mut h = RelaxationHandle::new(Formulation::FRmc, mc.phi_hat);
        h.chain = chain;
        h.effective_factors = vec![carrier, last];
        h.effective_bounds = vec![carrier_bounds, last_bounds];
        return Ok(h);
    }

    let zhat = builder.fortet_z_hat(term.binaries())?;

    if term.ni() == 1 {
        // phi = x * z_hat: one lifted xz with its bound and linking rows,
        // phi_hat aliased to the lift.
        let x = term.continuous()[0];
        let (lo, hi) = term.bounds()[0];
        let model = builder.model();
        let tag = model.next_aux_tag();
        let xz = model.add_variable(
            &format!("rm{tag}_xz0"),
            lo.min(0.0),
            hi.max(0.0),
            VarKind::Continuous,
        )?;
        add_lift_rows(model, tag, 0, x, xz, zhat, (lo, hi))?;
        let mut h = RelaxationHandle::new(Formulation::FRmc, xz);
        h.z_hat = Some(zhat);
        h.xz_lifted = vec![xz];
        h.effective_factors = vec![x];
        h.effective_bounds = vec![(lo, hi)];
        return Ok(h);
    }

    // General case: chain the prefix, lift both effective factors.
    let (carrier, carrier_bounds, chain) =
        builder.recursive_mccormick_chain(term.continuous(), term.bounds())?;
    let last = *term.continuous().last().unwrap();
    let last_bounds = *term.bounds().last().unwrap();
    let (l1, u1) = carrier_bounds;
    let (l2, u2) = last_bounds;
    let (plo, phi_hi) = interval_product_bounds(&[carrier_bounds, last_bounds]);

    let model = builder.model();
    let tag = model.next_aux_tag();
    let xz1 = model.add_variable(
        &format!("rm{tag}_xz1"),
        l1.min(0.0),
        u1.max(0.0),
        VarKind::Continuous,
    )?;
    let xz2 = model.add_variable(
        &format!("rm{tag}_xz2"),
        l2.min(0.0),
        u2.max(0.0),
        VarKind::Continuous,
    )?;
    let phi_hat = model.add_variable(
        &format!("rm{tag}_phi"),
        plo.min(0.0),
        phi_hi.max(0.0),
        VarKind::Continuous,
    )?;

    // Perspective-McCormick inequalities in (xz1, xz2, z_hat).
    let mut row = LinearExpr::new();
    row.add_term(xz1, u2)
        .add_term(xz2, u1)
        .add_term(zhat, -u1 * u2)
        .add_term(phi_hat, -1.0);
    model.add_constraint(row, Sense::Le, 0.0, &format!("rm{tag}_g1"))?;
    let mut row = LinearExpr::new();
    row.add_term(xz1, l2)
        .add_term(xz2, l1)
        .add_term(zhat, -l1 * l2)
        .add_term(phi_hat, -1.0);
    model.add_constraint(row, Sense::Le, 0.0, &format!("rm{tag}_g2"))?;
    let mut row = LinearExpr::new();
    row.add_term(phi_hat, 1.0)
        .add_term(xz1, -u2)
        .add_term(xz2, -l1)
        .add_term(zhat, l1 * u2);
    model.add_constraint(row, Sense::Le, 0.0, &format!("rm{tag}_l1"))?;
    let mut row = LinearExpr::new();
    row.add_term(phi_hat, 1.0)
        .add_term(xz1, -l2)
        .add_term(xz2, -u1)
        .add_term(zhat, u1 * l2);
    model.add_constraint(row, Sense::Le, 0.0, &format!("rm{tag}_l2"))?;

    add_lift_rows(model, tag, 1, carrier, xz1, zhat, carrier_bounds)?;
    add_lift_rows(model, tag, 2, last, xz2, zhat, last_bounds)?;

    let mut h = RelaxationHandle::new(Formulation::FRmc, phi_hat);
    h.z_hat = Some(zhat);
    h.xz_lifted = vec![xz1, xz2];
    h.chain = chain;
    h.effective_factors = vec![carrier, last];
    h.effective_bounds = vec![carrier_bounds, last_bounds];
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_lp, SolveStatus};

    fn term_model(
        ni: usize,
        nj: usize,
        bounds: &[(f64, f64)],
    ) -> (LinearModel, MimfTerm, Vec<VarId>, Vec<VarId>) {
        let mut m = LinearModel::minimize("rmc");
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
        assert_eq!(lo.status, SolveStatus::Optimal);
        let mut hi_m = model.clone();
        hi_m.set_objective(LinearExpr::term(v, -1.0)).unwrap();
        let hi = solve_lp(&hi_m);
        assert_eq!(hi.status, SolveStatus::Optimal);
        (lo.objective, -hi.objective)
    }

    #[test]
    fn off_branch_forces_zero() {
        let (mut m, term, xs, _) = term_model(2, 1, &[(1.0, 2.0), (1.0, 2.0)]);
        let h = super::super::build_f_rmc(&mut m, &term).unwrap();
        m.set_bounds(h.z_hat.unwrap(), 0.0, 0.0).unwrap();
        let (plo, phi) = var_range(&m, h.phi_hat);
        assert!(plo.abs() < 1e-9 && phi.abs() < 1e-9);
        for &xz in &h.xz_lifted {
            let (lo, hi) = var_range(&m, xz);
            assert!(lo.abs() < 1e-9 && hi.abs() < 1e-9);
        }
        let (xlo, xhi) = var_range(&m, xs[0]);
        assert!((xlo - 1.0).abs() < 1e-9 && (xhi - 2.0).abs() < 1e-9);
    }

    #[test]
    fn on_branch_reduces_to_mccormick() {
        let bounds = [(1.0, 2.0), (1.0, 2.0)];
        let (mut m, term, xs, zs) = term_model(2, 1, &bounds);
        let h = super::super::build_f_rmc(&mut m, &term).unwrap();
        m.set_bounds(zs[0], 1.0, 1.0).unwrap();

        let mut plain = LinearModel::minimize("mc");
        let p1 = plain.add_variable("x1", 1.0, 2.0, VarKind::Continuous).unwrap();
        let p2 = plain.add_variable("x2", 1.0, 2.0, VarKind::Continuous).unwrap();
        let hp = super::super::mccormick_bilinear(&mut plain, p1, p2, bounds[0], bounds[1]).unwrap();

        for probe in [(1.0, 1.0), (1.5, 1.5), (1.3, 1.8), (2.0, 2.0)] {
            let mut a = m.clone();
            a.set_bounds(xs[0], probe.0, probe.0).unwrap();
            a.set_bounds(xs[1], probe.1, probe.1).unwrap();
            let ra = var_range(&a, h.phi_hat);
            let mut b = plain.clone();
            b.set_bounds(p1, probe.0, probe.0).unwrap();
            b.set_bounds(p2, probe.1, probe.1).unwrap();
            let rb = var_range(&b, hp.phi_hat);
            assert!(
                (ra.0 - rb.0).abs() < 1e-7 && (ra.1 - rb.1).abs() < 1e-7,
                "probe {probe:?}: {ra:?} vs {rb:?}"
            );
        }
        // And the lifts coincide with x on the on branch.
        let mut a = m.clone();
        a.set_bounds(xs[0], 1.4, 1.4).unwrap();
        let (lo, hi) = var_range(&a, h.xz_lifted[0]);
        assert!((lo - 1.4).abs() < 1e-8 && (hi - 1.4).abs() < 1e-8);
    }

    #[test]
    fn fractional_point_feasibility_and_phi_interval() {
        // |I| = |J| = 2 on [1,2]^2 with z_hat = 0.5, x = (1.5, 1.5),
        // xz = (0.75, 0.75), z = (0.5, 1.0): feasible, and the LP bounds
        // on phi are [1.0, 1.25].
        let (mut m, term, xs, zs) = term_model(2, 2, &[(1.0, 2.0), (1.0, 2.0)]);
        let h = super::super::build_f_rmc(&mut m, &term).unwrap();
        let mut point = vec![0.0; m.num_variables()];
        point[xs[0].index()] = 1.5;
        point[xs[1].index()] = 1.5;
        point[zs[0].index()] = 0.5;
        point[zs[1].index()] = 1.0;
        point[h.z_hat.unwrap().index()] = 0.5;
        point[h.xz_lifted[0].index()] = 0.75;
        point[h.xz_lifted[1].index()] = 0.75;
        point[h.phi_hat.index()] = 1.0;
        let ev = m.evaluate(&point).unwrap();
        assert!(ev.max_violation < 1e-12, "violation {}", ev.max_violation);

        for (v, val) in [
            (xs[0], 1.5),
            (xs[1], 1.5),
            (zs[0], 0.5),
            (zs[1], 1.0),
            (h.z_hat.unwrap(), 0.5),
            (h.xz_lifted[0], 0.75),
            (h.xz_lifted[1], 0.75),
        ] {
            m.set_bounds(v, val, val).unwrap();
        }
        let (lo, hi) = var_range(&m, h.phi_hat);
        assert!((lo - 1.0).abs() < 1e-8, "lo = {lo}");
        assert!((hi - 1.25).abs() < 1e-8, "hi = {hi}");
    }

    #[test]
    fn row_counts_by_shape() {
        // Standard case: 4 perspective rows + 4 per lifted factor
        // + (|J| + 1) Fortet rows + 4 per chain block.
        for (ni, nj) in [(2usize, 1usize), (2, 3), (3, 1), (4, 2)] {
            let bounds = vec![(1.0, 2.0); ni];
            let (mut m, term, _, _) = term_model(ni, nj, &bounds);
            let before = m.num_constraints();
            let h = super::super::build_f_rmc(&mut m, &term).unwrap();
            let chain_blocks = ni.saturating_sub(2);
            let expected = 4 + 4 * 2 + (nj + 1) + 4 * chain_blocks;
            assert_eq!(m.num_constraints() - before, expected, "shape ({ni},{nj})");
            assert_eq!(h.xz_lifted.len(), 2);
            assert_eq!(h.chain.len(), chain_blocks);
            assert!(h.lambdas.is_empty());
        }
    }

    #[test]
    fn degenerate_shapes() {
        // |I| = 1, |J| >= 1: single lift, phi aliased to it.
        let (mut m, term, xs, zs) = term_model(1, 2, &[(1.0, 2.0)]);
        let h = super::super::build_f_rmc(&mut m, &term).unwrap();
        assert_eq!(h.phi_hat, h.xz_lifted[0]);
        // On branch: phi = x; off branch: phi = 0.
        let mut on = m.clone();
        for &z in &zs {
            on.set_bounds(z, 1.0, 1.0).unwrap();
        }
        on.set_bounds(xs[0], 1.7, 1.7).unwrap();
        let (lo, hi) = var_range(&on, h.phi_hat);
        assert!((lo - 1.7).abs() < 1e-8 && (hi - 1.7).abs() < 1e-8);
        let mut off = m.clone();
        off.set_bounds(zs[0], 0.0, 0.0).unwrap();
        let (lo, hi) = var_range(&off, h.phi_hat);
        assert!(lo.abs() < 1e-9 && hi.abs() < 1e-9);

        // |I| = 0: phi aliased to the Fortet z_hat.
        let (mut m, term, _, _) = term_model(0, 2, &[]);
        let h = super::super::build_f_rmc(&mut m, &term).unwrap();
        assert_eq!(h.phi_hat, h.z_hat.unwrap());

        // |J| = 0, |I| = 3: pure chain plus one envelope block.
        let (mut m, term, xs, _) = term_model(3, 0, &[(1.0, 2.0); 3]);
        let h = super::super::build_f_rmc(&mut m, &term).unwrap();
        assert!(h.z_hat.is_none());
        assert_eq!(m.num_constraints(), 8); // one chain block + final block
        for &x in &xs {
            m.set_bounds(x, 2.0, 2.0).unwrap();
        }
        let (lo, hi) = var_range(&m, h.phi_hat);
        assert!((lo - 8.0).abs() < 1e-8 && (hi - 8.0).abs() < 1e-8);

        // |J| = 0, |I| = 1: the variable itself.
        let (mut m, term, xs, _) = term_model(1, 0, &[(0.5, 3.0)]);
        let h = super::super::build_f_rmc(&mut m, &term).unwrap();
        assert_eq!(h.phi_hat, xs[0]);
    }
}
