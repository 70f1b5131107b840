//! Builders for the five polyhedral relaxations of a mixed-integer
//! multilinear term.
//!
//! Every builder appends rows and auxiliary columns to a [`LinearModel`]
//! and returns a [`RelaxationHandle`] naming what it introduced. The lifted
//! product variable `phi_hat` is the one a caller wires into the rest of
//! the model. Extreme points are enumerated in binary-counting order with
//! the least-significant bit on the first listed variable, so lambda
//! indexing is reproducible across runs.

mod fortet;
mod lambda;
mod mccormick;
mod rmc;

pub use lambda::enumerate_extreme_points;
pub use mccormick::interval_product_bounds;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{LinearModel, VarId, VarKind};

/// One multilinear term: a product of continuous variables over box
/// bounds and binary variables.
#[derive(Clone, Debug)]
pub struct MimfTerm {
    continuous: Vec<VarId>,
    binaries: Vec<VarId>,
    bounds: Vec<(f64, f64)>,
}

impl MimfTerm {
    /// `bounds[i]` is the box of `continuous[i]`. Lists must be
    /// duplicate-free and the term must reference at least one variable.
    pub fn new(
        continuous: Vec<VarId>,
        bounds: Vec<(f64, f64)>,
        binaries: Vec<VarId>,
    ) -> Result<Self> {
        if continuous.len() + binaries.len() == 0 {
            return Err(Error::EmptyTerm);
        }
        if continuous.len() != bounds.len() {
            return Err(Error::DimensionMismatch {
                expected: continuous.len(),
                got: bounds.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for v in continuous.iter().chain(binaries.iter()) {
            if !seen.insert(*v) {
                return Err(Error::DuplicateTermVariable);
            }
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo <= hi) {
                return Err(Error::ReversedBounds {
                    name: format!("factor {i}"),
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self {
            continuous,
            binaries,
            bounds,
        })
    }

    pub fn continuous(&self) -> &[VarId] {
        &self.continuous
    }

    pub fn binaries(&self) -> &[VarId] {
        &self.binaries
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Number of continuous factors.
    pub fn ni(&self) -> usize {
        self.continuous.len()
    }

    /// Number of binary factors.
    pub fn nj(&self) -> usize {
        self.binaries.len()
    }

    /// Exact product value at a full assignment of the term's variables.
    pub fn product_at(&self, x: &[f64], z: &[f64]) -> f64 {
        let cx: f64 = x.iter().product();
        let cz: f64 = z.iter().product();
        cx * cz
    }
}

/// A corner of the continuous box together with its exact product.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremePoint {
    pub coordinates: Vec<f64>,
    pub product_value: f64,
}

/// Which builder produced a handle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formulation {
    Mc,
    Fortet,
    Lambda,
    FLambda,
    FRmc,
}

/// The auxiliary variables a builder introduced for one term.
///
/// `phi_hat` always names the lifted product. For degenerate shapes a
/// builder may alias it to another column (the Fortet `z_hat` when there
/// are no continuous factors, a lifted `xz` when there is exactly one).
#[derive(Clone, Debug)]
pub struct RelaxationHandle {
    pub formulation: Formulation,
    pub phi_hat: VarId,
    pub z_hat: Option<VarId>,
    pub lambdas: Vec<VarId>,
    pub xz_lifted: Vec<VarId>,
    /// Intermediate products introduced by a recursive McCormick chain.
    pub chain: Vec<VarId>,
    /// The (at most two) continuous factors entering the final block of a
    /// recursive-McCormick build, with their interval bounds.
    pub effective_factors: Vec<VarId>,
    pub effective_bounds: Vec<(f64, f64)>,
}

impl RelaxationHandle {
    pub(crate) fn new(formulation: Formulation, phi_hat: VarId) -> Self {
        Self {
            formulation,
            phi_hat,
            z_hat: None,
            lambdas: Vec::new(),
            xz_lifted: Vec::new(),
            chain: Vec::new(),
            effective_factors: Vec::new(),
            effective_bounds: Vec::new(),
        }
    }
}

/// Stateful builder over one model. The only option is `share_z_hat`,
/// which re-uses one Fortet block per distinct binary index set instead of
/// creating a fresh `z_hat` per term (off by default, keeping each term's
/// formulation self-contained).
pub struct FormulationBuilder<'m> {
    model: &'m mut LinearModel,
    share_z_hat: bool,
    zhat_cache: HashMap<Vec<VarId>, VarId>,
}

impl<'m> FormulationBuilder<'m> {
    pub fn new(model: &'m mut LinearModel) -> Self {
        Self {
            model,
            share_z_hat: false,
            zhat_cache: HashMap::new(),
        }
    }

    pub fn share_z_hat(mut self, on: bool) -> Self {
        self.share_z_hat = on;
        self
    }

    pub(crate) fn model(&mut self) -> &mut LinearModel {
        self.model
    }

    /// Fortet block for the term's binaries, re-used across terms when
    /// sharing is on.
    pub(crate) fn fortet_z_hat(&mut self, binaries: &[VarId]) -> Result<VarId> {
        if self.share_z_hat {
            let mut key = binaries.to_vec();
            key.sort_unstable();
            if let Some(&z) = self.zhat_cache.get(&key) {
                return Ok(z);
            }
            let z = fortet::add_fortet_rows(self.model, binaries)?;
            self.zhat_cache.insert(key, z);
            Ok(z)
        } else {
            fortet::add_fortet_rows(self.model, binaries)
        }
    }

    pub fn mccormick_bilinear(
        &mut self,
        x1: VarId,
        x2: VarId,
        bounds1: (f64, f64),
        bounds2: (f64, f64),
    ) -> Result<RelaxationHandle> {
        let phi = mccormick::add_mccormick_rows(self.model, x1, x2, bounds1, bounds2)?;
        Ok(RelaxationHandle::new(Formulation::Mc, phi))
    }

    pub fn fortet_binary_product(&mut self, binaries: &[VarId]) -> Result<RelaxationHandle> {
        let z = self.fortet_z_hat(binaries)?;
        let mut h = RelaxationHandle::new(Formulation::Fortet, z);
        h.z_hat = Some(z);
        Ok(h)
    }

    pub fn lambda_formulation(&mut self, term: &MimfTerm) -> Result<RelaxationHandle> {
        lambda::lambda_formulation(self.model, term)
    }

    pub fn build_f_lambda(&mut self, term: &MimfTerm) -> Result<RelaxationHandle> {
        lambda::build_f_lambda(self, term)
    }

    pub fn build_f_rmc(&mut self, term: &MimfTerm) -> Result<RelaxationHandle> {
        rmc::build_f_rmc(self, term)
    }

    pub fn recursive_mccormick_chain(
        &mut self,
        continuous: &[VarId],
        bounds: &[(f64, f64)],
    ) -> Result<(VarId, (f64, f64), Vec<VarId>)> {
        mccormick::recursive_mccormick_chain(self.model, continuous, bounds)
    }
}

/// McCormick envelope of `x1 * x2` over a box: adds `phi_hat` and the four
/// hull inequalities.
pub fn mccormick_bilinear(
    model: &mut LinearModel,
    x1: VarId,
    x2: VarId,
    bounds1: (f64, f64),
    bounds2: (f64, f64),
) -> Result<RelaxationHandle> {
    FormulationBuilder::new(model).mccormick_bilinear(x1, x2, bounds1, bounds2)
}

/// Exact linearization of a product of binaries: `z_hat <= z_j` for each j
/// plus `z_hat >= 1'z - |J| + 1`.
pub fn fortet_binary_product(
    model: &mut LinearModel,
    binaries: &[VarId],
) -> Result<RelaxationHandle> {
    FormulationBuilder::new(model).fortet_binary_product(binaries)
}

/// Extreme-point (simplex-weight) hull of a purely continuous product.
pub fn lambda_formulation(model: &mut LinearModel, term: &MimfTerm) -> Result<RelaxationHandle> {
    FormulationBuilder::new(model).lambda_formulation(term)
}

/// Disjunctive extreme-point relaxation of a full mixed-integer term.
pub fn build_f_lambda(model: &mut LinearModel, term: &MimfTerm) -> Result<RelaxationHandle> {
    FormulationBuilder::new(model).build_f_lambda(term)
}

/// Disjunctive recursive-McCormick relaxation of a full mixed-integer term.
pub fn build_f_rmc(model: &mut LinearModel, term: &MimfTerm) -> Result<RelaxationHandle> {
    FormulationBuilder::new(model).build_f_rmc(term)
}

/// Left-to-right chain of McCormick blocks covering all factors but the
/// last. For two factors this returns the first variable unchanged so the
/// caller can pair it with the second.
pub fn recursive_mccormick_chain(
    model: &mut LinearModel,
    continuous: &[VarId],
    bounds: &[(f64, f64)],
) -> Result<(VarId, (f64, f64))> {
    let (v, b, _) = FormulationBuilder::new(model).recursive_mccormick_chain(continuous, bounds)?;
    Ok((v, b))
}

pub(crate) fn require_continuous(model: &LinearModel, id: VarId) -> Result<()> {
    let v = model.variable(id);
    if v.kind != VarKind::Continuous {
        return Err(Error::NotContinuous(v.name.clone()));
    }
    Ok(())
}

pub(crate) fn require_binary(model: &LinearModel, id: VarId) -> Result<()> {
    let v = model.variable(id);
    if v.kind != VarKind::Binary {
        return Err(Error::NotBinary(v.name.clone()));
    }
    Ok(())
}

pub(crate) fn require_finite(bounds: (f64, f64), what: &str) -> Result<()> {
    if !(bounds.0.is_finite() && bounds.1.is_finite()) {
        return Err(Error::InfiniteBounds(what.to_string()));
    }
    Ok(())
}
