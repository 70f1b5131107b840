//! Sparse mixed-binary linear programs: the shared representation that the
//! formulation builders write into and both solvers consume.
//!
//! Variables get dense integer ids in insertion order and are never deleted.
//! Constraint constants are folded into the right-hand side at insertion, so
//! every stored row is homogeneous. A model is single-writer while it is
//! being built; afterwards it is plain immutable data.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};

/// Residual tolerance under which a point counts as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Distance from {0, 1} under which a binary value counts as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// Dense index of a variable within its model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(u32);

impl VarId {
    pub(crate) fn new(index: usize) -> Self {
        VarId(index as u32)
    }

    /// Position of the variable in the model's column order.
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Whether a column is a box-bounded continuous variable or a 0-1 variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

/// One column of the model.
#[derive(Clone, Debug)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

/// Sparse linear expression `sum(coef_i * var_i) + constant`.
///
/// Zero coefficients are never stored and repeated variables are merged.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearExpr {
    terms: BTreeMap<VarId, f64>,
    constant: f64,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    /// Single-term expression.
    pub fn term(var: VarId, coef: f64) -> Self {
        let mut e = Self::new();
        e.add_term(var, coef);
        e
    }

    /// Adds `coef * var`, merging with any existing coefficient and dropping
    /// the entry if the merged coefficient is exactly zero.
    pub fn add_term(&mut self, var: VarId, coef: f64) -> &mut Self {
        let c = self.terms.entry(var).or_insert(0.0);
        *c += coef;
        if *c == 0.0 {
            self.terms.remove(&var);
        }
        self
    }

    pub fn add_constant(&mut self, value: f64) -> &mut Self {
        self.constant += value;
        self
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, var: VarId) -> f64 {
        self.terms.get(&var).copied().unwrap_or(0.0)
    }

    /// Terms in ascending variable-id order.
    pub fn iter(&self) -> impl Iterator<Item = (VarId, f64)> + '_ {
        self.terms.iter().map(|(v, c)| (*v, *c))
    }

    /// Value of the expression at a dense point.
    pub fn value_at(&self, point: &[f64]) -> f64 {
        let mut acc = self.constant;
        for (v, c) in self.iter() {
            acc += c * point[v.index()];
        }
        acc
    }

    fn max_var_index(&self) -> Option<usize> {
        self.terms.keys().next_back().map(|v| v.index())
    }
}

impl FromIterator<(VarId, f64)> for LinearExpr {
    fn from_iter<I: IntoIterator<Item = (VarId, f64)>>(iter: I) -> Self {
        let mut e = Self::new();
        for (v, c) in iter {
            e.add_term(v, c);
        }
        e
    }
}

/// Row sense.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// Objective direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjSense {
    Min,
    Max,
}

/// One stored row. `expr.constant()` is always zero here: constants are
/// folded into `rhs` by [`LinearModel::add_constraint`].
#[derive(Clone, Debug)]
pub struct Constraint {
    pub name: String,
    pub expr: LinearExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    /// Amount by which a point violates this row (0 when satisfied).
    pub fn violation_at(&self, point: &[f64]) -> f64 {
        let lhs = self.expr.value_at(point);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Result of [`LinearModel::evaluate`].
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub objective: f64,
    /// Per-constraint violation, in row order.
    pub residuals: Vec<f64>,
    /// Largest violation over all rows and variable bounds.
    pub max_violation: f64,
    /// Largest distance of a binary variable from {0, 1}.
    pub max_integrality_violation: f64,
}

impl Evaluation {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Sparse mixed-binary linear program.
#[derive(Clone, Debug)]
pub struct LinearModel {
    name: String,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: LinearExpr,
    obj_sense: ObjSense,
    name_index: HashMap<String, VarId>,
    aux_tags: u32,
}

impl LinearModel {
    pub fn new(name: &str, obj_sense: ObjSense) -> Self {
        Self {
            name: name.to_string(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: LinearExpr::new(),
            obj_sense,
            name_index: HashMap::new(),
            aux_tags: 0,
        }
    }

    pub fn minimize(name: &str) -> Self {
        Self::new(name, ObjSense::Min)
    }

    pub fn maximize(name: &str) -> Self {
        Self::new(name, ObjSense::Max)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Appends a column and returns its fresh dense id.
    pub fn add_variable(
        &mut self,
        name: &str,
        lower: f64,
        upper: f64,
        kind: VarKind,
    ) -> Result<VarId> {
        if !(lower <= upper) {
            return Err(Error::ReversedBounds {
                name: name.to_string(),
                lower,
                upper,
            });
        }
        if kind == VarKind::Binary && !(lower >= 0.0 && upper <= 1.0) {
            return Err(Error::BinaryBounds {
                name: name.to_string(),
                lower,
                upper,
            });
        }
        if self.name_index.contains_key(name) {
            return Err(Error::DuplicateName(name.to_string()));
        }
        let id = VarId::new(self.variables.len());
        self.variables.push(Variable {
            id,
            name: name.to_string(),
            lower,
            upper,
            kind,
        });
        self.name_index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Appends a row. The expression's constant is folded into the
    /// right-hand side so the stored row is homogeneous.
    pub fn add_constraint(
        &mut self,
        expr: LinearExpr,
        sense: Sense,
        rhs: f64,
        name: &str,
    ) -> Result<usize> {
        if let Some(max) = expr.max_var_index() {
            if max >= self.variables.len() {
                return Err(Error::UnknownVariable(max));
            }
        }
        let mut expr = expr;
        let folded_rhs = rhs - expr.constant();
        expr.constant = 0.0;
        self.constraints.push(Constraint {
            name: name.to_string(),
            expr,
            sense,
            rhs: folded_rhs,
        });
        Ok(self.constraints.len() - 1)
    }

    /// Replaces the objective expression.
    pub fn set_objective(&mut self, expr: LinearExpr) -> Result<()> {
        if let Some(max) = expr.max_var_index() {
            if max >= self.variables.len() {
                return Err(Error::UnknownVariable(max));
            }
        }
        self.objective = expr;
        Ok(())
    }

    pub fn objective(&self) -> &LinearExpr {
        &self.objective
    }

    pub fn obj_sense(&self) -> ObjSense {
        self.obj_sense
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.index()]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.name_index.get(name).copied()
    }

    /// Tightens or relaxes the bounds of an existing column.
    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) -> Result<()> {
        if !(lower <= upper) {
            return Err(Error::ReversedBounds {
                name: self.variables[id.index()].name.clone(),
                lower,
                upper,
            });
        }
        let v = &mut self.variables[id.index()];
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    /// Ids of all binary columns, in id order.
    pub fn binary_ids(&self) -> Vec<VarId> {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .map(|v| v.id)
            .collect()
    }

    /// Monotone counter used by formulation builders to keep auxiliary
    /// names unique within one model.
    pub(crate) fn next_aux_tag(&mut self) -> u32 {
        let t = self.aux_tags;
        self.aux_tags += 1;
        t
    }

    /// Objective value, per-row residuals, and the worst bound/integrality
    /// violations of a dense point.
    pub fn evaluate(&self, point: &[f64]) -> Result<Evaluation> {
        if point.len() != self.variables.len() {
            return Err(Error::DimensionMismatch {
                expected: self.variables.len(),
                got: point.len(),
            });
        }
        let mut residuals = Vec::with_capacity(self.constraints.len());
        let mut max_violation: f64 = 0.0;
        for c in &self.constraints {
            let viol = c.violation_at(point);
            residuals.push(viol);
            max_violation = max_violation.max(viol);
        }
        let mut max_integrality: f64 = 0.0;
        for v in &self.variables {
            let x = point[v.id.index()];
            if x < v.lower {
                max_violation = max_violation.max(v.lower - x);
            }
            if x > v.upper {
                max_violation = max_violation.max(x - v.upper);
            }
            if v.kind == VarKind::Binary {
                let dist = x.abs().min((x - 1.0).abs());
                max_integrality = max_integrality.max(dist);
            }
        }
        Ok(Evaluation {
            objective: self.objective.value_at(point),
            residuals,
            max_violation,
            max_integrality_violation: max_integrality,
        })
    }
}
