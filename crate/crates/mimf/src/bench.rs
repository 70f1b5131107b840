//! Benchmark family and harness: random MINLPs whose single constraint is
//! a sum of k-by-k mixed multilinear terms over a sliding window,
//!
//! ```text
//! min sum(c_i x_i + d_i z_i)
//! s.t. sum_{t=1}^{n-k+1} prod_{j=t}^{t+k-1} x_j z_j >= D,   x in [l, 10 l], z binary
//! ```
//!
//! with c, d, l drawn from (0, 1) by the deterministic stream in
//! [`crate::rng`] and D = 0.7 n by default. Each term is replaced by a
//! lifted variable carrying one of the two disjunctive relaxations, giving
//! a lower-bounding MILP.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LinearExpr, LinearModel, ObjSense, Sense, VarId, VarKind};
use crate::relax::{FormulationBuilder, MimfTerm, RelaxationHandle};
use crate::rng::Xorshift64Star;
use crate::solver::{lp_gap, solve_lp, solve_milp, MilpOptions, SolveStatus};

/// Which disjunctive relaxation to apply to each term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchFormulation {
    FLambda,
    FRmc,
}

impl BenchFormulation {
    pub const BOTH: [BenchFormulation; 2] = [BenchFormulation::FLambda, BenchFormulation::FRmc];

    /// Stable column tag used in tables and the CLI.
    pub fn tag(self) -> &'static str {
        match self {
            BenchFormulation::FLambda => "f_lambda",
            BenchFormulation::FRmc => "f_rmc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flambda" | "f_lambda" | "lambda" => Ok(BenchFormulation::FLambda),
            "frmc" | "f_rmc" | "rmc" => Ok(BenchFormulation::FRmc),
            other => Err(Error::InvalidInstance(format!(
                "unknown formulation '{other}' (expected flambda or frmc)"
            ))),
        }
    }
}

impl std::fmt::Display for BenchFormulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// One generated benchmark problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub n: usize,
    pub k: usize,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub demand: f64,
    pub seed: u64,
}

impl Instance {
    /// Sliding-window term count, n - k + 1.
    pub fn num_terms(&self) -> usize {
        self.n - self.k + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.n < self.k {
            return Err(Error::InvalidInstance(format!(
                "need n >= k >= 1, got n = {}, k = {}",
                self.n, self.k
            )));
        }
        for v in [&self.c, &self.d, &self.lower, &self.upper] {
            if v.len() != self.n {
                return Err(Error::InvalidInstance(format!(
                    "vector length {} does not match n = {}",
                    v.len(),
                    self.n
                )));
            }
        }
        for i in 0..self.n {
            if !(self.lower[i] > 0.0 && self.lower[i] < 1.0) {
                return Err(Error::InvalidInstance(format!(
                    "lower[{i}] must lie in (0, 1)"
                )));
            }
            if (self.upper[i] - 10.0 * self.lower[i]).abs() > 1e-12 {
                return Err(Error::InvalidInstance(format!(
                    "upper[{i}] must equal 10 * lower[{i}]"
                )));
            }
        }
        Ok(())
    }

    /// True objective and constraint activity at a full (x, z) assignment.
    pub fn constraint_activity(&self, x: &[f64], z: &[f64]) -> f64 {
        let mut total = 0.0;
        for t in 0..self.num_terms() {
            let mut prod = 1.0;
            for j in t..t + self.k {
                prod *= x[j] * z[j];
            }
            total += prod;
        }
        total
    }

    pub fn objective_at(&self, x: &[f64], z: &[f64]) -> f64 {
        (0..self.n).map(|i| self.c[i] * x[i] + self.d[i] * z[i]).sum()
    }
}

/// Draws c[0..n), d[0..n), lower[0..n) in that order from one seeded
/// stream; upper = 10 * lower and demand = demand_factor * n.
pub fn generate_instance(n: usize, k: usize, seed: u64, demand_factor: f64) -> Result<Instance> {
    if k < 1 || n < k {
        return Err(Error::InvalidInstance(format!(
            "need n >= k >= 1, got n = {n}, k = {k}"
        )));
    }
    let mut rng = Xorshift64Star::new(seed);
    let c: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    let d: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    let lower: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    let upper: Vec<f64> = lower.iter().map(|l| 10.0 * l).collect();
    Ok(Instance {
        n,
        k,
        c,
        d,
        lower,
        upper,
        demand: demand_factor * n as f64,
        seed,
    })
}

/// Builds the lower-bounding MILP: shared x and z columns, one relaxed
/// term per window, and the demand row over the lifted variables.
pub fn build_relaxed_milp(
    instance: &Instance,
    formulation: BenchFormulation,
) -> Result<(LinearModel, Vec<RelaxationHandle>)> {
    instance.validate()?;
    let name = format!(
        "mimf_n{}_k{}_s{}_{}",
        instance.n,
        instance.k,
        instance.seed,
        formulation.tag()
    );
    let mut model = LinearModel::new(&name, ObjSense::Min);
    let xs: Vec<VarId> = (0..instance.n)
        .map(|i| {
            model.add_variable(
                &format!("x{}", i + 1),
                instance.lower[i],
                instance.upper[i],
                VarKind::Continuous,
            )
        })
        .collect::<Result<_>>()?;
    let zs: Vec<VarId> = (0..instance.n)
        .map(|i| model.add_variable(&format!("z{}", i + 1), 0.0, 1.0, VarKind::Binary))
        .collect::<Result<_>>()?;

    let mut handles = Vec::with_capacity(instance.num_terms());
    let mut builder = FormulationBuilder::new(&mut model);
    for t in 0..instance.num_terms() {
        let window = t..t + instance.k;
        let term = MimfTerm::new(
            xs[window.clone()].to_vec(),
            instance.lower[window.clone()]
                .iter()
                .zip(&instance.upper[window.clone()])
                .map(|(&l, &u)| (l, u))
                .collect(),
            zs[window].to_vec(),
        )?;
        let handle = match formulation {
            BenchFormulation::FLambda => builder.build_f_lambda(&term)?,
            BenchFormulation::FRmc => builder.build_f_rmc(&term)?,
        };
        handles.push(handle);
    }
    let mut demand = LinearExpr::new();
    for h in &handles {
        demand.add_term(h.phi_hat, 1.0);
    }
    model.add_constraint(demand, Sense::Ge, instance.demand, "demand")?;

    let mut obj = LinearExpr::new();
    for i in 0..instance.n {
        obj.add_term(xs[i], instance.c[i]).add_term(zs[i], instance.d[i]);
    }
    model.set_objective(obj)?;
    Ok((model, handles))
}

/// One measured run.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub formulation: BenchFormulation,
    pub milp_objective: f64,
    pub lp_bound: f64,
    pub lp_gap_percent: f64,
    pub lp_time: f64,
    pub milp_time: f64,
    pub bb_nodes: u64,
}

/// Runs root LP plus MILP for every (n, seed, formulation) combination
/// and returns the per-run rows sorted by (n, formulation, run order).
/// Solver limits end up in the row (NaN objective when no incumbent),
/// never as an error.
pub fn run_experiment(
    n_list: &[usize],
    k: usize,
    seeds: &[u64],
    formulations: &[BenchFormulation],
    demand_factor: f64,
    milp_opts: &MilpOptions,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &n in n_list {
        for f in formulations {
            for &seed in seeds {
                let instance = generate_instance(n, k, seed, demand_factor)?;
                let (model, _) = build_relaxed_milp(&instance, *f)?;
                let lp = solve_lp(&model);
                let milp = solve_milp(&model, milp_opts);
                let gap = lp_gap(milp.objective, lp.objective);
                if lp.status == SolveStatus::Optimal && milp.status == SolveStatus::Optimal {
                    // Root bound must never exceed the MILP optimum.
                    assert!(
                        lp.objective <= milp.objective + 1e-6 * (1.0 + milp.objective.abs()),
                        "root bound {} above MILP optimum {} (n = {n}, seed = {seed}, {})",
                        lp.objective,
                        milp.objective,
                        f.tag()
                    );
                    assert!(
                        gap >= -1e-6,
                        "negative gap {gap} (n = {n}, seed = {seed}, {})",
                        f.tag()
                    );
                }
                rows.push(BenchRow {
                    n,
                    formulation: *f,
                    milp_objective: milp.objective,
                    lp_bound: lp.objective,
                    lp_gap_percent: gap,
                    lp_time: lp.wall_time,
                    milp_time: milp.wall_time,
                    bb_nodes: milp.bb_nodes,
                });
            }
        }
    }
    rows.sort_by(|a, b| (a.n, a.formulation.tag()).cmp(&(b.n, b.formulation.tag())));
    Ok(rows)
}

fn median_f64(values: &mut Vec<f64>) -> f64 {
    values.retain(|v| !v.is_nan());
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Collapses per-seed rows into one row per (n, formulation) by the
/// per-field median.
pub fn aggregate_median(rows: &[BenchRow]) -> Vec<BenchRow> {
    let mut groups: Vec<((usize, BenchFormulation), Vec<&BenchRow>)> = Vec::new();
    for row in rows {
        let key = (row.n, row.formulation);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(row),
            None => groups.push((key, vec![row])),
        }
    }
    groups
        .into_iter()
        .map(|((n, formulation), group)| {
            let pick = |get: fn(&BenchRow) -> f64| -> f64 {
                let mut vals: Vec<f64> = group.iter().map(|r| get(r)).collect();
                median_f64(&mut vals)
            };
            let mut nodes: Vec<u64> = group.iter().map(|r| r.bb_nodes).collect();
            nodes.sort_unstable();
            BenchRow {
                n,
                formulation,
                milp_objective: pick(|r| r.milp_objective),
                lp_bound: pick(|r| r.lp_bound),
                lp_gap_percent: pick(|r| r.lp_gap_percent),
                lp_time: pick(|r| r.lp_time),
                milp_time: pick(|r| r.milp_time),
                bb_nodes: nodes[(nodes.len() - 1) / 2],
            }
        })
        .collect()
}

/// Output format for [`emit_table`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

/// Formats a value with four significant digits.
pub(crate) fn sig4(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v == 0.0 {
        return "0.000".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = 3 - exp;
    if decimals >= 0 {
        format!("{:.*}", decimals as usize, v)
    } else {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (v / scale).round() * scale)
    }
}

/// Renders rows as CSV (flat, one line per row) or as a markdown table
/// with per-formulation column groups, objectives with four significant
/// digits and gaps with one decimal.
pub fn emit_table(rows: &[BenchRow], format: TableFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    match format {
        TableFormat::Csv => {
            let mut out = String::from(
                "n,formulation,milp_objective,lp_bound,lp_gap_percent,lp_time,milp_time,bb_nodes\n",
            );
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{:.1},{},{},{}\n",
                    r.n,
                    r.formulation.tag(),
                    sig4(r.milp_objective),
                    sig4(r.lp_bound),
                    r.lp_gap_percent,
                    sig4(r.lp_time),
                    sig4(r.milp_time),
                    r.bb_nodes
                ));
            }
            Ok(out)
        }
        TableFormat::Markdown => {
            let mut out = String::new();
            out.push_str("| n | MILP obj. f_lambda | MILP obj. f_rmc | LP gap (%) f_lambda | LP gap (%) f_rmc | LP time (s) f_lambda | LP time (s) f_rmc | MILP time (s) f_lambda | MILP time (s) f_rmc |\n");
            out.push_str("|---|---|---|---|---|---|---|---|---|\n");
            let ns: Vec<usize> = {
                let mut seen = Vec::new();
                for r in rows {
                    if !seen.contains(&r.n) {
                        seen.push(r.n);
                    }
                }
                seen
            };
            for n in ns {
                let lam: Vec<&BenchRow> = rows
                    .iter()
                    .filter(|r| r.n == n && r.formulation == BenchFormulation::FLambda)
                    .collect();
                let rmc: Vec<&BenchRow> = rows
                    .iter()
                    .filter(|r| r.n == n && r.formulation == BenchFormulation::FRmc)
                    .collect();
                let pairs = lam.len().max(rmc.len()).max(1);
                for i in 0..pairs {
                    let cell = |rs: &Vec<&BenchRow>, f: &dyn Fn(&BenchRow) -> String| -> String {
                        rs.get(i).map_or("-".to_string(), |r| f(r))
                    };
                    out.push_str(&format!(
                        "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                        n,
                        cell(&lam, &|r| sig4(r.milp_objective)),
                        cell(&rmc, &|r| sig4(r.milp_objective)),
                        cell(&lam, &|r| format!("{:.1}", r.lp_gap_percent)),
                        cell(&rmc, &|r| format!("{:.1}", r.lp_gap_percent)),
                        cell(&lam, &|r| sig4(r.lp_time)),
                        cell(&rmc, &|r| sig4(r.lp_time)),
                        cell(&lam, &|r| sig4(r.milp_time)),
                        cell(&rmc, &|r| sig4(r.milp_time)),
                    ));
                }
            }
            Ok(out)
        }
    }
}
