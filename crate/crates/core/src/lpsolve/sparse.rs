use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Solution, SolveOutcome, Variable};

use super::{FarkasRay, LinearProgram, LpOutcome, LpSolution, Sense};
use crate::error::{Error, Result};
use crate::tol;

fn op(sense: Sense) -> ComparisonOp {
    match sense {
        Sense::Le => ComparisonOp::Le,
        Sense::Eq => ComparisonOp::Eq,
        Sense::Ge => ComparisonOp::Ge,
    }
}

fn solution(outcome: SolveOutcome, n: usize, vars: &[microlp::Variable]) -> Result<Vec<f64>> {
    match outcome {
        SolveOutcome::Solution(s) => Ok((0..n).map(|j| s.var_value_raw(vars[j])).collect()),
        SolveOutcome::Interrupted(_) => Err(Error::Numerical("sparse solve interrupted".into())),
    }
}

fn expr(terms: &[(usize, f64)], vars: &[Variable]) -> LinearExpr {
    let mut e = LinearExpr::empty();
    for &(j, a) in terms {
        e.add(vars[j], a);
    }
    e
}

fn checked(lp: &LinearProgram, s: &Solution, vars: &[Variable]) -> Result<LpSolution> {
    let mut x: Vec<f64> = vars.iter().map(|&v| s.var_value_raw(v)).collect();
    for (v, &(lo, hi)) in x.iter_mut().zip(&lp.bounds) {
        *v = v.clamp(lo, hi);
    }
    let violation = lp.max_violation(&x);
    if violation > tol::FEAS {
        return Err(Error::Numerical(format!("sparse solution violates constraints by {violation:e}")));
    }
    let objective = lp.objective_value(&x);
    Ok(LpSolution { x, objective })
}

/// A sparse solve that keeps its basis, so rows added later are resolved
/// from the previous optimum.
pub struct SparseSession {
    lp: LinearProgram,
    vars: Vec<Variable>,
    solution: Option<Solution>,
}

impl SparseSession {
    /// Solves `lp`; `None` unless it has an optimum.
    pub fn start(lp: LinearProgram) -> Result<Option<(Self, LpSolution)>> {
        lp.validate()?;
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = lp.objective.iter().zip(&lp.bounds).map(|(&c, &b)| p.add_var(c, b)).collect();
        for row in &lp.rows {
            p.add_constraint(expr(&row.terms, &vars), op(row.sense), row.rhs);
        }
        let s = match p.solve() {
            Ok(SolveOutcome::Solution(s)) => s,
            Ok(SolveOutcome::Interrupted(_)) => return Err(Error::Numerical("sparse solve interrupted".into())),
            Err(microlp::Error::Infeasible | microlp::Error::Unbounded) => return Ok(None),
            Err(e) => return Err(Error::Numerical(format!("sparse solver failed: {e}"))),
        };
        let sol = checked(&lp, &s, &vars)?;
        Ok(Some((Self { lp, vars, solution: Some(s) }, sol)))
    }

    /// Adds rows and re-optimizes; `None` once the system is infeasible.
    pub fn add_rows(&mut self, rows: Vec<(Vec<(usize, f64)>, Sense, f64)>) -> Result<Option<LpSolution>> {
        for (terms, sense, rhs) in rows {
            let Some(s) = self.solution.take() else { return Ok(None) };
            let e = expr(&terms, &self.vars);
            self.lp.add_row(terms, sense, rhs);
            match s.add_constraint(e, op(sense), rhs) {
                Ok(SolveOutcome::Solution(s)) => self.solution = Some(s),
                Ok(SolveOutcome::Interrupted(_)) => return Err(Error::Numerical("sparse solve interrupted".into())),
                Err(microlp::Error::Infeasible) => return Ok(None),
                Err(e) => return Err(Error::Numerical(format!("sparse solver failed: {e}"))),
            }
        }
        let s = self.solution.as_ref().expect("solution kept while feasible");
        checked(&self.lp, s, &self.vars).map(Some)
    }
}

/// Sparse counterpart of [`super::solve_lp`] for systems too large for a
/// dense tableau. Solutions are not guaranteed to be vertices. Infeasible
/// answers carry a certificate from [`farkas_ray_sparse`].
pub fn solve_lp_sparse(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.validate()?;
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = lp
        .objective
        .iter()
        .zip(&lp.bounds)
        .map(|(&c, &b)| p.add_var(c, b))
        .collect();
    for row in &lp.rows {
        let mut e = LinearExpr::empty();
        for &(j, a) in &row.terms {
            e.add(vars[j], a);
        }
        p.add_constraint(e, op(row.sense), row.rhs);
    }
    match p.solve() {
        Ok(outcome) => {
            let mut x = solution(outcome, lp.n_vars(), &vars)?;
            for (v, &(lo, hi)) in x.iter_mut().zip(&lp.bounds) {
                *v = v.clamp(lo, hi);
            }
            let violation = lp.max_violation(&x);
            if violation > tol::FEAS {
                return Err(Error::Numerical(format!(
                    "sparse solution violates constraints by {violation:e}"
                )));
            }
            let objective = lp.objective_value(&x);
            Ok(LpOutcome::Optimal(LpSolution { x, objective }))
        }
        Err(microlp::Error::Infeasible) => match farkas_ray_sparse(lp)? {
            Some(ray) => Ok(LpOutcome::Infeasible(ray)),
            None => Err(Error::Numerical(
                "solver reported infeasibility but no certificate exists".into(),
            )),
        },
        Err(microlp::Error::Unbounded) => Ok(LpOutcome::Unbounded),
        Err(e) => Err(Error::Numerical(format!("sparse solver failed: {e}"))),
    }
}

/// Searches for a Farkas certificate by maximizing its contradiction margin
/// over multipliers bounded by one in magnitude. Returns `None` when the best
/// margin is not positive, i.e. when `lp` is feasible.
pub fn farkas_ray_sparse(lp: &LinearProgram) -> Result<Option<FarkasRay>> {
    lp.validate()?;
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let g: Vec<_> = lp
        .rows
        .iter()
        .map(|row| {
            let lo = if row.sense == Sense::Eq { -1.0 } else { 0.0 };
            p.add_var(row.sense.ge_sign() * row.rhs, (lo, 1.0))
        })
        .collect();
    let mut columns: Vec<LinearExpr> = (0..lp.n_vars()).map(|_| LinearExpr::empty()).collect();
    for (r, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.terms {
            columns[j].add(g[r], row.sense.ge_sign() * a);
        }
    }
    // combined_j = up_j - down_j, priced at the box corner it is pushed to
    for (mut col, &(lo, hi)) in columns.into_iter().zip(&lp.bounds) {
        if hi.is_finite() {
            let up = p.add_var(-hi, (0.0, f64::INFINITY));
            col.add(up, -1.0);
        }
        if lo != 0.0 {
            let down = p.add_var(lo, (0.0, f64::INFINITY));
            col.add(down, 1.0);
            p.add_constraint(col, ComparisonOp::Eq, 0.0);
        } else {
            p.add_constraint(col, ComparisonOp::Le, 0.0);
        }
    }
    let outcome = p
        .solve()
        .map_err(|e| Error::Numerical(format!("certificate search failed: {e}")))?;
    let multipliers = solution(outcome, g.len(), &g)?;
    let ray = FarkasRay { multipliers };
    Ok(ray.margin(lp).map(|_| ray.normalized()))
}
