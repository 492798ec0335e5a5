//! Numerical engines: a dense bounded-variable simplex (Bland's rule) that
//! returns vertex solutions or Farkas certificates, a sparse backend for the
//! large configuration systems, min-cost b-matching, and marginal-preserving
//! dependent rounding.

mod bmatching;
mod dependent;
mod simplex;
mod sparse;

pub use bmatching::{min_cost_b_matching, BMatching, BMatchingProblem};
pub use dependent::dependent_round;
pub use simplex::solve_lp;
pub use sparse::{farkas_ray_sparse, solve_lp_sparse, SparseSession};

use crate::error::Result;
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// One linear row `sum coeff * x  (sense)  rhs`, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Minimization LP over box-bounded variables. Lower bounds must be finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// All variables start in `[0, +inf)`.
    pub fn new(objective: Vec<f64>) -> Self {
        let bounds = vec![(0.0, f64::INFINITY); objective.len()];
        Self { objective, rows: Vec::new(), bounds }
    }

    /// Feasibility problem with a zero objective.
    pub fn feasibility(n_vars: usize) -> Self {
        Self::new(vec![0.0; n_vars])
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.bounds[var] = (lo, hi);
    }

    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Constraint { terms, sense, rhs });
        self.rows.len() - 1
    }

    pub fn add_dense_row(&mut self, coeffs: &[f64], sense: Sense, rhs: f64) -> usize {
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(j, &a)| (j, a))
            .collect();
        self.add_row(terms, sense, rhs)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max);
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (lo - v).max(v - hi).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Number of variables strictly inside their bounds.
    pub fn count_interior(&self, x: &[f64], eps: f64) -> usize {
        self.bounds
            .iter()
            .zip(x)
            .filter(|(&(lo, hi), &v)| v > lo + eps && v < hi - eps)
            .count()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        use crate::error::Error;
        let n = self.n_vars();
        if self.bounds.len() != n {
            return Err(Error::InvalidParameter("bounds length differs from objective".into()));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || lo > hi || hi.is_nan() {
                return Err(Error::InvalidParameter(format!(
                    "variable {j} has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::InvalidParameter(format!("row {r} has non-finite rhs")));
            }
            if let Some(&(j, a)) = row.terms.iter().find(|&&(j, a)| j >= n || !a.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "row {r} has invalid term ({j}, {a})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Infeasibility certificate. Each row is read in `>=` form (a `<=` row is
/// negated) and gets one multiplier, nonnegative unless the row is an
/// equality. Adding up the rows with these weights yields an inequality no
/// point of the variable box can satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasRay {
    pub multipliers: Vec<f64>,
}

impl Sense {
    /// Factor turning the row into `>=` form.
    pub(crate) fn ge_sign(self) -> f64 {
        if self == Sense::Le {
            -1.0
        } else {
            1.0
        }
    }
}

impl FarkasRay {
    /// Recomputes the certificate from scratch. Returns the amount by which
    /// the aggregated inequality is contradicted, or `None` if the ray is not
    /// a valid certificate for `lp`.
    pub fn margin(&self, lp: &LinearProgram) -> Option<f64> {
        if self.multipliers.len() != lp.n_rows() {
            return None;
        }
        let mut combined = vec![0.0; lp.n_vars()];
        let mut rhs = 0.0;
        for (row, &g) in lp.rows.iter().zip(&self.multipliers) {
            if row.sense != Sense::Eq && g < -tol::FEAS {
                return None;
            }
            let y = g * row.sense.ge_sign();
            for &(j, a) in &row.terms {
                combined[j] += y * a;
            }
            rhs += y * row.rhs;
        }
        // max of combined . x over the box
        let mut best = 0.0;
        for (r, &(lo, hi)) in combined.iter().zip(&lp.bounds) {
            if *r > tol::FEAS {
                if !hi.is_finite() {
                    return None;
                }
                best += r * hi;
            } else if *r > 0.0 {
                best += r * if hi.is_finite() { hi } else { lo };
            } else {
                best += r * lo;
            }
        }
        let margin = rhs - best;
        (margin > tol::CERT).then_some(margin)
    }

    /// Rescales so the largest multiplier has magnitude one.
    pub(crate) fn normalized(mut self) -> Self {
        let scale = self.multipliers.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        if scale > 0.0 {
            for y in &mut self.multipliers {
                *y /= scale;
            }
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible(FarkasRay),
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}
