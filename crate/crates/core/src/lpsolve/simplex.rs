use super::{FarkasRay, LinearProgram, LpOutcome, LpSolution, Sense};
use crate::error::{Error, Result};
use crate::tol;

const PIVOT_TOL: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-12;
const PHASE1_TOL: f64 = 1e-9;

/// Dense bounded-variable tableau. Every column lives in `[0, upper]`.
struct Tableau {
    m: usize,
    width: usize,
    /// `B^-1 A`, row-major.
    a: Vec<f64>,
    d: Vec<f64>,
    upper: Vec<f64>,
    basis: Vec<usize>,
    beta: Vec<f64>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    iterations: usize,
    max_iterations: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.width + j]
    }

    fn price(&mut self, cost: &[f64]) {
        self.d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.width..(i + 1) * self.width];
                for (dj, aij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * aij;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width;
        let p = self.a[r * w + j];
        for v in &mut self.a[r * w..(r + 1) * w] {
            *v /= p;
        }
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[j];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (v, pv) in self.d.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            self.d[j] = 0.0;
        }
    }

    /// Bounded primal simplex with Bland's rule for both the entering column
    /// and ties in the ratio test.
    fn run(&mut self, cost: &[f64]) -> Result<Phase> {
        self.price(cost);
        loop {
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(Error::Numerical(format!(
                    "simplex exceeded {} iterations",
                    self.max_iterations
                )));
            }
            let entering = (0..self.width).find(|&j| {
                !self.is_basic[j]
                    && self.upper[j] > 0.0
                    && if self.at_upper[j] {
                        self.d[j] > REDUCED_COST_TOL
                    } else {
                        self.d[j] < -REDUCED_COST_TOL
                    }
            });
            let Some(j) = entering else {
                return Ok(Phase::Optimal);
            };
            let dir = if self.at_upper[j] { -1.0 } else { 1.0 };

            // None means the entering column flips to its other bound.
            let mut best: (f64, usize, Option<(usize, bool)>) = (self.upper[j], j, None);
            for i in 0..self.m {
                let delta = -dir * self.entry(i, j);
                let b = self.basis[i];
                let (limit, to_upper) = if delta < -PIVOT_TOL {
                    (self.beta[i].max(0.0) / -delta, false)
                } else if delta > PIVOT_TOL && self.upper[b].is_finite() {
                    ((self.upper[b] - self.beta[i]).max(0.0) / delta, true)
                } else {
                    continue;
                };
                if limit < best.0 - RATIO_TIE || (limit <= best.0 + RATIO_TIE && b < best.1) {
                    best = (limit, b, Some((i, to_upper)));
                }
            }
            let (theta, _, leave) = best;
            if !theta.is_finite() {
                return Ok(Phase::Unbounded);
            }
            for i in 0..self.m {
                let e = self.entry(i, j);
                if e != 0.0 {
                    self.beta[i] -= dir * theta * e;
                }
            }
            match leave {
                None => self.at_upper[j] = !self.at_upper[j],
                Some((r, to_upper)) => {
                    let start = if self.at_upper[j] { self.upper[j] } else { 0.0 };
                    let leaving = self.basis[r];
                    self.is_basic[leaving] = false;
                    self.at_upper[leaving] = to_upper;
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.is_basic[j] = true;
                    self.at_upper[j] = false;
                    self.beta[r] = start + dir * theta;
                }
            }
        }
    }

    fn column_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.width)
            .map(|j| if self.at_upper[j] { self.upper[j] } else { 0.0 })
            .collect();
        for (i, &b) in self.basis.iter().enumerate() {
            v[b] = self.beta[i];
        }
        v
    }
}

/// Solves `lp` with a dense two-phase simplex. Optimal answers are vertices;
/// infeasible answers carry a verified Farkas certificate read off the
/// phase-one duals.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.validate()?;
    let n = lp.n_vars();
    let m = lp.n_rows();

    // Shift every variable to a zero lower bound and orient rows so b >= 0.
    let mut rhs = Vec::with_capacity(m);
    let mut sign = Vec::with_capacity(m);
    for row in &lp.rows {
        let shifted = row.rhs - row.terms.iter().map(|&(j, a)| a * lp.bounds[j].0).sum::<f64>();
        sign.push(if shifted < 0.0 { -1.0 } else { 1.0 });
        rhs.push(shifted.abs());
    }
    let slack_coef: Vec<Option<f64>> = lp
        .rows
        .iter()
        .map(|r| match r.sense {
            Sense::Le => Some(1.0),
            Sense::Ge => Some(-1.0),
            Sense::Eq => None,
        })
        .collect();
    let mut slack_col = vec![None; m];
    let mut width = n;
    for r in 0..m {
        if slack_coef[r].is_some() {
            slack_col[r] = Some(width);
            width += 1;
        }
    }
    // Each row gets an identity column: its slack when the orientation
    // allows, otherwise an artificial.
    let mut identity = vec![0; m];
    let mut artificial = Vec::new();
    for r in 0..m {
        match (slack_col[r], slack_coef[r]) {
            (Some(c), Some(s)) if s * sign[r] > 0.0 => identity[r] = c,
            _ => {
                identity[r] = width;
                artificial.push(width);
                width += 1;
            }
        }
    }

    let mut a = vec![0.0; m * width];
    for (r, row) in lp.rows.iter().enumerate() {
        for &(j, coef) in &row.terms {
            a[r * width + j] += sign[r] * coef;
        }
        if let (Some(c), Some(s)) = (slack_col[r], slack_coef[r]) {
            a[r * width + c] = sign[r] * s;
        }
        if identity[r] >= n && slack_col[r] != Some(identity[r]) {
            a[r * width + identity[r]] = 1.0;
        }
    }
    let mut upper = vec![f64::INFINITY; width];
    for j in 0..n {
        upper[j] = lp.bounds[j].1 - lp.bounds[j].0;
    }
    let mut is_basic = vec![false; width];
    for &c in &identity {
        is_basic[c] = true;
    }

    let mut t = Tableau {
        m,
        width,
        a,
        d: vec![0.0; width],
        upper,
        basis: identity.clone(),
        beta: rhs.clone(),
        is_basic,
        at_upper: vec![false; width],
        iterations: 0,
        max_iterations: 20_000 + 100 * (m + width),
    };

    if !artificial.is_empty() {
        let mut cost1 = vec![0.0; width];
        for &c in &artificial {
            cost1[c] = 1.0;
        }
        t.run(&cost1)?;
        let values = t.column_values();
        let infeasibility: f64 = artificial.iter().map(|&c| values[c]).sum();
        let scale = rhs.iter().fold(1.0f64, |s, b| s.max(*b));
        if infeasibility > PHASE1_TOL * scale {
            let multipliers = (0..m)
                .map(|r| {
                    let y = sign[r] * (cost1[identity[r]] - t.d[identity[r]]);
                    y * lp.rows[r].sense.ge_sign()
                })
                .collect();
            let ray = FarkasRay { multipliers }.normalized();
            if ray.margin(lp).is_none() {
                return Err(Error::Numerical(
                    "phase-one certificate failed verification".into(),
                ));
            }
            return Ok(LpOutcome::Infeasible(ray));
        }
        for &c in &artificial {
            t.upper[c] = 0.0;
        }
    }

    let mut cost2 = vec![0.0; width];
    cost2[..n].copy_from_slice(&lp.objective);
    match t.run(&cost2)? {
        Phase::Unbounded => Ok(LpOutcome::Unbounded),
        Phase::Optimal => {
            let values = t.column_values();
            let x: Vec<f64> = (0..n)
                .map(|j| {
                    let (lo, hi) = lp.bounds[j];
                    (lo + values[j]).clamp(lo, hi)
                })
                .collect();
            let violation = lp.max_violation(&x);
            if violation > tol::FEAS {
                return Err(Error::Numerical(format!(
                    "simplex solution violates constraints by {violation:e}"
                )));
            }
            let objective = lp.objective_value(&x);
            Ok(LpOutcome::Optimal(LpSolution { x, objective }))
        }
    }
}
