//! Rounding algorithms: the constant-factor basic rounding, the
//! configuration rounding, and the cutting-plane loop around them.

mod basic;
mod config;
pub mod constants;
mod driver;
mod io;

pub use basic::{round_basic, BasicRound};
pub use config::{round_config, ConfigRound, ConfigRun, GroupSolve, TreeAccount};
pub use driver::{cutting_plane_solve, CutRecord, CuttingPlaneResult, RoundReport};
pub use io::{read_solution, write_solution};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lpsolve::{min_cost_b_matching, solve_lp, BMatchingProblem, LinearProgram, Sense};
use crate::tol::{self, leq_rel};

/// An integral solution with soft capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSolution {
    /// Copies opened per facility, 0 when closed.
    pub open: Vec<u32>,
    /// Facility serving each client.
    pub assignment: Vec<usize>,
    pub cost: f64,
    pub opened_total: u32,
}

impl IntegralSolution {
    pub fn new(inst: &Instance, open: Vec<u32>, assignment: Vec<usize>) -> Self {
        let cost = assignment.iter().enumerate().map(|(j, &i)| inst.fc(i, j)).sum();
        let opened_total = open.iter().sum();
        Self { open, assignment, cost, opened_total }
    }

    /// Every client is served by an open facility within `copies * u_i`,
    /// and no facility has more than two copies.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        if self.open.len() != inst.n_facilities() || self.assignment.len() != inst.n_clients() {
            return Err(Error::Invariant("solution shape differs from the instance".into()));
        }
        if let Some(i) = (0..self.open.len()).find(|&i| self.open[i] > 2) {
            return Err(Error::Invariant(format!("facility {i} opened {} times", self.open[i])));
        }
        let mut load = vec![0u64; self.open.len()];
        for (j, &i) in self.assignment.iter().enumerate() {
            if i >= self.open.len() {
                return Err(Error::Invariant(format!("client {j} assigned to unknown facility {i}")));
            }
            load[i] += 1;
        }
        for (i, &l) in load.iter().enumerate() {
            let cap = self.open[i] as u64 * inst.capacity(i) as u64;
            if l > cap {
                return Err(Error::Invariant(format!(
                    "facility {i} serves {l} clients with capacity {cap}"
                )));
            }
        }
        Ok(())
    }
}

/// Cost of each stage of the demand-moving argument. Their sum bounds the
/// cost of the final assignment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MovingCost {
    pub preassign: f64,
    /// Clients to the facilities serving them fractionally.
    pub to_facilities: f64,
    /// Facilities to the center of their group.
    pub to_centers: f64,
    /// Centers back out to the opened facilities.
    pub from_centers: f64,
}

impl MovingCost {
    pub fn total(&self) -> f64 {
        self.preassign + self.to_facilities + self.to_centers + self.from_centers
    }
}

/// A vertex solution of the demand-placement LP of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
    /// Entries strictly between 0 and `u_i`.
    pub interior: usize,
}

/// Places `demand` units on the facilities of a group: minimizes
/// `sum alpha_i d_i` subject to `alpha_i in [0, u_i]`, `sum alpha = demand`
/// and `sum alpha_i / u_i + preopened <= budget`. The `witness` must
/// satisfy these constraints; its violation is an internal error.
pub fn move_lp_group(
    caps: &[u32],
    dists: &[f64],
    demand: f64,
    preopened: usize,
    budget: f64,
    witness: &[f64],
) -> Result<MoveSolution> {
    let n = caps.len();
    if dists.len() != n || witness.len() != n {
        return Err(Error::InvalidParameter("group vectors differ in length".into()));
    }
    let box_ok = witness.iter().zip(caps).all(|(&a, &u)| a >= -tol::FEAS && leq_rel(a, u as f64));
    let sum: f64 = witness.iter().sum();
    let load: f64 = witness.iter().zip(caps).map(|(&a, &u)| a / u as f64).sum();
    if !box_ok || !leq_rel((sum - demand).abs(), 0.0) || !leq_rel(load + preopened as f64, budget) {
        return Err(Error::Invariant(format!(
            "demand witness infeasible: sum {sum} vs demand {demand}, load {load} + {preopened} vs budget {budget}"
        )));
    }
    if demand <= tol::DEMAND {
        return Ok(MoveSolution { alpha: vec![0.0; n], objective: 0.0, interior: 0 });
    }
    let mut lp = LinearProgram::new(dists.to_vec());
    for (v, &u) in caps.iter().enumerate() {
        lp.set_bounds(v, 0.0, u as f64);
    }
    lp.add_dense_row(&vec![1.0; n], Sense::Eq, demand);
    let inv: Vec<f64> = caps.iter().map(|&u| 1.0 / u as f64).collect();
    // the witness proves feasibility; tiny slack absorbs its rounding error
    let slack = tol::BOUND_REL * budget.abs().max(1.0);
    lp.add_dense_row(&inv, Sense::Le, budget - preopened as f64 + slack);
    let sol = solve_lp(&lp)?
        .optimal()
        .ok_or_else(|| Error::Numerical("demand placement LP not solved to optimality".into()))?;
    let interior = lp.count_interior(&sol.x, 1e-9);
    Ok(MoveSolution { alpha: sol.x, objective: sol.objective, interior })
}

/// Assigns the clients without a fixed facility to the residual capacity of
/// `open` at minimum total distance. Returns the full assignment and cost.
pub fn final_assignment(
    inst: &Instance,
    open: &[u32],
    fixed: &[Option<usize>],
) -> Result<(Vec<usize>, f64)> {
    let nf = inst.n_facilities();
    let mut residual: Vec<i64> = (0..nf).map(|i| open[i] as i64 * inst.capacity(i) as i64).collect();
    for &i in fixed.iter().flatten() {
        residual[i] -= 1;
    }
    if let Some(i) = (0..nf).find(|&i| residual[i] < 0) {
        return Err(Error::Invariant(format!("facility {i} is over capacity with fixed clients")));
    }
    let free: Vec<usize> = (0..inst.n_clients()).filter(|&j| fixed[j].is_none()).collect();
    let prob = BMatchingProblem {
        supplies: vec![1; free.len()],
        capacities: residual.iter().map(|&r| r.min(u32::MAX as i64) as u32).collect(),
        costs: free
            .iter()
            .map(|&j| (0..nf).map(|i| if open[i] > 0 { inst.fc(i, j) } else { f64::INFINITY }).collect())
            .collect(),
        required_flow: free.len() as u32,
    };
    let matching = min_cost_b_matching(&prob).map_err(|e| match e {
        Error::Infeasible(msg) => Error::Invariant(format!("capacity shortfall: {msg}")),
        other => other,
    })?;
    let mut assignment: Vec<usize> = fixed.iter().map(|f| f.unwrap_or(usize::MAX)).collect();
    for (l, &j) in free.iter().enumerate() {
        assignment[j] = (0..nf).find(|&i| matching.flow[l][i] > 0).expect("every free client routed");
    }
    let cost = assignment.iter().enumerate().map(|(j, &i)| inst.fc(i, j)).sum();
    Ok((assignment, cost))
}
