//! The basic LP relaxation of capacitated k-median, the cuts added to it by
//! the cutting-plane loop, and the cost shares derived from its solution.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lpsolve::{solve_lp, solve_lp_sparse, LinearProgram, LpOutcome, Sense};
use crate::tol;

/// Values this close to 0 or 1 in a solver answer are snapped.
const SNAP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSolution {
    /// `x[i][j]`, facility by client.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub lp_value: f64,
}

impl FractionalSolution {
    pub fn n_facilities(&self) -> usize {
        self.y.len()
    }

    pub fn n_clients(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// `y(set)`
    pub fn y_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.y[i]).sum()
    }

    /// `x_{set, j}`
    pub fn x_to(&self, set: &[usize], j: usize) -> f64 {
        set.iter().map(|&i| self.x[i][j]).sum()
    }

    /// `x_{i, C}`
    pub fn x_from(&self, i: usize) -> f64 {
        self.x[i].iter().sum()
    }

    /// `x_{set, C}`
    pub fn x_mass(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.x_from(i)).sum()
    }

    /// Largest violation of the basic LP constraints.
    pub fn max_violation(&self, inst: &Instance) -> f64 {
        let mut worst = (self.y.iter().sum::<f64>() - inst.k() as f64).max(0.0);
        for j in 0..inst.n_clients() {
            let s: f64 = (0..inst.n_facilities()).map(|i| self.x[i][j]).sum();
            worst = worst.max((s - 1.0).abs());
        }
        for i in 0..inst.n_facilities() {
            let out_of_box = |v: f64| (-v).max(v - 1.0).max(0.0);
            worst = worst.max(out_of_box(self.y[i]));
            for j in 0..inst.n_clients() {
                worst = worst.max(out_of_box(self.x[i][j]));
                worst = worst.max(self.x[i][j] - self.y[i]);
            }
            worst = worst.max(self.x_from(i) - inst.capacity(i) as f64 * self.y[i]);
        }
        worst
    }
}

/// Linear inequality `sum x_coef * x + sum y_coef * y + constant <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub x_coef: Vec<Vec<f64>>,
    pub y_coef: Vec<f64>,
    pub constant: f64,
}

impl Cut {
    pub fn zero(n_facilities: usize, n_clients: usize) -> Self {
        Self {
            x_coef: vec![vec![0.0; n_clients]; n_facilities],
            y_coef: vec![0.0; n_facilities],
            constant: 0.0,
        }
    }

    /// Left-hand side at `(x, y)`; the cut is violated when this is positive.
    pub fn eval(&self, frac: &FractionalSolution) -> f64 {
        let xs: f64 = self
            .x_coef
            .iter()
            .zip(&frac.x)
            .flat_map(|(c, x)| c.iter().zip(x).map(|(a, b)| a * b))
            .sum();
        let ys: f64 = self.y_coef.iter().zip(&frac.y).map(|(a, b)| a * b).sum();
        xs + ys + self.constant
    }
}

pub fn x_var(inst: &Instance, i: usize, j: usize) -> usize {
    i * inst.n_clients() + j
}

pub fn y_var(inst: &Instance, i: usize) -> usize {
    inst.n_facilities() * inst.n_clients() + i
}

pub fn build_basic_lp(inst: &Instance, cuts: &[Cut]) -> LinearProgram {
    let (nf, nc) = (inst.n_facilities(), inst.n_clients());
    let mut objective = vec![0.0; nf * nc + nf];
    for i in 0..nf {
        for j in 0..nc {
            objective[x_var(inst, i, j)] = inst.fc(i, j);
        }
    }
    let mut lp = LinearProgram::new(objective);
    for v in 0..lp.n_vars() {
        lp.set_bounds(v, 0.0, 1.0);
    }
    lp.add_row((0..nf).map(|i| (y_var(inst, i), 1.0)).collect(), Sense::Le, inst.k() as f64);
    for j in 0..nc {
        lp.add_row((0..nf).map(|i| (x_var(inst, i, j), 1.0)).collect(), Sense::Eq, 1.0);
    }
    for i in 0..nf {
        for j in 0..nc {
            lp.add_row(vec![(x_var(inst, i, j), 1.0), (y_var(inst, i), -1.0)], Sense::Le, 0.0);
        }
    }
    for i in 0..nf {
        let mut terms: Vec<_> = (0..nc).map(|j| (x_var(inst, i, j), 1.0)).collect();
        terms.push((y_var(inst, i), -(inst.capacity(i) as f64)));
        lp.add_row(terms, Sense::Le, 0.0);
    }
    for cut in cuts {
        let mut terms = Vec::new();
        for i in 0..nf {
            for j in 0..nc {
                if cut.x_coef[i][j] != 0.0 {
                    terms.push((x_var(inst, i, j), cut.x_coef[i][j]));
                }
            }
            if cut.y_coef[i] != 0.0 {
                terms.push((y_var(inst, i), cut.y_coef[i]));
            }
        }
        lp.add_row(terms, Sense::Le, -cut.constant);
    }
    lp
}

fn snap(v: f64) -> f64 {
    if v.abs() < SNAP {
        0.0
    } else if (v - 1.0).abs() < SNAP {
        1.0
    } else {
        v
    }
}

/// Solves the basic LP plus `cuts`. The dense simplex is tried first; the
/// sparse engine takes over if it loses accuracy on an ill-conditioned cut
/// set.
pub fn solve_basic(inst: &Instance, cuts: &[Cut]) -> Result<FractionalSolution> {
    let lp = build_basic_lp(inst, cuts);
    let outcome = match solve_lp(&lp) {
        Err(Error::Numerical(_)) => solve_lp_sparse(&lp)?,
        other => other?,
    };
    match outcome {
        LpOutcome::Optimal(sol) => {
            let (nf, nc) = (inst.n_facilities(), inst.n_clients());
            let x: Vec<Vec<f64>> = (0..nf)
                .map(|i| (0..nc).map(|j| snap(sol.x[x_var(inst, i, j)])).collect())
                .collect();
            let y: Vec<f64> = (0..nf).map(|i| snap(sol.x[y_var(inst, i)])).collect();
            let lp_value = (0..nf)
                .flat_map(|i| (0..nc).map(move |j| (i, j)))
                .map(|(i, j)| x[i][j] * inst.fc(i, j))
                .sum();
            let frac = FractionalSolution { x, y, lp_value };
            let violation = frac.max_violation(inst);
            if violation > tol::FEAS {
                return Err(Error::Numerical(format!(
                    "basic LP solution violates its constraints by {violation:e}"
                )));
            }
            Ok(frac)
        }
        LpOutcome::Infeasible(ray) => {
            let first_cut = lp.n_rows() - cuts.len();
            let cut = ray.multipliers[first_cut..]
                .iter()
                .enumerate()
                .filter(|(_, &g)| g > tol::FEAS)
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(c, _)| c);
            Err(Error::MasterInfeasible { cut })
        }
        LpOutcome::Unbounded => Err(Error::Numerical("basic LP reported unbounded".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostShares {
    /// `d_av(j) = sum_i x_ij d(i, j)`
    pub d_av: Vec<f64>,
    /// `D_i = sum_j x_ij d(i, j)`
    pub d: Vec<f64>,
    /// `D'_i = sum_j x_ij d_av(j)`
    pub d_prime: Vec<f64>,
}

impl CostShares {
    pub fn d_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.d[i]).sum()
    }

    pub fn d_prime_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.d_prime[i]).sum()
    }
}

pub fn cost_shares(inst: &Instance, frac: &FractionalSolution) -> CostShares {
    let (nf, nc) = (inst.n_facilities(), inst.n_clients());
    let d_av: Vec<f64> = (0..nc)
        .map(|j| (0..nf).map(|i| frac.x[i][j] * inst.fc(i, j)).sum())
        .collect();
    let d = (0..nf)
        .map(|i| (0..nc).map(|j| frac.x[i][j] * inst.fc(i, j)).sum())
        .collect();
    let d_prime = (0..nf)
        .map(|i| (0..nc).map(|j| frac.x[i][j] * d_av[j]).sum())
        .collect();
    CostShares { d_av, d, d_prime }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::gen_gap_instance;

    #[test]
    fn gap_instance_lp_is_zero() {
        let inst = gen_gap_instance(2, 100.0).unwrap();
        let lp = build_basic_lp(&inst, &[]);
        assert_eq!(lp.n_vars(), 28);
        let frac = solve_basic(&inst, &[]).unwrap();
        assert!(frac.lp_value.abs() <= 1e-9);
    }

    #[test]
    fn single_pair() {
        let inst = Instance::new(vec![1], 1, 1, vec![vec![0.0; 2]; 2]).unwrap();
        let frac = solve_basic(&inst, &[]).unwrap();
        assert_eq!((frac.x[0][0], frac.y[0], frac.lp_value), (1.0, 1.0, 0.0));
    }

    #[test]
    fn unconstrained_relaxation_picks_nearest() {
        // k = nF and u >= nC: every client goes to its closest facility
        let pts = [0.0, 10.0, 1.0, 4.0, 9.0];
        let d = pts.iter().map(|a| pts.iter().map(|b| f64::abs(a - b)).collect()).collect();
        let inst = Instance::new(vec![3, 3], 3, 2, d).unwrap();
        let frac = solve_basic(&inst, &[]).unwrap();
        assert!((frac.lp_value - (1.0 + 4.0 + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn shares_of_single_facility() {
        let d = vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 3.0],
            vec![2.0, 3.0, 0.0],
        ];
        let inst = Instance::new(vec![2], 2, 1, d).unwrap();
        let frac = solve_basic(&inst, &[]).unwrap();
        let shares = cost_shares(&inst, &frac);
        assert_eq!(shares.d_av, vec![1.0, 2.0]);
        assert_eq!(shares.d, vec![frac.lp_value]);
        assert_eq!(shares.d_prime, vec![3.0]);
    }

    #[test]
    fn contradictory_cut_reported() {
        let inst = Instance::new(vec![1], 1, 1, vec![vec![0.0; 2]; 2]).unwrap();
        let mut cut = Cut::zero(1, 1);
        cut.y_coef[0] = -1.0;
        cut.constant = 2.0; // 2 - y <= 0 is impossible
        let err = solve_basic(&inst, &[cut]).unwrap_err();
        assert!(matches!(err, Error::MasterInfeasible { cut: Some(0) }), "{err}");
    }
}
