use rand::Rng;

use super::{ConfigSystem, Params};
use crate::basiclp::{CostShares, FractionalSolution};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lpsolve::dependent_round;
use crate::tol::{self, leq_rel};

#[derive(Debug, Clone, PartialEq)]
pub struct PreAssignment {
    /// Pre-opened facilities `S`, sorted.
    pub facilities: Vec<usize>,
    /// `(client, facility)` pairs, by client.
    pub assignment: Vec<(usize, usize)>,
    pub cost: f64,
    pub attempts: usize,
}

/// One sampled pre-assignment with its property checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub facilities: Vec<usize>,
    pub assignment: Vec<(usize, usize)>,
    pub cost: f64,
    /// `x_{B, C \ C'}`
    pub uncovered: f64,
    /// No facility receives more than its capacity.
    pub capacity_ok: bool,
    /// `x_{B, C \ C'} <= ell2 pi`
    pub uncovered_ok: bool,
    /// `(x_{B, C \ C'} / x_{B,C}) y_B + |S| <= (1 + 1/ell) y_B`
    pub count_ok: bool,
    /// `cost <= ell2 D_B`
    pub cost_ok: bool,
}

impl Attempt {
    pub fn accepted(&self) -> bool {
        self.capacity_ok && self.uncovered_ok && self.count_ok && self.cost_ok
    }
}

/// Samples pre-assignments for a concentrated set `B` from a feasible
/// solution `z` of its configuration system.
#[derive(Debug, Clone)]
pub struct Preassigner<'a> {
    inst: &'a Instance,
    sys: &'a ConfigSystem,
    z: &'a [f64],
    frac: &'a FractionalSolution,
    ell2: f64,
    y_b: f64,
    /// `(1 + 1/ell) y_B`
    pub budget: f64,
    pub pi: f64,
    pub d_b: f64,
    /// Chosen rank class and its sets with their `z_S`.
    pub rank: usize,
    pub candidates: Vec<(usize, f64)>,
    /// Total `z` mass of the rank class.
    pub q: f64,
    pub delta: usize,
}

fn rank_of(budget: f64, size: usize) -> usize {
    let gap = (budget - size as f64).max(0.0);
    if gap < 1.0 {
        0
    } else {
        gap.log2().floor() as usize + 1
    }
}

impl<'a> Preassigner<'a> {
    pub fn new(
        inst: &'a Instance,
        sys: &'a ConfigSystem,
        z: &'a [f64],
        frac: &'a FractionalSolution,
        shares: &CostShares,
        params: &Params,
    ) -> Result<Self> {
        let b = &sys.facilities;
        let fail = |reason: String| Error::Preassign { facilities: b.clone(), reason };
        let ell = params.ell as f64;
        let ell2 = params.ell2 as f64;
        let y_b = frac.y_of(b);
        let budget = (1.0 + 1.0 / ell) * y_b;
        let f = |t: usize| if t == 0 { budget - budget.floor() } else { (1u64 << t) as f64 };

        let mut mass: Vec<f64> = Vec::new();
        for s in 0..sys.sets.len() {
            let size = sys.sets[s].count_ones() as usize;
            let zs = z[sys.z_s(s)];
            if size as f64 > budget + tol::FEAS || zs <= tol::ZERO_MASS {
                continue;
            }
            let t = rank_of(budget, size);
            if mass.len() <= t {
                mass.resize(t + 1, 0.0);
            }
            mass[t] += zs;
        }
        let mut rank = None;
        for (t, &m) in mass.iter().enumerate() {
            let score = f(t) * m;
            if score > 0.0 && rank.is_none_or(|(_, best)| score > best) {
                rank = Some((t, score));
            }
        }
        let Some((rank, _)) = rank else {
            return Err(fail("no rank class carries z mass".into()));
        };
        let candidates: Vec<(usize, f64)> = (0..sys.sets.len())
            .filter(|&s| {
                let size = sys.sets[s].count_ones() as usize;
                size as f64 <= budget + tol::FEAS
                    && z[sys.z_s(s)] > tol::ZERO_MASS
                    && rank_of(budget, size) == rank
            })
            .map(|s| (s, z[sys.z_s(s)]))
            .collect();
        let q = mass[rank];
        let delta = if budget >= 1.0 { budget.log2().floor() as usize + 2 } else { 1 };
        if !leq_rel(3.0 / q, ell2) || 6 * params.ell * delta > params.ell2 {
            return Err(Error::Invariant(format!(
                "ell2 = {} too small: q = {q}, delta = {delta}",
                params.ell2
            )));
        }
        Ok(Self {
            inst,
            sys,
            z,
            frac,
            ell2,
            y_b,
            budget,
            pi: super::pi_value(frac, b),
            d_b: shares.d_of(b),
            rank,
            candidates,
            q,
            delta,
        })
    }

    /// Draws `S` from the rank class with probability proportional to `z_S`.
    pub fn sample_set<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut u = rng.random::<f64>() * self.q;
        for &(s, zs) in &self.candidates {
            if u < zs {
                return s;
            }
            u -= zs;
        }
        self.candidates.last().expect("rank class is nonempty").0
    }

    /// `w_ij = z_{S,i,j} / z_S` over members of `S` and clients of `C_B`,
    /// scaled down where solver noise pushes a degree over its cap.
    pub fn weights(&self, s: usize) -> Vec<Vec<f64>> {
        let sys = self.sys;
        let zs = self.z[sys.z_s(s)];
        let members = sys.members(s);
        let ncb = sys.clients.len();
        let mut w: Vec<Vec<f64>> = (0..members.len())
            .map(|k| (0..ncb).map(|jp| (self.z[sys.z_sij(s, k, jp)] / zs).clamp(0.0, 1.0)).collect())
            .collect();
        for (k, &p) in members.iter().enumerate() {
            let cap = sys.capacities[p] as f64;
            let sum: f64 = w[k].iter().sum();
            if sum > cap {
                w[k].iter_mut().for_each(|v| *v *= cap / sum);
            }
        }
        for jp in 0..ncb {
            let sum: f64 = w.iter().map(|r| r[jp]).sum();
            if sum > 1.0 {
                w.iter_mut().for_each(|r| r[jp] /= sum);
            }
        }
        w
    }

    /// Rounds the weights of a fixed set `s` and checks the properties.
    pub fn attempt_with_set<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> Result<Attempt> {
        let sys = self.sys;
        let members = sys.members(s);
        let w = self.weights(s);
        let caps: Vec<u32> = members.iter().map(|&p| sys.capacities[p]).collect();
        let matched = dependent_round(&w, &caps, &vec![1; sys.clients.len()], rng)?;

        let facilities: Vec<usize> = members.iter().map(|&p| sys.facilities[p]).collect();
        let mut assignment = Vec::new();
        let mut covered = vec![false; self.inst.n_clients()];
        for (jp, &j) in sys.clients.iter().enumerate() {
            if let Some(k) = (0..members.len()).find(|&k| matched[k][jp]) {
                assignment.push((j, facilities[k]));
                covered[j] = true;
            }
        }
        let capacity_ok = facilities.iter().zip(&caps).all(|(&i, &cap)| {
            assignment.iter().filter(|&&(_, f)| f == i).count() <= cap as usize
        });
        let cost = assignment.iter().map(|&(j, i)| self.inst.fc(i, j)).sum();
        let uncovered: f64 = (0..self.inst.n_clients())
            .filter(|&j| !covered[j])
            .map(|j| self.frac.x_to(&sys.facilities, j))
            .sum();
        let total = self.frac.x_mass(&sys.facilities);
        let ratio = if total > 0.0 { uncovered / total } else { 0.0 };
        Ok(Attempt {
            uncovered_ok: leq_rel(uncovered, self.ell2 * self.pi),
            count_ok: leq_rel(ratio * self.y_b + facilities.len() as f64, self.budget),
            cost_ok: leq_rel(cost, self.ell2 * self.d_b),
            capacity_ok,
            facilities,
            assignment,
            cost,
            uncovered,
        })
    }

    pub fn attempt<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Attempt> {
        let s = self.sample_set(rng);
        self.attempt_with_set(s, rng)
    }

    /// Resamples `S` and the matching until an attempt passes every check.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R, max_retries: usize) -> Result<PreAssignment> {
        for attempts in 1..=max_retries {
            let a = self.attempt(rng)?;
            if a.accepted() {
                return Ok(PreAssignment {
                    facilities: a.facilities,
                    assignment: a.assignment,
                    cost: a.cost,
                    attempts,
                });
            }
        }
        Err(Error::Preassign {
            facilities: self.sys.facilities.clone(),
            reason: format!("no accepted sample in {max_retries} attempts"),
        })
    }
}
