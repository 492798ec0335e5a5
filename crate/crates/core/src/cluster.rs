//! Client representatives and the Voronoi partition of the facilities
//! around them.

use crate::basiclp::{CostShares, FractionalSolution};
use crate::instance::Instance;
use crate::tol::leq_rel;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Representatives in selection order.
    pub reps: Vec<usize>,
    /// `members[k]` is `U_v` for `v = reps[k]`, in increasing facility order.
    pub members: Vec<Vec<usize>>,
    /// `owner[i]` is the position in `reps` of the representative owning
    /// facility `i`.
    pub owner: Vec<usize>,
}

impl Clustering {
    /// Position of a client in `reps`, if it is a representative.
    pub fn position(&self, client: usize) -> Option<usize> {
        self.reps.iter().position(|&v| v == client)
    }

    /// `U(J)` for a set of representative positions, sorted.
    pub fn facilities_of(&self, positions: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = positions.iter().flat_map(|&k| self.members[k].clone()).collect();
        out.sort_unstable();
        out
    }
}

/// Greedy selection: repeatedly take the remaining client with the smallest
/// `d_av` and drop every remaining `j` with `d(j, v) <= 4 d_av(j)`.
pub fn select_representatives(inst: &Instance, shares: &CostShares) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..inst.n_clients()).collect();
    let mut reps = Vec::new();
    while !remaining.is_empty() {
        let mut v = remaining[0];
        for &j in &remaining[1..] {
            if shares.d_av[j] < shares.d_av[v] {
                v = j;
            }
        }
        reps.push(v);
        remaining.retain(|&j| inst.cc(j, v) > 4.0 * shares.d_av[j]);
    }
    reps
}

/// Assigns every facility to its nearest representative, ties to the
/// earlier one.
pub fn voronoi_partition(inst: &Instance, reps: &[usize]) -> Clustering {
    assert!(!reps.is_empty(), "at least one representative");
    let mut members = vec![Vec::new(); reps.len()];
    let owner: Vec<usize> = (0..inst.n_facilities())
        .map(|i| {
            let mut best = 0;
            for k in 1..reps.len() {
                if inst.fc(i, reps[k]) < inst.fc(i, reps[best]) {
                    best = k;
                }
            }
            members[best].push(i);
            best
        })
        .collect();
    Clustering { reps: reps.to_vec(), members, owner }
}

pub fn cluster(inst: &Instance, shares: &CostShares) -> Clustering {
    voronoi_partition(inst, &select_representatives(inst, shares))
}

/// First witness of each violated property, `None` when it holds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterReport {
    /// Representatives `v, v'` with `d(v, v') <= 4 max(d_av(v), d_av(v'))`.
    pub separation: Option<(usize, usize)>,
    /// Client with no representative `v` satisfying `d_av(v) <= d_av(j)`
    /// and `d(v, j) <= 4 d_av(j)`.
    pub coverage: Option<usize>,
    /// Representative with `y(U_v) < 1/2`.
    pub half_mass: Option<usize>,
    /// `(v, i, j)` with `i` in `U_v` and `d(i, v) > d(i, j) + 4 d_av(j)`.
    pub facility_bound: Option<(usize, usize, usize)>,
}

impl ClusterReport {
    pub fn all_pass(&self) -> bool {
        *self == Self::default()
    }
}

pub fn check_clusters(
    inst: &Instance,
    frac: &FractionalSolution,
    shares: &CostShares,
    clustering: &Clustering,
) -> ClusterReport {
    let d_av = &shares.d_av;
    let reps = &clustering.reps;
    let mut report = ClusterReport::default();
    'sep: for (a, &v) in reps.iter().enumerate() {
        for &w in &reps[a + 1..] {
            if inst.cc(v, w) <= 4.0 * d_av[v].max(d_av[w]) {
                report.separation = Some((v, w));
                break 'sep;
            }
        }
    }
    report.coverage = (0..inst.n_clients()).find(|&j| {
        !reps.iter().any(|&v| d_av[v] <= d_av[j] && inst.cc(v, j) <= 4.0 * d_av[j])
    });
    report.half_mass = reps
        .iter()
        .zip(&clustering.members)
        .find(|(_, u)| !leq_rel(0.5, frac.y_of(u)))
        .map(|(&v, _)| v);
    'bound: for (&v, u) in reps.iter().zip(&clustering.members) {
        for &i in u {
            for j in 0..inst.n_clients() {
                if !leq_rel(inst.fc(i, v), inst.fc(i, j) + 4.0 * d_av[j]) {
                    report.facility_bound = Some((v, i, j));
                    break 'bound;
                }
            }
        }
    }
    report
}

/// Per representative: `(sum_{i in U_v} x_{i,C} d(i, v), D(U_v) + 4 D'(U_v))`.
pub fn gather_terms(
    inst: &Instance,
    frac: &FractionalSolution,
    shares: &CostShares,
    clustering: &Clustering,
) -> Vec<(f64, f64)> {
    clustering
        .reps
        .iter()
        .zip(&clustering.members)
        .map(|(&v, u)| {
            let lhs = u.iter().map(|&i| frac.x_from(i) * inst.fc(i, v)).sum();
            let rhs = shares.d_of(u) + 4.0 * shares.d_prime_of(u);
            (lhs, rhs)
        })
        .collect()
}
