use rand::Rng;

use super::{final_assignment, move_lp_group, IntegralSolution, MoveSolution, MovingCost};
use crate::basiclp::{CostShares, Cut, FractionalSolution};
use crate::cluster::Clustering;
use crate::configlp::{
    build_config_system, check_feasible, is_concentrated, ConfigOutcome, Params, PreAssignment,
    Preassigner,
};
use crate::error::{Error, Result};
use crate::grouping::{
    build_colored_mst, contract, decompose, ColoredMst, ContractedForest, GroupDecomposition,
    GroupKind, BIG_TOL,
};
use crate::instance::Instance;
use crate::tol::{self, leq_rel};

/// Demand placement inside one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSolve {
    pub kind: GroupKind,
    /// `U` of the group, sorted.
    pub facilities: Vec<usize>,
    /// Client id of the representative all demand is gathered at.
    pub center: usize,
    pub demand: f64,
    pub preopened: usize,
    pub budget: f64,
    /// The feasible placement proportional to the fractional solution.
    pub witness: Vec<f64>,
    pub witness_objective: f64,
    pub placement: MoveSolution,
}

/// Opened copies inside one tree of the forest against the per-tree bound
/// `(1 + 1/ell) y + 2 (subtrees + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeAccount {
    pub root: usize,
    pub opened: u32,
    pub weight: f64,
    pub subtrees: usize,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigRun {
    pub solution: IntegralSolution,
    pub moving: MovingCost,
    pub cmst: ColoredMst,
    pub forest: ContractedForest,
    pub decomposition: GroupDecomposition,
    /// Nodes whose representative set is concentrated.
    pub concentrated: Vec<usize>,
    pub preassignments: Vec<(usize, PreAssignment)>,
    pub groups: Vec<GroupSolve>,
    pub trees: Vec<TreeAccount>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigRound {
    Solved(Box<ConfigRun>),
    /// The configuration constraints fail for `U` of `node`; `cut` separates
    /// the current point.
    Violated { node: usize, facilities: Vec<usize>, cut: Cut },
}

/// `x_{i, C~}` for every facility.
fn remaining_mass(frac: &FractionalSolution, fixed: &[Option<usize>]) -> Vec<f64> {
    frac.x
        .iter()
        .map(|row| row.iter().zip(fixed).filter(|(_, f)| f.is_none()).map(|(x, _)| x).sum())
        .collect()
}

/// Groups the representatives, pre-assigns clients around concentrated
/// sets, moves the remaining demand inside every group and assigns all
/// clients. Stops at the first node whose configuration constraints fail.
pub fn round_config<R: Rng + ?Sized>(
    inst: &Instance,
    frac: &FractionalSolution,
    shares: &CostShares,
    clustering: &Clustering,
    params: &Params,
    max_retries: usize,
    rng: &mut R,
) -> Result<ConfigRound> {
    let ell = params.ell as f64;
    let cmst = build_colored_mst(inst, clustering, frac, ell)?;
    let forest = contract(&cmst)?;
    let decomposition = decompose(&forest, ell)?;
    let node_facilities: Vec<Vec<usize>> =
        forest.nodes.iter().map(|n| clustering.facilities_of(&n.reps)).collect();

    let mut fixed: Vec<Option<usize>> = vec![None; inst.n_clients()];
    let mut open = vec![0u32; inst.n_facilities()];
    let mut concentrated = Vec::new();
    let mut preassignments = Vec::new();
    for (p, node) in forest.nodes.iter().enumerate() {
        let eligible = node.parent.is_some() || node.weight <= 2.0 * ell + BIG_TOL;
        let b = &node_facilities[p];
        if !eligible || !is_concentrated(frac, b, params.ell2 as f64) {
            continue;
        }
        concentrated.push(p);
        let sys = build_config_system(inst, frac, b, params.ell1)?;
        let z = match check_feasible(&sys, frac)? {
            ConfigOutcome::Infeasible(cut) => {
                return Ok(ConfigRound::Violated { node: p, facilities: b.clone(), cut });
            }
            ConfigOutcome::Feasible(z) => z,
        };
        let pa = Preassigner::new(inst, &sys, &z, frac, shares, params)?.run(rng, max_retries)?;
        for &i in &pa.facilities {
            open[i] += 1;
        }
        for &(j, i) in &pa.assignment {
            fixed[j].get_or_insert(i);
        }
        preassignments.push((p, pa));
    }
    let preopened = open.clone();

    let x_rem = remaining_mass(frac, &fixed);
    let mut moving = MovingCost {
        preassign: preassignments.iter().map(|(_, pa)| pa.cost).sum(),
        to_facilities: (0..inst.n_clients()).filter(|&j| fixed[j].is_none()).map(|j| shares.d_av[j]).sum(),
        ..MovingCost::default()
    };
    let mut groups = Vec::new();
    for g in decomposition.groups(&forest) {
        let facilities = clustering.facilities_of(&g.reps);
        let center = forest.nodes[g.anchor]
            .reps
            .iter()
            .map(|&v| clustering.reps[v])
            .min()
            .expect("nodes are nonempty");
        let mut witness = vec![0.0; facilities.len()];
        for &p in &g.nodes {
            let u = &node_facilities[p];
            let total = frac.x_mass(u);
            let ratio = if total > 0.0 { u.iter().map(|&i| x_rem[i]).sum::<f64>() / total } else { 0.0 };
            for &i in u {
                let k = facilities.binary_search(&i).expect("node facilities lie in the group");
                witness[k] = ratio * frac.x_from(i);
            }
        }
        let caps: Vec<u32> = facilities.iter().map(|&i| inst.capacity(i)).collect();
        let dists: Vec<f64> = facilities.iter().map(|&i| inst.fc(i, center)).collect();
        let demand: f64 = facilities.iter().map(|&i| x_rem[i]).sum();
        let pre = facilities.iter().filter(|&&i| preopened[i] > 0).count();
        let budget = (1.0 + 1.0 / ell) * frac.y_of(&facilities);
        let placement = move_lp_group(&caps, &dists, demand, pre, budget, &witness)?;
        moving.to_centers += facilities.iter().zip(&dists).map(|(&i, d)| x_rem[i] * d).sum::<f64>();
        moving.from_centers += placement.objective;
        for (&i, &a) in facilities.iter().zip(&placement.alpha) {
            if a > tol::DEMAND {
                open[i] += 1;
            }
        }
        let witness_objective = witness.iter().zip(&dists).map(|(a, d)| a * d).sum();
        groups.push(GroupSolve {
            kind: g.kind,
            facilities,
            center,
            demand,
            preopened: pre,
            budget,
            witness,
            witness_objective,
            placement,
        });
    }

    let mut trees = Vec::new();
    for tree in &decomposition.trees {
        let nodes: Vec<usize> =
            (0..forest.nodes.len()).filter(|&p| forest.root_of(p) == tree.root).collect();
        let u: Vec<usize> = nodes.iter().flat_map(|&p| node_facilities[p].clone()).collect();
        let weight = frac.y_of(&u);
        let account = TreeAccount {
            root: tree.root,
            opened: u.iter().map(|&i| open[i]).sum(),
            weight,
            subtrees: tree.subtrees.len(),
            bound: (1.0 + 1.0 / ell) * weight + 2.0 * (tree.subtrees.len() + 1) as f64,
        };
        if !leq_rel(account.opened as f64, account.bound) {
            return Err(Error::Invariant(format!(
                "tree rooted at node {} opens {} copies, bound {}",
                tree.root, account.opened, account.bound
            )));
        }
        trees.push(account);
    }

    let (assignment, _) = final_assignment(inst, &open, &fixed)?;
    let solution = IntegralSolution::new(inst, open, assignment);
    solution.validate(inst)?;
    Ok(ConfigRound::Solved(Box::new(ConfigRun {
        solution,
        moving,
        cmst,
        forest,
        decomposition,
        concentrated,
        preassignments,
        groups,
        trees,
    })))
}
