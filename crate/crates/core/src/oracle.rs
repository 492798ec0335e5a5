//! Ground truth for small instances: exhaustive search for the optimal
//! integral solution, and an auditor that re-checks every structural
//! invariant of a pipeline run.

use crate::basiclp::{CostShares, FractionalSolution};
use crate::cluster::{check_clusters, gather_terms, Clustering};
use crate::configlp::separation_terms;
use crate::error::{Error, Result};
use crate::grouping::{
    build_colored_mst, check_decomposition, check_forest, contract, decompose, ColoredMst,
    ContractedForest, GroupDecomposition,
};
use crate::instance::Instance;
use crate::lpsolve::{min_cost_b_matching, BMatchingProblem};
use crate::round::ConfigRun;
use crate::tol::{self, leq_rel};

/// Most multisets [`exact_opt`] will try.
pub const EXACT_BUDGET: u64 = 5_000_000;

/// Largest number of representatives for which every subset is checked
/// against the separation bound.
pub const SWEEP_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub opt_cost: f64,
    /// Copies opened per facility.
    pub open: Vec<u32>,
    /// Facility of every client.
    pub assignment: Vec<usize>,
}

/// Number of multisets of size at most `k` over `n` kinds with at most
/// `max_copies` of each, saturating at `u64::MAX`.
fn multiset_count(n: usize, k: usize, max_copies: usize) -> u64 {
    // ways[s] = multisets of size s over the kinds seen so far
    let mut ways = vec![0u64; k + 1];
    ways[0] = 1;
    for _ in 0..n {
        let mut next = vec![0u64; k + 1];
        for (s, &w) in ways.iter().enumerate() {
            for c in 0..=max_copies.min(k - s) {
                next[s + c] = next[s + c].saturating_add(w);
            }
        }
        ways = next;
    }
    ways.iter().fold(0u64, |a, &w| a.saturating_add(w))
}

/// Optimal assignment cost when `open[i]` copies of facility `i` are open,
/// `None` if the capacity does not suffice.
fn assignment_cost(inst: &Instance, open: &[u32]) -> Result<Option<(f64, Vec<usize>)>> {
    let nf = inst.n_facilities();
    let capacity: u64 = (0..nf).map(|i| open[i] as u64 * inst.capacity(i) as u64).sum();
    if capacity < inst.n_clients() as u64 {
        return Ok(None);
    }
    let prob = BMatchingProblem {
        supplies: vec![1; inst.n_clients()],
        capacities: (0..nf)
            .map(|i| (open[i] as u64 * inst.capacity(i) as u64).min(u32::MAX as u64) as u32)
            .collect(),
        costs: (0..inst.n_clients())
            .map(|j| (0..nf).map(|i| if open[i] > 0 { inst.fc(i, j) } else { f64::INFINITY }).collect())
            .collect(),
        required_flow: inst.n_clients() as u32,
    };
    let m = min_cost_b_matching(&prob)?;
    let assignment = m
        .flow
        .iter()
        .map(|row| row.iter().position(|&f| f > 0).expect("every client routed"))
        .collect();
    Ok(Some((m.cost, assignment)))
}

/// Exhaustive optimum over every multiset of at most `k` opened copies
/// with at most `max_copies` copies per facility. Among equal costs the
/// first multiset in enumeration order (fewest copies, then lexicographic)
/// wins.
pub fn exact_opt_with(inst: &Instance, k: usize, max_copies: usize) -> Result<ExactResult> {
    let nf = inst.n_facilities();
    let count = multiset_count(nf, k, max_copies);
    if count > EXACT_BUDGET {
        return Err(Error::ResourceLimit(format!(
            "{count} facility multisets exceed the budget of {EXACT_BUDGET}"
        )));
    }
    let mut best: Option<ExactResult> = None;
    for size in 1..=k {
        let mut open = vec![0u32; nf];
        enumerate(inst, &mut open, 0, size, max_copies as u32, &mut best)?;
    }
    best.ok_or_else(|| Error::Infeasible(format!("{k} copies cannot serve every client")))
}

fn enumerate(
    inst: &Instance,
    open: &mut Vec<u32>,
    from: usize,
    left: usize,
    max_copies: u32,
    best: &mut Option<ExactResult>,
) -> Result<()> {
    if left == 0 {
        if let Some((cost, assignment)) = assignment_cost(inst, open)? {
            if best.as_ref().is_none_or(|b| cost < b.opt_cost) {
                *best = Some(ExactResult { opt_cost: cost, open: open.clone(), assignment });
            }
        }
        return Ok(());
    }
    for i in from..open.len() {
        if open[i] < max_copies {
            open[i] += 1;
            enumerate(inst, open, i, left - 1, max_copies, best)?;
            open[i] -= 1;
        }
    }
    Ok(())
}

/// Optimum with soft capacities: up to `k` copies in total, any number of
/// them on one facility. `k_override` replaces the instance's `k`.
pub fn exact_opt(inst: &Instance, k_override: Option<usize>) -> Result<ExactResult> {
    let k = k_override.unwrap_or(inst.k());
    exact_opt_with(inst, k, k)
}

/// Optimum with hard capacities: every facility opens at most once.
pub fn exact_opt_hard(inst: &Instance, k_override: Option<usize>) -> Result<ExactResult> {
    exact_opt_with(inst, k_override.unwrap_or(inst.k()), 1)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckStatus {
    Pass,
    Fail(String),
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditCheck {
    pub name: &'static str,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    fn push(&mut self, name: &'static str, status: CheckStatus) {
        self.checks.push(AuditCheck { name, status });
    }

    fn witness(&mut self, name: &'static str, witness: Option<String>) {
        self.push(name, witness.map_or(CheckStatus::Pass, CheckStatus::Fail));
    }

    pub fn failures(&self) -> Vec<&AuditCheck> {
        self.checks.iter().filter(|c| matches!(c.status, CheckStatus::Fail(_))).collect()
    }

    pub fn all_pass(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn status(&self, name: &str) -> Option<&CheckStatus> {
        self.checks.iter().find(|c| c.name == name).map(|c| &c.status)
    }

    /// One `name status [witness]` line per check.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let line = match &c.status {
                CheckStatus::Pass => format!("{} pass\n", c.name),
                CheckStatus::Fail(w) => format!("{} fail {w}\n", c.name),
                CheckStatus::Skipped(w) => format!("{} skipped {w}\n", c.name),
            };
            out.push_str(&line);
        }
        out.push_str(&format!("failures {}\n", self.failures().len()));
        out
    }
}

/// Everything a pipeline run produced. Without a configuration run the
/// grouping structures are rebuilt at the audited `ell`.
#[derive(Debug, Clone, Copy)]
pub struct Bundle<'a> {
    pub inst: &'a Instance,
    pub frac: &'a FractionalSolution,
    pub shares: &'a CostShares,
    pub clustering: &'a Clustering,
    pub run: Option<&'a ConfigRun>,
}

fn invariant_message(e: Error) -> String {
    match e {
        Error::Invariant(msg) => msg,
        other => other.to_string(),
    }
}

/// Runs every invariant check on `bundle`. Never fails; problems are
/// reported as failed checks.
pub fn audit(bundle: &Bundle, ell: f64) -> AuditReport {
    let Bundle { inst, frac, shares, clustering, run } = *bundle;
    let mut report = AuditReport::default();

    let clusters = check_clusters(inst, frac, shares, clustering);
    report.witness("cluster_separation", clusters.separation.map(|(v, w)| format!("reps {v} {w}")));
    report.witness("cluster_coverage", clusters.coverage.map(|j| format!("client {j}")));
    report.witness("cluster_half_mass", clusters.half_mass.map(|v| format!("rep {v}")));
    report.witness(
        "cluster_facility_bound",
        clusters.facility_bound.map(|(v, i, j)| format!("rep {v} facility {i} client {j}")),
    );

    let terms = gather_terms(inst, frac, shares, clustering);
    report.witness(
        "gather_bound",
        terms
            .iter()
            .position(|&(lhs, rhs)| !leq_rel(lhs, rhs))
            .map(|v| format!("rep {} lhs {} rhs {}", clustering.reps[v], terms[v].0, terms[v].1)),
    );
    let total: f64 = terms.iter().map(|t| t.0).sum();
    report.witness(
        "gather_total",
        (!leq_rel(total, 5.0 * frac.lp_value)).then(|| format!("sum {total} lp {}", frac.lp_value)),
    );

    let built;
    let (cmst, forest, dec): (&ColoredMst, &ContractedForest, &GroupDecomposition) = match run {
        Some(r) => (&r.cmst, &r.forest, &r.decomposition),
        None => {
            let structures = build_colored_mst(inst, clustering, frac, ell).and_then(|cmst| {
                let forest = contract(&cmst)?;
                let dec = decompose(&forest, ell)?;
                Ok((cmst, forest, dec))
            });
            match structures {
                Ok(s) => {
                    built = s;
                    (&built.0, &built.1, &built.2)
                }
                Err(e) => {
                    let msg = invariant_message(e);
                    for name in ["forest", "decomposition", "separation_sweep", "demand_witness"] {
                        report.push(name, CheckStatus::Fail(msg.clone()));
                    }
                    return report;
                }
            }
        }
    };
    report.witness("forest", check_forest(cmst, forest).err().map(invariant_message));
    report.witness(
        "decomposition",
        check_decomposition(forest, dec, cmst.ell).err().map(invariant_message),
    );

    let r = clustering.reps.len();
    if r > SWEEP_LIMIT {
        report.push("separation_sweep", CheckStatus::Skipped(format!("{r} representatives")));
    } else {
        let mut witness = None;
        for mask in 1u32..(1 << r) - 1 {
            let set: Vec<usize> = (0..r).filter(|&v| mask >> v & 1 == 1).collect();
            let (lhs, rhs) = separation_terms(cmst, frac, shares, clustering, &set);
            if !leq_rel(lhs, rhs) {
                witness = Some(format!("set {set:?} lhs {lhs} rhs {rhs}"));
                break;
            }
        }
        report.witness("separation_sweep", witness);
    }

    match run {
        None => report.push("demand_witness", CheckStatus::Skipped("no configuration run".into())),
        Some(run) => {
            let bad = run.groups.iter().find_map(|g| {
                let sum: f64 = g.witness.iter().sum();
                let load: f64 = g
                    .witness
                    .iter()
                    .zip(&g.facilities)
                    .map(|(a, &i)| a / inst.capacity(i) as f64)
                    .sum();
                let boxed = g
                    .witness
                    .iter()
                    .zip(&g.facilities)
                    .all(|(&a, &i)| a >= -tol::FEAS && leq_rel(a, inst.capacity(i) as f64));
                let ok = boxed
                    && leq_rel((sum - g.demand).abs(), 0.0)
                    && leq_rel(load + g.preopened as f64, g.budget);
                (!ok).then(|| format!("group at center {} sum {sum} load {load}", g.center))
            });
            report.witness("demand_witness", bad);
        }
    }
    report
}
