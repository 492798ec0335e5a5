use crate::error::{Error, Result};

/// Transportation problem between left nodes (bounded supplies) and right
/// nodes (capacities). An infinite cost forbids the edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BMatchingProblem {
    pub supplies: Vec<u32>,
    pub capacities: Vec<u32>,
    /// `costs[l][r]`
    pub costs: Vec<Vec<f64>>,
    pub required_flow: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BMatching {
    /// `flow[l][r]`, integral.
    pub flow: Vec<Vec<u32>>,
    pub cost: f64,
}

struct Edge {
    to: usize,
    cap: u32,
    cost: f64,
}

struct Graph {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    fn add(&mut self, from: usize, to: usize, cap: u32, cost: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, cost });
        self.edges.push(Edge { to: from, cap: 0, cost: -cost });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }
}

/// Min-cost flow of exactly `required_flow` units by successive shortest
/// paths with Johnson potentials (dense Dijkstra).
pub fn min_cost_b_matching(prob: &BMatchingProblem) -> Result<BMatching> {
    let nl = prob.supplies.len();
    let nr = prob.capacities.len();
    if prob.costs.len() != nl || prob.costs.iter().any(|row| row.len() != nr) {
        return Err(Error::InvalidParameter("cost matrix shape mismatch".into()));
    }
    if prob.costs.iter().flatten().any(|c| c.is_nan() || *c == f64::NEG_INFINITY) {
        return Err(Error::InvalidParameter("costs must be finite or +inf".into()));
    }
    let total_cap: u64 = prob.capacities.iter().map(|&c| c as u64).sum();
    let total_supply: u64 = prob.supplies.iter().map(|&c| c as u64).sum();
    if total_cap < prob.required_flow as u64 || total_supply < prob.required_flow as u64 {
        return Err(Error::Infeasible(format!(
            "cannot route {} units (supply {total_supply}, capacity {total_cap})",
            prob.required_flow
        )));
    }

    let source = nl + nr;
    let sink = source + 1;
    let n = sink + 1;
    let mut g = Graph { edges: Vec::new(), adj: vec![Vec::new(); n] };
    for (l, &s) in prob.supplies.iter().enumerate() {
        g.add(source, l, s, 0.0);
    }
    let mut pair = vec![vec![None; nr]; nl];
    for l in 0..nl {
        for r in 0..nr {
            let c = prob.costs[l][r];
            if c.is_finite() {
                let cap = prob.supplies[l].min(prob.capacities[r]);
                pair[l][r] = Some(g.add(l, nl + r, cap, c));
            }
        }
    }
    for (r, &c) in prob.capacities.iter().enumerate() {
        g.add(nl + r, sink, c, 0.0);
    }

    // initial potentials: shortest distances in the layered DAG
    let mut pot = vec![0.0; n];
    let mut sink_pot = f64::INFINITY;
    for r in 0..nr {
        let best = (0..nl).map(|l| prob.costs[l][r]).fold(f64::INFINITY, f64::min);
        pot[nl + r] = if best.is_finite() { best } else { 0.0 };
        if best.is_finite() {
            sink_pot = sink_pot.min(best);
        }
    }
    pot[sink] = if sink_pot.is_finite() { sink_pot } else { 0.0 };

    let mut routed = 0u32;
    let mut cost = 0.0;
    while routed < prob.required_flow {
        let mut dist = vec![f64::INFINITY; n];
        let mut prev_edge = vec![usize::MAX; n];
        let mut done = vec![false; n];
        dist[source] = 0.0;
        loop {
            let mut u = usize::MAX;
            for v in 0..n {
                if !done[v] && dist[v].is_finite() && (u == usize::MAX || dist[v] < dist[u]) {
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            for &e in &g.adj[u] {
                let edge = &g.edges[e];
                if edge.cap == 0 || done[edge.to] {
                    continue;
                }
                let reduced = (edge.cost + pot[u] - pot[edge.to]).max(0.0);
                let nd = dist[u] + reduced;
                if nd < dist[edge.to] {
                    dist[edge.to] = nd;
                    prev_edge[edge.to] = e;
                }
            }
        }
        if !dist[sink].is_finite() {
            return Err(Error::Infeasible(format!(
                "only {routed} of {} units can be routed",
                prob.required_flow
            )));
        }
        // capping at the sink distance keeps every residual reduced cost
        // nonnegative, including for nodes not reached this round
        let cap = dist[sink];
        for v in 0..n {
            pot[v] += dist[v].min(cap);
        }
        let mut push = prob.required_flow - routed;
        let mut v = sink;
        while v != source {
            let e = prev_edge[v];
            push = push.min(g.edges[e].cap);
            v = g.edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let e = prev_edge[v];
            g.edges[e].cap -= push;
            g.edges[e ^ 1].cap += push;
            cost += push as f64 * g.edges[e].cost;
            v = g.edges[e ^ 1].to;
        }
        routed += push;
    }

    let flow: Vec<Vec<u32>> = pair
        .iter()
        .map(|row| row.iter().map(|e| e.map_or(0, |e| g.edges[e ^ 1].cap)).collect())
        .collect();
    // recompute from the integral flow to avoid accumulated rounding
    let cost_exact = (0..nl)
        .flat_map(|l| (0..nr).map(move |r| (l, r)))
        .filter(|&(l, r)| flow[l][r] > 0)
        .map(|(l, r)| flow[l][r] as f64 * prob.costs[l][r])
        .sum::<f64>();
    debug_assert!((cost_exact - cost).abs() <= 1e-6 * cost_exact.abs().max(1.0));
    Ok(BMatching { flow, cost: cost_exact })
}
