//! Colored minimum spanning tree over the representatives, its contraction
//! into a forest of black components, and the decomposition of every tree
//! into subtrees of bounded weight.
//!
//! Representatives are referred to by their position in
//! [`Clustering::reps`] throughout.

use crate::basiclp::FractionalSolution;
use crate::cluster::Clustering;
use crate::error::{Error, Result};
use crate::instance::Instance;

/// Slack when deciding whether a weight reaches `ell`.
pub const BIG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeColor {
    Black,
    /// Directed from the endpoint in the small group to the one in the big group.
    Grey { tail: usize, head: usize },
    White,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    pub color: EdgeColor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColoredMst {
    /// Client id of each representative.
    pub reps: Vec<usize>,
    /// `y(U_v)` per representative.
    pub weights: Vec<f64>,
    /// Distances between representatives.
    pub dist: Vec<Vec<f64>>,
    pub ell: f64,
    /// Kruskal insertion order.
    pub edges: Vec<MstEdge>,
}

impl ColoredMst {
    pub fn is_big(&self, weight: f64) -> bool {
        weight >= self.ell - BIG_TOL
    }

    /// `d(J, R \ J)`, infinite when `J` covers `R`.
    pub fn separation(&self, set: &[usize]) -> f64 {
        let mut inside = vec![false; self.reps.len()];
        set.iter().for_each(|&v| inside[v] = true);
        let mut best = f64::INFINITY;
        for &v in set {
            for w in 0..self.reps.len() {
                if !inside[w] {
                    best = best.min(self.dist[v][w]);
                }
            }
        }
        best
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, v: usize) -> usize {
        let mut r = v;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut v = v;
        while self.parent[v] != r {
            let next = self.parent[v];
            self.parent[v] = r;
            v = next;
        }
        r
    }
}

pub fn build_colored_mst(
    inst: &Instance,
    clustering: &Clustering,
    frac: &FractionalSolution,
    ell: f64,
) -> Result<ColoredMst> {
    let reps = clustering.reps.clone();
    let weights = clustering.members.iter().map(|u| frac.y_of(u)).collect();
    let dist = reps.iter().map(|&v| reps.iter().map(|&w| inst.cc(v, w)).collect()).collect();
    kruskal_colored(reps, weights, dist, ell)
}

/// Kruskal over all pairs sorted by length, then by client ids, coloring
/// each edge by the weights of the two groups it merges.
pub fn kruskal_colored(
    reps: Vec<usize>,
    weights: Vec<f64>,
    dist: Vec<Vec<f64>>,
    ell: f64,
) -> Result<ColoredMst> {
    let n = reps.len();
    if n == 0 {
        return Err(Error::InvalidParameter("no representatives".into()));
    }
    if weights.len() != n || dist.len() != n || dist.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParameter("representative data shape mismatch".into()));
    }
    if !(ell >= 1.0) {
        return Err(Error::InvalidParameter(format!("ell must be at least 1, got {ell}")));
    }
    let mut pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let key = |&(a, b): &(usize, usize)| (reps[a].min(reps[b]), reps[a].max(reps[b]));
    pairs.sort_by(|p, q| dist[p.0][p.1].total_cmp(&dist[q.0][q.1]).then(key(p).cmp(&key(q))));

    let mut mst = ColoredMst { reps, weights: weights.clone(), dist, ell, edges: Vec::new() };
    let mut uf = UnionFind::new(n);
    let mut group_weight = weights;
    for (a, b) in pairs {
        if mst.edges.len() + 1 == n {
            break;
        }
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra == rb {
            continue;
        }
        let (wa, wb) = (group_weight[ra], group_weight[rb]);
        let color = match (mst.is_big(wa), mst.is_big(wb)) {
            (false, false) => EdgeColor::Black,
            (false, true) => EdgeColor::Grey { tail: a, head: b },
            (true, false) => EdgeColor::Grey { tail: b, head: a },
            (true, true) => EdgeColor::White,
        };
        uf.parent[ra] = rb;
        group_weight[rb] = wa + wb;
        mst.edges.push(MstEdge { a, b, length: mst.dist[a][b], color });
    }
    Ok(mst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestNode {
    /// Black component `J_p`, sorted.
    pub reps: Vec<usize>,
    /// `y(U_p)`
    pub weight: f64,
    /// Parent node and the length of the grey edge to it.
    pub parent: Option<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractedForest {
    /// Ordered by the smallest client id in each component.
    pub nodes: Vec<ForestNode>,
    pub roots: Vec<usize>,
    /// The whole MST is black because the total weight stays below `ell`.
    pub degenerate: bool,
}

impl ContractedForest {
    pub fn children(&self, p: usize) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&q| self.nodes[q].parent.map(|(r, _)| r) == Some(p)).collect()
    }

    pub fn root_of(&self, mut p: usize) -> usize {
        while let Some((q, _)) = self.nodes[p].parent {
            p = q;
        }
        p
    }

    /// Representatives of a set of nodes, sorted.
    pub fn reps_of(&self, nodes: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = nodes.iter().flat_map(|&p| self.nodes[p].reps.clone()).collect();
        out.sort_unstable();
        out
    }
}

pub fn contract(cmst: &ColoredMst) -> Result<ContractedForest> {
    let n = cmst.reps.len();
    let mut uf = UnionFind::new(n);
    for e in &cmst.edges {
        if e.color == EdgeColor::Black {
            let (ra, rb) = (uf.find(e.a), uf.find(e.b));
            uf.parent[ra] = rb;
        }
    }
    let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        by_root[uf.find(v)].push(v);
    }
    let mut comps: Vec<Vec<usize>> = by_root.into_iter().filter(|c| !c.is_empty()).collect();
    comps.sort_by_key(|c| c.iter().map(|&v| cmst.reps[v]).min());
    let mut node_of = vec![0; n];
    for (p, c) in comps.iter().enumerate() {
        c.iter().for_each(|&v| node_of[v] = p);
    }
    let mut nodes: Vec<ForestNode> = comps
        .into_iter()
        .map(|reps| {
            let weight = reps.iter().map(|&v| cmst.weights[v]).sum();
            ForestNode { reps, weight, parent: None }
        })
        .collect();
    for e in &cmst.edges {
        if let EdgeColor::Grey { tail, head } = e.color {
            let (p, q) = (node_of[tail], node_of[head]);
            if nodes[p].parent.is_some() {
                return Err(Error::Invariant(format!("node {p} has two outgoing grey edges")));
            }
            nodes[p].parent = Some((q, e.length));
        }
    }
    let roots: Vec<usize> = (0..nodes.len()).filter(|&p| nodes[p].parent.is_none()).collect();
    let total: f64 = cmst.weights.iter().sum();
    let forest = ContractedForest { nodes, roots, degenerate: !cmst.is_big(total) };
    check_forest(cmst, &forest)?;
    Ok(forest)
}

/// Re-checks the structure of a contracted forest: rooted trees, big roots
/// and small other nodes, the grey and black edge length properties, the
/// black component property and the root weight dichotomy.
pub fn check_forest(cmst: &ColoredMst, forest: &ContractedForest) -> Result<()> {
    let fail = |msg: String| Err(Error::Invariant(msg));
    let nodes = &forest.nodes;
    for p in 0..nodes.len() {
        let mut q = p;
        for _ in 0..=nodes.len() {
            match nodes[q].parent {
                Some((r, _)) => q = r,
                None => break,
            }
        }
        if nodes[q].parent.is_some() {
            return fail(format!("grey edges from node {p} form a cycle"));
        }
    }
    if forest.degenerate {
        if nodes.len() != 1 {
            return fail("all-black tree did not contract to one node".into());
        }
    } else {
        for (p, node) in nodes.iter().enumerate() {
            let big = cmst.is_big(node.weight);
            if node.parent.is_none() && !big {
                return fail(format!("root node {p} is small"));
            }
            if node.parent.is_some() && big {
                return fail(format!("non-root node {p} is big"));
            }
        }
    }
    for (p, node) in nodes.iter().enumerate() {
        let sep = cmst.separation(&node.reps);
        if let Some((q, len)) = node.parent {
            if let Some((_, up)) = nodes[q].parent {
                if up > len {
                    return fail(format!("grey edge lengths increase above node {p}"));
                }
            }
            if len != sep {
                return fail(format!("grey edge of node {p} has length {len}, separation {sep}"));
            }
        }
        for e in &cmst.edges {
            if e.color == EdgeColor::Black && node.reps.contains(&e.a) && e.length > sep {
                return fail(format!("black edge ({}, {}) in node {p} exceeds {sep}", e.a, e.b));
            }
        }
        if node.parent.is_none() && node.reps.len() > 1 && node.weight > 2.0 * cmst.ell + BIG_TOL {
            return fail(format!(
                "root node {p} has weight {} above 2 ell with {} representatives",
                node.weight,
                node.reps.len()
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subtree {
    pub root: usize,
    /// Every node of the subtree, root included, sorted.
    pub nodes: Vec<usize>,
    /// Emitted as the remainder once no qualifying node is left.
    pub last: bool,
}

impl Subtree {
    pub fn non_root(&self) -> Vec<usize> {
        self.nodes.iter().copied().filter(|&p| p != self.root).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeDecomposition {
    pub root: usize,
    pub subtrees: Vec<Subtree>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    /// `J_{P \ r}` for subtree `index` of tree `tree`.
    Subtree { tree: usize, index: usize },
    /// `J_{r_tau}` of tree `tree`.
    Root { tree: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub kind: GroupKind,
    pub nodes: Vec<usize>,
    /// Representative positions, sorted.
    pub reps: Vec<usize>,
    /// Root node of the subtree the group hangs from.
    pub anchor: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupDecomposition {
    pub trees: Vec<TreeDecomposition>,
}

impl GroupDecomposition {
    /// The partition of `R`: every nonempty `J_{P \ r}` in order, then every
    /// tree root.
    pub fn groups(&self, forest: &ContractedForest) -> Vec<Group> {
        let mut out = Vec::new();
        for (t, tree) in self.trees.iter().enumerate() {
            for (index, st) in tree.subtrees.iter().enumerate() {
                let nodes = st.non_root();
                if !nodes.is_empty() {
                    out.push(Group {
                        kind: GroupKind::Subtree { tree: t, index },
                        reps: forest.reps_of(&nodes),
                        nodes,
                        anchor: st.root,
                    });
                }
            }
        }
        for (t, tree) in self.trees.iter().enumerate() {
            out.push(Group {
                kind: GroupKind::Root { tree: t },
                nodes: vec![tree.root],
                reps: forest.reps_of(&[tree.root]),
                anchor: tree.root,
            });
        }
        out
    }
}

fn subtree_nodes(children: &[Vec<usize>], p: usize, out: &mut Vec<usize>) {
    out.push(p);
    for &c in &children[p] {
        subtree_nodes(children, c, out);
    }
}

pub fn decompose(forest: &ContractedForest, ell: f64) -> Result<GroupDecomposition> {
    let n = forest.nodes.len();
    let mut trees = Vec::new();
    for &root in &forest.roots {
        // children lists in increasing node id
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for p in 0..n {
            if let Some((q, _)) = forest.nodes[p].parent {
                if forest.root_of(p) == root {
                    children[q].push(p);
                }
            }
        }
        let weight = |set: &[usize]| set.iter().map(|&p| forest.nodes[p].weight).sum::<f64>();
        let mut subtrees = Vec::new();
        loop {
            let mut alive = Vec::new();
            subtree_nodes(&children, root, &mut alive);
            let mut depth = vec![0usize; n];
            let mut order = vec![root];
            let mut k = 0;
            while k < order.len() {
                let p = order[k];
                for &c in &children[p] {
                    depth[c] = depth[p] + 1;
                    order.push(c);
                }
                k += 1;
            }
            let mut chosen: Option<usize> = None;
            for &p in &alive {
                let mut below = Vec::new();
                subtree_nodes(&children, p, &mut below);
                if weight(&below[1..]) >= ell - BIG_TOL {
                    let better = match chosen {
                        None => true,
                        Some(c) => depth[p] > depth[c] || (depth[p] == depth[c] && p < c),
                    };
                    if better {
                        chosen = Some(p);
                    }
                }
            }
            let Some(p) = chosen else {
                let mut nodes = alive;
                nodes.sort_unstable();
                subtrees.push(Subtree { root, nodes, last: true });
                break;
            };
            let child_trees: Vec<(usize, Vec<usize>)> = children[p]
                .iter()
                .map(|&c| {
                    let mut s = Vec::new();
                    subtree_nodes(&children, c, &mut s);
                    (c, s)
                })
                .collect();
            let picked: Vec<usize> = match child_trees.iter().find(|(_, s)| weight(s) >= ell - BIG_TOL) {
                Some((c, _)) => vec![*c],
                None => {
                    let mut acc = 0.0;
                    let mut picked = Vec::new();
                    for (c, s) in &child_trees {
                        picked.push(*c);
                        acc += weight(s);
                        if acc >= ell - BIG_TOL {
                            break;
                        }
                    }
                    picked
                }
            };
            let mut nodes = vec![p];
            for (c, s) in &child_trees {
                if picked.contains(c) {
                    nodes.extend(s);
                }
            }
            nodes.sort_unstable();
            children[p].retain(|c| !picked.contains(c));
            subtrees.push(Subtree { root: p, nodes, last: false });
        }
        trees.push(TreeDecomposition { root, subtrees });
    }
    let dec = GroupDecomposition { trees };
    check_decomposition(forest, &dec, ell)?;
    Ok(dec)
}

/// Every non-root node appears exactly once as a non-root, the subtree count
/// is at most the tree weight over `ell`, uncontracted subtrees have at most
/// `8 ell` representatives, and non-final contributing sets weigh within
/// `[ell, 2 ell]`.
pub fn check_decomposition(
    forest: &ContractedForest,
    dec: &GroupDecomposition,
    ell: f64,
) -> Result<()> {
    let fail = |msg: String| Err(Error::Invariant(msg));
    let mut seen = vec![0usize; forest.nodes.len()];
    for tree in &dec.trees {
        let tree_nodes: Vec<usize> =
            (0..forest.nodes.len()).filter(|&p| forest.root_of(p) == tree.root).collect();
        let tree_weight: f64 = tree_nodes.iter().map(|&p| forest.nodes[p].weight).sum();
        if !forest.degenerate && tree.subtrees.len() as f64 > tree_weight / ell + BIG_TOL {
            return fail(format!(
                "tree rooted at {} has {} subtrees for weight {tree_weight}",
                tree.root,
                tree.subtrees.len()
            ));
        }
        for st in &tree.subtrees {
            for p in st.non_root() {
                seen[p] += 1;
            }
            let size: usize = st.nodes.iter().map(|&p| forest.nodes[p].reps.len()).sum();
            if size as f64 > 8.0 * ell {
                return fail(format!("subtree rooted at {} has {size} representatives", st.root));
            }
            if !st.last {
                let w: f64 = st.non_root().iter().map(|&p| forest.nodes[p].weight).sum();
                if w < ell - BIG_TOL || w > 2.0 * ell + BIG_TOL {
                    return fail(format!("subtree rooted at {} collects weight {w}", st.root));
                }
            }
        }
    }
    for (p, &count) in seen.iter().enumerate() {
        let expected = usize::from(forest.nodes[p].parent.is_some());
        if count != expected {
            return fail(format!("node {p} appears {count} times as a non-root"));
        }
    }
    Ok(())
}
