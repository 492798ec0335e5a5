mod common;

use ckm::basiclp::{cost_shares, solve_basic};
use ckm::cluster::cluster;
use ckm::grouping::{
    build_colored_mst, check_decomposition, contract, decompose, kruskal_colored, EdgeColor,
};
use common::{suite_instance, SUITE_SEEDS};

fn separation(dist: &[Vec<f64>], set: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for &v in set {
        for w in (0..dist.len()).filter(|w| !set.contains(w)) {
            best = best.min(dist[v][w]);
        }
    }
    best
}

#[test]
fn gap_weights_trace() {
    // three co-located groups of weight 4/3 each, 100 apart
    let d = vec![vec![0.0, 100.0, 100.0], vec![100.0, 0.0, 100.0], vec![100.0, 100.0, 0.0]];
    let mst = kruskal_colored(vec![0, 4, 8], vec![4.0 / 3.0; 3], d, 2.0).unwrap();
    assert_eq!(mst.edges.len(), 2);
    assert_eq!((mst.edges[0].a, mst.edges[0].b, mst.edges[0].color), (0, 1, EdgeColor::Black));
    assert_eq!((mst.edges[1].a, mst.edges[1].b), (0, 2));
    assert_eq!(mst.edges[1].color, EdgeColor::Grey { tail: 2, head: 0 });
    let forest = contract(&mst).unwrap();
    assert_eq!(forest.nodes.len(), 2);
    assert_eq!(forest.roots, vec![0]);
    assert_eq!(forest.nodes[1].parent, Some((0, 100.0)));
}

#[test]
fn forests_and_groups_over_the_suite() {
    for seed in SUITE_SEEDS {
        let inst = suite_instance(seed);
        let frac = solve_basic(&inst, &[]).unwrap();
        let clustering = cluster(&inst, &cost_shares(&inst, &frac));
        let r = clustering.reps.len();
        for ell in [1.0, 2.0, 3.0, 5.0] {
            let mst = build_colored_mst(&inst, &clustering, &frac, ell).unwrap();
            assert_eq!(mst.edges.len(), r - 1);
            let forest = contract(&mst).unwrap();
            for node in &forest.nodes {
                let sep = separation(&mst.dist, &node.reps);
                for e in mst.edges.iter().filter(|e| e.color == EdgeColor::Black) {
                    if node.reps.contains(&e.a) {
                        assert!(node.reps.contains(&e.b));
                        assert!(e.length <= sep, "seed {seed} ell {ell}");
                    }
                }
                if let Some((_, len)) = node.parent {
                    assert_eq!(len, sep);
                }
            }
            let dec = decompose(&forest, ell).unwrap();
            check_decomposition(&forest, &dec, ell).unwrap();
            let mut seen = vec![0; r];
            for g in dec.groups(&forest) {
                g.reps.iter().for_each(|&v| seen[v] += 1);
            }
            assert!(seen.iter().all(|&n| n == 1), "seed {seed} ell {ell}: {seen:?}");
        }
    }
}
