mod common;

use ckm::basiclp::{cost_shares, solve_basic};
use ckm::cluster::{cluster, voronoi_partition};
use ckm::configlp::Params;
use ckm::instance::{gen_gap_instance, gen_random, Geometry, Instance, RandomSpec};
use ckm::oracle::{audit, exact_opt, exact_opt_hard, Bundle, CheckStatus};
use ckm::round::cutting_plane_solve;
use common::suite_instance;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Assigns clients one at a time, opening copies on demand, with branch and
/// bound on the partial cost.
fn naive_opt(inst: &Instance, max_copies: u32) -> f64 {
    struct State<'a> {
        inst: &'a Instance,
        max_copies: u32,
        copies: Vec<u32>,
        load: Vec<u32>,
        best: f64,
    }
    fn go(s: &mut State, j: usize, cost: f64) {
        if cost >= s.best {
            return;
        }
        if j == s.inst.n_clients() {
            s.best = cost;
            return;
        }
        for i in 0..s.inst.n_facilities() {
            let c = cost + s.inst.fc(i, j);
            if s.load[i] < s.copies[i] * s.inst.capacity(i) {
                s.load[i] += 1;
                go(s, j + 1, c);
                s.load[i] -= 1;
            } else if s.copies[i] < s.max_copies && s.copies.iter().sum::<u32>() < s.inst.k() as u32 {
                s.copies[i] += 1;
                s.load[i] += 1;
                go(s, j + 1, c);
                s.load[i] -= 1;
                s.copies[i] -= 1;
            }
        }
    }
    let nf = inst.n_facilities();
    let mut s = State { inst, max_copies, copies: vec![0; nf], load: vec![0; nf], best: f64::INFINITY };
    go(&mut s, 0, 0.0);
    s.best
}

fn small_instance(seed: u64) -> Instance {
    let spec = RandomSpec {
        n_facilities: 3 + (seed % 2) as usize,
        n_clients: 4 + (seed % 3) as usize,
        k: 2,
        cap_range: (1, 4),
        geometry: if seed % 2 == 0 { Geometry::Euclidean } else { Geometry::Clustered },
    };
    gen_random(&spec, seed).unwrap()
}

#[test]
fn exact_agrees_with_naive_recursion() {
    for seed in 0..30 {
        let inst = small_instance(seed);
        let soft = exact_opt(&inst, None).unwrap();
        let hard = exact_opt_hard(&inst, None).unwrap();
        assert!((soft.opt_cost - naive_opt(&inst, inst.k() as u32)).abs() <= 1e-9, "seed {seed}");
        assert!((hard.opt_cost - naive_opt(&inst, 1)).abs() <= 1e-9, "seed {seed}");
        assert!(soft.opt_cost <= hard.opt_cost);
        let cost: f64 = hard.assignment.iter().enumerate().map(|(j, &i)| inst.fc(i, j)).sum();
        assert!((cost - hard.opt_cost).abs() <= 1e-9);
        assert!(hard.open.iter().all(|&c| c <= 1));
        assert!(hard.open.iter().sum::<u32>() as usize <= inst.k());
    }
}

#[test]
fn abundant_opt_is_nearest_distance() {
    for seed in 0..5 {
        let base = small_instance(seed);
        let nc = base.n_clients();
        let nf = base.n_facilities();
        let d = (0..nf + nc).map(|a| (0..nf + nc).map(|b| base.d(a, b)).collect()).collect();
        let inst = Instance::new(vec![nc as u32; nf], nc, nf, d).unwrap();
        let want: f64 = (0..nc).map(|j| (0..nf).map(|i| inst.fc(i, j)).fold(f64::INFINITY, f64::min)).sum();
        assert!((exact_opt(&inst, None).unwrap().opt_cost - want).abs() <= 1e-9);
    }
}

#[test]
fn gap_opt_and_lp_bound() {
    for u in 2..=3 {
        let inst = gen_gap_instance(u, 100.0).unwrap();
        assert!(exact_opt(&inst, None).unwrap().opt_cost >= 100.0);
        assert!(exact_opt_hard(&inst, None).unwrap().opt_cost >= 100.0);
    }
    for seed in 0..10 {
        let inst = small_instance(seed);
        let lp = solve_basic(&inst, &[]).unwrap().lp_value;
        assert!(lp <= exact_opt_hard(&inst, None).unwrap().opt_cost + 1e-9);
    }
}

#[test]
fn audit_passes_on_pipeline_runs() {
    let params = Params::from_epsilon(1.0).unwrap();
    for seed in 1..=6 {
        let inst = suite_instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let res = cutting_plane_solve(&inst, &params, 50, 200, &mut rng).unwrap();
        let shares = cost_shares(&inst, &res.frac);
        let clustering = cluster(&inst, &shares);
        let bundle = Bundle { inst: &inst, frac: &res.frac, shares: &shares, clustering: &clustering, run: Some(&res.run) };
        let report = audit(&bundle, params.ell as f64);
        assert!(report.all_pass(), "seed {seed}\n{}", report.to_text());
        assert_eq!(report.status("demand_witness"), Some(&CheckStatus::Pass));
    }
}

#[test]
fn corrupted_voronoi_fails_the_facility_bound() {
    let mut caught = 0;
    for seed in 1..=20 {
        let inst = suite_instance(seed);
        let frac = solve_basic(&inst, &[]).unwrap();
        let shares = cost_shares(&inst, &frac);
        let good = cluster(&inst, &shares);
        if good.reps.len() < 2 {
            continue;
        }
        let mut bad = voronoi_partition(&inst, &good.reps);
        bad.members.iter_mut().for_each(Vec::clear);
        for i in 0..inst.n_facilities() {
            let far = (0..good.reps.len())
                .max_by(|&a, &b| inst.fc(i, good.reps[a]).total_cmp(&inst.fc(i, good.reps[b])))
                .unwrap();
            bad.owner[i] = far;
            bad.members[far].push(i);
        }
        let bundle = Bundle { inst: &inst, frac: &frac, shares: &shares, clustering: &bad, run: None };
        let report = audit(&bundle, 5.0);
        if let Some(CheckStatus::Fail(witness)) = report.status("cluster_facility_bound") {
            assert!(!witness.is_empty());
            caught += 1;
        }
    }
    assert!(caught > 0);
}

#[test]
fn gap_sweep_passes() {
    let inst = gen_gap_instance(3, 100.0).unwrap();
    let frac = solve_basic(&inst, &[]).unwrap();
    let shares = cost_shares(&inst, &frac);
    let clustering = cluster(&inst, &shares);
    let bundle = Bundle { inst: &inst, frac: &frac, shares: &shares, clustering: &clustering, run: None };
    let report = audit(&bundle, 5.0);
    assert_eq!(report.status("separation_sweep"), Some(&CheckStatus::Pass));
    assert!(report.all_pass(), "{}", report.to_text());
}
