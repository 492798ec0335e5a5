mod common;

use ckm::basiclp::{build_basic_lp, cost_shares, solve_basic};
use ckm::cluster::cluster;
use ckm::configlp::Params;
use ckm::instance::{gen_gap_instance, gen_random, Geometry, Instance, RandomSpec};
use ckm::oracle::exact_opt_hard;
use ckm::round::{round_config, ConfigRound};
use common::{basic_violation, lp_cost, suite_instance, SUITE_SEEDS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn gap_lp_has_zero_value() {
    let inst = gen_gap_instance(2, 100.0).unwrap();
    assert_eq!(build_basic_lp(&inst, &[]).n_vars(), 4 * 6 + 4);
    let frac = solve_basic(&inst, &[]).unwrap();
    assert!(frac.lp_value.abs() <= 1e-9);
}

#[test]
fn solutions_are_feasible_and_priced_correctly() {
    for seed in SUITE_SEEDS {
        let inst = suite_instance(seed);
        let frac = solve_basic(&inst, &[]).unwrap();
        assert!(basic_violation(&inst, &frac.x, &frac.y) <= 1e-7, "seed {seed}");
        assert!((lp_cost(&inst, &frac) - frac.lp_value).abs() <= 1e-9 * frac.lp_value.max(1.0));
    }
}

#[test]
fn lp_value_bounds_the_one_copy_optimum() {
    for seed in 0..10 {
        let spec = RandomSpec { n_facilities: 4, n_clients: 6, k: 2, cap_range: (2, 5), geometry: Geometry::Euclidean };
        let inst = gen_random(&spec, seed).unwrap();
        let frac = solve_basic(&inst, &[]).unwrap();
        let opt = exact_opt_hard(&inst, None).unwrap().opt_cost;
        assert!(frac.lp_value <= opt + 1e-9, "seed {seed}: lp {} opt {opt}", frac.lp_value);
    }
}

#[test]
fn share_totals_equal_lp_value() {
    for seed in SUITE_SEEDS {
        let inst = suite_instance(seed);
        let frac = solve_basic(&inst, &[]).unwrap();
        let shares = cost_shares(&inst, &frac);
        let tol = 1e-9 * frac.lp_value.max(1.0);
        let d: f64 = shares.d.iter().sum();
        let d_prime: f64 = shares.d_prime.iter().sum();
        let d_av: f64 = shares.d_av.iter().sum();
        assert!((d - frac.lp_value).abs() <= tol);
        assert!((d_prime - frac.lp_value).abs() <= tol);
        assert!((d_av - frac.lp_value).abs() <= tol);
    }
}

#[test]
fn zero_distances_give_zero_shares() {
    let inst = Instance::new(vec![2, 2], 3, 2, vec![vec![0.0; 5]; 5]).unwrap();
    let frac = solve_basic(&inst, &[]).unwrap();
    let shares = cost_shares(&inst, &frac);
    assert!(shares.d_av.iter().chain(&shares.d).chain(&shares.d_prime).all(|&v| v == 0.0));
}

#[test]
fn cuts_remove_the_point_and_raise_the_value() {
    let inst = gen_gap_instance(3, 100.0).unwrap();
    let params = Params::from_ell(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut cuts = Vec::new();
    let mut last = solve_basic(&inst, &cuts).unwrap();
    for _ in 0..3 {
        let shares = cost_shares(&inst, &last);
        let clustering = cluster(&inst, &shares);
        let ConfigRound::Violated { cut, .. } =
            round_config(&inst, &last, &shares, &clustering, &params, 200, &mut rng).unwrap()
        else {
            break;
        };
        assert!(cut.eval(&last) > 1e-9);
        cuts.push(cut);
        let next = solve_basic(&inst, &cuts).unwrap();
        assert!(next.lp_value >= last.lp_value - 1e-9);
        assert!(cuts.last().unwrap().eval(&next) <= 1e-7);
        last = next;
    }
    assert!(!cuts.is_empty());
}
