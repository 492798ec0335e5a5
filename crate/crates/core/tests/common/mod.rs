#![allow(dead_code)]

use ckm::basiclp::FractionalSolution;
use ckm::instance::{gen_random, Geometry, Instance, RandomSpec};

/// The 50-instance random suite: nF in 5..=8, nC in 8..=14, k in 2..=4.
pub fn suite_instance(seed: u64) -> Instance {
    let spec = RandomSpec {
        n_facilities: 5 + (seed % 4) as usize,
        n_clients: 8 + (seed % 7) as usize,
        k: 2 + (seed % 3) as usize,
        cap_range: (3, 7),
        geometry: if seed % 2 == 0 { Geometry::Euclidean } else { Geometry::Clustered },
    };
    gen_random(&spec, seed).expect("suite parameters are feasible")
}

pub const SUITE_SEEDS: std::ops::RangeInclusive<u64> = 1..=50;

/// Largest violation of the basic LP rows, evaluated directly.
pub fn basic_violation(inst: &Instance, x: &[Vec<f64>], y: &[f64]) -> f64 {
    let (nf, nc) = (inst.n_facilities(), inst.n_clients());
    let mut worst: f64 = (y.iter().sum::<f64>() - inst.k() as f64).max(0.0);
    for j in 0..nc {
        let served: f64 = (0..nf).map(|i| x[i][j]).sum();
        worst = worst.max((served - 1.0).abs());
    }
    for i in 0..nf {
        worst = worst.max(-y[i]).max(y[i] - 1.0);
        let mut load = 0.0;
        for j in 0..nc {
            worst = worst.max(-x[i][j]).max(x[i][j] - y[i]);
            load += x[i][j];
        }
        worst = worst.max(load - inst.capacity(i) as f64 * y[i]);
    }
    worst
}

pub fn lp_cost(inst: &Instance, frac: &FractionalSolution) -> f64 {
    let mut cost = 0.0;
    for i in 0..inst.n_facilities() {
        for j in 0..inst.n_clients() {
            cost += frac.x[i][j] * inst.fc(i, j);
        }
    }
    cost
}
