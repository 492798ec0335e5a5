use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::io::canonical;
use super::Instance;
use crate::error::{Error, Result};

/// Where generated points are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// Uniform in the unit square.
    Euclidean,
    /// Gaussian blobs (standard deviation 0.05) around `ceil(nF / 3)`
    /// uniform centers.
    Clustered,
}

impl std::str::FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Geometry::Euclidean),
            "clustered" => Ok(Geometry::Clustered),
            other => Err(Error::InvalidParameter(format!("unknown geometry {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomSpec {
    pub n_facilities: usize,
    pub n_clients: usize,
    pub k: usize,
    /// Inclusive range capacities are drawn from.
    pub cap_range: (u32, u32),
    pub geometry: Geometry,
}

const CLUSTER_SPREAD: f64 = 0.05;
const CAPACITY_RESAMPLES: usize = 1000;

/// `u` isolated groups, each with two co-located facilities of capacity `u`
/// and `u + 1` clients; groups are pairwise `spread` apart and `k = u + 1`.
pub fn gen_gap_instance(u: usize, spread: f64) -> Result<Instance> {
    if u < 2 {
        return Err(Error::InvalidParameter(format!("gap instance needs u >= 2, got {u}")));
    }
    if !(spread.is_finite() && spread > 0.0) {
        return Err(Error::InvalidParameter(format!("group distance must be positive, got {spread}")));
    }
    let spread = canonical(spread);
    let n_facilities = 2 * u;
    let n_clients = u * (u + 1);
    let group = |p: usize| if p < n_facilities { p / 2 } else { (p - n_facilities) / (u + 1) };
    let n = n_facilities + n_clients;
    let dist = (0..n)
        .map(|a| (0..n).map(|b| if group(a) == group(b) { 0.0 } else { spread }).collect())
        .collect();
    let cap = u32::try_from(u).map_err(|_| Error::InvalidParameter("u too large".into()))?;
    Instance::new(vec![cap; n_facilities], n_clients, u + 1, dist)
}

/// Random instance under a fixed seed. Capacities are resampled until the
/// `k` largest can host every client, which keeps the basic LP feasible.
pub fn gen_random(spec: &RandomSpec, seed: u64) -> Result<Instance> {
    let RandomSpec { n_facilities, n_clients, k, cap_range: (lo, hi), geometry } = *spec;
    if n_facilities == 0 || n_clients == 0 {
        return Err(Error::InvalidParameter("need at least one facility and one client".into()));
    }
    if k == 0 || k > n_facilities {
        return Err(Error::InvalidParameter(format!("k = {k} must lie in 1..={n_facilities}")));
    }
    if lo == 0 || lo > hi {
        return Err(Error::InvalidParameter(format!("capacity range [{lo}, {hi}] is invalid")));
    }
    if (k as u64) * (hi as u64) < n_clients as u64 {
        return Err(Error::InvalidParameter(format!(
            "{k} facilities of capacity at most {hi} cannot serve {n_clients} clients"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_facilities + n_clients;
    let points: Vec<(f64, f64)> = match geometry {
        Geometry::Euclidean => (0..n).map(|_| (rng.random(), rng.random())).collect(),
        Geometry::Clustered => {
            let centers: Vec<(f64, f64)> = (0..n_facilities.div_ceil(3))
                .map(|_| (rng.random(), rng.random()))
                .collect();
            let noise = Normal::new(0.0, CLUSTER_SPREAD).expect("valid normal");
            (0..n)
                .map(|_| {
                    let (cx, cy) = centers[rng.random_range(0..centers.len())];
                    (cx + noise.sample(&mut rng), cy + noise.sample(&mut rng))
                })
                .collect()
        }
    };

    let mut capacities = Vec::new();
    let mut feasible = false;
    for _ in 0..CAPACITY_RESAMPLES {
        capacities = (0..n_facilities).map(|_| rng.random_range(lo..=hi)).collect();
        let mut sorted = capacities.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let top: u64 = sorted.iter().take(k).map(|&u| u as u64).sum();
        if top >= n_clients as u64 {
            feasible = true;
            break;
        }
    }
    if !feasible {
        return Err(Error::InvalidParameter(format!(
            "capacity range [{lo}, {hi}] almost never lets {k} facilities serve {n_clients} clients"
        )));
    }

    let dist = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let (dx, dy) = (points[a].0 - points[b].0, points[a].1 - points[b].1);
                    canonical(dx.hypot(dy))
                })
                .collect()
        })
        .collect();
    Instance::new(capacities, n_clients, k, dist)
}
