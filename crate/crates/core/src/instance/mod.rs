//! Problem instances: facilities with integer capacities, clients, a dense
//! metric over both, and the facility budget `k`.
//!
//! Points are indexed facilities first, so facility `i` is point `i` and
//! client `j` is point `n_facilities + j`.

mod generate;
mod io;

pub use generate::{gen_gap_instance, gen_random, Geometry, RandomSpec};
pub use io::{format_real, read_instance, write_instance};

use crate::error::{Error, Result};
use crate::tol;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    capacities: Vec<u32>,
    n_clients: usize,
    k: usize,
    dist: Vec<f64>,
}

impl Instance {
    /// Builds an instance after structural validation. The triangle
    /// inequality is not enforced here; see [`validate_metric`].
    pub fn new(capacities: Vec<u32>, n_clients: usize, k: usize, dist: Vec<Vec<f64>>) -> Result<Self> {
        let n_facilities = capacities.len();
        if n_facilities == 0 {
            return Err(Error::InvalidInstance("no facilities".into()));
        }
        if n_clients == 0 {
            return Err(Error::InvalidInstance("no clients".into()));
        }
        let n = n_facilities + n_clients;
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInstance(format!(
                "distance matrix must be {n}x{n}"
            )));
        }
        if let Some(i) = capacities.iter().position(|&u| u == 0) {
            return Err(Error::InvalidInstance(format!("facility {i} has zero capacity")));
        }
        if k == 0 || k > n_facilities {
            return Err(Error::InvalidInstance(format!(
                "k = {k} must lie in 1..={n_facilities}"
            )));
        }
        let total: u64 = capacities.iter().map(|&u| u as u64).sum::<u64>() * k as u64;
        if total < n_clients as u64 {
            return Err(Error::InvalidInstance(format!(
                "k times total capacity ({total}) is below the number of clients ({n_clients})"
            )));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (a, row) in dist.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInstance(format!(
                        "distance ({a}, {b}) = {v} is not a finite nonnegative number"
                    )));
                }
                flat.push(v);
            }
        }
        Ok(Self { capacities, n_clients, k, dist: flat })
    }

    pub fn n_facilities(&self) -> usize {
        self.capacities.len()
    }

    pub fn n_clients(&self) -> usize {
        self.n_clients
    }

    pub fn n_points(&self) -> usize {
        self.capacities.len() + self.n_clients
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn capacity(&self, facility: usize) -> u32 {
        self.capacities[facility]
    }

    pub fn capacities(&self) -> &[u32] {
        &self.capacities
    }

    /// Distance between two points in the combined indexing.
    #[inline]
    pub fn d(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.n_points() + b]
    }

    /// Facility-to-client distance.
    #[inline]
    pub fn fc(&self, facility: usize, client: usize) -> f64 {
        self.d(facility, self.client_point(client))
    }

    /// Client-to-client distance.
    #[inline]
    pub fn cc(&self, a: usize, b: usize) -> f64 {
        self.d(self.client_point(a), self.client_point(b))
    }

    #[inline]
    pub fn client_point(&self, client: usize) -> usize {
        self.capacities.len() + client
    }

    /// Same instance with a different budget.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        let rows = (0..self.n_points())
            .map(|a| (0..self.n_points()).map(|b| self.d(a, b)).collect())
            .collect();
        Self::new(self.capacities.clone(), self.n_clients, k, rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleViolation {
    pub a: usize,
    pub c: usize,
    pub via: usize,
    /// `d(a, c) - d(a, via) - d(via, c)`, strictly above the tolerance.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub symmetric_ok: bool,
    pub triangle_violations: Vec<TriangleViolation>,
}

impl MetricReport {
    pub fn is_metric(&self) -> bool {
        self.symmetric_ok && self.triangle_violations.is_empty()
    }
}

/// Checks symmetry, the zero diagonal and every triangle inequality.
pub fn validate_metric(inst: &Instance) -> MetricReport {
    let n = inst.n_points();
    let mut symmetric_ok = true;
    for a in 0..n {
        if inst.d(a, a).abs() > tol::METRIC {
            symmetric_ok = false;
        }
        for b in a + 1..n {
            if (inst.d(a, b) - inst.d(b, a)).abs() > tol::METRIC {
                symmetric_ok = false;
            }
        }
    }
    let mut triangle_violations = Vec::new();
    for a in 0..n {
        for c in a + 1..n {
            let direct = inst.d(a, c);
            for via in 0..n {
                if via == a || via == c {
                    continue;
                }
                let slack = direct - inst.d(a, via) - inst.d(via, c);
                if slack > tol::METRIC {
                    triangle_violations.push(TriangleViolation { a, c, via, slack });
                }
            }
        }
    }
    MetricReport { symmetric_ok, triangle_violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_single_point_pair_is_metric() {
        let inst = Instance::new(vec![1], 1, 1, vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(validate_metric(&inst).is_metric());
    }

    #[test]
    fn reports_violated_triangle_with_slack() {
        // points: facility 0 = a, client 0 = b, client 1 = c
        let d = vec![
            vec![0.0, 5.0, 10.0],
            vec![5.0, 0.0, 1.0],
            vec![10.0, 1.0, 0.0],
        ];
        let inst = Instance::new(vec![2], 2, 1, d).unwrap();
        let report = validate_metric(&inst);
        assert!(report.symmetric_ok);
        assert_eq!(report.triangle_violations.len(), 1);
        let v = report.triangle_violations[0];
        assert_eq!((v.a, v.c, v.via), (0, 2, 1));
        assert_eq!(v.slack, 4.0);
    }

    #[test]
    fn asymmetry_is_reported() {
        let d = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        let inst = Instance::new(vec![1], 1, 1, d).unwrap();
        assert!(!validate_metric(&inst).symmetric_ok);
    }

    #[test]
    fn rejects_bad_structure() {
        let d = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(Instance::new(vec![0], 1, 1, d.clone()).is_err());
        assert!(Instance::new(vec![1], 1, 2, d.clone()).is_err());
        assert!(Instance::new(vec![1], 2, 1, d.clone()).is_err());
        assert!(Instance::new(vec![1], 1, 1, vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
    }

    #[test]
    fn capacity_feasibility_counts_k_copies() {
        let d = vec![vec![0.0; 4]; 4];
        // 1 facility of capacity 1 with k = 1 cannot host 3 clients
        assert!(Instance::new(vec![1], 3, 1, d).is_err());
    }
}
