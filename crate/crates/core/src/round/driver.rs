use std::fmt::Write;

use rand::Rng;

use super::{round_config, ConfigRound, ConfigRun, IntegralSolution, MovingCost};
use crate::basiclp::{cost_shares, solve_basic, Cut, FractionalSolution};
use crate::cluster::cluster;
use crate::configlp::Params;
use crate::error::{Error, Result};
use crate::instance::{format_real, Instance};
use crate::tol;

#[derive(Debug, Clone, PartialEq)]
pub struct CutRecord {
    pub iteration: usize,
    pub node: usize,
    pub facilities: Vec<usize>,
    /// Value of the cut at the point it separates.
    pub violation: f64,
    pub lp_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub opened_total: u32,
    pub k: usize,
    pub cost: f64,
    pub lp_value: f64,
    pub moving: MovingCost,
    pub cuts: Vec<CutRecord>,
}

impl RoundReport {
    pub fn new(inst: &Instance, solution: &IntegralSolution, lp_value: f64, moving: MovingCost) -> Self {
        Self {
            opened_total: solution.opened_total,
            k: inst.k(),
            cost: solution.cost,
            lp_value,
            moving,
            cuts: Vec::new(),
        }
    }

    /// `cost / lp_value`; 1 when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.lp_value > 0.0 {
            self.cost / self.lp_value
        } else if self.cost == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    }

    pub fn cardinality_slack(&self) -> f64 {
        self.opened_total as f64 / self.k as f64
    }

    /// Flat `key value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| writeln!(s, "{k} {v}").expect("writing to a string");
        line("opened_total", self.opened_total.to_string());
        line("k", self.k.to_string());
        line("cost", format_real(self.cost));
        line("lp_value", format_real(self.lp_value));
        line("ratio", format_real(self.ratio()));
        line("cardinality_slack", format_real(self.cardinality_slack()));
        line("moving_preassign", format_real(self.moving.preassign));
        line("moving_to_facilities", format_real(self.moving.to_facilities));
        line("moving_to_centers", format_real(self.moving.to_centers));
        line("moving_from_centers", format_real(self.moving.from_centers));
        line("moving_total", format_real(self.moving.total()));
        line("cuts_emitted", self.cuts.len().to_string());
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CuttingPlaneResult {
    pub solution: IntegralSolution,
    pub report: RoundReport,
    pub run: ConfigRun,
    /// The final master solution.
    pub frac: FractionalSolution,
    pub cuts: Vec<Cut>,
}

/// Solves the basic LP, rounds with the configuration rounding, and adds the
/// separating cut whenever a configuration system fails, up to `max_iters`
/// master solves.
pub fn cutting_plane_solve<R: Rng + ?Sized>(
    inst: &Instance,
    params: &Params,
    max_iters: usize,
    max_retries: usize,
    rng: &mut R,
) -> Result<CuttingPlaneResult> {
    if max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
    }
    let mut cuts: Vec<Cut> = Vec::new();
    let mut records = Vec::new();
    for iteration in 1..=max_iters {
        let frac = solve_basic(inst, &cuts)?;
        let shares = cost_shares(inst, &frac);
        let clustering = cluster(inst, &shares);
        match round_config(inst, &frac, &shares, &clustering, params, max_retries, rng)? {
            ConfigRound::Solved(run) => {
                let mut report = RoundReport::new(inst, &run.solution, frac.lp_value, run.moving);
                report.cuts = records;
                return Ok(CuttingPlaneResult {
                    solution: run.solution.clone(),
                    report,
                    run: *run,
                    frac,
                    cuts,
                });
            }
            ConfigRound::Violated { node, facilities, cut } => {
                let violation = cut.eval(&frac);
                if violation <= tol::CERT {
                    return Err(Error::Invariant(format!(
                        "cut for facilities {facilities:?} does not separate the current point"
                    )));
                }
                records.push(CutRecord { iteration, node, facilities, violation, lp_value: frac.lp_value });
                cuts.push(cut);
            }
        }
    }
    Err(Error::IterationsExhausted { iterations: max_iters, cuts: cuts.len() })
}
