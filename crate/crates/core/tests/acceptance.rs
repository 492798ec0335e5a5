//! One line per acceptance criterion; exits nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use ckm::basiclp::{cost_shares, solve_basic, FractionalSolution};
use ckm::cluster::cluster;
use ckm::configlp::{build_config_system, check_feasible, is_concentrated, ConfigOutcome, Params, Preassigner};
use ckm::instance::{gen_gap_instance, Instance};
use ckm::lpsolve::{min_cost_b_matching, BMatchingProblem};
use ckm::oracle::{audit, exact_opt, Bundle};
use ckm::round::constants::cost_constant;
use ckm::round::{cutting_plane_solve, round_basic, CuttingPlaneResult};
use ckm::Error;
use common::{suite_instance, SUITE_SEEDS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPSILON: f64 = 1.0;
const MAX_ITERS: usize = 50;
const MAX_RETRIES: usize = 200;
/// Relative slack on the floating-point bounds of criteria 1 and 6.
const REL_TOL: f64 = 1e-7;
const GAP_LP_TOL: f64 = 1e-9;
const GAP_L: f64 = 100.0;
const MIN_CUT_VIOLATION: f64 = 1e-6;
const RATIO_LIMIT: f64 = 20.0;
const MC_TRIALS: usize = 1000;
const MIN_ACCEPT_RATE: f64 = 0.2;
const MARGINAL_SIGMAS: f64 = 4.0;
const MARGINAL_SAMPLES: usize = 2000;
const BMATCH_CASES: usize = 100;
const AUDIT_ELLS: [f64; 4] = [1.0, 2.0, 3.0, 5.0];

const LIMIT_1: Duration = Duration::from_secs(60);
const LIMIT_2: Duration = Duration::from_secs(300);
const LIMIT_3: Duration = Duration::from_secs(600);
const LIMIT_4: Duration = Duration::from_secs(120);
const LIMIT_5: Duration = Duration::from_secs(180);
const LIMIT_7: Duration = Duration::from_secs(120);
const LIMIT_8: Duration = Duration::from_secs(30);

struct Outcome {
    id: usize,
    pass: bool,
    detail: String,
}

fn leq(a: f64, b: f64) -> bool {
    a <= b + REL_TOL * a.abs().max(b.abs()).max(1.0)
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

struct SuiteRun {
    seed: u64,
    inst: Instance,
    result: Result<CuttingPlaneResult, Error>,
}

fn criterion_1(interior: &mut Vec<usize>) -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for seed in SUITE_SEEDS {
        let inst = suite_instance(seed);
        let frac = solve_basic(&inst, &[]).unwrap();
        let shares = cost_shares(&inst, &frac);
        let clustering = cluster(&inst, &shares);
        match round_basic(&inst, &frac, &clustering) {
            Ok(r) => {
                interior.extend(r.moves.iter().map(|m| m.interior));
                let s = &r.solution;
                if s.opened_total as usize > 4 * inst.k() || !leq(s.cost, 11.0 * frac.lp_value) {
                    bad.push(seed);
                }
                if frac.lp_value > 0.0 {
                    worst_ratio = worst_ratio.max(s.cost / frac.lp_value);
                }
            }
            Err(_) => bad.push(seed),
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        id: 1,
        pass: bad.is_empty() && within(elapsed, LIMIT_1),
        detail: format!("failing seeds {bad:?}, max cost/lp {worst_ratio:.3}, {:.1}s", elapsed.as_secs_f64()),
    }
}

fn suite_runs(params: &Params) -> (Vec<SuiteRun>, Duration) {
    let start = Instant::now();
    let runs = SUITE_SEEDS
        .map(|seed| {
            let inst = suite_instance(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let result = cutting_plane_solve(&inst, params, MAX_ITERS, MAX_RETRIES, &mut rng);
            SuiteRun { seed, inst, result }
        })
        .collect();
    (runs, start.elapsed())
}

fn criterion_2(runs: &[SuiteRun], elapsed: Duration, params: &Params) -> Outcome {
    let ell = params.ell as f64;
    let mut bad = Vec::new();
    let mut unsolved = Vec::new();
    for run in runs {
        match &run.result {
            Ok(res) => {
                if res.solution.opened_total as usize > ((1.0 + 5.0 / ell) * run.inst.k() as f64).floor() as usize {
                    bad.push(run.seed);
                }
            }
            Err(e) => unsolved.push(format!("{}: {e}", run.seed)),
        }
    }
    let solved = runs.len() - unsolved.len();
    Outcome {
        id: 2,
        pass: bad.is_empty() && within(elapsed, LIMIT_2),
        detail: format!(
            "{solved}/{} runs succeeded, cardinality violations {bad:?}, unsuccessful [{}], {:.1}s",
            runs.len(),
            unsolved.join("; "),
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_3(runs: &[SuiteRun], elapsed: Duration, params: &Params) -> Outcome {
    let start = Instant::now();
    let k_const = cost_constant(params.ell, params.ell2);
    let mut bad = Vec::new();
    let mut worst: (f64, u64) = (0.0, 0);
    for run in runs {
        let Ok(res) = &run.result else { continue };
        if res.solution.cost > k_const * res.frac.lp_value {
            bad.push(run.seed);
        }
        let opt = exact_opt(&run.inst, None).unwrap().opt_cost;
        let ratio = match (res.solution.cost, opt) {
            (c, o) if o > 0.0 => c / o,
            (c, _) if c == 0.0 => 1.0,
            _ => f64::INFINITY,
        };
        if ratio > worst.0 {
            worst = (ratio, run.seed);
        }
    }
    let total = elapsed + start.elapsed();
    Outcome {
        id: 3,
        pass: bad.is_empty() && worst.0 <= RATIO_LIMIT && within(total, LIMIT_3),
        detail: format!(
            "K = {k_const}, violations {bad:?}, max cost/opt {:.4} (seed {}), {:.1}s",
            worst.0,
            worst.1,
            total.as_secs_f64()
        ),
    }
}

fn criterion_4(params: &Params) -> Outcome {
    let start = Instant::now();
    let inst = gen_gap_instance(3, GAP_L).unwrap();
    let lp = solve_basic(&inst, &[]).unwrap().lp_value;
    let opt = exact_opt(&inst, None).unwrap().opt_cost;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (cuts, verified, detail) = match cutting_plane_solve(&inst, params, MAX_ITERS, MAX_RETRIES, &mut rng) {
        Ok(res) => {
            let verified = (0..res.cuts.len()).all(|t| {
                let before = solve_basic(&inst, &res.cuts[..t]).unwrap();
                res.cuts[t].eval(&before) >= MIN_CUT_VIOLATION
            });
            (res.cuts.len(), verified, format!("final lp {}, cost {}", res.frac.lp_value, res.solution.cost))
        }
        Err(e) => (0, false, format!("driver failed: {e}")),
    };
    let elapsed = start.elapsed();
    Outcome {
        id: 4,
        pass: lp.abs() <= GAP_LP_TOL && opt >= GAP_L && cuts >= 1 && verified && within(elapsed, LIMIT_4),
        detail: format!(
            "lp {lp}, exact {opt}, {cuts} cuts, all re-verified {verified}, {detail}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_5(runs: &[SuiteRun], params: &Params) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut audits = 0;
    for run in runs {
        let inst = &run.inst;
        let initial = solve_basic(inst, &[]).unwrap();
        let mut bundles: Vec<(FractionalSolution, Option<&ckm::round::ConfigRun>)> = vec![(initial, None)];
        if let Ok(res) = &run.result {
            bundles.push((res.frac.clone(), Some(&res.run)));
        }
        for (frac, cfg) in &bundles {
            let shares = cost_shares(inst, frac);
            let clustering = cluster(inst, &shares);
            let bundle = Bundle { inst, frac, shares: &shares, clustering: &clustering, run: *cfg };
            let ells: Vec<f64> = if cfg.is_some() { vec![params.ell as f64] } else { AUDIT_ELLS.to_vec() };
            for ell in ells {
                audits += 1;
                for f in audit(&bundle, ell).failures() {
                    failures.push(format!("seed {} ell {ell}: {}", run.seed, f.name));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        id: 5,
        pass: failures.is_empty() && within(elapsed, LIMIT_5),
        detail: format!("{audits} audits, failures [{}], {:.1}s", failures.join("; "), elapsed.as_secs_f64()),
    }
}

fn criterion_6(interior: &[usize]) -> Outcome {
    let worst = interior.iter().copied().max().unwrap_or(0);
    Outcome {
        id: 6,
        pass: worst <= 2 && !interior.is_empty(),
        detail: format!("{} placement solves, max interior {worst}", interior.len()),
    }
}

/// A group `B` of `b` facilities near the clients plus one far facility
/// carrying `eta` of every client. All clients are served by `B` up to `eta`,
/// so `B` is concentrated for small `eta`.
fn concentrated_group(rng: &mut ChaCha8Rng) -> Option<(Instance, FractionalSolution, Vec<usize>)> {
    let b: usize = rng.random_range(2..=3);
    let nc: usize = rng.random_range(3..=6);
    let eta = [0.0, 1e-3, 4e-3][rng.random_range(0..3)];
    let mut pts: Vec<f64> = (0..b).map(|_| rng.random_range(0..10) as f64).collect();
    pts.push(100.0);
    pts.extend((0..nc).map(|_| rng.random_range(0..10) as f64));
    let d: Vec<Vec<f64>> = pts.iter().map(|a| pts.iter().map(|c| f64::abs(a - c)).collect()).collect();
    let cap = nc.div_ceil(b) as u32 + rng.random_range(0..2);
    let mut caps = vec![cap; b];
    caps.push(nc as u32);
    let inst = Instance::new(caps, nc, b + 1, d).ok()?;
    // clients split between two random members of B
    let mut x = vec![vec![0.0; nc]; b + 1];
    for j in 0..nc {
        let (p, q) = (j % b, (j + 1) % b);
        let share = [0.5, 1.0][rng.random_range(0..2)];
        x[p][j] += share * (1.0 - eta);
        x[q][j] += (1.0 - share) * (1.0 - eta);
        x[b][j] = eta;
    }
    let mut y: Vec<f64> = (0..=b)
        .map(|i| {
            let load: f64 = x[i].iter().sum::<f64>() / inst.capacity(i) as f64;
            x[i].iter().copied().fold(load, f64::max)
        })
        .collect();
    y[b] = eta;
    let lp_value = (0..=b).map(|i| (0..nc).map(|j| x[i][j] * inst.fc(i, j)).sum::<f64>()).sum();
    Some((inst, FractionalSolution { x, y, lp_value }, (0..b).collect()))
}

fn criterion_7(params: &Params) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut trials, mut accepted, mut violations, mut marginal_bad, mut groups) = (0, 0, 0, 0, 0);
    let mut worst_sigma: f64 = 0.0;
    while trials < MC_TRIALS {
        let Some((inst, frac, b)) = concentrated_group(&mut rng) else { continue };
        if !is_concentrated(&frac, &b, params.ell2 as f64) {
            continue;
        }
        let sys = build_config_system(&inst, &frac, &b, params.ell1).unwrap();
        let ConfigOutcome::Feasible(z) = check_feasible(&sys, &frac).unwrap() else { continue };
        let shares = cost_shares(&inst, &frac);
        let pre = Preassigner::new(&inst, &sys, &z, &frac, &shares, params).unwrap();
        groups += 1;
        let budget = (1.0 + 1.0 / params.ell as f64) * frac.y_of(&b);
        let pi = ckm::configlp::pi_value(&frac, &b);
        let total = frac.x_mass(&b);
        for _ in 0..50 {
            trials += 1;
            let a = pre.attempt(&mut rng).unwrap();
            if !a.accepted() {
                continue;
            }
            accepted += 1;
            let mut load = vec![0u32; inst.n_facilities()];
            let mut covered = vec![false; inst.n_clients()];
            let mut cost = 0.0;
            for &(j, i) in &a.assignment {
                load[i] += 1;
                covered[j] = true;
                cost += inst.fc(i, j);
                if !a.facilities.contains(&i) {
                    violations += 1;
                }
            }
            let capacity = a.facilities.iter().all(|&i| load[i] <= inst.capacity(i));
            let uncovered: f64 = (0..inst.n_clients()).filter(|&j| !covered[j]).map(|j| frac.x_to(&b, j)).sum();
            let count = uncovered / total * frac.y_of(&b) + a.facilities.len() as f64;
            let d_b: f64 = b.iter().map(|&i| (0..inst.n_clients()).map(|j| frac.x[i][j] * inst.fc(i, j)).sum::<f64>()).sum();
            let ok = capacity
                && leq(uncovered, params.ell2 as f64 * pi)
                && leq(count, budget)
                && leq(cost, params.ell2 as f64 * d_b);
            if !ok {
                violations += 1;
            }
        }
        // marginals of the dependent rounding for the most likely set
        let &(s, _) = pre.candidates.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        let w = pre.weights(s);
        let mut hits = vec![0usize; sys.clients.len()];
        for _ in 0..MARGINAL_SAMPLES {
            let a = pre.attempt_with_set(s, &mut rng).unwrap();
            for &(j, _) in &a.assignment {
                hits[sys.clients.binary_search(&j).unwrap()] += 1;
            }
        }
        for (jp, &h) in hits.iter().enumerate() {
            let p: f64 = w.iter().map(|r| r[jp]).sum::<f64>().min(1.0);
            let sigma = (p * (1.0 - p) / MARGINAL_SAMPLES as f64).sqrt();
            let dev = (h as f64 / MARGINAL_SAMPLES as f64 - p).abs();
            if sigma > 0.0 {
                worst_sigma = worst_sigma.max(dev / sigma);
            }
            if dev > MARGINAL_SIGMAS * sigma + 1e-12 {
                marginal_bad += 1;
            }
        }
    }
    let rate = accepted as f64 / trials as f64;
    let elapsed = start.elapsed();
    Outcome {
        id: 7,
        pass: violations == 0 && rate >= MIN_ACCEPT_RATE && marginal_bad == 0 && within(elapsed, LIMIT_7),
        detail: format!(
            "{groups} groups, {trials} attempts, acceptance {rate:.3}, property violations {violations}, \
             marginals beyond {MARGINAL_SIGMAS} sigma {marginal_bad} (max {worst_sigma:.2}), {:.1}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn brute_force(costs: &[Vec<f64>], caps: &[u32]) -> Option<f64> {
    fn go(l: usize, costs: &[Vec<f64>], left: &mut [u32], acc: f64, best: &mut Option<f64>) {
        if l == costs.len() {
            if best.is_none_or(|b| acc < b) {
                *best = Some(acc);
            }
            return;
        }
        for r in 0..left.len() {
            if left[r] > 0 {
                left[r] -= 1;
                go(l + 1, costs, left, acc + costs[l][r], best);
                left[r] += 1;
            }
        }
    }
    let mut best = None;
    go(0, costs, &mut caps.to_vec(), 0.0, &mut best);
    best
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mismatches = 0;
    for _ in 0..BMATCH_CASES {
        let costs: Vec<Vec<f64>> = (0..5).map(|_| (0..5).map(|_| rng.random_range(0..50) as f64).collect()).collect();
        let caps: Vec<u32> = (0..5).map(|_| rng.random_range(0..=3)).collect();
        let prob = BMatchingProblem { supplies: vec![1; 5], capacities: caps.clone(), costs: costs.clone(), required_flow: 5 };
        match (min_cost_b_matching(&prob), brute_force(&costs, &caps)) {
            (Ok(m), Some(b)) if m.cost == b => {}
            (Err(Error::Infeasible(_)), None) => {}
            _ => mismatches += 1,
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        id: 8,
        pass: mismatches == 0 && within(elapsed, LIMIT_8),
        detail: format!("{BMATCH_CASES} problems, {mismatches} mismatches, {:.1}s", elapsed.as_secs_f64()),
    }
}

fn main() {
    let params = Params::from_epsilon(EPSILON).unwrap();
    let mut interior = Vec::new();
    let mut outcomes = vec![criterion_1(&mut interior)];
    let (runs, elapsed) = suite_runs(&params);
    for run in &runs {
        if let Ok(res) = &run.result {
            interior.extend(res.run.groups.iter().map(|g| g.placement.interior));
        }
    }
    outcomes.push(criterion_2(&runs, elapsed, &params));
    outcomes.push(criterion_3(&runs, elapsed, &params));
    outcomes.push(criterion_4(&params));
    outcomes.push(criterion_5(&runs, &params));
    outcomes.push(criterion_6(&interior));
    outcomes.push(criterion_7(&params));
    outcomes.push(criterion_8());
    for o in &outcomes {
        println!("criterion {} {}: {}", o.id, if o.pass { "pass" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria {failed:?}");
        std::process::exit(1);
    }
}
