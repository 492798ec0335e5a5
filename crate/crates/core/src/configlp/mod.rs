//! Configuration constraints for a facility set `B`: the concentration
//! test, feasibility of the per-set system with Farkas cut extraction, and
//! the randomized pre-assignment used on concentrated sets.

mod preassign;

pub use preassign::{Attempt, PreAssignment, Preassigner};

use crate::basiclp::{CostShares, Cut, FractionalSolution};
use crate::cluster::Clustering;
use crate::error::{Error, Result};
use crate::grouping::ColoredMst;
use crate::instance::Instance;
use crate::lpsolve::{solve_lp, solve_lp_sparse, FarkasRay, LinearProgram, LpOutcome, Sense, SparseSession};
use crate::tol;

/// Largest number of enumerated sets (excluding `⊥`).
pub const MAX_SETS: usize = 1 << 16;

/// Reduced systems with at most this many tableau entries go to the dense
/// simplex; larger ones to the sparse engine.
const DENSE_LIMIT: usize = 3_000_000;

/// Parameters of the configuration rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Params {
    pub ell: usize,
    /// `2 ell + 2`
    pub ell1: usize,
    /// `floor(log2(2 ell + 2)) + 2`
    pub delta_max: usize,
    /// `9 ell delta_max`
    pub ell2: usize,
}

impl Params {
    pub fn from_ell(ell: usize) -> Result<Self> {
        if ell < 2 {
            return Err(Error::InvalidParameter(format!("ell must be at least 2, got {ell}")));
        }
        let ell1 = 2 * ell + 2;
        let delta_max = ell1.ilog2() as usize + 2;
        Ok(Self { ell, ell1, delta_max, ell2: 9 * ell * delta_max })
    }

    /// `ell = ceil(5 / epsilon)`.
    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 5.0) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 5), got {epsilon}")));
        }
        Self::from_ell((5.0 / epsilon).ceil() as usize)
    }
}

/// `pi = sum_j x_{B,j} (1 - x_{B,j})` for the facility set `B = U(J)`.
pub fn pi_value(frac: &FractionalSolution, facilities: &[usize]) -> f64 {
    (0..frac.n_clients())
        .map(|j| {
            let m = frac.x_to(facilities, j);
            m * (1.0 - m)
        })
        .sum()
}

/// `pi(J) <= x_{U(J),C} / ell2`, equality included.
pub fn is_concentrated(frac: &FractionalSolution, facilities: &[usize], ell2: f64) -> bool {
    pi_value(frac, facilities) <= frac.x_mass(facilities) / ell2
}

/// `(d(J, R \ J) pi(J), 4 D(U_J) + 10 D'(U_J))` for a proper subset `J` of
/// representative positions.
pub fn separation_terms(
    cmst: &ColoredMst,
    frac: &FractionalSolution,
    shares: &CostShares,
    clustering: &Clustering,
    positions: &[usize],
) -> (f64, f64) {
    let u = clustering.facilities_of(positions);
    let pi = pi_value(frac, &u);
    let lhs = if pi == 0.0 { 0.0 } else { cmst.separation(positions) * pi };
    (lhs, 4.0 * shares.d_of(&u) + 10.0 * shares.d_prime_of(&u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// `sum_S z_S = 1`
    AddToOne,
    /// `sum_{S ∋ i} z_{S,i} = y_i`
    AddToY,
    /// `sum_{S ∋ i} z_{S,i,j} = x_ij`
    AddToX,
    /// `z_{S,i,j} <= z_{S,i}`
    ClientBelowFacility,
    /// `z_{S,i} <= z_S`
    FacilityBelowSet,
    /// `z_{S,i} = z_S` for `S != ⊥`
    Integral,
    /// `sum_{i in S} z_{S,i,j} <= z_S`
    OneFacilityPerClient,
    /// `sum_j z_{S,i,j} <= u_i z_{S,i}`
    Capacity,
    /// `sum_i z_{⊥,i} >= ell1 z_⊥`
    Bottom,
}

/// Right-hand side of a row as a function of `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rhs {
    Zero,
    One,
    Y(usize),
    X(usize, usize),
}

impl Rhs {
    pub fn eval(self, frac: &FractionalSolution) -> f64 {
        match self {
            Rhs::Zero => 0.0,
            Rhs::One => 1.0,
            Rhs::Y(i) => frac.y[i],
            Rhs::X(i, j) => frac.x[i][j],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigRow {
    pub kind: RowKind,
    /// Set index the row belongs to, if any.
    pub set: Option<usize>,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: Rhs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSystem {
    /// `B`, sorted.
    pub facilities: Vec<usize>,
    /// `C_B`, sorted.
    pub clients: Vec<usize>,
    pub capacities: Vec<u32>,
    pub ell1: usize,
    /// Subsets of size at most `ell1` as bitmasks over positions in
    /// `facilities`, ascending. Set index `sets.len()` stands for `⊥`.
    pub sets: Vec<u64>,
    pub rows: Vec<ConfigRow>,
    si_start: Vec<usize>,
    n_si: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigOutcome {
    /// Values of every variable of the system.
    Feasible(Vec<f64>),
    Infeasible(Cut),
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

fn subsets_up_to(n: usize, max: usize) -> Vec<u64> {
    fn rec(start: usize, n: usize, left: usize, mask: u64, out: &mut Vec<u64>) {
        out.push(mask);
        if left == 0 {
            return;
        }
        for p in start..n {
            rec(p + 1, n, left - 1, mask | 1 << p, out);
        }
    }
    let mut out = Vec::new();
    rec(0, n, max, 0, &mut out);
    out.sort_unstable();
    out
}

impl ConfigSystem {
    pub fn bottom(&self) -> usize {
        self.sets.len()
    }

    /// Number of set indices, `⊥` included.
    pub fn n_sets(&self) -> usize {
        self.sets.len() + 1
    }

    pub fn n_vars(&self) -> usize {
        self.n_sets() + self.n_si * (1 + self.clients.len())
    }

    /// Positions in `facilities` belonging to set `s` (all of them for `⊥`).
    pub fn members(&self, s: usize) -> Vec<usize> {
        if s == self.bottom() {
            return (0..self.facilities.len()).collect();
        }
        (0..self.facilities.len()).filter(|&p| self.sets[s] >> p & 1 == 1).collect()
    }

    pub fn z_s(&self, s: usize) -> usize {
        s
    }

    /// Variable of `z_{S,i}` where `i` is the `k`-th member of `S`.
    pub fn z_si(&self, s: usize, k: usize) -> usize {
        self.n_sets() + self.si_start[s] + k
    }

    /// Variable of `z_{S,i,j}` with `i` the `k`-th member of `S` and `j` the
    /// `jpos`-th client of `C_B`.
    pub fn z_sij(&self, s: usize, k: usize, jpos: usize) -> usize {
        self.n_sets() + self.n_si + (self.si_start[s] + k) * self.clients.len() + jpos
    }

    /// The full system with `(x, y)` substituted into the right-hand sides.
    pub fn full_lp(&self, frac: &FractionalSolution) -> LinearProgram {
        let mut lp = LinearProgram::feasibility(self.n_vars());
        for row in &self.rows {
            lp.add_row(row.terms.clone(), row.sense, row.rhs.eval(frac));
        }
        lp
    }

    fn implied(&self, row: &ConfigRow) -> bool {
        let regular = row.set.is_some_and(|s| s != self.bottom());
        match row.kind {
            RowKind::Integral => true,
            RowKind::ClientBelowFacility | RowKind::FacilityBelowSet => regular,
            _ => false,
        }
    }

    /// Substitutes `z_{S,i} = z_S` for `S != ⊥` and drops the rows this
    /// makes redundant. Returns the reduced LP, the reduced index of every
    /// full variable, and the full row index of every reduced row.
    fn reduced_lp(&self, frac: &FractionalSolution) -> (LinearProgram, Vec<usize>, Vec<usize>) {
        let n = self.n_vars();
        let mut alias: Vec<Option<usize>> = vec![None; n];
        for s in 0..self.sets.len() {
            for k in 0..self.members(s).len() {
                alias[self.z_si(s, k)] = Some(s);
            }
        }
        let mut index = vec![usize::MAX; n];
        let mut next = 0;
        for v in 0..n {
            if alias[v].is_none() {
                index[v] = next;
                next += 1;
            }
        }
        for v in 0..n {
            if let Some(s) = alias[v] {
                index[v] = index[s];
            }
        }
        let mut lp = LinearProgram::feasibility(next);
        let mut kept = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            if self.implied(row) {
                continue;
            }
            let mut terms: Vec<(usize, f64)> = row.terms.iter().map(|&(v, a)| (index[v], a)).collect();
            terms.sort_by_key(|t| t.0);
            terms.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            terms.retain(|t| t.1 != 0.0);
            lp.add_row(terms, row.sense, row.rhs.eval(frac));
            kept.push(r);
        }
        (lp, index, kept)
    }

    /// Lifts a certificate of the reduced system to the full one: the
    /// multiplier of each `z_{S,i} = z_S` row cancels the column of
    /// `z_{S,i}`.
    fn lift_ray(&self, reduced: &FarkasRay, kept: &[usize]) -> FarkasRay {
        let mut g = vec![0.0; self.rows.len()];
        for (&r, &m) in kept.iter().zip(&reduced.multipliers) {
            g[r] = m;
        }
        let mut column = vec![0.0; self.n_vars()];
        for (row, &m) in self.rows.iter().zip(&g) {
            if m != 0.0 {
                for &(v, a) in &row.terms {
                    column[v] += m * row.sense.ge_sign() * a;
                }
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if row.kind == RowKind::Integral {
                // terms are (z_{S,i}, 1), (z_S, -1)
                g[r] = -column[row.terms[0].0];
            }
        }
        FarkasRay { multipliers: g }
    }

    /// Turns a certificate into the inequality `sum_r g_r h_r(x, y) <= 0`.
    fn cut_from_ray(&self, ray: &FarkasRay, nf: usize, nc: usize) -> Cut {
        let mut cut = Cut::zero(nf, nc);
        for (row, &g) in self.rows.iter().zip(&ray.multipliers) {
            let w = g * row.sense.ge_sign();
            match row.rhs {
                Rhs::Zero => {}
                Rhs::One => cut.constant += w,
                Rhs::Y(i) => cut.y_coef[i] += w,
                Rhs::X(i, j) => cut.x_coef[i][j] += w,
            }
        }
        cut
    }
}

pub fn build_config_system(
    inst: &Instance,
    frac: &FractionalSolution,
    facilities: &[usize],
    ell1: usize,
) -> Result<ConfigSystem> {
    let mut b = facilities.to_vec();
    b.sort_unstable();
    b.dedup();
    if b.is_empty() || b.len() > 64 {
        return Err(Error::InvalidParameter(format!(
            "configuration system needs 1 to 64 facilities, got {}",
            b.len()
        )));
    }
    let count: f64 = (0..=ell1.min(b.len())).map(|s| binomial(b.len(), s)).sum();
    if count > MAX_SETS as f64 {
        return Err(Error::ResourceLimit(format!(
            "{count} configurations for {} facilities exceed the limit of {MAX_SETS}",
            b.len()
        )));
    }
    let sets = subsets_up_to(b.len(), ell1.min(b.len()));
    let clients: Vec<usize> =
        (0..inst.n_clients()).filter(|&j| frac.x_to(&b, j) > tol::ZERO_MASS).collect();
    let capacities = b.iter().map(|&i| inst.capacity(i)).collect();

    let mut si_start = Vec::with_capacity(sets.len() + 1);
    let mut n_si = 0;
    for &m in &sets {
        si_start.push(n_si);
        n_si += m.count_ones() as usize;
    }
    si_start.push(n_si);
    n_si += b.len();

    let mut sys = ConfigSystem { facilities: b, clients, capacities, ell1, sets, rows: Vec::new(), si_start, n_si };
    let nb = sys.facilities.len();
    let ncb = sys.clients.len();
    let members: Vec<Vec<usize>> = (0..sys.n_sets()).map(|s| sys.members(s)).collect();
    let mut rows = Vec::new();
    let mut push = |kind, set, terms, sense, rhs| rows.push(ConfigRow { kind, set, terms, sense, rhs });

    push(RowKind::AddToOne, None, (0..sys.n_sets()).map(|s| (sys.z_s(s), 1.0)).collect(), Sense::Eq, Rhs::One);
    // per facility position: the (set, member slot) pairs containing it
    let mut holders: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nb];
    for (s, mem) in members.iter().enumerate() {
        for (k, &p) in mem.iter().enumerate() {
            holders[p].push((s, k));
        }
    }
    for p in 0..nb {
        let i = sys.facilities[p];
        let terms = holders[p].iter().map(|&(s, k)| (sys.z_si(s, k), 1.0)).collect();
        push(RowKind::AddToY, None, terms, Sense::Eq, Rhs::Y(i));
    }
    for p in 0..nb {
        let i = sys.facilities[p];
        for (jp, &j) in sys.clients.iter().enumerate() {
            let terms = holders[p].iter().map(|&(s, k)| (sys.z_sij(s, k, jp), 1.0)).collect();
            push(RowKind::AddToX, None, terms, Sense::Eq, Rhs::X(i, j));
        }
    }
    for (s, mem) in members.iter().enumerate() {
        for k in 0..mem.len() {
            let zsi = sys.z_si(s, k);
            for jp in 0..ncb {
                let terms = vec![(sys.z_sij(s, k, jp), 1.0), (zsi, -1.0)];
                push(RowKind::ClientBelowFacility, Some(s), terms, Sense::Le, Rhs::Zero);
            }
            push(RowKind::FacilityBelowSet, Some(s), vec![(zsi, 1.0), (sys.z_s(s), -1.0)], Sense::Le, Rhs::Zero);
            if s != sys.bottom() {
                push(RowKind::Integral, Some(s), vec![(zsi, 1.0), (sys.z_s(s), -1.0)], Sense::Eq, Rhs::Zero);
            }
        }
    }
    for (s, mem) in members.iter().enumerate() {
        for jp in 0..ncb {
            let mut terms: Vec<_> = (0..mem.len()).map(|k| (sys.z_sij(s, k, jp), 1.0)).collect();
            terms.push((sys.z_s(s), -1.0));
            push(RowKind::OneFacilityPerClient, Some(s), terms, Sense::Le, Rhs::Zero);
        }
    }
    for (s, mem) in members.iter().enumerate() {
        for (k, &p) in mem.iter().enumerate() {
            let mut terms: Vec<_> = (0..ncb).map(|jp| (sys.z_sij(s, k, jp), 1.0)).collect();
            terms.push((sys.z_si(s, k), -(sys.capacities[p] as f64)));
            push(RowKind::Capacity, Some(s), terms, Sense::Le, Rhs::Zero);
        }
    }
    let bot = sys.bottom();
    let mut terms: Vec<_> = (0..nb).map(|k| (sys.z_si(bot, k), 1.0)).collect();
    terms.push((sys.z_s(bot), -(ell1 as f64)));
    push(RowKind::Bottom, Some(bot), terms, Sense::Ge, Rhs::Zero);
    sys.rows = rows;
    Ok(sys)
}

/// Decides whether the system is feasible at `(x, y)`. On infeasibility the
/// certificate is lifted to the full system, re-verified, and returned as a
/// cut on `(x, y)` that the current point violates.
pub fn check_feasible(sys: &ConfigSystem, frac: &FractionalSolution) -> Result<ConfigOutcome> {
    let (reduced, index, kept) = sys.reduced_lp(frac);
    let size = reduced.n_rows() * (reduced.n_vars() + reduced.n_rows());
    let normalized: Vec<bool> = kept.iter().map(|&r| sys.rows[r].rhs != Rhs::Zero).collect();
    let full = sys.full_lp(frac);
    // large systems are mostly separated; the primal solve is skipped then
    if size > DENSE_LIMIT {
        if let Some(ray) = deepest_ray(&reduced, &normalized)? {
            return separate(sys, frac, &reduced, &full, &index, &kept, ray);
        }
    }
    match solve_sized(&reduced, size)? {
        LpOutcome::Optimal(sol) => {
            let z: Vec<f64> = index.iter().map(|&r| sol.x[r]).collect();
            let violation = full.max_violation(&z);
            if violation > tol::FEAS {
                return Err(Error::Numerical(format!(
                    "configuration solution violates its rows by {violation:e}"
                )));
            }
            Ok(ConfigOutcome::Feasible(z))
        }
        LpOutcome::Infeasible(ray) => {
            let ray = if size > DENSE_LIMIT { ray } else { deepest_ray(&reduced, &normalized)?.unwrap_or(ray) };
            separate(sys, frac, &reduced, &full, &index, &kept, ray)
        }
        LpOutcome::Unbounded => Err(Error::Numerical("feasibility system reported unbounded".into())),
    }
}

fn separate(
    sys: &ConfigSystem,
    frac: &FractionalSolution,
    reduced: &LinearProgram,
    full: &LinearProgram,
    index: &[usize],
    kept: &[usize],
    ray: FarkasRay,
) -> Result<ConfigOutcome> {
    if ray.margin(reduced).is_some_and(|m| m < MIN_CUT_DEPTH) {
        if let Some(x) = elastic_solution(reduced)? {
            let z: Vec<f64> = index.iter().map(|&r| x[r]).collect();
            if full.max_violation(&z) <= tol::FEAS {
                return Ok(ConfigOutcome::Feasible(z));
            }
        }
    }
    let lifted = sys.lift_ray(&ray, kept);
    let Some(margin) = lifted.margin(full) else {
        return Err(Error::Numerical("lifted certificate does not verify".into()));
    };
    let mut cut = sys.cut_from_ray(&lifted, frac.n_facilities(), frac.n_clients());
    relax_tiny_terms(&mut cut);
    let value = cut.eval(frac);
    if value <= tol::CERT {
        return Err(Error::Numerical(format!(
            "cut value {value:e} at the current point (certificate margin {margin:e})"
        )));
    }
    Ok(ConfigOutcome::Infeasible(cut))
}

/// Dense simplex for small systems, falling back to the sparse engine when
/// the dense tableau loses accuracy.
fn solve_sized(lp: &LinearProgram, size: usize) -> Result<LpOutcome> {
    if size <= DENSE_LIMIT {
        match solve_lp(lp) {
            Err(Error::Numerical(_)) => {}
            other => return other,
        }
    }
    solve_lp_sparse(lp)
}

/// Infeasibility shallower than this, measured on cuts with unit L1 norm,
/// is checked against solver noise before a cut is emitted.
const MIN_CUT_DEPTH: f64 = 1e-6;

/// Minimizes the total slack needed on the equality rows; returns the
/// variable part of the optimum.
fn elastic_solution(lp: &LinearProgram) -> Result<Option<Vec<f64>>> {
    let n = lp.n_vars();
    let mut elastic = lp.clone();
    for r in 0..lp.n_rows() {
        if lp.rows[r].sense == Sense::Eq {
            for sign in [1.0, -1.0] {
                elastic.objective.push(1.0);
                elastic.bounds.push((0.0, f64::INFINITY));
                let v = elastic.objective.len() - 1;
                elastic.rows[r].terms.push((v, sign));
            }
        }
    }
    for v in 0..n {
        elastic.objective[v] = 0.0;
    }
    Ok(solve_lp_sparse(&elastic)?.optimal().map(|s| s.x[..n].to_vec()))
}

/// Coefficients below this magnitude are removed from emitted cuts.
const TINY_COEF: f64 = 1e-9;

/// Removes negligible coefficients while keeping the cut valid over the
/// unit box: a positive term is dropped, a negative term `c v` is replaced
/// by its lower bound `c`.
fn relax_tiny_terms(cut: &mut Cut) {
    for c in cut.x_coef.iter_mut().flatten().chain(cut.y_coef.iter_mut()) {
        if c.abs() < TINY_COEF {
            if *c < 0.0 {
                cut.constant += *c;
            }
            *c = 0.0;
        }
    }
}

/// Certificate whose aggregated right-hand side is most violated among all
/// certificates with unit L1 norm on the rows flagged in `normalized`.
/// Every variable of `lp` must range over `[0, inf)`.
fn deepest_ray(lp: &LinearProgram, normalized: &[bool]) -> Result<Option<FarkasRay>> {
    let m = lp.n_rows();
    // g_r = plus_r - minus_r; minus only exists for equality rows
    let mut minus = vec![None; m];
    let mut n = m;
    for (r, row) in lp.rows.iter().enumerate() {
        if row.sense == Sense::Eq {
            minus[r] = Some(n);
            n += 1;
        }
    }
    let mut objective = vec![0.0; n];
    for (r, row) in lp.rows.iter().enumerate() {
        let c = -row.sense.ge_sign() * row.rhs;
        objective[r] = c;
        if let Some(v) = minus[r] {
            objective[v] = -c;
        }
    }
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.n_vars()];
    for (r, row) in lp.rows.iter().enumerate() {
        let s = row.sense.ge_sign();
        for &(j, a) in &row.terms {
            columns[j].push((r, s * a));
            if let Some(v) = minus[r] {
                columns[j].push((v, -s * a));
            }
        }
    }
    let mut norm = Vec::new();
    for r in (0..m).filter(|&r| normalized[r]) {
        norm.push((r, 1.0));
        if let Some(v) = minus[r] {
            norm.push((v, 1.0));
        }
    }

    // Columns pinned to zero by a nonnegative equality row with zero rhs
    // rarely bind, so their dual rows are generated on demand.
    let mut pinned = vec![false; lp.n_vars()];
    for row in &lp.rows {
        if row.sense == Sense::Eq && row.rhs == 0.0 && row.terms.iter().all(|&(_, a)| a > 0.0) {
            for &(j, _) in &row.terms {
                pinned[j] |= lp.bounds[j].0 == 0.0;
            }
        }
    }
    let mut active: Vec<bool> = pinned.iter().map(|p| !p).collect();
    let mut dual = LinearProgram::new(objective);
    for (col, _) in columns.iter().zip(&active).filter(|(_, &a)| a) {
        dual.add_row(col.clone(), Sense::Le, 0.0);
    }
    dual.add_row(norm, Sense::Le, 1.0);
    let Some((mut session, mut sol)) = SparseSession::start(dual)? else {
        return Ok(None);
    };
    loop {
        let mut rows = Vec::new();
        for (j, col) in columns.iter().enumerate() {
            let value: f64 = col.iter().map(|&(v, a)| a * sol.x[v]).sum();
            if !active[j] && value > TINY_COEF {
                active[j] = true;
                rows.push((col.clone(), Sense::Le, 0.0));
            }
        }
        if rows.is_empty() {
            let multipliers = (0..m).map(|r| sol.x[r] - minus[r].map_or(0.0, |v| sol.x[v])).collect();
            let ray = FarkasRay { multipliers };
            return Ok(ray.margin(lp).map(|_| ray));
        }
        let Some(next) = session.add_rows(rows)? else {
            return Ok(None);
        };
        sol = next;
    }
}
