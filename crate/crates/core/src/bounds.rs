//! Lower bounds on total travel.
//!
//! The independent bound solves one trip-selection problem per team. The
//! dependent bound couples teams (everybody is visited `r/2` times, each pair
//! meets at most once) and is solved by a branch-and-bound over per-team
//! opponent sets, with a Lagrangian relaxation of the visit counts as node
//! bound.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::instance::Instance;
use crate::trips::{binomial, prune_dominated, RoadTrip, TripCatalog};

/// Default cap on the number of per-team opponent sets, summed over teams.
pub const DEFAULT_OPTION_CAP: u128 = 5_000_000;

/// Lagrange multipliers are kept as multiples of `1/SCALE` so that every
/// bound is evaluated in exact integer arithmetic.
const SCALE: i64 = 256;
const ROOT_ITERATIONS: usize = 3000;
const NODE_ITERATIONS: usize = 12;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundMethod {
    #[serde(rename = "ILB")]
    Ilb,
    #[serde(rename = "DLB")]
    Dlb,
    #[serde(rename = "DLB_1F")]
    Dlb1F,
    #[serde(rename = "DLB_MINLEG")]
    DlbMinLeg,
    #[serde(rename = "MINLEGS_FORMULA")]
    MinLegsFormula,
}

impl BoundMethod {
    pub fn name(self) -> &'static str {
        match self {
            BoundMethod::Ilb => "ILB",
            BoundMethod::Dlb => "DLB",
            BoundMethod::Dlb1F => "DLB_1F",
            BoundMethod::DlbMinLeg => "DLB_MINLEG",
            BoundMethod::MinLegsFormula => "MINLEGS_FORMULA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundStatus {
    Optimal,
    BestFound,
    Formula,
    /// The coupled program has no solution.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub instance: String,
    pub method: BoundMethod,
    /// Certified lower bound.
    pub value: i64,
    pub status: BoundStatus,
    pub runtime_s: f64,
    /// `(incumbent - value) / incumbent` when the search stopped early.
    pub gap: Option<f64>,
    /// Best complete selection found by the search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub incumbent: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<u64>,
    /// For the formula: whether the value is known to be attainable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
}

impl BoundReport {
    fn new(instance: &str, method: BoundMethod, value: i64, status: BoundStatus) -> Self {
        BoundReport {
            instance: instance.to_string(),
            method,
            value,
            status,
            runtime_s: 0.0,
            gap: None,
            incumbent: None,
            nodes: None,
            exact: None,
        }
    }
}

/// Minimum number of legs, `nr/2 + n*ceil(r/(2*lambda))`.
pub fn min_legs_formula(n: usize, r: usize, lambda: usize) -> Result<BoundReport> {
    if n < 2 || n % 2 != 0 || r == 0 || r % 2 != 0 || r > n - 1 || lambda == 0 {
        return Err(invalid(format!(
            "min-legs formula needs even n >= 2, even 0 < r < n and lambda >= 1, got n = {n}, r = {r}, lambda = {lambda}"
        )));
    }
    let trips = n * r.div_ceil(2 * lambda);
    let value = (n * r / 2 + trips) as i64;
    let mut rep = BoundReport::new(
        &format!("n{n}-r{r}-l{lambda}"),
        BoundMethod::MinLegsFormula,
        value,
        BoundStatus::Formula,
    );
    rep.exact = Some(2 * r <= n);
    Ok(rep)
}

/// The leg formula scaled by the smallest off-diagonal distance.
pub fn min_legs_bound(instance: &Instance) -> Result<BoundReport> {
    let mut rep = min_legs_formula(instance.n(), instance.rounds(), instance.lambda())?;
    rep.instance = instance.name().to_string();
    rep.value = crate::heuristic::legs_floor(instance);
    Ok(rep)
}

/// Independent lower bound: every team picks its cheapest set of disjoint
/// trips covering `r/2` opponents.
pub fn ilb(instance: &Instance, catalog: &TripCatalog) -> Result<BoundReport> {
    let start = Instant::now();
    check_catalog(instance, catalog)?;
    let pruned = prune_dominated(catalog);
    let mut total = 0;
    for t in 0..instance.n() {
        total += team_ilb(pruned.trips(t), instance.half()).ok_or_else(|| {
            Error::Contract(format!(
                "team {t} cannot cover {} opponents",
                instance.half()
            ))
        })?;
    }
    let mut rep = BoundReport::new(
        instance.name(),
        BoundMethod::Ilb,
        total,
        BoundStatus::Optimal,
    );
    rep.runtime_s = start.elapsed().as_secs_f64();
    Ok(rep)
}

fn check_catalog(instance: &Instance, catalog: &TripCatalog) -> Result<()> {
    if catalog.n() != instance.n() || catalog.lambda() != instance.lambda() {
        return Err(Error::Structural(format!(
            "catalog built for n = {}, lambda = {} does not match instance with n = {}, lambda = {}",
            catalog.n(),
            catalog.lambda(),
            instance.n(),
            instance.lambda()
        )));
    }
    if instance.n() > 64 {
        return Err(invalid("bounds support at most 64 teams"));
    }
    Ok(())
}

/// Cheapest selection of disjoint trips with `stops` stops in total.
pub fn team_ilb(trips: &[RoadTrip], stops: usize) -> Option<i64> {
    let mut trips: Vec<&RoadTrip> = trips.iter().filter(|t| t.len() <= stops).collect();
    // cheapest per stop first; stable so catalog order breaks ties
    trips.sort_by(|a, b| (a.cost * b.len() as i64).cmp(&(b.cost * a.len() as i64)));
    let m = trips.len();
    // suffix[i][k]: cheapest cover of k stops by trips i.. with repetition
    let mut suffix = vec![vec![i64::MAX; stops + 1]; m + 1];
    suffix[m][0] = 0;
    for i in (0..m).rev() {
        let (len, cost) = (trips[i].len(), trips[i].cost);
        suffix[i][0] = 0;
        for k in 1..=stops {
            let mut v = suffix[i + 1][k];
            if len <= k && suffix[i][k - len] != i64::MAX {
                v = v.min(cost + suffix[i][k - len]);
            }
            suffix[i][k] = v;
        }
    }
    if suffix[0][stops] == i64::MAX {
        return None;
    }
    let masks: Vec<u64> = trips.iter().map(|t| t.mask()).collect();
    let mut best = i64::MAX;
    ilb_dfs(&trips, &masks, &suffix, 0, stops, 0, 0, &mut best);
    (best != i64::MAX).then_some(best)
}

#[allow(clippy::too_many_arguments)]
fn ilb_dfs(
    trips: &[&RoadTrip],
    masks: &[u64],
    suffix: &[Vec<i64>],
    from: usize,
    left: usize,
    used: u64,
    cost: i64,
    best: &mut i64,
) {
    if left == 0 {
        *best = (*best).min(cost);
        return;
    }
    for j in from..trips.len() {
        let g = suffix[j][left];
        if g == i64::MAX || cost + g >= *best {
            break;
        }
        let len = trips[j].len();
        if len > left || masks[j] & used != 0 {
            continue;
        }
        let rest = suffix[j + 1][left - len];
        if rest == i64::MAX || cost + trips[j].cost + rest >= *best {
            continue;
        }
        ilb_dfs(
            trips,
            masks,
            suffix,
            j + 1,
            left - len,
            used | masks[j],
            cost + trips[j].cost,
            best,
        );
    }
}

#[derive(Debug, Clone)]
pub struct DlbOptions {
    pub one_factor: bool,
    pub min_legs: bool,
    pub time_limit: Option<Duration>,
    /// Cap on opponent sets summed over teams.
    pub cap: u128,
}

impl Default for DlbOptions {
    fn default() -> Self {
        DlbOptions {
            one_factor: false,
            min_legs: false,
            time_limit: None,
            cap: DEFAULT_OPTION_CAP,
        }
    }
}

impl DlbOptions {
    pub fn method(&self) -> BoundMethod {
        match (self.one_factor, self.min_legs) {
            (true, _) => BoundMethod::Dlb1F,
            (false, true) => BoundMethod::DlbMinLeg,
            (false, false) => BoundMethod::Dlb,
        }
    }
}

/// One way for a team to play its away games: the set of teams it visits,
/// how many trips it uses and the cheapest cost of doing so.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TeamOption {
    pub mask: u64,
    pub trips: usize,
    pub cost: i64,
}

/// Per-team options of the dependent bound, in canonical order (opponent
/// sets lexicographically, then by trip count). Without `by_trip_count` each
/// set keeps only its cheapest partition; otherwise every trip count that
/// is not dominated by a larger count at no higher cost.
pub fn team_options(
    instance: &Instance,
    catalog: &TripCatalog,
    by_trip_count: bool,
    cap: u128,
) -> Result<Vec<Vec<TeamOption>>> {
    check_catalog(instance, catalog)?;
    let n = instance.n();
    let h = instance.half();
    let sets = binomial(n as u128 - 1, h as u128);
    let partial: u128 = (1..=h).map(|j| binomial(n as u128 - 1, j as u128)).sum();
    let required = (n as u128) * partial;
    if required > cap {
        return Err(Error::CapExceeded {
            what: format!("dependent-bound opponent sets ({sets} per team)"),
            required,
            cap,
        });
    }
    let pruned = prune_dominated(catalog);
    Ok((0..n)
        .map(|t| options_for(pruned.trips(t), n, t, h, instance.lambda(), by_trip_count))
        .collect())
}

fn options_for(
    trips: &[RoadTrip],
    n: usize,
    team: usize,
    h: usize,
    lambda: usize,
    by_trip_count: bool,
) -> Vec<TeamOption> {
    let opponents: Vec<usize> = (0..n).filter(|&o| o != team).collect();
    let mut by_min: Vec<Vec<(u64, i64)>> = vec![Vec::new(); n];
    for trip in trips {
        let mask = trip.mask();
        by_min[mask.trailing_zeros() as usize].push((mask, trip.cost));
    }
    let kmax = h;
    // best[mask][k-1]: cheapest partition of mask into k trips
    let mut best: HashMap<u64, Vec<i64>> = HashMap::new();
    let mut out = Vec::new();
    let mut combo = Vec::with_capacity(h);
    for size in 1..=h {
        combinations(&opponents, size, 0, &mut combo, &mut |set| {
            let mask = set.iter().fold(0u64, |m, &s| m | (1 << s));
            let low = set[0];
            let mut row = vec![i64::MAX; kmax];
            for &(tm, tc) in &by_min[low] {
                if tm & !mask != 0 || (tm.count_ones() as usize) > lambda {
                    continue;
                }
                let rest = mask ^ tm;
                if rest == 0 {
                    row[0] = row[0].min(tc);
                    continue;
                }
                let r = &best[&rest];
                for k in 1..kmax {
                    if r[k - 1] != i64::MAX {
                        row[k] = row[k].min(tc + r[k - 1]);
                    }
                }
            }
            if size == h {
                push_options(&mut out, mask, &row, by_trip_count);
            }
            if size < h {
                best.insert(mask, row);
            }
        });
    }
    out
}

fn push_options(out: &mut Vec<TeamOption>, mask: u64, row: &[i64], by_trip_count: bool) {
    if by_trip_count {
        let mut floor = i64::MAX;
        let mut keep = Vec::new();
        for k in (0..row.len()).rev() {
            if row[k] < floor {
                floor = row[k];
                keep.push(TeamOption {
                    mask,
                    trips: k + 1,
                    cost: row[k],
                });
            }
        }
        out.extend(keep.into_iter().rev());
    } else if let Some((k, &cost)) = row
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != i64::MAX)
        .min_by_key(|&(_, &c)| c)
    {
        out.push(TeamOption {
            mask,
            trips: k + 1,
            cost,
        });
    }
}

fn combinations(
    items: &[usize],
    size: usize,
    from: usize,
    cur: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]),
) {
    if cur.len() == size {
        f(cur);
        return;
    }
    for k in from..=items.len() - (size - cur.len()) {
        cur.push(items[k]);
        combinations(items, size, k + 1, cur, f);
        cur.pop();
    }
}

/// Dependent lower bound, optionally with the edge-colourability and
/// minimum-trip-count restrictions.
pub fn dlb(instance: &Instance, catalog: &TripCatalog, opts: &DlbOptions) -> Result<BoundReport> {
    let start = Instant::now();
    let deadline = opts.time_limit.map(|l| start + l);
    let method = opts.method();
    let options = team_options(instance, catalog, opts.min_legs, opts.cap)?;
    let v_nr = opts
        .min_legs
        .then(|| instance.n() * instance.rounds().div_ceil(2 * instance.lambda()));
    let mut search = DlbSearch::new(instance, options, opts.one_factor, v_nr, deadline);
    let mut rep = BoundReport::new(instance.name(), method, 0, BoundStatus::Infeasible);
    let Some((root_scaled, m)) = search.ascend(&Multipliers::zero(search.n), ROOT_ITERATIONS, 2.0)
    else {
        rep.runtime_s = start.elapsed().as_secs_f64();
        rep.nodes = Some(0);
        return Ok(rep);
    };
    let root = scaled_ceil(root_scaled).max(0);
    search.dfs(&m);

    rep.value = root;
    rep.status = BoundStatus::BestFound;
    rep.nodes = Some(search.nodes);
    rep.incumbent = search.best;
    if !search.timed_out {
        match search.best {
            Some(v) => {
                rep.value = v;
                rep.status = BoundStatus::Optimal;
            }
            None => rep.status = BoundStatus::Infeasible,
        }
    } else if let Some(ub) = search.best {
        rep.value = root.min(ub);
        if ub > 0 {
            rep.gap = Some((ub - rep.value) as f64 / ub as f64);
        }
    }
    rep.runtime_s = start.elapsed().as_secs_f64();
    log::debug!(
        "{} {}: root {root}, value {}, {} nodes",
        instance.name(),
        method.name(),
        rep.value,
        search.nodes
    );
    Ok(rep)
}

fn scaled_ceil(v: i64) -> i64 {
    v.div_euclid(SCALE) + i64::from(v.rem_euclid(SCALE) != 0)
}

/// Scaled multipliers: `mu` per visited team, `pi` per ordered pair (kept
/// symmetric), `nu` for the trip count.
#[derive(Debug, Clone)]
struct Multipliers {
    mu: Vec<i64>,
    pi: Vec<i64>,
    nu: i64,
}

impl Multipliers {
    fn zero(n: usize) -> Self {
        Multipliers {
            mu: vec![0; n],
            pi: vec![0; n * n],
            nu: 0,
        }
    }
}

struct DlbSearch {
    n: usize,
    h: usize,
    rounds: usize,
    options: Vec<Vec<TeamOption>>,
    one_factor: bool,
    v_nr: Option<usize>,
    deadline: Option<Instant>,
    timed_out: bool,
    nodes: u64,
    assigned: Vec<usize>,
    visits: Vec<usize>,
    /// `forbidden[t]`: teams that `t` may no longer visit because they
    /// already visit `t`.
    forbidden: Vec<u64>,
    full: u64,
    cost: i64,
    trip_sum: usize,
    best: Option<i64>,
}

impl DlbSearch {
    fn new(
        inst: &Instance,
        options: Vec<Vec<TeamOption>>,
        one_factor: bool,
        v_nr: Option<usize>,
        deadline: Option<Instant>,
    ) -> Self {
        let n = inst.n();
        DlbSearch {
            n,
            h: inst.half(),
            rounds: inst.rounds(),
            options,
            one_factor,
            v_nr,
            deadline,
            timed_out: false,
            nodes: 0,
            assigned: vec![NONE; n],
            visits: vec![0; n],
            forbidden: vec![0; n],
            full: 0,
            cost: 0,
            trip_sum: 0,
            best: None,
        }
    }

    fn reduced_cost(&self, t: usize, o: &TeamOption, m: &Multipliers) -> i64 {
        let mut v = o.cost * SCALE - m.nu * o.trips as i64;
        let mut mask = o.mask;
        let row = &m.pi[t * self.n..(t + 1) * self.n];
        while mask != 0 {
            let u = mask.trailing_zeros() as usize;
            v += m.mu[u] + row[u];
            mask &= mask - 1;
        }
        v
    }

    fn constant(&self, m: &Multipliers) -> i64 {
        // pi is stored for both orders of every pair
        self.h as i64 * m.mu.iter().sum::<i64>() - m.nu * self.v_nr.unwrap_or(0) as i64
            + m.pi.iter().sum::<i64>() / 2
    }

    fn blocked(&self, t: usize) -> u64 {
        self.forbidden[t] | self.full
    }

    /// Scaled relaxation value at the current node, filling `pick` with
    /// each team's fixed or cheapest compatible option. `None` when some
    /// open team has no compatible option left.
    fn relaxation(&self, m: &Multipliers, pick: &mut [usize]) -> Option<i64> {
        let mut total = -self.constant(m);
        for t in 0..self.n {
            if self.assigned[t] != NONE {
                pick[t] = self.assigned[t];
                total += self.reduced_cost(t, &self.options[t][self.assigned[t]], m);
                continue;
            }
            let blocked = self.blocked(t);
            let (k, v) = self.options[t]
                .iter()
                .enumerate()
                .filter(|(_, o)| o.mask & blocked == 0)
                .map(|(k, o)| (k, self.reduced_cost(t, o, m)))
                .min_by_key(|&(_, v)| v)?;
            pick[t] = k;
            total += v;
        }
        Some(total)
    }

    /// Subgradient ascent on the visit-count, meet-once and trip-count
    /// multipliers, from `start`. Returns the best scaled value and its
    /// multipliers.
    fn ascend(
        &self,
        start: &Multipliers,
        iterations: usize,
        theta0: f64,
    ) -> Option<(i64, Multipliers)> {
        let n = self.n;
        let mut pick = vec![0; n];
        let first = self.relaxation(start, &mut pick)?;
        let mut best = (first, start.clone());
        let mut mu: Vec<f64> = start.mu.iter().map(|&x| x as f64 / SCALE as f64).collect();
        let mut pi: Vec<f64> = start.pi.iter().map(|&x| x as f64 / SCALE as f64).collect();
        let mut nu = start.nu as f64 / SCALE as f64;
        let mut value = first;
        let mut theta = theta0;
        let mut stale = 0;
        let round = |x: f64| (x * SCALE as f64).round() as i64;
        for it in 0..iterations {
            if self.best.is_some_and(|b| scaled_ceil(best.0) >= b) {
                break;
            }
            if iterations > 100
                && it % 64 == 0
                && self.deadline.is_some_and(|d| Instant::now() >= d)
            {
                break;
            }
            let mut g = vec![-(self.h as f64); n];
            let mut meets = vec![-1f64; n * n];
            let mut trips = 0;
            for (t, &k) in pick.iter().enumerate() {
                let o = self.options[t][k];
                trips += o.trips;
                let mut mask = o.mask;
                while mask != 0 {
                    let u = mask.trailing_zeros() as usize;
                    g[u] += 1.0;
                    meets[t * n + u] += 1.0;
                    meets[u * n + t] += 1.0;
                    mask &= mask - 1;
                }
            }
            // projected subgradients for the inequality multipliers
            for (x, gm) in pi.iter().zip(meets.iter_mut()) {
                if *x <= 0.0 && *gm < 0.0 {
                    *gm = 0.0;
                }
            }
            let g_nu = match self.v_nr {
                Some(v) if nu > 0.0 || v > trips => v as f64 - trips as f64,
                _ => 0.0,
            };
            let norm: f64 = g.iter().map(|x| x * x).sum::<f64>()
                + meets.iter().map(|x| x * x).sum::<f64>() / 2.0
                + g_nu * g_nu;
            if norm == 0.0 {
                break;
            }
            let lb = best.0 as f64 / SCALE as f64;
            let target = match self.best {
                Some(b) => b as f64,
                None => lb + (0.05 * lb.abs()).max(1.0),
            };
            let step = theta * (target - value as f64 / SCALE as f64) / norm;
            for (x, gi) in mu.iter_mut().zip(&g) {
                *x += step * gi;
            }
            for (x, gi) in pi.iter_mut().zip(&meets) {
                *x = (*x + step * gi).max(0.0);
            }
            nu = (nu + step * g_nu).max(0.0);
            let m = Multipliers {
                mu: mu.iter().map(|&x| round(x)).collect(),
                pi: pi.iter().map(|&x| round(x)).collect(),
                nu: round(nu),
            };
            value = self.relaxation(&m, &mut pick)?;
            if value > best.0 {
                best = (value, m);
                stale = 0;
            } else {
                stale += 1;
                if stale >= 20 {
                    theta /= 2.0;
                    stale = 0;
                    if theta < 1e-4 {
                        break;
                    }
                }
            }
        }
        Some(best)
    }

    fn out_of_time(&mut self) -> bool {
        if !self.timed_out && self.nodes % 256 == 0 {
            if let Some(d) = self.deadline {
                self.timed_out = Instant::now() >= d;
            }
        }
        self.timed_out
    }

    fn apply(&mut self, t: usize, k: usize) {
        let o = self.options[t][k];
        self.assigned[t] = k;
        self.cost += o.cost;
        self.trip_sum += o.trips;
        let mut m = o.mask;
        while m != 0 {
            let u = m.trailing_zeros() as usize;
            m &= m - 1;
            self.visits[u] += 1;
            if self.visits[u] == self.h {
                self.full |= 1 << u;
            }
            self.forbidden[u] |= 1 << t;
        }
    }

    fn undo(&mut self, t: usize) {
        let k = self.assigned[t];
        let o = self.options[t][k];
        self.assigned[t] = NONE;
        self.cost -= o.cost;
        self.trip_sum -= o.trips;
        let mut m = o.mask;
        while m != 0 {
            let u = m.trailing_zeros() as usize;
            m &= m - 1;
            self.visits[u] -= 1;
            self.full &= !(1 << u);
            self.forbidden[u] &= !(1 << t);
        }
    }

    /// Counting checks that do not depend on costs.
    fn hopeless(&self) -> bool {
        let mut open = 0u64;
        let mut max_trips = 0;
        for t in 0..self.n {
            if self.assigned[t] != NONE {
                continue;
            }
            open |= 1 << t;
            let blocked = self.blocked(t);
            max_trips += self.options[t]
                .iter()
                .filter(|o| o.mask & blocked == 0)
                .map(|o| o.trips)
                .max()
                .unwrap_or(0);
        }
        if self.v_nr.is_some_and(|v| self.trip_sum + max_trips < v) {
            return true;
        }
        (0..self.n).any(|u| {
            let mut can = 0;
            let mut rest = open & !(1 << u);
            while rest != 0 {
                let t = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                if self.forbidden[t] & (1 << u) == 0 {
                    can += 1;
                }
            }
            self.h - self.visits[u] > can
        })
    }

    fn dfs(&mut self, parent: &Multipliers) {
        self.nodes += 1;
        if self.out_of_time() {
            return;
        }
        if self.assigned.iter().all(|&a| a != NONE) {
            self.leaf();
            return;
        }
        if self.hopeless() {
            return;
        }
        let iterations = if self.best.is_some() {
            NODE_ITERATIONS
        } else {
            0
        };
        let Some((value, m)) = self.ascend(parent, iterations, 1.0) else {
            return;
        };
        if self.best.is_some_and(|b| scaled_ceil(value) >= b) {
            return;
        }
        // fail-first: the open team with the fewest compatible options
        let (t, _) = (0..self.n)
            .filter(|&t| self.assigned[t] == NONE)
            .map(|t| {
                let blocked = self.blocked(t);
                (
                    t,
                    self.options[t]
                        .iter()
                        .filter(|o| o.mask & blocked == 0)
                        .count(),
                )
            })
            .min_by_key(|&(t, c)| (c, t))
            .expect("an open team");
        let blocked = self.blocked(t);
        let mut children: Vec<(i64, usize)> = self.options[t]
            .iter()
            .enumerate()
            .filter(|(_, o)| o.mask & blocked == 0)
            .map(|(k, o)| (self.reduced_cost(t, o, &m), k))
            .collect();
        children.sort_unstable();
        let base = value - children[0].0;
        for (red, k) in children {
            if self.best.is_some_and(|b| scaled_ceil(base + red) >= b) {
                break;
            }
            self.apply(t, k);
            self.dfs(&m);
            self.undo(t);
            if self.timed_out {
                return;
            }
        }
    }

    fn leaf(&mut self) {
        if self.best.is_some_and(|b| self.cost >= b) {
            return;
        }
        if self.visits.iter().any(|&v| v != self.h) {
            return;
        }
        if self.v_nr.is_some_and(|v| self.trip_sum < v) {
            return;
        }
        if self.one_factor {
            let mut edges = Vec::with_capacity(self.n * self.h);
            for t in 0..self.n {
                let mut m = self.options[t][self.assigned[t]].mask;
                while m != 0 {
                    edges.push((t, m.trailing_zeros() as usize));
                    m &= m - 1;
                }
            }
            match edge_colorable(self.n, &edges, self.rounds, self.deadline) {
                Some(true) => {}
                Some(false) => return,
                None => {
                    self.timed_out = true;
                    return;
                }
            }
        }
        self.best = Some(self.cost);
    }
}

/// Whether the simple graph on `n` vertices with `edges` can be properly
/// edge-coloured with `colors` colours. `None` when the deadline passes.
pub fn edge_colorable(
    n: usize,
    edges: &[(usize, usize)],
    colors: usize,
    deadline: Option<Instant>,
) -> Option<bool> {
    assert!(colors <= 64 && n <= 64);
    let mut degree = vec![0; n];
    for &(a, b) in edges {
        degree[a] += 1;
        degree[b] += 1;
    }
    if degree.iter().any(|&d| d > colors) {
        return Some(false);
    }
    let all = if colors == 64 {
        u64::MAX
    } else {
        (1u64 << colors) - 1
    };
    let mut used = vec![0u64; n];
    let mut color = vec![NONE; edges.len()];
    // colours are interchangeable: fix them around the first vertex in use
    if let Some(&(v, _)) = edges.first() {
        let mut c = 0;
        for (e, &(a, b)) in edges.iter().enumerate() {
            if a == v || b == v {
                color[e] = c;
                used[a] |= 1 << c;
                used[b] |= 1 << c;
                c += 1;
            }
        }
    }
    let mut steps = 0u64;
    let mut timed_out = false;
    let ok = color_dfs(
        edges,
        all,
        &mut used,
        &mut color,
        deadline,
        &mut steps,
        &mut timed_out,
    );
    if timed_out {
        None
    } else {
        Some(ok)
    }
}

fn color_dfs(
    edges: &[(usize, usize)],
    all: u64,
    used: &mut [u64],
    color: &mut [usize],
    deadline: Option<Instant>,
    steps: &mut u64,
    timed_out: &mut bool,
) -> bool {
    *steps += 1;
    if *steps % 4096 == 0 && deadline.is_some_and(|d| Instant::now() >= d) {
        *timed_out = true;
    }
    if *timed_out {
        return false;
    }
    // most constrained uncoloured edge
    let mut pick = None;
    let mut fewest = u32::MAX;
    for (e, &(a, b)) in edges.iter().enumerate() {
        if color[e] != NONE {
            continue;
        }
        let free = (all & !(used[a] | used[b])).count_ones();
        if free < fewest {
            fewest = free;
            pick = Some(e);
            if free == 0 {
                return false;
            }
        }
    }
    let Some(e) = pick else { return true };
    let (a, b) = edges[e];
    let mut free = all & !(used[a] | used[b]);
    while free != 0 {
        let c = free.trailing_zeros() as usize;
        free &= free - 1;
        color[e] = c;
        used[a] |= 1 << c;
        used[b] |= 1 << c;
        if color_dfs(edges, all, used, color, deadline, steps, timed_out) {
            return true;
        }
        used[a] &= !(1 << c);
        used[b] &= !(1 << c);
        color[e] = NONE;
        if *timed_out {
            return false;
        }
    }
    false
}
