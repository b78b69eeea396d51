//! Greedy matching heuristics and the 2-team home-away swap neighbourhood.
//!
//! `gm_constructive` fixes the home-away patterns and solves the rounds one
//! after the other as minimum-weight bipartite matchings between the home and
//! the away teams. `gm_iterative` hill-climbs over pattern assignments with
//! [`ThasMove`]s and reruns the matchings after every move.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::construct::feasible_timetable;
use crate::error::{invalid, Error, Result};
use crate::instance::Instance;
use crate::matching::{AssignmentSolver, FORBIDDEN};
use crate::schedule::{extract_haps, longest_run, travel, Game, HapAssignment, Timetable, Venue};

pub const DEFAULT_STREAK: usize = 10_000;

const MAX_REJECTIONS: u64 = 1_000_000;

/// Swap the venues of teams `i` and `j` in rounds `q` and `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ThasMove {
    pub i: usize,
    pub j: usize,
    pub q: usize,
    pub s: usize,
}

impl ThasMove {
    pub fn new(i: usize, j: usize, q: usize, s: usize) -> Self {
        ThasMove { i, j, q, s }
    }

    pub fn is_valid(&self, m: &HapAssignment) -> bool {
        let ThasMove { i, j, q, s } = *self;
        i != j
            && q != s
            && i.max(j) < m.n()
            && q.max(s) < m.rounds()
            && m.get(i, s) != m.get(j, s)
            && m.get(i, s) != m.get(i, q)
            && m.get(i, q) != m.get(j, q)
    }

    pub fn apply(&self, m: &mut HapAssignment) -> Result<()> {
        if !self.is_valid(m) {
            return Err(Error::Contract(format!("{self:?} is not a valid move")));
        }
        self.apply_unchecked(m);
        Ok(())
    }

    fn apply_unchecked(&self, m: &mut HapAssignment) {
        for round in [self.q, self.s] {
            let a = m.get(self.i, round);
            m.set(self.i, round, m.get(self.j, round));
            m.set(self.j, round, a);
        }
    }
}

/// Teams `0..n/2` at home in rounds `0..r/2` and away afterwards; the other
/// half the opposite.
pub fn canonical_assignment(n: usize, r: usize) -> HapAssignment {
    let rows = (0..n)
        .map(|t| {
            (0..r)
                .map(|s| {
                    if (t < n / 2) == (s < r / 2) {
                        Venue::Home
                    } else {
                        Venue::Away
                    }
                })
                .collect()
        })
        .collect();
    HapAssignment::from_rows(rows).expect("rows have equal length")
}

/// A move sequence turning `m` into `target`; every intermediate assignment is
/// proper and balanced.
pub fn thas_connect(m: &HapAssignment, target: &HapAssignment) -> Result<Vec<ThasMove>> {
    for (name, a) in [("source", m), ("target", target)] {
        if !a.is_proper() || !a.is_balanced() {
            return Err(Error::Contract(format!(
                "{name} assignment must be proper and balanced"
            )));
        }
        if a.n() % 2 != 0 || a.rounds() % 2 != 0 {
            return Err(Error::Contract(format!(
                "{name} assignment has odd dimensions"
            )));
        }
    }
    if m.n() != target.n() || m.rounds() != target.rounds() {
        return Err(Error::Structural("assignments differ in size".into()));
    }
    let mut forward = to_canonical(m);
    let backward = to_canonical(target);
    forward.extend(backward.into_iter().rev());
    Ok(forward)
}

fn to_canonical(start: &HapAssignment) -> Vec<ThasMove> {
    let mut m = start.clone();
    let (n, r) = (m.n(), m.rounds());
    let half = n / 2;
    let mut moves = Vec::new();
    let mut push = |m: &mut HapAssignment, mv: ThasMove| {
        debug_assert!(mv.is_valid(m));
        mv.apply_unchecked(m);
        moves.push(mv);
    };
    for k in 0..r / 2 {
        while let Some(u) = (0..half).find(|&u| m.get(u, k) == Venue::Away) {
            let v = (half..n)
                .find(|&v| m.get(v, k) == Venue::Home)
                .expect("proper assignment");
            let q = (k + 1..r)
                .find(|&q| m.get(u, q) == Venue::Home)
                .expect("balanced assignment");
            let s = (k + 1..r)
                .find(|&s| m.get(v, s) == Venue::Away)
                .expect("balanced assignment");
            if m.get(v, q) == Venue::Away {
                push(&mut m, ThasMove::new(u, v, k, q));
            } else if m.get(u, s) == Venue::Home {
                push(&mut m, ThasMove::new(u, v, k, s));
            } else {
                let w = (0..n)
                    .find(|&w| {
                        w != u && w != v && m.get(w, q) == Venue::Away && m.get(w, s) == Venue::Home
                    })
                    .expect("proper assignment");
                push(&mut m, ThasMove::new(v, w, q, s));
                push(&mut m, ThasMove::new(u, v, k, q));
            }
        }
    }
    debug_assert_eq!(m, canonical_assignment(n, r));
    moves
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    BestFound,
    Premature,
    Infeasible,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub algorithm: String,
    pub instance: String,
    pub seed: Option<u64>,
    pub status: SolveStatus,
    pub best_value: Option<i64>,
    /// 1-based round in which greedy matching found no perfect matching.
    pub premature_round: Option<usize>,
    pub iterations: u64,
    pub accepted: u64,
    pub premature_iterations: u64,
    pub non_improving_streak_limit: usize,
    pub stop_reason: String,
    pub runtime_s: f64,
    #[serde(skip)]
    pub timetable: Option<Timetable>,
    #[serde(skip)]
    pub haps: Option<HapAssignment>,
}

impl SolveReport {
    pub(crate) fn empty(algorithm: &str, instance: &Instance) -> Self {
        SolveReport {
            algorithm: algorithm.into(),
            instance: instance.name().into(),
            seed: None,
            status: SolveStatus::BestFound,
            best_value: None,
            premature_round: None,
            iterations: 0,
            accepted: 0,
            premature_iterations: 0,
            non_improving_streak_limit: 0,
            stop_reason: String::new(),
            runtime_s: 0.0,
            timetable: None,
            haps: None,
        }
    }
}

/// Cost of home team `i` hosting away team `j` in round `s`, given the
/// opponents of every team in rounds `0..s` (`opponents[round][team]`).
pub fn match_cost(
    instance: &Instance,
    m: &HapAssignment,
    opponents: &[Vec<usize>],
    i: usize,
    j: usize,
    s: usize,
) -> Result<i64> {
    let (n, r) = (instance.n(), instance.rounds());
    if m.n() != n || m.rounds() != r || i >= n || j >= n || s >= r {
        return Err(Error::Structural("match outside the instance".into()));
    }
    if m.get(i, s) != Venue::Home || m.get(j, s) != Venue::Away {
        return Err(Error::Contract(format!(
            "team {} is not home or team {} is not away in round {}",
            i + 1,
            j + 1,
            s + 1
        )));
    }
    if opponents.len() < s {
        return Err(Error::Structural(format!(
            "opponents of rounds before {} missing",
            s + 1
        )));
    }
    if opponents[..s].iter().any(|round| round[i] == j) {
        return Err(Error::Structural(format!(
            "teams {} and {} already met",
            i + 1,
            j + 1
        )));
    }
    let mut cost = 0;
    if s == 0 || m.get(j, s - 1) == Venue::Home {
        cost += instance.d(j, i);
    } else {
        cost += instance.d(opponents[s - 1][j], i);
    }
    if s + 1 == r || m.get(j, s + 1) == Venue::Home {
        cost += instance.d(i, j);
    }
    Ok(cost)
}

fn check_haps(instance: &Instance, m: &HapAssignment) -> Result<()> {
    if m.n() != instance.n() || m.rounds() != instance.rounds() {
        return Err(Error::Structural(format!(
            "assignment is {}x{}, instance needs {}x{}",
            m.n(),
            m.rounds(),
            instance.n(),
            instance.rounds()
        )));
    }
    if !m.is_proper() || !m.is_balanced() || !m.is_lambda_feasible(instance.lambda()) {
        return Err(Error::Contract(
            "assignment must be proper, balanced and lambda-feasible".into(),
        ));
    }
    Ok(())
}

/// Round-by-round matcher holding the current assignment and partial
/// timetable.
struct Greedy<'a> {
    inst: &'a Instance,
    m: HapAssignment,
    n: usize,
    r: usize,
    /// `opp[s * n + t]`
    opp: Vec<usize>,
    round_cost: Vec<i64>,
    /// Rounds `0..valid` of `opp` are a consistent greedy prefix.
    valid: usize,
    met: Vec<bool>,
    solver: AssignmentSolver,
    w: Vec<i64>,
    home: Vec<usize>,
    away: Vec<usize>,
    /// `order[s * n..]` lists the teams in the node order of round `s`.
    order: Vec<usize>,
    home_bits: Vec<u64>,
}

impl<'a> Greedy<'a> {
    fn new(inst: &'a Instance, m: HapAssignment) -> Self {
        let (n, r) = (inst.n(), inst.rounds());
        Greedy {
            inst,
            m,
            n,
            r,
            opp: vec![usize::MAX; n * r],
            round_cost: vec![0; r],
            valid: 0,
            met: vec![false; n * n],
            solver: AssignmentSolver::default(),
            w: Vec::new(),
            home: Vec::with_capacity(n / 2),
            away: Vec::with_capacity(n / 2),
            order: (0..r).flat_map(|_| 0..n).collect(),
            home_bits: vec![0; n],
        }
    }

    fn shuffle_order(&mut self, rng: &mut impl Rng) {
        for chunk in self.order.chunks_mut(self.n) {
            chunk.shuffle(rng);
        }
    }

    #[inline]
    fn cost(&self, i: usize, j: usize, s: usize) -> i64 {
        let d = |a, b| self.inst.d(a, b);
        let mut c = if s == 0 || self.m.get(j, s - 1) == Venue::Home {
            d(j, i)
        } else {
            d(self.opp[(s - 1) * self.n + j], i)
        };
        if s + 1 == self.r || self.m.get(j, s + 1) == Venue::Home {
            c += d(i, j);
        }
        c
    }

    fn chances(&self, i: usize, j: usize, s: usize) -> i64 {
        if self.r <= 64 {
            let later = if s + 1 >= 64 { 0 } else { !0u64 << (s + 1) };
            return ((self.home_bits[i] ^ self.home_bits[j]) & later).count_ones() as i64;
        }
        (s + 1..self.r)
            .filter(|&f| self.m.get(i, f) != self.m.get(j, f))
            .count() as i64
    }

    fn refresh_bits(&mut self) {
        if self.r > 64 {
            return;
        }
        for t in 0..self.n {
            self.home_bits[t] = self
                .m
                .row(t)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == Venue::Home)
                .fold(0, |b, (f, _)| b | 1 << f);
        }
    }

    /// Re-matches rounds `from..r`. `Err` carries the 0-based round without a
    /// perfect matching, or `r` when the partial cost already exceeds
    /// `budget`.
    fn run_from(&mut self, from: usize, budget: i64) -> std::result::Result<i64, usize> {
        let (n, k) = (self.n, self.n / 2);
        let from = from.min(self.valid);
        self.refresh_bits();
        let mut spent: i64 = self.round_cost[..from].iter().sum();
        self.met.fill(false);
        for s in 0..from {
            for t in 0..n {
                self.met[t * n + self.opp[s * n + t]] = true;
            }
        }
        for s in from..self.r {
            self.home.clear();
            self.away.clear();
            for &t in &self.order[s * n..(s + 1) * n] {
                match self.m.get(t, s) {
                    Venue::Home => self.home.push(t),
                    Venue::Away => self.away.push(t),
                }
            }
            debug_assert_eq!(self.home.len(), k);
            let mut w = std::mem::take(&mut self.w);
            w.clear();
            // ties on travel go to pairs with the fewest later chances to meet
            let scale = (k * self.r + 1) as i64;
            for &i in &self.home {
                for &j in &self.away {
                    w.push(if self.met[i * n + j] {
                        FORBIDDEN
                    } else {
                        self.cost(i, j, s) * scale + self.chances(i, j, s)
                    });
                }
            }
            let result = self.solver.solve(k, &w);
            self.w = w;
            let Some(matching) = result else {
                self.valid = s;
                return Err(s);
            };
            for (a, &b) in matching.assignment.iter().enumerate() {
                let (i, j) = (self.home[a], self.away[b]);
                self.opp[s * n + i] = j;
                self.opp[s * n + j] = i;
                self.met[i * n + j] = true;
                self.met[j * n + i] = true;
            }
            self.round_cost[s] = matching
                .assignment
                .iter()
                .enumerate()
                .map(|(a, &b)| self.cost(self.home[a], self.away[b], s))
                .sum();
            spent += self.round_cost[s];
            if spent > budget {
                self.valid = s + 1;
                return Err(self.r);
            }
        }
        self.valid = self.r;
        Ok(self.round_cost.iter().sum())
    }

    fn timetable(&self) -> Timetable {
        let n = self.n;
        let rounds = (0..self.valid)
            .map(|s| {
                (0..n)
                    .filter(|&t| self.m.get(t, s) == Venue::Home)
                    .map(|t| Game::new(t, self.opp[s * n + t]))
                    .collect()
            })
            .collect();
        Timetable::new(n, rounds)
    }
}

/// Constructive greedy matching on a fixed assignment.
pub fn gm_constructive(instance: &Instance, m: &HapAssignment) -> Result<SolveReport> {
    check_haps(instance, m)?;
    let start = Instant::now();
    let mut g = Greedy::new(instance, m.clone());
    let mut report = SolveReport::empty("gm-c", instance);
    report.iterations = 1;
    report.haps = Some(m.clone());
    match g.run_from(0, i64::MAX) {
        Ok(value) => {
            report.best_value = Some(value);
            report.timetable = Some(g.timetable());
            report.stop_reason = "complete".into();
        }
        Err(s) => {
            report.status = SolveStatus::Premature;
            report.premature_round = Some(s + 1);
            report.stop_reason = "premature".into();
        }
    }
    report.runtime_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Stopping rules for [`gm_iterative`]. Only the streak limit is active by
/// default.
#[derive(Debug, Clone)]
pub struct GmOptions {
    pub streak_limit: usize,
    /// Stop as soon as the best value is at most this, e.g. a proven bound.
    pub target: Option<i64>,
    pub max_iterations: Option<u64>,
    pub time_limit: Option<Duration>,
}

impl Default for GmOptions {
    fn default() -> Self {
        GmOptions {
            streak_limit: DEFAULT_STREAK,
            target: None,
            max_iterations: None,
            time_limit: None,
        }
    }
}

/// Number of balanced patterns on `r` rounds with runs of at most `lambda`.
pub fn pattern_count(r: usize, lambda: usize) -> u128 {
    PatternCounter::new(r, lambda).total()
}

/// Completion counts `f[pos][homes][last][run]` for uniform sampling.
struct PatternCounter {
    r: usize,
    lambda: usize,
    table: Vec<u128>,
}

impl PatternCounter {
    fn new(r: usize, lambda: usize) -> Self {
        let mut c = PatternCounter {
            r,
            lambda,
            table: vec![0; (r + 1) * (r + 1) * 2 * (lambda + 1)],
        };
        for pos in (0..=r).rev() {
            for homes in 0..=r {
                for last in 0..2 {
                    for run in 0..=lambda {
                        let val = if pos == r {
                            u128::from(2 * homes == r)
                        } else {
                            [Venue::Home, Venue::Away]
                                .iter()
                                .filter_map(|&v| c.step(pos, homes, last, run, v))
                                .map(|(h, l, u)| c.get(pos + 1, h, l, u))
                                .sum()
                        };
                        let idx = c.idx(pos, homes, last, run);
                        c.table[idx] = val;
                    }
                }
            }
        }
        c
    }

    fn idx(&self, pos: usize, homes: usize, last: usize, run: usize) -> usize {
        ((pos * (self.r + 1) + homes) * 2 + last) * (self.lambda + 1) + run
    }

    fn get(&self, pos: usize, homes: usize, last: usize, run: usize) -> u128 {
        self.table[self.idx(pos, homes, last, run)]
    }

    fn step(
        &self,
        pos: usize,
        homes: usize,
        last: usize,
        run: usize,
        v: Venue,
    ) -> Option<(usize, usize, usize)> {
        let code = usize::from(v == Venue::Away);
        let run = if pos > 0 && code == last { run + 1 } else { 1 };
        let homes = homes + usize::from(v == Venue::Home);
        let aways = pos + 1 - homes.min(pos + 1);
        if run > self.lambda || 2 * homes > self.r || 2 * aways > self.r {
            return None;
        }
        Some((homes, code, run))
    }

    fn total(&self) -> u128 {
        self.get(0, 0, 0, 0)
    }

    fn sample(&self, rng: &mut impl Rng) -> Option<Vec<Venue>> {
        if self.total() == 0 {
            return None;
        }
        let (mut homes, mut last, mut run) = (0, 0, 0);
        let mut out = Vec::with_capacity(self.r);
        for pos in 0..self.r {
            let options: Vec<_> = [Venue::Home, Venue::Away]
                .iter()
                .filter_map(|&v| {
                    self.step(pos, homes, last, run, v)
                        .map(|st| (v, st, self.get(pos + 1, st.0, st.1, st.2)))
                })
                .filter(|o| o.2 > 0)
                .collect();
            let total: u128 = options.iter().map(|o| o.2).sum();
            let mut pick = rng.gen_range(0..total);
            let chosen = options
                .iter()
                .find(|o| {
                    if pick < o.2 {
                        true
                    } else {
                        pick -= o.2;
                        false
                    }
                })
                .expect("pick below total");
            out.push(chosen.0);
            (homes, last, run) = chosen.1;
        }
        Some(out)
    }
}

/// A uniformly random balanced `lambda`-feasible pattern for a random half
/// of the teams, its complement for the rest.
pub fn random_complementary_haps(
    n: usize,
    r: usize,
    lambda: usize,
    rng: &mut impl Rng,
) -> Result<HapAssignment> {
    let pattern = PatternCounter::new(r, lambda).sample(rng).ok_or_else(|| {
        invalid(format!(
            "no balanced pattern on {r} rounds with lambda {lambda}"
        ))
    })?;
    let comp: Vec<Venue> = pattern.iter().map(|v| v.flip()).collect();
    let mut teams: Vec<usize> = (0..n).collect();
    teams.shuffle(rng);
    let mut rows = vec![Vec::new(); n];
    for (k, &t) in teams.iter().enumerate() {
        rows[t] = if k < n / 2 {
            pattern.clone()
        } else {
            comp.clone()
        };
    }
    HapAssignment::from_rows(rows)
}

fn sample_move(m: &mut HapAssignment, lambda: usize, rng: &mut impl Rng) -> Option<ThasMove> {
    let (n, r) = (m.n(), m.rounds());
    let mut rejected = 0u64;
    let mut others = Vec::with_capacity(n);
    let mut rounds = Vec::with_capacity(r);
    loop {
        let q = rng.gen_range(0..r);
        let i = rng.gen_range(0..n);
        let side = m.get(i, q);
        others.clear();
        others.extend((0..n).filter(|&t| m.get(t, q) != side));
        let j = *others.choose(rng)?;
        rounds.clear();
        rounds.extend((0..r).filter(|&s| s != q && m.get(i, s) != side && m.get(j, s) == side));
        let Some(&s) = rounds.choose(rng) else {
            continue;
        };
        let mv = ThasMove::new(i, j, q, s);
        mv.apply_unchecked(m);
        if longest_run(m.row(i)) <= lambda && longest_run(m.row(j)) <= lambda {
            return Some(mv);
        }
        mv.apply_unchecked(m);
        rejected += 1;
        if rejected >= MAX_REJECTIONS {
            return None;
        }
    }
}

/// Every leg costs at least the smallest distance, and every timetable has at
/// least `nr/2 + n*ceil(r/(2*lambda))` legs.
pub fn legs_floor(instance: &Instance) -> i64 {
    let n = instance.n();
    let d_min = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| instance.d(i, j))
        .min()
        .unwrap_or(0);
    let (r, lambda) = (instance.rounds(), instance.lambda());
    d_min * (n * r / 2 + n * (r / 2).div_ceil(lambda)) as i64
}

/// Iterative greedy matching from a seeded random start.
pub fn gm_iterative(instance: &Instance, seed: u64, opts: &GmOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let (n, r, lambda) = (instance.n(), instance.rounds(), instance.lambda());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SolveReport::empty("gm-it", instance);
    report.seed = Some(seed);
    report.non_improving_streak_limit = opts.streak_limit;

    let (initial, fallback) = if 2 * r <= n {
        (random_complementary_haps(n, r, lambda, &mut rng)?, None)
    } else {
        if lambda < 2 {
            return Err(invalid(format!(
                "no timetable exists with lambda = 1 and r = {r} > n/2 = {}",
                n / 2
            )));
        }
        let tt = feasible_timetable(n, r, rng.gen())?;
        let value = travel(instance, &tt)?.total_distance;
        (extract_haps(&tt)?, Some((tt, value)))
    };

    let mut g = Greedy::new(instance, initial);
    g.shuffle_order(&mut rng);
    let (mut best, mut best_tt, mut best_m) = match g.run_from(0, i64::MAX) {
        Ok(v) => (v, g.timetable(), g.m.clone()),
        Err(_) => {
            report.premature_iterations += 1;
            let (tt, v) = fallback.ok_or_else(|| {
                Error::Contract("greedy matching failed on complementary patterns".into())
            })?;
            (v, tt, g.m.clone())
        }
    };

    let floor = legs_floor(instance);
    let mut streak = 0usize;
    let mut saved_opp = g.opp.clone();
    let mut saved_cost = g.round_cost.clone();
    let stop_reason = loop {
        if best <= floor {
            report.status = SolveStatus::Optimal;
            break "proven-optimal";
        }
        if opts.target.is_some_and(|t| best <= t) {
            break "target";
        }
        if streak >= opts.streak_limit {
            break "streak";
        }
        if opts.max_iterations.is_some_and(|k| report.iterations >= k) {
            break "max-iterations";
        }
        if opts.time_limit.is_some_and(|l| start.elapsed() >= l) {
            break "time-limit";
        }
        let Some(mv) = sample_move(&mut g.m, lambda, &mut rng) else {
            break "rejections";
        };
        report.iterations += 1;
        saved_opp.copy_from_slice(&g.opp);
        saved_cost.copy_from_slice(&g.round_cost);
        let saved_valid = g.valid;
        let from = mv.q.min(mv.s).saturating_sub(1);
        match g.run_from(from, best) {
            Ok(v) if v <= best => {
                best = v;
                best_tt = g.timetable();
                best_m = g.m.clone();
                report.accepted += 1;
                streak = 0;
                continue;
            }
            Ok(_) => {}
            Err(s) if s < r => report.premature_iterations += 1,
            Err(_) => {}
        }
        streak += 1;
        mv.apply_unchecked(&mut g.m);
        g.opp.copy_from_slice(&saved_opp);
        g.round_cost.copy_from_slice(&saved_cost);
        g.valid = saved_valid;
    };

    report.best_value = Some(best);
    report.timetable = Some(best_tt);
    report.haps = Some(best_m);
    report.stop_reason = stop_reason.into();
    report.runtime_s = start.elapsed().as_secs_f64();
    Ok(report)
}
