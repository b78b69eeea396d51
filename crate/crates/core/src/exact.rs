//! Depth-first exact search for tiny instances.
//!
//! Rounds are filled one game at a time: the lowest unpaired team is paired
//! with each admissible partner in ascending order, home first. A node is cut
//! when its travel so far plus a per-team completion bound reaches the
//! incumbent.

use std::time::{Duration, Instant};

use crate::error::{invalid, Result};
use crate::heuristic::{SolveReport, SolveStatus};
use crate::instance::Instance;
use crate::schedule::{Game, HapAssignment, Timetable, Venue};

#[derive(Debug, Clone, Default)]
pub struct ExactOptions {
    pub time_limit: Option<Duration>,
    /// Lift the size guard.
    pub force: bool,
    /// Restrict the search to timetables with these patterns.
    pub haps: Option<HapAssignment>,
}

/// Whether the instance is in the range the solver is meant for.
pub fn within_exact_range(instance: &Instance) -> bool {
    instance.n() <= 8 || (instance.n() <= 10 && instance.rounds() == 2)
}

pub fn solve_exact(instance: &Instance, opts: &ExactOptions) -> Result<SolveReport> {
    if !opts.force && !within_exact_range(instance) {
        return Err(invalid(format!(
            "exact search is limited to n <= 8 or n <= 10 with r = 2, got n = {}, r = {}",
            instance.n(),
            instance.rounds()
        )));
    }
    if let Some(m) = &opts.haps {
        if m.n() != instance.n() || m.rounds() != instance.rounds() {
            return Err(crate::error::Error::Structural(
                "patterns do not match the instance size".into(),
            ));
        }
    }
    let start = Instant::now();
    let mut search = Search::new(instance, opts, start);
    search.dfs(0);
    let mut report = SolveReport::empty("exact", instance);
    report.iterations = search.nodes;
    report.runtime_s = start.elapsed().as_secs_f64();
    report.status = match (search.timed_out, &search.best) {
        (false, Some(_)) => SolveStatus::Optimal,
        (false, None) => SolveStatus::Infeasible,
        (true, _) => SolveStatus::BestFound,
    };
    report.stop_reason = if search.timed_out {
        format!(
            "time-limit after {} nodes, {:.1}% of first-game branches closed",
            search.nodes,
            100.0 * search.closed_roots as f64 / search.root_branches.max(1) as f64
        )
    } else {
        "search-complete".into()
    };
    if let Some((value, rounds)) = search.best {
        report.best_value = Some(value);
        report.timetable = Some(Timetable::new(instance.n(), rounds));
    }
    Ok(report)
}

struct Search<'a> {
    inst: &'a Instance,
    haps: Option<&'a HapAssignment>,
    n: usize,
    r: usize,
    half: usize,
    lambda: usize,
    start: Instant,
    limit: Option<Duration>,
    timed_out: bool,
    nodes: u64,
    /// Number of games placed in the current round.
    placed: Vec<bool>,
    met: Vec<bool>,
    loc: Vec<usize>,
    homes: Vec<usize>,
    aways: Vec<usize>,
    last: Vec<Option<Venue>>,
    run: Vec<usize>,
    travel: i64,
    rounds: Vec<Vec<Game>>,
    best: Option<(i64, Vec<Vec<Game>>)>,
    enter_min: i64,
    return_min: Vec<i64>,
    root_branches: usize,
    closed_roots: usize,
}

#[derive(Clone, Copy)]
struct TeamState {
    loc: usize,
    last: Option<Venue>,
    run: usize,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance, opts: &'a ExactOptions, start: Instant) -> Self {
        let n = inst.n();
        let off = |i: usize, j: usize| i != j;
        let enter_min = (0..n)
            .flat_map(|x| (0..n).filter(move |&y| off(x, y)).map(move |y| (y, x)))
            .map(|(y, x)| inst.d(y, x))
            .min()
            .unwrap_or(0);
        let return_min = (0..n)
            .map(|t| {
                (0..n)
                    .filter(|&x| x != t)
                    .map(|x| inst.d(x, t))
                    .min()
                    .unwrap_or(0)
            })
            .collect();
        Search {
            inst,
            haps: opts.haps.as_ref(),
            n,
            r: inst.rounds(),
            half: inst.half(),
            lambda: inst.lambda(),
            start,
            limit: opts.time_limit,
            timed_out: false,
            nodes: 0,
            placed: vec![false; n],
            met: vec![false; n * n],
            loc: (0..n).collect(),
            homes: vec![0; n],
            aways: vec![0; n],
            last: vec![None; n],
            run: vec![0; n],
            travel: 0,
            rounds: vec![Vec::new()],
            best: None,
            enter_min,
            return_min,
            root_branches: 0,
            closed_roots: 0,
        }
    }

    fn bound(&self) -> i64 {
        (0..self.n)
            .map(|t| {
                let left = (self.half - self.aways[t]) as i64;
                let out = left > 0 || self.loc[t] != t;
                left * self.enter_min + if out { self.return_min[t] } else { 0 }
            })
            .sum()
    }

    fn admissible(&self, t: usize, v: Venue, s: usize) -> bool {
        if let Some(m) = self.haps {
            if m.get(t, s) != v {
                return false;
            }
        }
        let count = match v {
            Venue::Home => self.homes[t],
            Venue::Away => self.aways[t],
        };
        if count >= self.half {
            return false;
        }
        !(self.last[t] == Some(v) && self.run[t] >= self.lambda)
    }

    fn play(&mut self, t: usize, v: Venue, venue: usize) -> (TeamState, i64) {
        let saved = TeamState {
            loc: self.loc[t],
            last: self.last[t],
            run: self.run[t],
        };
        let cost = if self.loc[t] != venue {
            self.inst.d(self.loc[t], venue)
        } else {
            0
        };
        self.loc[t] = venue;
        match v {
            Venue::Home => self.homes[t] += 1,
            Venue::Away => self.aways[t] += 1,
        }
        self.run[t] = if self.last[t] == Some(v) {
            self.run[t] + 1
        } else {
            1
        };
        self.last[t] = Some(v);
        (saved, cost)
    }

    fn unplay(&mut self, t: usize, v: Venue, saved: TeamState) {
        self.loc[t] = saved.loc;
        self.last[t] = saved.last;
        self.run[t] = saved.run;
        match v {
            Venue::Home => self.homes[t] -= 1,
            Venue::Away => self.aways[t] -= 1,
        }
    }

    fn out_of_time(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        if self.nodes % 4096 == 0 {
            if let Some(limit) = self.limit {
                if self.start.elapsed() >= limit {
                    self.timed_out = true;
                }
            }
        }
        self.timed_out
    }

    fn dfs(&mut self, s: usize) {
        self.nodes += 1;
        if self.out_of_time() {
            return;
        }
        if let Some((best, _)) = &self.best {
            if self.travel + self.bound() >= *best {
                return;
            }
        }
        if s == self.r {
            let home: i64 = (0..self.n)
                .filter(|&t| self.loc[t] != t)
                .map(|t| self.inst.d(self.loc[t], t))
                .sum();
            let total = self.travel + home;
            if self.best.as_ref().is_none_or(|(b, _)| total < *b) {
                let mut rounds = self.rounds.clone();
                rounds.pop();
                for round in &mut rounds {
                    round.sort_unstable();
                }
                self.best = Some((total, rounds));
            }
            return;
        }
        let Some(a) = (0..self.n).find(|&t| !self.placed[t]) else {
            self.rounds.push(Vec::new());
            self.placed.fill(false);
            self.dfs(s + 1);
            self.rounds.pop();
            let n = self.n;
            for g in self.rounds.last().expect("current round") {
                self.placed[g.home] = true;
                self.placed[g.away] = true;
            }
            debug_assert!(self.placed.iter().filter(|&&p| p).count() == n);
            return;
        };
        let root = s == 0 && a == 0;
        for b in a + 1..self.n {
            if self.placed[b] || self.met[a * self.n + b] {
                continue;
            }
            for (host, guest) in [(a, b), (b, a)] {
                if !self.admissible(host, Venue::Home, s) || !self.admissible(guest, Venue::Away, s)
                {
                    continue;
                }
                if root {
                    self.root_branches += 1;
                }
                let (sh, ch) = self.play(host, Venue::Home, host);
                let (sg, cg) = self.play(guest, Venue::Away, host);
                self.travel += ch + cg;
                self.placed[a] = true;
                self.placed[b] = true;
                self.met[a * self.n + b] = true;
                self.met[b * self.n + a] = true;
                self.rounds
                    .last_mut()
                    .expect("current round")
                    .push(Game::new(host, guest));

                self.dfs(s);

                self.rounds.last_mut().expect("current round").pop();
                self.met[a * self.n + b] = false;
                self.met[b * self.n + a] = false;
                self.placed[a] = false;
                self.placed[b] = false;
                self.travel -= ch + cg;
                self.unplay(guest, Venue::Away, sg);
                self.unplay(host, Venue::Home, sh);
                if root && !self.timed_out {
                    self.closed_roots += 1;
                }
            }
        }
    }
}
