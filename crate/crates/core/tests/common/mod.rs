//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's solvers.

#![allow(dead_code)]

use ittp::{Instance, Timetable};
use rand::Rng;

pub fn random_instance(rng: &mut impl Rng, n: usize, r: usize, lambda: usize) -> Instance {
    let mut d = vec![vec![0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = rng.gen_range(1..30);
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    Instance::new("rand", d, r, lambda).unwrap()
}

/// Legs and road trips counted by walking every team's venue sequence.
pub fn count_legs_and_trips(tt: &Timetable) -> (usize, usize) {
    let n = tt.n();
    let (mut legs, mut trips) = (0, 0);
    for t in 0..n {
        let mut venues = vec![t];
        for round in tt.rounds() {
            let g = round.iter().find(|g| g.home == t || g.away == t).unwrap();
            venues.push(g.home);
        }
        venues.push(t);
        legs += venues.windows(2).filter(|w| w[0] != w[1]).count();
        trips += venues.windows(2).filter(|w| w[0] == t && w[1] != t).count();
    }
    (legs, trips)
}

/// Travel distance recomputed from the venue walk.
pub fn walk_distance(inst: &Instance, tt: &Timetable) -> i64 {
    let mut total = 0;
    for t in 0..tt.n() {
        let mut at = t;
        for round in tt.rounds() {
            let g = round.iter().find(|g| g.home == t || g.away == t).unwrap();
            total += inst.d(at, g.home);
            at = g.home;
        }
        total += inst.d(at, t);
    }
    total
}

/// Cheapest way for `team` to visit exactly the teams in `set` with trips of
/// at most `lambda` stops, by trying every order and every split.
fn best_cover(inst: &Instance, team: usize, set: &[usize], lambda: usize) -> (i64, usize) {
    fn go(
        inst: &Instance,
        team: usize,
        left: &mut Vec<usize>,
        lambda: usize,
        at: usize,
        run: usize,
        cost: i64,
        trips: usize,
        best: &mut (i64, usize),
    ) {
        if left.is_empty() {
            let total = cost + inst.d(at, team);
            if total < best.0 {
                *best = (total, trips);
            }
            return;
        }
        for k in 0..left.len() {
            let u = left.remove(k);
            // continue the current trip
            if at != team && run < lambda {
                go(
                    inst,
                    team,
                    left,
                    lambda,
                    u,
                    run + 1,
                    cost + inst.d(at, u),
                    trips,
                    best,
                );
            }
            // or go home first and start a new one
            let back = if at == team { 0 } else { inst.d(at, team) };
            go(
                inst,
                team,
                left,
                lambda,
                u,
                1,
                cost + back + inst.d(team, u),
                trips + 1,
                best,
            );
            left.insert(k, u);
        }
    }
    let mut best = (i64::MAX, 0);
    go(
        inst,
        team,
        &mut set.to_vec(),
        lambda,
        team,
        0,
        0,
        0,
        &mut best,
    );
    best
}

fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut with: Vec<Vec<usize>> = subsets(&items[1..], k - 1)
        .into_iter()
        .map(|mut s| {
            s.insert(0, items[0]);
            s
        })
        .collect();
    with.extend(subsets(&items[1..], k));
    with
}

/// Plain backtracking edge colouring.
pub fn colorable(n: usize, edges: &[(usize, usize)], colors: usize) -> bool {
    fn go(
        n: usize,
        edges: &[(usize, usize)],
        colors: usize,
        k: usize,
        used: &mut [Vec<bool>],
    ) -> bool {
        if k == edges.len() {
            return true;
        }
        let (a, b) = edges[k];
        for c in 0..colors {
            if !used[a][c] && !used[b][c] {
                used[a][c] = true;
                used[b][c] = true;
                if go(n, edges, colors, k + 1, used) {
                    return true;
                }
                used[a][c] = false;
                used[b][c] = false;
            }
        }
        false
    }
    let mut used = vec![vec![false; colors]; n];
    go(n, edges, colors, 0, &mut used)
}

/// Optima of the trip-selection program by enumerating every choice of
/// visited opponents per team: `(plain, with the colouring requirement)`.
/// `None` when no selection exists.
pub struct SelectionOptima {
    pub plain: Option<i64>,
    pub one_factor: Option<i64>,
}

pub fn exhaustive_selection(inst: &Instance) -> SelectionOptima {
    let (n, r, lambda) = (inst.n(), inst.rounds(), inst.lambda());
    let half = r / 2;
    let options: Vec<Vec<(Vec<usize>, i64)>> = (0..n)
        .map(|t| {
            let others: Vec<usize> = (0..n).filter(|&u| u != t).collect();
            let mut opts: Vec<(Vec<usize>, i64)> = subsets(&others, half)
                .into_iter()
                .map(|s| {
                    let c = best_cover(inst, t, &s, lambda).0;
                    (s, c)
                })
                .collect();
            opts.sort_by_key(|o| o.1);
            opts
        })
        .collect();
    let cheapest: Vec<i64> = options.iter().map(|o| o[0].1).collect();
    let mut suffix = vec![0; n + 1];
    for t in (0..n).rev() {
        suffix[t] = suffix[t + 1] + cheapest[t];
    }

    struct S<'a> {
        n: usize,
        half: usize,
        r: usize,
        options: &'a [Vec<(Vec<usize>, i64)>],
        suffix: Vec<i64>,
        visit: Vec<Vec<bool>>,
        hosted: Vec<usize>,
        plain: Option<i64>,
        one_factor: Option<i64>,
    }
    impl S<'_> {
        fn go(&mut self, t: usize, cost: i64) {
            let bound = cost + self.suffix[t];
            if self.one_factor.is_some_and(|b| bound >= b) && self.plain.is_some_and(|b| bound >= b)
            {
                return;
            }
            if t == self.n {
                if self.hosted.iter().any(|&h| h != self.half) {
                    return;
                }
                if self.plain.is_none_or(|b| cost < b) {
                    self.plain = Some(cost);
                }
                if self.one_factor.is_none_or(|b| cost < b) {
                    let mut edges = Vec::new();
                    for a in 0..self.n {
                        for b in 0..self.n {
                            if self.visit[a][b] {
                                edges.push((a.min(b), a.max(b)));
                            }
                        }
                    }
                    if colorable(self.n, &edges, self.r) {
                        self.one_factor = Some(cost);
                    }
                }
                return;
            }
            for k in 0..self.options[t].len() {
                let (set, c) = &self.options[t][k];
                let ok = set
                    .iter()
                    .all(|&u| self.hosted[u] < self.half && !self.visit[u][t]);
                if !ok {
                    continue;
                }
                for &u in set {
                    self.hosted[u] += 1;
                    self.visit[t][u] = true;
                }
                self.go(t + 1, cost + c);
                for &u in set {
                    self.hosted[u] -= 1;
                    self.visit[t][u] = false;
                }
            }
        }
    }
    let mut s = S {
        n,
        half,
        r,
        options: &options,
        suffix,
        visit: vec![vec![false; n]; n],
        hosted: vec![0; n],
        plain: None,
        one_factor: None,
    };
    s.go(0, 0);
    SelectionOptima {
        plain: s.plain,
        one_factor: s.one_factor,
    }
}

/// Every-team independent optimum: each team's cheapest cover of any `r/2`
/// opponents.
pub fn exhaustive_independent(inst: &Instance) -> i64 {
    let n = inst.n();
    (0..n)
        .map(|t| {
            let others: Vec<usize> = (0..n).filter(|&u| u != t).collect();
            subsets(&others, inst.rounds() / 2)
                .into_iter()
                .map(|s| best_cover(inst, t, &s, inst.lambda()).0)
                .min()
                .unwrap()
        })
        .sum()
}
