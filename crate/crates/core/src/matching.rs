//! Minimum-weight perfect matching in complete-minus-forbidden bipartite
//! graphs.
//!
//! The solver is the shortest-augmenting-path form of the Hungarian method,
//! `O(k^3)`. Forbidden edges are absent from the graph; when the graph has no
//! perfect matching the solver says so instead of failing. Among all
//! minimum-weight matchings the lexicographically smallest one (by the
//! partner of left node 0, then left node 1, ...) is returned.

const NONE: usize = usize::MAX;
const INF: i64 = i64::MAX / 4;

/// Marker for a missing edge in flat weight matrices.
pub const FORBIDDEN: i64 = i64::MIN;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    /// `assignment[left] = right`
    pub assignment: Vec<usize>,
    pub cost: i64,
}

/// Convenience wrapper over [`AssignmentSolver`] taking `None` for forbidden
/// edges.
pub fn min_weight_perfect_matching(weights: &[Vec<Option<i64>>]) -> Option<Matching> {
    let k = weights.len();
    assert!(
        weights.iter().all(|r| r.len() == k),
        "weight matrix must be square"
    );
    let flat: Vec<i64> = weights
        .iter()
        .flatten()
        .map(|w| w.unwrap_or(FORBIDDEN))
        .collect();
    AssignmentSolver::default().solve(k, &flat)
}

/// Reusable buffers for repeated solves.
#[derive(Debug, Default, Clone)]
pub struct AssignmentSolver {
    u: Vec<i64>,
    v: Vec<i64>,
    p: Vec<usize>,
    way: Vec<usize>,
    minv: Vec<i64>,
    used: Vec<bool>,
    mate_l: Vec<usize>,
    mate_r: Vec<usize>,
    fixed_r: Vec<bool>,
    seen: Vec<bool>,
}

impl AssignmentSolver {
    /// Solves the `k x k` problem given row-major weights, with
    /// [`FORBIDDEN`] marking absent edges. Weights must be non-negative.
    pub fn solve(&mut self, k: usize, w: &[i64]) -> Option<Matching> {
        assert_eq!(w.len(), k * k);
        if k == 0 {
            return Some(Matching {
                assignment: Vec::new(),
                cost: 0,
            });
        }
        if !self.hungarian(k, w) {
            return None;
        }
        self.mate_l.clear();
        self.mate_l.resize(k, NONE);
        self.mate_r.clear();
        self.mate_r.resize(k, NONE);
        for j in 1..=k {
            let i = self.p[j] - 1;
            self.mate_l[i] = j - 1;
            self.mate_r[j - 1] = i;
        }
        self.lexicographic(k, w);
        let cost = (0..k).map(|i| w[i * k + self.mate_l[i]]).sum();
        Some(Matching {
            assignment: self.mate_l.clone(),
            cost,
        })
    }

    fn hungarian(&mut self, k: usize, w: &[i64]) -> bool {
        let reset = |buf: &mut Vec<i64>, val| {
            buf.clear();
            buf.resize(k + 1, val);
        };
        reset(&mut self.u, 0);
        reset(&mut self.v, 0);
        self.p.clear();
        self.p.resize(k + 1, 0);
        self.way.clear();
        self.way.resize(k + 1, 0);
        for i in 1..=k {
            self.p[0] = i;
            let mut j0 = 0;
            reset(&mut self.minv, INF);
            self.used.clear();
            self.used.resize(k + 1, false);
            loop {
                self.used[j0] = true;
                let i0 = self.p[j0];
                let mut delta = INF;
                let mut j1 = 0;
                let row = &w[(i0 - 1) * k..i0 * k];
                let ui = self.u[i0];
                let cols = row
                    .iter()
                    .zip(&self.used[1..])
                    .zip(&self.v[1..])
                    .zip(self.minv[1..].iter_mut().zip(self.way[1..].iter_mut()));
                for (c, (((&wij, &used), &vj), (minv, way))) in cols.enumerate() {
                    if used {
                        continue;
                    }
                    if wij != FORBIDDEN {
                        let cur = wij - ui - vj;
                        if cur < *minv {
                            *minv = cur;
                            *way = j0;
                        }
                    }
                    if *minv < delta {
                        delta = *minv;
                        j1 = c + 1;
                    }
                }
                if delta >= INF {
                    return false;
                }
                for j in 0..=k {
                    if self.used[j] {
                        self.u[self.p[j]] += delta;
                        self.v[j] -= delta;
                    } else if self.minv[j] < INF {
                        self.minv[j] -= delta;
                    }
                }
                j0 = j1;
                if self.p[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = self.way[j0];
                self.p[j0] = self.p[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }
        true
    }

    #[inline]
    fn tight(&self, k: usize, w: &[i64], i: usize, j: usize) -> bool {
        let wij = w[i * k + j];
        wij != FORBIDDEN && wij - self.u[i + 1] - self.v[j + 1] == 0
    }

    /// Every minimum-weight perfect matching lives on the tight edges of an
    /// optimal dual; walk left nodes in order and give each the smallest
    /// tight partner that still admits a perfect matching.
    fn lexicographic(&mut self, k: usize, w: &[i64]) {
        self.fixed_r.clear();
        self.fixed_r.resize(k, false);
        for i in 0..k {
            for j in 0..k {
                if self.fixed_r[j] || !self.tight(k, w, i, j) {
                    continue;
                }
                if self.mate_l[i] == j {
                    break;
                }
                let old = self.mate_l[i];
                let other = self.mate_r[j];
                self.mate_l[i] = j;
                self.mate_r[j] = i;
                self.mate_r[old] = NONE;
                self.mate_l[other] = NONE;
                self.seen.clear();
                self.seen.resize(k, false);
                self.seen[j] = true;
                if self.augment(k, w, other, old) {
                    break;
                }
                self.mate_l[i] = old;
                self.mate_r[old] = i;
                self.mate_r[j] = other;
                self.mate_l[other] = j;
            }
            self.fixed_r[self.mate_l[i]] = true;
        }
    }

    fn augment(&mut self, k: usize, w: &[i64], row: usize, target: usize) -> bool {
        for c in 0..k {
            if self.fixed_r[c] || self.seen[c] || !self.tight(k, w, row, c) {
                continue;
            }
            self.seen[c] = true;
            let next = self.mate_r[c];
            if c == target || (next != NONE && self.augment(k, w, next, target)) {
                self.mate_l[row] = c;
                self.mate_r[c] = row;
                return true;
            }
        }
        false
    }
}
