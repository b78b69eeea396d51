//! Polynomial-time constructions of feasible timetables and home-away
//! patterns.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::schedule::{Game, HapAssignment, Timetable, Venue};

/// Rounds of unordered pairs `(a, b)` with `a < b`.
pub type PairRounds = Vec<Vec<(usize, usize)>>;

/// Single round robin on `n` teams by the circle method: team `n-1` stays
/// fixed, the others rotate.
pub fn circle_method(n: usize) -> Result<PairRounds> {
    if n == 0 || n % 2 != 0 {
        return Err(invalid(format!(
            "circle method needs a positive even n, got {n}"
        )));
    }
    let m = n - 1;
    let mut rounds = Vec::with_capacity(m);
    for k in 0..m {
        let mut round = vec![ordered(k, m)];
        for d in 1..n / 2 {
            round.push(ordered((k + d) % m, (k + m - d) % m));
        }
        round.sort_unstable();
        rounds.push(round);
    }
    Ok(rounds)
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// The first `r` rounds of a circle-method schedule after relabelling the
/// teams with a seeded random permutation.
pub fn shuffled_rounds(n: usize, r: usize, seed: u64) -> Result<PairRounds> {
    if n == 0 || n % 2 != 0 {
        return Err(invalid(format!(
            "team count must be positive and even, got {n}"
        )));
    }
    if r > n - 1 {
        return Err(invalid(format!(
            "{r} rounds exceed the {} of a round robin",
            n - 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(&mut rng);
    let base = circle_method(n)?;
    Ok(base
        .into_iter()
        .take(r)
        .map(|round| {
            let mut round: Vec<_> = round
                .into_iter()
                .map(|(a, b)| ordered(label[a], label[b]))
                .collect();
            round.sort_unstable();
            round
        })
        .collect())
}

/// Orients every consecutive pair of rounds so each team plays once at home
/// and once away within the pair.
///
/// The union of two edge-disjoint perfect matchings is a set of even cycles.
/// Each cycle is walked starting from its lowest team, which plays away in
/// the first round of the pair.
pub fn orient_pairwise(n: usize, rounds: &[Vec<(usize, usize)>]) -> Result<Timetable> {
    if rounds.len() % 2 != 0 {
        return Err(invalid(format!("odd round count {}", rounds.len())));
    }
    let mut out = Vec::with_capacity(rounds.len());
    for (p, pair) in rounds.chunks(2).enumerate() {
        let first = partner_map(n, &pair[0], 2 * p)?;
        let second = partner_map(n, &pair[1], 2 * p + 1)?;
        if let Some(t) = (0..n).find(|&t| first[t] == second[t]) {
            return Err(Error::Contract(format!(
                "rounds {} and {} both pair team {} with {}",
                2 * p + 1,
                2 * p + 2,
                t + 1,
                first[t] + 1
            )));
        }
        let mut games_a = Vec::with_capacity(n / 2);
        let mut games_b = Vec::with_capacity(n / 2);
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            // walk: start -(first, start away)-> u -(second, u away)-> ...
            let mut cur = start;
            loop {
                seen[cur] = true;
                let host = first[cur];
                games_a.push(Game::new(host, cur));
                seen[host] = true;
                let next = second[host];
                games_b.push(Game::new(next, host));
                cur = next;
                if cur == start {
                    break;
                }
            }
        }
        games_a.sort_unstable();
        games_b.sort_unstable();
        out.push(games_a);
        out.push(games_b);
    }
    Ok(Timetable::new(n, out))
}

fn partner_map(n: usize, round: &[(usize, usize)], s: usize) -> Result<Vec<usize>> {
    let mut partner = vec![usize::MAX; n];
    for &(a, b) in round {
        if a >= n || b >= n || a == b {
            return Err(Error::Structural(format!(
                "round {}: bad pair ({a}, {b})",
                s + 1
            )));
        }
        for (x, y) in [(a, b), (b, a)] {
            if partner[x] != usize::MAX {
                return Err(Error::Structural(format!(
                    "round {}: team {} paired twice",
                    s + 1,
                    x + 1
                )));
            }
            partner[x] = y;
        }
    }
    if let Some(t) = partner.iter().position(|&p| p == usize::MAX) {
        return Err(Error::Structural(format!(
            "round {}: team {} unpaired",
            s + 1,
            t + 1
        )));
    }
    Ok(partner)
}

/// Feasible timetable for any even `r <= n - 2` with `lambda >= 2`.
pub fn feasible_timetable(n: usize, r: usize, seed: u64) -> Result<Timetable> {
    orient_pairwise(n, &shuffled_rounds(n, r, seed)?)
}

/// `HAHA...` for teams `1..n/2`, `AHAH...` for the rest.
pub fn zero_break_haps(n: usize, r: usize) -> Result<HapAssignment> {
    check_half(n, r)?;
    let pattern: Vec<Venue> = (0..r)
        .map(|s| if s % 2 == 0 { Venue::Home } else { Venue::Away })
        .collect();
    Ok(split_assignment(n, &pattern))
}

/// Two complementary patterns with the fewest possible road trips:
/// blocks `H^l A^l` followed by `H^j A^j`, `j = (r/2) mod l`.
pub fn min_legs_haps(n: usize, r: usize, lambda: usize) -> Result<HapAssignment> {
    check_half(n, r)?;
    if lambda == 0 {
        return Err(invalid("lambda must be at least 1"));
    }
    Ok(split_assignment(n, &min_legs_pattern(r, lambda)))
}

pub(crate) fn min_legs_pattern(r: usize, lambda: usize) -> Vec<Venue> {
    let j = (r / 2) % lambda;
    let mut pattern = Vec::with_capacity(r);
    while pattern.len() < r - 2 * j {
        pattern.extend(std::iter::repeat(Venue::Home).take(lambda));
        pattern.extend(std::iter::repeat(Venue::Away).take(lambda));
    }
    pattern.extend(std::iter::repeat(Venue::Home).take(j));
    pattern.extend(std::iter::repeat(Venue::Away).take(j));
    pattern
}

/// First half of the teams gets `pattern`, second half its complement.
pub fn split_assignment(n: usize, pattern: &[Venue]) -> HapAssignment {
    let comp: Vec<Venue> = pattern.iter().map(|v| v.flip()).collect();
    let rows = (0..n)
        .map(|t| {
            if t < n / 2 {
                pattern.to_vec()
            } else {
                comp.clone()
            }
        })
        .collect();
    HapAssignment::from_rows(rows).expect("rows have equal length")
}

fn check_half(n: usize, r: usize) -> Result<()> {
    if n == 0 || n % 2 != 0 || r == 0 || r % 2 != 0 {
        return Err(invalid(format!(
            "n and r must be positive and even, got {n}, {r}"
        )));
    }
    if 2 * r > n {
        return Err(invalid(format!("r = {r} exceeds n/2 = {}", n / 2)));
    }
    Ok(())
}
