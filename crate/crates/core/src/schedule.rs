//! Timetables, home-away assignments, constraint checking and travel
//! accounting.
//!
//! The constraints checked by [`validate`] are:
//!
//! * `C1` no more than `lambda` consecutive home or away games,
//! * `C2` every team plays exactly one game per round,
//! * `C3` every team plays `r/2` home and `r/2` away games,
//! * `C4` two teams meet at most once.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Venue {
    Home,
    Away,
}

impl Venue {
    pub fn flip(self) -> Venue {
        match self {
            Venue::Home => Venue::Away,
            Venue::Away => Venue::Home,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Venue::Home => 'H',
            Venue::Away => 'A',
        }
    }
}

/// Home/away status `m(t, s)` of every team in every round.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HapAssignment {
    n: usize,
    rounds: usize,
    cells: Vec<Venue>,
}

impl HapAssignment {
    pub fn from_rows(rows: Vec<Vec<Venue>>) -> Result<Self> {
        let n = rows.len();
        let rounds = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != rounds) {
            return Err(Error::Structural("HAP rows differ in length".into()));
        }
        Ok(HapAssignment {
            n,
            rounds,
            cells: rows.into_iter().flatten().collect(),
        })
    }

    /// Parses rows such as `"HAHA"`, one per team.
    pub fn from_strs<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let parsed = rows
            .iter()
            .map(|row| {
                row.as_ref()
                    .chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| match c.to_ascii_uppercase() {
                        'H' => Ok(Venue::Home),
                        'A' => Ok(Venue::Away),
                        other => Err(Error::Parse(format!("bad HAP symbol {other:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(parsed)
    }

    /// Every team gets `pattern`.
    pub fn filled(n: usize, pattern: &[Venue]) -> Self {
        HapAssignment {
            n,
            rounds: pattern.len(),
            cells: (0..n).flat_map(|_| pattern.iter().copied()).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    #[inline]
    pub fn get(&self, team: usize, round: usize) -> Venue {
        self.cells[team * self.rounds + round]
    }

    #[inline]
    pub fn set(&mut self, team: usize, round: usize, v: Venue) {
        self.cells[team * self.rounds + round] = v;
    }

    pub fn row(&self, team: usize) -> &[Venue] {
        &self.cells[team * self.rounds..(team + 1) * self.rounds]
    }

    pub fn set_row(&mut self, team: usize, pattern: &[Venue]) {
        assert_eq!(pattern.len(), self.rounds);
        self.cells[team * self.rounds..(team + 1) * self.rounds].copy_from_slice(pattern);
    }

    /// Teams playing at `venue` in `round`, ascending.
    pub fn teams_at(&self, round: usize, venue: Venue) -> Vec<usize> {
        (0..self.n)
            .filter(|&t| self.get(t, round) == venue)
            .collect()
    }

    /// Exactly `n/2` home teams in every round.
    pub fn is_proper(&self) -> bool {
        (0..self.rounds).all(|s| self.teams_at(s, Venue::Home).len() * 2 == self.n)
    }

    /// Exactly `r/2` home games for every team.
    pub fn is_balanced(&self) -> bool {
        (0..self.n)
            .all(|t| self.row(t).iter().filter(|&&v| v == Venue::Home).count() * 2 == self.rounds)
    }

    pub fn is_lambda_feasible(&self, lambda: usize) -> bool {
        (0..self.n).all(|t| longest_run(self.row(t)) <= lambda)
    }

    /// 0-indexed rounds in which `team` starts a road trip.
    pub fn trip_starts(&self, team: usize) -> Vec<usize> {
        let row = self.row(team);
        (0..self.rounds)
            .filter(|&s| row[s] == Venue::Away && (s == 0 || row[s - 1] == Venue::Home))
            .collect()
    }

    /// Length of the away run starting at `round`.
    pub fn away_run(&self, team: usize, round: usize) -> usize {
        self.row(team)[round..]
            .iter()
            .take_while(|&&v| v == Venue::Away)
            .count()
    }

    pub fn trip_count(&self, team: usize) -> usize {
        self.trip_starts(team).len()
    }

    pub fn breaks(&self, team: usize) -> usize {
        self.row(team).windows(2).filter(|w| w[0] == w[1]).count()
    }

    pub fn complement(&self) -> HapAssignment {
        HapAssignment {
            cells: self.cells.iter().map(|v| v.flip()).collect(),
            ..self.clone()
        }
    }

    pub fn row_string(&self, team: usize) -> String {
        self.row(team).iter().map(|v| v.symbol()).collect()
    }
}

impl fmt::Display for HapAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in 0..self.n {
            writeln!(f, "{}", self.row_string(t))?;
        }
        Ok(())
    }
}

/// Length of the longest run of equal entries.
pub fn longest_run(row: &[Venue]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for (k, v) in row.iter().enumerate() {
        run = if k > 0 && row[k - 1] == *v {
            run + 1
        } else {
            1
        };
        best = best.max(run);
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Game {
    pub home: usize,
    pub away: usize,
}

impl Game {
    pub fn new(home: usize, away: usize) -> Self {
        Game { home, away }
    }

    pub fn involves(&self, t: usize) -> bool {
        self.home == t || self.away == t
    }

    pub fn swapped(self) -> Game {
        Game {
            home: self.away,
            away: self.home,
        }
    }
}

/// Games of every round, each with an orientation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Timetable {
    n: usize,
    rounds: Vec<Vec<Game>>,
}

impl Timetable {
    pub fn new(n: usize, rounds: Vec<Vec<Game>>) -> Self {
        Timetable { n, rounds }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn round_count(&self) -> usize {
        self.rounds.len()
    }

    pub fn rounds(&self) -> &[Vec<Game>] {
        &self.rounds
    }

    pub fn round(&self, s: usize) -> &[Game] {
        &self.rounds[s]
    }

    /// Every game with its home and away side exchanged.
    pub fn swap_venues(&self) -> Timetable {
        Timetable {
            n: self.n,
            rounds: self
                .rounds
                .iter()
                .map(|r| r.iter().map(|g| g.swapped()).collect())
                .collect(),
        }
    }

    fn check_structure(&self) -> Result<()> {
        for (s, round) in self.rounds.iter().enumerate() {
            if round.len() * 2 != self.n {
                return Err(Error::Structural(format!(
                    "round {} has {} games, expected {}",
                    s + 1,
                    round.len(),
                    self.n / 2
                )));
            }
            for g in round {
                if g.home >= self.n || g.away >= self.n {
                    return Err(Error::Structural(format!(
                        "round {}: team id out of range in {}@{}",
                        s + 1,
                        g.home + 1,
                        g.away + 1
                    )));
                }
                if g.home == g.away {
                    return Err(Error::Structural(format!(
                        "round {}: team {} plays itself",
                        s + 1,
                        g.home + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// `opponents[s][t]`, requiring every team to play exactly once per round.
    pub fn opponents(&self) -> Result<Vec<Vec<usize>>> {
        self.check_structure()?;
        let mut opp = vec![vec![usize::MAX; self.n]; self.rounds.len()];
        for (s, round) in self.rounds.iter().enumerate() {
            for g in round {
                for (a, b) in [(g.home, g.away), (g.away, g.home)] {
                    if opp[s][a] != usize::MAX {
                        return Err(Error::Structural(format!(
                            "team {} plays twice in round {}",
                            a + 1,
                            s + 1
                        )));
                    }
                    opp[s][a] = b;
                }
            }
        }
        Ok(opp)
    }

    /// Writes the text form: one line per round, tokens `h@a`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for round in &self.rounds {
            let toks: Vec<String> = round
                .iter()
                .map(|g| format!("{}@{}", g.home + 1, g.away + 1))
                .collect();
            out.push_str(&toks.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(n: usize, text: &str) -> Result<Timetable> {
        let mut rounds = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut games = Vec::new();
            for tok in line.split_whitespace() {
                let bad = || Error::Parse(format!("line {}: bad game token {tok:?}", lineno + 1));
                let (h, a) = tok.split_once('@').ok_or_else(bad)?;
                let h: usize = h.parse().map_err(|_| bad())?;
                let a: usize = a.parse().map_err(|_| bad())?;
                if h == 0 || a == 0 {
                    return Err(bad());
                }
                games.push(Game::new(h - 1, a - 1));
            }
            rounds.push(games);
        }
        Ok(Timetable { n, rounds })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintId {
    C1,
    C2,
    C3,
    C4,
}

/// One violated constraint. Teams and rounds are 0-indexed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: ConstraintId,
    pub teams: Vec<usize>,
    pub rounds: Vec<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let teams: Vec<String> = self.teams.iter().map(|t| (t + 1).to_string()).collect();
        let rounds: Vec<String> = self.rounds.iter().map(|s| (s + 1).to_string()).collect();
        write!(
            f,
            "{:?} teams [{}] rounds [{}]: {}",
            self.constraint,
            teams.join(","),
            rounds.join(","),
            self.detail
        )
    }
}

/// Checks `timetable` against `C1`-`C4` and returns every violation found.
///
/// A timetable whose shape does not match the instance (round count, games
/// per round, team ids) is a structural error rather than a violation.
pub fn validate(instance: &Instance, timetable: &Timetable) -> Result<Vec<Violation>> {
    let n = instance.n();
    let r = instance.rounds();
    if timetable.n() != n {
        return Err(Error::Structural(format!(
            "timetable has {} teams, instance has {n}",
            timetable.n()
        )));
    }
    if timetable.round_count() != r {
        return Err(Error::Structural(format!(
            "timetable has {} rounds, instance has {r}",
            timetable.round_count()
        )));
    }
    timetable.check_structure()?;

    let mut out = Vec::new();
    // venue[t][s]: None when the team does not play exactly once.
    let mut venue: Vec<Vec<Option<Venue>>> = vec![vec![None; r]; n];
    for (s, round) in timetable.rounds().iter().enumerate() {
        let mut count = vec![0usize; n];
        for g in round {
            count[g.home] += 1;
            count[g.away] += 1;
            venue[g.home][s] = Some(Venue::Home);
            venue[g.away][s] = Some(Venue::Away);
        }
        for t in 0..n {
            if count[t] != 1 {
                venue[t][s] = None;
                out.push(Violation {
                    constraint: ConstraintId::C2,
                    teams: vec![t],
                    rounds: vec![s],
                    detail: format!("plays {} games", count[t]),
                });
            }
        }
    }

    let lambda = instance.lambda();
    for (t, row) in venue.iter().enumerate() {
        let mut run_start = 0;
        for s in 1..=r {
            let ends = s == r || row[s] != row[s - 1] || row[s].is_none();
            if ends {
                let len = s - run_start;
                if let Some(v) = row[s - 1] {
                    if len > lambda {
                        out.push(Violation {
                            constraint: ConstraintId::C1,
                            teams: vec![t],
                            rounds: (run_start..s).collect(),
                            detail: format!("{len} consecutive {} games", v.symbol()),
                        });
                    }
                }
                run_start = s;
            }
        }
        let homes = timetable
            .rounds()
            .iter()
            .flatten()
            .filter(|g| g.home == t)
            .count();
        let aways = timetable
            .rounds()
            .iter()
            .flatten()
            .filter(|g| g.away == t)
            .count();
        if homes * 2 != r || aways * 2 != r {
            out.push(Violation {
                constraint: ConstraintId::C3,
                teams: vec![t],
                rounds: vec![],
                detail: format!("{homes} home and {aways} away games"),
            });
        }
    }

    let mut met: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; n];
    for (s, round) in timetable.rounds().iter().enumerate() {
        for g in round {
            let (a, b) = (g.home.min(g.away), g.home.max(g.away));
            met[a][b].push(s);
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            if met[a][b].len() > 1 {
                out.push(Violation {
                    constraint: ConstraintId::C4,
                    teams: vec![a, b],
                    rounds: met[a][b].clone(),
                    detail: format!("meet {} times", met[a][b].len()),
                });
            }
        }
    }
    Ok(out)
}

/// Home/away status induced by the timetable.
pub fn extract_haps(timetable: &Timetable) -> Result<HapAssignment> {
    let opp = timetable.opponents()?;
    let n = timetable.n();
    let r = timetable.round_count();
    let mut rows = vec![vec![Venue::Home; r]; n];
    for (s, round) in timetable.rounds().iter().enumerate() {
        for g in round {
            rows[g.home][s] = Venue::Home;
            rows[g.away][s] = Venue::Away;
        }
        debug_assert!(opp[s].iter().all(|&o| o != usize::MAX));
    }
    HapAssignment::from_rows(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamTravel {
    pub distance: i64,
    pub legs: usize,
    pub trips: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TravelReport {
    pub total_distance: i64,
    /// Number of journeys between venues, `D(S)`.
    pub total_legs: usize,
    /// Number of road trips, `L(S)`.
    pub trip_count: usize,
    pub per_team: Vec<TeamTravel>,
}

/// Travel of a feasible timetable. Teams start and end at home and travel
/// directly between consecutive away venues.
pub fn travel(instance: &Instance, timetable: &Timetable) -> Result<TravelReport> {
    let violations = validate(instance, timetable)?;
    if let Some(v) = violations.first() {
        return Err(Error::Contract(format!(
            "travel needs a feasible timetable; {} violation(s), first: {v}",
            violations.len()
        )));
    }
    let opp = timetable.opponents()?;
    let haps = extract_haps(timetable)?;
    let n = instance.n();
    let r = instance.rounds();
    let mut per_team = Vec::with_capacity(n);
    for t in 0..n {
        let mut at = t;
        let mut distance = 0;
        let mut legs = 0;
        let mut trips = 0;
        for s in 0..=r {
            let next = if s == r {
                t
            } else if haps.get(t, s) == Venue::Away {
                opp[s][t]
            } else {
                t
            };
            if next != at {
                distance += instance.d(at, next);
                legs += 1;
                if at == t {
                    trips += 1;
                }
            }
            at = next;
        }
        per_team.push(TeamTravel {
            distance,
            legs,
            trips,
        });
    }
    let report = TravelReport {
        total_distance: per_team.iter().map(|p| p.distance).sum(),
        total_legs: per_team.iter().map(|p| p.legs).sum(),
        trip_count: per_team.iter().map(|p| p.trips).sum(),
        per_team,
    };
    debug_assert_eq!(report.total_legs, n * r / 2 + report.trip_count);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Family;

    /// Eight-team, six-round timetable in which no two teams have
    /// complementary patterns. Tokens are `home@away`.
    pub(crate) const NO_COMPLEMENT_TT: &str = "\
1@2 4@3 5@6 8@7
1@3 2@7 5@4 6@8
4@1 2@3 8@5 6@7
7@1 8@2 3@5 4@6
1@8 7@4 3@6 5@2
6@1 2@4 3@8 7@5
";

    pub(crate) const NO_COMPLEMENT_HAP: [&str; 8] = [
        "HHAAHA", "AHHAAH", "AAAHHH", "HAHHAA", "HHAAHA", "AHHAAH", "AAAHHH", "HAHHAA",
    ];

    #[test]
    fn no_complement_timetable_is_feasible_and_induces_its_haps() {
        let inst = Instance::generate(Family::Con, 8, 6, 3).unwrap();
        let tt = Timetable::parse(8, NO_COMPLEMENT_TT).unwrap();
        assert!(validate(&inst, &tt).unwrap().is_empty());
        let m = extract_haps(&tt).unwrap();
        assert_eq!(m, HapAssignment::from_strs(&NO_COMPLEMENT_HAP).unwrap());
        assert!(m.is_proper() && m.is_balanced() && m.is_lambda_feasible(3));
        let comp = m.complement();
        for a in 0..8 {
            for b in 0..8 {
                assert_ne!(m.row(a), comp.row(b));
            }
        }
    }

    #[test]
    fn repeated_pairing_is_c4() {
        let inst = Instance::generate(Family::Con, 4, 2, 3).unwrap();
        let tt = Timetable::parse(4, "1@2 3@4\n1@2 4@3\n").unwrap();
        let v = validate(&inst, &tt).unwrap();
        assert!(v
            .iter()
            .any(|v| v.constraint == ConstraintId::C4 && v.teams == vec![0, 1]));
    }

    #[test]
    fn double_home_with_lambda_one_is_c1() {
        let inst = Instance::generate(Family::Con, 6, 4, 1).unwrap();
        let tt =
            Timetable::parse(6, "1@2 3@4 5@6\n1@3 2@5 4@6\n4@1 5@3 6@2\n6@1 2@4 3@5\n").unwrap();
        let v = validate(&inst, &tt).unwrap();
        assert!(v
            .iter()
            .any(|v| v.constraint == ConstraintId::C1 && v.teams == vec![0]));
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let inst = Instance::generate(Family::Con, 4, 2, 3).unwrap();
        let tt = Timetable::parse(4, "1@2 3@4\n").unwrap();
        assert!(matches!(validate(&inst, &tt), Err(Error::Structural(_))));
        let tt = Timetable::parse(4, "1@2 3@4\n1@3\n").unwrap();
        assert!(matches!(validate(&inst, &tt), Err(Error::Structural(_))));
        let tt = Timetable::parse(4, "1@2 3@9\n1@3 2@4\n").unwrap();
        assert!(matches!(validate(&inst, &tt), Err(Error::Structural(_))));
    }

    #[test]
    fn double_booking_is_c2() {
        let inst = Instance::generate(Family::Con, 4, 2, 3).unwrap();
        let tt = Timetable::parse(4, "1@2 1@3\n3@1 4@2\n").unwrap();
        let v = validate(&inst, &tt).unwrap();
        assert!(v.iter().any(|v| v.constraint == ConstraintId::C2));
    }

    #[test]
    fn road_trip_distance() {
        // team 3 plays away at 4, 1, 2 in rounds 1-3 and is home afterwards
        let m: Vec<Vec<i64>> = (0..8)
            .map(|i| {
                (0..8)
                    .map(|j| if i == j { 0 } else { (i * 8 + j) as i64 })
                    .collect()
            })
            .collect();
        let inst = Instance::new("asym8", m, 6, 3).unwrap();
        let tt = Timetable::parse(8, NO_COMPLEMENT_TT).unwrap();
        let rep = travel(&inst, &tt).unwrap();
        let expected = inst.d(2, 3) + inst.d(3, 0) + inst.d(0, 1) + inst.d(1, 2);
        assert_eq!(
            rep.per_team[2],
            TeamTravel {
                distance: expected,
                legs: 4,
                trips: 1
            }
        );
    }

    #[test]
    fn travel_counts_legs_and_trips() {
        let m = crate::instance::family_matrix(Family::Line, 6);
        let inst = Instance::new("l6", m, 4, 2).unwrap();
        // team 1 away at 2 then at 3: trip 1->2->3->1
        let tt =
            Timetable::parse(6, "2@1 4@3 5@6\n3@1 2@5 6@4\n1@4 6@2 5@3\n1@5 4@2 3@6\n").unwrap();
        let rep = travel(&inst, &tt).unwrap();
        assert_eq!(
            rep.per_team[0],
            TeamTravel {
                distance: 1 + 1 + 2,
                legs: 3,
                trips: 1
            }
        );
        assert_eq!(rep.total_legs, 6 * 4 / 2 + rep.trip_count);
    }

    #[test]
    fn zero_and_unit_distances() {
        let tt = Timetable::parse(4, "1@2 3@4\n4@1 2@3\n").unwrap();
        let zero = Instance::new("z", vec![vec![0; 4]; 4], 2, 2).unwrap();
        let rep = travel(&zero, &tt).unwrap();
        assert_eq!(rep.total_distance, 0);
        assert_eq!(rep.total_legs, 4 + rep.trip_count);
        let con = Instance::generate(Family::Con, 4, 2, 2).unwrap();
        let rep = travel(&con, &tt).unwrap();
        assert_eq!(rep.total_distance as usize, rep.total_legs);
    }

    #[test]
    fn travel_rejects_infeasible() {
        let inst = Instance::generate(Family::Con, 4, 2, 3).unwrap();
        let tt = Timetable::parse(4, "1@2 3@4\n1@2 4@3\n").unwrap();
        assert!(matches!(travel(&inst, &tt), Err(Error::Contract(_))));
    }

    #[test]
    fn single_round_haps_and_swap_involution() {
        let tt = Timetable::parse(2, "1@2\n").unwrap();
        let m = extract_haps(&tt).unwrap();
        assert_eq!(m.get(0, 0), Venue::Home);
        assert_eq!(m.get(1, 0), Venue::Away);
        let tt = Timetable::parse(8, NO_COMPLEMENT_TT).unwrap();
        let m = extract_haps(&tt).unwrap();
        let flipped = extract_haps(&tt.swap_venues()).unwrap();
        assert_eq!(flipped, m.complement());
        assert_eq!(tt.swap_venues().swap_venues(), tt);
    }

    #[test]
    fn text_round_trip() {
        let tt = Timetable::parse(8, NO_COMPLEMENT_TT).unwrap();
        assert_eq!(tt.to_text(), NO_COMPLEMENT_TT);
        assert!(Timetable::parse(4, "1-2 3@4\n").is_err());
        assert!(Timetable::parse(4, "0@2 3@4\n").is_err());
    }

    #[test]
    fn hap_helpers() {
        let m = HapAssignment::from_strs(&["HHHAAAHHAA", "AAAHHHAAHH"]).unwrap();
        assert_eq!(m.trip_starts(0), vec![3, 8]);
        assert_eq!(m.trip_starts(1), vec![0, 6]);
        assert_eq!(m.away_run(1, 0), 3);
        assert_eq!(m.breaks(0), 6);
        assert_eq!(longest_run(m.row(0)), 3);
        assert!(m.is_proper() && m.is_balanced());
        assert!(!m.is_lambda_feasible(2));
    }
}
