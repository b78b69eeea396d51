//! Road-trip enumeration.
//!
//! A road trip of team `t` is an ordered list of `1..=lambda` distinct
//! opponents visited in consecutive rounds; its cost includes leaving home
//! and returning.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Default cap on the number of trips per team.
pub const DEFAULT_TRIP_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RoadTrip {
    pub team: usize,
    pub stops: Vec<usize>,
    pub cost: i64,
}

impl RoadTrip {
    pub fn new(instance: &Instance, team: usize, stops: Vec<usize>) -> Self {
        let cost = trip_cost(instance, team, &stops);
        RoadTrip { team, stops, cost }
    }

    pub fn len(&self) -> usize {
        self.stops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stops.is_empty()
    }

    pub fn visits(&self, team: usize) -> bool {
        self.stops.contains(&team)
    }

    /// Bitmask of the visited teams.
    pub fn mask(&self) -> u64 {
        self.stops.iter().fold(0, |m, &s| m | (1u64 << s))
    }

    /// Latest 1-based round in which the trip can start and still finish by
    /// round `rounds`.
    pub fn latest_start(&self, rounds: usize) -> usize {
        (rounds + 1).saturating_sub(self.len())
    }
}

pub fn trip_cost(instance: &Instance, team: usize, stops: &[usize]) -> i64 {
    let mut at = team;
    let mut cost = 0;
    for &s in stops {
        cost += instance.d(at, s);
        at = s;
    }
    cost + instance.d(at, team)
}

/// Per-team trip lists in canonical order: by length, then
/// lexicographically by stops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripCatalog {
    n: usize,
    lambda: usize,
    per_team: Vec<Vec<RoadTrip>>,
}

impl TripCatalog {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn trips(&self, team: usize) -> &[RoadTrip] {
        &self.per_team[team]
    }

    pub fn total_len(&self) -> usize {
        self.per_team.iter().map(|t| t.len()).sum()
    }
}

/// Number of ordered trips per team, `sum_{f=1..lambda} (n-1)!/(n-1-f)!`.
pub fn ordered_trip_count(n: usize, lambda: usize) -> u128 {
    let mut total = 0u128;
    let mut term = 1u128;
    for f in 0..lambda.min(n.saturating_sub(1)) {
        term *= (n - 1 - f) as u128;
        total += term;
    }
    total
}

/// Number of unordered trips per team, `sum_{f=1..lambda} C(n-1, f)`.
pub fn unordered_trip_count(n: usize, lambda: usize) -> u128 {
    (1..=lambda.min(n.saturating_sub(1)))
        .map(|f| binomial(n as u128 - 1, f as u128))
        .sum()
}

pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

pub fn enumerate(instance: &Instance) -> Result<TripCatalog> {
    enumerate_with_cap(instance, DEFAULT_TRIP_CAP)
}

/// Enumerates every ordered trip of every team, refusing when a team would
/// have more than `cap` trips.
pub fn enumerate_with_cap(instance: &Instance, cap: u128) -> Result<TripCatalog> {
    let n = instance.n();
    let lambda = instance.lambda();
    let count = ordered_trip_count(n, lambda);
    if count > cap {
        return Err(Error::CapExceeded {
            what: "trip catalog (per team)".into(),
            required: count,
            cap,
        });
    }
    let per_team = (0..n)
        .map(|t| {
            let mut out = Vec::with_capacity(count as usize);
            let opponents: Vec<usize> = (0..n).filter(|&o| o != t).collect();
            for len in 1..=lambda.min(n - 1) {
                let mut used = vec![false; opponents.len()];
                let mut stops = Vec::with_capacity(len);
                extend(
                    instance, t, &opponents, len, &mut used, &mut stops, &mut out,
                );
            }
            out
        })
        .collect();
    Ok(TripCatalog {
        n,
        lambda,
        per_team,
    })
}

fn extend(
    instance: &Instance,
    team: usize,
    opponents: &[usize],
    len: usize,
    used: &mut [bool],
    stops: &mut Vec<usize>,
    out: &mut Vec<RoadTrip>,
) {
    if stops.len() == len {
        out.push(RoadTrip::new(instance, team, stops.clone()));
        return;
    }
    for k in 0..opponents.len() {
        if used[k] {
            continue;
        }
        used[k] = true;
        stops.push(opponents[k]);
        extend(instance, team, opponents, len, used, stops, out);
        stops.pop();
        used[k] = false;
    }
}

/// Keeps one cheapest ordering per unordered stop set. Ties go to the
/// lexicographically smallest ordering. Only valid where visit order does not
/// matter (bounds), not for round-indexed models.
pub fn prune_dominated(catalog: &TripCatalog) -> TripCatalog {
    let per_team = catalog
        .per_team
        .iter()
        .map(|trips| {
            let mut best: HashMap<u64, usize> = HashMap::new();
            for (k, trip) in trips.iter().enumerate() {
                best.entry(trip.mask())
                    .and_modify(|b| {
                        if trip.cost < trips[*b].cost {
                            *b = k;
                        }
                    })
                    .or_insert(k);
            }
            let mut keep: Vec<usize> = best.into_values().collect();
            keep.sort_unstable();
            keep.into_iter().map(|k| trips[k].clone()).collect()
        })
        .collect();
    TripCatalog {
        n: catalog.n,
        lambda: catalog.lambda,
        per_team,
    }
}
