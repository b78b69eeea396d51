//! Integer-program export in CPLEX LP text format.
//!
//! Teams and rounds are 0-based in variable names: `x_i_j_s` (i hosts j in
//! round s), `y_t_i_j` (t travels from i to j), `z_t_p` and `z_t_p_s` (team
//! t uses trip p of its catalog, started in round s), `x_t_i_s` for the
//! round of a meeting in the colouring-strengthened bound.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::schedule::{HapAssignment, Venue};
use crate::trips::{ordered_trip_count, TripCatalog};

/// Default cap on the number of trip-start variables.
pub const DEFAULT_F2_CAP: u128 = 5_000_000;

const TERMS_PER_LINE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Formulation {
    F1,
    F2,
    #[serde(rename = "F2_HAP")]
    F2Hap,
    #[serde(rename = "DLB")]
    Dlb,
    #[serde(rename = "DLB_1F")]
    Dlb1F,
    #[serde(rename = "DLB_MINLEG")]
    DlbMinLeg,
}

impl Formulation {
    pub fn tag(self) -> &'static str {
        match self {
            Formulation::F1 => "F1",
            Formulation::F2 => "F2",
            Formulation::F2Hap => "F2_HAP",
            Formulation::Dlb => "DLB",
            Formulation::Dlb1F => "DLB_1F",
            Formulation::DlbMinLeg => "DLB_MINLEG",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [
            Formulation::F1,
            Formulation::F2,
            Formulation::F2Hap,
            Formulation::Dlb,
            Formulation::Dlb1F,
            Formulation::DlbMinLeg,
        ]
        .into_iter()
        .find(|f| f.tag().eq_ignore_ascii_case(tag))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    /// `(coefficient, variable index)`, one entry per variable.
    pub terms: Vec<(i64, usize)>,
    pub sense: Sense,
    pub rhs: i64,
}

/// A pure 0/1 minimisation program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpModel {
    pub formulation: Formulation,
    pub instance: String,
    pub variables: Vec<String>,
    pub objective: Vec<(i64, usize)>,
    pub constraints: Vec<Constraint>,
}

impl LpModel {
    fn new(formulation: Formulation, instance: &str) -> Self {
        LpModel {
            formulation,
            instance: instance.to_string(),
            variables: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    fn var(&mut self, name: String) -> usize {
        self.variables.push(name);
        self.variables.len() - 1
    }

    /// Adds a constraint, merging repeated variables. Terms that cancel are
    /// dropped.
    fn add(&mut self, name: String, terms: Vec<(i64, usize)>, sense: Sense, rhs: i64) {
        let mut merged: Vec<(i64, usize)> = Vec::with_capacity(terms.len());
        let mut at: HashMap<usize, usize> = HashMap::new();
        for (c, v) in terms {
            match at.get(&v) {
                Some(&k) => merged[k].0 += c,
                None => {
                    at.insert(v, merged.len());
                    merged.push((c, v));
                }
            }
        }
        merged.retain(|&(c, _)| c != 0);
        self.constraints.push(Constraint {
            name,
            terms: merged,
            sense,
            rhs,
        });
    }

    pub fn file_name(&self) -> String {
        format!(
            "{}_{}.lp",
            self.instance,
            self.formulation.tag().to_ascii_lowercase()
        )
    }

    pub fn to_lp(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ formulation {}", self.formulation.tag());
        let _ = writeln!(out, "\\ instance {}", self.instance);
        let _ = writeln!(
            out,
            "\\ {} binaries, {} constraints",
            self.variables.len(),
            self.constraints.len()
        );
        out.push_str("Minimize\n obj:");
        if self.objective.is_empty() && !self.variables.is_empty() {
            let _ = write!(out, " 0 {}", self.variables[0]);
        }
        self.write_terms(&mut out, &self.objective, true);
        out.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(out, " {}:", c.name);
            if c.terms.is_empty() {
                let _ = write!(out, " 0 {}", self.variables[0]);
            }
            self.write_terms(&mut out, &c.terms, false);
            let _ = writeln!(out, " {} {}", c.sense.symbol(), c.rhs);
        }
        out.push_str("Binaries\n");
        for chunk in self.variables.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
        out.push_str("End\n");
        out
    }

    fn write_terms(&self, out: &mut String, terms: &[(i64, usize)], keep_zero: bool) {
        for (k, &(c, v)) in terms.iter().enumerate() {
            if k > 0 && k % TERMS_PER_LINE == 0 {
                out.push_str("\n   ");
            }
            let name = &self.variables[v];
            let sign = if c < 0 { "-" } else { "+" };
            let abs = c.unsigned_abs();
            if k == 0 && c >= 0 {
                if abs == 1 {
                    let _ = write!(out, " {name}");
                } else {
                    let _ = write!(out, " {abs} {name}");
                }
            } else if abs == 1 {
                let _ = write!(out, " {sign} {name}");
            } else if abs == 0 && keep_zero {
                let _ = write!(out, " + 0 {name}");
            } else {
                let _ = write!(out, " {sign} {abs} {name}");
            }
        }
    }

    /// Writes `<instance>_<formulation>.lp` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.file_name());
        std::fs::write(&path, self.to_lp())?;
        Ok(path)
    }

    pub fn summary(&self, path: Option<&Path>) -> ModelFile {
        ModelFile {
            formulation: self.formulation,
            instance: self.instance.clone(),
            variables: self.variables.len(),
            constraints: self.constraints.len(),
            path: path.map(|p| p.display().to_string()),
        }
    }
}

/// Report of one export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelFile {
    pub formulation: Formulation,
    pub instance: String,
    pub variables: usize,
    pub constraints: usize,
    pub path: Option<String>,
}

/// Reads back a model written by [`LpModel::to_lp`]. Only the subset of the
/// format used here is understood.
pub fn parse_lp(text: &str) -> Result<LpModel> {
    #[derive(PartialEq)]
    enum Section {
        Head,
        Objective,
        Constraints,
        Binaries,
        Done,
    }
    let bad = |msg: String| Error::Parse(format!("LP file: {msg}"));
    let mut formulation = None;
    let mut instance = String::new();
    let mut section = Section::Head;
    let mut obj_tokens: Vec<String> = Vec::new();
    let mut con_tokens: Vec<String> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('\\') {
            let comment = comment.trim();
            if let Some(tag) = comment.strip_prefix("formulation ") {
                formulation = Formulation::from_tag(tag.trim());
            } else if let Some(name) = comment.strip_prefix("instance ") {
                instance = name.trim().to_string();
            }
            continue;
        }
        match trimmed.to_ascii_lowercase().as_str() {
            "minimize" | "minimise" | "min" => {
                section = Section::Objective;
                continue;
            }
            "subject to" | "st" | "s.t." => {
                section = Section::Constraints;
                continue;
            }
            "binaries" | "binary" | "bin" => {
                section = Section::Binaries;
                continue;
            }
            "end" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        let tokens = trimmed.split_whitespace().map(str::to_string);
        match section {
            Section::Objective => obj_tokens.extend(tokens),
            Section::Constraints => con_tokens.extend(tokens),
            Section::Binaries => binaries.extend(tokens),
            Section::Head if trimmed.is_empty() => {}
            Section::Head | Section::Done => {
                if !trimmed.is_empty() {
                    return Err(bad(format!("unexpected line {trimmed:?}")));
                }
            }
        }
    }
    if section != Section::Done {
        return Err(bad("missing End".into()));
    }
    let formulation = formulation.ok_or_else(|| bad("missing formulation comment".into()))?;
    let index: HashMap<&str, usize> = binaries
        .iter()
        .enumerate()
        .map(|(k, v)| (v.as_str(), k))
        .collect();
    if index.len() != binaries.len() {
        return Err(bad("duplicate binary declaration".into()));
    }

    let parse_terms = |tokens: &[String]| -> Result<Vec<(i64, usize)>> {
        let mut terms = Vec::new();
        let mut sign = 1;
        let mut coef: Option<i64> = None;
        for tok in tokens {
            match tok.as_str() {
                "+" => sign = 1,
                "-" => sign = -1,
                t => {
                    if let Ok(c) = t.parse::<i64>() {
                        coef = Some(c);
                    } else {
                        let v = *index
                            .get(t)
                            .ok_or_else(|| bad(format!("undeclared variable {t}")))?;
                        terms.push((sign * coef.unwrap_or(1), v));
                        sign = 1;
                        coef = None;
                    }
                }
            }
        }
        Ok(terms)
    };

    let mut model = LpModel::new(formulation, &instance);
    model.variables = binaries.clone();
    let obj = match obj_tokens.first() {
        Some(t) if t.ends_with(':') => &obj_tokens[1..],
        _ => &obj_tokens[..],
    };
    // the objective keeps explicit zero terms; drop them like constraints do
    model.objective = parse_terms(obj)?;

    let mut k = 0;
    while k < con_tokens.len() {
        let name = con_tokens[k]
            .strip_suffix(':')
            .ok_or_else(|| bad(format!("expected constraint name, got {}", con_tokens[k])))?
            .to_string();
        k += 1;
        let start = k;
        while k < con_tokens.len() && !matches!(con_tokens[k].as_str(), "<=" | ">=" | "=") {
            k += 1;
        }
        if k + 1 >= con_tokens.len() {
            return Err(bad(format!("constraint {name} has no right-hand side")));
        }
        let sense = match con_tokens[k].as_str() {
            "<=" => Sense::Le,
            ">=" => Sense::Ge,
            _ => Sense::Eq,
        };
        let rhs = con_tokens[k + 1]
            .parse::<i64>()
            .map_err(|_| bad(format!("bad right-hand side in {name}")))?;
        let terms = parse_terms(&con_tokens[start..k])?;
        model.add(name, terms, sense, rhs);
        k += 2;
    }
    Ok(model)
}

/// Compact model.
pub fn export_f1(instance: &Instance, include_minlegs_cut: bool) -> Result<LpModel> {
    let n = instance.n();
    let r = instance.rounds();
    let lambda = instance.lambda();
    let mut model = LpModel::new(Formulation::F1, instance.name());
    let mut x = vec![usize::MAX; n * n * r];
    let xi = |i: usize, j: usize, s: usize| (i * n + j) * r + s;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                for s in 0..r {
                    x[xi(i, j, s)] = model.var(format!("x_{i}_{j}_{s}"));
                }
            }
        }
    }
    let mut y = vec![0; n * n * n];
    for t in 0..n {
        for i in 0..n {
            for j in 0..n {
                y[(t * n + i) * n + j] = model.var(format!("y_{t}_{i}_{j}"));
            }
        }
    }
    let y_at = |t: usize, i: usize, j: usize| y[(t * n + i) * n + j];
    for t in 0..n {
        for i in 0..n {
            for j in 0..n {
                model.objective.push((instance.d(i, j), y_at(t, i, j)));
            }
        }
    }
    let x_at = |i: usize, j: usize, s: usize| x[xi(i, j, s)];

    for i in 0..n {
        for j in i + 1..n {
            let terms = (0..r)
                .flat_map(|s| [(1, x_at(i, j, s)), (1, x_at(j, i, s))])
                .collect();
            model.add(format!("meet_{i}_{j}"), terms, Sense::Le, 1);
        }
    }
    for i in 0..n {
        for s in 0..r {
            let terms = (0..n)
                .filter(|&j| j != i)
                .flat_map(|j| [(1, x_at(i, j, s)), (1, x_at(j, i, s))])
                .collect();
            model.add(format!("play_{i}_{s}"), terms, Sense::Eq, 1);
        }
    }
    for i in 0..n {
        let terms = (0..n)
            .filter(|&j| j != i)
            .flat_map(|j| (0..r).map(move |s| (j, s)))
            .map(|(j, s)| (1, x_at(i, j, s)))
            .collect();
        model.add(
            format!("home_{i}"),
            terms,
            Sense::Eq,
            instance.half() as i64,
        );
    }
    // away at i then away at j
    for t in 0..n {
        for i in (0..n).filter(|&i| i != t) {
            for j in (0..n).filter(|&j| j != t) {
                for s in 1..r {
                    model.add(
                        format!("leg_{t}_{i}_{j}_{s}"),
                        vec![
                            (1, x_at(i, t, s - 1)),
                            (1, x_at(j, t, s)),
                            (-1, y_at(t, i, j)),
                        ],
                        Sense::Le,
                        1,
                    );
                }
            }
        }
    }
    // away at i then home
    for i in 0..n {
        for t in (0..n).filter(|&t| t != i) {
            for s in 1..r {
                let mut terms = vec![(1, x_at(i, t, s - 1))];
                terms.extend(
                    (0..n)
                        .filter(|&j| j != i && j != t)
                        .map(|j| (1, x_at(t, j, s))),
                );
                terms.push((-1, y_at(t, i, t)));
                model.add(format!("back_{t}_{i}_{s}"), terms, Sense::Le, 1);
            }
        }
    }
    // home then away at i
    for i in 0..n {
        for t in (0..n).filter(|&t| t != i) {
            for s in 1..r {
                let mut terms: Vec<(i64, usize)> = (0..n)
                    .filter(|&j| j != i && j != t)
                    .map(|j| (1, x_at(t, j, s - 1)))
                    .collect();
                terms.push((1, x_at(i, t, s)));
                terms.push((-1, y_at(t, t, i)));
                model.add(format!("out_{t}_{i}_{s}"), terms, Sense::Le, 1);
            }
        }
    }
    for i in 0..n {
        for t in (0..n).filter(|&t| t != i) {
            model.add(
                format!("first_{t}_{i}"),
                vec![(1, x_at(i, t, 0)), (-1, y_at(t, t, i))],
                Sense::Le,
                0,
            );
        }
    }
    for i in 0..n {
        for t in (0..n).filter(|&t| t != i) {
            model.add(
                format!("last_{t}_{i}"),
                vec![(1, x_at(i, t, r - 1)), (-1, y_at(t, i, t))],
                Sense::Le,
                0,
            );
        }
    }
    for (name, sense, rhs) in [
        ("awaymax", Sense::Le, lambda as i64),
        ("awaymin", Sense::Ge, 1),
    ] {
        for i in 0..n {
            for s in 0..r.saturating_sub(lambda) {
                let terms = (s..=s + lambda)
                    .flat_map(|f| (0..n).filter(move |&j| j != i).map(move |j| (j, f)))
                    .map(|(j, f)| (1, x_at(j, i, f)))
                    .collect();
                model.add(format!("{name}_{i}_{s}"), terms, sense, rhs);
            }
        }
    }
    if include_minlegs_cut {
        let legs = crate::bounds::min_legs_formula(n, r, lambda)?.value;
        let terms = y.iter().map(|&v| (1, v)).collect();
        model.add("minlegs".into(), terms, Sense::Ge, legs);
    }
    Ok(model)
}

fn check_catalog(instance: &Instance, catalog: &TripCatalog) -> Result<()> {
    if catalog.n() != instance.n() || catalog.lambda() != instance.lambda() {
        return Err(Error::Structural(
            "trip catalog does not match the instance".into(),
        ));
    }
    Ok(())
}

/// Number of trip-start variables of the road-trip model.
pub fn f2_variable_count(n: usize, r: usize, lambda: usize) -> u128 {
    let mut total = 0u128;
    let mut perms = 1u128;
    for f in 1..=lambda.min(n.saturating_sub(1)) {
        perms *= (n - f) as u128;
        if f <= r {
            total += perms * (r - f + 1) as u128;
        }
    }
    n as u128 * total
}

/// Road-trip model over the ordered catalog.
pub fn export_f2(instance: &Instance, catalog: &TripCatalog, cap: u128) -> Result<LpModel> {
    check_catalog(instance, catalog)?;
    let n = instance.n();
    let r = instance.rounds();
    let lambda = instance.lambda();
    let per_team = ordered_trip_count(n, lambda);
    if (0..n).any(|t| catalog.trips(t).len() as u128 != per_team) {
        return Err(Error::Contract(
            "the road-trip model needs the full ordered catalog".into(),
        ));
    }
    let required = f2_variable_count(n, r, lambda);
    if required > cap {
        return Err(Error::CapExceeded {
            what: "road-trip model variables".into(),
            required,
            cap,
        });
    }
    let mut model = LpModel::new(Formulation::F2, instance.name());
    // starts[t]: (trip index, start round, variable)
    let mut starts: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); n];
    for t in 0..n {
        for (p, trip) in catalog.trips(t).iter().enumerate() {
            if trip.len() > r {
                continue;
            }
            for q in 0..=r - trip.len() {
                let v = model.var(format!("z_{t}_{p}_{q}"));
                starts[t].push((p, q, v));
                model.objective.push((trip.cost, v));
            }
        }
    }
    let trip = |t: usize, p: usize| &catalog.trips(t)[p];
    let half = instance.half() as i64;

    for t in 0..n {
        let terms = starts[t]
            .iter()
            .map(|&(p, _, v)| (trip(t, p).len() as i64, v))
            .collect();
        model.add(format!("away_{t}"), terms, Sense::Eq, half);
    }
    for t in 0..n {
        for i in t + 1..n {
            let mut terms: Vec<(i64, usize)> = starts[t]
                .iter()
                .filter(|&&(p, _, _)| trip(t, p).visits(i))
                .map(|&(_, _, v)| (1, v))
                .collect();
            terms.extend(
                starts[i]
                    .iter()
                    .filter(|&&(p, _, _)| trip(i, p).visits(t))
                    .map(|&(_, _, v)| (1, v)),
            );
            model.add(format!("meet_{t}_{i}"), terms, Sense::Le, 1);
        }
    }
    let active = |t: usize, p: usize, q: usize, s: usize| q <= s && s < q + trip(t, p).len();
    // visits[(t, s)]: variables of trips that visit t in round s
    let mut visitors: Vec<Vec<usize>> = vec![Vec::new(); n * r];
    for (i, list) in starts.iter().enumerate() {
        for &(p, q, v) in list {
            for (l, &stop) in trip(i, p).stops.iter().enumerate() {
                visitors[stop * r + q + l].push(v);
            }
        }
    }
    for t in 0..n {
        for s in 1..r {
            let mut terms: Vec<(i64, usize)> = starts[t]
                .iter()
                .filter(|&&(p, q, _)| active(t, p, q, s - 1))
                .map(|&(_, _, v)| (1, v))
                .collect();
            terms.extend(
                starts[t]
                    .iter()
                    .filter(|&&(_, q, _)| q == s)
                    .map(|&(_, _, v)| (1, v)),
            );
            model.add(format!("start_{t}_{s}"), terms, Sense::Le, 1);
        }
    }
    for t in 0..n {
        for s in 0..r {
            let mut terms: Vec<(i64, usize)> = starts[t]
                .iter()
                .filter(|&&(p, q, _)| active(t, p, q, s))
                .map(|&(_, _, v)| (1, v))
                .collect();
            terms.extend(visitors[t * r + s].iter().map(|&v| (1, v)));
            model.add(format!("slot_{t}_{s}"), terms, Sense::Eq, 1);
        }
    }
    for t in 0..n {
        for s in 0..r.saturating_sub(lambda) {
            let terms = (s..=s + lambda)
                .flat_map(|f| visitors[t * r + f].iter().map(|&v| (1, v)))
                .collect();
            model.add(format!("homemax_{t}_{s}"), terms, Sense::Le, lambda as i64);
        }
    }
    Ok(model)
}

/// Road-trip model for fixed home-away patterns.
pub fn export_f2_hap(
    instance: &Instance,
    catalog: &TripCatalog,
    m: &HapAssignment,
) -> Result<LpModel> {
    check_catalog(instance, catalog)?;
    let n = instance.n();
    let r = instance.rounds();
    if m.n() != n || m.rounds() != r {
        return Err(Error::Structural(
            "patterns do not match the instance size".into(),
        ));
    }
    if !m.is_proper() || !m.is_balanced() || !m.is_lambda_feasible(instance.lambda()) {
        return Err(Error::Contract(
            "patterns must be proper, balanced and respect the run limit".into(),
        ));
    }
    let mut model = LpModel::new(Formulation::F2Hap, instance.name());
    // per team: (start round, variables with their trip)
    let mut starts: Vec<Vec<(usize, Vec<(usize, usize)>)>> = vec![Vec::new(); n];
    for t in 0..n {
        for q in m.trip_starts(t) {
            let len = m.away_run(t, q);
            let mut vars = Vec::new();
            for (p, trip) in catalog.trips(t).iter().enumerate() {
                let fits = trip.len() == len
                    && trip
                        .stops
                        .iter()
                        .enumerate()
                        .all(|(l, &u)| m.get(u, q + l) == Venue::Home);
                if fits {
                    let v = model.var(format!("z_{t}_{p}_{q}"));
                    model.objective.push((trip.cost, v));
                    vars.push((p, v));
                }
            }
            starts[t].push((q, vars));
        }
    }
    if model.variables.is_empty() {
        return Err(Error::Contract("patterns admit no road trip at all".into()));
    }
    for (t, list) in starts.iter().enumerate() {
        for (q, vars) in list {
            let terms = vars.iter().map(|&(_, v)| (1, v)).collect();
            model.add(format!("trip_{t}_{q}"), terms, Sense::Eq, 1);
        }
    }
    let mut visitors: Vec<Vec<usize>> = vec![Vec::new(); n * r];
    for (u, list) in starts.iter().enumerate() {
        for (q, vars) in list {
            for &(p, v) in vars {
                for (l, &stop) in catalog.trips(u)[p].stops.iter().enumerate() {
                    visitors[stop * r + q + l].push(v);
                }
            }
        }
    }
    for t in 0..n {
        for s in 0..r {
            if m.get(t, s) == Venue::Home {
                let terms = visitors[t * r + s].iter().map(|&v| (1, v)).collect();
                model.add(format!("host_{t}_{s}"), terms, Sense::Eq, 1);
            }
        }
    }
    let visits = |t: usize, i: usize| -> Vec<(i64, usize)> {
        starts[t]
            .iter()
            .flat_map(|(_, vars)| vars.iter())
            .filter(|&&(p, _)| catalog.trips(t)[p].visits(i))
            .map(|&(_, v)| (1, v))
            .collect()
    };
    for t in 0..n {
        for i in t + 1..n {
            let mut terms = visits(t, i);
            terms.extend(visits(i, t));
            model.add(format!("meet_{t}_{i}"), terms, Sense::Le, 1);
        }
    }
    Ok(model)
}

/// Trip-selection programs behind the dependent bounds, over the catalog as
/// given.
pub fn export_dlb(
    instance: &Instance,
    catalog: &TripCatalog,
    variant: Formulation,
) -> Result<LpModel> {
    check_catalog(instance, catalog)?;
    if !matches!(
        variant,
        Formulation::Dlb | Formulation::Dlb1F | Formulation::DlbMinLeg
    ) {
        return Err(crate::error::invalid(format!(
            "{} is not a dependent-bound variant",
            variant.tag()
        )));
    }
    let n = instance.n();
    let r = instance.rounds();
    let half = instance.half() as i64;
    let mut model = LpModel::new(variant, instance.name());
    let mut z: Vec<Vec<usize>> = Vec::with_capacity(n);
    for t in 0..n {
        let mut row = Vec::new();
        for (p, trip) in catalog.trips(t).iter().enumerate() {
            let v = model.var(format!("z_{t}_{p}"));
            model.objective.push((trip.cost, v));
            row.push(v);
        }
        z.push(row);
    }
    let visits = |t: usize, i: usize| -> Vec<(i64, usize)> {
        catalog
            .trips(t)
            .iter()
            .zip(&z[t])
            .filter(|(trip, _)| trip.visits(i))
            .map(|(_, &v)| (1, v))
            .collect()
    };
    for t in 0..n {
        let terms = catalog
            .trips(t)
            .iter()
            .zip(&z[t])
            .map(|(trip, &v)| (trip.len() as i64, v))
            .collect();
        model.add(format!("away_{t}"), terms, Sense::Eq, half);
    }
    for t in 0..n {
        let terms = (0..n)
            .filter(|&i| i != t)
            .flat_map(|i| visits(i, t))
            .collect();
        model.add(format!("visited_{t}"), terms, Sense::Eq, half);
    }
    for t in 0..n {
        for i in t + 1..n {
            let mut terms = visits(t, i);
            terms.extend(visits(i, t));
            model.add(format!("meet_{t}_{i}"), terms, Sense::Le, 1);
        }
    }
    match variant {
        Formulation::Dlb1F => {
            let mut x = vec![usize::MAX; n * n * r];
            for t in 0..n {
                for i in (0..n).filter(|&i| i != t) {
                    for s in 0..r {
                        x[(t * n + i) * r + s] = model.var(format!("x_{t}_{i}_{s}"));
                    }
                }
            }
            let x_at = |t: usize, i: usize, s: usize| x[(t * n + i) * r + s];
            for t in 0..n {
                for i in (0..n).filter(|&i| i != t) {
                    let mut terms = visits(t, i);
                    terms.extend(visits(i, t));
                    terms.extend((0..r).map(|s| (-1, x_at(t, i, s))));
                    model.add(format!("round_{t}_{i}"), terms, Sense::Eq, 0);
                }
            }
            for t in 0..n {
                for s in 0..r {
                    let terms = (0..n)
                        .filter(|&i| i != t)
                        .map(|i| (1, x_at(t, i, s)))
                        .collect();
                    model.add(format!("oneround_{t}_{s}"), terms, Sense::Eq, 1);
                }
            }
            for t in 0..n {
                for i in t + 1..n {
                    for s in 0..r {
                        model.add(
                            format!("sym_{t}_{i}_{s}"),
                            vec![(1, x_at(i, t, s)), (-1, x_at(t, i, s))],
                            Sense::Eq,
                            0,
                        );
                    }
                }
            }
        }
        Formulation::DlbMinLeg => {
            let v_nr = n * r.div_ceil(2 * instance.lambda());
            let terms = z.iter().flatten().map(|&v| (1, v)).collect();
            model.add("mintrips".into(), terms, Sense::Ge, v_nr as i64);
        }
        _ => {}
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Family;
    use crate::trips::{enumerate, prune_dominated};

    #[test]
    fn f1_counts() {
        let inst = Instance::generate(Family::Circ, 4, 2, 1).unwrap();
        let m = export_f1(&inst, false).unwrap();
        let xs = m.variables.iter().filter(|v| v.starts_with("x_")).count();
        let ys = m.variables.iter().filter(|v| v.starts_with("y_")).count();
        assert_eq!((xs, ys), (24, 64));
        let con = Instance::generate(Family::Con, 40, 10, 3).unwrap();
        let with = export_f1(&con, true).unwrap();
        let without = export_f1(&con, false).unwrap();
        assert_eq!(with.constraints.len(), without.constraints.len() + 1);
        let cut = with.constraints.last().unwrap();
        assert_eq!(
            (cut.name.as_str(), cut.sense, cut.rhs),
            ("minlegs", Sense::Ge, 280)
        );
    }

    #[test]
    fn f2_counts_and_cap() {
        let inst = Instance::generate(Family::Circ, 4, 2, 1).unwrap();
        let cat = enumerate(&inst).unwrap();
        let m = export_f2(&inst, &cat, DEFAULT_F2_CAP).unwrap();
        // three one-stop trips per team, each startable in both rounds
        assert_eq!(m.variables.len(), 24);
        assert_eq!(f2_variable_count(4, 2, 1), 24);
        let inst = Instance::generate(Family::Circ, 16, 8, 3).unwrap();
        assert_eq!(
            f2_variable_count(16, 8, 3),
            16 * (15 * 8 + 210 * 7 + 2730 * 6)
        );
        let cat = enumerate(&inst).unwrap();
        assert!(matches!(
            export_f2(&inst, &cat, 1000),
            Err(Error::CapExceeded { required, .. }) if required == f2_variable_count(16, 8, 3)
        ));
        let small = Instance::generate(Family::Circ, 6, 4, 2).unwrap();
        let pruned = prune_dominated(&enumerate(&small).unwrap());
        assert!(matches!(
            export_f2(&small, &pruned, DEFAULT_F2_CAP),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn f2_hap_counts() {
        let inst = Instance::generate(Family::Circ, 6, 2, 1).unwrap();
        let cat = enumerate(&inst).unwrap();
        let m = crate::construct::zero_break_haps(6, 2).unwrap();
        let model = export_f2_hap(&inst, &cat, &m).unwrap();
        // one start round per team, three opponents at home then
        assert_eq!(model.variables.len(), 18);
        let bad = HapAssignment::from_strs(&["HA", "HA", "HA", "AH", "AH", "HA"]).unwrap();
        assert!(matches!(
            export_f2_hap(&inst, &cat, &bad),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn dlb_variants() {
        let inst = Instance::generate(Family::Circ, 6, 4, 2).unwrap();
        let cat = prune_dominated(&enumerate(&inst).unwrap());
        let plain = export_dlb(&inst, &cat, Formulation::Dlb).unwrap();
        let one = export_dlb(&inst, &cat, Formulation::Dlb1F).unwrap();
        assert_eq!(plain.variables.len(), cat.total_len());
        assert_eq!(one.variables.len(), cat.total_len() + 6 * 5 * 4);
        let minleg = export_dlb(&inst, &cat, Formulation::DlbMinLeg).unwrap();
        assert_eq!(minleg.constraints.last().unwrap().rhs, 6);
        assert!(export_dlb(&inst, &cat, Formulation::F1).is_err());

        let zero = Instance::new("zero", vec![vec![0; 4]; 4], 2, 1).unwrap();
        let m = export_dlb(&zero, &enumerate(&zero).unwrap(), Formulation::Dlb).unwrap();
        assert!(m.objective.iter().all(|&(c, _)| c == 0));
    }

    #[test]
    fn lp_round_trip_and_stability() {
        let inst = Instance::generate(Family::Line, 8, 4, 2).unwrap();
        let cat = enumerate(&inst).unwrap();
        let haps = crate::construct::min_legs_haps(8, 4, 2).unwrap();
        let models = [
            export_f1(&inst, true).unwrap(),
            export_f2(&inst, &cat, DEFAULT_F2_CAP).unwrap(),
            export_f2_hap(&inst, &cat, &haps).unwrap(),
            export_dlb(&inst, &prune_dominated(&cat), Formulation::Dlb1F).unwrap(),
            export_dlb(&inst, &cat, Formulation::DlbMinLeg).unwrap(),
        ];
        for m in &models {
            let text = m.to_lp();
            let back = parse_lp(&text).unwrap();
            assert_eq!(back.variables.len(), m.variables.len());
            assert_eq!(back.constraints.len(), m.constraints.len());
            assert_eq!(back.constraints, m.constraints);
            assert_eq!(back.formulation, m.formulation);
            let nonzero: Vec<_> = m.objective.iter().filter(|t| t.0 != 0).copied().collect();
            let back_nonzero: Vec<_> = back
                .objective
                .iter()
                .filter(|t| t.0 != 0)
                .copied()
                .collect();
            assert_eq!(back_nonzero, nonzero);
            assert_eq!(back.to_lp(), text);
            assert!(text.lines().all(|l| l.len() < 255));
        }
        assert_eq!(export_f1(&inst, true).unwrap().to_lp(), models[0].to_lp());
        assert_eq!(models[2].file_name(), "LINE8-4_f2_hap.lp");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_lp("Minimize\n obj: x\nEnd\n").is_err());
        let text =
            "\\ formulation F1\nMinimize\n obj: x\nSubject To\n c: x <= 1\nBinaries\n y\nEnd\n";
        assert!(parse_lp(text).is_err());
        let text =
            "\\ formulation F1\nMinimize\n obj: x\nSubject To\n c: x <=\nBinaries\n x\nEnd\n";
        assert!(parse_lp(text).is_err());
    }
}
