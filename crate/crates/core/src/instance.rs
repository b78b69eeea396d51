//! Problem instances: team count, round count, the home/away run limit and
//! the travel distance matrix.
//!
//! Teams are 0-indexed in memory. Every textual format uses 1-indexed teams.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Synthetic distance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Teams on a circle, distance is the shorter arc length.
    Circ,
    /// Teams on a line at unit spacing.
    Line,
    /// All distances 1.
    Con,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::Circ => "CIRC",
            Family::Line => "LINE",
            Family::Con => "CON",
        }
    }

    /// Distance between 0-indexed teams `i` and `j` of an `n`-team instance.
    pub fn distance(self, n: usize, i: usize, j: usize) -> i64 {
        if i == j {
            return 0;
        }
        let diff = i.abs_diff(j);
        match self {
            Family::Circ => diff.min(n - diff) as i64,
            Family::Line => diff as i64,
            Family::Con => 1,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CIRC" => Ok(Family::Circ),
            "LINE" => Ok(Family::Line),
            "CON" => Ok(Family::Con),
            other => Err(invalid(format!("unknown family {other:?}"))),
        }
    }
}

/// An immutable problem instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    name: String,
    n: usize,
    rounds: usize,
    lambda: usize,
    dist: Vec<i64>,
    symmetric: bool,
}

impl Instance {
    /// Builds an instance from a row-major `n x n` matrix.
    ///
    /// The diagonal must be zero and all entries non-negative.
    pub fn new(
        name: impl Into<String>,
        matrix: Vec<Vec<i64>>,
        rounds: usize,
        lambda: usize,
    ) -> Result<Self> {
        let n = matrix.len();
        check_parameters(n, rounds, lambda)?;
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(invalid(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, &d) in row.iter().enumerate() {
                if d < 0 {
                    return Err(invalid(format!(
                        "negative distance {d} at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                if i == j && d != 0 {
                    return Err(invalid(format!("nonzero diagonal at team {}", i + 1)));
                }
            }
            dist.extend_from_slice(row);
        }
        let symmetric = (0..n).all(|i| (0..i).all(|j| dist[i * n + j] == dist[j * n + i]));
        Ok(Instance {
            name: name.into(),
            n,
            rounds,
            lambda,
            dist,
            symmetric,
        })
    }

    /// Generates a synthetic instance named `<FAMILY><n>-<r>`.
    pub fn generate(family: Family, n: usize, rounds: usize, lambda: usize) -> Result<Self> {
        check_parameters(n, rounds, lambda)?;
        Instance::new(
            format!("{}{}-{}", family.tag(), n, rounds),
            family_matrix(family, n),
            rounds,
            lambda,
        )
    }

    /// Reads a native `.ittp` matrix file. The instance is named after the
    /// file stem with `-<r>` appended.
    pub fn load(path: impl AsRef<Path>, rounds: usize, lambda: usize) -> Result<Self> {
        let path = path.as_ref();
        let load_err = |reason: String| Error::Load {
            path: path.to_path_buf(),
            reason,
        };
        let text = fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        let mut matrix = parse_matrix(&text).map_err(|e| load_err(e.to_string()))?;
        let n = matrix.len();
        if n % 2 != 0 {
            return Err(load_err(format!("odd team count {n}")));
        }
        check_parameters(n, rounds, lambda).map_err(|e| load_err(e.to_string()))?;
        for (i, row) in matrix.iter_mut().enumerate() {
            if row[i] != 0 {
                log::warn!(
                    "{}: diagonal entry of team {} is {}, forcing 0",
                    path.display(),
                    i + 1,
                    row[i]
                );
                row[i] = 0;
            }
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "instance".to_string());
        let inst = Instance::new(format!("{stem}-{rounds}"), matrix, rounds, lambda)
            .map_err(|e| load_err(e.to_string()))?;
        if !inst.symmetric {
            log::info!("{}: distance matrix is asymmetric", path.display());
        }
        Ok(inst)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    /// Away (and home) games per team.
    pub fn half(&self) -> usize {
        self.rounds / 2
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    #[inline]
    pub fn d(&self, from: usize, to: usize) -> i64 {
        self.dist[from * self.n + to]
    }

    pub fn matrix(&self) -> Vec<Vec<i64>> {
        self.dist.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// Same distances under another round count / run limit.
    pub fn with_rounds(&self, rounds: usize, lambda: usize) -> Result<Self> {
        check_parameters(self.n, rounds, lambda)?;
        let base = self
            .name
            .rsplit_once('-')
            .map(|(b, _)| b)
            .unwrap_or(&self.name);
        Ok(Instance {
            name: format!("{base}-{rounds}"),
            rounds,
            lambda,
            ..self.clone()
        })
    }

    /// Multiplies every distance by `k`.
    pub fn scaled(&self, k: i64) -> Result<Self> {
        if k < 0 {
            return Err(invalid("scale factor must be non-negative"));
        }
        Ok(Instance {
            dist: self.dist.iter().map(|d| d * k).collect(),
            ..self.clone()
        })
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Native file body for this instance's matrix.
    pub fn to_ittp(&self) -> String {
        write_matrix(&self.matrix())
    }
}

fn check_parameters(n: usize, rounds: usize, lambda: usize) -> Result<()> {
    if n == 0 || n % 2 != 0 {
        return Err(invalid(format!(
            "team count must be positive and even, got {n}"
        )));
    }
    if rounds == 0 || rounds % 2 != 0 {
        return Err(invalid(format!(
            "round count must be positive and even, got {rounds}"
        )));
    }
    if rounds + 2 > n {
        return Err(invalid(format!(
            "round count {rounds} exceeds n - 2 = {}",
            n as i64 - 2
        )));
    }
    if lambda == 0 {
        return Err(invalid("lambda must be at least 1"));
    }
    Ok(())
}

/// Distance matrix of a synthetic family.
pub fn family_matrix(family: Family, n: usize) -> Vec<Vec<i64>> {
    (0..n)
        .map(|i| (0..n).map(|j| family.distance(n, i, j)).collect())
        .collect()
}

/// Parses a whitespace-separated square integer matrix. Lines starting with
/// `#` are comments.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<i64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<i64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad integer {tok:?}", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse("empty matrix".into()));
    }
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Parse(format!(
            "matrix is not square: row {} has {} entries, {} rows",
            i + 1,
            row.len(),
            n
        )));
    }
    Ok(rows)
}

pub fn write_matrix(matrix: &[Vec<i64>]) -> String {
    let mut out = String::new();
    for row in matrix {
        let line: Vec<String> = row.iter().map(|d| d.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// The three round counts `n/4, n/2, 3n/4` used to derive instances from one
/// matrix.
pub fn derive_rounds(n: usize) -> Result<[usize; 3]> {
    if n == 0 || n % 4 != 0 {
        return Err(invalid(format!("team count {n} is not divisible by 4")));
    }
    Ok([n / 4, n / 2, 3 * n / 4])
}
