//! Turning an instance argument into an [`Instance`].
//!
//! Accepted forms, tried in order: a path to a `.ittp` file, a synthetic
//! family name such as `CON40`, or the stem of a file in the data directory
//! (`$ITTP_DATA_DIR`, then `./data`). Any form may carry a `-<r>` suffix,
//! e.g. `NL16-4`, which stands in for `--r`.

use std::env;
use std::path::{Path, PathBuf};

use ittp::{Error, Family, Instance, Result};

pub fn resolve(spec: &str, r: Option<usize>, lambda: usize) -> Result<Instance> {
    if Path::new(spec).is_file() {
        let r = r.ok_or_else(|| usage(format!("{spec}: --r is required for a file")))?;
        return Instance::load(spec, r, lambda);
    }
    let (base, r) = split_rounds(spec, r)?;
    if let Some((family, n)) = parse_family(base) {
        return Instance::generate(family, n, r, lambda);
    }
    match find_data_file(base) {
        Some(path) => Instance::load(path, r, lambda),
        None => Err(Error::Load {
            path: PathBuf::from(format!("{base}.ittp")),
            reason: "not a file, a family name, or a file in $ITTP_DATA_DIR or ./data".into(),
        }),
    }
}

fn usage(msg: String) -> Error {
    Error::InvalidParameters(msg)
}

fn split_rounds(spec: &str, r: Option<usize>) -> Result<(&str, usize)> {
    let suffix = spec
        .rsplit_once('-')
        .and_then(|(b, s)| s.parse::<usize>().ok().map(|s| (b, s)));
    match (suffix, r) {
        (Some((_, s)), Some(r)) if s != r => {
            Err(usage(format!("{spec} names {s} rounds but --r is {r}")))
        }
        (Some((base, s)), _) => Ok((base, s)),
        (None, Some(r)) => Ok((spec, r)),
        (None, None) => Err(usage(format!(
            "{spec}: give the round count with --r or a -<r> suffix"
        ))),
    }
}

fn parse_family(base: &str) -> Option<(Family, usize)> {
    let split = base.find(|c: char| c.is_ascii_digit())?;
    let (tag, digits) = base.split_at(split);
    let family = tag.parse().ok()?;
    Some((family, digits.parse().ok()?))
}

fn find_data_file(base: &str) -> Option<PathBuf> {
    let file = format!("{base}.ittp");
    let mut dirs = Vec::new();
    if let Some(dir) = env::var_os("ITTP_DATA_DIR") {
        dirs.push(PathBuf::from(dir));
    }
    dirs.push(PathBuf::from("data"));
    dirs.into_iter()
        .map(|d| d.join(&file))
        .find(|p| p.is_file())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_and_suffixes() {
        let inst = resolve("CON40-10", None, 3).unwrap();
        assert_eq!((inst.n(), inst.rounds(), inst.name()), (40, 10, "CON40-10"));
        let inst = resolve("circ8", Some(4), 2).unwrap();
        assert_eq!((inst.n(), inst.rounds(), inst.lambda()), (8, 4, 2));
        assert!(resolve("CON40-10", Some(20), 3).is_err());
        assert!(resolve("CON40", None, 3).is_err());
        assert!(matches!(
            resolve("NOSUCH16-4", None, 3),
            Err(Error::Load { .. })
        ));
    }
}
