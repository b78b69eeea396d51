//! Acceptance criteria, one line each.
//!
//! Run with `cargo test -p ittp-core --test acceptance`. A criterion that
//! needs the NL16 distance matrix looks for `$ITTP_DATA_DIR/NL16.ittp` and
//! then `<workspace>/data/NL16.ittp`; when neither exists it is reported as
//! FAIL (data unavailable) and does not abort the run. Any other failure
//! makes the process exit nonzero.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use ittp::bounds::{dlb, ilb, min_legs_formula, BoundStatus, DlbOptions};
use ittp::construct::{orient_pairwise, shuffled_rounds, split_assignment};
use ittp::exact::{solve_exact, ExactOptions};
use ittp::heuristic::{
    gm_constructive, gm_iterative, random_complementary_haps, thas_connect, GmOptions, SolveStatus,
    ThasMove,
};
use ittp::schedule::{extract_haps, travel};
use ittp::trips::enumerate;
use ittp::{validate, Family, HapAssignment, Instance, Venue};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{count_legs_and_trips, exhaustive_selection, random_instance};

enum Verdict {
    Pass(String),
    Fail(String),
    /// Required input data is not present in this environment.
    NoData(String),
    Info(String),
}

fn nl16_path() -> Option<PathBuf> {
    let mut candidates = Vec::new();
    if let Some(dir) = std::env::var_os("ITTP_DATA_DIR") {
        candidates.push(PathBuf::from(dir).join("NL16.ittp"));
    }
    candidates.push(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/NL16.ittp"));
    candidates.into_iter().find(|p| p.is_file())
}

fn check(ok: bool, msg: String) -> Verdict {
    if ok {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn ilb_exactness() -> Verdict {
    let Some(path) = nl16_path() else {
        return Verdict::NoData("NL16.ittp not found".into());
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for (r, want) in [(4, 15273), (8, 36130), (12, 55568)] {
        let inst = Instance::load(&path, r, 3).unwrap();
        let t = Instant::now();
        let got = enumerate(&inst)
            .and_then(|c| ilb(&inst, &c))
            .map(|rep| rep.value);
        let secs = t.elapsed().as_secs_f64();
        ok &= got.as_ref().is_ok_and(|&v| v == want) && secs < 60.0;
        parts.push(format!("r={r}: {got:?} (want {want}) in {secs:.1}s"));
    }
    check(ok, parts.join(", "))
}

fn min_legs() -> Verdict {
    let a = min_legs_formula(40, 10, 3).unwrap().value;
    let b = min_legs_formula(40, 20, 3).unwrap().value;
    check(
        a == 280 && b == 560,
        format!("(40,10,3) = {a}, (40,20,3) = {b}"),
    )
}

/// Independent restarts in seed order until one reaches the lower bound.
fn best_over_seeds(
    inst: &Instance,
    seeds: u64,
    per_seed: GmOptions,
    budget: Duration,
) -> (i64, u64, f64) {
    let start = Instant::now();
    let mut best = (i64::MAX, 0);
    for seed in 0..seeds {
        let left = budget.saturating_sub(start.elapsed());
        if left.is_zero() {
            break;
        }
        let opts = GmOptions {
            time_limit: Some(per_seed.time_limit.map_or(left, |l| l.min(left))),
            ..per_seed.clone()
        };
        let rep = gm_iterative(inst, seed, &opts).unwrap();
        let v = rep.best_value.unwrap();
        assert!(validate(inst, rep.timetable.as_ref().unwrap())
            .unwrap()
            .is_empty());
        if v < best.0 {
            best = (v, seed);
        }
        if rep.status == SolveStatus::Optimal {
            break;
        }
    }
    (best.0, best.1, start.elapsed().as_secs_f64())
}

fn con_optimality() -> Verdict {
    let hour = Duration::from_secs(3600);
    let per_seed = GmOptions {
        time_limit: Some(Duration::from_secs(300)),
        max_iterations: Some(200_000),
        ..GmOptions::default()
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for (r, want) in [(10, 280), (20, 560)] {
        let inst = Instance::generate(Family::Con, 40, r, 3).unwrap();
        let (v, seed, secs) = best_over_seeds(&inst, 100, per_seed.clone(), hour);
        ok &= v == want && secs < 3600.0;
        parts.push(format!(
            "CON40-{r}: {v} (want {want}, seed {seed}) in {secs:.0}s"
        ));
    }
    check(ok, parts.join(", "))
}

fn con40_30_stretch() -> Verdict {
    let inst = Instance::generate(Family::Con, 40, 30, 3).unwrap();
    let per_seed = GmOptions {
        time_limit: Some(Duration::from_secs(60)),
        ..GmOptions::default()
    };
    let (v, seed, secs) = best_over_seeds(&inst, 2, per_seed, Duration::from_secs(120));
    Verdict::Info(format!(
        "CON40-30 best {v} (seed {seed}, {secs:.0}s; best known 812{})",
        if v <= 812 {
            ", reached"
        } else {
            ", not reached"
        }
    ))
}

fn greedy_blow_up() -> Verdict {
    let alpha = 1_000_000;
    let mut d = vec![vec![alpha; 6]; 6];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (a, b, w) in [
        (1, 4, 1),
        (2, 5, 1),
        (3, 6, 1),
        (1, 2, 2),
        (2, 3, 2),
        (1, 3, 2),
        (4, 5, 2),
        (5, 6, 2),
        (4, 6, 2),
    ] {
        d[a - 1][b - 1] = w;
        d[b - 1][a - 1] = w;
    }
    let inst = Instance::new("blowup", d, 2, 1).unwrap();
    let m = HapAssignment::from_strs(&["HA", "AH", "HA", "AH", "HA", "AH"]).unwrap();
    let greedy = gm_constructive(&inst, &m).unwrap().best_value.unwrap();
    let exact = solve_exact(&inst, &ExactOptions::default()).unwrap();
    let opt = exact.best_value.unwrap();
    let oracle = brute_two_rounds(&inst);
    let ratio = greedy as f64 / opt as f64;
    check(
        greedy >= 2 * alpha && opt == 20 && oracle == 20 && ratio >= 1e5,
        format!("greedy {greedy}, exact {opt}, oracle {oracle}, ratio {ratio:.2e}"),
    )
}

/// Every two-round timetable on six teams with lambda 1, by enumeration.
fn brute_two_rounds(inst: &Instance) -> i64 {
    let n = inst.n();
    let mut matchings = Vec::new();
    fn pairings(
        left: &mut Vec<usize>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if left.is_empty() {
            out.push(cur.clone());
            return;
        }
        let a = left.remove(0);
        for k in 0..left.len() {
            let b = left.remove(k);
            cur.push((a, b));
            pairings(left, cur, out);
            cur.pop();
            left.insert(k, b);
        }
        left.insert(0, a);
    }
    pairings(&mut (0..n).collect(), &mut Vec::new(), &mut matchings);
    let mut best = i64::MAX;
    for m1 in &matchings {
        for m2 in &matchings {
            if m1.iter().any(|p| m2.contains(p)) {
                continue;
            }
            for o1 in 0..1u32 << (n / 2) {
                for o2 in 0..1u32 << (n / 2) {
                    let orient = |m: &Vec<(usize, usize)>, o: u32| -> Vec<(usize, usize)> {
                        m.iter()
                            .enumerate()
                            .map(|(k, &(a, b))| if o >> k & 1 == 1 { (a, b) } else { (b, a) })
                            .collect()
                    };
                    let (g1, g2) = (orient(m1, o1), orient(m2, o2));
                    // lambda 1: each team home once and away once
                    let home1: Vec<usize> = g1.iter().map(|g| g.0).collect();
                    if g2.iter().any(|g| home1.contains(&g.0)) {
                        continue;
                    }
                    let mut cost = 0;
                    for t in 0..n {
                        let v1 = g1.iter().find(|g| g.0 == t || g.1 == t).unwrap().0;
                        let v2 = g2.iter().find(|g| g.0 == t || g.1 == t).unwrap().0;
                        cost += inst.d(t, v1) + inst.d(v1, v2) + inst.d(v2, t);
                    }
                    best = best.min(cost);
                }
            }
        }
    }
    best
}

fn feasibility_constructor() -> Verdict {
    let t = Instant::now();
    let mut cases = 0;
    let mut bad = Vec::new();
    for n in (4..=20).step_by(2) {
        for r in (2..=n - 2).step_by(2) {
            for lambda in [2, 3] {
                let inst = Instance::generate(Family::Circ, n, r, lambda).unwrap();
                let tt = orient_pairwise(n, &shuffled_rounds(n, r, (n * 100 + r) as u64).unwrap())
                    .unwrap();
                cases += 1;
                if !validate(&inst, &tt).unwrap().is_empty() {
                    bad.push(format!("n={n} r={r} l={lambda}"));
                }
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        bad.is_empty() && secs < 10.0,
        format!(
            "{cases} cases, {} with violations {bad:?}, {secs:.2}s",
            bad.len()
        ),
    )
}

fn hall_property() -> Verdict {
    let mut runs = 0;
    let mut premature = 0;
    for n in (4..=12).step_by(2) {
        for r in (2..=n / 2).step_by(2) {
            let zero: Vec<Venue> = (0..r)
                .map(|s| if s % 2 == 0 { Venue::Home } else { Venue::Away })
                .collect();
            for seed in 0..50 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let inst = random_instance(&mut rng, n, r, 3);
                let base = split_assignment(n, &zero);
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                let rows: Vec<Vec<Venue>> = perm.iter().map(|&p| base.row(p).to_vec()).collect();
                let m = HapAssignment::from_rows(rows).unwrap();
                let rep = gm_constructive(&inst, &m).unwrap();
                runs += 1;
                if rep.status == SolveStatus::Premature {
                    premature += 1;
                }
            }
        }
    }
    check(
        premature == 0,
        format!("{runs} runs, {premature} premature"),
    )
}

fn random_walk(m: &mut HapAssignment, steps: usize, rng: &mut impl Rng) {
    let (n, r) = (m.n(), m.rounds());
    let mut done = 0;
    while done < steps {
        let mv = ThasMove::new(
            rng.gen_range(0..n),
            rng.gen_range(0..n),
            rng.gen_range(0..r),
            rng.gen_range(0..r),
        );
        if mv.apply(m).is_ok() {
            done += 1;
        }
    }
}

fn thas_connectivity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    let mut total_moves = 0;
    for k in 0..200 {
        let n = 2 * rng.gen_range(2..=5);
        let r = 2 * rng.gen_range(1..=((n - 2).min(8) / 2));
        let mut m = random_complementary_haps(n, r, r, &mut rng).unwrap();
        let mut target = random_complementary_haps(n, r, r, &mut rng).unwrap();
        random_walk(&mut m, 20, &mut rng);
        random_walk(&mut target, 20, &mut rng);
        let moves = match thas_connect(&m, &target) {
            Ok(mv) => mv,
            Err(e) => {
                failures.push(format!("#{k}: {e}"));
                continue;
            }
        };
        total_moves += moves.len();
        let mut cur = m.clone();
        let mut ok = true;
        for mv in &moves {
            ok &= mv.apply(&mut cur).is_ok() && cur.is_proper() && cur.is_balanced();
        }
        if !ok || cur != target {
            failures.push(format!("#{k}: n={n} r={r} replay failed"));
        }
    }
    check(
        failures.is_empty(),
        format!("200 pairs, {total_moves} moves replayed, failures {failures:?}"),
    )
}

fn oracle_sandwich() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut cases = Vec::new();
    for k in 0..50 {
        cases.push(match k % 3 {
            0 => (4, 2, 1 + k % 2),
            1 => (6, 2, 1 + k % 2),
            _ => (6, 4, 2),
        });
    }
    let mut bad = Vec::new();
    for (k, &(n, r, lambda)) in cases.iter().enumerate() {
        let inst = random_instance(&mut rng, n, r, lambda);
        let cat = enumerate(&inst).unwrap();
        let lb_i = ilb(&inst, &cat).unwrap().value;
        let plain = dlb(&inst, &cat, &DlbOptions::default()).unwrap();
        let one_f = dlb(
            &inst,
            &cat,
            &DlbOptions {
                one_factor: true,
                ..DlbOptions::default()
            },
        )
        .unwrap();
        let exact = solve_exact(&inst, &ExactOptions::default())
            .unwrap()
            .best_value
            .unwrap();
        let gm_opts = GmOptions {
            max_iterations: Some(300),
            ..GmOptions::default()
        };
        let gm = (0..3)
            .map(|s| {
                gm_iterative(&inst, s, &gm_opts)
                    .unwrap()
                    .best_value
                    .unwrap()
            })
            .min()
            .unwrap();
        let oracle = exhaustive_selection(&inst);
        let certified =
            plain.status == BoundStatus::Optimal && one_f.status == BoundStatus::Optimal;
        let ok = certified
            && lb_i <= plain.value
            && plain.value <= one_f.value
            && one_f.value <= exact
            && exact <= gm
            && oracle.plain == Some(plain.value)
            && oracle.one_factor == Some(one_f.value);
        if !ok {
            bad.push(format!(
                "#{k} n={n} r={r} l={lambda}: {lb_i} {} {} {exact} {gm} oracle {:?}/{:?}",
                plain.value, one_f.value, oracle.plain, oracle.one_factor
            ));
        }
    }
    check(bad.is_empty(), format!("50 instances, failures {bad:?}"))
}

fn legs_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let families = [Family::Circ, Family::Line, Family::Con];
    let mut bad = 0;
    for k in 0..500 {
        let n = 2 * rng.gen_range(2..=10);
        let r = 2 * rng.gen_range(1..=(n - 2) / 2);
        let family = families[k % 3];
        let lambda = rng.gen_range(2..=4);
        let inst = Instance::generate(family, n, r, lambda).unwrap();
        let tt = if 2 * r <= n && k % 2 == 0 {
            let m = random_complementary_haps(n, r, lambda, &mut rng).unwrap();
            match gm_constructive(&inst, &m).unwrap().timetable {
                Some(tt) => tt,
                None => orient_pairwise(n, &shuffled_rounds(n, r, rng.gen()).unwrap()).unwrap(),
            }
        } else {
            orient_pairwise(n, &shuffled_rounds(n, r, rng.gen()).unwrap()).unwrap()
        };
        assert!(validate(&inst, &tt).unwrap().is_empty());
        let (legs, trips) = count_legs_and_trips(&tt);
        let rep = travel(&inst, &tt).unwrap();
        let haps = extract_haps(&tt).unwrap();
        let hap_trips: usize = (0..n).map(|t| haps.trip_count(t)).sum();
        if legs != n * r / 2 + trips
            || rep.total_legs != legs
            || rep.trip_count != trips
            || hap_trips != trips
        {
            bad += 1;
        }
    }
    check(bad == 0, format!("500 timetables, {bad} mismatches"))
}

fn nl16_dlb() -> Verdict {
    let Some(path) = nl16_path() else {
        return Verdict::NoData("NL16.ittp not found".into());
    };
    let inst = Instance::load(&path, 4, 3).unwrap();
    let cat = enumerate(&inst).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (one_factor, want) in [(false, 23625), (true, 24464)] {
        let rep = dlb(
            &inst,
            &cat,
            &DlbOptions {
                one_factor,
                time_limit: Some(Duration::from_secs(1800)),
                ..DlbOptions::default()
            },
        )
        .unwrap();
        ok &= rep.value == want || (rep.status == BoundStatus::BestFound && rep.value <= want);
        parts.push(format!(
            "{}: {} {:?} (want {want}) in {:.0}s",
            rep.method.name(),
            rep.value,
            rep.status,
            rep.runtime_s
        ));
    }
    check(ok, parts.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("1 ILB exactness on NL16", ilb_exactness),
        ("2 min-legs formula", min_legs),
        ("3 GM-it optimal on CON40-10/20", con_optimality),
        ("3 CON40-30 stretch (report only)", con40_30_stretch),
        ("4 greedy blow-up instance", greedy_blow_up),
        ("5 feasibility constructor", feasibility_constructor),
        ("6 Hall property of zero-break patterns", hall_property),
        ("7 2THAS connectivity", thas_connectivity),
        ("8 oracle sandwich", oracle_sandwich),
        ("9 legs identity", legs_identity),
        ("10 DLB and DLB-1F on NL16 (stretch)", nl16_dlb),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let verdict = f();
        let secs = t.elapsed().as_secs_f64();
        let (tag, msg) = match verdict {
            Verdict::Pass(m) => ("PASS", m),
            Verdict::Fail(m) => {
                failed += 1;
                ("FAIL", m)
            }
            Verdict::NoData(m) => ("FAIL (data unavailable)", m),
            Verdict::Info(m) => ("INFO", m),
        };
        println!("[{tag}] {name}: {msg} [{secs:.1}s]");
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
