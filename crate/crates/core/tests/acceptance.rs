//! End-to-end acceptance suite. Each check prints one PASS/FAIL line; the
//! test fails if any check fails.

mod common;

use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::{as_pairs, brute_pixels, naive_hull, points, random_env, random_map, random_state, random_vertices};
use perimeter_core::oracle::{enumerate_with, lambda_sweep_with, OracleOptions};
use perimeter_core::run::{self, load_scenario, RunConfig, ScenarioSource};
use perimeter_core::scenario::bundled;
use perimeter_core::{
    bundled_scenarios, convex_hull, enclosed_pixels, enumerate_optimal, q_update, Action, EnvConfig, GameState,
    QTable, Rational, Score,
};

type Outcome = Result<String, String>;

fn games() -> [Rational; 3] {
    [Ratio::from_integer(10), Ratio::from_integer(1), Ratio::new(1, 10)]
}

const SEEDS: u64 = 20;
const GAP: (i128, i128) = (98, 100);

fn oracle_equivalence() -> Outcome {
    let mut lines = Vec::new();
    let mut failed = false;
    for spec in bundled_scenarios() {
        let base = RunConfig::bundled(&spec.name);
        let scenario = load_scenario(&base.source, &base.palette).map_err(|e| e.to_string())?;
        if scenario.vertices.len() > 16 {
            return Err(format!("{} has {} vertices", spec.name, scenario.vertices.len()));
        }
        let started = Instant::now();
        let mut slowest = Duration::ZERO;
        for lambda in games() {
            let config = base.with_lambda(lambda);
            let env = scenario.env(lambda, None).map_err(|e| e.to_string())?;
            let best = enumerate_optimal(&env, 20).map_err(|e| e.to_string())?.best_value;
            let threshold = best * Score::new(GAP.0, GAP.1);
            let runs: Vec<(bool, Duration)> = (0..SEEDS)
                .into_par_iter()
                .map(|seed| {
                    let t = Instant::now();
                    let out = run::play(&RunConfig { seed, ..config.clone() }, &scenario).expect("run succeeds");
                    (out.document.value.score() >= threshold, t.elapsed())
                })
                .collect();
            let hits = runs.iter().filter(|r| r.0).count();
            slowest = slowest.max(runs.iter().map(|r| r.1).max().unwrap_or_default());
            // at least 90% of seeds
            let ok = hits * 10 >= SEEDS as usize * 9;
            failed |= !ok;
            lines.push(format!("{} λ={lambda}: {hits}/{SEEDS}", spec.name));
        }
        failed |= slowest >= Duration::from_secs(60);
        lines.push(format!(
            "{} slowest run {:.1}s, all seeds {:.1}s",
            spec.name,
            slowest.as_secs_f64(),
            started.elapsed().as_secs_f64()
        ));
    }
    let detail = lines.join("; ");
    if failed {
        Err(detail)
    } else {
        Ok(detail)
    }
}

fn exact_telescoping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e1e);
    let mut trajectories = 0;
    let mut steps = 0usize;
    while trajectories < 100_000 {
        let env = random_env(&mut rng);
        let n = env.num_vertices();
        for _ in 0..100 {
            let s0 = random_state(&mut rng, n);
            let mut s = s0.clone();
            let mut total = Score::from_integer(0);
            for _ in 0..rng.random_range(1..=2 * n) {
                let legal = env.legal_actions(&s);
                let a = legal[rng.random_range(0..legal.len())];
                let (next, r) = env.step_exact(&s, a).map_err(|e| e.to_string())?;
                total += r;
                s = next;
                steps += 1;
            }
            if total != env.value(&s) - env.value(&s0) {
                return Err(format!("trajectory from {s0} to {s}: rewards sum to {total}"));
            }
            trajectories += 1;
        }
    }
    Ok(format!("{trajectories} trajectories, {steps} steps, 0 failures"))
}

fn lambda_monotonicity() -> Outcome {
    let spec = bundled("fork").map_err(|e| e.to_string())?;
    let (core, fork) = (&spec.blobs[0], &spec.blobs[1]);
    let config = RunConfig::bundled("fork");
    let scenario = load_scenario(&config.source, &config.palette).map_err(|e| e.to_string())?;
    let env = scenario.env(Ratio::from_integer(1), None).map_err(|e| e.to_string())?;
    let rows = lambda_sweep_with(&env, &games(), &OracleOptions::default()).map_err(|e| e.to_string())?;
    let z: Vec<u64> = rows.iter().map(|r| r.result.best_sums.zeros).collect();
    let encloses = |i: usize| {
        let hull = env.hull(&rows[i].result.best_state);
        (
            hull.contains_pixel(core.x as i64, core.y as i64),
            hull.contains_pixel(fork.x as i64, fork.y as i64),
        )
    };
    let detail = format!(
        "Z(10)={} Z(1)={} Z(1/10)={}; λ=10 {} encloses (core, fork) {:?}; λ=1/10 {} encloses {:?}",
        z[0],
        z[1],
        z[2],
        rows[0].result.best_state,
        encloses(0),
        rows[2].result.best_state,
        encloses(2)
    );
    let ok = z[0] <= z[1] && z[1] <= z[2] && z[0] < z[2] && encloses(0) == (true, false) && encloses(2) == (true, true);
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn geometry_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e0);
    for i in 0..1000 {
        let n = rng.random_range(0..=12);
        let extent = rng.random_range(1..=64);
        let pts: Vec<(i64, i64)> = (0..n)
            .map(|_| (rng.random_range(0..=extent), rng.random_range(0..=extent)))
            .collect();
        let hull = convex_hull(points(&pts));
        let ok = match naive_hull(&pts) {
            None => hull.is_degenerate(),
            Some(expected) => as_pairs(hull.points()) == expected,
        };
        if !ok {
            return Err(format!("hull mismatch on set {i}: {pts:?}"));
        }
    }
    let mut pixels = 0;
    for i in 0..1000 {
        let w = rng.random_range(1..=64u32);
        let h = rng.random_range(1..=64u32);
        let n = rng.random_range(3..=12);
        let pts: Vec<(i64, i64)> = (0..n)
            .map(|_| (rng.random_range(0..=w as i64), rng.random_range(0..=h as i64)))
            .collect();
        let hull = convex_hull(points(&pts));
        let got = enclosed_pixels(&hull, w, h);
        if got != brute_pixels(&as_pairs(hull.points()), w, h) {
            return Err(format!("pixel mismatch on hull {i}: {:?} in {w}x{h}", hull.points()));
        }
        pixels += got.len();
    }
    Ok(format!("1000 hulls, 1000 rasterizations ({pixels} pixels), 0 mismatches"))
}

fn update(old: f64, alpha: f64, reward: f64, next_q: f64) -> f64 {
    let s = GameState::from_ids([1]);
    let next = GameState::from_ids([0, 1]);
    let mut table = QTable::new();
    table.set(&s, Action::add(0), old);
    table.set(&next, Action::remove(1), next_q);
    let legal = [Action::add(2), Action::remove(0), Action::remove(1)];
    q_update(&mut table, &s, Action::add(0), reward, &next, &legal, alpha);
    table.get(&s, Action::add(0))
}

fn q_update_arithmetic() -> Outcome {
    let hand = [
        (update(0.0, 0.5, 1.0, 0.0), 0.5),
        (update(7.25, 1.0, 1.5, 2.0), 3.5),
        (update(-3.0, 1.0, 1.5, 2.0), 3.5),
        (update(2.0, 0.25, 0.0, 4.0), 2.5),
    ];
    if let Some((got, want)) = hand.iter().find(|(g, w)| g != w) {
        return Err(format!("hand value {want} computed as {got}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x0e03);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let old = rng.random_range(-1e3..1e3);
        let reward = rng.random_range(-1e3..1e3);
        let next_q = rng.random_range(-1e3..1e3);
        let alpha = rng.random_range(f64::EPSILON..=1.0);
        let got = update(old, alpha, reward, next_q);
        // entries absent from the table read as 0
        let target = reward + next_q.max(0.0);
        let want = (1.0 - alpha) * old + alpha * target;
        let rel = (got - want).abs() / want.abs().max(old.abs()).max(target.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        if rel > 1e-12 {
            return Err(format!("Q'={got} expected {want} (old {old}, α {alpha}, r {reward}, maxQ' {next_q})"));
        }
    }
    Ok(format!("4 hand values exact; 10000 random updates, worst relative error {worst:.1e}"))
}

fn determinism() -> Outcome {
    let mut checked = 0;
    for name in ["core", "fork"] {
        let config = RunConfig {
            seed: 11,
            episodes: Some(300),
            ..RunConfig::bundled(name)
        };
        let scenario = load_scenario(&config.source, &config.palette).map_err(|e| e.to_string())?;
        for lambda in games() {
            let config = config.with_lambda(lambda);
            let a = run::play(&config, &scenario).map_err(|e| e.to_string())?;
            let b = run::play(&config, &scenario).map_err(|e| e.to_string())?;
            if a.document.to_json() != b.document.to_json()
                || a.log.to_csv() != b.log.to_csv()
                || a.overlay_ppm != b.overlay_ppm
            {
                return Err(format!("{name} λ={lambda}: repeated runs differ"));
            }
            let env = scenario.env(lambda, None).map_err(|e| e.to_string())?;
            let serial = OracleOptions {
                parallel: false,
                ..OracleOptions::default()
            };
            let one = enumerate_with(&env, &serial).map_err(|e| e.to_string())?;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().map_err(|e| e.to_string())?;
            let many = pool
                .install(|| enumerate_with(&env, &OracleOptions::default()))
                .map_err(|e| e.to_string())?;
            if one != many {
                return Err(format!("{name} λ={lambda}: serial and parallel oracles differ"));
            }
            checked += 1;
        }
    }
    // a shuffled run order must not matter either
    let config = RunConfig::bundled("core");
    let scenario = load_scenario(&ScenarioSource::Bundled("core".into()), &config.palette).map_err(|e| e.to_string())?;
    let docs: Vec<String> = [3u64, 1, 2, 1, 3, 2]
        .par_iter()
        .map(|&seed| run::play(&RunConfig { seed, ..config.clone() }, &scenario).unwrap().document.to_json())
        .collect();
    if docs[0] != docs[4] || docs[1] != docs[3] || docs[2] != docs[5] {
        return Err("parallel repeated runs differ".into());
    }
    Ok(format!("{checked} repeated runs byte-identical; serial and 4-thread oracles agree"))
}

fn interior_env<R: Rng>(rng: &mut R) -> EnvConfig {
    let w = rng.random_range(4..=48);
    let h = rng.random_range(4..=48);
    let zero_frac = rng.random_range(0.0..0.9);
    let map = random_map(rng, w, h, zero_frac);
    let n = rng.random_range(4..=16);
    let verts = random_vertices(rng, n, w, h);
    EnvConfig::new(map.into(), verts.into(), common::random_lambda(rng), None).unwrap()
}

fn interior_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a7);
    let mut pairs = 0;
    let mut on_boundary = 0;
    while pairs < 1000 {
        let env = interior_env(&mut rng);
        let n = env.num_vertices();
        let s = random_state(&mut rng, n);
        let hull = env.hull(&s);
        if hull.is_degenerate() {
            continue;
        }
        let inside: Vec<usize> = (0..n)
            .filter(|&i| !s.contains(i) && hull.contains_point(env.vertices().get(i).unwrap().point()))
            .collect();
        if inside.is_empty() {
            continue;
        }
        let v = inside[rng.random_range(0..inside.len())];
        let (next, r) = env.step_exact(&s, Action::add(v)).map_err(|e| e.to_string())?;
        if r != Score::from_integer(0) || env.hull(&next) != hull {
            return Err(format!("adding interior vertex {v} to {s} gave reward {r}"));
        }
        if hull.points().contains(&env.vertices().get(v).unwrap().point()) {
            on_boundary += 1;
        }
        pairs += 1;
    }
    Ok(format!("{pairs} interior adds, reward 0 and hull unchanged ({on_boundary} at existing corners)"))
}

#[test]
fn acceptance() {
    let checks: [(&str, fn() -> Outcome); 7] = [
        ("oracle equivalence", oracle_equivalence),
        ("exact telescoping", exact_telescoping),
        ("λ-monotonicity on fork", lambda_monotonicity),
        ("geometry oracles", geometry_oracles),
        ("Q-update arithmetic", q_update_arithmetic),
        ("determinism", determinism),
        ("interior-point invariance", interior_invariance),
    ];
    let mut failures = Vec::new();
    for (i, (name, check)) in checks.iter().enumerate() {
        let t = Instant::now();
        let outcome = check();
        let secs = t.elapsed().as_secs_f64();
        match &outcome {
            Ok(detail) => println!("[{}] PASS {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                println!("[{}] FAIL {name} ({secs:.1}s): {detail}", i + 1);
                failures.push(*name);
            }
        }
    }
    assert!(failures.is_empty(), "failed: {failures:?}");
}
