//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the hull or rasterization code under test.
#![allow(dead_code)]

use std::sync::Arc;

use num_rational::Ratio;
use rand::Rng;

use perimeter_core::geometry::{Point, Vertex};
use perimeter_core::{EnvConfig, GameState, HeatMap, Rational, Score, VertexSet};

fn orient(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i128 {
    (a.0 - o.0) as i128 * (b.1 - o.1) as i128 - (a.1 - o.1) as i128 * (b.0 - o.0) as i128
}

fn strictly_between(a: (i64, i64), b: (i64, i64), p: (i64, i64)) -> bool {
    p != a && p != b && p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Extreme-point hull by edge testing: `a -> b` is a counter-clockwise hull
/// edge when every other point is strictly to its left or strictly inside
/// the segment. Returns `None` when the set has no positive-area hull,
/// otherwise the cycle starting at the lexicographically smallest corner.
pub fn naive_hull(points: &[(i64, i64)]) -> Option<Vec<(i64, i64)>> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    let flat = pts.len() < 3 || pts.iter().all(|&p| orient(pts[0], pts[1], p) == 0);
    if flat {
        return None;
    }
    let mut next = std::collections::BTreeMap::new();
    for &a in &pts {
        for &b in &pts {
            if a == b {
                continue;
            }
            let edge = pts.iter().all(|&p| {
                if p == a || p == b {
                    return true;
                }
                let o = orient(a, b, p);
                o > 0 || (o == 0 && strictly_between(a, b, p))
            });
            if edge {
                assert!(next.insert(a, b).is_none(), "two hull edges leave {a:?}");
            }
        }
    }
    let start = *next.keys().next().expect("non-flat set has edges");
    let mut cycle = vec![start];
    let mut cur = next[&start];
    while cur != start {
        cycle.push(cur);
        cur = next[&cur];
        assert!(cycle.len() <= next.len(), "hull edges do not close");
    }
    Some(cycle)
}

/// Pixels whose centers lie in the closed polygon, tested one at a time
/// against every edge half-plane in half-pixel units.
pub fn brute_pixels(poly: &[(i64, i64)], width: u32, height: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    if poly.len() < 3 {
        return out;
    }
    for y in 0..height {
        for x in 0..width {
            let c = (2 * x as i64 + 1, 2 * y as i64 + 1);
            let inside = (0..poly.len()).all(|i| {
                let a = poly[i];
                let b = poly[(i + 1) % poly.len()];
                orient((2 * a.0, 2 * a.1), (2 * b.0, 2 * b.1), c) >= 0
            });
            if inside {
                out.push((x, y));
            }
        }
    }
    out
}

/// State value from first principles: naive hull, brute-force pixel scan,
/// then `(Σw − λ·#zeros) / β`.
pub fn value_oracle(map: &HeatMap, verts: &VertexSet, state: &GameState, lambda: Rational, beta: Rational) -> Score {
    let pts: Vec<(i64, i64)> = state
        .ids()
        .iter()
        .map(|&i| {
            let v = verts.get(i).unwrap();
            (v.x, v.y)
        })
        .collect();
    let Some(poly) = naive_hull(&pts) else {
        return Score::from_integer(0);
    };
    let mut total = Score::from_integer(0);
    let lam = Score::new(*lambda.numer() as i128, *lambda.denom() as i128);
    for (x, y) in brute_pixels(&poly, map.width(), map.height()) {
        let w = map.weight_at(x, y).unwrap();
        total += if w == 0 { -lam } else { Score::from_integer(w as i128) };
    }
    total / Score::new(*beta.numer() as i128, *beta.denom() as i128)
}

/// Map with roughly `zero_frac` of its pixels exactly zero.
pub fn random_map<R: Rng>(rng: &mut R, w: u32, h: u32, zero_frac: f64) -> HeatMap {
    let weights = (0..w * h)
        .map(|_| if rng.random_bool(zero_frac) { 0 } else { rng.random_range(1..=255u8) })
        .collect();
    HeatMap::new(w, h, weights).unwrap()
}

/// `n` vertices on the closed frame, duplicates allowed.
pub fn random_vertices<R: Rng>(rng: &mut R, n: usize, w: u32, h: u32) -> VertexSet {
    let vs = (0..n)
        .map(|id| Vertex {
            id,
            x: rng.random_range(0..=w as i64),
            y: rng.random_range(0..=h as i64),
        })
        .collect();
    VertexSet::new(vs).unwrap()
}

pub fn random_lambda<R: Rng>(rng: &mut R) -> Rational {
    Ratio::new(rng.random_range(0..=40), rng.random_range(1..=10))
}

pub fn random_env<R: Rng>(rng: &mut R) -> EnvConfig {
    let w = rng.random_range(1..=24);
    let h = rng.random_range(1..=24);
    let n = rng.random_range(1..=10);
    let zero_frac = rng.random_range(0.0..0.8);
    let map = random_map(rng, w, h, zero_frac);
    let verts = random_vertices(rng, n, w, h);
    let beta = if rng.random_bool(0.5) {
        None
    } else {
        Some(Ratio::new(rng.random_range(1..=500), rng.random_range(1..=7)))
    };
    EnvConfig::new(Arc::new(map), Arc::new(verts), random_lambda(rng), beta).unwrap()
}

pub fn random_state<R: Rng>(rng: &mut R, n: usize) -> GameState {
    GameState::from_ids((0..n).filter(|_| rng.random_bool(0.5)))
}

pub fn points(pts: &[(i64, i64)]) -> Vec<Point> {
    pts.iter().map(|&(x, y)| Point::new(x, y)).collect()
}

pub fn as_pairs(pts: &[Point]) -> Vec<(i64, i64)> {
    pts.iter().map(|p| (p.x, p.y)).collect()
}
