//! Exhaustive ground truth for small vertex sets.
//!
//! Every subset of the `N` candidate vertices is scored and the best one is
//! kept, ties going to the lexicographically smallest ascending id list.
//! Subsets with the same hull corners share their pixel sums, so interior
//! duplicates cost one hull construction each.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::env::{EnvConfig, GameState, PixelSums};
use crate::exact::{Rational, Score};
use crate::geometry::{vertex_hull, Point};

pub const DEFAULT_MAX_N: usize = 20;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{n} vertices means 2^{n} = {subsets} subsets; the oracle is capped at N <= {max_n}")]
    TooLarge { n: usize, max_n: usize, subsets: u128 },
    #[error("lambda must be >= 0, got {0}")]
    NegativeLambda(Rational),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub best_state: GameState,
    pub best_value: Score,
    pub evaluated: u64,
    /// Enclosed pixel statistics of the best hull.
    pub best_sums: PixelSums,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    pub max_n: usize,
    pub memoize: bool,
    pub parallel: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_n: DEFAULT_MAX_N,
            memoize: true,
            parallel: true,
        }
    }
}

/// Lexicographic order of the ascending id lists encoded by two masks.
pub fn mask_lex_cmp(a: u64, b: u64) -> Ordering {
    let diff = a ^ b;
    if diff == 0 {
        return Ordering::Equal;
    }
    let bit = diff.trailing_zeros();
    let above = |m: u64| if bit == 63 { 0 } else { m >> (bit + 1) };
    let a_has = a >> bit & 1 == 1;
    let lacks = if a_has { b } else { a };
    // the list holding `bit` is smaller unless the other one ends there
    let has_is_smaller = above(lacks) != 0;
    match (a_has, has_is_smaller) {
        (true, true) | (false, false) => Ordering::Less,
        _ => Ordering::Greater,
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    mask: u64,
    value: Score,
    sums: PixelSums,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        match self.value.cmp(&other.value) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => mask_lex_cmp(self.mask, other.mask) == Ordering::Less,
        }
    }

    fn merge(a: Candidate, b: Candidate) -> Candidate {
        if b.better_than(&a) {
            b
        } else {
            a
        }
    }
}

struct ChunkScorer<'a> {
    env: &'a EnvConfig,
    memo: Option<HashMap<Vec<Point>, PixelSums>>,
}

impl ChunkScorer<'_> {
    fn score(&mut self, mask: u64) -> Candidate {
        let verts = self.env.vertices().as_slice();
        let hull = vertex_hull(
            verts
                .iter()
                .filter(|v| mask >> v.id & 1 == 1),
        );
        let sums = if hull.is_degenerate() {
            PixelSums::default()
        } else {
            match &mut self.memo {
                Some(memo) => match memo.get(hull.points()) {
                    Some(s) => *s,
                    None => {
                        let s = self.env.sums(&hull);
                        memo.insert(hull.points().to_vec(), s);
                        s
                    }
                },
                None => self.env.sums(&hull),
            }
        };
        let value = if hull.is_degenerate() {
            Score::zero()
        } else {
            self.env.score(sums)
        };
        Candidate { mask, value, sums }
    }

    fn best_in(&mut self, range: std::ops::Range<u64>) -> Candidate {
        let mut best = self.score(range.start);
        for mask in range.start + 1..range.end {
            let c = self.score(mask);
            if c.better_than(&best) {
                best = c;
            }
        }
        best
    }
}

const CHUNK: u64 = 1 << 12;

/// Scores all `2^N` subsets under `options`.
pub fn enumerate_with(env: &EnvConfig, options: &OracleOptions) -> Result<OracleResult, OracleError> {
    let n = env.num_vertices();
    if n > options.max_n || n > 63 {
        return Err(OracleError::TooLarge {
            n,
            max_n: options.max_n.min(63),
            subsets: 1u128 << n.min(127),
        });
    }
    let total = 1u64 << n;
    let chunks: Vec<std::ops::Range<u64>> = (0..total.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(total))
        .collect();
    let run_chunk = |r: std::ops::Range<u64>| {
        ChunkScorer {
            env,
            memo: options.memoize.then(HashMap::new),
        }
        .best_in(r)
    };

    let best = if options.parallel {
        parallel_best(chunks, &run_chunk)
    } else {
        chunks.into_iter().map(run_chunk).reduce(Candidate::merge)
    }
    .expect("at least the empty subset is scored");

    Ok(OracleResult {
        best_state: GameState::from_mask(best.mask),
        best_value: best.value,
        evaluated: total,
        best_sums: best.sums,
    })
}

#[cfg(feature = "parallel")]
fn parallel_best<F>(chunks: Vec<std::ops::Range<u64>>, run: &F) -> Option<Candidate>
where
    F: Fn(std::ops::Range<u64>) -> Candidate + Sync,
{
    use rayon::prelude::*;
    chunks.into_par_iter().map(run).reduce_with(Candidate::merge)
}

#[cfg(not(feature = "parallel"))]
fn parallel_best<F>(chunks: Vec<std::ops::Range<u64>>, run: &F) -> Option<Candidate>
where
    F: Fn(std::ops::Range<u64>) -> Candidate,
{
    chunks.into_iter().map(run).reduce(Candidate::merge)
}

/// Exhaustive optimum with memoization, refusing `N > max_n`.
pub fn enumerate_optimal(env: &EnvConfig, max_n: usize) -> Result<OracleResult, OracleError> {
    enumerate_with(
        env,
        &OracleOptions {
            max_n,
            ..OracleOptions::default()
        },
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub lambda: Rational,
    pub result: OracleResult,
}

/// One oracle run per λ, everything else held fixed.
pub fn lambda_sweep(env: &EnvConfig, lambdas: &[Rational]) -> Result<Vec<SweepRow>, OracleError> {
    lambda_sweep_with(env, lambdas, &OracleOptions::default())
}

pub fn lambda_sweep_with(
    env: &EnvConfig,
    lambdas: &[Rational],
    options: &OracleOptions,
) -> Result<Vec<SweepRow>, OracleError> {
    lambdas
        .iter()
        .map(|&lambda| {
            let env = env.with_lambda(lambda).map_err(|_| OracleError::NegativeLambda(lambda))?;
            Ok(SweepRow {
                lambda,
                result: enumerate_with(&env, options)?,
            })
        })
        .collect()
}

/// `lambda_num,lambda_den,best_state,best_value_num,best_value_den,zero_pixels_enclosed`,
/// with the state's ids separated by spaces.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("lambda_num,lambda_den,best_state,best_value_num,best_value_den,zero_pixels_enclosed\n");
    for row in rows {
        let ids: Vec<String> = row.result.best_state.ids().iter().map(|i| i.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.lambda.numer(),
            row.lambda.denom(),
            ids.join(" "),
            row.result.best_value.numer(),
            row.result.best_value.denom(),
            row.result.best_sums.zeros
        ));
    }
    out
}
