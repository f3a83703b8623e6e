//! The perimeter-search game.
//!
//! A state is a set of selected candidate intersections. Each move adds an
//! unselected intersection or removes a selected one, so every state has
//! exactly `N` legal moves. The value of a state scores the pixels enclosed
//! by the convex hull of its intersections:
//!
//! ```text
//! V(s) = (1/β) · Σ_{p ∈ CH(s)} (w_p − λ·[w_p = 0])
//! ```
//!
//! and the reward of a transition is `V(s') − V(s)`. Values are exact
//! rationals; rewards become floats only when handed to the agent.

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{score_to_f64, Rational, Score};
use crate::geometry::{row_spans, vertex_hull, Hull, Vertex};
use crate::raster::HeatMap;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("illegal move {action} in state {state}")]
    IllegalMove { action: Action, state: GameState },
    #[error("vertex id {id} is not in 0..{n}")]
    UnknownVertex { id: usize, n: usize },
    #[error("invalid vertex set: {0}")]
    VertexSet(String),
    #[error("invalid environment config: {0}")]
    Config(String),
}

/// Candidate intersections indexed `0..N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    vertices: Vec<Vertex>,
}

impl VertexSet {
    /// Accepts vertices in any order; ids must cover `0..N` exactly once.
    pub fn new(mut vertices: Vec<Vertex>) -> Result<Self, EnvError> {
        vertices.sort_by_key(|v| v.id);
        for (i, v) in vertices.iter().enumerate() {
            if v.id != i {
                return Err(EnvError::VertexSet(format!(
                    "ids must be dense from 0, expected {i} but found {}",
                    v.id
                )));
            }
        }
        Ok(Self { vertices })
    }

    pub fn from_points(points: &[(i64, i64)]) -> Self {
        Self {
            vertices: points
                .iter()
                .enumerate()
                .map(|(id, &(x, y))| Vertex { id, x, y })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Vertex> {
        self.vertices.get(id)
    }

    pub fn as_slice(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Parses the vertex file: one `id, x, y` record per line. Blank lines,
    /// `#` comments and an optional `id,x,y` header are skipped.
    pub fn parse(text: &str) -> Result<Self, EnvError> {
        let mut vertices = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line.eq_ignore_ascii_case("id,x,y") {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            let err = || EnvError::VertexSet(format!("line {}: expected `id, x, y`, got `{line}`", lineno + 1));
            if fields.len() != 3 {
                return Err(err());
            }
            vertices.push(Vertex {
                id: fields[0].parse().map_err(|_| err())?,
                x: fields[1].parse().map_err(|_| err())?,
                y: fields[2].parse().map_err(|_| err())?,
            });
        }
        Self::new(vertices)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("id,x,y\n");
        for v in &self.vertices {
            out.push_str(&format!("{},{},{}\n", v.id, v.x, v.y));
        }
        out
    }
}

/// Selected vertex ids in ascending order. Equal sets have identical
/// representations, so the state can key a table directly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GameState {
    selected: Vec<usize>,
}

impl GameState {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Canonicalizes any id list (sorted, deduplicated).
    pub fn from_ids<I: IntoIterator<Item = usize>>(ids: I) -> Self {
        let mut selected: Vec<usize> = ids.into_iter().collect();
        selected.sort_unstable();
        selected.dedup();
        Self { selected }
    }

    /// All ids `0..n`.
    pub fn full(n: usize) -> Self {
        Self {
            selected: (0..n).collect(),
        }
    }

    /// Bitmask over `0..64`; panics past that, only the oracle uses it.
    pub fn from_mask(mask: u64) -> Self {
        Self {
            selected: (0..64).filter(|i| mask >> i & 1 == 1).collect(),
        }
    }

    pub fn ids(&self) -> &[usize] {
        &self.selected
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.selected.binary_search(&id).is_ok()
    }

    /// Canonical serialization, e.g. `"0,4,7"`; empty state is `""`.
    pub fn key(&self) -> String {
        self.selected
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Parses a comma-separated id list; whitespace is ignored.
    pub fn parse(text: &str) -> Result<Self, String> {
        let ids = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<usize>().map_err(|_| format!("`{s}` is not a vertex id")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_ids(ids))
    }

    pub fn validate(&self, n: usize) -> Result<(), EnvError> {
        match self.selected.last() {
            Some(&id) if id >= n => Err(EnvError::UnknownVertex { id, n }),
            _ => Ok(()),
        }
    }

    fn toggled(&self, id: usize) -> Self {
        let mut selected = self.selected.clone();
        match selected.binary_search(&id) {
            Ok(pos) => {
                selected.remove(pos);
            }
            Err(pos) => selected.insert(pos, id),
        }
        Self { selected }
    }
}

impl fmt::Display for GameState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    Add,
    Remove,
}

/// Orders as `(kind, vertex)` with every `Add` before every `Remove`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    pub vertex: usize,
}

impl Action {
    pub const fn add(vertex: usize) -> Self {
        Self {
            kind: ActionKind::Add,
            vertex,
        }
    }

    pub const fn remove(vertex: usize) -> Self {
        Self {
            kind: ActionKind::Remove,
            vertex,
        }
    }

    pub fn is_legal(&self, state: &GameState) -> bool {
        match self.kind {
            ActionKind::Add => !state.contains(self.vertex),
            ActionKind::Remove => state.contains(self.vertex),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ActionKind::Add => write!(f, "Add({})", self.vertex),
            ActionKind::Remove => write!(f, "Remove({})", self.vertex),
        }
    }
}

/// Per-row prefix sums of weights and of zero-weight pixels, so a hull is
/// scored in time proportional to its row count.
#[derive(Debug, Clone)]
pub struct ScoreField {
    width: u32,
    height: u32,
    weight_prefix: Vec<u64>,
    zero_prefix: Vec<u32>,
}

/// Raw enclosed-pixel statistics of a hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub struct PixelSums {
    pub pixels: u64,
    pub weight: u64,
    pub zeros: u64,
}

impl ScoreField {
    pub fn new(map: &HeatMap) -> Self {
        let (w, h) = (map.width(), map.height());
        let stride = w as usize + 1;
        let mut weight_prefix = vec![0u64; stride * h as usize];
        let mut zero_prefix = vec![0u32; stride * h as usize];
        for y in 0..h {
            let row = map.row(y);
            let base = y as usize * stride;
            for (x, &wp) in row.iter().enumerate() {
                weight_prefix[base + x + 1] = weight_prefix[base + x] + wp as u64;
                zero_prefix[base + x + 1] = zero_prefix[base + x] + (wp == 0) as u32;
            }
        }
        Self {
            width: w,
            height: h,
            weight_prefix,
            zero_prefix,
        }
    }

    pub fn sums(&self, hull: &Hull) -> PixelSums {
        let stride = self.width as usize + 1;
        let mut out = PixelSums::default();
        for span in row_spans(hull, self.width, self.height) {
            let base = span.y as usize * stride;
            let (a, b) = (base + span.x0 as usize, base + span.x1 as usize + 1);
            out.pixels += span.count() as u64;
            out.weight += self.weight_prefix[b] - self.weight_prefix[a];
            out.zeros += (self.zero_prefix[b] - self.zero_prefix[a]) as u64;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub hull: Hull,
    pub sums: PixelSums,
    pub value: Score,
}

/// Everything that defines one game: map, candidate vertices, λ and β.
#[derive(Debug, Clone)]
pub struct EnvConfig {
    lambda: Rational,
    beta: Rational,
    heatmap: Arc<HeatMap>,
    vertices: Arc<VertexSet>,
    field: Arc<ScoreField>,
    hull_canonical: bool,
}

impl EnvConfig {
    /// `beta` defaults to the frame area.
    pub fn new(
        heatmap: Arc<HeatMap>,
        vertices: Arc<VertexSet>,
        lambda: Rational,
        beta: Option<Rational>,
    ) -> Result<Self, EnvError> {
        let beta = beta.unwrap_or_else(|| Ratio::from_integer(heatmap.area() as i64));
        if lambda.is_negative() {
            return Err(EnvError::Config(format!("lambda must be >= 0, got {lambda}")));
        }
        if !beta.is_positive() {
            return Err(EnvError::Config(format!("beta must be > 0, got {beta}")));
        }
        let (w, h) = (heatmap.width() as i64, heatmap.height() as i64);
        for v in vertices.as_slice() {
            if v.x < 0 || v.y < 0 || v.x > w || v.y > h {
                return Err(EnvError::Config(format!(
                    "vertex {} at ({}, {}) lies outside the {w}x{h} frame",
                    v.id, v.x, v.y
                )));
            }
        }
        let field = Arc::new(ScoreField::new(&heatmap));
        Ok(Self {
            lambda,
            beta,
            heatmap,
            vertices,
            field,
            hull_canonical: false,
        })
    }

    /// Same game under a different λ.
    pub fn with_lambda(&self, lambda: Rational) -> Result<Self, EnvError> {
        if lambda.is_negative() {
            return Err(EnvError::Config(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self {
            lambda,
            ..self.clone()
        })
    }

    pub fn with_beta(&self, beta: Rational) -> Result<Self, EnvError> {
        if !beta.is_positive() {
            return Err(EnvError::Config(format!("beta must be > 0, got {beta}")));
        }
        Ok(Self { beta, ..self.clone() })
    }

    /// Experimental: after each move keep only the ids that are hull
    /// corners, merging states that induce the same hull.
    pub fn with_hull_canonical(mut self, on: bool) -> Self {
        self.hull_canonical = on;
        self
    }

    pub fn lambda(&self) -> Rational {
        self.lambda
    }

    pub fn beta(&self) -> Rational {
        self.beta
    }

    pub fn heatmap(&self) -> &HeatMap {
        &self.heatmap
    }

    pub fn vertices(&self) -> &VertexSet {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn hull(&self, state: &GameState) -> Hull {
        vertex_hull(state.ids().iter().filter_map(|&id| self.vertices.get(id)))
    }

    pub fn sums(&self, hull: &Hull) -> PixelSums {
        self.field.sums(hull)
    }

    /// Value of a hull with the given enclosed-pixel statistics.
    pub fn score(&self, sums: PixelSums) -> Score {
        let (ln, ld) = (*self.lambda.numer() as i128, *self.lambda.denom() as i128);
        let (bn, bd) = (*self.beta.numer() as i128, *self.beta.denom() as i128);
        // (W - (ln/ld)·Z) / (bn/bd)
        let num = (sums.weight as i128 * ld - ln * sums.zeros as i128) * bd;
        Ratio::new(num, ld * bn)
    }

    /// Hull, pixel statistics and value of a state in one pass.
    pub fn evaluate(&self, state: &GameState) -> Evaluation {
        let hull = self.hull(state);
        let sums = self.sums(&hull);
        let value = self.score(sums);
        Evaluation { hull, sums, value }
    }

    pub fn value(&self, state: &GameState) -> Score {
        if state.len() < 3 {
            return Score::zero();
        }
        self.score(self.sums(&self.hull(state)))
    }

    /// The `N` legal moves in ascending `(kind, id)` order.
    pub fn legal_actions(&self, state: &GameState) -> Vec<Action> {
        let n = self.num_vertices();
        let mut out: Vec<Action> = (0..n).filter(|&i| !state.contains(i)).map(Action::add).collect();
        out.extend(state.ids().iter().copied().filter(|&i| i < n).map(Action::remove));
        out
    }

    /// Deterministic transition without scoring.
    pub fn transition(&self, state: &GameState, action: Action) -> Result<GameState, EnvError> {
        if action.vertex >= self.num_vertices() {
            return Err(EnvError::UnknownVertex {
                id: action.vertex,
                n: self.num_vertices(),
            });
        }
        if !action.is_legal(state) {
            return Err(EnvError::IllegalMove {
                action,
                state: state.clone(),
            });
        }
        let next = state.toggled(action.vertex);
        Ok(if self.hull_canonical {
            self.hull_corners(&next)
        } else {
            next
        })
    }

    /// Next state and exact reward `V(s') − V(s)`.
    pub fn step_exact(&self, state: &GameState, action: Action) -> Result<(GameState, Score), EnvError> {
        let next = self.transition(state, action)?;
        let reward = self.value(&next) - self.value(state);
        Ok((next, reward))
    }

    /// Next state and reward rendered as a float.
    pub fn step(&self, state: &GameState, action: Action) -> Result<(GameState, f64), EnvError> {
        let (next, reward) = self.step_exact(state, action)?;
        Ok((next, score_to_f64(&reward)))
    }

    fn hull_corners(&self, state: &GameState) -> GameState {
        let hull = self.hull(state);
        if hull.is_degenerate() {
            return state.clone();
        }
        let mut keep = Vec::new();
        for p in hull.points() {
            // lowest id among duplicates at the corner
            if let Some(&id) = state
                .ids()
                .iter()
                .find(|&&id| self.vertices.get(id).map(Vertex::point) == Some(*p))
            {
                keep.push(id);
            }
        }
        GameState::from_ids(keep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::parse_rational;

    /// 4x4 map with 255 on the 2x2 block at the origin.
    fn block_map() -> Arc<HeatMap> {
        let mut w = vec![0u8; 16];
        for (x, y) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            w[y * 4 + x] = 255;
        }
        Arc::new(HeatMap::new(4, 4, w).unwrap())
    }

    fn block_env() -> EnvConfig {
        let verts = VertexSet::from_points(&[(0, 0), (2, 0), (2, 2), (0, 2), (1, 1)]);
        EnvConfig::new(block_map(), Arc::new(verts), Ratio::from_integer(1), Some(Ratio::from_integer(1))).unwrap()
    }

    #[test]
    fn empty_state_is_zero() {
        assert_eq!(block_env().value(&GameState::empty()), Score::zero());
    }

    #[test]
    fn uniform_full_frame_is_one() {
        let map = Arc::new(HeatMap::filled(5, 3, 1).unwrap());
        let verts = Arc::new(VertexSet::from_points(&[(0, 0), (5, 0), (5, 3), (0, 3)]));
        let env = EnvConfig::new(map, verts, Ratio::from_integer(0), None).unwrap();
        assert_eq!(env.beta(), Ratio::from_integer(15));
        assert_eq!(env.value(&GameState::full(4)), Score::from_integer(1));
    }

    #[test]
    fn block_square_value() {
        let env = block_env();
        assert_eq!(env.value(&GameState::from_ids([0, 1, 2, 3])), Score::from_integer(1020));
    }

    #[test]
    fn zero_pixels_penalized_per_pixel() {
        let map = block_map();
        let verts = Arc::new(VertexSet::from_points(&[(0, 0), (4, 0), (4, 4), (0, 4)]));
        let env = EnvConfig::new(map, verts, parse_rational("1/10").unwrap(), Some(Ratio::from_integer(1))).unwrap();
        // 4 congested pixels at 255, 12 free pixels at -1/10 each
        assert_eq!(env.value(&GameState::full(4)), Ratio::new(10200 - 12, 10));
    }

    #[test]
    fn legal_action_order() {
        let map = Arc::new(HeatMap::filled(4, 4, 1).unwrap());
        let env = EnvConfig::new(
            map,
            Arc::new(VertexSet::from_points(&[(0, 0), (1, 0), (0, 1)])),
            Ratio::from_integer(0),
            None,
        )
        .unwrap();
        assert_eq!(env.legal_actions(&GameState::empty()), vec![Action::add(0), Action::add(1), Action::add(2)]);
        assert_eq!(
            env.legal_actions(&GameState::full(3)),
            vec![Action::remove(0), Action::remove(1), Action::remove(2)]
        );
        assert_eq!(
            env.legal_actions(&GameState::from_ids([1])),
            vec![Action::add(0), Action::add(2), Action::remove(1)]
        );
    }

    #[test]
    fn interior_add_is_free() {
        let env = block_env();
        let s = GameState::from_ids([0, 1, 2, 3]);
        let (next, r) = env.step_exact(&s, Action::add(4)).unwrap();
        assert_eq!(next, GameState::from_ids([0, 1, 2, 3, 4]));
        assert_eq!(r, Score::zero());
        assert_eq!(env.hull(&next), env.hull(&s));
    }

    #[test]
    fn telescoping_block_scenario() {
        let env = block_env();
        for order in [[0, 1, 2, 3], [3, 1, 0, 2], [2, 3, 1, 0]] {
            let mut s = GameState::empty();
            let mut total = Score::zero();
            for id in order {
                let (next, r) = env.step_exact(&s, Action::add(id)).unwrap();
                total += r;
                s = next;
            }
            assert_eq!(total, Score::from_integer(1020));
        }
    }

    #[test]
    fn remove_then_add_is_identity() {
        let env = block_env();
        let s = GameState::from_ids([0, 1, 2]);
        let (mid, r1) = env.step_exact(&s, Action::remove(1)).unwrap();
        let (back, r2) = env.step_exact(&mid, Action::add(1)).unwrap();
        assert_eq!(back, s);
        assert_eq!(r1 + r2, Score::zero());
    }

    #[test]
    fn illegal_moves_rejected() {
        let env = block_env();
        let s = GameState::from_ids([1]);
        let err = env.step(&s, Action::add(1)).unwrap_err();
        assert_eq!(err.to_string(), "illegal move Add(1) in state {1}");
        assert!(env.step(&s, Action::remove(0)).is_err());
        assert!(matches!(env.step(&s, Action::add(9)), Err(EnvError::UnknownVertex { id: 9, n: 5 })));
    }

    #[test]
    fn config_validation() {
        let map = block_map();
        let verts = Arc::new(VertexSet::from_points(&[(0, 0)]));
        assert!(EnvConfig::new(map.clone(), verts.clone(), Ratio::from_integer(-1), None).is_err());
        assert!(EnvConfig::new(map.clone(), verts.clone(), Ratio::from_integer(0), Some(Ratio::from_integer(0))).is_err());
        let outside = Arc::new(VertexSet::from_points(&[(5, 0)]));
        assert!(EnvConfig::new(map, outside, Ratio::from_integer(0), None).is_err());
    }

    #[test]
    fn vertex_file_roundtrip() {
        let vs = VertexSet::from_points(&[(3, 4), (0, 0), (10, 2)]);
        assert_eq!(VertexSet::parse(&vs.to_text()).unwrap(), vs);
        let parsed = VertexSet::parse("# corners\n1, 5, 5\n0 0 0\n\n").unwrap();
        assert_eq!(parsed.get(1).unwrap().x, 5);
        assert!(VertexSet::parse("0,0,0\n2,1,1\n").is_err());
        assert!(VertexSet::parse("0,0\n").is_err());
    }

    #[test]
    fn state_serialization_canonical() {
        let a = GameState::from_ids([3, 1, 2, 1]);
        let b = GameState::parse(" 1,2 ,3").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.key(), "1,2,3");
        assert_eq!(GameState::empty().key(), "");
        assert_eq!(GameState::from_mask(0b1011), GameState::from_ids([0, 1, 3]));
    }

    #[test]
    fn hull_canonical_mode_merges_interior() {
        let env = block_env().with_hull_canonical(true);
        let s = GameState::from_ids([0, 1, 2, 3]);
        let next = env.transition(&s, Action::add(4)).unwrap();
        assert_eq!(next, s);
    }
}
