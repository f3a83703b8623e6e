//! Orchestration behind the `perimeter` command line: loading scenarios,
//! playing games, certifying with the oracle and rendering artifacts.
//!
//! Everything here returns values; only [`write_file`] and the binary touch
//! the filesystem for outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agent::{self, greedy_rollout, train, AgentConfig, AgentError, TrainingLog};
use crate::env::{EnvConfig, EnvError, GameState, VertexSet};
use crate::exact::{parse_rational, score_to_f64, Rational, Score};
use crate::geometry::{Hull, Point};
use crate::oracle::{self, OracleError, OracleOptions, SweepRow};
use crate::raster::{self, default_palette, HeatMap, PaletteEntry, RasterError};
use crate::scenario::{self, ScenarioError, ScenarioSpec};

/// Largest vertex set the tabular agent is allowed to play on.
pub const DEFAULT_MAX_VERTICES: usize = 24;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Refused(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl RunError {
    /// 1 input error, 2 refusal, 3 internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Input(_) => 1,
            RunError::Refused(_) => 2,
            RunError::Internal(_) => 3,
        }
    }
}

impl From<RasterError> for RunError {
    fn from(e: RasterError) -> Self {
        RunError::Input(e.to_string())
    }
}

impl From<ScenarioError> for RunError {
    fn from(e: ScenarioError) -> Self {
        RunError::Input(e.to_string())
    }
}

impl From<EnvError> for RunError {
    fn from(e: EnvError) -> Self {
        RunError::Input(e.to_string())
    }
}

impl From<AgentError> for RunError {
    fn from(e: AgentError) -> Self {
        match e {
            AgentError::Config(_) => RunError::Input(e.to_string()),
            _ => RunError::Internal(e.to_string()),
        }
    }
}

impl From<OracleError> for RunError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooLarge { .. } => RunError::Refused(e.to_string()),
            OracleError::NegativeLambda(_) => RunError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    Files { heatmap: PathBuf, vertices: PathBuf },
    Bundled(String),
    SpecFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitState {
    /// Fresh random start every episode, rollouts from the empty set.
    Unset,
    /// One random subset drawn from the run seed, pinned for all episodes.
    Random,
    Explicit(GameState),
}

impl InitState {
    pub fn parse(text: &str) -> Result<Self, String> {
        match text.trim() {
            "" | "none" => Ok(InitState::Unset),
            "random" => Ok(InitState::Random),
            ids => GameState::parse(ids).map(InitState::Explicit),
        }
    }
}

/// Flat key-value config file. Every key is optional; command-line flags
/// override whatever is set here.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub heatmap: Option<PathBuf>,
    pub vertices: Option<PathBuf>,
    pub scenario: Option<String>,
    pub lambda: Option<String>,
    pub beta: Option<String>,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub episodes: Option<usize>,
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    pub init_state: Option<String>,
    pub out: Option<PathBuf>,
    pub lambdas: Option<String>,
    pub max_vertices: Option<usize>,
    pub palette: Option<Vec<PaletteEntry>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Input(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        Self::parse(&read_text(path)?)
    }

    /// Values set in `other` win.
    pub fn overlay(self, other: ConfigFile) -> ConfigFile {
        ConfigFile {
            heatmap: other.heatmap.or(self.heatmap),
            vertices: other.vertices.or(self.vertices),
            scenario: other.scenario.or(self.scenario),
            lambda: other.lambda.or(self.lambda),
            beta: other.beta.or(self.beta),
            alpha: other.alpha.or(self.alpha),
            epsilon: other.epsilon.or(self.epsilon),
            episodes: other.episodes.or(self.episodes),
            horizon: other.horizon.or(self.horizon),
            seed: other.seed.or(self.seed),
            init_state: other.init_state.or(self.init_state),
            out: other.out.or(self.out),
            lambdas: other.lambdas.or(self.lambdas),
            max_vertices: other.max_vertices.or(self.max_vertices),
            palette: other.palette.or(self.palette),
        }
    }
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: ScenarioSource,
    pub lambda: Rational,
    pub beta: Option<Rational>,
    pub alpha: f64,
    pub epsilon: f64,
    /// `None` means the default budget of 2000·N episodes.
    pub episodes: Option<usize>,
    /// `None` means H = 2N.
    pub horizon: Option<usize>,
    pub seed: u64,
    pub init_state: InitState,
    pub out: PathBuf,
    pub palette: Vec<PaletteEntry>,
    pub max_vertices: usize,
}

impl RunConfig {
    pub fn bundled(name: &str) -> Self {
        Self {
            source: ScenarioSource::Bundled(name.to_string()),
            lambda: Rational::from_integer(1),
            beta: None,
            alpha: 0.5,
            epsilon: 0.2,
            episodes: None,
            horizon: None,
            seed: 0,
            init_state: InitState::Unset,
            out: PathBuf::from("perimeter"),
            palette: default_palette(),
            max_vertices: DEFAULT_MAX_VERTICES,
        }
    }

    pub fn from_file(file: ConfigFile) -> Result<Self, RunError> {
        let source = match (&file.heatmap, &file.vertices, &file.scenario) {
            (Some(h), Some(v), None) => ScenarioSource::Files {
                heatmap: h.clone(),
                vertices: v.clone(),
            },
            (None, None, Some(s)) => {
                if s.ends_with(".toml") || Path::new(s).exists() {
                    ScenarioSource::SpecFile(PathBuf::from(s))
                } else {
                    ScenarioSource::Bundled(s.clone())
                }
            }
            (None, None, None) => {
                return Err(RunError::Input(
                    "no scenario: give --scenario NAME|PATH or both --heatmap and --vertices".into(),
                ))
            }
            _ => {
                return Err(RunError::Input(
                    "exactly one scenario source is allowed: --scenario, or --heatmap with --vertices".into(),
                ))
            }
        };
        let rat = |s: &Option<String>| -> Result<Option<Rational>, RunError> {
            s.as_deref().map(parse_rational).transpose().map_err(RunError::Input)
        };
        let palette = file.palette.clone().unwrap_or_else(default_palette);
        if file.palette.is_some() {
            raster::validate_palette(&palette)?;
        }
        Ok(Self {
            source,
            lambda: rat(&file.lambda)?.unwrap_or(Rational::from_integer(1)),
            beta: rat(&file.beta)?,
            alpha: file.alpha.unwrap_or(0.5),
            epsilon: file.epsilon.unwrap_or(0.2),
            episodes: file.episodes,
            horizon: file.horizon,
            seed: file.seed.unwrap_or(0),
            init_state: match &file.init_state {
                Some(s) => InitState::parse(s).map_err(RunError::Input)?,
                None => InitState::Unset,
            },
            out: file.out.clone().unwrap_or_else(|| PathBuf::from("perimeter")),
            palette,
            max_vertices: file.max_vertices.unwrap_or(DEFAULT_MAX_VERTICES),
        })
    }

    pub fn with_lambda(&self, lambda: Rational) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }
}

/// Loaded heat map and vertex set, identified by a content fingerprint so
/// that the same data gives the same id whichever way it was loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub map: Arc<HeatMap>,
    pub vertices: Arc<VertexSet>,
}

impl Scenario {
    pub fn new(map: HeatMap, vertices: VertexSet) -> Self {
        let mut h = Sha256::new();
        h.update(map.to_pgm());
        h.update(vertices.to_text().as_bytes());
        let digest = h.finalize();
        let hex: String = digest.iter().take(12).map(|b| format!("{b:02x}")).collect();
        Self {
            id: format!("sha256:{hex}"),
            map: Arc::new(map),
            vertices: Arc::new(vertices),
        }
    }

    pub fn env(&self, lambda: Rational, beta: Option<Rational>) -> Result<EnvConfig, RunError> {
        Ok(EnvConfig::new(self.map.clone(), self.vertices.clone(), lambda, beta)?)
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, RunError> {
    fs::read(path).map_err(|e| RunError::Input(format!("cannot read {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|e| RunError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn load_scenario(source: &ScenarioSource, palette: &[PaletteEntry]) -> Result<Scenario, RunError> {
    match source {
        ScenarioSource::Files { heatmap, vertices } => {
            let map = raster::load_any(&read_bytes(heatmap)?, palette)?;
            let verts = VertexSet::parse(&read_text(vertices)?)?;
            Ok(Scenario::new(map, verts))
        }
        ScenarioSource::Bundled(name) => {
            let (m, v) = scenario::synth(&scenario::bundled(name)?)?;
            Ok(Scenario::new(m, v))
        }
        ScenarioSource::SpecFile(path) => {
            let spec = ScenarioSpec::from_toml(&read_text(path)?)?;
            let (m, v) = scenario::synth(&spec)?;
            Ok(Scenario::new(m, v))
        }
    }
}

/// Exact value rendered three ways.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactValue {
    pub num: i128,
    pub den: i128,
    pub float: f64,
}

impl From<Score> for ExactValue {
    fn from(s: Score) -> Self {
        Self {
            num: *s.numer(),
            den: *s.denom(),
            float: score_to_f64(&s),
        }
    }
}

impl ExactValue {
    pub fn score(&self) -> Score {
        Score::new(self.num, self.den)
    }
}

/// The convex hull of the selected intersections for one game. This is the
/// hull stage only; it is not snapped to the street network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerimeterDocument {
    pub kind: String,
    pub scenario: String,
    pub lambda: String,
    pub beta: String,
    pub seed: u64,
    pub episodes: usize,
    pub horizon: usize,
    pub initial_state: Option<Vec<usize>>,
    pub selected: Vec<usize>,
    /// Counter-clockwise ring, first point repeated last.
    pub hull: Vec<[i64; 2]>,
    pub value: ExactValue,
    pub enclosed_pixels: u64,
    pub zero_pixels_enclosed: u64,
}

pub const DOCUMENT_KIND: &str = "convex-hull-perimeter";

impl PerimeterDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Input(format!("perimeter document: {e}")))
    }
}

pub fn closed_ring(hull: &Hull) -> Vec<[i64; 2]> {
    let mut ring: Vec<[i64; 2]> = hull.points().iter().map(|p| [p.x, p.y]).collect();
    if let Some(&first) = ring.first() {
        ring.push(first);
    }
    ring
}

/// Everything one game produces.
#[derive(Debug, Clone)]
pub struct GameOutput {
    pub document: PerimeterDocument,
    pub overlay_ppm: Vec<u8>,
    pub log: TrainingLog,
}

fn check_size(scenario: &Scenario, max_vertices: usize) -> Result<(), RunError> {
    let n = scenario.vertices.len();
    if n > max_vertices {
        return Err(RunError::Refused(format!(
            "{n} candidate vertices exceed the tabular bound of {max_vertices}; \
             thin the vertex set or raise --max-vertices"
        )));
    }
    Ok(())
}

pub fn agent_config(config: &RunConfig, n: usize) -> AgentConfig {
    let defaults = AgentConfig::defaults_for(n);
    AgentConfig {
        alpha: config.alpha,
        epsilon: config.epsilon,
        episodes: config.episodes.unwrap_or(defaults.episodes),
        horizon: config.horizon.unwrap_or(defaults.horizon),
        seed: config.seed,
        initial_state: match &config.init_state {
            InitState::Unset => None,
            InitState::Random => Some(agent::sample_initial_state(n, config.seed)),
            InitState::Explicit(s) => Some(s.clone()),
        },
    }
}

/// Trains, rolls out greedily and packages the best visited state.
pub fn play(config: &RunConfig, scenario: &Scenario) -> Result<GameOutput, RunError> {
    check_size(scenario, config.max_vertices)?;
    let env = scenario.env(config.lambda, config.beta)?;
    let agent_cfg = agent_config(config, env.num_vertices());
    let (table, log) = train(&env, &agent_cfg)?;
    let rollout = greedy_rollout(&table, &env, &agent_cfg.rollout_start(), agent_cfg.horizon)?;
    let document = document_for(&env, scenario, &rollout.best_state, config, &agent_cfg)?;
    if document.value.score() != rollout.best_value {
        return Err(RunError::Internal(format!(
            "document value {} differs from rollout value {}",
            document.value.score(),
            rollout.best_value
        )));
    }
    let overlay_ppm = render_overlay(&scenario.map, &env.hull(&rollout.best_state), &scenario.vertices, &rollout.best_state);
    Ok(GameOutput {
        document,
        overlay_ppm,
        log,
    })
}

fn document_for(
    env: &EnvConfig,
    scenario: &Scenario,
    state: &GameState,
    config: &RunConfig,
    agent_cfg: &AgentConfig,
) -> Result<PerimeterDocument, RunError> {
    let eval = env.evaluate(state);
    let value = if eval.hull.is_degenerate() { Score::from_integer(0) } else { eval.value };
    if value != env.value(state) {
        return Err(RunError::Internal(format!("value of {state} is not reproducible")));
    }
    Ok(PerimeterDocument {
        kind: DOCUMENT_KIND.to_string(),
        scenario: scenario.id.clone(),
        lambda: env.lambda().to_string(),
        beta: env.beta().to_string(),
        seed: config.seed,
        episodes: agent_cfg.episodes,
        horizon: agent_cfg.horizon,
        initial_state: agent_cfg.initial_state.as_ref().map(|s| s.ids().to_vec()),
        selected: state.ids().to_vec(),
        hull: closed_ring(&eval.hull),
        value: value.into(),
        enclosed_pixels: eval.sums.pixels,
        zero_pixels_enclosed: eval.sums.zeros,
    })
}

/// Runs one game per λ from a shared start; `InitState::Random` pins the
/// same random subset for every game.
pub fn play_games(config: &RunConfig, scenario: &Scenario, lambdas: &[Rational]) -> Result<Vec<GameOutput>, RunError> {
    lambdas.iter().map(|&l| play(&config.with_lambda(l), scenario)).collect()
}

/// Exact report of one explicit selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub selected: Vec<usize>,
    pub value: ExactValue,
    pub enclosed_pixels: u64,
    pub zero_pixels_enclosed: u64,
    pub hull: Vec<[i64; 2]>,
}

pub fn eval_state(config: &RunConfig, scenario: &Scenario, state: &GameState) -> Result<EvalReport, RunError> {
    let env = scenario.env(config.lambda, config.beta)?;
    state.validate(env.num_vertices())?;
    let eval = env.evaluate(state);
    Ok(EvalReport {
        selected: state.ids().to_vec(),
        value: env.value(state).into(),
        enclosed_pixels: eval.sums.pixels,
        zero_pixels_enclosed: eval.sums.zeros,
        hull: closed_ring(&eval.hull),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDocument {
    pub scenario: String,
    pub lambda: String,
    pub beta: String,
    pub best_state: Vec<usize>,
    pub best_value: ExactValue,
    pub evaluated: u64,
    pub enclosed_pixels: u64,
    pub zero_pixels_enclosed: u64,
    pub hull: Vec<[i64; 2]>,
}

pub fn oracle_report(config: &RunConfig, scenario: &Scenario, max_n: usize) -> Result<OracleDocument, RunError> {
    let env = scenario.env(config.lambda, config.beta)?;
    let r = oracle::enumerate_with(&env, &OracleOptions { max_n, ..OracleOptions::default() })?;
    Ok(OracleDocument {
        scenario: scenario.id.clone(),
        lambda: env.lambda().to_string(),
        beta: env.beta().to_string(),
        best_state: r.best_state.ids().to_vec(),
        best_value: r.best_value.into(),
        evaluated: r.evaluated,
        enclosed_pixels: r.best_sums.pixels,
        zero_pixels_enclosed: r.best_sums.zeros,
        hull: closed_ring(&env.hull(&r.best_state)),
    })
}

pub fn sweep(config: &RunConfig, scenario: &Scenario, lambdas: &[Rational], max_n: usize) -> Result<Vec<SweepRow>, RunError> {
    let env = scenario.env(config.lambda, config.beta)?;
    Ok(oracle::lambda_sweep_with(&env, lambdas, &OracleOptions { max_n, ..OracleOptions::default() })?)
}

/// Comma-separated λ list such as `10,1,1/10`.
pub fn parse_lambda_list(text: &str) -> Result<Vec<Rational>, RunError> {
    let list: Vec<Rational> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(parse_rational)
        .collect::<Result<_, _>>()
        .map_err(RunError::Input)?;
    if list.is_empty() {
        return Err(RunError::Input("empty lambda list".into()));
    }
    Ok(list)
}

/// Heat map in gray (scaled to leave headroom) with hull edges and the
/// selected vertices burned in as pure white.
pub fn render_overlay(map: &HeatMap, hull: &Hull, vertices: &VertexSet, selected: &GameState) -> Vec<u8> {
    let (w, h) = (map.width(), map.height());
    let mut rgb = Vec::with_capacity(w as usize * h as usize * 3);
    for &wp in map.weights() {
        let g = (wp as u32 * 3 / 4) as u8;
        rgb.extend_from_slice(&[g, g, g]);
    }
    let clamp = |p: Point| -> (i64, i64) { (p.x.clamp(0, w as i64 - 1), p.y.clamp(0, h as i64 - 1)) };
    let mut burn = |x: i64, y: i64| {
        if x >= 0 && y >= 0 && x < w as i64 && y < h as i64 {
            let i = (y as usize * w as usize + x as usize) * 3;
            rgb[i..i + 3].copy_from_slice(&[255, 255, 255]);
        }
    };
    let pts = hull.points();
    for i in 0..pts.len() {
        let a = clamp(pts[i]);
        let b = clamp(pts[(i + 1) % pts.len()]);
        for (x, y) in line(a, b) {
            burn(x, y);
        }
    }
    for &id in selected.ids() {
        if let Some(v) = vertices.get(id) {
            let (x, y) = clamp(v.point());
            for (dx, dy) in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)] {
                burn(x + dx, y + dy);
            }
        }
    }
    raster::encode_ppm(w, h, &rgb)
}

/// Bresenham segment, both endpoints included.
fn line((x0, y0): (i64, i64), (x1, y1): (i64, i64)) -> Vec<(i64, i64)> {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    let mut out = Vec::new();
    loop {
        out.push((x, y));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| RunError::Input(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, bytes).map_err(|e| RunError::Input(format!("cannot write {}: {e}", path.display())))
}

/// `prefix` with `suffix` appended to its file name.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `<prefix>.perimeter.json`, `<prefix>.overlay.ppm` and
/// `<prefix>.log.csv`; returns the paths written.
pub fn write_game(prefix: &Path, out: &GameOutput) -> Result<Vec<PathBuf>, RunError> {
    let files = [
        (with_suffix(prefix, ".perimeter.json"), out.document.to_json().into_bytes()),
        (with_suffix(prefix, ".overlay.ppm"), out.overlay_ppm.clone()),
        (with_suffix(prefix, ".log.csv"), out.log.to_csv().into_bytes()),
    ];
    for (p, bytes) in &files {
        write_file(p, bytes)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// File-name tag for a λ, e.g. `lambda-1_10` or `lambda-10`.
pub fn lambda_tag(lambda: &Rational) -> String {
    if lambda.is_integer() {
        format!("lambda-{}", lambda.numer())
    } else {
        format!("lambda-{}_{}", lambda.numer(), lambda.denom())
    }
}
