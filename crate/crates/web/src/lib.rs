//! Browser bindings: pick a bundled scenario, look at its heat map, certify
//! the optimum for a λ, and train an agent in the page.
//!
//! Everything crosses the boundary as numbers, byte vectors or JSON strings,
//! so the same code runs (and is tested) natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use perimeter_core::oracle::{enumerate_with, OracleOptions};
use perimeter_core::run::{self, closed_ring, load_scenario, InitState, RunConfig, Scenario};
use perimeter_core::{bundled_scenarios, parse_rational, GameState, Rational};

/// Names of the built-in scenarios.
#[wasm_bindgen]
pub fn scenario_names() -> Vec<String> {
    bundled_scenarios().into_iter().map(|s| s.name).collect()
}

#[derive(Serialize)]
struct Solution {
    selected: Vec<usize>,
    hull: Vec<[i64; 2]>,
    value: String,
    value_float: f64,
    enclosed_pixels: u64,
    zero_pixels_enclosed: u64,
    evaluated: u64,
}

#[wasm_bindgen]
pub struct Demo {
    name: String,
    scenario: Scenario,
}

fn lambda(text: &str) -> Result<Rational, String> {
    let l = parse_rational(text)?;
    if l < Rational::from_integer(0) {
        return Err(format!("lambda must be >= 0, got {l}"));
    }
    Ok(l)
}

/// Heat color for a weight: black at 0, then dark red through yellow to white.
fn heat(w: u8, max: u8) -> [u8; 3] {
    if w == 0 {
        return [24, 24, 32];
    }
    let t = w as f32 / max.max(1) as f32;
    let r = (90.0 + 165.0 * (t * 2.0).min(1.0)) as u8;
    let g = (255.0 * (t * 2.0 - 0.6).clamp(0.0, 1.0)) as u8;
    let b = (255.0 * (t * 3.0 - 2.0).clamp(0.0, 1.0)) as u8;
    [r, g, b]
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(name: &str) -> Result<Demo, String> {
        let config = RunConfig::bundled(name);
        let scenario = load_scenario(&config.source, &config.palette).map_err(|e| e.to_string())?;
        Ok(Demo {
            name: name.to_string(),
            scenario,
        })
    }

    pub fn width(&self) -> u32 {
        self.scenario.map.width()
    }

    pub fn height(&self) -> u32 {
        self.scenario.map.height()
    }

    /// Vertex coordinates as a flat `[x0, y0, x1, y1, ...]` list, by id.
    pub fn vertices(&self) -> Vec<i32> {
        self.scenario
            .vertices
            .as_slice()
            .iter()
            .flat_map(|v| [v.x as i32, v.y as i32])
            .collect()
    }

    /// Row-major RGBA image of the heat map, for `ImageData`.
    pub fn heatmap_rgba(&self) -> Vec<u8> {
        let weights = self.scenario.map.weights();
        let max = weights.iter().copied().max().unwrap_or(0);
        weights
            .iter()
            .flat_map(|&w| {
                let [r, g, b] = heat(w, max);
                [r, g, b, 255]
            })
            .collect()
    }

    /// Exhaustive optimum for `lambda_text` (e.g. "1/10"), as JSON.
    pub fn solve(&self, lambda_text: &str) -> Result<String, String> {
        let env = self.scenario.env(lambda(lambda_text)?, None).map_err(|e| e.to_string())?;
        let options = OracleOptions {
            parallel: false,
            ..OracleOptions::default()
        };
        let best = enumerate_with(&env, &options).map_err(|e| e.to_string())?;
        let solution = Solution {
            selected: best.best_state.ids().to_vec(),
            hull: closed_ring(&env.hull(&best.best_state)),
            value: best.best_value.to_string(),
            value_float: perimeter_core::exact::score_to_f64(&best.best_value),
            enclosed_pixels: best.best_sums.pixels,
            zero_pixels_enclosed: best.best_sums.zeros,
            evaluated: best.evaluated,
        };
        serde_json::to_string(&solution).map_err(|e| e.to_string())
    }

    /// Trains an agent with the default α, ε and horizon and returns the
    /// perimeter document as JSON. `episodes = 0` means the default budget;
    /// `pinned_start` draws one random start from the seed for every episode.
    pub fn train(&self, lambda_text: &str, seed: u32, episodes: u32, pinned_start: bool) -> Result<String, String> {
        let config = RunConfig {
            lambda: lambda(lambda_text)?,
            seed: seed as u64,
            episodes: (episodes > 0).then_some(episodes as usize),
            init_state: if pinned_start { InitState::Random } else { InitState::Unset },
            ..RunConfig::bundled(&self.name)
        };
        let out = run::play(&config, &self.scenario).map_err(|e| e.to_string())?;
        Ok(out.document.to_json())
    }

    /// Exact value of a hand-picked selection, as "num/den".
    pub fn value_of(&self, lambda_text: &str, ids: Vec<u32>) -> Result<String, String> {
        let env = self.scenario.env(lambda(lambda_text)?, None).map_err(|e| e.to_string())?;
        let state = GameState::from_ids(ids.into_iter().map(|i| i as usize));
        state.validate(env.num_vertices()).map_err(|e| e.to_string())?;
        Ok(env.value(&state).to_string())
    }
}
