//! Synthetic heat maps and candidate vertex layouts.
//!
//! Congestion is modeled as cone-shaped blobs with compact support, so the
//! space between blobs is exactly zero-weight and the free-flow penalty has
//! something to bite on.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::VertexSet;
use crate::geometry::Vertex;
use crate::raster::HeatMap;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("unknown bundled scenario `{0}` (available: core, fork, uniform)")]
    Unknown(String),
    #[error("scenario file: {0}")]
    Parse(String),
}

/// Linear-falloff congestion blob centered on pixel `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub x: u32,
    pub y: u32,
    pub radius: f64,
    pub peak: u8,
}

impl Blob {
    /// `peak · max(0, 1 − dist/radius)` at pixel `(px, py)`, unrounded.
    pub fn intensity(&self, px: u32, py: u32) -> f64 {
        let dx = px as f64 - self.x as f64;
        let dy = py as f64 - self.y as f64;
        let d = (dx * dx + dy * dy).sqrt();
        self.peak as f64 * (1.0 - d / self.radius).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VertexLayout {
    /// `rows × cols` lattice spanning the frame inset by `margin` pixels,
    /// ids assigned row-major.
    Grid { rows: u32, cols: u32, margin: u32 },
    Explicit { points: Vec<[i64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub blobs: Vec<Blob>,
    pub layout: VertexLayout,
    /// Fraction of zero pixels bumped to weight 1, in `[0, 1)`.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut bad = Vec::new();
        if self.width == 0 || self.height == 0 {
            bad.push(format!("width/height must be >= 1, got {}x{}", self.width, self.height));
        }
        for (i, b) in self.blobs.iter().enumerate() {
            if b.x >= self.width || b.y >= self.height {
                bad.push(format!("blobs[{i}] center ({}, {}) outside frame", b.x, b.y));
            }
            if !(b.radius > 0.0 && b.radius.is_finite()) {
                bad.push(format!("blobs[{i}].radius must be positive, got {}", b.radius));
            }
            if b.peak == 0 {
                bad.push(format!("blobs[{i}].peak must be in [1, 255]"));
            }
        }
        if !(0.0..1.0).contains(&self.noise) {
            bad.push(format!("noise must be in [0, 1), got {}", self.noise));
        }
        match &self.layout {
            VertexLayout::Grid { rows, cols, margin } => {
                if *rows == 0 || *cols == 0 {
                    bad.push(format!("layout grid must be at least 1x1, got {rows}x{cols}"));
                }
                if 2 * margin > self.width || 2 * margin > self.height {
                    bad.push(format!("layout margin {margin} leaves no room in the frame"));
                }
            }
            VertexLayout::Explicit { points } => {
                for (i, [x, y]) in points.iter().enumerate() {
                    if *x < 0 || *y < 0 || *x > self.width as i64 || *y > self.height as i64 {
                        bad.push(format!("layout point {i} ({x}, {y}) outside frame"));
                    }
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(bad))
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario specs always serialize")
    }
}

fn lattice(count: u32, extent: u32, margin: u32) -> Vec<i64> {
    if count == 1 {
        return vec![extent as i64 / 2];
    }
    let span = (extent - 2 * margin) as i64;
    (0..count as i64)
        .map(|i| margin as i64 + (i * span + (count as i64 - 1) / 2) / (count as i64 - 1))
        .collect()
}

/// Heat map and vertex set for a scenario.
pub fn synth(spec: &ScenarioSpec) -> Result<(HeatMap, VertexSet), ScenarioError> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut weights = Vec::with_capacity(w as usize * h as usize);
    for y in 0..h {
        for x in 0..w {
            let peak = spec
                .blobs
                .iter()
                .map(|b| b.intensity(x, y))
                .fold(0.0, f64::max);
            weights.push(peak.round().min(255.0) as u8);
        }
    }
    if spec.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for wp in weights.iter_mut().filter(|wp| **wp == 0) {
            if rng.random_bool(spec.noise) {
                *wp = 1;
            }
        }
    }
    let map = HeatMap::new(w, h, weights).expect("dimensions validated");

    let vertices = match &spec.layout {
        VertexLayout::Grid { rows, cols, margin } => {
            let xs = lattice(*cols, w, *margin);
            let ys = lattice(*rows, h, *margin);
            ys.iter()
                .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
                .enumerate()
                .map(|(id, (x, y))| Vertex { id, x, y })
                .collect()
        }
        VertexLayout::Explicit { points } => points
            .iter()
            .enumerate()
            .map(|(id, &[x, y])| Vertex { id, x, y })
            .collect(),
    };
    let vertices = VertexSet::new(vertices).expect("ids assigned densely");
    Ok((map, vertices))
}

/// Convenience wrapper returning shareable handles.
pub fn synth_shared(spec: &ScenarioSpec) -> Result<(Arc<HeatMap>, Arc<VertexSet>), ScenarioError> {
    let (m, v) = synth(spec)?;
    Ok((Arc::new(m), Arc::new(v)))
}

/// Built-in scenarios: `core`, `fork` and `uniform`.
pub fn bundled_scenarios() -> Vec<ScenarioSpec> {
    vec![
        ScenarioSpec {
            name: "core".into(),
            width: 32,
            height: 32,
            blobs: vec![Blob {
                x: 16,
                y: 16,
                radius: 11.0,
                peak: 255,
            }],
            layout: VertexLayout::Grid {
                rows: 3,
                cols: 3,
                margin: 6,
            },
            noise: 0.0,
            seed: 1,
        },
        ScenarioSpec {
            name: "fork".into(),
            width: 40,
            height: 40,
            // faint fork in the corner the core leaves empty
            blobs: vec![
                Blob {
                    x: 16,
                    y: 20,
                    radius: 17.0,
                    peak: 255,
                },
                Blob {
                    x: 35,
                    y: 5,
                    radius: 3.0,
                    peak: 4,
                },
            ],
            layout: VertexLayout::Grid {
                rows: 4,
                cols: 4,
                margin: 4,
            },
            noise: 0.0,
            seed: 2,
        },
        ScenarioSpec {
            name: "uniform".into(),
            width: 16,
            height: 16,
            // wide enough that every pixel rounds to 1
            blobs: vec![Blob {
                x: 8,
                y: 8,
                radius: 64.0,
                peak: 1,
            }],
            layout: VertexLayout::Grid {
                rows: 3,
                cols: 3,
                margin: 0,
            },
            noise: 0.0,
            seed: 3,
        },
    ]
}

pub fn bundled(name: &str) -> Result<ScenarioSpec, ScenarioError> {
    bundled_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| ScenarioError::Unknown(name.to_string()))
}
