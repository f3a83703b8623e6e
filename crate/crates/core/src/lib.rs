//! Perimeter identification over congestion heat maps.
//!
//! The search for a congested region's boundary is played as a
//! finite-horizon game: a state is a set of candidate intersections, a move
//! adds or removes one of them, and the reward is the change in congestion
//! enclosed by the convex hull of the selection, with a per-pixel penalty
//! `λ` for free-flowing area. A tabular Q-learning agent plays the game and
//! an exhaustive oracle certifies the optimum on small vertex sets.

pub mod agent;
pub mod env;
pub mod exact;
pub mod geometry;
pub mod oracle;
pub mod raster;
pub mod run;
pub mod scenario;

pub use agent::{greedy_rollout, q_update, select_action, train, AgentConfig, QTable, TrainingLog};
pub use env::{Action, ActionKind, EnvConfig, EnvError, GameState, PixelSums, VertexSet};
pub use exact::{parse_rational, Rational, Score};
pub use geometry::{convex_hull, enclosed_pixels, hull_area, Hull, Point, Vertex};
pub use oracle::{enumerate_optimal, lambda_sweep, OracleResult};
pub use raster::{HeatMap, PaletteEntry};
pub use scenario::{bundled_scenarios, synth, ScenarioSpec};
