//! Grid puzzles: object abstraction, the rule DSL and a divide-and-conquer
//! synthesizer that searches transforms and filters separately.

mod dsl;
mod grid;
mod scene;
mod synth;

use thiserror::Error;

use crate::grammar::{GrammarError, ParseError};

pub use dsl::{
    apply_transform, eval_node, others, transform_op, ArcDsl, ArcNode, ArcValue, Axis, AxisKind, Ctx, Dir,
    TransformKind, TransformOp,
};
pub use grid::{ArcTask, Color, Grid, GridPair};
pub use scene::{Abstraction, Attr, Connectivity, Px, Scene, SceneObject, Shape};
pub use synth::*;

#[derive(Debug, Error)]
pub enum ArcError {
    #[error("bad grid: {0}")]
    Grid(String),
    #[error("bad task: {0}")]
    Task(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}
