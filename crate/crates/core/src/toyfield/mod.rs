//! Synthetic rotation-field experiment on a planar grid of cells.
//!
//! A scene labels each grid cell with the grasp poses valid there: a flip pair
//! on a long box, any yaw at the center of a flat cylinder, or nothing. A small
//! tanh network maps cell coordinates to one of three rotation
//! parameterizations and is trained on those labels; the resulting field is
//! then scored for consistency and confidence structure.

pub mod model;
pub mod report;
pub mod scene;
pub mod train;

pub use model::{RepKind, TinyModel};
pub use report::{
    evaluate_field, field_csv, predict_field, summarize, CellPrediction, ConsistencyReport,
};
pub use scene::{box_grasp, gen_scene, yaw_grasp, Cell, CellLabel, FieldScene, SceneConfig};
pub use train::{derive_seed, train_toy, train_toy_with, TrainOptions, TrainOutcome};
