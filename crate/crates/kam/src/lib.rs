pub mod blocks;
pub mod commands;
pub mod config;
pub mod error;
pub mod fit;
pub mod homological;
pub mod iteration;
pub mod jet;
pub mod lattice;
pub mod measure;
pub mod model;
pub mod normal_form;
pub mod schedule;
pub mod series;
pub mod step;
pub mod structure;
pub mod torus;

pub use error::{KamError, Result};
pub use jet::ParamJet;
