pub mod banded;
pub mod block;
pub mod diffusion;
pub mod eigen;
pub mod error;
pub mod evolve;
pub mod expm;
pub mod grid;
pub mod matrix;
pub mod potential;
pub mod predict;
pub mod simplex;
pub mod spectral;
pub mod state;

pub use error::{Error, Result};
pub use grid::Grid;
pub use matrix::{PNorm, SampleSpec, SquareMatrix};
pub use potential::{ClassificationReport, PotentialField};
pub use predict::{predict, Prediction, Verdict};
pub use state::StateField;
