pub mod bias;
pub mod cluster;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod label;
pub mod pipeline;
pub mod resources;
pub mod sentiment;
pub mod synthetic;
pub mod validation;

pub use error::{Error, Result};
