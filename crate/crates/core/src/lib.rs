pub mod cli;
pub mod corpus;
pub mod error;
pub mod generator;
pub mod harness;
pub mod model;
pub mod ndmath;
pub mod readability;

pub use error::{Error, Result};
