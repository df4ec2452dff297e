pub mod bound;
pub mod critical;
pub mod dynamics;
pub mod error;
pub mod flowbox;
pub mod flowfield;
pub mod spectrum;

pub use error::{Error, Result};
