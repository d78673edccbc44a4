pub mod acceptance;
pub mod arc;
pub mod circlemap;
pub mod config;
pub mod conjugacy;
pub mod crossratio;
pub mod error;
pub mod finegrid;
pub mod num;
pub mod parabolic;
pub mod partition;
pub mod rotation;

pub use error::{Error, Result};
