pub mod error;
pub mod intervals;
pub mod model;
pub mod offline;
pub mod online;
pub mod report;
pub mod schedule;
pub mod sim;
pub mod time;
pub mod verify;

pub use error::{Error, Result};
