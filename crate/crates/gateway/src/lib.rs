pub mod api;
pub mod cli;
pub mod error;
pub mod store;
pub mod wire;

pub use error::{ApiError, ErrorCode};
pub use store::{Store, StoreConfig};
