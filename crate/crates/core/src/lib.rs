pub mod assignment;
pub mod bounds;
pub mod codec;
pub mod combin;
pub mod error;
pub mod json;
pub mod linalg;
pub mod scheme;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
pub use linalg::{FMatrix, FVector, Field};
