mod field;
mod matrix;

pub use field::{is_prime, Field, DEFAULT_MODULUS};
pub(crate) use matrix::{axpy, rank_in_place, rref_in_place};
pub use matrix::{parse_element, FMatrix, FVector};
