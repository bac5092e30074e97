//! Representations of the q-deformed Cuntz-Toeplitz relations
//! `A_i^* A_i = 1 + q A_i A_i^*`, `A_i^* A_j = 0` for `i != j`.

pub mod analysis;
pub mod classify;
pub mod rep;
pub mod wick;
pub mod words;
