//! Command-line and HTTP front ends for the `ewqbaf` library.

pub mod server;
pub mod store;
pub mod views;
