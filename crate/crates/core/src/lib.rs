pub mod cli;
pub mod dynamics;
pub mod error;
pub mod kgmodel;
pub mod normalform;
pub mod polyalg;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
