//! Random Mandelbrot cascades on b-adic cells, pushed forward onto curved
//! arcs, with multifractal predictions and empirical Fourier decay estimates.

pub mod cascade;
pub mod curve;
pub mod error;
pub mod estimators;
pub mod fourier;
pub mod io;
pub mod numeric;
pub mod rng;
pub mod special;
pub mod structure;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
