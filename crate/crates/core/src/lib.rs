//! Shape optimization of a closed cooling contour in two-dimensional
//! steady heat conduction.
//!
//! The temperature is split into a Chebyshev-collocated particular part on
//! the square and a single-layer potential carried by the contour. Direct
//! and adjoint problems share one block operator; the shape gradient is
//! assembled from one-sided traces, smoothed in H¹, and fed to a
//! Polak–Ribière descent with Brent line search.

pub mod error;
pub mod fourier;
pub mod geometry;
pub mod optimize;
pub mod gradient;
pub mod io;
pub mod poisson;
pub mod presets;
pub mod quadrature;
pub mod potential;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use geometry::{resample_equal_arclength, Contour, ContourFunction, Point};
pub use spectral::{ChebGrid, GridField, Rect};
