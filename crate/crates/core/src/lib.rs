//! Numerical machinery for the two-dimensional inverse boundary value problem
//! `Delta u + q u = 0`: Cauchy transforms on a uniform grid, complex geometric
//! optics (CGO) solutions with a quadratic phase, the stationary-phase operator,
//! finite-difference Dirichlet-to-Neumann maps and the reconstruction of `q`
//! from boundary data.
//!
//! Runnable examples, one per capability (`cargo run --release --example <name>`):
//!
//! - `cauchy_transform`: disk identity, left-inverse defect, operator-norm probes
//! - `stationary_phase`: error rate against the Sobolev bound, multiplier vs quadrature
//! - `cgo_solutions`: Neumann series decay, remainder rates, contraction threshold
//! - `dn_map`: Dirichlet solves, DN eigenmodes, `DNMP` round trip
//! - `reconstruction`: the reconstruction identity term by term, reconstruction from DN data
//! - `stability_curve`: data distance against the logarithmic bound
//! - `uniqueness_sweep`: reconstruction error over the `tau` grid

pub mod cauchy;
pub mod cgo;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod fit;
pub mod forward;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod phase;
pub mod potentials;
pub mod recon;

pub use error::{Error, Result};
pub use grid::{make_grid, Domain, Field, Grid2D, Potential, Support, C64};
