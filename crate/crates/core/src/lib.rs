//! Simulation and verification toolkit for random-fractal branching point
//! processes.
//!
//! * [`branching`]: the continuous-time branching random walk in `R^d`.
//! * [`agora`]: the discrete smooth and hard-threshold agoraphobic processes.
//! * [`diagnostics`]: Monte Carlo checks of the exact tree identities.
//! * [`dimension`]: box-counting, correlation-sum and energy estimators.
//! * [`io`], [`svg`], [`cli`]: file formats, plots and the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agora;
pub mod branching;
pub mod cli;
pub mod diagnostics;
pub mod dimension;
pub mod error;
pub mod index;
pub mod io;
pub mod profiles;
pub mod sampling;
pub mod stats;
pub mod svg;

pub use agora::{AgoraConfig, AgoraModel, PointTree};
pub use branching::{BranchingTree, Budget, GrowthTrace};
pub use dimension::{DimFit, DimMethod};
pub use error::{Error, Result};
pub use profiles::{ProcessParams, SpatialProfile};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
