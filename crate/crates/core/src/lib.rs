//! Parametric finite elements for anisotropic, spatially inhomogeneous curve
//! shortening flow and geodesic curvature flow of closed planar curves.
//!
//! The crate is `no_std` with `alloc`. Enable either the default `std` feature
//! or the `libm` feature for floating point intrinsics.

#![no_std]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("acsf-core needs either the `std` or the `libm` feature");

pub mod aniso;
pub mod error;
pub mod exact;
pub mod geom;
pub mod harness;
pub mod linalg;
pub mod math;
pub mod metric;
pub mod schemes;
pub mod solver;

pub use aniso::{AnisotropyModel, BgnAnisotropy, Convexity, DensityJet, PhiJet};
pub use error::{Error, Result};
pub use exact::ExactSolution;
pub use geom::{DiscreteCurve, ElementField, ErrorNorms, ParametricCurve, PeriodicMesh};
pub use linalg::{Mat2, Vec2};
pub use metric::{MetricField, Splitting};
pub use schemes::{Scheme, SchemeConfig, StepReport};
pub use solver::{CyclicBlockTridiagonal, NewtonSettings};
