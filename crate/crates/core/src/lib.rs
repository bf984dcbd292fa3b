//! Numerical symplectic geometry of smooth convex bodies in `R^{2n}`.
//!
//! Coordinates are interleaved as `(p_1, q_1, ..., p_n, q_n)` everywhere.
//! A body is described by a positively 2-homogeneous defining Hamiltonian
//! `H` whose level set `{H = 1}` is the boundary; the characteristic flow is
//! `z' = J grad H(z)`.
//!
//! The crate is organised by subsystem:
//!
//! * [`symplectic`]: `omega`, `J`, the Liouville form, affine symplectic maps
//!   and discrete actions of closed curves.
//! * [`body`]: convex bodies, support functions, polars, `K - K`, volumes.
//! * [`characteristics`]: characteristic flow, closure, planarity and
//!   ellipse fits, orbit surveys.
//! * [`capacity`]: Williamson spectra, EHZ capacity, Viterbo ratio,
//!   Santalo product and the Brunn-Minkowski gap.
//! * [`john`]: planar sections and maximal-area inscribed ellipses.
//! * [`billiard`]: the outer billiard map and its diagnostics.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod billiard;
pub mod body;
pub mod capacity;
pub mod characteristics;
mod error;
pub mod john;
pub mod rng;
pub mod symplectic;

pub use error::{Error, Result};

/// Column vector in `R^{2n}` (or `R^2` for plane coordinates).
pub type Vector = nalgebra::DVector<f64>;
/// Dense real matrix.
pub type Matrix = nalgebra::DMatrix<f64>;

pub use billiard::{OuterBilliardTrajectory, PeriodScan, PeriodVerdict};
pub use body::{BoundaryFrame, ConvexBody, SupportEval, VolumeEstimate, VolumeMethod};
pub use capacity::{CapacityMethod, CapacityReport, WilliamsonSpectrum};
pub use characteristics::{Characteristic, CharacteristicSurvey, EllipseFit, PlaneFit, Planarity};
pub use john::{JohnEllipse, PlanarSection};
pub use symplectic::{AffineSymplecticMap, ClosedPolyline};
