//! Discrete branched transport on polygonal traffic plans.
//!
//! A traffic plan is a finite list of polygonal curves carrying mass. This
//! crate computes its overlay network and multiplicities, α-energies, induced
//! flows, slices, cancellations and Lagrangian cycles, removes quasi-cycles
//! with a certified energy bound, finds optimal plans for small atomic
//! marginals by exhaustive topology search, and runs discretization
//! experiments on the optimal energies.

mod arrangement;
pub mod cycles;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod measure;
pub mod optimize;
pub mod plan;
pub mod slicing;
pub mod stability;
pub mod transport;

pub use error::{Error, Result};
pub use flow::{EulerFlow, GoodDecompositionReport};
pub use geometry::{Cone, CrossingResult, Point, PolyCurve, Sidedness};
pub use measure::AtomicMeasure;
pub use plan::{Network, Region, TrafficPlan, WeightedCurve};
pub use slicing::{SliceFunction, SliceResult};
