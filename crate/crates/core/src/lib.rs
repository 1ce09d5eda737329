//! Elliptic difference operators on finite and infinite weighted graphs.
//!
//! Graphs are either finite or generated lazily from a family (lattices,
//! regular trees, custom neighbor rules) and grown on demand. On top of the
//! operator `L = A + W` the crate provides Dirichlet ground states and
//! exhaustion limits, isoperimetric bounds, the heat semigroup with
//! certified truncation errors, ground-state transforms, and checkers for
//! the maximum principle and Harnack inequalities.

pub mod error;
pub mod graph;
pub mod heat;
pub mod io;
pub mod isoperimetry;
pub mod operator;
pub mod oracle;
pub mod random;
pub mod sparse;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{BoundsScope, Family, GraphBounds, Region, Site, VertexId, WeightRule, WeightedGraph};
pub use heat::{Certificate, GroundState, GroundStateTransform, HeatKernelSlice, HeatSolution, InitialData};
pub use isoperimetry::{IsoperimetricReport, SubsetFamily};
pub use operator::{EdgeFunction, EllipticOperator, OperatorBounds, Potential, VertexFunction};
pub use spectral::{DirichletEigenpair, GroundStateApprox, SolverOptions};
pub use verify::{CheckOptions, ViolationReport};
