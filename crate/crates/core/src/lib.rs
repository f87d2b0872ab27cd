//! Numerical toolkit for the set of full-order output-feedback controllers
//! that meet an H∞ bound: membership and norm queries, bounded-real
//! certificates, the convex lift and its reconstruction map, LMI synthesis,
//! and explicit paths within and between the components of the set.

pub mod analysis;
pub mod certify;
pub mod error;
pub mod homotopy;
pub mod io;
pub mod liftmap;
pub mod lmi;
pub mod model;
pub mod numerics;
pub mod scan;

pub use analysis::{hinf_norm, in_kgamma, in_lgamma, NormResult};
pub use certify::{H2Certificate, HinfCertificate};
pub use error::{Error, ErrorClass, Result};
pub use homotopy::{PathOptions, PathResult, PathStatus};
pub use io::JsonDoc;
pub use liftmap::{ComponentSign, FPoint, LiftedPoint};
pub use model::{ClosedLoop, Controller, Plant, PlantDims};
pub use numerics::{Mat, SymMatrix, Tolerances};
pub use scan::{ScanGrid, ScanSpec};
