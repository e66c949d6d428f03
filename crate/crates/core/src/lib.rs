//! Numerical tools for natural maps and volumes of representations into
//! hyperbolic isometry groups.

pub mod barycenter;
pub mod error;
pub mod groups;
pub mod hypgeo;
pub mod natural_map;
pub mod volume;

pub use barycenter::{
    AtomicBoundaryMeasure, BarycenterKind, BarycenterResult, Measure, SolverStats, VisualMixture,
};
pub use error::{Error, Result};
pub use groups::{CuspData, OrbitEntry, RepresentationData, WeightedOrbit, Word};
pub use hypgeo::{
    BoundaryPoint, Classification, Endpoint, FixedSet, FixedSetKind, GeodesicRay, Isometry,
    IsometryKind, Point,
};
pub use natural_map::{NaturalMapConfig, NaturalMapEvaluation, RayDiagnostics};
pub use volume::{DevelopingMapSpec, FacePairing, FundamentalDomain, VolumeReport};
