//! Functions of constant geodesic X-ray transform on Euclidean balls and on
//! rotationally symmetric Herglotz manifolds, together with the numerical
//! tests that characterize them: umbilical boundaries, the disc
//! characterization in the plane, and boundary asymptotics.
//!
//! Batch operations take an [`Execution`]; with the default `parallel`
//! feature they run on rayon's thread pool.

pub mod abel;
pub mod batch;
pub mod boundary;
pub mod error;
pub mod expr;
pub mod metric;
pub mod ode;
pub mod quad;
pub mod spline;
pub mod xray2d;

pub use abel::{abel_forward, abel_inverse, arcsin_identity_check, synthesize_constant, RadialDensity};
pub use batch::Execution;
pub use boundary::{
    boundary_value_w, estimate_ii_chords, short_geodesic_integral, slice_umbilicity_test, BlowupDensity,
    ConvexBody, ImplicitBody,
};
pub use error::{Error, Result};
pub use metric::{
    boundary_distance, herglotz_check, trace_geodesic, turning_radius, RadialProfile, TracedGeodesic,
};
pub use xray2d::{ball_density, disc_test, line_integral, LineParam, SupportFunction};
