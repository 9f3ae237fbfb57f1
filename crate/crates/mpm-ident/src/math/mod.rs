//! Shared numeric kernel: dual scalars, small dense linear algebra, SVD.

pub mod linalg;
pub mod scalar;
pub mod svd;

pub use linalg::{rotation_from_axis_angle, Mat3, Vec2, Vec3};
pub use scalar::{Scalar, MAX_TANGENTS};
pub use svd::{polar_rotation, svd3, Svd3};
