//! Geometric primitives: point clouds, rigid transforms, exact spatial
//! search, subsampling, and normal estimation.

pub mod cloud;
pub mod index;
pub mod normals;
pub mod sample;
pub mod transform;

pub use cloud::PointCloud;
pub use index::{Neighbor, SpatialIndex};
pub use normals::estimate_normals;
pub use sample::{
    farthest_point_sample, mean_nn_spacing, random_sample, uniform_sample, SamplingStrategy,
};
pub use transform::RigidTransform;
