//! Spatial organization of clouds: the x/y column grid and its segments,
//! exact K-NN (exhaustive scan and kd-tree) and 3D voxelization.

mod grid;
mod kdtree;
mod knn;
mod voxel;

pub use grid::{
    build_grid2d, form_segments, Grid2D, Segment, DEFAULT_CELL_SIZE, DEFAULT_SEGMENT_CAPACITY,
};
pub use kdtree::{build_kdtree, knn_kdtree, KdTree};
pub use knn::{
    knn_bruteforce, knn_with, BruteForce, KnnHeap, NeighborSearch, NeighborTable, Neighborhood,
    DEFAULT_K,
};
pub use voxel::{
    build_voxelgrid, neighbors26, voxel_centroid, VoxelCell, VoxelCoord, VoxelGrid, VoxelLabel,
    DEFAULT_VOXEL_SIZE,
};
