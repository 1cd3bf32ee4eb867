use rustc_hash::FxHashMap;

use serde::{Deserialize, Serialize};

use super::grid::cell_index;
use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};

/// Voxel edge length, in meters.
pub const DEFAULT_VOXEL_SIZE: f64 = 0.10;

/// Integer voxel coordinate `(ix, iy, iz)`.
pub type VoxelCoord = (i64, i64, i64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VoxelLabel {
    Unknown,
    FlatCandidate,
    Ground,
    NonGround,
}

/// Points of one occupied voxel and their extent.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelCell {
    pub indices: Vec<usize>,
    pub min: Point3,
    pub max: Point3,
    /// `max.z - min.z`.
    pub z_range: f64,
    /// Per-axis midpoint of `min` and `max`.
    pub centroid: Point3,
    pub label: VoxelLabel,
}

impl VoxelCell {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Sparse voxelization anchored at the world origin. Cells are stored in
/// lexicographic coordinate order.
#[derive(Debug, Clone)]
pub struct VoxelGrid {
    pub voxel_size: f64,
    coords: Vec<VoxelCoord>,
    cells: Vec<VoxelCell>,
    lookup: FxHashMap<VoxelCoord, usize>,
}

/// Midpoint of the per-axis min and max of the given points.
pub fn voxel_centroid(points: &[Point3]) -> Option<Point3> {
    let (min, max) = bounds(points)?;
    Some(midpoint(min, max))
}

fn midpoint(min: Point3, max: Point3) -> Point3 {
    Point3::new(
        (max.x + min.x) / 2.0,
        (max.y + min.y) / 2.0,
        (max.z + min.z) / 2.0,
    )
}

fn bounds(points: &[Point3]) -> Option<(Point3, Point3)> {
    let first = *points.first()?;
    Some(points.iter().fold((first, first), |(lo, hi), p| {
        (
            Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z)),
            Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z)),
        )
    }))
}

pub fn build_voxelgrid(cloud: &PointCloud, voxel_size: f64) -> Result<VoxelGrid> {
    if !(voxel_size > 0.0 && voxel_size.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "voxel size must be > 0, got {voxel_size}"
        )));
    }
    let mut keyed: Vec<(VoxelCoord, usize)> = cloud
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            (
                (
                    cell_index(p.x, voxel_size),
                    cell_index(p.y, voxel_size),
                    cell_index(p.z, voxel_size),
                ),
                i,
            )
        })
        .collect();
    keyed.sort_unstable();

    let mut coords = Vec::new();
    let mut cells = Vec::new();
    for run in keyed.chunk_by(|a, b| a.0 == b.0) {
        let indices: Vec<usize> = run.iter().map(|e| e.1).collect();
        let pts: Vec<Point3> = indices.iter().map(|&i| cloud.points[i]).collect();
        let (min, max) = bounds(&pts).expect("non-empty run");
        coords.push(run[0].0);
        cells.push(VoxelCell {
            indices,
            min,
            max,
            z_range: max.z - min.z,
            centroid: midpoint(min, max),
            label: VoxelLabel::Unknown,
        });
    }
    let lookup = coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    Ok(VoxelGrid {
        voxel_size,
        coords,
        cells,
        lookup,
    })
}

/// The 26 offsets in `{-1,0,1}³ \ {0}`, lexicographic.
pub(crate) fn offsets26() -> impl Iterator<Item = (i64, i64, i64)> {
    (-1..=1).flat_map(|dx| {
        (-1..=1).flat_map(move |dy| {
            (-1..=1)
                .map(move |dz| (dx, dy, dz))
                .filter(|&o| o != (0, 0, 0))
        })
    })
}

impl VoxelGrid {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, coord: VoxelCoord) -> Option<&VoxelCell> {
        self.lookup.get(&coord).map(|&i| &self.cells[i])
    }

    pub fn index_of(&self, coord: VoxelCoord) -> Option<usize> {
        self.lookup.get(&coord).copied()
    }

    pub fn coord(&self, i: usize) -> VoxelCoord {
        self.coords[i]
    }

    pub fn cell(&self, i: usize) -> &VoxelCell {
        &self.cells[i]
    }

    pub fn cells(&self) -> &[VoxelCell] {
        &self.cells
    }

    /// `(coord, cell)` pairs in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (VoxelCoord, &VoxelCell)> {
        self.coords.iter().copied().zip(self.cells.iter())
    }

    pub fn labels(&self) -> Vec<VoxelLabel> {
        self.cells.iter().map(|c| c.label).collect()
    }

    pub fn set_labels(&mut self, labels: &[VoxelLabel]) {
        assert_eq!(labels.len(), self.cells.len());
        for (c, &l) in self.cells.iter_mut().zip(labels) {
            c.label = l;
        }
    }

    /// Storage indices of the occupied 26-neighbours of voxel `i`.
    pub fn neighbor_indices(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y, z) = self.coords[i];
        offsets26().filter_map(move |(dx, dy, dz)| self.index_of((x + dx, y + dy, z + dz)))
    }
}

/// Occupied voxels among the 26 surrounding `coord`.
pub fn neighbors26(grid: &VoxelGrid, coord: VoxelCoord) -> Vec<VoxelCoord> {
    let (x, y, z) = coord;
    offsets26()
        .map(|(dx, dy, dz)| (x + dx, y + dy, z + dz))
        .filter(|c| grid.lookup.contains_key(c))
        .collect()
}
