use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geom::PointCloud;

/// Segment capacity used by the normal-vector filter.
pub const DEFAULT_SEGMENT_CAPACITY: usize = 65_536;
/// Grid spacing on x and y, in meters.
pub const DEFAULT_CELL_SIZE: f64 = 0.1;

/// Integer cell index of a coordinate; boundaries belong to the upper cell.
#[inline]
pub(crate) fn cell_index(v: f64, size: f64) -> i64 {
    (v / size).floor() as i64
}

/// 2D grid on x/y; each cell is an unbounded vertical column of points.
#[derive(Debug, Clone)]
pub struct Grid2D {
    pub cell_size: f64,
    /// Columns keyed by `(ix, iy)`, iterated in lexicographic order. Indices
    /// within a column are ascending.
    pub cells: BTreeMap<(i64, i64), Vec<usize>>,
}

impl Grid2D {
    pub fn columns(&self) -> impl Iterator<Item = (&(i64, i64), &Vec<usize>)> {
        self.cells.iter()
    }
}

pub fn build_grid2d(cloud: &PointCloud, cell_size: f64) -> Result<Grid2D> {
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "cell size must be > 0, got {cell_size}"
        )));
    }
    let mut cells: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, p) in cloud.points.iter().enumerate() {
        cells
            .entry((cell_index(p.x, cell_size), cell_index(p.y, cell_size)))
            .or_default()
            .push(i);
    }
    Ok(Grid2D { cell_size, cells })
}

/// A run of whole grid columns processed together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub indices: Vec<usize>,
    pub capacity: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Packs columns, in grid order, into segments of at most `capacity`
/// points. Columns are never split: one larger than `capacity` becomes its
/// own overfull segment.
pub fn form_segments(grid: &Grid2D, capacity: usize) -> Result<Vec<Segment>> {
    if capacity == 0 {
        return Err(Error::InvalidParameter("segment capacity must be > 0".into()));
    }
    let mut segments = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for (_, column) in grid.columns() {
        if !current.is_empty() && current.len() + column.len() > capacity {
            segments.push(Segment {
                indices: std::mem::take(&mut current),
                capacity,
            });
        }
        current.extend_from_slice(column);
    }
    if !current.is_empty() {
        segments.push(Segment {
            indices: current,
            capacity,
        });
    }
    Ok(segments)
}
