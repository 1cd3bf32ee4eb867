use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};

/// Default neighbourhood size.
pub const DEFAULT_K: usize = 50;

/// The K nearest targets of one query, closest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub query: usize,
    pub indices: Vec<usize>,
    pub sq_dists: Vec<f64>,
}

/// Squared Euclidean distance. Every backend goes through this function so
/// distances compare bit-for-bit across backends.
#[inline(always)]
pub(crate) fn sq_dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Bounded candidate list ordered by `(distance, index)`, so equal
/// distances resolve to the lower index.
#[derive(Debug, Clone)]
pub struct KnnHeap {
    k: usize,
    items: Vec<(f64, u32)>,
}

impl KnnHeap {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }

    #[inline]
    pub fn is_full(&self) -> bool {
        self.items.len() >= self.k
    }

    /// Pruning radius: a candidate farther than this cannot enter.
    #[inline]
    pub fn worst(&self) -> f64 {
        if self.is_full() {
            self.items.last().map_or(f64::INFINITY, |e| e.0)
        } else {
            f64::INFINITY
        }
    }

    #[inline]
    pub fn push(&mut self, d: f64, idx: u32) {
        if self.k == 0 {
            return;
        }
        if self.is_full() {
            let last = *self.items.last().expect("full heap");
            if (d, idx) >= last {
                return;
            }
            self.items.pop();
        }
        let pos = self.items.partition_point(|&(ed, ei)| (ed, ei) < (d, idx));
        self.items.insert(pos, (d, idx));
    }

    pub fn items(&self) -> &[(f64, u32)] {
        &self.items
    }
}

/// An exact K-NN index over a fixed target set.
pub trait NeighborSearch: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fills `heap` (cleared first) with the nearest targets of `query`.
    fn search(&self, query: Point3, heap: &mut KnnHeap);
}

/// Exhaustive scan; the reference every other backend must match.
#[derive(Debug, Clone)]
pub struct BruteForce {
    xs: Vec<f64>,
    ys: Vec<f64>,
    zs: Vec<f64>,
}

const CHUNK: usize = 256;

impl BruteForce {
    pub fn new(targets: &[Point3]) -> Self {
        Self {
            xs: targets.iter().map(|p| p.x).collect(),
            ys: targets.iter().map(|p| p.y).collect(),
            zs: targets.iter().map(|p| p.z).collect(),
        }
    }
}

impl NeighborSearch for BruteForce {
    fn len(&self) -> usize {
        self.xs.len()
    }

    fn search(&self, query: Point3, heap: &mut KnnHeap) {
        heap.clear();
        let q = query.to_array();
        let mut buf = [0.0f64; CHUNK];
        let n = self.xs.len();
        let mut start = 0;
        while start < n {
            let end = (start + CHUNK).min(n);
            let (xs, ys, zs) = (&self.xs[start..end], &self.ys[start..end], &self.zs[start..end]);
            for (j, d) in buf[..end - start].iter_mut().enumerate() {
                *d = sq_dist(q, [xs[j], ys[j], zs[j]]);
            }
            // Targets arrive in ascending index order, so once the heap is
            // full only a strictly smaller distance can displace the worst.
            for (j, &d) in buf[..end - start].iter().enumerate() {
                if !heap.is_full() || d < heap.worst() {
                    heap.push(d, (start + j) as u32);
                }
            }
            start = end;
        }
    }
}

pub(crate) fn check_k(k: usize, targets: usize) -> Result<()> {
    if k > targets {
        return Err(Error::InvalidParameter(format!(
            "K = {k} exceeds the {targets} available targets"
        )));
    }
    if targets > u32::MAX as usize {
        return Err(Error::InvalidParameter(format!(
            "{targets} targets exceed the index range"
        )));
    }
    Ok(())
}

/// Runs `index` for every query, in parallel, in query order.
pub fn knn_with(index: &dyn NeighborSearch, queries: &[Point3], k: usize) -> Result<Vec<Neighborhood>> {
    check_k(k, index.len())?;
    Ok(queries
        .par_iter()
        .enumerate()
        .map_init(
            || KnnHeap::new(k),
            |heap, (qi, &q)| {
                index.search(q, heap);
                Neighborhood {
                    query: qi,
                    indices: heap.items().iter().map(|&(_, i)| i as usize).collect(),
                    sq_dists: heap.items().iter().map(|&(d, _)| d).collect(),
                }
            },
        )
        .collect())
}

/// Exact K-NN by exhaustive scan of `targets`.
pub fn knn_bruteforce(queries: &PointCloud, targets: &PointCloud, k: usize) -> Result<Vec<Neighborhood>> {
    check_k(k, targets.len())?;
    knn_with(&BruteForce::new(&targets.points), &queries.points, k)
}

/// Fixed-width neighbour lists for a whole cloud, one row per point.
/// Rows may be shorter than `k` when a segment has fewer points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborTable {
    k: usize,
    indices: Vec<u32>,
    lens: Vec<u32>,
}

impl NeighborTable {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            k,
            indices: vec![0; n * k],
            lens: vec![0; n],
        }
    }

    /// Table for the queries `0..n`; `neighborhoods[i].query` must be `i`.
    pub fn from_neighborhoods(neighborhoods: &[Neighborhood]) -> Result<Self> {
        let k = neighborhoods.iter().map(|n| n.indices.len()).max().unwrap_or(0);
        let mut t = Self::new(neighborhoods.len(), k);
        for (i, nb) in neighborhoods.iter().enumerate() {
            if nb.query != i {
                return Err(Error::InvalidInput(format!(
                    "neighbourhood {i} belongs to query {}",
                    nb.query
                )));
            }
            let row: Vec<u32> = nb.indices.iter().map(|&j| j as u32).collect();
            t.set_row(i, &row);
        }
        Ok(t)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.lens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lens.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let start = i * self.k;
        &self.indices[start..start + self.lens[i] as usize]
    }

    pub fn set_row(&mut self, i: usize, row: &[u32]) {
        assert!(row.len() <= self.k, "row longer than table width");
        let start = i * self.k;
        self.indices[start..start + row.len()].copy_from_slice(row);
        self.lens[i] = row.len() as u32;
    }
}
