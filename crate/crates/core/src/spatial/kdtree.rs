use super::knn::{check_k, knn_with, sq_dist, KnnHeap, Neighborhood, NeighborSearch};
use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Kind {
    Leaf { start: u32, end: u32 },
    Inner { axis: u8, split: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone)]
struct Node {
    lo: [f64; 3],
    hi: [f64; 3],
    kind: Kind,
}

/// Balanced kd-tree: median split on the axis of largest extent, leaves of
/// at most 16 points. Immutable once built.
#[derive(Debug, Clone)]
pub struct KdTree {
    nodes: Vec<Node>,
    /// Points in leaf order.
    points: Vec<[f64; 3]>,
    /// Original index of each entry of `points`.
    ids: Vec<u32>,
}

pub fn build_kdtree(targets: &PointCloud) -> Result<KdTree> {
    KdTree::new(&targets.points)
}

impl KdTree {
    pub fn new(targets: &[Point3]) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptyInput);
        }
        check_k(0, targets.len())?;
        let mut order: Vec<u32> = (0..targets.len() as u32).collect();
        let mut tree = Self {
            nodes: Vec::with_capacity(2 * targets.len() / LEAF_SIZE + 1),
            points: Vec::new(),
            ids: Vec::new(),
        };
        tree.build(targets, &mut order, 0);
        tree.points = order.iter().map(|&i| targets[i as usize].to_array()).collect();
        tree.ids = order;
        Ok(tree)
    }

    fn build(&mut self, pts: &[Point3], order: &mut [u32], offset: usize) -> u32 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in order.iter() {
            let p = pts[i as usize].to_array();
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let id = self.nodes.len() as u32;
        let n = order.len();
        let extent = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
        if n <= LEAF_SIZE {
            self.nodes.push(Node {
                lo,
                hi,
                kind: Kind::Leaf {
                    start: offset as u32,
                    end: (offset + n) as u32,
                },
            });
            return id;
        }
        let axis = (0..3)
            .max_by(|&a, &b| extent[a].total_cmp(&extent[b]).then(b.cmp(&a)))
            .expect("three axes");
        let mid = n / 2;
        let key = |i: &u32| (pts[*i as usize].axis(axis), *i);
        order.select_nth_unstable_by(mid, |a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1))
        });
        let split = pts[order[mid] as usize].axis(axis);
        self.nodes.push(Node {
            lo,
            hi,
            kind: Kind::Leaf { start: 0, end: 0 },
        });
        let (left_part, right_part) = order.split_at_mut(mid);
        let left = self.build(pts, left_part, offset);
        let right = self.build(pts, right_part, offset + mid);
        self.nodes[id as usize].kind = Kind::Inner {
            axis: axis as u8,
            split,
            left,
            right,
        };
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Squared distance from `q` to the node's bounding box, summed in the
    /// same axis order as [`sq_dist`] so it never exceeds the distance to a
    /// point inside the box after rounding.
    #[inline]
    fn box_dist(node: &Node, q: [f64; 3]) -> f64 {
        let gap = |a: usize| {
            if q[a] < node.lo[a] {
                node.lo[a] - q[a]
            } else if q[a] > node.hi[a] {
                q[a] - node.hi[a]
            } else {
                0.0
            }
        };
        let (gx, gy, gz) = (gap(0), gap(1), gap(2));
        gx * gx + gy * gy + gz * gz
    }

    fn visit(&self, node: u32, q: [f64; 3], heap: &mut KnnHeap) {
        let n = &self.nodes[node as usize];
        match n.kind {
            Kind::Leaf { start, end } => {
                for j in start as usize..end as usize {
                    let d = sq_dist(q, self.points[j]);
                    heap.push(d, self.ids[j]);
                }
            }
            Kind::Inner { axis, split, left, right } => {
                let (near, far) = if q[axis as usize] < split {
                    (left, right)
                } else {
                    (right, left)
                };
                // `<=`: a tie at the pruning radius may still win on index.
                if Self::box_dist(&self.nodes[near as usize], q) <= heap.worst() {
                    self.visit(near, q, heap);
                }
                if Self::box_dist(&self.nodes[far as usize], q) <= heap.worst() {
                    self.visit(far, q, heap);
                }
            }
        }
    }
}

impl NeighborSearch for KdTree {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn search(&self, query: Point3, heap: &mut KnnHeap) {
        heap.clear();
        self.visit(0, query.to_array(), heap);
    }
}

/// Exact K-NN through the tree; identical to
/// [`knn_bruteforce`](super::knn_bruteforce) including tie order.
pub fn knn_kdtree(tree: &KdTree, queries: &PointCloud, k: usize) -> Result<Vec<Neighborhood>> {
    knn_with(tree, &queries.points, k)
}
