//! Ground filter based on per-point normal vectors.
//!
//! Stages, in order: logistic standardization, x/y column grid packed into
//! segments, segment-local K-NN, PCA of each neighbourhood (normal, eigenvalue
//! shape), verticality/shape test, one synchronous Naïve Bayes vote over the
//! same neighbourhoods, and a RANSAC ground plane that removes points off the
//! plane. Metric thresholds are always evaluated on the original coordinates.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{
    self, eig3_symmetric, fit_plane_least_squares, fit_plane_ransac, Label, Mat3, Plane, Point3,
    PointCloud,
};
use crate::pipeline::{ClassificationResult, StageSnapshot, StageTimer};
use crate::spatial::{
    build_grid2d, form_segments, BruteForce, KdTree, KnnHeap, NeighborSearch, NeighborTable,
    Segment, DEFAULT_CELL_SIZE, DEFAULT_K, DEFAULT_SEGMENT_CAPACITY,
};

/// Ground-plane distance threshold, in meters.
pub const DEFAULT_PLANE_THRESHOLD: f64 = 0.10;
pub const DEFAULT_RANSAC_ITERATIONS: usize = 1000;
/// Accepted angle between the normal and the horizontal plane, in degrees.
pub const DEFAULT_ANGLE_WINDOW: (f64, f64) = (80.0, 100.0);

/// Eigenvalues at or below this (m²) mean the neighbourhood is a single
/// repeated point.
const DEGENERATE_EIGENVALUE: f64 = 1e-12;

/// Slack added to the μ ± σ band so that exactly coplanar points, whose
/// distances differ from μ only by rounding, stay inside it.
const BAND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    Linear,
    Flat,
    Volumetric,
}

/// PCA summary of one neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSurface {
    /// Eigenvector of the smallest eigenvalue, oriented so `z >= 0`.
    pub normal: Point3,
    /// `λj / (λ1 + λ2 + λ3)`, descending.
    pub normalized_eigenvalues: [f64; 3],
    pub shape: Shape,
    /// Angle between the normal and the z axis, degrees in `[0, 90]`.
    pub angle_from_vertical: f64,
}

impl LocalSurface {
    fn degenerate() -> Self {
        Self {
            normal: Point3::new(0.0, 0.0, 1.0),
            normalized_eigenvalues: [1.0 / 3.0; 3],
            shape: Shape::Volumetric,
            angle_from_vertical: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KnnBackend {
    BruteForce,
    KdTree,
}

impl FromStr for KnnBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" | "bruteforce" | "brute-force" => Ok(Self::BruteForce),
            "kdtree" | "kd-tree" => Ok(Self::KdTree),
            other => Err(Error::InvalidParameter(format!(
                "unknown KNN backend {other:?} (expected brute or kdtree)"
            ))),
        }
    }
}

/// Coordinates used for the neighbour search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum NeighborSpace {
    /// Original coordinates.
    #[default]
    Metric,
    /// Logistic-standardized coordinates. Per-axis scaling makes the search
    /// metric anisotropic, so neighbourhoods stretch along the axis with the
    /// largest spread.
    Standardized,
}

impl FromStr for NeighborSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "metric" => Ok(Self::Metric),
            "standardized" => Ok(Self::Standardized),
            other => Err(Error::InvalidParameter(format!(
                "unknown neighbour space {other:?} (expected metric or standardized)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFilterConfig {
    pub k: usize,
    /// Degrees; `(80, 100)` accepts normals within 10° of vertical.
    pub angle_window: (f64, f64),
    /// Neighbours used by the Bayes vote: the closest `bayes_k` of each
    /// PCA neighbourhood.
    pub bayes_k: usize,
    pub plane_threshold: f64,
    pub ransac_iterations: usize,
    pub seed: u64,
    /// Logistic spread `r`.
    pub spread: f64,
    pub cell_size: f64,
    pub segment_capacity: usize,
    pub neighbor_space: NeighborSpace,
}

impl Default for NormalFilterConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            angle_window: DEFAULT_ANGLE_WINDOW,
            bayes_k: DEFAULT_K,
            plane_threshold: DEFAULT_PLANE_THRESHOLD,
            ransac_iterations: DEFAULT_RANSAC_ITERATIONS,
            seed: 0,
            spread: 1.0,
            cell_size: DEFAULT_CELL_SIZE,
            segment_capacity: DEFAULT_SEGMENT_CAPACITY,
            neighbor_space: NeighborSpace::Metric,
        }
    }
}

impl NormalFilterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.k < 3 {
            return bad(format!("K must be >= 3, got {}", self.k));
        }
        if self.bayes_k == 0 || self.bayes_k > self.k {
            return bad(format!("bayes K must be in 1..={}, got {}", self.k, self.bayes_k));
        }
        let (lo, hi) = self.angle_window;
        if !(0.0..=180.0).contains(&lo) || !(0.0..=180.0).contains(&hi) || lo >= hi {
            return bad(format!("angle window [{lo}, {hi}] must satisfy 0 <= lo < hi <= 180"));
        }
        for (name, v) in [
            ("plane threshold", self.plane_threshold),
            ("spread r", self.spread),
            ("cell size", self.cell_size),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        if self.segment_capacity == 0 || self.ransac_iterations == 0 {
            return bad("segment capacity and RANSAC iterations must be > 0".into());
        }
        Ok(())
    }
}

/// Neighbourhood covariance `(1/K) Σ q qᵀ − m mᵀ`.
pub fn neighborhood_covariance(points: &[Point3]) -> Result<Mat3> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "covariance needs at least 2 points, got {}",
            points.len()
        )));
    }
    Ok(geom::covariance(points))
}

/// Normal, normalized eigenvalues and shape class of a neighbourhood.
///
/// Shape is the largest of linearity `(λ1−λ2)/λ1`, planarity `(λ2−λ3)/λ1`
/// and sphericity `λ3/λ1`. Neighbourhoods of coincident points have no
/// orientation and come back as [`Shape::Volumetric`].
pub fn local_surface(points: &[Point3]) -> Result<LocalSurface> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "local surface needs at least 3 points, got {}",
            points.len()
        )));
    }
    let e = eig3_symmetric(&neighborhood_covariance(points)?)?;
    let [l1, l2, l3] = e.values.map(|v| v.max(0.0));
    if l1 <= DEGENERATE_EIGENVALUE {
        return Ok(LocalSurface::degenerate());
    }
    let sum = l1 + l2 + l3;
    let linearity = (l1 - l2) / l1;
    let planarity = (l2 - l3) / l1;
    let sphericity = l3 / l1;
    let shape = if linearity >= planarity && linearity >= sphericity {
        Shape::Linear
    } else if planarity >= sphericity {
        Shape::Flat
    } else {
        Shape::Volumetric
    };
    let mut normal = e.vectors[2];
    if normal.z < 0.0 {
        normal = -normal;
    }
    let horizontal = (normal.x * normal.x + normal.y * normal.y).sqrt();
    Ok(LocalSurface {
        normal,
        normalized_eigenvalues: [l1 / sum, l2 / sum, l3 / sum],
        shape,
        angle_from_vertical: horizontal.atan2(normal.z.abs()).to_degrees(),
    })
}

/// Ground iff the surface is flat and the angle between its normal and the
/// horizontal plane lies in the window (`90° ± angle_from_vertical`).
pub fn classify_by_angle(surfaces: &[LocalSurface], angle_window: (f64, f64)) -> Vec<Label> {
    let (lo, hi) = angle_window;
    let inside = |a: f64| a >= lo && a <= hi;
    surfaces
        .iter()
        .map(|s| {
            let up = 90.0 - s.angle_from_vertical;
            let down = 90.0 + s.angle_from_vertical;
            if s.shape == Shape::Flat && (inside(up) || inside(down)) {
                Label::Ground
            } else {
                Label::NonGround
            }
        })
        .collect()
}

/// One synchronous Naïve Bayes pass.
///
/// Priors are the global class fractions of `labels`; likelihoods are the
/// class fractions among the first `bayes_k` entries of each point's
/// neighbour row. A point becomes Ground when `P(U)·P(U|Q) > P(V)·P(V|Q)`,
/// NonGround when smaller, and keeps its label on a tie.
pub fn bayes_refine(labels: &[Label], neighbors: &NeighborTable, bayes_k: usize) -> Vec<Label> {
    assert_eq!(labels.len(), neighbors.len(), "labels and neighbours must align");
    let n = labels.len();
    if n == 0 {
        return Vec::new();
    }
    let ground = labels.iter().filter(|l| l.is_ground()).count();
    let prior_u = ground as f64 / n as f64;
    let prior_v = (n - ground) as f64 / n as f64;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let row = neighbors.row(i);
            let row = &row[..row.len().min(bayes_k)];
            if row.is_empty() {
                return labels[i];
            }
            let k = row.len() as f64;
            let u = row.iter().filter(|&&j| labels[j as usize].is_ground()).count();
            let pp_u = prior_u * (u as f64 / k);
            let pp_v = prior_v * ((row.len() - u) as f64 / k);
            if pp_u > pp_v {
                Label::Ground
            } else if pp_u < pp_v {
                Label::NonGround
            } else {
                labels[i]
            }
        })
        .collect()
}

/// Outcome of [`plane_adjust`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneAdjustment {
    pub labels: Vec<Label>,
    pub plane: Plane,
    /// Mean and standard deviation of `|d|` over the ground-labelled points.
    pub mean: f64,
    pub std_dev: f64,
}

/// Keeps a Ground point only if `|d| <= threshold` and `|d|` lies within
/// `μ ± σ`, with `d` its distance to the RANSAC plane of the current ground
/// points and μ, σ taken over the distances of those same points.
pub fn plane_adjust(
    points: &[Point3],
    labels: &[Label],
    threshold: f64,
    iterations: usize,
    seed: u64,
) -> Result<PlaneAdjustment> {
    assert_eq!(points.len(), labels.len(), "labels must align with points");
    let ground: Vec<Point3> = points
        .iter()
        .zip(labels)
        .filter(|(_, l)| l.is_ground())
        .map(|(&p, _)| p)
        .collect();
    if ground.len() < 3 {
        return Err(Error::NoGroundFound(format!(
            "{} ground points left for the plane fit",
            ground.len()
        )));
    }
    let plane = fit_plane_ransac(&ground, threshold, iterations, seed)?;
    let dist: Vec<f64> = points.par_iter().map(|&p| plane.signed_distance(p).abs()).collect();
    let ground_dist: Vec<f64> = dist
        .iter()
        .zip(labels)
        .filter(|(_, l)| l.is_ground())
        .map(|(&d, _)| d)
        .collect();
    let (mean, std_dev) = mean_std(&ground_dist);
    let (lo, hi) = (mean - std_dev - BAND_SLACK, mean + std_dev + BAND_SLACK);
    let labels = labels
        .iter()
        .zip(&dist)
        .map(|(&l, &d)| {
            if l.is_ground() && d <= threshold && d >= lo && d <= hi {
                Label::Ground
            } else {
                Label::NonGround
            }
        })
        .collect();
    Ok(PlaneAdjustment {
        labels,
        plane,
        mean,
        std_dev,
    })
}

/// Population mean and standard deviation (two-pass).
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let anchor = values[0];
    let mean = anchor + values.iter().map(|v| v - anchor).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Segment-local K-NN for every point of the cloud. Neighbours never cross
/// a segment boundary; rows are shorter than `k` in segments with fewer
/// than `k` points.
pub fn segment_neighborhoods(
    search_points: &[Point3],
    segments: &[Segment],
    k: usize,
    backend: KnnBackend,
) -> Result<NeighborTable> {
    let mut table = NeighborTable::new(search_points.len(), k);
    for seg in segments {
        let local: Vec<Point3> = seg.indices.iter().map(|&i| search_points[i]).collect();
        let kk = k.min(local.len());
        if kk == 0 {
            continue;
        }
        let index: Box<dyn NeighborSearch> = match backend {
            KnnBackend::BruteForce => Box::new(BruteForce::new(&local)),
            KnnBackend::KdTree => Box::new(KdTree::new(&local)?),
        };
        let mut rows = vec![0u32; local.len() * kk];
        rows.par_chunks_mut(kk).enumerate().for_each_init(
            || KnnHeap::new(kk),
            |heap, (qi, out)| {
                index.search(local[qi], heap);
                for (slot, &(_, j)) in out.iter_mut().zip(heap.items()) {
                    *slot = seg.indices[j as usize] as u32;
                }
            },
        );
        for (qi, row) in rows.chunks(kk).enumerate() {
            table.set_row(seg.indices[qi], row);
        }
    }
    Ok(table)
}

/// Local surfaces of every point from its neighbour row, using the metric
/// coordinates of the neighbours.
pub fn surfaces_from_table(points: &[Point3], table: &NeighborTable) -> Vec<LocalSurface> {
    (0..points.len())
        .into_par_iter()
        .map_init(Vec::new, |buf: &mut Vec<Point3>, i| {
            buf.clear();
            buf.extend(table.row(i).iter().map(|&j| points[j as usize]));
            if buf.len() < 3 {
                return LocalSurface::degenerate();
            }
            local_surface(buf).unwrap_or_else(|_| LocalSurface::degenerate())
        })
        .collect()
}

/// Runs the full normal-vector filter.
pub fn run_normal_pipeline(
    cloud: &PointCloud,
    config: &NormalFilterConfig,
    backend: KnnBackend,
) -> Result<ClassificationResult> {
    config.validate()?;
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut timer = StageTimer::start();

    let (standardized, _params) = geom::standardize(cloud, config.spread)?;
    timer.lap("standardize");

    let grid = build_grid2d(cloud, config.cell_size)?;
    let segments = form_segments(&grid, config.segment_capacity)?;
    timer.lap("grid");

    let search_points = match config.neighbor_space {
        NeighborSpace::Metric => &cloud.points,
        NeighborSpace::Standardized => &standardized.points,
    };
    let table = segment_neighborhoods(search_points, &segments, config.k, backend)?;
    timer.lap("knn");

    let surfaces = surfaces_from_table(&cloud.points, &table);
    timer.lap("pca");

    let angle = classify_by_angle(&surfaces, config.angle_window);
    timer.lap("angle");

    let bayes = bayes_refine(&angle, &table, config.bayes_k);
    timer.lap("bayes");

    let adjusted = plane_adjust(
        &cloud.points,
        &bayes,
        config.plane_threshold,
        config.ransac_iterations,
        config.seed,
    )?;
    timer.lap("plane");

    let labels = adjusted.labels.clone();
    Ok(ClassificationResult {
        labels: labels.clone(),
        stages: vec![
            StageSnapshot { stage: "angle", labels: angle },
            StageSnapshot { stage: "bayes", labels: bayes },
            StageSnapshot { stage: "plane", labels },
        ],
        timings: timer.finish(),
    })
}

/// Reference ground filters from the literature, for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Baseline {
    /// One total-least-squares plane through the whole cloud; Ground within
    /// the plane threshold.
    LeastSquares,
    /// Per-point PCA normals on global K-NN and the angle/shape test alone.
    Pca,
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ls" | "least-squares" => Ok(Self::LeastSquares),
            "pca" => Ok(Self::Pca),
            other => Err(Error::InvalidParameter(format!(
                "unknown baseline {other:?} (expected ls or pca)"
            ))),
        }
    }
}

pub fn run_baseline(
    cloud: &PointCloud,
    config: &NormalFilterConfig,
    baseline: Baseline,
) -> Result<ClassificationResult> {
    config.validate()?;
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut timer = StageTimer::start();
    let labels = match baseline {
        Baseline::LeastSquares => {
            let plane = fit_plane_least_squares(&cloud.points)?;
            timer.lap("fit");
            cloud
                .points
                .iter()
                .map(|&p| {
                    if plane.signed_distance(p).abs() <= config.plane_threshold {
                        Label::Ground
                    } else {
                        Label::NonGround
                    }
                })
                .collect()
        }
        Baseline::Pca => {
            let whole = Segment {
                indices: (0..cloud.len()).collect(),
                capacity: cloud.len(),
            };
            let table = segment_neighborhoods(&cloud.points, &[whole], config.k, KnnBackend::KdTree)?;
            timer.lap("knn");
            let surfaces = surfaces_from_table(&cloud.points, &table);
            timer.lap("pca");
            classify_by_angle(&surfaces, config.angle_window)
        }
    };
    timer.lap("classify");
    Ok(ClassificationResult {
        stages: vec![StageSnapshot {
            stage: "baseline",
            labels: labels.clone(),
        }],
        labels,
        timings: timer.finish(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{knn_bruteforce, Neighborhood};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Two-pass covariance `Σ (q − m)(q − m)ᵀ / K`.
    fn two_pass(points: &[Point3]) -> Mat3 {
        let n = points.len() as f64;
        let m = points.iter().fold(Point3::default(), |a, &p| a + p) / n;
        let mut s = [[0.0; 3]; 3];
        for &p in points {
            let d = (p - m).to_array();
            for i in 0..3 {
                for j in 0..3 {
                    s[i][j] += d[i] * d[j] / n;
                }
            }
        }
        s
    }

    #[test]
    fn covariance_examples() {
        let same = vec![Point3::new(1.5, -2.0, 3.0); 10];
        assert_eq!(neighborhood_covariance(&same).unwrap(), [[0.0; 3]; 3]);
        let two = [Point3::new(0.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0)];
        assert_eq!(
            neighborhood_covariance(&two).unwrap(),
            [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
        );
        assert!(neighborhood_covariance(&two[..1]).is_err());
    }

    #[test]
    fn covariance_matches_two_pass() {
        let mut r = rng(1);
        for _ in 0..100 {
            let off = Point3::new(r.random_range(-500.0..500.0), r.random_range(-500.0..500.0), 0.0);
            let pts: Vec<Point3> = (0..50)
                .map(|_| off + Point3::new(r.random(), r.random(), r.random::<f64>() * 0.1))
                .collect();
            let a = neighborhood_covariance(&pts).unwrap();
            let b = two_pass(&pts);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((a[i][j] - b[i][j]).abs() <= 1e-9 * b[i][j].abs().max(1e-3));
                    assert_eq!(a[i][j], a[j][i]);
                }
            }
        }
    }

    #[test]
    fn planar_linear_and_volumetric_shapes() {
        let mut r = rng(2);
        let plane: Vec<Point3> =
            (0..50).map(|_| Point3::new(r.random(), r.random(), 0.0)).collect();
        let s = local_surface(&plane).unwrap();
        assert_eq!(s.shape, Shape::Flat);
        assert_eq!(s.normal, Point3::new(0.0, 0.0, 1.0));
        assert_eq!(s.normalized_eigenvalues[2], 0.0);
        assert_eq!(s.angle_from_vertical, 0.0);

        let line: Vec<Point3> = (0..50).map(|_| Point3::new(r.random(), 0.0, 0.0)).collect();
        let s = local_surface(&line).unwrap();
        assert_eq!(s.shape, Shape::Linear);
        assert!((s.normalized_eigenvalues[0] - 1.0).abs() < 1e-12);

        let mut ball = Vec::new();
        while ball.len() < 50 {
            let p = Point3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            if p.norm() <= 1.0 {
                ball.push(p);
            }
        }
        let s = local_surface(&ball).unwrap();
        assert_eq!(s.shape, Shape::Volumetric);
        for v in s.normalized_eigenvalues {
            assert!((v - 1.0 / 3.0).abs() < 0.15, "{:?}", s.normalized_eigenvalues);
        }
        let sum: f64 = s.normalized_eigenvalues.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let s = local_surface(&[Point3::new(1.0, 1.0, 1.0); 5]).unwrap();
        assert_eq!(s.shape, Shape::Volumetric);
        assert_eq!(classify_by_angle(&[s], DEFAULT_ANGLE_WINDOW), vec![Label::NonGround]);
    }

    fn tilted_patch(deg: f64, r: &mut ChaCha8Rng) -> Vec<Point3> {
        let t = deg.to_radians();
        (0..50)
            .map(|_| {
                let (u, v) = (r.random_range(-0.5..0.5), r.random_range(-0.5..0.5));
                // Rotate the xy patch about the y axis.
                Point3::new(u * t.cos(), v, u * t.sin())
            })
            .collect()
    }

    #[test]
    fn angle_boundaries() {
        let mut r = rng(3);
        let flat = local_surface(&tilted_patch(0.0, &mut r)).unwrap();
        let nine = local_surface(&tilted_patch(9.0, &mut r)).unwrap();
        let eleven = local_surface(&tilted_patch(11.0, &mut r)).unwrap();
        let wall = local_surface(&tilted_patch(90.0, &mut r)).unwrap();
        assert!((nine.angle_from_vertical - 9.0).abs() < 1e-9);
        assert_eq!(
            classify_by_angle(&[flat, nine, eleven, wall], DEFAULT_ANGLE_WINDOW),
            vec![Label::Ground, Label::Ground, Label::NonGround, Label::NonGround]
        );
    }

    #[test]
    fn angle_test_ignores_translation_and_z_rotation() {
        let mut r = rng(4);
        let pts = tilted_patch(7.0, &mut r);
        let base = local_surface(&pts).unwrap();
        let a = 1.234f64;
        let moved: Vec<Point3> = pts
            .iter()
            .map(|p| {
                Point3::new(p.x * a.cos() - p.y * a.sin(), p.x * a.sin() + p.y * a.cos(), p.z)
                    + Point3::new(100.0, -40.0, 12.0)
            })
            .collect();
        let s = local_surface(&moved).unwrap();
        assert!((s.angle_from_vertical - base.angle_from_vertical).abs() < 1e-6);
        assert_eq!(
            classify_by_angle(&[s], DEFAULT_ANGLE_WINDOW),
            classify_by_angle(&[base], DEFAULT_ANGLE_WINDOW)
        );
    }

    fn table(rows: &[Vec<u32>]) -> NeighborTable {
        let nbs: Vec<Neighborhood> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| Neighborhood {
                query: i,
                indices: r.iter().map(|&j| j as usize).collect(),
                sq_dists: vec![0.0; r.len()],
            })
            .collect();
        NeighborTable::from_neighborhoods(&nbs).unwrap()
    }

    #[test]
    fn bayes_all_ground_stays_ground() {
        let labels = vec![Label::Ground; 4];
        let t = table(&[vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]]);
        assert_eq!(bayes_refine(&labels, &t, 50), labels);
    }

    #[test]
    fn bayes_unanimous_neighbourhood() {
        // 100 points, half ground; point 99 (NonGround) has 50 ground neighbours.
        let labels: Vec<Label> = (0..100)
            .map(|i| if i < 50 { Label::Ground } else { Label::NonGround })
            .collect();
        let mut rows: Vec<Vec<u32>> = (0..100).map(|i| vec![i as u32]).collect();
        rows[99] = (0..50).collect();
        let out = bayes_refine(&labels, &table(&rows), 50);
        assert_eq!(out[99], Label::Ground);
        // Self-only rows keep their own class.
        assert_eq!(&out[..99], &labels[..99]);
    }

    #[test]
    fn bayes_tie_keeps_label() {
        let labels = vec![Label::Ground, Label::NonGround];
        let t = table(&[vec![0, 1], vec![1, 0]]);
        assert_eq!(bayes_refine(&labels, &t, 50), labels);
    }

    #[test]
    fn bayes_matches_scalar_formula() {
        let mut r = rng(5);
        let pts: Vec<Point3> = (0..400).map(|_| Point3::new(r.random(), r.random(), r.random())).collect();
        let cloud = PointCloud::new(pts).unwrap();
        let nbs = knn_bruteforce(&cloud, &cloud, 20).unwrap();
        let t = NeighborTable::from_neighborhoods(&nbs).unwrap();
        for _ in 0..20 {
            let p = r.random_range(0.1..0.9);
            let labels: Vec<Label> = (0..400)
                .map(|_| if r.random_bool(p) { Label::Ground } else { Label::NonGround })
                .collect();
            let kb = r.random_range(1..=20);
            let got = bayes_refine(&labels, &t, kb);
            let n = labels.len() as f64;
            let big_u = labels.iter().filter(|&&l| l == Label::Ground).count() as f64;
            for i in 0..400 {
                let q = &nbs[i].indices[..kb];
                let uq = q.iter().filter(|&&j| labels[j] == Label::Ground).count() as f64;
                let vq = kb as f64 - uq;
                let ppu = (big_u / n) * (uq / kb as f64);
                let ppv = ((n - big_u) / n) * (vq / kb as f64);
                assert!(ppu + ppv <= 1.0 + 1e-12);
                let want = if ppu > ppv {
                    Label::Ground
                } else if ppu < ppv {
                    Label::NonGround
                } else {
                    labels[i]
                };
                assert_eq!(got[i], want);
            }
        }
    }

    fn grid_plane(n: usize, z: impl Fn(f64, f64) -> f64) -> Vec<Point3> {
        let mut v = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (i as f64 * 0.05, j as f64 * 0.05);
                v.push(Point3::new(x, y, z(x, y)));
            }
        }
        v
    }

    #[test]
    fn plane_adjust_removes_high_outlier() {
        let mut pts = grid_plane(10, |_, _| 0.0);
        pts.push(Point3::new(0.2, 0.2, 5.0));
        let labels = vec![Label::Ground; pts.len()];
        let adj = plane_adjust(&pts, &labels, 0.1, 100, 1).unwrap();
        assert_eq!(adj.labels.last(), Some(&Label::NonGround));
        assert!(adj.labels[..100].iter().all(|l| l.is_ground()));
    }

    #[test]
    fn plane_adjust_keeps_exact_plane() {
        let pts = grid_plane(10, |x, y| 0.1 * x - 0.3 * y + 7.3);
        let labels = vec![Label::Ground; pts.len()];
        let adj = plane_adjust(&pts, &labels, 0.1, 100, 1).unwrap();
        assert!(adj.labels.iter().all(|l| l.is_ground()));
        assert!(matches!(
            plane_adjust(&pts[..2], &labels[..2], 0.1, 10, 1),
            Err(Error::NoGroundFound(_))
        ));
    }

    #[test]
    fn plane_adjust_with_noise_and_contamination() {
        let mut r = rng(6);
        let noise = Normal::new(0.0, 0.02).unwrap();
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for _ in 0..9500 {
            let (x, y) = (r.random_range(0.0..20.0), r.random_range(0.0..20.0));
            pts.push(Point3::new(x, y, 0.05 * x + 0.02 * y + noise.sample(&mut r)));
            truth.push(true);
        }
        for _ in 0..500 {
            let (x, y) = (r.random_range(0.0..20.0), r.random_range(0.0..20.0));
            pts.push(Point3::new(x, y, 0.05 * x + 0.02 * y + r.random_range(0.5..4.0)));
            truth.push(false);
        }
        let labels = vec![Label::Ground; pts.len()];
        let adj = plane_adjust(&pts, &labels, 0.1, 1000, 3).unwrap();
        let kept_ground = adj
            .labels
            .iter()
            .zip(&truth)
            .filter(|(l, &t)| t && l.is_ground())
            .count();
        let kept_tree = adj.labels.iter().zip(&truth).filter(|(l, &t)| !t && l.is_ground()).count();
        assert_eq!(kept_tree, 0);
        assert!(kept_ground as f64 >= 0.6 * 9500.0, "{kept_ground}");
        assert!(adj.labels.iter().zip(&labels).all(|(a, b)| !a.is_ground() || b.is_ground()));
    }

    #[test]
    fn pipeline_on_flat_plane() {
        let pts = grid_plane(40, |_, _| 1.25);
        let cloud = PointCloud::new(pts).unwrap();
        let cfg = NormalFilterConfig::default();
        let kd = run_normal_pipeline(&cloud, &cfg, KnnBackend::KdTree).unwrap();
        assert!(kd.labels.iter().all(|l| l.is_ground()));
        let bf = run_normal_pipeline(&cloud, &cfg, KnnBackend::BruteForce).unwrap();
        assert_eq!(kd.labels, bf.labels);
        assert_eq!(kd.stages.len(), 3);
    }

    #[test]
    fn pipeline_rejects_empty_and_bad_config() {
        let cfg = NormalFilterConfig::default();
        assert!(matches!(
            run_normal_pipeline(&PointCloud::default(), &cfg, KnnBackend::KdTree),
            Err(Error::EmptyInput)
        ));
        let cloud = PointCloud::new(grid_plane(5, |_, _| 0.0)).unwrap();
        for bad in [
            NormalFilterConfig { k: 2, ..cfg.clone() },
            NormalFilterConfig { angle_window: (100.0, 80.0), ..cfg.clone() },
            NormalFilterConfig { bayes_k: 60, ..cfg.clone() },
        ] {
            assert!(matches!(
                run_normal_pipeline(&cloud, &bad, KnnBackend::KdTree),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn segment_neighbourhoods_stay_inside_segment() {
        let mut r = rng(7);
        let pts: Vec<Point3> = (0..3000)
            .map(|_| Point3::new(r.random_range(0.0..3.0), r.random_range(0.0..3.0), r.random::<f64>() * 0.1))
            .collect();
        let cloud = PointCloud::new(pts).unwrap();
        let segs = form_segments(&build_grid2d(&cloud, 0.1).unwrap(), 400).unwrap();
        let mut seg_of = vec![0; cloud.len()];
        for (s, seg) in segs.iter().enumerate() {
            for &i in &seg.indices {
                seg_of[i] = s;
            }
        }
        let kd = segment_neighborhoods(&cloud.points, &segs, 12, KnnBackend::KdTree).unwrap();
        let bf = segment_neighborhoods(&cloud.points, &segs, 12, KnnBackend::BruteForce).unwrap();
        assert_eq!(kd, bf);
        for i in 0..cloud.len() {
            assert_eq!(kd.row(i).len(), 12);
            assert_eq!(kd.row(i)[0] as usize, i);
            assert!(kd.row(i).iter().all(|&j| seg_of[j as usize] == seg_of[i]));
        }
    }

    #[test]
    fn baselines_run() {
        let mut pts = grid_plane(20, |_, _| 0.0);
        pts.extend((0..5).map(|i| Point3::new(0.5, 0.5, 1.0 + i as f64 * 0.02)));
        let cloud = PointCloud::new(pts).unwrap();
        let cfg = NormalFilterConfig::default();
        let ls = run_baseline(&cloud, &cfg, Baseline::LeastSquares).unwrap();
        assert!(ls.labels[..400].iter().all(|l| l.is_ground()));
        assert!(ls.labels[400..].iter().all(|l| !l.is_ground()));
        let pca = run_baseline(&cloud, &cfg, Baseline::Pca).unwrap();
        assert_eq!(pca.labels.len(), cloud.len());
    }
}
