//! Ground filter on a 10 cm voxel grid.
//!
//! Voxels with a small z-range are flat candidates; candidates far above
//! their mean height are dropped; the largest 26-connected group of the rest
//! gives a ground plane through its centroids. Every voxel is then tested
//! against that plane and finally relabelled by a majority of its
//! 26-neighbours. Points inherit the label of their voxel.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{fit_plane_ransac, Label, Plane, PointCloud};
use crate::normal_filter::{mean_std, DEFAULT_PLANE_THRESHOLD, DEFAULT_RANSAC_ITERATIONS};
use crate::pipeline::{ClassificationResult, StageSnapshot, StageTimer};
use crate::spatial::{build_voxelgrid, VoxelCoord, VoxelGrid, VoxelLabel, DEFAULT_VOXEL_SIZE};

/// Widening of the μ ± σ band, as in the normal filter.
const BAND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelFilterConfig {
    pub voxel_size: f64,
    /// Maximum z-range (m) of a flat voxel.
    pub flatness_threshold: f64,
    /// Added to the mean flat-voxel height to get the height cut-off.
    pub height_offset: f64,
    pub plane_threshold: f64,
    pub min_points: usize,
    pub ransac_iterations: usize,
    pub seed: u64,
}

impl Default for VoxelFilterConfig {
    fn default() -> Self {
        Self {
            voxel_size: DEFAULT_VOXEL_SIZE,
            flatness_threshold: 0.04,
            height_offset: 1.0,
            plane_threshold: DEFAULT_PLANE_THRESHOLD,
            min_points: 2,
            ransac_iterations: DEFAULT_RANSAC_ITERATIONS,
            seed: 0,
        }
    }
}

impl VoxelFilterConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("voxel size", self.voxel_size),
            ("flatness threshold", self.flatness_threshold),
            ("plane threshold", self.plane_threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if !self.height_offset.is_finite() {
            return Err(Error::InvalidParameter("height offset must be finite".into()));
        }
        if self.min_points == 0 || self.ransac_iterations == 0 {
            return Err(Error::InvalidParameter(
                "min points and RANSAC iterations must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// A 26-connected group of flat voxels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelSegment {
    /// Member coordinates in breadth-first order from the seed.
    pub members: Vec<VoxelCoord>,
    pub size: usize,
}

impl VoxelSegment {
    pub fn seed(&self) -> VoxelCoord {
        self.members[0]
    }
}

/// Marks voxels with `z_range < threshold` as flat candidates; all others
/// become Unknown.
pub fn flag_flat_voxels(grid: &mut VoxelGrid, flatness_threshold: f64) {
    let labels: Vec<VoxelLabel> = grid
        .cells()
        .iter()
        .map(|c| {
            if c.z_range < flatness_threshold {
                VoxelLabel::FlatCandidate
            } else {
                VoxelLabel::Unknown
            }
        })
        .collect();
    grid.set_labels(&labels);
}

/// Demotes every voxel whose centroid z is at or above
/// `mean(flat centroid z) + offset` to NonGround and returns that cut-off.
pub fn height_filter(grid: &mut VoxelGrid, offset: f64) -> Result<f64> {
    let heights: Vec<f64> = grid
        .cells()
        .iter()
        .filter(|c| c.label == VoxelLabel::FlatCandidate)
        .map(|c| c.centroid.z)
        .collect();
    if heights.is_empty() {
        return Err(Error::NoGroundFound("no flat voxels".into()));
    }
    let threshold = mean_std(&heights).0 + offset;
    let labels: Vec<VoxelLabel> = grid
        .cells()
        .iter()
        .map(|c| {
            if c.centroid.z >= threshold {
                VoxelLabel::NonGround
            } else {
                c.label
            }
        })
        .collect();
    grid.set_labels(&labels);
    Ok(threshold)
}

/// Connected components of flat-candidate voxels under 26-adjacency, seeded
/// in lexicographic coordinate order.
pub fn grow_segments(grid: &VoxelGrid) -> Vec<VoxelSegment> {
    let flat = |i: usize| grid.cell(i).label == VoxelLabel::FlatCandidate;
    let mut visited = vec![false; grid.len()];
    let mut segments = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..grid.len() {
        if visited[seed] || !flat(seed) {
            continue;
        }
        visited[seed] = true;
        queue.push_back(seed);
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            members.push(grid.coord(i));
            for j in grid.neighbor_indices(i) {
                if !visited[j] && flat(j) {
                    visited[j] = true;
                    queue.push_back(j);
                }
            }
        }
        segments.push(VoxelSegment {
            size: members.len(),
            members,
        });
    }
    segments
}

/// Index of the largest segment; the first one wins a tie.
pub fn largest_segment(segments: &[VoxelSegment]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in segments.iter().enumerate() {
        if best.is_none_or(|b| s.size > segments[b].size) {
            best = Some(i);
        }
    }
    best
}

/// RANSAC plane through the centroids of the largest segment.
pub fn fit_ground_plane(
    segments: &[VoxelSegment],
    grid: &VoxelGrid,
    config: &VoxelFilterConfig,
) -> Result<Plane> {
    let best = largest_segment(segments)
        .ok_or_else(|| Error::NoGroundFound("no flat voxel segments".into()))?;
    let centroids: Vec<_> = segments[best]
        .members
        .iter()
        .map(|&c| grid.get(c).expect("segment member is occupied").centroid)
        .collect();
    fit_plane_ransac(
        &centroids,
        config.plane_threshold,
        config.ransac_iterations,
        config.seed,
    )
}

/// Mean and standard deviation of `|d|` used for the band test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceBand {
    pub mean: f64,
    pub std_dev: f64,
}

/// Labels every voxel Ground or NonGround against the ground plane.
///
/// Ground iff the centroid lies within the plane threshold, its `|d|` is
/// inside `μ ± σ` of the centroid distances of all voxels, and the voxel
/// holds at least `min_points` points.
pub fn classify_voxels(
    grid: &mut VoxelGrid,
    plane: &Plane,
    config: &VoxelFilterConfig,
) -> DistanceBand {
    let dist: Vec<f64> = grid
        .cells()
        .par_iter()
        .map(|c| plane.signed_distance(c.centroid).abs())
        .collect();
    let (mean, std_dev) = mean_std(&dist);
    let (lo, hi) = (mean - std_dev - BAND_SLACK, mean + std_dev + BAND_SLACK);
    let labels: Vec<VoxelLabel> = grid
        .cells()
        .iter()
        .zip(&dist)
        .map(|(c, &d)| {
            if d <= config.plane_threshold && d >= lo && d <= hi && c.len() >= config.min_points {
                VoxelLabel::Ground
            } else {
                VoxelLabel::NonGround
            }
        })
        .collect();
    grid.set_labels(&labels);
    DistanceBand { mean, std_dev }
}

/// One synchronous pass: each voxel takes the strict majority label of its
/// occupied 26-neighbours. Ties and isolated voxels keep their label.
/// Returns the number of voxels that changed.
pub fn neighborhood_check(grid: &mut VoxelGrid) -> Result<usize> {
    let before = grid.labels();
    if before
        .iter()
        .any(|l| !matches!(l, VoxelLabel::Ground | VoxelLabel::NonGround))
    {
        return Err(Error::InvalidInput(
            "neighbourhood check needs every voxel labelled Ground or NonGround".into(),
        ));
    }
    let after: Vec<VoxelLabel> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (mut ground, mut other) = (0usize, 0usize);
            for j in grid.neighbor_indices(i) {
                if before[j] == VoxelLabel::Ground {
                    ground += 1;
                } else {
                    other += 1;
                }
            }
            match ground.cmp(&other) {
                std::cmp::Ordering::Greater => VoxelLabel::Ground,
                std::cmp::Ordering::Less => VoxelLabel::NonGround,
                std::cmp::Ordering::Equal => before[i],
            }
        })
        .collect();
    let changed = before.iter().zip(&after).filter(|(a, b)| a != b).count();
    grid.set_labels(&after);
    Ok(changed)
}

/// Per-point labels from the current voxel labels. Flat candidates count as
/// ground.
pub fn point_labels(grid: &VoxelGrid, n_points: usize) -> Vec<Label> {
    let mut out = vec![Label::NonGround; n_points];
    for cell in grid.cells() {
        if matches!(cell.label, VoxelLabel::Ground | VoxelLabel::FlatCandidate) {
            for &i in &cell.indices {
                out[i] = Label::Ground;
            }
        }
    }
    out
}

pub fn run_voxel_pipeline(
    cloud: &PointCloud,
    config: &VoxelFilterConfig,
) -> Result<ClassificationResult> {
    config.validate()?;
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = cloud.len();
    let mut timer = StageTimer::start();
    let mut stages = Vec::new();

    let mut grid = build_voxelgrid(cloud, config.voxel_size)?;
    timer.lap("voxelize");

    flag_flat_voxels(&mut grid, config.flatness_threshold);
    stages.push(StageSnapshot { stage: "flat", labels: point_labels(&grid, n) });
    timer.lap("flat");

    height_filter(&mut grid, config.height_offset)?;
    stages.push(StageSnapshot { stage: "height", labels: point_labels(&grid, n) });
    timer.lap("height");

    let segments = grow_segments(&grid);
    timer.lap("segments");

    let plane = fit_ground_plane(&segments, &grid, config)?;
    timer.lap("plane");

    classify_voxels(&mut grid, &plane, config);
    stages.push(StageSnapshot { stage: "classify", labels: point_labels(&grid, n) });
    timer.lap("classify");

    neighborhood_check(&mut grid)?;
    let labels = point_labels(&grid, n);
    stages.push(StageSnapshot { stage: "neighborhood", labels: labels.clone() });
    timer.lap("neighborhood");

    Ok(ClassificationResult {
        labels,
        stages,
        timings: timer.finish(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::{BTreeMap, HashMap};

    fn grid_of(pts: Vec<Point3>, size: f64) -> VoxelGrid {
        build_voxelgrid(&PointCloud::new(pts).unwrap(), size).unwrap()
    }

    /// One point at the centre of each listed unit voxel.
    fn unit_voxels(coords: &[VoxelCoord]) -> VoxelGrid {
        grid_of(
            coords
                .iter()
                .map(|&(x, y, z)| Point3::new(x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5))
                .collect(),
            1.0,
        )
    }

    #[test]
    fn flatness_examples() {
        let mut g = grid_of(
            vec![
                Point3::new(0.05, 0.05, 0.05),
                Point3::new(0.15, 0.05, 0.0),
                Point3::new(0.15, 0.05, 0.09),
            ],
            0.1,
        );
        flag_flat_voxels(&mut g, 0.04);
        assert_eq!(g.labels(), vec![VoxelLabel::FlatCandidate, VoxelLabel::Unknown]);
    }

    #[test]
    fn flat_flags_match_rescan() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Point3> = (0..4000)
            .map(|_| Point3::new(r.random_range(0.0..1.0), r.random_range(0.0..1.0), r.random_range(0.0..0.3)))
            .collect();
        let mut g = grid_of(pts.clone(), 0.1);
        flag_flat_voxels(&mut g, 0.04);
        for (_, cell) in g.iter() {
            let zs: Vec<f64> = cell.indices.iter().map(|&i| pts[i].z).collect();
            let range = zs.iter().cloned().fold(f64::MIN, f64::max) - zs.iter().cloned().fold(f64::MAX, f64::min);
            let want = if range < 0.04 { VoxelLabel::FlatCandidate } else { VoxelLabel::Unknown };
            assert_eq!(cell.label, want);
        }
    }

    #[test]
    fn height_threshold_examples() {
        let mut pts: Vec<Point3> = (0..5).map(|i| Point3::new(i as f64 + 0.5, 0.5, 2.0)).collect();
        pts.push(Point3::new(10.5, 0.5, 3.5));
        let mut g = grid_of(pts, 1.0);
        flag_flat_voxels(&mut g, 0.04);
        // Include the high voxel in the mean, then check it alone.
        let t = height_filter(&mut g, 1.0).unwrap();
        assert!((t - (2.0 * 5.0 + 3.5) / 6.0 - 1.0).abs() < 1e-12);
        assert_eq!(g.labels()[5], VoxelLabel::NonGround);

        let mut g = grid_of((0..5).map(|i| Point3::new(i as f64 + 0.5, 0.5, 2.0)).collect(), 1.0);
        flag_flat_voxels(&mut g, 0.04);
        assert_eq!(height_filter(&mut g, 1.0).unwrap(), 3.0);

        let mut g = grid_of(vec![Point3::new(0.5, 0.5, 0.25)], 1.0);
        flag_flat_voxels(&mut g, 0.04);
        assert_eq!(height_filter(&mut g, 1.0).unwrap(), 1.25);
        assert_eq!(g.labels(), vec![VoxelLabel::FlatCandidate]);

        let mut g = grid_of(vec![Point3::new(0.5, 0.5, 0.0), Point3::new(0.5, 0.5, 0.9)], 1.0);
        flag_flat_voxels(&mut g, 0.04);
        assert!(matches!(height_filter(&mut g, 1.0), Err(Error::NoGroundFound(_))));
    }

    fn flat_all(g: &mut VoxelGrid) {
        flag_flat_voxels(g, 0.04);
    }

    #[test]
    fn segments_by_corner_and_gap() {
        let mut g = unit_voxels(&[(0, 0, 0), (1, 1, 1)]);
        flat_all(&mut g);
        assert_eq!(grow_segments(&g).len(), 1);
        let mut g = unit_voxels(&[(0, 0, 0), (2, 0, 0)]);
        flat_all(&mut g);
        let s = grow_segments(&g);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].seed(), (0, 0, 0));
    }

    fn union_find_components(g: &VoxelGrid) -> Vec<Vec<VoxelCoord>> {
        let n = g.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let flat: Vec<bool> = g.cells().iter().map(|c| c.label == VoxelLabel::FlatCandidate).collect();
        for a in 0..n {
            for b in 0..n {
                let (ca, cb) = (g.coord(a), g.coord(b));
                let cheb = (ca.0 - cb.0).abs().max((ca.1 - cb.1).abs()).max((ca.2 - cb.2).abs());
                if flat[a] && flat[b] && cheb == 1 {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    parent[ra] = rb;
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<VoxelCoord>> = BTreeMap::new();
        for i in (0..n).filter(|&i| flat[i]) {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(g.coord(i));
        }
        let mut v: Vec<Vec<VoxelCoord>> = groups.into_values().collect();
        v.sort();
        v
    }

    #[test]
    fn segments_match_union_find() {
        let mut r = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let coords: Vec<VoxelCoord> = (0..150)
                .map(|_| (r.random_range(0..8), r.random_range(0..8), r.random_range(0..3)))
                .collect();
            let mut pts = Vec::new();
            for &(x, y, z) in &coords {
                pts.push(Point3::new(x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5));
                if r.random_bool(0.3) {
                    // Second point makes the voxel non-flat.
                    pts.push(Point3::new(x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.9));
                }
            }
            let mut g = grid_of(pts, 1.0);
            flat_all(&mut g);
            let segs = grow_segments(&g);
            let mut got: Vec<Vec<VoxelCoord>> = segs
                .iter()
                .map(|s| {
                    assert_eq!(s.size, s.members.len());
                    let mut m = s.members.clone();
                    m.sort();
                    m
                })
                .collect();
            got.sort();
            assert_eq!(got, union_find_components(&g));
            for w in segs.windows(2) {
                assert!(w[0].seed() < w[1].seed());
            }
        }
    }

    #[test]
    fn ground_plane_from_largest_segment() {
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                pts.push(Point3::new(i as f64 * 0.1 + 0.05, j as f64 * 0.1 + 0.05, 0.05));
            }
        }
        // A small tilted patch far away.
        for i in 0..5 {
            pts.push(Point3::new(5.05 + i as f64 * 0.1, 5.05, 0.05 + i as f64 * 0.02));
        }
        let mut g = grid_of(pts, 0.1);
        flat_all(&mut g);
        let segs = grow_segments(&g);
        let sizes: Vec<usize> = segs.iter().map(|s| s.size).collect();
        assert_eq!(sizes, vec![100, 5]);
        let plane = fit_ground_plane(&segs, &g, &VoxelFilterConfig::default()).unwrap();
        let [a, b, c, d] = plane.coefficients();
        assert_eq!((a, b, c), (0.0, 0.0, 1.0));
        assert!((d + 0.05).abs() < 1e-12);
        assert!(matches!(
            fit_ground_plane(&[], &g, &VoxelFilterConfig::default()),
            Err(Error::NoGroundFound(_))
        ));
    }

    #[test]
    fn largest_segment_tie_goes_to_first() {
        let seg = |c: VoxelCoord, n| VoxelSegment { members: vec![c; n], size: n };
        assert_eq!(largest_segment(&[seg((0, 0, 0), 3), seg((1, 0, 0), 3)]), Some(0));
        assert_eq!(largest_segment(&[seg((0, 0, 0), 3), seg((1, 0, 0), 4)]), Some(1));
        assert_eq!(largest_segment(&[]), None);
    }

    #[test]
    fn classify_examples() {
        let pts = vec![
            // On the plane, three points.
            Point3::new(0.01, 0.01, 0.0),
            Point3::new(0.02, 0.02, 0.0),
            Point3::new(0.03, 0.03, 0.0),
            // On the plane, one point.
            Point3::new(0.51, 0.01, 0.0),
            // Half a metre above.
            Point3::new(1.01, 0.01, 0.5),
            Point3::new(1.02, 0.01, 0.5),
        ];
        let mut g = grid_of(pts, 0.1);
        let plane = Plane::new(0.0, 0.0, 1.0, 0.0).unwrap();
        let band = classify_voxels(&mut g, &plane, &VoxelFilterConfig::default());
        assert!((band.mean - 0.5 / 3.0).abs() < 1e-12);
        assert_eq!(
            g.labels(),
            vec![VoxelLabel::Ground, VoxelLabel::NonGround, VoxelLabel::NonGround]
        );
    }

    fn cube_coords() -> Vec<VoxelCoord> {
        let mut v = Vec::new();
        for x in 0..3 {
            for y in 0..3 {
                for z in 0..3 {
                    v.push((x, y, z));
                }
            }
        }
        v
    }

    #[test]
    fn neighbourhood_examples() {
        let coords = cube_coords();
        let mut g = unit_voxels(&coords);
        let labels: Vec<VoxelLabel> = coords
            .iter()
            .map(|&c| if c == (1, 1, 1) { VoxelLabel::Ground } else { VoxelLabel::NonGround })
            .collect();
        g.set_labels(&labels);
        neighborhood_check(&mut g).unwrap();
        assert_eq!(g.get((1, 1, 1)).unwrap().label, VoxelLabel::NonGround);

        let mut g = unit_voxels(&[(0, 0, 0)]);
        g.set_labels(&[VoxelLabel::Ground]);
        assert_eq!(neighborhood_check(&mut g).unwrap(), 0);
        assert_eq!(g.labels(), vec![VoxelLabel::Ground]);

        let mut g = unit_voxels(&[(0, 0, 0)]);
        assert!(neighborhood_check(&mut g).is_err());
    }

    #[test]
    fn neighbourhood_matches_tally_and_is_idempotent_when_consistent() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let coords: Vec<VoxelCoord> = (0..200)
                .map(|_| (r.random_range(0..7), r.random_range(0..7), r.random_range(0..4)))
                .collect();
            let mut g = unit_voxels(&coords);
            let before: Vec<VoxelLabel> = (0..g.len())
                .map(|_| if r.random_bool(0.5) { VoxelLabel::Ground } else { VoxelLabel::NonGround })
                .collect();
            g.set_labels(&before);
            let by_coord: HashMap<VoxelCoord, VoxelLabel> =
                (0..g.len()).map(|i| (g.coord(i), before[i])).collect();
            neighborhood_check(&mut g).unwrap();
            for i in 0..g.len() {
                let (x, y, z) = g.coord(i);
                let (mut gr, mut ng) = (0, 0);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for dz in -1..=1 {
                            if (dx, dy, dz) == (0, 0, 0) {
                                continue;
                            }
                            match by_coord.get(&(x + dx, y + dy, z + dz)) {
                                Some(VoxelLabel::Ground) => gr += 1,
                                Some(_) => ng += 1,
                                None => {}
                            }
                        }
                    }
                }
                let want = if gr > ng {
                    VoxelLabel::Ground
                } else if ng > gr {
                    VoxelLabel::NonGround
                } else {
                    before[i]
                };
                assert_eq!(g.cell(i).label, want);
            }
        }
        // Uniform labelling is already majority-consistent.
        let mut g = unit_voxels(&cube_coords());
        g.set_labels(&[VoxelLabel::Ground; 27]);
        assert_eq!(neighborhood_check(&mut g).unwrap(), 0);
    }

    #[test]
    fn pipeline_on_plane_with_pole() {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for _ in 0..20_000 {
            let (x, y) = (r.random_range(0.0..5.0), r.random_range(0.0..5.0));
            pts.push(Point3::new(x, y, 0.02 * x + r.random_range(-0.01..0.01)));
            truth.push(Label::Ground);
        }
        for _ in 0..2000 {
            let a = r.random_range(0.0..std::f64::consts::TAU);
            let z = r.random_range(0.3..3.0);
            pts.push(Point3::new(2.5 + 0.1 * a.cos(), 2.5 + 0.1 * a.sin(), z));
            truth.push(Label::NonGround);
        }
        let cloud = PointCloud::new(pts).unwrap();
        let out = run_voxel_pipeline(&cloud, &VoxelFilterConfig::default()).unwrap();
        let correct = out.labels.iter().zip(&truth).filter(|(a, b)| a == b).count();
        assert!(correct as f64 / truth.len() as f64 > 0.97, "{correct}");
        assert!(out.labels[20_000..].iter().all(|l| !l.is_ground()));
        assert_eq!(out.stages.len(), 4);

        // Points sharing a voxel share a label.
        let g = build_voxelgrid(&cloud, 0.1).unwrap();
        for c in g.cells() {
            assert!(c.indices.iter().all(|&i| out.labels[i] == out.labels[c.indices[0]]));
        }
    }

    #[test]
    fn pipeline_errors() {
        let cfg = VoxelFilterConfig::default();
        assert!(matches!(run_voxel_pipeline(&PointCloud::default(), &cfg), Err(Error::EmptyInput)));
        let bad = VoxelFilterConfig { voxel_size: 0.0, ..cfg };
        let cloud = PointCloud::new(vec![Point3::default()]).unwrap();
        assert!(matches!(run_voxel_pipeline(&cloud, &bad), Err(Error::InvalidParameter(_))));
    }
}
