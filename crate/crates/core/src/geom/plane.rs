use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{centroid, eig3_symmetric, Mat3, Point3};
use crate::error::{Error, Result};

/// Plane `alpha*x + beta*y + gamma*z + delta = 0` with a unit normal that
/// points upward (`gamma >= 0`; for vertical planes the first non-zero of
/// `beta`, `alpha` is positive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
}

impl Plane {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        let norm = (alpha * alpha + beta * beta + gamma * gamma).sqrt();
        if !(norm > 0.0 && norm.is_finite() && delta.is_finite()) {
            return Err(Error::DegenerateGeometry(format!(
                "plane coefficients ({alpha}, {beta}, {gamma}, {delta}) have no normal"
            )));
        }
        let (mut a, mut b, mut c, mut d) = (alpha / norm, beta / norm, gamma / norm, delta / norm);
        let flip = c < 0.0 || (c == 0.0 && (b < 0.0 || (b == 0.0 && a < 0.0)));
        if flip {
            (a, b, c, d) = (-a, -b, -c, -d);
        }
        // Normalize signed zeros so equal planes compare equal.
        Ok(Self {
            alpha: a + 0.0,
            beta: b + 0.0,
            gamma: c + 0.0,
            delta: d + 0.0,
        })
    }

    /// Plane through `anchor` with the given (not necessarily unit) normal.
    pub fn from_normal_and_point(normal: Point3, anchor: Point3) -> Result<Self> {
        Self::new(normal.x, normal.y, normal.z, -normal.dot(anchor))
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    pub fn normal(&self) -> Point3 {
        Point3::new(self.alpha, self.beta, self.gamma)
    }

    /// Signed distance, see [`point_plane_distance`].
    #[inline]
    pub fn signed_distance(&self, p: Point3) -> f64 {
        point_plane_distance(p, self)
    }
}

/// Signed distance `(αx + βy + γz + δ) / sqrt(α² + β² + γ²)`.
#[inline]
pub fn point_plane_distance(p: Point3, plane: &Plane) -> f64 {
    let num = plane.alpha * p.x + plane.beta * p.y + plane.gamma * p.z + plane.delta;
    // The stored normal is unit length; the division keeps the formula exact
    // to rounding if that ever changes.
    num / (plane.alpha * plane.alpha + plane.beta * plane.beta + plane.gamma * plane.gamma).sqrt()
}

/// Covariance with the 1/K normalization, accumulated on coordinates shifted
/// to the first point: `(1/K) Σ q qᵀ - m mᵀ`.
pub(crate) fn covariance(points: &[Point3]) -> Mat3 {
    let Some(&anchor) = points.first() else {
        return [[0.0; 3]; 3];
    };
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sz) = (0.0, 0.0, 0.0);
    let (mut sxx, mut sxy, mut sxz, mut syy, mut syz, mut szz) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for &p in points {
        let (x, y, z) = (p.x - anchor.x, p.y - anchor.y, p.z - anchor.z);
        sx += x;
        sy += y;
        sz += z;
        sxx += x * x;
        sxy += x * y;
        sxz += x * z;
        syy += y * y;
        syz += y * z;
        szz += z * z;
    }
    let (mx, my, mz) = (sx / n, sy / n, sz / n);
    let xy = sxy / n - mx * my;
    let xz = sxz / n - mx * mz;
    let yz = syz / n - my * mz;
    [
        [sxx / n - mx * mx, xy, xz],
        [xy, syy / n - my * my, yz],
        [xz, yz, szz / n - mz * mz],
    ]
}

/// Relative size of the second eigenvalue under which a point set is
/// treated as collinear.
const COLLINEAR_RATIO: f64 = 1e-12;

/// Total least squares plane: normal is the eigenvector of the smallest
/// covariance eigenvalue, anchored at the centroid.
pub fn fit_plane_least_squares(points: &[Point3]) -> Result<Plane> {
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "need at least 3 points for a plane, got {}",
            points.len()
        )));
    }
    let e = eig3_symmetric(&covariance(points))?;
    if !(e.values[1] > COLLINEAR_RATIO * e.values[0]) {
        return Err(Error::DegenerateGeometry(
            "points are collinear or coincident".into(),
        ));
    }
    Plane::from_normal_and_point(e.vectors[2], centroid(points).expect("non-empty"))
}

/// RANSAC plane: the 3-point hypothesis with the most inliers
/// (`|distance| <= inlier_threshold`, ties keep the earliest), refit by
/// least squares on its inliers. Deterministic for a given seed.
pub fn fit_plane_ransac(
    points: &[Point3],
    inlier_threshold: f64,
    iterations: usize,
    seed: u64,
) -> Result<Plane> {
    if !(inlier_threshold >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inlier threshold must be >= 0, got {inlier_threshold}"
        )));
    }
    // Also rejects < 3 points and collinear sets.
    let fallback = fit_plane_least_squares(points)?;
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, Plane)> = None;
    for _ in 0..iterations {
        let pick = index::sample(&mut rng, n, 3);
        let (a, b, c) = (points[pick.index(0)], points[pick.index(1)], points[pick.index(2)]);
        let (ab, ac) = (b - a, c - a);
        let normal = ab.cross(ac);
        if normal.norm() <= 1e-12 * ab.norm() * ac.norm() {
            continue;
        }
        let Ok(plane) = Plane::from_normal_and_point(normal, a) else {
            continue;
        };
        let count = count_inliers(points, &plane, inlier_threshold);
        if best.is_none_or(|(c, _)| count > c) {
            best = Some((count, plane));
            if count == n {
                break;
            }
        }
    }
    let Some((_, plane)) = best else {
        return Ok(fallback);
    };
    let inliers: Vec<Point3> = points
        .iter()
        .copied()
        .filter(|&p| plane.signed_distance(p).abs() <= inlier_threshold)
        .collect();
    Ok(fit_plane_least_squares(&inliers).unwrap_or(plane))
}

fn count_inliers(points: &[Point3], plane: &Plane, threshold: f64) -> usize {
    points
        .iter()
        .filter(|&&p| plane.signed_distance(p).abs() <= threshold)
        .count()
}
