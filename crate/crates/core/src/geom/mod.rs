//! Geometry primitives shared by both filters: points, clouds, planes,
//! logistic standardization and the 3x3 symmetric eigen-solver.

mod eigen;
mod plane;

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eigen::{eig3_symmetric, EigenDecomposition3, Mat3};
pub use plane::{fit_plane_least_squares, fit_plane_ransac, point_plane_distance, Plane};
pub(crate) use plane::covariance;

/// A point (or direction) in metric coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn axis(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl Add for Point3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Self;
    fn div(self, s: f64) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Point3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Binary ground filtering class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Ground,
    NonGround,
}

impl Label {
    pub fn is_ground(self) -> bool {
        self == Label::Ground
    }

    /// Export encoding: Ground = 1, NonGround = 0.
    pub fn code(self) -> u8 {
        match self {
            Label::Ground => 1,
            Label::NonGround => 0,
        }
    }
}

/// An ordered set of points with optional per-point annotations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub labels: Option<Vec<Label>>,
    /// Original indices in some source file, when the cloud is a subset.
    pub source_ids: Option<Vec<usize>>,
    /// Raw dataset class ids, kept alongside the binary labels.
    pub class_ids: Option<Vec<i64>>,
}

impl PointCloud {
    /// Builds a cloud, rejecting non-finite coordinates.
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        Ok(Self {
            points,
            ..Default::default()
        })
    }

    pub fn with_labels(mut self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} points",
                labels.len(),
                self.points.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Copies the selected points (and any annotations) into a new cloud.
    /// `source_ids` of the result refer to indices in `self`.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            source_ids: Some(indices.to_vec()),
            class_ids: self
                .class_ids
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
        }
    }
}

/// Mean of a set of points, accumulated relative to the first point so that
/// identical inputs reproduce their value exactly.
pub fn centroid(points: &[Point3]) -> Option<Point3> {
    let anchor = *points.first()?;
    let mut acc = Point3::default();
    for &p in points {
        acc = acc + (p - anchor);
    }
    Some(anchor + acc / points.len() as f64)
}

/// `σ` in the logistic standardization is the population standard deviation,
/// i.e. the square root of the mean squared deviation.
pub const STD_DEV_IS_SQRT_OF_VARIANCE: bool = true;

/// Per-axis statistics used by [`standardize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: Point3,
    pub std_dev: Point3,
    pub spread: f64,
}

impl StandardizationParams {
    /// Logistic transform of a single point.
    pub fn apply(&self, p: Point3) -> Point3 {
        Point3::new(
            logistic_axis(p.x, self.mean.x, self.std_dev.x, self.spread),
            logistic_axis(p.y, self.mean.y, self.std_dev.y, self.spread),
            logistic_axis(p.z, self.mean.z, self.std_dev.z, self.spread),
        )
    }
}

// Largest double below 1 and smallest positive normal: keeps the output in
// the open interval even where 1/(1+e^-t) rounds to 0 or 1.
const LOGISTIC_HI: f64 = 1.0 - f64::EPSILON / 2.0;
const LOGISTIC_LO: f64 = f64::MIN_POSITIVE;

#[inline]
fn logistic_axis(v: f64, mean: f64, std_dev: f64, spread: f64) -> f64 {
    if std_dev == 0.0 {
        return 0.5;
    }
    let tau = (v - mean) / (spread * std_dev);
    (1.0 / (1.0 + (-tau).exp())).clamp(LOGISTIC_LO, LOGISTIC_HI)
}

/// Maps every coordinate through the logistic function of its per-axis
/// z-score, `1 / (1 + exp(-(v - mean) / (r * σ)))`.
///
/// An axis with zero spread maps to 0.5 for every point.
pub fn standardize(cloud: &PointCloud, r: f64) -> Result<(PointCloud, StandardizationParams)> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("spread r must be > 0, got {r}")));
    }
    let n = cloud.len() as f64;
    let mean = centroid(&cloud.points).expect("non-empty");
    let mut var = Point3::default();
    for &p in &cloud.points {
        let d = p - mean;
        var = var + Point3::new(d.x * d.x, d.y * d.y, d.z * d.z);
    }
    let var = var / n;
    let params = StandardizationParams {
        mean,
        std_dev: Point3::new(var.x.sqrt(), var.y.sqrt(), var.z.sqrt()),
        spread: r,
    };
    let points = cloud.points.iter().map(|&p| params.apply(p)).collect();
    let out = PointCloud {
        points,
        labels: cloud.labels.clone(),
        source_ids: cloud.source_ids.clone(),
        class_ids: cloud.class_ids.clone(),
    };
    Ok((out, params))
}
