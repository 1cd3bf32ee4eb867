//! Synthetic street scenes with exact ground truth.
//!
//! A scene is a tilted ground plane plus objects standing on it. Every
//! element draws exactly the number of points it asks for, so label counts
//! are known in advance. Objects follow the ground: their heights are
//! measured from the plane below each point.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Label, Point3, PointCloud};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundSpec {
    /// Plane `n·p + offset = 0`; `n` need not be unit length but must point
    /// upwards.
    pub normal: [f64; 3],
    #[serde(default)]
    pub offset: f64,
    /// `[xmin, ymin, xmax, ymax]` of the sampled area.
    pub extent: [f64; 4],
    pub points: usize,
}

/// Axis-aligned box resting on the ground; sides and top are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub center: [f64; 2],
    /// Length along x, width along y, height.
    pub size: [f64; 3],
    pub points: usize,
}

/// Vertical cylinder surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleSpec {
    pub position: [f64; 2],
    pub radius: f64,
    pub height: f64,
    pub points: usize,
}

/// Vertical rectangle between two ground points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallSpec {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub height: f64,
    pub points: usize,
}

/// Ball of scattered points whose lowest point is `min_height` above the
/// ground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub min_height: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    /// Standard deviation (m) of Gaussian noise: along the plane normal for
    /// ground points, per axis for object points.
    pub noise: f64,
    pub ground: GroundSpec,
    #[serde(default)]
    pub boxes: Vec<BoxSpec>,
    #[serde(default)]
    pub poles: Vec<PoleSpec>,
    #[serde(default)]
    pub walls: Vec<WallSpec>,
    #[serde(default)]
    pub vegetation: Vec<BlobSpec>,
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidSpec(msg.into()))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be > 0, got {v}"))
    }
}

fn counted(name: &str, n: usize) -> Result<()> {
    if n == 0 {
        invalid(format!("{name} needs at least one point"))
    } else {
        Ok(())
    }
}

impl SceneSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene spec serialises")
    }

    pub fn total_points(&self) -> usize {
        self.ground.points + self.object_points()
    }

    pub fn object_points(&self) -> usize {
        self.boxes.iter().map(|b| b.points).sum::<usize>()
            + self.poles.iter().map(|p| p.points).sum::<usize>()
            + self.walls.iter().map(|w| w.points).sum::<usize>()
            + self.vegetation.iter().map(|v| v.points).sum::<usize>()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return invalid(format!("noise must be >= 0, got {}", self.noise));
        }
        let g = &self.ground;
        let n = Point3::from(g.normal);
        if !(n.is_finite() && g.offset.is_finite()) || n.z <= 1e-6 * n.norm() {
            return invalid("ground normal must be finite and point upwards");
        }
        let [x0, y0, x1, y1] = g.extent;
        if !(x1 > x0 && y1 > y0) || g.extent.iter().any(|v| !v.is_finite()) {
            return invalid("ground extent must be [xmin, ymin, xmax, ymax] with positive size");
        }
        counted("ground", g.points)?;
        for b in &self.boxes {
            counted("box", b.points)?;
            b.size.iter().try_for_each(|&s| positive("box size", s))?;
        }
        for p in &self.poles {
            counted("pole", p.points)?;
            positive("pole radius", p.radius)?;
            positive("pole height", p.height)?;
        }
        for w in &self.walls {
            counted("wall", w.points)?;
            positive("wall height", w.height)?;
            let len = ((w.end[0] - w.start[0]).powi(2) + (w.end[1] - w.start[1]).powi(2)).sqrt();
            positive("wall length", len)?;
        }
        for v in &self.vegetation {
            counted("vegetation", v.points)?;
            positive("vegetation radius", v.radius)?;
            if !(v.min_height >= 0.0 && v.min_height.is_finite()) {
                return invalid("vegetation min height must be >= 0");
            }
        }
        Ok(())
    }

    /// A 30 m × 20 m street: tilted road surface, parked cars, a kiosk,
    /// lamp posts, two facades and trees. Roughly 70% of the `n` points are
    /// ground; the tilt (at most 2°) and its direction come from `seed`.
    pub fn street(seed: u64, n: usize) -> Self {
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 0x5ee_d0f5_7ee7);
        let tilt = r.random_range(0.5f64..2.0).to_radians();
        let dir = r.random_range(0.0..TAU);
        let normal = [tilt.sin() * dir.cos(), tilt.sin() * dir.sin(), tilt.cos()];
        let ground_points = n * 7 / 10;
        let objects = n - ground_points;
        // Shares of the object budget, in thousandths.
        let share = |permille: usize| objects * permille / 1000;

        let mut boxes = Vec::new();
        for i in 0..5 {
            let x = 3.0 + 5.5 * i as f64 + r.random_range(-0.5..0.5);
            let y = if i % 2 == 0 { 4.0 } else { 16.0 };
            boxes.push(BoxSpec {
                center: [x, y],
                size: [4.2, 1.8, r.random_range(1.4..1.7)],
                points: share(70),
            });
        }
        boxes.push(BoxSpec {
            center: [15.0, 10.0],
            size: [2.5, 2.5, 2.6],
            points: share(60),
        });
        let poles = (0..6)
            .map(|i| PoleSpec {
                position: [2.0 + 5.2 * i as f64, if i % 2 == 0 { 2.0 } else { 18.0 }],
                radius: 0.08,
                height: 6.0,
                points: share(20),
            })
            .collect();
        let walls = vec![
            WallSpec {
                start: [0.0, 19.7],
                end: [30.0, 19.7],
                height: 8.0,
                points: share(150),
            },
            WallSpec {
                start: [29.7, 0.0],
                end: [29.7, 19.5],
                height: 6.0,
                points: share(120),
            },
        ];
        let vegetation = (0..5)
            .map(|i| BlobSpec {
                center: [4.0 + 6.0 * i as f64, 10.0 + r.random_range(-2.0..2.0)],
                radius: r.random_range(1.0..1.6),
                min_height: r.random_range(1.5..2.5),
                points: share(40),
            })
            .collect();
        let mut spec = Self {
            seed,
            noise: 0.02,
            ground: GroundSpec {
                normal,
                offset: 0.0,
                extent: [0.0, 0.0, 30.0, 20.0],
                points: ground_points,
            },
            boxes,
            poles,
            walls,
            vegetation,
        };
        // Rounding leftovers go to the first facade so the total is exact.
        let missing = n - spec.total_points();
        spec.walls[0].points += missing;
        spec
    }
}

struct GroundPlane {
    n: Point3,
    offset: f64,
}

impl GroundPlane {
    fn z(&self, x: f64, y: f64) -> f64 {
        -(self.n.x * x + self.n.y * y + self.offset) / self.n.z
    }
}

/// Is `(x, y)` inside an object footprint that hides the ground?
fn covered(spec: &SceneSpec, x: f64, y: f64) -> bool {
    spec.boxes.iter().any(|b| {
        (x - b.center[0]).abs() <= b.size[0] / 2.0 && (y - b.center[1]).abs() <= b.size[1] / 2.0
    }) || spec.poles.iter().any(|p| {
        (x - p.position[0]).powi(2) + (y - p.position[1]).powi(2) <= p.radius * p.radius
    })
}

/// Generates the scene; points come out ground first, then boxes, poles,
/// walls and vegetation, each with its truth label.
pub fn generate_scene(spec: &SceneSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let n = Point3::from(spec.ground.normal);
    let len = n.norm();
    let plane = GroundPlane {
        n: n / len,
        offset: spec.ground.offset / len,
    };

    let total = spec.total_points();
    let mut pts = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);

    let [x0, y0, x1, y1] = spec.ground.extent;
    let max_attempts = 1000 * spec.ground.points.max(1000);
    let mut attempts = 0usize;
    while pts.len() < spec.ground.points {
        attempts += 1;
        if attempts > max_attempts {
            return invalid("objects cover too much of the ground extent");
        }
        let (x, y) = (rng.random_range(x0..x1), rng.random_range(y0..y1));
        if covered(spec, x, y) {
            continue;
        }
        let p = Point3::new(x, y, plane.z(x, y)) + plane.n * noise.sample(&mut rng);
        pts.push(p);
        labels.push(Label::Ground);
    }

    let jitter = |rng: &mut ChaCha8Rng| {
        Point3::new(noise.sample(rng), noise.sample(rng), noise.sample(rng))
    };
    let mut object = |p: Point3, rng: &mut ChaCha8Rng| {
        pts.push(p + jitter(rng));
        labels.push(Label::NonGround);
    };

    for b in &spec.boxes {
        let [l, w, h] = b.size;
        let (cx, cy) = (b.center[0], b.center[1]);
        let top = plane.z(cx, cy) + h;
        // Faces weighted by area: two x-faces, two y-faces, top.
        let areas = [w * h, w * h, l * h, l * h, l * w];
        let sum: f64 = areas.iter().sum();
        for _ in 0..b.points {
            let mut pick = rng.random_range(0.0..sum);
            let mut face = 0;
            while face < 4 && pick >= areas[face] {
                pick -= areas[face];
                face += 1;
            }
            let u = rng.random_range(-0.5..0.5);
            let (x, y) = match face {
                0 => (cx - l / 2.0, cy + u * w),
                1 => (cx + l / 2.0, cy + u * w),
                2 => (cx + u * l, cy - w / 2.0),
                3 => (cx + u * l, cy + w / 2.0),
                _ => (cx + u * l, cy + rng.random_range(-0.5..0.5) * w),
            };
            let z = if face == 4 {
                top
            } else {
                let base = plane.z(x, y);
                base + rng.random_range(0.0..1.0) * (top - base)
            };
            object(Point3::new(x, y, z), &mut rng);
        }
    }
    for p in &spec.poles {
        for _ in 0..p.points {
            let a = rng.random_range(0.0..TAU);
            let (x, y) = (p.position[0] + p.radius * a.cos(), p.position[1] + p.radius * a.sin());
            let z = plane.z(x, y) + rng.random_range(0.0..p.height);
            object(Point3::new(x, y, z), &mut rng);
        }
    }
    for w in &spec.walls {
        for _ in 0..w.points {
            let t = rng.random_range(0.0..1.0);
            let x = w.start[0] + t * (w.end[0] - w.start[0]);
            let y = w.start[1] + t * (w.end[1] - w.start[1]);
            let z = plane.z(x, y) + rng.random_range(0.0..w.height);
            object(Point3::new(x, y, z), &mut rng);
        }
    }
    for v in &spec.vegetation {
        let (cx, cy) = (v.center[0], v.center[1]);
        let cz = plane.z(cx, cy) + v.min_height + v.radius;
        for _ in 0..v.points {
            let d = loop {
                let d = Point3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                if d.norm_squared() <= 1.0 {
                    break d;
                }
            };
            object(Point3::new(cx, cy, cz) + d * v.radius, &mut rng);
        }
    }

    PointCloud::new(pts)?.with_labels(labels)
}
