use super::Point3;
use crate::error::{Error, Result};

/// Row-major 3x3 matrix.
pub type Mat3 = [[f64; 3]; 3];

/// Eigen-pairs of a symmetric 3x3 matrix, sorted by descending eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenDecomposition3 {
    pub values: [f64; 3],
    /// Unit, mutually orthogonal; `vectors[j]` belongs to `values[j]`.
    pub vectors: [Point3; 3],
}

/// Relative gap below which the isolated eigenvalue is too close to its
/// neighbour for the closed-form eigenvector, and Jacobi sweeps take over.
const DEGENERATE_GAP: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;

/// Eigen-decomposition of a symmetric 3x3 matrix.
///
/// Eigenvalues come from the trigonometric solution of the characteristic
/// polynomial. The eigenvector of the better separated extreme eigenvalue is
/// taken from cross products of rows of `S - λI`; the remaining two are the
/// exact rotation that diagonalizes `S` restricted to its orthogonal
/// complement, so the basis is orthonormal to rounding. A cyclic Jacobi
/// solver handles matrices whose spectrum is (nearly) a single value.
pub fn eig3_symmetric(s: &Mat3) -> Result<EigenDecomposition3> {
    let mut scale = 0.0f64;
    for row in s {
        for &v in row {
            if !v.is_finite() {
                return Err(Error::InvalidMatrix("non-finite entry".into()));
            }
            scale = scale.max(v.abs());
        }
    }
    let tol = SYMMETRY_TOL * scale.max(1.0);
    for i in 0..3 {
        for j in (i + 1)..3 {
            if (s[i][j] - s[j][i]).abs() > tol {
                return Err(Error::InvalidMatrix(format!(
                    "not symmetric at ({i},{j}): {} vs {}",
                    s[i][j], s[j][i]
                )));
            }
        }
    }
    if scale == 0.0 {
        return Ok(EigenDecomposition3 {
            values: [0.0; 3],
            vectors: [
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, 0.0, 1.0),
            ],
        });
    }

    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = 0.5 * (s[i][j] + s[j][i]) / scale;
        }
    }

    let pairs = closed_form(&b).unwrap_or_else(|| jacobi(&b));
    let mut pairs = pairs;
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(EigenDecomposition3 {
        values: [pairs[0].0 * scale, pairs[1].0 * scale, pairs[2].0 * scale],
        vectors: [pairs[0].1, pairs[1].1, pairs[2].1],
    })
}

fn mat_vec(m: &Mat3, v: Point3) -> Point3 {
    Point3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

fn closed_form(b: &Mat3) -> Option<[(f64, Point3); 3]> {
    let off = b[0][1] * b[0][1] + b[0][2] * b[0][2] + b[1][2] * b[1][2];
    let q = (b[0][0] + b[1][1] + b[2][2]) / 3.0;
    let (d0, d1, d2) = (b[0][0] - q, b[1][1] - q, b[2][2] - q);
    let p = ((d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * off) / 6.0).sqrt();
    if p == 0.0 {
        return None;
    }
    // det((B - qI) / p) / 2
    let (a00, a11, a22) = (d0 / p, d1 / p, d2 / p);
    let (a01, a02, a12) = (b[0][1] / p, b[0][2] / p, b[1][2] / p);
    let det = a00 * (a11 * a22 - a12 * a12) - a01 * (a01 * a22 - a12 * a02)
        + a02 * (a01 * a12 - a11 * a02);
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let mid = 3.0 * q - hi - lo;

    let (isolated, gap) = if hi - mid >= mid - lo {
        (hi, hi - mid)
    } else {
        (lo, mid - lo)
    };
    if gap < DEGENERATE_GAP {
        return None;
    }

    let v = null_vector(b, isolated)?;
    let lambda_v = v.dot(mat_vec(b, v));

    // Orthonormal basis (u, w) of the plane orthogonal to v.
    let u = if v.x.abs() > v.y.abs() {
        Point3::new(-v.z, 0.0, v.x)
    } else {
        Point3::new(0.0, v.z, -v.y)
    }
    .normalized()?;
    let w = v.cross(u);

    let bu = mat_vec(b, u);
    let bw = mat_vec(b, w);
    let (m11, m12, m22) = (u.dot(bu), u.dot(bw), w.dot(bw));
    let (l1, e1, l2, e2) = if m12 == 0.0 {
        (m11, u, m22, w)
    } else {
        let tau = (m22 - m11) / (2.0 * m12);
        let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = t * c;
        (m11 - t * m12, u * c - w * s, m22 + t * m12, u * s + w * c)
    };
    Some([(lambda_v, v), (l1, e1), (l2, e2)])
}

/// Unit vector spanning the null space of `B - λI`, from the largest cross
/// product of its rows.
fn null_vector(b: &Mat3, lambda: f64) -> Option<Point3> {
    let r0 = Point3::new(b[0][0] - lambda, b[0][1], b[0][2]);
    let r1 = Point3::new(b[1][0], b[1][1] - lambda, b[1][2]);
    let r2 = Point3::new(b[2][0], b[2][1], b[2][2] - lambda);
    let c = [r0.cross(r1), r0.cross(r2), r1.cross(r2)];
    let best = c
        .iter()
        .copied()
        .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))?;
    if best.norm_squared() < 1e-300 {
        return None;
    }
    best.normalized()
}

fn jacobi(b: &Mat3) -> [(f64, Point3); 3] {
    let mut a = *b;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _sweep in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let tau = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = if tau >= 0.0 { 1.0 } else { -1.0 } / (tau.abs() + (1.0 + tau * tau).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let col = |j: usize| Point3::new(v[0][j], v[1][j], v[2][j]);
    [(a[0][0], col(0)), (a[1][1], col(1)), (a[2][2], col(2))]
}
