//! Dense 2- and 3-dimensional vectors and 3×3 matrices over [`Scalar`].
//!
//! Hand-rolled on purpose: every entry carries tangent lanes, so the types
//! stay small, `Copy`, and free of trait plumbing. Row-major storage.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use super::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: Scalar,
    pub y: Scalar,
}

impl Vec2 {
    pub fn new(x: Scalar, y: Scalar) -> Self {
        Vec2 { x, y }
    }

    pub fn from_f64(x: f64, y: f64) -> Self {
        Vec2 { x: Scalar::new(x), y: Scalar::new(y) }
    }

    pub fn zero() -> Self {
        Vec2::from_f64(0.0, 0.0)
    }

    pub fn norm_sq(self) -> Scalar {
        self.x * self.x + self.y * self.y
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, r: Vec2) -> Vec2 {
        Vec2::new(self.x + r.x, self.y + r.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, r: Vec2) -> Vec2 {
        Vec2::new(self.x - r.x, self.y - r.y)
    }
}

impl Mul<Scalar> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: Scalar) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: Scalar,
    pub y: Scalar,
    pub z: Scalar,
}

impl Vec3 {
    #[inline]
    pub fn new(x: Scalar, y: Scalar, z: Scalar) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn from_f64(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x: Scalar::new(x), y: Scalar::new(y), z: Scalar::new(z) }
    }

    #[inline]
    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::from_f64(a[0], a[1], a[2])
    }

    #[inline]
    pub fn zero() -> Self {
        Vec3::from_f64(0.0, 0.0, 0.0)
    }

    #[inline]
    pub fn splat(v: Scalar) -> Self {
        Vec3 { x: v, y: v, z: v }
    }

    #[inline]
    pub fn dot(self, r: Vec3) -> Scalar {
        self.x * r.x + self.y * r.y + self.z * r.z
    }

    #[inline]
    pub fn cross(self, r: Vec3) -> Vec3 {
        Vec3::new(
            self.y * r.z - self.z * r.y,
            self.z * r.x - self.x * r.z,
            self.x * r.y - self.y * r.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> Scalar {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> Scalar {
        self.norm_sq().sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        Vec3::new(self.x / n, self.y / n, self.z / n)
    }

    /// Outer product `self * rᵀ`.
    #[inline]
    pub fn outer(self, r: Vec3) -> Mat3 {
        Mat3 {
            m: [
                [self.x * r.x, self.x * r.y, self.x * r.z],
                [self.y * r.x, self.y * r.y, self.y * r.z],
                [self.z * r.x, self.z * r.y, self.z * r.z],
            ],
        }
    }

    #[inline]
    pub fn values(self) -> [f64; 3] {
        [self.x.val, self.y.val, self.z.val]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn comp(self, i: usize) -> Scalar {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, r: Vec3) -> Vec3 {
        Vec3::new(self.x + r.x, self.y + r.y, self.z + r.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, r: Vec3) {
        self.x += r.x;
        self.y += r.y;
        self.z += r.z;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, r: Vec3) -> Vec3 {
        Vec3::new(self.x - r.x, self.y - r.y, self.z - r.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<Scalar> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: Scalar) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// 3×3 matrix, row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3 {
    pub m: [[Scalar; 3]; 3],
}

impl Mat3 {
    #[inline]
    pub fn zero() -> Self {
        Mat3 { m: [[Scalar::zero(); 3]; 3] }
    }

    #[inline]
    pub fn identity() -> Self {
        let mut out = Mat3::zero();
        for i in 0..3 {
            out.m[i][i] = Scalar::one();
        }
        out
    }

    pub fn from_rows(r0: [f64; 3], r1: [f64; 3], r2: [f64; 3]) -> Self {
        let row = |r: [f64; 3]| [Scalar::new(r[0]), Scalar::new(r[1]), Scalar::new(r[2])];
        Mat3 { m: [row(r0), row(r1), row(r2)] }
    }

    pub fn from_diag(d: Vec3) -> Self {
        let mut out = Mat3::zero();
        out.m[0][0] = d.x;
        out.m[1][1] = d.y;
        out.m[2][2] = d.z;
        out
    }

    #[inline]
    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    #[inline]
    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::new(self.m[i][0], self.m[i][1], self.m[i][2])
    }

    pub fn set_col(&mut self, j: usize, v: Vec3) {
        self.m[0][j] = v.x;
        self.m[1][j] = v.y;
        self.m[2][j] = v.z;
    }

    #[inline]
    pub fn transpose(&self) -> Mat3 {
        let mut out = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[j][i];
            }
        }
        out
    }

    #[inline]
    pub fn trace(&self) -> Scalar {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn determinant(&self) -> Scalar {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse by adjugate; caller guarantees a nonzero determinant.
    pub fn inverse(&self) -> Mat3 {
        let m = &self.m;
        let det = self.determinant();
        let mut adj = Mat3::zero();
        adj.m[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
        adj.m[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
        adj.m[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
        adj.m[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
        adj.m[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
        adj.m[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
        adj.m[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
        adj.m[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
        adj.m[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let inv = det.recip();
        let mut out = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = adj.m[i][j] * inv;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> Scalar {
        let mut acc = Scalar::zero();
        for i in 0..3 {
            for j in 0..3 {
                acc += self.m[i][j] * self.m[i][j];
            }
        }
        acc.sqrt()
    }

    pub fn scale(&self, s: Scalar) -> Mat3 {
        let mut out = *self;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = out.m[i][j] * s;
            }
        }
        out
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetric_part(&self) -> Mat3 {
        let t = self.transpose();
        let mut out = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = (self.m[i][j] + t.m[i][j]) * 0.5;
            }
        }
        out
    }

    /// `A - tr(A)/3 * I`.
    pub fn deviatoric(&self) -> Mat3 {
        let third = self.trace() * (1.0 / 3.0);
        let mut out = *self;
        for i in 0..3 {
            out.m[i][i] = out.m[i][i] - third;
        }
        out
    }

    pub fn values(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.m[i][j].val;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|s| s.is_finite())
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, r: Mat3) -> Mat3 {
        let mut out = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[i][j] + r.m[i][j];
            }
        }
        out
    }
}

impl AddAssign for Mat3 {
    fn add_assign(&mut self, r: Mat3) {
        for i in 0..3 {
            for j in 0..3 {
                self.m[i][j] += r.m[i][j];
            }
        }
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, r: Mat3) -> Mat3 {
        let mut out = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[i][j] - r.m[i][j];
            }
        }
        out
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    #[inline]
    fn mul(self, r: Mat3) -> Mat3 {
        let mut out = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] =
                    self.m[i][0] * r.m[0][j] + self.m[i][1] * r.m[1][j] + self.m[i][2] * r.m[2][j];
            }
        }
        out
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = Scalar;
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.m[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        &mut self.m[i][j]
    }
}

/// Rotation matrix from an axis (need not be unit) and an angle in radians.
/// Rodrigues formula on plain values; used by tests and scene setup.
pub fn rotation_from_axis_angle(axis: [f64; 3], angle: f64) -> Mat3 {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let (ux, uy, uz) = (axis[0] / n, axis[1] / n, axis[2] / n);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    Mat3::from_rows(
        [c + ux * ux * t, ux * uy * t - uz * s, ux * uz * t + uy * s],
        [uy * ux * t + uz * s, c + uy * uy * t, uy * uz * t - ux * s],
        [uz * ux * t - uy * s, uz * uy * t + ux * s, c + uz * uz * t],
    )
}
