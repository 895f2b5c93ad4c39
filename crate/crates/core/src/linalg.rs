//! Fixed-size 2×2 matrices and 2-vectors.

use core::ops::{Add, Index, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vector2(pub [f64; 2]);

/// Row-major 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Matrix2(pub [[f64; 2]; 2]);

impl Vector2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vector2([x, y])
    }

    pub fn dot(self, other: Vector2) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1]
    }

    /// `self * other^T`.
    pub fn outer(self, other: Vector2) -> Matrix2 {
        let [a, b] = self.0;
        let [c, d] = other.0;
        Matrix2([[a * c, a * d], [b * c, b * d]])
    }

    pub fn scale(self, k: f64) -> Vector2 {
        Vector2([self.0[0] * k, self.0[1] * k])
    }

    /// Row-vector product `self * m`.
    pub fn mul_left(self, m: &Matrix2) -> Vector2 {
        let [x, y] = self.0;
        Vector2([x * m.0[0][0] + y * m.0[1][0], x * m.0[0][1] + y * m.0[1][1]])
    }

    pub fn max_abs_diff(self, other: Vector2) -> f64 {
        (self.0[0] - other.0[0]).abs().max((self.0[1] - other.0[1]).abs())
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for Vector2 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Matrix2 = Matrix2([[0.0, 0.0], [0.0, 0.0]]);
    /// `[[1, -1], [-1, 1]]`, the shape shared by every limiting covariance of the model.
    pub const CONTRAST: Matrix2 = Matrix2([[1.0, -1.0], [-1.0, 1.0]]);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Matrix2([[a11, a12], [a21, a22]])
    }

    pub const fn diag(d1: f64, d2: f64) -> Self {
        Matrix2([[d1, 0.0], [0.0, d2]])
    }

    pub fn from_columns(c1: Vector2, c2: Vector2) -> Self {
        Matrix2([[c1.0[0], c2.0[0]], [c1.0[1], c2.0[1]]])
    }

    pub fn column(&self, j: usize) -> Vector2 {
        Vector2([self.0[0][j], self.0[1][j]])
    }

    pub fn row(&self, i: usize) -> Vector2 {
        Vector2(self.0[i])
    }

    pub fn transpose(&self) -> Matrix2 {
        let [[a, b], [c, d]] = self.0;
        Matrix2([[a, c], [b, d]])
    }

    pub fn scale(&self, k: f64) -> Matrix2 {
        let [[a, b], [c, d]] = self.0;
        Matrix2([[a * k, b * k], [c * k, d * k]])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn inverse(&self) -> Option<Matrix2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let [[a, b], [c, d]] = self.0;
        Some(Matrix2([[d / det, -b / det], [-c / det, a / det]]))
    }

    pub fn apply(&self, v: Vector2) -> Vector2 {
        let [x, y] = v.0;
        Vector2([self.0[0][0] * x + self.0[0][1] * y, self.0[1][0] * x + self.0[1][1] * y])
    }

    /// `self * m * self^T`.
    pub fn congruence(&self, m: &Matrix2) -> Matrix2 {
        *self * *m * self.transpose()
    }

    pub fn max_abs_diff(&self, other: &Matrix2) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_diff(&Matrix2::ZERO)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.0[0][1] - self.0[1][0]).abs() <= tol
    }

    pub fn column_sums(&self) -> Vector2 {
        Vector2([self.0[0][0] + self.0[1][0], self.0[0][1] + self.0[1][1]])
    }
}

impl Index<(usize, usize)> for Matrix2 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl Add for Matrix2 {
    type Output = Matrix2;
    fn add(self, rhs: Matrix2) -> Matrix2 {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for Matrix2 {
    type Output = Matrix2;
    fn sub(self, rhs: Matrix2) -> Matrix2 {
        self + (-rhs)
    }
}

impl Neg for Matrix2 {
    type Output = Matrix2;
    fn neg(self) -> Matrix2 {
        self.scale(-1.0)
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;
    fn mul(self, rhs: Matrix2) -> Matrix2 {
        let a = &self.0;
        let b = &rhs.0;
        Matrix2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }
}

impl Mul<Vector2> for Matrix2 {
    type Output = Vector2;
    fn mul(self, v: Vector2) -> Vector2 {
        self.apply(v)
    }
}

impl Add for Vector2 {
    type Output = Vector2;
    fn add(self, rhs: Vector2) -> Vector2 {
        Vector2([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1]])
    }
}

impl Sub for Vector2 {
    type Output = Vector2;
    fn sub(self, rhs: Vector2) -> Vector2 {
        Vector2([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1]])
    }
}
