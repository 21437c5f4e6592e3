//! Small fixed-size linear algebra: 3-vectors, 3×3 matrices, the packed
//! symmetric parameterization, a Jacobi eigensolver and Gram-Schmidt frames.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    /// Returns `self / |self|`, failing when the norm is below 1e-9.
    pub fn normalized(self) -> Result<Vec3> {
        let n = self.norm();
        if !(n > 1e-9) {
            return Err(Error::DegenerateDirection(n));
        }
        Ok(self.scale(1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Checks the unit-norm refinement used for points on the sphere.
    pub fn ensure_unit(self, tol: f64) -> Result<()> {
        let n = self.norm();
        if self.is_finite() && (n - 1.0).abs() <= tol {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "expected a unit vector, got norm {n}"
            )))
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Dense 3×3 matrix, row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn zeros() -> Self {
        Mat3([[0.0; 3]; 3])
    }

    pub fn diag(d: [f64; 3]) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Mat3([[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]])
    }

    pub fn from_row_major(v: [f64; 9]) -> Self {
        Mat3([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        ]
    }

    /// Outer product `u vᵀ`.
    pub fn outer(u: Vec3, v: Vec3) -> Self {
        let (u, v) = (u.to_array(), v.to_array());
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = u[i] * v[j];
            }
        }
        m
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }

    pub fn set_col(&mut self, j: usize, v: Vec3) {
        self.0[0][j] = v.x;
        self.0[1][j] = v.y;
        self.0[2][j] = v.z;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                t.0[i][j] = self.0[j][i];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn det(&self) -> f64 {
        self.col(0).dot(self.col(1).cross(self.col(2)))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Mat3) -> f64 {
        let mut d = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        d
    }

    /// `vᵀ M v`.
    pub fn quadratic_form(&self, v: Vec3) -> f64 {
        v.dot(self.mul_vec(v))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut r = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                r.0[i][j] = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        r
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut r = self;
        for i in 0..3 {
            for j in 0..3 {
                r.0[i][j] += o.0[i][j];
            }
        }
        r
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, o: Mat3) -> Mat3 {
        let mut r = self;
        for i in 0..3 {
            for j in 0..3 {
                r.0[i][j] -= o.0[i][j];
            }
        }
        r
    }
}

/// Six parameters `(A11, A12, A13, A22, A23, A33)` of a symmetric matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PackedSym6(pub [f64; 6]);

/// Index of `(i, j)` (either order) in the packed layout.
pub const fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    match (r, c) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

/// Symmetric 3×3 matrix stored as its upper triangle, so `A = Aᵀ` always.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sym3 {
    upper: [f64; 6],
}

impl Sym3 {
    pub fn zeros() -> Self {
        Self { upper: [0.0; 6] }
    }

    pub fn diag(d: [f64; 3]) -> Self {
        Self { upper: [d[0], 0.0, 0.0, d[1], 0.0, d[2]] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[packed_index(i, j)]
    }

    /// Symmetrizes an arbitrary matrix as `(M + Mᵀ)/2`.
    pub fn from_mat3_symmetrized(m: &Mat3) -> Self {
        let mut upper = [0.0; 6];
        for i in 0..3 {
            for j in i..3 {
                upper[packed_index(i, j)] = 0.5 * (m.0[i][j] + m.0[j][i]);
            }
        }
        Self { upper }
    }

    pub fn to_mat3(&self) -> Mat3 {
        let mut m = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.get(i, j);
            }
        }
        m
    }

    pub fn add_identity(&self, c: f64) -> Self {
        let mut s = *self;
        s.upper[0] += c;
        s.upper[3] += c;
        s.upper[5] += c;
        s
    }

    pub fn trace(&self) -> f64 {
        self.upper[0] + self.upper[3] + self.upper[5]
    }

    pub fn quadratic_form(&self, v: Vec3) -> f64 {
        let u = &self.upper;
        u[0] * v.x * v.x
            + u[3] * v.y * v.y
            + u[5] * v.z * v.z
            + 2.0 * (u[1] * v.x * v.y + u[2] * v.x * v.z + u[4] * v.y * v.z)
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(|v| v.is_finite())
    }
}

/// `triu`: packed parameters to symmetric matrix.
pub fn triu_unpack(a: PackedSym6) -> Result<Sym3> {
    ensure_finite(&a.0, "packed symmetric parameters")?;
    Ok(Sym3 { upper: a.0 })
}

/// Inverse of [`triu_unpack`].
pub fn triu_pack(a: &Sym3) -> Result<PackedSym6> {
    ensure_finite(&a.upper, "symmetric matrix")?;
    Ok(PackedSym6(a.upper))
}

/// Eigendecomposition `A = D diag(λ) Dᵀ` with ascending `λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigSym3 {
    pub lambda: [f64; 3],
    pub frame: Mat3,
}

impl EigSym3 {
    pub fn reconstruct(&self) -> Mat3 {
        self.frame * Mat3::diag(self.lambda) * self.frame.transpose()
    }
}

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues are ascending. Each eigenvector's largest-magnitude component
/// (first one on ties) is made non-negative, then the last column is negated
/// if needed so that `det(D) = +1`.
pub fn eig_sym3(a: &Sym3) -> Result<EigSym3> {
    if !a.is_finite() {
        return Err(Error::InvalidArgument("matrix contains non-finite values".into()));
    }
    let mut m = a.to_mat3();
    let mut v = Mat3::IDENTITY;
    let scale = frobenius(&m);

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal(&m) <= JACOBI_TOL * scale {
            converged = true;
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            jacobi_rotate(&mut m, &mut v, p, q);
        }
    }
    if !converged && off_diagonal(&m) > JACOBI_TOL * scale {
        return Err(Error::Internal(format!(
            "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m.0[i][i].total_cmp(&m.0[j][j]));
    let lambda = order.map(|i| m.0[i][i]);
    let mut frame = Mat3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        let col = v.col(src);
        let arr = col.to_array();
        let mut big = 0;
        for k in 1..3 {
            if arr[k].abs() > arr[big].abs() {
                big = k;
            }
        }
        frame.set_col(dst, if arr[big] < 0.0 { -col } else { col });
    }
    if frame.det() < 0.0 {
        let c = frame.col(2);
        frame.set_col(2, -c);
    }
    Ok(EigSym3 { lambda, frame })
}

fn frobenius(m: &Mat3) -> f64 {
    m.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

fn off_diagonal(m: &Mat3) -> f64 {
    (2.0 * (m.0[0][1].powi(2) + m.0[0][2].powi(2) + m.0[1][2].powi(2))).sqrt()
}

fn jacobi_rotate(m: &mut Mat3, v: &mut Mat3, p: usize, q: usize) {
    let apq = m.0[p][q];
    if apq == 0.0 {
        return;
    }
    let theta = (m.0[q][q] - m.0[p][p]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let mut j = Mat3::IDENTITY;
    j.0[p][p] = c;
    j.0[q][q] = c;
    j.0[p][q] = s;
    j.0[q][p] = -s;
    *m = j.transpose() * *m * j;
    m.0[p][q] = 0.0;
    m.0[q][p] = 0.0;
    // keep exact symmetry of the working copy
    for (i, k) in [(0, 1), (0, 2), (1, 2)] {
        let avg = 0.5 * (m.0[i][k] + m.0[k][i]);
        m.0[i][k] = avg;
        m.0[k][i] = avg;
    }
    *v = *v * j;
}

/// Proper rotation with columns `[e_x e_y e_z]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation3(Mat3);

impl Rotation3 {
    pub const IDENTITY: Rotation3 = Rotation3(Mat3::IDENTITY);

    /// Validates orthonormality and handedness to 1e-10.
    pub fn new(m: Mat3) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidArgument("rotation contains non-finite values".into()));
        }
        let residual = (m.transpose() * m).max_abs_diff(&Mat3::IDENTITY);
        if residual > 1e-10 || (m.det() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "not a rotation: |RᵀR - I| = {residual:e}, det = {}",
                m.det()
            )));
        }
        Ok(Self(m))
    }

    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn ex(&self) -> Vec3 {
        self.0.col(0)
    }

    pub fn ey(&self) -> Vec3 {
        self.0.col(1)
    }

    pub fn ez(&self) -> Vec3 {
        self.0.col(2)
    }

    /// Rotation about `axis` (normalized internally) by `angle` radians.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self> {
        let k = axis.normalized()?;
        let (s, c) = angle.sin_cos();
        let kx = Mat3([[0.0, -k.z, k.y], [k.z, 0.0, -k.x], [-k.y, k.x, 0.0]]);
        let m = Mat3::IDENTITY + scale_mat(&kx, s) + scale_mat(&(kx * kx), 1.0 - c);
        Ok(Self(m))
    }

    pub fn compose(&self, other: &Rotation3) -> Rotation3 {
        Rotation3(self.0 * other.0)
    }
}

fn scale_mat(m: &Mat3, s: f64) -> Mat3 {
    let mut r = *m;
    r.0.iter_mut().flatten().for_each(|v| *v *= s);
    r
}

/// Builds `[ê_x, ê_z × ê_x, ê_z]`, keeping the direction of `e_x` and
/// projecting `e_z` onto its orthogonal complement.
pub fn gram_schmidt_rotation(e_x: Vec3, e_z: Vec3) -> Result<Rotation3> {
    if !e_x.is_finite() || !e_z.is_finite() {
        return Err(Error::DegenerateFrame("non-finite input".into()));
    }
    let ex = e_x
        .normalized()
        .map_err(|_| Error::DegenerateFrame(format!("|e_x| = {:e}", e_x.norm())))?;
    let ez_dir = e_z
        .normalized()
        .map_err(|_| Error::DegenerateFrame(format!("|e_z| = {:e}", e_z.norm())))?;
    if ex.dot(ez_dir).abs() >= 1.0 - 1e-9 {
        return Err(Error::DegenerateFrame("e_z is parallel to e_x".into()));
    }
    let ez = (e_z - ex * ex.dot(e_z))
        .normalized()
        .map_err(|_| Error::DegenerateFrame("e_z is parallel to e_x".into()))?;
    let ey = ez.cross(ex);
    Ok(Rotation3(Mat3::from_cols(ex, ey, ez)))
}
