//! Exact integer and rational linear algebra in three dimensions.
//!
//! Everything here works on 3-vectors and 3×3 matrices only: quadratic forms
//! and their square roots, adjugates, the cross-product ("wedge") identity
//! `Mᵀ((Mu)∧(Mx)) = det(M)(u∧x)`, two-dimensional lattice reduction under an
//! arbitrary positive metric, and the completion of a primitive vector to a
//! unimodular basis together with a reduced basis of its orthogonal lattice.

use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used for floating-point form identities.
pub const FORM_TOLERANCE: f64 = 1e-12;

/// A point of `Z³`. Ordering is lexicographic in the coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntVec3(pub [i64; 3]);

impl IntVec3 {
    pub const ZERO: IntVec3 = IntVec3([0, 0, 0]);

    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        IntVec3([x, y, z])
    }

    pub fn unit(axis: usize) -> Self {
        let mut c = [0; 3];
        c[axis] = 1;
        IntVec3(c)
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0, 0, 0]
    }

    pub fn dot(&self, other: &IntVec3) -> i128 {
        (0..3).map(|i| self.0[i] as i128 * other.0[i] as i128).sum()
    }

    pub fn norm_sq(&self) -> i128 {
        self.dot(self)
    }

    /// Cross product `self ∧ other`.
    pub fn wedge(&self, other: &IntVec3) -> IntVec3 {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = other.0;
        IntVec3([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    /// Greatest common divisor of the coordinates (0 for the zero vector).
    pub fn content(&self) -> i64 {
        self.0.iter().fold(0i64, |g, &c| g.gcd(&c))
    }

    pub fn to_f64(&self) -> Vector3<f64> {
        Vector3::new(self.0[0] as f64, self.0[1] as f64, self.0[2] as f64)
    }

    pub fn max_abs(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }
}

impl fmt::Display for IntVec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

impl Index<usize> for IntVec3 {
    type Output = i64;
    fn index(&self, i: usize) -> &i64 {
        &self.0[i]
    }
}

impl Add for IntVec3 {
    type Output = IntVec3;
    fn add(self, o: IntVec3) -> IntVec3 {
        IntVec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl AddAssign for IntVec3 {
    fn add_assign(&mut self, o: IntVec3) {
        *self = *self + o;
    }
}

impl Sub for IntVec3 {
    type Output = IntVec3;
    fn sub(self, o: IntVec3) -> IntVec3 {
        IntVec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl SubAssign for IntVec3 {
    fn sub_assign(&mut self, o: IntVec3) {
        *self = *self - o;
    }
}

impl Neg for IntVec3 {
    type Output = IntVec3;
    fn neg(self) -> IntVec3 {
        IntVec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<IntVec3> for i64 {
    type Output = IntVec3;
    fn mul(self, v: IntVec3) -> IntVec3 {
        IntVec3([self * v.0[0], self * v.0[1], self * v.0[2]])
    }
}

/// A 3×3 integer matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntMat3(pub [[i64; 3]; 3]);

impl IntMat3 {
    pub const IDENTITY: IntMat3 = IntMat3([[1, 0, 0], [0, 1, 0], [0, 0, 1]]);

    pub fn diag(a: i64, b: i64, c: i64) -> Self {
        IntMat3([[a, 0, 0], [0, b, 0], [0, 0, c]])
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(c0: IntVec3, c1: IntVec3, c2: IntVec3) -> Self {
        let mut m = [[0; 3]; 3];
        for i in 0..3 {
            m[i] = [c0[i], c1[i], c2[i]];
        }
        IntMat3(m)
    }

    pub fn det(&self) -> i128 {
        let m = |i: usize, j: usize| self.0[i][j] as i128;
        m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
    }

    pub fn transpose(&self) -> IntMat3 {
        let mut t = [[0; 3]; 3];
        for (i, row) in self.0.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                t[j][i] = v;
            }
        }
        IntMat3(t)
    }

    pub fn mul_vec(&self, v: &IntVec3) -> IntVec3 {
        let mut out = [0i64; 3];
        for (o, row) in out.iter_mut().zip(self.0.iter()) {
            *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
        }
        IntVec3(out)
    }

    pub fn mul_mat(&self, o: &IntMat3) -> IntMat3 {
        let mut out = [[0i64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        IntMat3(out)
    }

    pub fn scale(&self, a: i64) -> IntMat3 {
        IntMat3(self.0.map(|row| row.map(|v| v * a)))
    }

    pub fn column(&self, j: usize) -> IntVec3 {
        IntVec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    /// Cofactor transpose; `M · adj(M) = det(M) · I` for every `M`.
    pub fn adjugate(&self) -> IntMat3 {
        let m = &self.0;
        let cof = |i: usize, j: usize| {
            let r: Vec<usize> = (0..3).filter(|&k| k != i).collect();
            let c: Vec<usize> = (0..3).filter(|&k| k != j).collect();
            let minor = m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]];
            if (i + j) % 2 == 0 {
                minor
            } else {
                -minor
            }
        };
        let mut adj = [[0i64; 3]; 3];
        for (i, row) in adj.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = cof(j, i);
            }
        }
        IntMat3(adj)
    }

    pub fn is_symmetric(&self) -> bool {
        *self == self.transpose()
    }

    pub fn to_f64(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.0[i][j] as f64)
    }
}

/// Cofactor transpose of a real matrix.
pub fn adjugate_f64(m: &Matrix3<f64>) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| {
        // entry (i, j) is the (j, i) cofactor
        let r: Vec<usize> = (0..3).filter(|&k| k != j).collect();
        let c: Vec<usize> = (0..3).filter(|&k| k != i).collect();
        let minor = m[(r[0], c[0])] * m[(r[1], c[1])] - m[(r[0], c[1])] * m[(r[1], c[0])];
        if (i + j) % 2 == 0 {
            minor
        } else {
            -minor
        }
    })
}

/// Exact representation `A = numer / denom` of a rational form matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactForm {
    pub numer: IntMat3,
    pub denom: i64,
}

/// A positive-definite quadratic form `Q(x) = xᵀAx` on `R³`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    matrix: Matrix3<f64>,
    sqrt: Matrix3<f64>,
    adjugate: Matrix3<f64>,
    det: f64,
    exact: Option<ExactForm>,
}

impl QuadraticForm {
    /// The square torus form `|x|²`.
    pub fn identity() -> Self {
        Self::from_integer(IntMat3::IDENTITY, 1).expect("identity is positive definite")
    }

    /// Rational form `A = numer / denom`.
    pub fn from_integer(numer: IntMat3, denom: i64) -> Result<Self> {
        if denom <= 0 || !numer.is_symmetric() {
            return Err(Error::NotPositiveDefinite);
        }
        // Sylvester's criterion on the integer numerator.
        let m = |i: usize, j: usize| numer.0[i][j] as i128;
        let minor2 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
        if m(0, 0) <= 0 || minor2 <= 0 || numer.det() <= 0 {
            return Err(Error::NotPositiveDefinite);
        }
        let matrix = numer.to_f64() / denom as f64;
        let mut form = Self::from_real(matrix)?;
        form.exact = Some(ExactForm { numer, denom });
        Ok(form)
    }

    /// Real symmetric positive-definite form.
    pub fn from_real(matrix: Matrix3<f64>) -> Result<Self> {
        let scale = matrix.amax();
        if !(scale.is_finite() && scale > 0.0) || (matrix - matrix.transpose()).amax() > FORM_TOLERANCE * scale {
            return Err(Error::NotPositiveDefinite);
        }
        let eig = SymmetricEigen::new(matrix);
        if eig.eigenvalues.iter().any(|&e| e <= 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let root = eig.eigenvalues.map(f64::sqrt);
        let sqrt = eig.eigenvectors * Matrix3::from_diagonal(&root) * eig.eigenvectors.transpose();
        Ok(QuadraticForm {
            matrix,
            sqrt,
            adjugate: adjugate_f64(&matrix),
            det: matrix.determinant(),
            exact: None,
        })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    /// Symmetric positive-definite `L` with `L·L = A`.
    pub fn sqrt(&self) -> &Matrix3<f64> {
        &self.sqrt
    }

    pub fn adjugate(&self) -> &Matrix3<f64> {
        &self.adjugate
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn exact(&self) -> Option<&ExactForm> {
        self.exact.as_ref()
    }

    pub fn is_square_torus(&self) -> bool {
        matches!(self.exact, Some(ExactForm { numer, denom }) if numer == IntMat3::IDENTITY.scale(denom))
    }

    pub fn evaluate(&self, x: &Vector3<f64>) -> f64 {
        x.dot(&(self.matrix * x))
    }

    /// `denom · Q(x)` computed exactly, when the form is rational.
    pub fn evaluate_numer(&self, x: &IntVec3) -> Option<i128> {
        self.exact.map(|e| {
            let ax = [0, 1, 2].map(|i| (0..3).map(|j| e.numer.0[i][j] as i128 * x[j] as i128).sum::<i128>());
            (0..3).map(|i| x[i] as i128 * ax[i]).sum()
        })
    }

    /// `A x` for a real vector.
    pub fn apply(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.matrix * x
    }

    /// Half-widths of the axis-aligned box containing `{Q(x) ≤ r²}`.
    pub fn bounding_half_widths(&self, r: f64) -> [f64; 3] {
        let inv = self.adjugate / self.det;
        [0, 1, 2].map(|i| r * inv[(i, i)].max(0.0).sqrt())
    }
}

/// `xᵀAx` for the form's matrix.
pub fn evaluate_form(form: &QuadraticForm, x: &Vector3<f64>) -> f64 {
    form.evaluate(x)
}

/// Outcome of checking `Mᵀ((Mu)∧(Mx)) = det(M)(u∧x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WedgeCheck {
    pub holds: bool,
    /// Largest absolute coordinate difference between the two sides.
    pub residual: f64,
}

/// Exact check of the wedge identity for an integer matrix.
pub fn wedge_identity_check(m: &IntMat3, u: &IntVec3, x: &IntVec3) -> WedgeCheck {
    let mu = m.mul_vec(u);
    let mx = m.mul_vec(x);
    let lhs = m.transpose().mul_vec(&mu.wedge(&mx));
    let d = m.det();
    let ux = u.wedge(x);
    let residual = (0..3)
        .map(|i| (lhs[i] as i128 - d * ux[i] as i128).unsigned_abs())
        .max()
        .unwrap_or(0);
    WedgeCheck {
        holds: residual == 0,
        residual: residual as f64,
    }
}

/// Wedge identity for a real matrix, relative tolerance `1e-10`.
pub fn wedge_identity_check_real(m: &Matrix3<f64>, u: &Vector3<f64>, x: &Vector3<f64>) -> WedgeCheck {
    let lhs = m.transpose() * (m * u).cross(&(m * x));
    let rhs = m.determinant() * u.cross(x);
    let residual = (lhs - rhs).amax();
    let scale = lhs.amax().max(rhs.amax()).max(f64::MIN_POSITIVE);
    WedgeCheck {
        holds: residual <= 1e-10 * scale,
        residual,
    }
}

/// Splits `u = content · direction` with `direction` primitive and its first
/// nonzero coordinate positive.
pub fn primitive_of(u: &IntVec3) -> Result<(IntVec3, i64)> {
    let g = u.content();
    if g == 0 {
        return Err(Error::ZeroVector);
    }
    let mut dir = IntVec3(u.0.map(|c| c / g));
    if dir.0.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
        dir = -dir;
    }
    Ok((dir, g))
}

/// Extended Euclid: returns `(g, s, t)` with `s·a + t·b = g ≥ 0`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// Gram matrix defining the inner product used by [`gauss_reduce_2d`].
#[derive(Clone, Copy, Debug)]
pub enum Metric<'a> {
    Euclidean,
    Gram(&'a Matrix3<f64>),
}

impl Metric<'_> {
    pub fn inner(&self, a: &IntVec3, b: &IntVec3) -> f64 {
        match self {
            Metric::Euclidean => a.dot(b) as f64,
            Metric::Gram(g) => a.to_f64().dot(&(*g * b.to_f64())),
        }
    }
}

/// A reduced basis `(u, v)` together with the unimodular transform taking the
/// input pair to it: `u = t[0][0]·b1 + t[0][1]·b2`, `v = t[1][0]·b1 + t[1][1]·b2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReducedPair {
    pub u: IntVec3,
    pub v: IntVec3,
    pub transform: [[i64; 2]; 2],
}

/// Nearest integer, ties toward zero.
fn round_half_toward_zero(x: f64) -> i64 {
    let r = x.round();
    if (x - x.trunc()).abs() == 0.5 {
        x.trunc() as i64
    } else {
        r as i64
    }
}

/// Lagrange–Gauss reduction of a rank-2 sublattice of `Z³`.
///
/// On return `‖u‖ ≤ ‖v‖` and `|⟨u,v⟩| ≤ ½‖u‖²` in the given metric, and
/// `(u, v)` spans the same lattice as `(b1, b2)`.
pub fn gauss_reduce_2d(b1: &IntVec3, b2: &IntVec3, metric: Metric<'_>) -> Result<ReducedPair> {
    if b1.wedge(b2).is_zero() {
        return Err(Error::RankDeficient);
    }
    let (mut u, mut v) = (*b1, *b2);
    let mut t = [[1i64, 0], [0, 1]];
    let mut nu = metric.inner(&u, &u);
    let mut nv = metric.inner(&v, &v);
    for _ in 0..10_000 {
        if nu > nv {
            std::mem::swap(&mut u, &mut v);
            std::mem::swap(&mut nu, &mut nv);
            t.swap(0, 1);
        }
        let mu = round_half_toward_zero(metric.inner(&u, &v) / nu);
        if mu == 0 {
            break;
        }
        v -= mu * u;
        t[1] = [t[1][0] - mu * t[0][0], t[1][1] - mu * t[0][1]];
        nv = metric.inner(&v, &v);
    }
    Ok(ReducedPair { u, v, transform: t })
}

/// Completion of a primitive `u` to a unimodular basis `(u, p, q)` of `Z³`,
/// with `v = u∧p`, `w = u∧q` a reduced basis of `u^⊥ ∩ Z³`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisExtension {
    pub p: IntVec3,
    pub q: IntVec3,
    pub v: IntVec3,
    pub w: IntVec3,
}

fn first_nonzero_negative(v: &IntVec3) -> bool {
    v.0.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0)
}

pub fn extend_basis(u: &IntVec3) -> Result<BasisExtension> {
    if u.content() != 1 {
        return Err(Error::NotPrimitive);
    }
    let [u1, u2, u3] = u.0;
    // E · u = e1 with E unimodular, built from two 2×2 Bezout steps.
    let (g, s, t) = ext_gcd(u1, u2);
    let e1 = if g == 0 {
        IntMat3::IDENTITY
    } else {
        IntMat3([[s, t, 0], [-u2 / g, u1 / g, 0], [0, 0, 1]])
    };
    let (h, a, b) = ext_gcd(g, u3);
    debug_assert_eq!(h, 1);
    let e2 = IntMat3([[a, 0, b], [0, 1, 0], [-u3, 0, g]]);
    let e = e2.mul_mat(&e1);
    // det(E) = 1, so E⁻¹ = adj(E); its first column is u.
    let basis = e.adjugate();
    debug_assert_eq!(basis.column(0), *u);
    let (p0, q0) = (basis.column(1), basis.column(2));
    let red = gauss_reduce_2d(&u.wedge(&p0), &u.wedge(&q0), Metric::Euclidean)?;
    let lift = |row: [i64; 2]| row[0] * p0 + row[1] * q0;
    let (mut p, mut q) = (lift(red.transform[0]), lift(red.transform[1]));
    let (mut v, mut w) = (red.u, red.v);
    if first_nonzero_negative(&v) {
        v = -v;
        p = -p;
    }
    if first_nonzero_negative(&w) {
        w = -w;
        q = -q;
    }
    if v.norm_sq() == w.norm_sq() && w > v {
        std::mem::swap(&mut v, &mut w);
        std::mem::swap(&mut p, &mut q);
    }
    Ok(BasisExtension { p, q, v, w })
}

/// Row-echelon basis of the lattice generated by `vectors` (integer row
/// reduction; the output rows are linearly independent).
pub fn lattice_basis(vectors: &[IntVec3]) -> Vec<IntVec3> {
    let mut rows: Vec<[i128; 3]> = vectors
        .iter()
        .filter(|v| !v.is_zero())
        .map(|v| v.0.map(|c| c as i128))
        .collect();
    let mut pivot = 0;
    for col in 0..3 {
        loop {
            let best = (pivot..rows.len())
                .filter(|&i| rows[i][col] != 0)
                .min_by_key(|&i| rows[i][col].abs());
            let Some(b) = best else { break };
            rows.swap(pivot, b);
            let pr = rows[pivot];
            let mut done = true;
            for r in rows.iter_mut().skip(pivot + 1) {
                if r[col] != 0 {
                    let q = r[col].div_euclid(pr[col]);
                    for k in 0..3 {
                        r[k] -= q * pr[k];
                    }
                    if r[col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                pivot += 1;
                break;
            }
        }
        rows.retain(|r| r.iter().any(|&c| c != 0));
        if pivot >= rows.len() {
            break;
        }
    }
    rows.truncate(pivot);
    rows.into_iter().map(|r| IntVec3(r.map(|c| c as i64))).collect()
}
