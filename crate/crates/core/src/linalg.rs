//! Small dense real matrices.
//!
//! Only what the learner needs: products, the identity, a rank test and the
//! solve that recovers `A` from a basis `X` and its image `A X`. Everything is
//! row-major `f64` and dependency-free.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pivot threshold used by the solver and the rank test unless overridden.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-12;

/// Default tolerance when comparing two recovered label matrices.
pub const DEFAULT_LABEL_TOL: f64 = 1e-6;

/// A dense `rows x cols` real matrix stored row-major.
///
/// Subsystem dynamics are square; state matrices handed to the simulator may
/// have any number of columns (one per initial state).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be non-empty");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from a list of rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(n * m);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {m}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(n, m, data)
    }

    /// A `d x 1` column vector.
    pub fn column_vector(entries: &[f64]) -> Result<Self> {
        Self::new(entries.len(), 1, entries.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest absolute entrywise difference. Shapes must agree.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Extracts column `c` as a `rows x 1` matrix.
    pub fn column_matrix(&self, c: usize) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: 1,
            data: self.column(c),
        }
    }

    /// Stacks equally tall matrices side by side.
    pub fn hstack(parts: &[Matrix]) -> Result<Matrix> {
        let rows = parts
            .first()
            .ok_or_else(|| Error::DimensionMismatch("nothing to stack".into()))?
            .rows;
        if parts.iter().any(|p| p.rows != rows) {
            return Err(Error::DimensionMismatch("row counts differ".into()));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut offset = 0;
        for p in parts {
            for r in 0..rows {
                for c in 0..p.cols {
                    out.set(r, offset + c, p.get(r, c));
                }
            }
            offset += p.cols;
        }
        Ok(out)
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (c, x) in self.row(r).iter().enumerate() {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// The `d x d` identity.
pub fn identity(d: usize) -> Matrix {
    let mut m = Matrix::zeros(d, d);
    for i in 0..d {
        m.set(i, i, 1.0);
    }
    m
}

/// Matrix product `a * b`.
///
/// Each entry is accumulated in increasing `k` order starting from `0.0`.
pub fn mat_mul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
            for (o, bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// Entrywise comparison within `tol`.
pub fn mat_approx_eq(a: &Matrix, b: &Matrix, tol: f64) -> Result<bool> {
    Ok(a.max_abs_diff(b)? <= tol)
}

/// In-place LU factorization with partial pivoting of a square matrix.
struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

enum Elimination {
    Complete(Lu),
    SmallPivot { column: usize, pivot: f64 },
}

fn eliminate(m: &Matrix, tol: f64) -> Elimination {
    let n = m.rows;
    let mut lu = m.data.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|r| (r, lu[r * n + k].abs()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if !(pivot > tol) {
            return Elimination::SmallPivot { column: k, pivot };
        }
        if p != k {
            for c in 0..n {
                lu.swap(k * n + c, p * n + c);
            }
            perm.swap(k, p);
        }
        let pkk = lu[k * n + k];
        for r in k + 1..n {
            let factor = lu[r * n + k] / pkk;
            lu[r * n + k] = factor;
            if factor != 0.0 {
                for c in k + 1..n {
                    lu[r * n + c] -= factor * lu[k * n + c];
                }
            }
        }
    }
    Elimination::Complete(Lu { n, lu, perm })
}

impl Lu {
    /// Solves `M y = b` for the factored `M`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut s = y[r];
            for c in 0..r {
                s -= self.lu[r * n + c] * y[c];
            }
            y[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = y[r];
            for c in r + 1..n {
                s -= self.lu[r * n + c] * y[c];
            }
            y[r] = s / self.lu[r * n + r];
        }
        y
    }
}

/// True iff Gaussian elimination with partial pivoting finds `d` pivots of
/// magnitude above `tol`. Non-square matrices are never full rank here.
pub fn is_full_rank(m: &Matrix, tol: f64) -> bool {
    m.is_square() && matches!(eliminate(m, tol), Elimination::Complete(_))
}

/// Recovers `A` from `A X = X'` where the columns of `X` form a basis.
///
/// Solved as `Xᵀ Aᵀ = X'ᵀ`: one factorization of `Xᵀ`, then one solve per row
/// of `A`.
pub fn solve_for_a(x: &Matrix, x_prime: &Matrix, tol: f64) -> Result<Matrix> {
    if !x.is_square() || x.rows != x_prime.rows || x.cols != x_prime.cols {
        return Err(Error::DimensionMismatch(format!(
            "basis is {}x{}, image is {}x{}",
            x.rows, x.cols, x_prime.rows, x_prime.cols
        )));
    }
    let d = x.rows;
    let lu = match eliminate(&x.transpose(), tol) {
        Elimination::Complete(lu) => lu,
        Elimination::SmallPivot { column, pivot } => {
            return Err(Error::SingularBasis { column, pivot, tol })
        }
    };
    let mut a = Matrix::zeros(d, d);
    for i in 0..d {
        let row = lu.solve(x_prime.row(i));
        a.data[i * d..(i + 1) * d].copy_from_slice(&row);
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(a)
}

/// Thin QR of a square matrix by twice-iterated modified Gram–Schmidt,
/// returning only the upper-triangular factor `R`.
fn qr_r(x: &Matrix) -> Matrix {
    let n = x.rows;
    let mut q: Vec<Vec<f64>> = (0..n).map(|c| x.column(c)).collect();
    let mut r = Matrix::zeros(n, n);
    for j in 0..n {
        for _ in 0..2 {
            for i in 0..j {
                let dot: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
                r.data[i * n + j] += dot;
                let (head, tail) = q.split_at_mut(j);
                for (t, h) in tail[0].iter_mut().zip(&head[i]) {
                    *t -= dot * h;
                }
            }
        }
        let norm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        r.data[j * n + j] = norm;
        if norm > 0.0 {
            q[j].iter_mut().for_each(|v| *v /= norm);
        }
    }
    r
}

/// QR-based rescaling of a square basis.
#[derive(Clone, Debug)]
pub struct Orthonormalizer {
    /// `R⁻¹`; `X R⁻¹` has orthonormal columns in exact arithmetic.
    pub r_inv: Matrix,
    /// `‖R‖_F ‖R⁻¹‖_F`, within a factor `n` of the 2-norm condition number.
    pub condition: f64,
    /// Root-mean-square column norm of `X`.
    pub scale: f64,
}

/// For a square `X = QR`, returns `R⁻¹` with condition and scale estimates.
/// Returns `None` when `R` has a zero (or non-finite) diagonal.
pub fn orthonormalizing_factor(x: &Matrix) -> Option<Orthonormalizer> {
    if !x.is_square() {
        return None;
    }
    let n = x.rows;
    let r = qr_r(x);
    let min = (0..n)
        .map(|i| r.get(i, i).abs())
        .fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || !r.is_finite() {
        return None;
    }
    // Upper-triangular inverse, column by column.
    let mut inv = Matrix::zeros(n, n);
    for c in 0..n {
        for row in (0..=c).rev() {
            let mut s = if row == c { 1.0 } else { 0.0 };
            for k in row + 1..=c {
                s -= r.get(row, k) * inv.get(k, c);
            }
            inv.set(row, c, s / r.get(row, row));
        }
    }
    if !inv.is_finite() {
        return None;
    }
    let frob = |m: &Matrix| m.data.iter().map(|v| v * v).sum::<f64>().sqrt();
    Some(Orthonormalizer {
        condition: frob(&r) * frob(&inv),
        scale: frob(&r) / (n as f64).sqrt(),
        r_inv: inv,
    })
}
