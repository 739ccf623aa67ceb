//! Minimal dense linear-algebra kernels.
//!
//! Everything here operates on [`DenseMatrix`], a row-major `Vec<f64>` store.
//! The matrices handled by the optimizer are small and tall (at most a few
//! thousand rows by a handful of columns), so plain triple loops are
//! sufficient; there is no blocked or BLAS-backed path.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    /// A pivot (or diagonal entry) fell below the tolerance.
    #[error("matrix is singular to working precision")]
    SingularMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Relative pivot tolerance for LU and triangular solves.
const PIVOT_TOL: f64 = 1e-14;

/// Dense real matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from a row-of-rows literal; handy in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Self { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Copy of the first `k` columns.
    pub fn left_columns(&self, k: usize) -> Self {
        assert!(k >= 1 && k <= self.cols);
        Self::from_fn(self.rows, k, |i, j| self.get(i, j))
    }

    /// Largest entry by absolute value, ties broken by lowest flat index.
    pub fn argmax_abs(&self) -> (usize, usize, f64) {
        let mut best = (0usize, 0usize, self.data[0]);
        let mut best_abs = self.data[0].abs();
        for (k, &v) in self.data.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = (k / self.cols, k % self.cols, v);
            }
        }
        best
    }
}

/// LU factorization with partial pivoting of a tall matrix (`rows >= cols`).
///
/// Returns `(perm, l, u)` where `perm` is the full row permutation
/// (`perm[k]` is the original index of the row placed at position `k`;
/// the first `cols` entries are the pivot rows in pivot order),
/// `l` is unit lower-trapezoidal (`rows x cols`) and `u` upper-triangular
/// (`cols x cols`), such that `a[perm, :] == l * u`.
pub fn lu_partial_pivot(
    a: &DenseMatrix,
) -> Result<(Vec<usize>, DenseMatrix, DenseMatrix), LinalgError> {
    let (n, r) = (a.rows(), a.cols());
    assert!(n >= r, "lu_partial_pivot needs rows >= cols");
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let tol = PIVOT_TOL * a.max_abs();

    for k in 0..r {
        let mut piv = k;
        let mut piv_abs = m.get(k, k).abs();
        for i in (k + 1)..n {
            let v = m.get(i, k).abs();
            if v > piv_abs {
                piv_abs = v;
                piv = i;
            }
        }
        if piv_abs <= tol {
            return Err(LinalgError::SingularMatrix);
        }
        if piv != k {
            for j in 0..r {
                let tmp = m.get(k, j);
                m.set(k, j, m.get(piv, j));
                m.set(piv, j, tmp);
            }
            perm.swap(k, piv);
        }
        let d = m.get(k, k);
        for i in (k + 1)..n {
            let factor = m.get(i, k) / d;
            m.set(i, k, factor);
            for j in (k + 1)..r {
                let v = m.get(i, j) - factor * m.get(k, j);
                m.set(i, j, v);
            }
        }
    }

    let mut l = DenseMatrix::zeros(n, r);
    let mut u = DenseMatrix::zeros(r, r);
    for i in 0..n {
        for j in 0..r {
            if i > j {
                l.set(i, j, m.get(i, j));
            } else if i == j {
                l.set(i, j, 1.0);
            }
            if i <= j && i < r {
                u.set(i, j, m.get(i, j));
            }
        }
    }
    Ok((perm, l, u))
}

/// Thin QR factorization by Householder reflections (`rows >= cols`).
///
/// `q` has orthonormal columns (`rows x cols`), `r` is upper-triangular
/// (`cols x cols`) with a nonnegative diagonal, and `q * r == a`.
/// Rank deficiency is not an error; it yields zero rows in `r`.
pub fn qr_thin(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let (n, c) = (a.rows(), a.cols());
    assert!(n >= c, "qr_thin needs rows >= cols");
    let mut work = a.clone();
    // Householder vectors, one per column, stored dense for simplicity.
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(c);

    for k in 0..c {
        let mut norm2 = 0.0;
        for i in k..n {
            let v = work.get(i, k);
            norm2 += v * v;
        }
        let norm = norm2.sqrt();
        let mut v = vec![0.0; n];
        if norm > 0.0 {
            let akk = work.get(k, k);
            let alpha = if akk >= 0.0 { -norm } else { norm };
            v[k] = akk - alpha;
            for i in (k + 1)..n {
                v[i] = work.get(i, k);
            }
            let vnorm2: f64 = v[k..].iter().map(|x| x * x).sum();
            if vnorm2 > 0.0 {
                // Apply H = I - 2 v v^T / (v^T v) to the trailing block.
                for j in k..c {
                    let mut dot = 0.0;
                    for i in k..n {
                        dot += v[i] * work.get(i, j);
                    }
                    let s = 2.0 * dot / vnorm2;
                    for i in k..n {
                        let w = work.get(i, j) - s * v[i];
                        work.set(i, j, w);
                    }
                }
            } else {
                v = vec![0.0; n];
            }
        }
        vs.push(v);
    }

    let mut r = DenseMatrix::zeros(c, c);
    for i in 0..c {
        for j in i..c {
            r.set(i, j, work.get(i, j));
        }
    }

    // Accumulate Q = H_0 H_1 ... H_{c-1} applied to the first c identity columns.
    let mut q = DenseMatrix::zeros(n, c);
    for j in 0..c {
        q.set(j, j, 1.0);
    }
    for k in (0..c).rev() {
        let v = &vs[k];
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in 0..c {
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i] * q.get(i, j);
            }
            let s = 2.0 * dot / vnorm2;
            for i in k..n {
                let w = q.get(i, j) - s * v[i];
                q.set(i, j, w);
            }
        }
    }

    // Sign convention: nonnegative diagonal of R.
    for k in 0..c {
        if r.get(k, k) < 0.0 {
            for j in k..c {
                r.set(k, j, -r.get(k, j));
            }
            for i in 0..n {
                q.set(i, k, -q.get(i, k));
            }
        }
    }
    (q, r)
}

/// Solve `u * x = b` for square upper-triangular `u` (multi-column `b`).
pub fn solve_upper_triangular(
    u: &DenseMatrix,
    b: &DenseMatrix,
) -> Result<DenseMatrix, LinalgError> {
    let n = u.rows();
    if u.cols() != n || b.rows() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "upper solve: u is {}x{}, b has {} rows",
            u.rows(),
            u.cols(),
            b.rows()
        )));
    }
    let tol = PIVOT_TOL * u.max_abs();
    let m = b.cols();
    let mut x = b.clone();
    for i in (0..n).rev() {
        let d = u.get(i, i);
        if d.abs() <= tol {
            return Err(LinalgError::SingularMatrix);
        }
        for j in 0..m {
            let mut s = x.get(i, j);
            for k in (i + 1)..n {
                s -= u.get(i, k) * x.get(k, j);
            }
            x.set(i, j, s / d);
        }
    }
    Ok(x)
}

/// Solve `l * x = b` for square lower-triangular `l` (multi-column `b`).
pub fn solve_lower_triangular(
    l: &DenseMatrix,
    b: &DenseMatrix,
) -> Result<DenseMatrix, LinalgError> {
    let n = l.rows();
    if l.cols() != n || b.rows() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "lower solve: l is {}x{}, b has {} rows",
            l.rows(),
            l.cols(),
            b.rows()
        )));
    }
    let tol = PIVOT_TOL * l.max_abs();
    let m = b.cols();
    let mut x = b.clone();
    for i in 0..n {
        let d = l.get(i, i);
        if d.abs() <= tol {
            return Err(LinalgError::SingularMatrix);
        }
        for j in 0..m {
            let mut s = x.get(i, j);
            for k in 0..i {
                s -= l.get(i, k) * x.get(k, j);
            }
            x.set(i, j, s / d);
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn permute_rows(a: &DenseMatrix, perm: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| a.get(perm[i], j))
    }

    #[test]
    fn lu_identity() {
        let a = DenseMatrix::identity(2);
        let (perm, l, u) = lu_partial_pivot(&a).unwrap();
        assert_eq!(perm, vec![0, 1]);
        assert_eq!(l, DenseMatrix::identity(2));
        assert_eq!(u, DenseMatrix::identity(2));
    }

    #[test]
    fn lu_pure_permutation() {
        let a = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let (perm, l, u) = lu_partial_pivot(&a).unwrap();
        assert_eq!(perm, vec![1, 0]);
        assert_eq!(l, DenseMatrix::identity(2));
        assert_eq!(u, DenseMatrix::identity(2));
    }

    #[test]
    fn lu_reconstructs_random_tall() {
        let a = random_matrix(5, 3, 42);
        let (perm, l, u) = lu_partial_pivot(&a).unwrap();
        let pa = permute_rows(&a, &perm);
        let lu = l.matmul(&u);
        for i in 0..5 {
            for j in 0..3 {
                assert!((pa.get(i, j) - lu.get(i, j)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn lu_pivot_is_columnwise_max_among_remaining() {
        // Replay: at step k the chosen pivot row must carry the largest
        // |entry| of column k of the partially eliminated matrix.
        let a = random_matrix(6, 4, 7);
        let (perm, _, _) = lu_partial_pivot(&a).unwrap();
        let mut m = a.clone();
        let mut order: Vec<usize> = (0..6).collect();
        for k in 0..4 {
            let mut piv = k;
            let mut best = m.get(k, k).abs();
            for i in (k + 1)..6 {
                if m.get(i, k).abs() > best {
                    best = m.get(i, k).abs();
                    piv = i;
                }
            }
            assert_eq!(order[piv], perm[k], "pivot mismatch at step {k}");
            for j in 0..4 {
                let t = m.get(k, j);
                m.set(k, j, m.get(piv, j));
                m.set(piv, j, t);
            }
            order.swap(k, piv);
            let d = m.get(k, k);
            for i in (k + 1)..6 {
                let f = m.get(i, k) / d;
                for j in k..4 {
                    let v = m.get(i, j) - f * m.get(k, j);
                    m.set(i, j, v);
                }
            }
        }
    }

    #[test]
    fn lu_singular_errors() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        assert_eq!(lu_partial_pivot(&a).unwrap_err(), LinalgError::SingularMatrix);
    }

    #[test]
    fn qr_identity() {
        let a = DenseMatrix::identity(3);
        let (q, r) = qr_thin(&a);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((q.get(i, j) - e).abs() <= 1e-15);
                assert!((r.get(i, j) - e).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn qr_single_column() {
        let a = DenseMatrix::from_rows(&[&[3.0], &[4.0]]);
        let (q, r) = qr_thin(&a);
        assert!((q.get(0, 0) - 0.6).abs() <= 1e-14);
        assert!((q.get(1, 0) - 0.8).abs() <= 1e-14);
        assert!((r.get(0, 0) - 5.0).abs() <= 1e-14);
    }

    #[test]
    fn qr_orthogonality_and_reconstruction() {
        let a = random_matrix(8, 4, 11);
        let (q, r) = qr_thin(&a);
        let qtq = q.transpose().matmul(&q);
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((qtq.get(i, j) - e).abs() <= 1e-12);
            }
        }
        let qr = q.matmul(&r);
        let scale = a.max_abs();
        for i in 0..8 {
            for j in 0..4 {
                assert!((qr.get(i, j) - a.get(i, j)).abs() <= 1e-12 * scale.max(1.0));
            }
        }
        for k in 0..4 {
            assert!(r.get(k, k) >= 0.0);
        }
    }

    #[test]
    fn qr_idempotent_on_orthonormal_input() {
        let a = random_matrix(8, 3, 5);
        let (q, _) = qr_thin(&a);
        let (q2, r2) = qr_thin(&q);
        // With the nonnegative-diagonal convention, qr(Q) returns Q itself.
        for i in 0..8 {
            for j in 0..3 {
                assert!((q2.get(i, j) - q.get(i, j)).abs() <= 1e-12);
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((r2.get(i, j) - e).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn solve_upper_examples() {
        let u = DenseMatrix::identity(3);
        let b = random_matrix(3, 2, 1);
        let x = solve_upper_triangular(&u, &b).unwrap();
        assert_eq!(x, b);

        let u = DenseMatrix::from_rows(&[&[2.0, 1.0], &[0.0, 4.0]]);
        let b = DenseMatrix::from_rows(&[&[3.0], &[8.0]]);
        let x = solve_upper_triangular(&u, &b).unwrap();
        assert!((x.get(0, 0) - 0.5).abs() <= 1e-15);
        assert!((x.get(1, 0) - 2.0).abs() <= 1e-15);
    }

    #[test]
    fn solve_lower_examples() {
        let l = DenseMatrix::identity(4);
        let b = random_matrix(4, 1, 2);
        assert_eq!(solve_lower_triangular(&l, &b).unwrap(), b);

        let l = DenseMatrix::from_rows(&[&[1.0, 0.0], &[2.0, 1.0]]);
        let b = DenseMatrix::from_rows(&[&[1.0], &[4.0]]);
        let x = solve_lower_triangular(&l, &b).unwrap();
        assert!((x.get(0, 0) - 1.0).abs() <= 1e-15);
        assert!((x.get(1, 0) - 2.0).abs() <= 1e-15);
    }

    #[test]
    fn solve_residuals_random_triangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut u = DenseMatrix::zeros(6, 6);
        for i in 0..6 {
            for j in i..6 {
                u.set(i, j, rng.gen_range(-1.0..1.0));
            }
            // keep the system well conditioned
            u.set(i, i, 1.0 + rng.gen_range(0.0..1.0));
        }
        let b = random_matrix(6, 3, 10);
        let x = solve_upper_triangular(&u, &b).unwrap();
        let res = u.matmul(&x);
        for i in 0..6 {
            for j in 0..3 {
                assert!((res.get(i, j) - b.get(i, j)).abs() <= 1e-10 * b.max_abs().max(1.0));
            }
        }

        let l = u.transpose();
        let x = solve_lower_triangular(&l, &b).unwrap();
        let res = l.matmul(&x);
        for i in 0..6 {
            for j in 0..3 {
                assert!((res.get(i, j) - b.get(i, j)).abs() <= 1e-10 * b.max_abs().max(1.0));
            }
        }
    }

    #[test]
    fn solve_zero_diagonal_errors() {
        let u = DenseMatrix::from_rows(&[&[1.0, 1.0], &[0.0, 0.0]]);
        let b = DenseMatrix::from_rows(&[&[1.0], &[1.0]]);
        assert_eq!(
            solve_upper_triangular(&u, &b).unwrap_err(),
            LinalgError::SingularMatrix
        );
    }
}
