//! Quasi-maximal-volume submatrix selection.
//!
//! [`maxvol`] picks a square `R x R` submatrix of a tall `N x R` matrix whose
//! determinant is close to maximal in absolute value, by greedy row swaps.
//! [`rect_maxvol`] extends the selection with extra rows that maximize the
//! rectangular volume `sqrt(det(C^T C))`.
//!
//! Both return the selected row indices together with the coefficient matrix
//! `B` such that `A = B * A[rows, :]`; on the selected rows `B` restricts to
//! the identity pattern.

use crate::linalg::{
    lu_partial_pivot, solve_lower_triangular, solve_upper_triangular, DenseMatrix, LinalgError,
};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MaxvolError {
    #[error("input matrix is numerically rank deficient")]
    SingularMatrix,
}

impl From<LinalgError> for MaxvolError {
    fn from(_: LinalgError) -> Self {
        MaxvolError::SingularMatrix
    }
}

/// Outcome of a (rectangular) maximal-volume search.
#[derive(Debug, Clone)]
pub struct MaxvolResult {
    /// Selected row indices, distinct, each in `[0, a.rows())`.
    pub row_indices: Vec<usize>,
    /// Coefficients `B` with `A = B * A[row_indices, :]` (`N x |row_indices|`).
    pub coeffs: DenseMatrix,
    /// Swap iterations performed by the square stage.
    pub iterations: usize,
    /// Set when `max_iters` was reached while `max|B|` still exceeded `eps`.
    pub hit_iteration_limit: bool,
    /// Set when a diagonal jitter was needed to factorize the input.
    pub used_jitter: bool,
}

pub const DEFAULT_EPS: f64 = 1.01;
pub const DEFAULT_MAX_ITERS: usize = 500;
pub const DEFAULT_TAU: f64 = 1.0;

fn identity_result(n: usize) -> MaxvolResult {
    MaxvolResult {
        row_indices: (0..n).collect(),
        coeffs: DenseMatrix::identity(n),
        iterations: 0,
        hit_iteration_limit: false,
        used_jitter: false,
    }
}

/// Select `a.cols()` rows spanning a quasi-maximal-volume square submatrix.
///
/// `eps >= 1` is the dominance threshold: at normal termination every entry
/// of the coefficient matrix satisfies `|b| <= eps`. Each swap multiplies the
/// selected volume by at least `eps`. A square input returns all rows.
pub fn maxvol(a: &DenseMatrix, eps: f64, max_iters: usize) -> Result<MaxvolResult, MaxvolError> {
    assert!(a.rows() >= a.cols(), "maxvol needs a tall matrix");
    assert!(eps >= 1.0, "maxvol eps must be >= 1");
    let (n, r) = (a.rows(), a.cols());
    if n == r {
        return Ok(identity_result(n));
    }

    let mut used_jitter = false;
    let lu = match lu_partial_pivot(a) {
        Ok(f) => f,
        Err(LinalgError::SingularMatrix) => {
            // Last-resort jitter; callers are expected to QR-stabilize first.
            let jitter = 1e-13 * a.max_abs().max(1.0);
            let mut aj = a.clone();
            for k in 0..r {
                aj.set(k, k, aj.get(k, k) + jitter);
            }
            used_jitter = true;
            lu_partial_pivot(&aj)?
        }
        Err(e) => return Err(e.into()),
    };
    let (perm, l, u) = lu;
    let mut indices: Vec<usize> = perm[..r].to_vec();

    // B = A * C^{-1} where C = A[indices, :], computed through the factors:
    // Q = U^{-T} A^T, then B^T = (L[:r, :])^{-T} Q.
    let at = a.transpose();
    let q = solve_lower_triangular(&u.transpose(), &at)?;
    let lr_t = DenseMatrix::from_fn(r, r, |i, j| l.get(j, i));
    let bt = solve_upper_triangular(&lr_t, &q)?;
    let mut b = bt.transpose();

    let mut iterations = 0;
    let mut hit_limit = false;
    loop {
        let (i, j, bij) = b.argmax_abs();
        if bij.abs() <= eps {
            break;
        }
        if iterations >= max_iters {
            hit_limit = true;
            break;
        }
        // Rank-one swap update: B <- B - B[:, j] (B[i, :] - e_j^T) / b.
        let bi: Vec<f64> = b.row(i).to_vec();
        for row in 0..n {
            let scale = b.get(row, j) / bij;
            if scale == 0.0 {
                continue;
            }
            for col in 0..r {
                let e = if col == j { 1.0 } else { 0.0 };
                let v = b.get(row, col) - scale * (bi[col] - e);
                b.set(row, col, v);
            }
        }
        indices[j] = i;
        iterations += 1;
    }

    Ok(MaxvolResult {
        row_indices: indices,
        coeffs: b,
        iterations,
        hit_iteration_limit: hit_limit,
        used_jitter,
    })
}

/// Select between `a.cols()` and `max_rows` rows approximating the
/// rectangular maximal-volume submatrix.
///
/// Seeds with [`maxvol`] at the default threshold, then greedily adds the
/// row with the largest residual norm until every remaining norm is
/// `<= tau^2` or `max_rows` is reached. Coefficients are maintained by
/// rank-one updates.
pub fn rect_maxvol(
    a: &DenseMatrix,
    tau: f64,
    max_rows: usize,
) -> Result<MaxvolResult, MaxvolError> {
    rect_maxvol_with(a, tau, max_rows, DEFAULT_EPS, DEFAULT_MAX_ITERS)
}

/// [`rect_maxvol`] with explicit parameters for the square seeding stage.
pub fn rect_maxvol_with(
    a: &DenseMatrix,
    tau: f64,
    max_rows: usize,
    eps: f64,
    max_iters: usize,
) -> Result<MaxvolResult, MaxvolError> {
    assert!(a.rows() >= a.cols(), "rect_maxvol needs a tall matrix");
    assert!(tau >= 0.0);
    let (n, r) = (a.rows(), a.cols());
    if n == r {
        return Ok(identity_result(n));
    }
    let max_rows = max_rows.min(n).max(r);

    let seed = maxvol(a, eps, max_iters)?;
    let mut indices = seed.row_indices.clone();
    let mut b = seed.coeffs.clone();

    let mut chosen = vec![false; n];
    for &i in &indices {
        chosen[i] = true;
    }
    let mut norms: Vec<f64> = (0..n)
        .map(|i| {
            if chosen[i] {
                0.0
            } else {
                b.row(i).iter().map(|v| v * v).sum()
            }
        })
        .collect();

    while indices.len() < max_rows {
        let mut i = 0;
        let mut best = norms[0];
        for (k, &v) in norms.iter().enumerate() {
            if v > best {
                best = v;
                i = k;
            }
        }
        if best <= tau * tau {
            break;
        }
        // Sherman-Morrison style extension: append column B c^T / (1 + |c|^2)
        // and shrink the existing block, where c = B[i, :].
        let c: Vec<f64> = b.row(i).to_vec();
        let k = b.cols();
        let mut v = vec![0.0; n];
        for row in 0..n {
            v[row] = b.row(row).iter().zip(&c).map(|(x, y)| x * y).sum();
        }
        let denom = 1.0 + v[i];
        let mut grown = DenseMatrix::zeros(n, k + 1);
        for row in 0..n {
            for col in 0..k {
                grown.set(row, col, b.get(row, col) - v[row] * c[col] / denom);
            }
            grown.set(row, k, v[row] / denom);
        }
        b = grown;
        for (row, norm) in norms.iter_mut().enumerate() {
            *norm -= v[row] * v[row] / denom;
            if *norm < 0.0 {
                *norm = 0.0;
            }
        }
        chosen[i] = true;
        norms[i] = 0.0;
        indices.push(i);
    }

    Ok(MaxvolResult {
        row_indices: indices,
        coeffs: b,
        iterations: seed.iterations,
        hit_iteration_limit: seed.hit_iteration_limit,
        used_jitter: seed.used_jitter,
    })
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

    /// Test-local determinant by Laplace expansion; independent of the
    /// factorization kernels it is used to check.
    fn det(a: &DenseMatrix) -> f64 {
        let n = a.rows();
        assert_eq!(n, a.cols());
        if n == 1 {
            return a.get(0, 0);
        }
        let mut sum = 0.0;
        for j in 0..n {
            let minor = DenseMatrix::from_fn(n - 1, n - 1, |r, c| {
                a.get(r + 1, if c < j { c } else { c + 1 })
            });
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * a.get(0, j) * det(&minor);
        }
        sum
    }

    fn submatrix(a: &DenseMatrix, rows: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(rows.len(), a.cols(), |i, j| a.get(rows[i], j))
    }

    fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut out);
        out
    }

    #[test]
    fn picks_the_only_nonsingular_block() {
        let a = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]);
        let res = maxvol(&a, 1.01, 100).unwrap();
        let mut rows = res.row_indices.clone();
        rows.sort_unstable();
        assert_eq!(rows, vec![0, 1]);
    }

    #[test]
    fn single_column_picks_largest_entry() {
        let a = DenseMatrix::from_rows(&[&[1.0], &[-3.0], &[2.0]]);
        let res = maxvol(&a, 1.01, 100).unwrap();
        assert_eq!(res.row_indices, vec![1]);
    }

    #[test]
    fn coeffs_bounded_and_no_single_swap_improves() {
        for seed in 0..20u64 {
            let a = random_matrix(8, 3, 100 + seed);
            let res = maxvol(&a, 1.01, 500).unwrap();
            assert!(!res.hit_iteration_limit);
            assert!(res.coeffs.max_abs() <= 1.01 + 1e-9, "seed {seed}");

            let vol = det(&submatrix(&a, &res.row_indices)).abs();
            for row_out in 0..3 {
                for row_in in 0..8 {
                    if res.row_indices.contains(&row_in) {
                        continue;
                    }
                    let mut swapped = res.row_indices.clone();
                    swapped[row_out] = row_in;
                    let v = det(&submatrix(&a, &swapped)).abs();
                    assert!(
                        v <= 1.01 * vol + 1e-12,
                        "seed {seed}: swap improved volume by more than eps"
                    );
                }
            }
        }
    }

    #[test]
    fn coeffs_restrict_to_identity_on_selected_rows() {
        let a = random_matrix(9, 4, 3);
        let res = maxvol(&a, 1.01, 500).unwrap();
        for (pos, &row) in res.row_indices.iter().enumerate() {
            for j in 0..4 {
                let e = if j == pos { 1.0 } else { 0.0 };
                assert!((res.coeffs.get(row, j) - e).abs() <= 1e-8);
            }
        }
        // and B * A[rows, :] reconstructs A
        let c = submatrix(&a, &res.row_indices);
        let rec = res.coeffs.matmul(&c);
        for i in 0..9 {
            for j in 0..4 {
                assert!((rec.get(i, j) - a.get(i, j)).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn volume_never_decreases_over_iterations() {
        let a = random_matrix(10, 3, 77);
        let full = maxvol(&a, 1.0001, 500).unwrap();
        let mut prev = 0.0;
        for iters in 0..=full.iterations {
            let step = maxvol(&a, 1.0001, iters).unwrap();
            let vol = det(&submatrix(&a, &step.row_indices)).abs();
            assert!(vol >= prev - 1e-12);
            prev = vol;
        }
    }

    #[test]
    fn iteration_count_within_volume_ratio_bound() {
        for seed in 0..10u64 {
            let a = random_matrix(9, 3, 300 + seed);
            let eps = 1.05;
            let res = maxvol(&a, eps, 500).unwrap();
            let seeded = maxvol(&a, eps, 0).unwrap();
            let v0 = det(&submatrix(&a, &seeded.row_indices)).abs();
            let vbest = combinations(9, 3)
                .iter()
                .map(|rows| det(&submatrix(&a, rows)).abs())
                .fold(0.0f64, f64::max);
            let bound = (vbest.ln() - v0.ln()) / eps.ln();
            assert!(
                (res.iterations as f64) <= bound + 1.0 + 1e-9,
                "seed {seed}: {} iterations vs bound {bound}",
                res.iterations
            );
        }
    }

    #[test]
    fn square_input_returns_all_rows() {
        let a = random_matrix(4, 4, 5);
        let res = maxvol(&a, 1.01, 100).unwrap();
        assert_eq!(res.row_indices, vec![0, 1, 2, 3]);
        assert_eq!(res.coeffs, DenseMatrix::identity(4));
        let res = rect_maxvol(&a, 1.0, 8).unwrap();
        assert_eq!(res.row_indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn rect_identity_stack_ignores_zero_row() {
        let a = DenseMatrix::from_rows(&[
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
            &[0.0, 0.0, 0.0],
        ]);
        let res = rect_maxvol(&a, 1.0, 8).unwrap();
        let mut rows = res.row_indices.clone();
        rows.sort_unstable();
        assert_eq!(rows, vec![0, 1, 2]);
    }

    #[test]
    fn rect_single_column_collapses() {
        let a = DenseMatrix::from_rows(&[&[1.0], &[1.0], &[1.0], &[1.0]]);
        let res = rect_maxvol(&a, 10.0, 4).unwrap();
        assert_eq!(res.row_indices.len(), 1);
    }

    #[test]
    fn rect_selection_reconstructs() {
        let a = random_matrix(10, 3, 21);
        let res = rect_maxvol(&a, 1.0, 6).unwrap();
        let k = res.row_indices.len();
        assert!((3..=6).contains(&k));
        let c = submatrix(&a, &res.row_indices);
        let rec = res.coeffs.matmul(&c);
        let scale = a.max_abs();
        for i in 0..10 {
            for j in 0..3 {
                assert!((rec.get(i, j) - a.get(i, j)).abs() <= 1e-8 * scale.max(1.0));
            }
        }
        // distinct indices
        let mut sorted = res.row_indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), k);
    }

    #[test]
    fn rect_prefix_matches_maxvol() {
        let a = random_matrix(12, 4, 33);
        let sq = maxvol(&a, DEFAULT_EPS, DEFAULT_MAX_ITERS).unwrap();
        let rect = rect_maxvol(&a, 1.0, 8).unwrap();
        assert_eq!(&rect.row_indices[..4], &sq.row_indices[..]);
    }

    #[test]
    fn deterministic() {
        let a = random_matrix(15, 4, 8);
        let r1 = maxvol(&a, 1.01, 500).unwrap();
        let r2 = maxvol(&a, 1.01, 500).unwrap();
        assert_eq!(r1.row_indices, r2.row_indices);
        let r1 = rect_maxvol(&a, 1.0, 8).unwrap();
        let r2 = rect_maxvol(&a, 1.0, 8).unwrap();
        assert_eq!(r1.row_indices, r2.row_indices);
    }

    #[test]
    fn runtime_grows_roughly_linearly_in_rows() {
        use std::time::Instant;
        let small = random_matrix(2_000, 4, 1);
        let large = random_matrix(16_000, 4, 2);
        // warm up
        let _ = maxvol(&small, 1.01, 500).unwrap();
        let reps = 3;
        let t0 = Instant::now();
        for _ in 0..reps {
            let _ = maxvol(&small, 1.01, 500).unwrap();
        }
        let t_small = t0.elapsed();
        let t1 = Instant::now();
        for _ in 0..reps {
            let _ = maxvol(&large, 1.01, 500).unwrap();
        }
        let t_large = t1.elapsed();
        // 8x the rows should stay well below a quadratic blowup; the bound is
        // deliberately loose to keep the check robust on shared machines.
        assert!(
            t_large < t_small * 50 + std::time::Duration::from_millis(50),
            "small {t_small:?} vs large {t_large:?}"
        );
    }
}
