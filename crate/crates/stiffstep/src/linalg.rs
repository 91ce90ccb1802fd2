//! Dense linear algebra for small Newton systems.
//!
//! Every linear solve in this crate is against a Jacobian of dimension n
//! (or 2n for the stacked implicit Runge-Kutta stages) with n ≤ 8 in the
//! shipped benchmark set, so a plain LU factorisation with partial pivoting
//! is used throughout. Dimension mismatches are programming errors and
//! panic; numerical rank deficiency is reported as [`LinalgError`].

use crate::scalar::Scalar;

/// Relative pivot threshold: a pivot smaller than this times the row scale
/// is treated as a symptom of singularity rather than inverted blindly.
const PIVOT_REL_TOL: f64 = 1e-14;

/// Square matrix in row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        Self {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    /// Builds an n×n matrix from a row-major slice of length n².
    pub fn from_row_major(n: usize, entries: &[S]) -> Self {
        assert_eq!(entries.len(), n * n, "need n^2 entries for an n×n matrix");
        Self {
            n,
            data: entries.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn fill(&mut self, value: S) {
        self.data.fill(value);
    }

    /// y = A·x
    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.n, "matrix-vector dimension mismatch");
        let mut y = vec![S::zero(); self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let mut acc = S::zero();
            for (a, b) in row.iter().zip(x) {
                acc += *a * *b;
            }
            y[i] = acc;
        }
        y
    }

    /// C = A·B
    pub fn mul_mat(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "matrix-matrix dimension mismatch");
        let n = self.n;
        let mut c = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                for j in 0..n {
                    c[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        c
    }

    /// self += factor · other
    pub fn add_scaled(&mut self, factor: S, other: &Self) {
        assert_eq!(self.n, other.n, "matrix dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * *b;
        }
    }

    /// self *= factor
    pub fn scale(&mut self, factor: S) {
        for a in &mut self.data {
            *a *= factor;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }
}

impl<S> std::ops::Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.n + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.n + j]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LinalgError {
    /// Elimination hit a pivot below `PIVOT_REL_TOL` times its row scale.
    SingularMatrix { column: usize },
}

impl std::fmt::Display for LinalgError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LinalgError::SingularMatrix { column } => {
                write!(f, "matrix is numerically singular (pivot column {column})")
            }
        }
    }
}

impl std::error::Error for LinalgError {}

/// Solves A·x = b by LU factorisation with partial pivoting.
///
/// Pivots are compared against the infinity-norm of their original row; a
/// pivot below `1e-14` times that scale raises
/// [`LinalgError::SingularMatrix`] instead of amplifying noise.
pub fn lu_solve<S: Scalar>(a: &Matrix<S>, b: &[S]) -> Result<Vec<S>, LinalgError> {
    let n = a.dim();
    assert_eq!(b.len(), n, "right-hand side length mismatch");

    let mut lu = a.clone();
    let mut x: Vec<S> = b.to_vec();
    let tol = S::from_f64(PIVOT_REL_TOL);

    // Row scales from the original matrix, for the singularity test.
    let mut scale = vec![S::zero(); n];
    for i in 0..n {
        let mut s = S::zero();
        for j in 0..n {
            s = s.max(lu[(i, j)].abs());
        }
        if s == S::zero() {
            return Err(LinalgError::SingularMatrix { column: 0 });
        }
        scale[i] = s;
    }

    for k in 0..n {
        // Partial pivoting on the scaled column magnitude.
        let mut pivot_row = k;
        let mut best = lu[(k, k)].abs() / scale[k];
        for i in (k + 1)..n {
            let cand = lu[(i, k)].abs() / scale[i];
            if cand > best {
                best = cand;
                pivot_row = i;
            }
        }
        if pivot_row != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            scale.swap(k, pivot_row);
            x.swap(k, pivot_row);
        }

        let pivot = lu[(k, k)];
        if pivot.abs() < tol * scale[k] {
            return Err(LinalgError::SingularMatrix { column: k });
        }

        for i in (k + 1)..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            for j in (k + 1)..n {
                let lkj = lu[(k, j)];
                lu[(i, j)] -= factor * lkj;
            }
            let xk = x[k];
            x[i] -= factor * xk;
        }
    }

    // Back substitution.
    for k in (0..n).rev() {
        let mut acc = x[k];
        for j in (k + 1)..n {
            acc -= lu[(k, j)] * x[j];
        }
        x[k] = acc / lu[(k, k)];
    }
    Ok(x)
}

/// Euclidean norm.
pub fn norm_l2<S: Scalar>(v: &[S]) -> S {
    let mut acc = S::zero();
    for x in v {
        acc += *x * *x;
    }
    acc.sqrt()
}

/// Maximum absolute entry (0 for the empty slice).
pub fn norm_linf<S: Scalar>(v: &[S]) -> S {
    let mut acc = S::zero();
    for x in v {
        acc = acc.max(x.abs());
    }
    acc
}

/// Complex double used by the stability analysis.
pub type ComplexScalar = num_complex::Complex64;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn test_identity_solve() {
        let a = Matrix::<f64>::identity(3);
        let b = [1.0, -2.0, 3.5];
        let x = lu_solve(&a, &b).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn test_diagonal_solve() {
        let mut a = Matrix::<f64>::zeros(2);
        a[(0, 0)] = 4.0;
        a[(1, 1)] = -0.5;
        let x = lu_solve(&a, &[8.0, 1.0]).unwrap();
        assert_eq!(x, vec![2.0, -2.0]);
    }

    #[test]
    fn test_requires_pivoting() {
        // Zero in the leading position forces a row swap.
        let a = Matrix::from_row_major(2, &[0.0, 1.0, 1.0, 0.0]);
        let x = lu_solve(&a, &[3.0, 7.0]).unwrap();
        assert!((x[0] - 7.0).abs() < 1e-15 && (x[1] - 3.0).abs() < 1e-15);
    }

    /// 100 random diagonally dominant systems: reconstructed residual stays
    /// at the rounding level relative to the right-hand side.
    #[test]
    fn test_random_solve_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5717F5);
        for trial in 0..100 {
            let n = rng.gen_range(1..=8);
            let mut a = Matrix::<f64>::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = rng.gen_range(-1.0..1.0);
                }
                // Diagonal dominance keeps the condition number moderate.
                a[(i, i)] += if a[(i, i)] >= 0.0 { n as f64 } else { -(n as f64) };
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let x = lu_solve(&a, &b).unwrap();
            let r: Vec<f64> = a
                .mul_vec(&x)
                .iter()
                .zip(&b)
                .map(|(ax, bi)| ax - bi)
                .collect();
            let rel = norm_linf(&r) / norm_linf(&b).max(1e-300);
            assert!(
                rel <= 1e-11,
                "trial {trial}: residual {rel:e} too large for n={n}"
            );
        }
    }

    #[test]
    fn test_singular_zero_row() {
        let a = Matrix::from_row_major(2, &[1.0, 2.0, 0.0, 0.0]);
        match lu_solve(&a, &[1.0, 1.0]) {
            Err(LinalgError::SingularMatrix { .. }) => {}
            other => panic!("expected SingularMatrix, got {other:?}"),
        }
    }

    #[test]
    fn test_singular_rank_deficient() {
        // Second row is a multiple of the first.
        let a = Matrix::from_row_major(2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            lu_solve(&a, &[1.0, 2.0]),
            Err(LinalgError::SingularMatrix { .. })
        ));
    }

    #[test]
    fn test_norms_small_vectors() {
        assert_eq!(norm_l2(&[3.0, 4.0]), 5.0);
        assert_eq!(norm_linf(&[3.0, -4.0]), 4.0);
        assert_eq!(norm_l2::<f64>(&[]), 0.0);
        assert_eq!(norm_linf(&[0.0, 0.0]), 0.0);
    }

    /// norm_linf(v) <= norm_l2(v) <= sqrt(n) * norm_linf(v)
    #[test]
    fn test_norm_inequality_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xA0B1);
        for _ in 0..200 {
            let n = rng.gen_range(1..=8);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1e3..1e3)).collect();
            let l2 = norm_l2(&v);
            let linf = norm_linf(&v);
            assert!(linf <= l2 * (1.0 + 1e-15));
            assert!(l2 <= (n as f64).sqrt() * linf * (1.0 + 1e-15));
        }
    }

    #[test]
    fn test_mul_vec_and_mat() {
        let a = Matrix::from_row_major(2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![3.0, 7.0]);
        let sq = a.mul_mat(&a);
        assert_eq!(sq[(0, 0)], 7.0);
        assert_eq!(sq[(0, 1)], 10.0);
        assert_eq!(sq[(1, 0)], 15.0);
        assert_eq!(sq[(1, 1)], 22.0);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn test_dimension_mismatch_panics() {
        let a = Matrix::<f64>::identity(3);
        let _ = a.mul_vec(&[1.0, 2.0]);
    }

    #[test]
    fn test_lu_solve_double_double() {
        use crate::scalar::DoubleDouble;
        let entries: Vec<DoubleDouble> = [2.0, 1.0, 1.0, 3.0]
            .iter()
            .map(|&x| DoubleDouble::from(x))
            .collect();
        let a = Matrix::from_row_major(2, &entries);
        let b = [DoubleDouble::from(5.0), DoubleDouble::from(10.0)];
        let x = lu_solve(&a, &b).unwrap();
        // Exact solution (1, 3).
        let e0 = (x[0] - DoubleDouble::from(1.0)).abs();
        let e1 = (x[1] - DoubleDouble::from(3.0)).abs();
        assert!(e0.hi < 1e-30 && e1.hi < 1e-30, "dd solve: {:?} {:?}", x[0], x[1]);
    }

    #[test]
    fn test_complex_scalar_invariants() {
        use num_complex::Complex64;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let w = Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let prod = w * w.conj();
            assert!((prod.im).abs() < 1e-12);
            assert!((prod.re - w.norm_sqr()).abs() <= 1e-12 * w.norm_sqr().max(1.0));
            assert!((w.conj().norm() - w.norm()).abs() < 1e-12);
        }
    }
}
