//! Small dense linear-algebra helpers for the control allocator.
//!
//! The allocator inverts a single 4x4 effectiveness matrix per evaluation, so
//! a fixed-size LU factorization with partial pivoting is all that is needed;
//! it also exposes a 1-norm condition number used to detect near-singular
//! allocation geometry before trusting the solve.

// Gaussian elimination reads most naturally with explicit row/column
// indices; iterator rewrites obscure the pivoting.
#![allow(clippy::needless_range_loop)]

/// LU factorization (partial pivoting) of a 4x4 matrix.
#[derive(Debug, Clone)]
pub struct Lu4 {
    lu: [[f64; 4]; 4],
    perm: [usize; 4],
}

impl Lu4 {
    /// Factors `a`; returns `None` if a pivot is exactly zero.
    pub fn factor(a: &[[f64; 4]; 4]) -> Option<Self> {
        let mut lu = *a;
        let mut perm = [0usize, 1, 2, 3];
        for col in 0..4 {
            let mut pivot = col;
            let mut best = lu[col][col].abs();
            for row in col + 1..4 {
                let mag = lu[row][col].abs();
                if mag > best {
                    best = mag;
                    pivot = row;
                }
            }
            if best == 0.0 {
                return None;
            }
            if pivot != col {
                lu.swap(col, pivot);
                perm.swap(col, pivot);
            }
            let diag = lu[col][col];
            for row in col + 1..4 {
                let factor = lu[row][col] / diag;
                lu[row][col] = factor;
                for k in col + 1..4 {
                    lu[row][k] -= factor * lu[col][k];
                }
            }
        }
        Some(Self { lu, perm })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64; 4]) -> [f64; 4] {
        let mut x = [0.0; 4];
        // Forward substitution with the permutation applied.
        for row in 0..4 {
            let mut sum = b[self.perm[row]];
            for k in 0..row {
                sum -= self.lu[row][k] * x[k];
            }
            x[row] = sum;
        }
        // Back substitution.
        for row in (0..4).rev() {
            let mut sum = x[row];
            for k in row + 1..4 {
                sum -= self.lu[row][k] * x[k];
            }
            x[row] = sum / self.lu[row][row];
        }
        x
    }

    /// 1-norm condition number, computed exactly via the four unit solves.
    pub fn cond_1(&self, a: &[[f64; 4]; 4]) -> f64 {
        let mut inv_norm = 0.0_f64;
        for col in 0..4 {
            let mut e = [0.0; 4];
            e[col] = 1.0;
            let x = self.solve(&e);
            let col_sum: f64 = x.iter().map(|v| v.abs()).sum();
            inv_norm = inv_norm.max(col_sum);
        }
        norm_1(a) * inv_norm
    }
}

/// Matrix 1-norm (maximum absolute column sum).
pub fn norm_1(a: &[[f64; 4]; 4]) -> f64 {
    let mut norm = 0.0_f64;
    for col in 0..4 {
        let col_sum: f64 = (0..4).map(|row| a[row][col].abs()).sum();
        norm = norm.max(col_sum);
    }
    norm
}
