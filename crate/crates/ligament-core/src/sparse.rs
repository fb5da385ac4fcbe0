//! Compressed sparse row matrices and a Jacobi-preconditioned conjugate
//! gradient solver. Everything is sequential and deterministic.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Square sparse matrix in CSR form with a fixed symbolic pattern.
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    /// Builds the symbolic pattern from per-row sorted column lists; values
    /// start at zero.
    pub fn from_pattern(rows: &[Vec<usize>]) -> Csr {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for cols in rows {
            debug_assert!(cols.windows(2).all(|w| w[0] < w[1]));
            col_idx.extend_from_slice(cols);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Csr { n, row_ptr, col_idx, values: vec![0.0; nnz] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Adds `v` to entry (i, j), which must exist in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k] += v,
            Err(_) => panic!("entry ({i}, {j}) not in sparsity pattern"),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Maximum |A_ij - A_ji| over the stored pattern.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Applies Dirichlet elimination: for each constrained dof `i` with value
    /// `g Ii`, moves the coupling into the right-hand side, zeroes row and
    /// column `i`, sets the diagonal to 1 and the rhs entry to the value.
    pub fn eliminate_dirichlet(&mut self, rhs: &mut [f64], constraints: &[(usize, f64)]) {
        let mut fixed = vec![false; self.n];
        let mut value = vec![0.0; self.n];
        for &(i, g) in constraints {
            fixed[i] = true;
            value[i] = g;
        }
        // rhs -= K * g_ext on free rows.
        for i in 0..self.n {
            if fixed[i] {
                continue;
            }
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if fixed[j] {
                    acc += self.values[k] * value[j];
                }
            }
            rhs[i] -= acc;
        }
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if fixed[i] || fixed[j] {
                    self.values[k] = if i == j { 1.0 } else { 0.0 };
                }
            }
        }
        for &(i, g) in constraints {
            rhs[i] = g;
        }
    }
}

/// Solver diagnostics: iterations used and the final relative residual.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Conjugate gradient with diagonal (Jacobi) preconditioning.
///
/// Convergence is declared on the true relative residual ‖b − Ax‖/‖b‖.
pub fn pcg_jacobi(
    a: &Csr,
    b: &[f64],
    x0: Option<&[f64]>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n();
    let norm_b = norm(b);
    if norm_b == 0.0 {
        return Ok((vec![0.0; n], SolveStats { iterations: 0, residual: 0.0 }));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = norm(&r) / norm_b;
    let mut iter = 0;

    while res > rel_tol && iter < max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SolveFailed { iterations: iter, residual: res });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iter += 1;
        // Periodically refresh the residual from scratch to avoid drift.
        if iter % 256 == 0 {
            a.matvec(&x, &mut r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = norm(&r) / norm_b;
    }

    // Certify with the true residual.
    let mut t = vec![0.0; n];
    a.matvec(&x, &mut t);
    for i in 0..n {
        t[i] = b[i] - t[i];
    }
    let true_res = norm(&t) / norm_b;
    if true_res > rel_tol * 10.0 && iter >= max_iter {
        return Err(Error::SolveFailed { iterations: iter, residual: true_res });
    }
    Ok((x, SolveStats { iterations: iter, residual: true_res }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn laplace_1d(n: usize) -> Csr {
        let rows: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut cols = Vec::new();
                if i > 0 {
                    cols.push(i - 1);
                }
                cols.push(i);
                if i + 1 < n {
                    cols.push(i + 1);
                }
                cols
            })
            .collect();
        let mut a = Csr::from_pattern(&rows);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn pcg_solves_tridiagonal() {
        let n = 64;
        let a = laplace_1d(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (x, stats) = pcg_jacobi(&a, &b, None, 1e-12, 10 * n).unwrap();
        let mut r = vec![0.0; n];
        a.matvec(&x, &mut r);
        let err = r
            .iter()
            .zip(&b)
            .map(|(ri, bi)| (ri - bi) * (ri - bi))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-10, "residual {err}, {} iterations", stats.iterations);
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let a = laplace_1d(8);
        let (x, stats) = pcg_jacobi(&a, &[0.0; 8], None, 1e-12, 100).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn dirichlet_elimination_keeps_symmetry() {
        let mut a = laplace_1d(6);
        let mut rhs = vec![1.0; 6];
        a.eliminate_dirichlet(&mut rhs, &[(0, 0.5), (5, -0.25)]);
        assert_eq!(a.asymmetry(), 0.0);
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(rhs[0], 0.5);
        assert_eq!(rhs[5], -0.25);
        // Coupling moved to the rhs of the free neighbor rows.
        assert_eq!(rhs[1], 1.0 + 0.5);
        assert_eq!(rhs[4], 1.0 - 0.25);
    }
}
