//! LLL reduction of a Gram matrix.
//!
//! Only the unimodular transform is returned. Callers recompute the reduced
//! form exactly as `UᵗQU`, so rounding inside the reduction can only affect
//! how well-reduced the result is, never the correctness of what follows.

use nalgebra::DMatrix;

const MAX_STEPS: usize = 100_000;

/// Returns an integer unimodular `U` (row-major, `U[i][j]`) such that the
/// columns of `U` form a δ-LLL-reduced basis for the form `g`.
pub fn lll_transform(g: &DMatrix<f64>, delta: f64) -> Vec<Vec<i64>> {
    let n = g.nrows();
    let mut u: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    if n < 2 {
        return u;
    }
    let mut k = 1;
    let mut steps = 0;
    while k < n && steps < MAX_STEPS {
        steps += 1;
        for j in (0..k).rev() {
            let (mu, _) = gso(&reduced_gram(g, &u));
            let r = mu[(k, j)].round();
            if r != 0.0 && r.abs() < 1e15 {
                let r = r as i64;
                for row in u.iter_mut() {
                    row[k] -= r * row[j];
                }
            }
        }
        let (mu, bstar) = gso(&reduced_gram(g, &u));
        if bstar[k] >= (delta - mu[(k, k - 1)].powi(2)) * bstar[k - 1] {
            k += 1;
        } else {
            for row in u.iter_mut() {
                row.swap(k, k - 1);
            }
            k = (k - 1).max(1);
        }
    }
    u
}

fn reduced_gram(g: &DMatrix<f64>, u: &[Vec<i64>]) -> DMatrix<f64> {
    let n = g.nrows();
    let um = DMatrix::from_fn(n, n, |i, j| u[i][j] as f64);
    um.transpose() * g * um
}

/// Gram–Schmidt coefficients `μ` and squared lengths `B*` from a Gram matrix.
fn gso(g: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = g.nrows();
    let mut mu = DMatrix::zeros(n, n);
    let mut b = vec![0.0; n];
    for i in 0..n {
        for j in 0..i {
            let mut v = g[(i, j)];
            for l in 0..j {
                v -= mu[(j, l)] * mu[(i, l)] * b[l];
            }
            mu[(i, j)] = v / b[j];
        }
        let mut v = g[(i, i)];
        for l in 0..i {
            v -= mu[(i, l)] * mu[(i, l)] * b[l];
        }
        b[i] = v;
        mu[(i, i)] = 1.0;
    }
    (mu, b)
}

/// Determinant of an integer matrix via exact fraction-free elimination.
pub fn int_det(u: &[Vec<i64>]) -> i128 {
    let n = u.len();
    let mut a: Vec<Vec<i128>> = u.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| a[r][k] != 0) else { return 0 };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}
