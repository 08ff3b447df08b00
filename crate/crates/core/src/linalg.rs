//! Dense linear algebra for the small matrices that show up here (d <= 8):
//! exact rational elimination and a few f64 routines.

use num_rational::BigRational;
use num_traits::{One, Zero};

pub type RatMatrix = Vec<Vec<BigRational>>;

/// Exact determinant by fraction-free-enough Gaussian elimination.
pub fn rat_det(m: &RatMatrix) -> BigRational {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = BigRational::one();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero());
        let Some(p) = pivot else {
            return BigRational::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let pv = a[col][col].clone();
        det *= pv.clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &pv;
            for c in col..n {
                let sub = &f * &a[col][c];
                a[r][c] = &a[r][c] - sub;
            }
        }
    }
    det
}

/// Reduced row echelon form; returns the pivot column of each row.
fn rref(a: &mut RatMatrix) -> Vec<usize> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(p, r);
        let pv = a[r][c].clone();
        for x in &mut a[r] {
            *x = &*x / &pv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let sub = &f * &a[r][j];
                    a[i][j] = &a[i][j] - sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rat_rank(m: &RatMatrix) -> usize {
    let mut a = m.to_vec();
    rref(&mut a).len()
}

/// A non-trivial kernel vector of `m`, provided the kernel is exactly
/// one-dimensional; `None` otherwise.
pub fn rat_nullspace_1d(m: &RatMatrix) -> Option<Vec<BigRational>> {
    let n = m.len();
    let mut a = m.to_vec();
    let pivots = rref(&mut a);
    if pivots.len() != n - 1 {
        return None;
    }
    let free = (0..n).find(|c| !pivots.contains(c))?;
    let mut v = vec![BigRational::zero(); n];
    v[free] = BigRational::one();
    for (row, &pc) in pivots.iter().enumerate() {
        v[pc] = -a[row][free].clone();
    }
    Some(v)
}

pub fn rat_transpose(m: &RatMatrix) -> RatMatrix {
    let n = m.len();
    (0..n).map(|j| (0..n).map(|i| m[i][j].clone()).collect()).collect()
}

pub fn rat_identity(n: usize) -> RatMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect()
}

pub fn rat_sub(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect()
}

pub fn to_f64_matrix(m: &RatMatrix) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(crate::ratio::to_f64).collect()).collect()
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn vec_mat(v: &[f64], m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    (0..n).map(|j| (0..n).map(|i| v[i] * m[i][j]).sum()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn det_f64(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        if a[p][col] == 0.0 {
            return 0.0;
        }
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    det
}

/// Gauss-Jordan inverse; panics on singular input (callers check the
/// determinant first).
pub fn inverse_f64(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv = vec![vec![0.0; n]; n];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        assert!(a[p][col] != 0.0, "singular matrix");
        a.swap(p, col);
        inv.swap(p, col);
        let pv = a[col][col];
        for c in 0..n {
            a[col][c] /= pv;
            inv[col][c] /= pv;
        }
        for r in 0..n {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col];
                for c in 0..n {
                    a[r][c] -= f * a[col][c];
                    inv[r][c] -= f * inv[col][c];
                }
            }
        }
    }
    inv
}

/// Quadratic form v^T M^{-1} v via `inverse_f64`.
pub fn quad_form_inv(m: &[Vec<f64>], v: &[f64]) -> f64 {
    let inv = inverse_f64(m);
    dot(v, &mat_vec(&inv, v))
}

pub struct PowerIteration {
    pub rho: f64,
    /// Right eigenvector, normalized so that `<left, right> = 1`.
    pub right: Vec<f64>,
    /// Left eigenvector, normalized to sum to 1.
    pub left: Vec<f64>,
    pub iterations: usize,
}

/// Power iteration with Rayleigh-quotient refinement for a primitive
/// non-negative matrix. Tolerance 1e-13 on successive eigenvalue estimates,
/// at most 10^5 iterations.
pub fn power_iteration(m: &[Vec<f64>]) -> PowerIteration {
    let n = m.len();
    let mut v = vec![1.0 / n as f64; n];
    let mut w = vec![1.0 / n as f64; n];
    let mut rho = 0.0;
    let mut iters = 0;
    for it in 0..100_000 {
        iters = it + 1;
        let mv = mat_vec(m, &v);
        let rayleigh = dot(&v, &mv) / dot(&v, &v);
        let s: f64 = mv.iter().sum();
        v = mv.iter().map(|x| x / s).collect();
        let wm = vec_mat(&w, m);
        let sw: f64 = wm.iter().sum();
        w = wm.iter().map(|x| x / sw).collect();
        if (rayleigh - rho).abs() <= 1e-13 * rho.abs().max(1.0) && it > 2 {
            rho = rayleigh;
            break;
        }
        rho = rayleigh;
    }
    let ws: f64 = w.iter().sum();
    let left: Vec<f64> = w.iter().map(|x| x / ws).collect();
    let scale = dot(&left, &v);
    let right: Vec<f64> = v.iter().map(|x| x / scale).collect();
    PowerIteration { rho, right, left, iterations: iters }
}
