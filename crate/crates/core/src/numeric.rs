//! Small numeric helpers: stable logistic primitives and dense solves.
//!
//! All transcendental calls go through `libm` so the crate stays `no_std`
//! and bit-reproducible across platforms.

use alloc::vec;
use alloc::vec::Vec;

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

/// Numerically stable `ln(1 + e^z)`.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

/// Numerically stable logistic sigmoid.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// In-place Cholesky factorization of a symmetric positive-definite matrix
/// (row-major, n x n). Returns false if a non-positive pivot shows up.
fn cholesky(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let dj = sqrt(d);
        a[j * n + j] = dj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / dj;
        }
    }
    true
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Solve `(A + mu I) x = b` for the smallest damping `mu` (starting at zero)
/// that makes the factorization succeed. `A` is symmetric, row-major.
pub fn solve_damped(a: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    let mut mu = 0.0;
    loop {
        let mut m = a.to_vec();
        if mu > 0.0 {
            for i in 0..n {
                m[i * n + i] += mu;
            }
        }
        if cholesky(&mut m, n) {
            let x = cholesky_solve(&m, n, b);
            if x.iter().all(|v| v.is_finite()) {
                return x;
            }
        }
        mu = if mu == 0.0 {
            1e-12 * if scale > 0.0 { scale } else { 1.0 }
        } else {
            mu * 100.0
        };
        if mu > 1e30 {
            // Degenerate beyond repair; fall back to gradient direction.
            return b.to_vec();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for i in -40..=40 {
            let z = i as f64 * 0.5;
            let naive = ln(1.0 + exp(z));
            assert!((softplus(z) - naive).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn softplus_extremes_stay_finite() {
        assert!(softplus(800.0).is_finite());
        assert_eq!(softplus(800.0), 800.0);
        assert_eq!(softplus(-800.0), 0.0);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn damped_solve_recovers_solution() {
        // A = [[4,1],[1,3]], b = [1,2] -> x = [1/11, 7/11]
        let a = [4.0, 1.0, 1.0, 3.0];
        let b = [1.0, 2.0];
        let x = solve_damped(&a, 2, &b);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn damped_solve_handles_singular() {
        let a = [1.0, 1.0, 1.0, 1.0];
        let b = [1.0, 1.0];
        let x = solve_damped(&a, 2, &b);
        assert!(x.iter().all(|v| v.is_finite()));
    }
}
