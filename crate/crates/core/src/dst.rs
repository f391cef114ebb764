//! Fast discrete sine transforms and Dirichlet solvers on box interiors.
//!
//! The interior of a radius-`R` box is an `n x n` grid with `n = 2R - 1`; write
//! `M = n + 1 = 2R`. DST-I diagonalizes the five-point operator `L = 4I - A`
//! with Dirichlet boundary conditions: eigenvalues
//! `lambda_{p,q} = (2 - 2cos(pi p / M)) + (2 - 2cos(pi q / M))`, `p,q = 1..n`.

use rustfft::{num_complex::Complex, Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Plan for an unnormalized DST-I of length `n`:
/// `X_k = sum_{j=1}^{n} x_j sin(pi j k / (n+1))`.
pub struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst1 {
    fn new(n: usize) -> Dst1 {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * (n + 1));
        Dst1 { n, fft }
    }

    /// In-place DST-I of `x` (length `n`).
    pub fn transform(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let m2 = 2 * (self.n + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); m2];
        for j in 1..=self.n {
            buf[j].re = x[j - 1];
            buf[m2 - j].re = -x[j - 1];
        }
        self.fft.process(&mut buf);
        for k in 1..=self.n {
            x[k - 1] = -buf[k].im / 2.0;
        }
    }
}

fn dst_plan(n: usize) -> Arc<Dst1> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Dst1>>>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().unwrap();
    guard.entry(n).or_insert_with(|| Arc::new(Dst1::new(n))).clone()
}

/// 2-D DST-I applied to an `n x n` row-major grid, rows then columns.
pub fn dst2_inplace(grid: &mut [f64], n: usize) {
    assert_eq!(grid.len(), n * n);
    let plan = dst_plan(n);
    let mut row = vec![0.0; n];
    for r in 0..n {
        row.copy_from_slice(&grid[r * n..(r + 1) * n]);
        plan.transform(&mut row);
        grid[r * n..(r + 1) * n].copy_from_slice(&row);
    }
    let mut col = vec![0.0; n];
    for c in 0..n {
        for r in 0..n {
            col[r] = grid[r * n + c];
        }
        plan.transform(&mut col);
        for r in 0..n {
            grid[r * n + c] = col[r];
        }
    }
}

/// Eigenvalues `2 - 2cos(pi p / M)` for `p = 1..n`, `M = n + 1`.
pub fn dirichlet_eigenvalues(n: usize) -> Vec<f64> {
    let m = (n + 1) as f64;
    (1..=n)
        .map(|p| 2.0 - 2.0 * (std::f64::consts::PI * p as f64 / m).cos())
        .collect()
}

/// Solve `(4I - A) u = f` on an `n x n` Dirichlet grid (row-major), in place.
pub fn solve_neg_lap5(f: &mut [f64], n: usize) {
    dst2_inplace(f, n);
    let lam = dirichlet_eigenvalues(n);
    let norm = 4.0 / ((n + 1) as f64 * (n + 1) as f64);
    for r in 0..n {
        for c in 0..n {
            f[r * n + c] *= norm / (lam[r] + lam[c]);
        }
    }
    dst2_inplace(f, n);
}

/// Synthesize a field from orthonormal sine-mode coefficients:
/// `u(x) = sum_{p,q} coef[p,q] e_p(x1) e_q(x2)` with `e_p(u) = sin(pi p u / M)/sqrt(M/2)`.
pub fn sine_synthesis(coef: &mut [f64], n: usize) {
    dst2_inplace(coef, n);
    let half_m = (n + 1) as f64 / 2.0;
    for v in coef.iter_mut() {
        *v /= half_m;
    }
}

/// Max-norm residual of `(4I - A) u = f` with zero Dirichlet data.
pub fn residual_neg_lap5(u: &[f64], f: &[f64], n: usize) -> f64 {
    let at = |r: isize, c: isize| -> f64 {
        if r < 0 || c < 0 || r >= n as isize || c >= n as isize {
            0.0
        } else {
            u[r as usize * n + c as usize]
        }
    };
    let mut worst = 0.0f64;
    for r in 0..n as isize {
        for c in 0..n as isize {
            let lhs = 4.0 * at(r, c) - at(r - 1, c) - at(r + 1, c) - at(r, c - 1) - at(r, c + 1);
            worst = worst.max((lhs - f[r as usize * n + c as usize]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dst_matches_direct_sum() {
        let n = 7;
        let m = (n + 1) as f64;
        let x: Vec<f64> = (0..n).map(|j| (j as f64 * 0.7).sin() + 0.3).collect();
        let mut fast = x.clone();
        dst_plan(n).transform(&mut fast);
        for k in 1..=n {
            let direct: f64 = (1..=n)
                .map(|j| x[j - 1] * (std::f64::consts::PI * (j * k) as f64 / m).sin())
                .sum();
            assert!((fast[k - 1] - direct).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn poisson_solver_residual() {
        let n = 31;
        let mut f: Vec<f64> = (0..n * n).map(|i| ((i * 37 % 101) as f64 - 50.0) / 17.0).collect();
        let rhs = f.clone();
        solve_neg_lap5(&mut f, n);
        let res = residual_neg_lap5(&f, &rhs, n);
        let scale = rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(res <= 1e-11 * scale.max(1.0), "residual {res}");
    }

    #[test]
    fn synthesis_orthonormal_variance() {
        // A single unit coefficient must synthesize a unit-L2-norm mode.
        let n = 15;
        let mut coef = vec![0.0; n * n];
        coef[2 * n + 4] = 1.0;
        sine_synthesis(&mut coef, n);
        let norm2: f64 = coef.iter().map(|v| v * v).sum();
        assert!((norm2 - 1.0).abs() < 1e-12, "norm {norm2}");
    }
}
