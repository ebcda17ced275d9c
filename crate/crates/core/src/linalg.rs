//! Dense LU factorisation with partial pivoting, plus mixed-precision
//! iterative refinement for systems whose entries are known in
//! double-double.

use crate::error::{Error, Result};
use crate::numeric::Dd;

/// Pivots smaller than this multiple of their original row norm are treated
/// as zero.
pub const PIVOT_THRESHOLD: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct Lu {
    size: usize,
    /// Row-major, L below the diagonal (unit diagonal implied), U on and above.
    factors: Vec<f64>,
    perm: Vec<usize>,
    norm_one: f64,
    /// Smallest `|u_ii| / ||original row||_inf`.
    pub min_pivot_ratio: f64,
}

impl Lu {
    /// Factor the row-major `size x size` matrix `a`.
    pub fn factor(a: &[f64], size: usize) -> Result<Lu> {
        if a.len() != size * size {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                size * size,
                a.len()
            )));
        }
        let row_norms: Vec<f64> = (0..size)
            .map(|i| {
                a[i * size..(i + 1) * size]
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()))
            })
            .collect();
        let norm_one = (0..size)
            .map(|j| (0..size).map(|i| a[i * size + j].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let mut f = a.to_vec();
        let mut perm: Vec<usize> = (0..size).collect();
        let mut min_ratio = f64::INFINITY;
        for k in 0..size {
            let (p, _) =
                (k..size)
                    .map(|i| (i, f[i * size + k].abs()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if p != k {
                for j in 0..size {
                    f.swap(k * size + j, p * size + j);
                }
                perm.swap(k, p);
            }
            let pivot = f[k * size + k];
            let ratio = pivot.abs() / row_norms[perm[k]];
            min_ratio = min_ratio.min(ratio);
            if ratio.is_nan() || ratio < PIVOT_THRESHOLD {
                return Err(Error::SplineNotUnique { pivot: k, size });
            }
            for i in k + 1..size {
                let m = f[i * size + k] / pivot;
                f[i * size + k] = m;
                if m != 0.0 {
                    for j in k + 1..size {
                        f[i * size + j] -= m * f[k * size + j];
                    }
                }
            }
        }
        Ok(Lu {
            size,
            factors: f,
            perm,
            norm_one,
            min_pivot_ratio: min_ratio,
        })
    }

    /// Largest `|u_ij|`, for growth-factor estimates.
    pub fn max_factor(&self) -> f64 {
        let n = self.size;
        (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .fold(0.0, |m, (i, j)| m.max(self.factors[i * n + j].abs()))
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.size;
        let f = &self.factors;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| f[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| f[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / f[i * n + i];
        }
        x
    }

    /// Solve `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.size;
        let f = &self.factors;
        // U^T z = b, L^T w = z, x = P^T w
        let mut z = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| f[j * n + i] * z[j]).sum();
            z[i] = (z[i] - s) / f[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| f[j * n + i] * z[j]).sum();
            z[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }

    pub fn determinant(&self) -> f64 {
        let n = self.size;
        let mut sign = 1.0;
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.perm[i];
                len += 1;
            }
            if len % 2 == 0 {
                sign = -sign;
            }
        }
        (0..n).fold(sign, |acc, i| acc * self.factors[i * n + i])
    }

    /// Estimate of the 1-norm condition number (Hager's method).
    pub fn condition_estimate(&self) -> f64 {
        let n = self.size;
        let mut x = vec![1.0 / n as f64; n];
        let mut estimate = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            let norm: f64 = y.iter().map(|v| v.abs()).sum();
            let xi: Vec<f64> = y
                .iter()
                .map(|v| if *v >= 0.0 { 1.0 } else { -1.0 })
                .collect();
            let z = self.solve_transpose(&xi);
            let zx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            let (j, zmax) = z.iter().enumerate().fold((0, 0.0f64), |best, (i, v)| {
                if v.abs() > best.1 {
                    (i, v.abs())
                } else {
                    best
                }
            });
            if norm <= estimate || zmax <= zx {
                estimate = estimate.max(norm);
                break;
            }
            estimate = norm;
            x = vec![0.0; n];
            x[j] = 1.0;
        }
        estimate * self.norm_one
    }
}

/// Solve `A x = b` for a matrix known in double-double: factor the rounded
/// matrix, then refine with residuals evaluated in double-double.
/// Returns the solution and the final max-norm residual.
pub fn solve_refined(a: &[Dd], b: &[Dd], size: usize, sweeps: usize) -> Result<(Lu, Vec<Dd>, f64)> {
    if b.len() != size {
        return Err(Error::DimensionMismatch(format!(
            "rhs has {} entries, expected {size}",
            b.len()
        )));
    }
    let rounded: Vec<f64> = a.iter().map(|v| v.to_f64()).collect();
    let lu = Lu::factor(&rounded, size)?;
    let mut x = vec![Dd::ZERO; size];
    let mut best = (f64::INFINITY, x.clone());
    for _ in 0..=sweeps {
        let r = residual(a, b, &x, size);
        let norm = r.iter().fold(0.0f64, |m, v| m.max(v.to_f64().abs()));
        if norm >= best.0 {
            break;
        }
        best = (norm, x.clone());
        if norm == 0.0 {
            break;
        }
        let d = lu.solve(&r.iter().map(|v| v.to_f64()).collect::<Vec<_>>());
        for (xi, di) in x.iter_mut().zip(d) {
            *xi += Dd::from(di);
        }
    }
    let (norm, x) = best;
    Ok((lu, x, norm))
}

fn residual(a: &[Dd], b: &[Dd], x: &[Dd], size: usize) -> Vec<Dd> {
    (0..size)
        .map(|i| {
            let mut acc = b[i];
            for j in 0..size {
                acc = acc - a[i * size + j] * x[j];
            }
            acc
        })
        .collect()
}
