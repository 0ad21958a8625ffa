//! Small dense and banded solvers.

use crate::error::{Error, Result};

/// Cholesky factor of a symmetric positive definite band matrix.
///
/// Storage is lower band: `band[i * (bw + 1) + d]` holds `L[i][i - d]`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandCholesky {
    /// Factors the matrix given by `entry(i, j)` for `j <= i`, `i - j <= bw`.
    pub fn factor(n: usize, bw: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for d in 0..=bw.min(i) {
                band[i * w + d] = entry(i, i - d);
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                // L[i][j] = (A[i][j] - sum_k L[i][k] L[j][k]) / L[j][j]
                let mut s = band[i * w + (i - j)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= band[i * w + (i - k)] * band[j * w + (j - k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Solver(format!(
                            "band matrix is not positive definite at row {i}"
                        )));
                    }
                    band[i * w] = s.sqrt();
                } else {
                    band[i * w + (i - j)] = s / band[j * w];
                }
            }
        }
        Ok(BandCholesky { n, bw, band })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Solves `A x = b` in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.band[i * w + (i - k)] * b[k];
            }
            b[i] = s / self.band[i * w];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= self.band[k * w + (k - i)] * b[k];
            }
            b[i] = s / self.band[i * w];
        }
    }
}

/// Solves a small dense system `A x = b` (row-major `A`) by Gaussian
/// elimination with partial pivoting.
pub fn solve_dense(n: usize, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m
        .iter()
        .fold(0.0_f64, |s, v| s.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        if m[piv * n + col].abs() <= 1e-14 * scale {
            return Err(Error::Solver("singular dense system".into()));
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            x.swap(piv, col);
        }
        for r in (col + 1)..n {
            let f = m[r * n + col] / m[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    m[r * n + k] -= f * m[col * n + k];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for r in (0..n).rev() {
        let mut s = x[r];
        for k in (r + 1)..n {
            s -= m[r * n + k] * x[k];
        }
        x[r] = s / m[r * n + r];
    }
    Ok(x)
}

/// Minimum-norm solution of the underdetermined or square system `J d = r`
/// (`J` is `rows x cols`, `rows <= cols`), with Tikhonov damping `lambda`.
pub fn min_norm_solve(
    rows: usize,
    cols: usize,
    j: &[f64],
    r: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    // d = J^T (J J^T + lambda I)^{-1} r
    let mut jjt = vec![0.0; rows * rows];
    for a in 0..rows {
        for b in 0..rows {
            jjt[a * rows + b] = (0..cols).map(|k| j[a * cols + k] * j[b * cols + k]).sum();
        }
        jjt[a * rows + a] += lambda;
    }
    let y = solve_dense(rows, &jjt, r)?;
    Ok((0..cols)
        .map(|k| (0..rows).map(|a| j[a * cols + k] * y[a]).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_cholesky_matches_dense() {
        // pentadiagonal SPD
        let n = 7;
        let entry = |i: usize, j: usize| match i.abs_diff(j) {
            0 => 6.0,
            1 => -4.0,
            2 => 1.0,
            _ => 0.0,
        } + if i == j { 0.5 } else { 0.0 };
        let f = BandCholesky::factor(n, 2, entry).unwrap();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = rhs.clone();
        f.solve_in_place(&mut x);
        let dense: Vec<f64> = (0..n * n).map(|k| entry(k / n, k % n)).collect();
        let y = solve_dense(n, &dense, &rhs).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_rejects_singular() {
        assert!(solve_dense(2, &[1.0, 2.0, 2.0, 4.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn min_norm_hits_target() {
        let j = [1.0, 2.0, 3.0];
        let d = min_norm_solve(1, 3, &j, &[14.0], 0.0).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-12 && (d[2] - 3.0).abs() < 1e-12);
    }
}
