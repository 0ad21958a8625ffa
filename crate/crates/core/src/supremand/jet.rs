use serde::{Deserialize, Serialize};

/// Symmetric `n x n` matrix stored as its upper triangle, row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    upper: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            upper: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, t: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, t);
        }
        m
    }

    pub fn scalar(v: f64) -> Self {
        SymMatrix {
            n: 1,
            upper: vec![v],
        }
    }

    /// Builds from a full row-major matrix, symmetrizing `(A + A^T)/2`.
    pub fn from_full(n: usize, full: &[f64]) -> Self {
        assert_eq!(full.len(), n * n);
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, 0.5 * (full[i * n + j] + full[j * n + i]));
            }
        }
        m
    }

    pub fn from_upper(n: usize, upper: Vec<f64>) -> Self {
        assert_eq!(upper.len(), n * (n + 1) / 2);
        SymMatrix { n, upper }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of distinct stored entries.
    pub fn len(&self) -> usize {
        self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty()
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.upper[k] = v;
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn upper_mut(&mut self) -> &mut [f64] {
        &mut self.upper
    }

    /// `(i, j)` pairs with `i <= j`, in storage order.
    pub fn entry_indices(n: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                out.push((i, j));
            }
        }
        out
    }

    /// Frobenius inner product `A : B`.
    pub fn frobenius_dot(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.n, other.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let w = if i == j { 1.0 } else { 2.0 };
                acc += w * self.get(i, j) * other.get(i, j);
            }
        }
        acc
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.frobenius_dot(self)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            upper: self.upper.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            n: self.n,
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Linear combination `a*self + b*other`.
    pub fn lerp(&self, a: f64, other: &SymMatrix, b: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    /// Plain matrix product; the result is generally not symmetric.
    pub fn matmul_full(&self, other: &SymMatrix) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum();
            }
        }
        out
    }

    /// `X^T X` for symmetric `X`, i.e. `X^2`.
    pub fn gram(&self) -> SymMatrix {
        SymMatrix::from_full(self.n, &self.matmul_full(self))
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Quadratic form `v^T A v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.apply(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Second-order jet `(x, u(x), Du(x), D^2u(x))` at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jet2 {
    pub x: Vec<f64>,
    pub eta: f64,
    pub p: Vec<f64>,
    pub hess: SymMatrix,
}

impl Jet2 {
    pub fn new(x: Vec<f64>, eta: f64, p: Vec<f64>, hess: SymMatrix) -> Self {
        assert_eq!(x.len(), p.len(), "position and gradient dimensions differ");
        assert_eq!(
            x.len(),
            hess.dim(),
            "position and Hessian dimensions differ"
        );
        Jet2 { x, eta, p, hess }
    }

    /// A jet with only the Hessian set, at the origin.
    pub fn hessian_only(hess: SymMatrix) -> Self {
        let n = hess.dim();
        Jet2 {
            x: vec![0.0; n],
            eta: 0.0,
            p: vec![0.0; n],
            hess,
        }
    }

    /// 1D convenience constructor.
    pub fn scalar(x: f64, eta: f64, p: f64, xx: f64) -> Self {
        Jet2 {
            x: vec![x],
            eta,
            p: vec![p],
            hess: SymMatrix::scalar(xx),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn with_hess(&self, hess: SymMatrix) -> Jet2 {
        Jet2 {
            x: self.x.clone(),
            eta: self.eta,
            p: self.p.clone(),
            hess,
        }
    }
}

/// All first partials of a supremand at a jet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupremandGradient {
    pub d_x: Vec<f64>,
    pub d_eta: f64,
    pub d_p: Vec<f64>,
    pub d_hess: SymMatrix,
}

impl SupremandGradient {
    pub fn zeros(n: usize) -> Self {
        SupremandGradient {
            d_x: vec![0.0; n],
            d_eta: 0.0,
            d_p: vec![0.0; n],
            d_hess: SymMatrix::zeros(n),
        }
    }

    /// Only the Hessian partial is nonzero.
    pub fn hessian_only(d_hess: SymMatrix) -> Self {
        let n = d_hess.dim();
        SupremandGradient {
            d_hess,
            ..Self::zeros(n)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.d_eta.is_finite()
            && self.d_x.iter().all(|v| v.is_finite())
            && self.d_p.iter().all(|v| v.is_finite())
            && self.d_hess.upper().iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_is_symmetric() {
        let mut m = SymMatrix::zeros(3);
        m.set(2, 0, 5.0);
        assert_eq!(m.get(0, 2), 5.0);
        assert_eq!(m.len(), 6);
    }

    #[test]
    fn frobenius_counts_off_diagonal_twice() {
        let m = SymMatrix::from_full(2, &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(m.frobenius_norm_sq(), 1.0 + 4.0 + 4.0 + 9.0);
        assert_eq!(SymMatrix::scaled_identity(2, 2.0).frobenius_norm_sq(), 8.0);
    }

    #[test]
    fn gram_of_symmetric_is_square() {
        let m = SymMatrix::from_full(2, &[1.0, 2.0, 2.0, 3.0]);
        let g = m.gram();
        assert_eq!(g.get(0, 0), 5.0);
        assert_eq!(g.get(0, 1), 8.0);
        assert_eq!(g.get(1, 1), 13.0);
    }
}
