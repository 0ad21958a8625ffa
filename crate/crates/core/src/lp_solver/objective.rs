//! `F(v) = (sum_k w_k (M + H_k)^p)^{1/p} = E_p + M` over the interior values
//! `v`, its gradient and a fixed preconditioner.

use crate::error::{Error, Result};
use crate::function_space::{BoundaryData, Grid, JetOperator};
use crate::linalg::BandCholesky;
use crate::supremand::{partials, Supremand, SymMatrix};

pub(crate) struct Objective<'a> {
    pub h: &'a dyn Supremand,
    pub op: JetOperator,
    pub weights: Vec<f64>,
    pub p: f64,
    pub shift: f64,
    /// Node index of each free variable.
    pub free: Vec<usize>,
    /// Full nodal vector; free entries are overwritten on every evaluation.
    pub base: Vec<f64>,
}

/// Per-node quantities at an iterate.
pub(crate) struct Field {
    pub top: f64,
    /// `sum_k w_k (S_k / top)^p`.
    pub mass: f64,
    /// `S_k = M + H_k`.
    pub s: Vec<f64>,
}

impl<'a> Objective<'a> {
    pub fn new(
        h: &'a dyn Supremand,
        grid: &Grid,
        boundary: &BoundaryData,
        base: Vec<f64>,
        p: f64,
        shift: f64,
    ) -> Result<Self> {
        Ok(Objective {
            h,
            op: JetOperator::new(grid, boundary)?,
            weights: grid.trapezoid_weights(),
            p,
            shift,
            free: grid.interior_nodes(),
            base,
        })
    }

    pub fn full(&self, v: &[f64]) -> Vec<f64> {
        let mut u = self.base.clone();
        for (&k, &x) in self.free.iter().zip(v) {
            u[k] = x;
        }
        u
    }

    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&k| u[k]).collect()
    }

    pub fn field(&self, u: &[f64]) -> Result<Field> {
        let mut s = Vec::with_capacity(self.op.len());
        let mut top = 0.0_f64;
        for k in 0..self.op.len() {
            let v = self.shift + self.h.value(&self.op.jet(k, u));
            if !(v > 0.0) {
                return Err(Error::ShiftViolation { node: k, value: v });
            }
            top = top.max(v);
            s.push(v);
        }
        if !top.is_finite() {
            return Err(Error::Solver("energy is not finite".into()));
        }
        let mass = s
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * (v / top).powf(self.p))
            .sum();
        Ok(Field { top, mass, s })
    }

    /// `E_p + M`.
    pub fn value(field: &Field, p: f64) -> f64 {
        field.top * field.mass.powf(1.0 / p)
    }

    /// Node-space vector `sum_k c_k dH_k/du` with `c_k = w_k (S_k/top)^{p-1}`.
    pub fn weighted_adjoint(&self, u: &[f64], field: &Field) -> Result<Vec<f64>> {
        let mut out = vec![0.0; u.len()];
        for k in 0..self.op.len() {
            let c = self.weights[k] * (field.s[k] / field.top).powf(self.p - 1.0);
            if c < 1e-300 {
                continue;
            }
            let g = partials(self.h, &self.op.jet(k, u))?;
            self.op.accumulate_transpose(k, &g, c, &mut out);
        }
        Ok(out)
    }

    /// `(F, grad F)` in the free variables.
    pub fn value_grad(&self, v: &[f64]) -> Result<(f64, Vec<f64>)> {
        let u = self.full(v);
        let field = self.field(&u)?;
        let adj = self.weighted_adjoint(&u, &field)?;
        let f = Self::value(&field, self.p);
        let scale = f / (field.top * field.mass);
        let g = self.free.iter().map(|&k| adj[k] * scale).collect();
        Ok((f, g))
    }

    /// Factor of `G = sum_k w_k R_k^T R_k`, `R_k` the Hessian stencil rows at
    /// node `k` restricted to the free variables (off-diagonals weighted 2).
    pub fn preconditioner(&self) -> Result<BandCholesky> {
        let n_nodes = self.op.len();
        let mut pos = vec![usize::MAX; n_nodes];
        for (i, &k) in self.free.iter().enumerate() {
            pos[k] = i;
        }
        let dim = self.op.grid().dim();
        let comp_w: Vec<f64> = SymMatrix::entry_indices(dim)
            .into_iter()
            .map(|(i, j)| if i == j { 1.0 } else { 2.0 })
            .collect();
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        let mut bw = 0;
        for k in 0..n_nodes {
            for (row, cw) in self.op.stencil(k).hess.iter().zip(&comp_w) {
                let terms: Vec<(usize, f64)> = row
                    .terms
                    .iter()
                    .filter(|(node, _)| pos[*node] != usize::MAX)
                    .map(|&(node, w)| (pos[node], w))
                    .collect();
                for &(a, wa) in &terms {
                    for &(b, wb) in &terms {
                        if b <= a {
                            bw = bw.max(a - b);
                            entries.push((a, b, self.weights[k] * cw * wa * wb));
                        }
                    }
                }
            }
        }
        let n = self.free.len();
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for (a, b, v) in entries {
            band[a * w + (a - b)] += v;
        }
        let ridge = 1e-12 * (0..n).map(|i| band[i * w]).fold(0.0_f64, f64::max);
        BandCholesky::factor(n, bw, |i, j| {
            band[i * w + (i - j)] + if i == j { ridge } else { 0.0 }
        })
    }
}
