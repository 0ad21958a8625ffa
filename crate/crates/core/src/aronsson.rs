//! Third-order Aronsson operator on discrete functions, in contracted form
//! `H_X : D(H(J^2u)) (x) D(H(J^2u))` and in expanded form with a difference
//! approximation of `D^3 u`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_space::{energy_field, jet_field, DiscreteFunction, Grid};
use crate::supremand::{eval, partials, Jet2, Supremand, SupremandGradient, SymMatrix};

/// Symmetric 3-tensor stored by its distinct entries `i <= j <= k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThirdOrderTensor {
    n: usize,
    entries: Vec<f64>,
}

impl ThirdOrderTensor {
    pub fn zeros(n: usize) -> Self {
        ThirdOrderTensor {
            n,
            entries: vec![0.0; n * (n + 1) * (n + 2) / 6],
        }
    }

    pub fn scalar(v: f64) -> Self {
        ThirdOrderTensor {
            n: 1,
            entries: vec![v],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    fn slot(&self, i: usize, j: usize, k: usize) -> usize {
        let mut t = [i, j, k];
        t.sort_unstable();
        let mut idx = 0;
        for (pos, (a, b, c)) in Self::triples(self.n).into_iter().enumerate() {
            if (a, b, c) == (t[0], t[1], t[2]) {
                idx = pos;
                break;
            }
        }
        idx
    }

    fn triples(n: usize) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    out.push((i, j, k));
                }
            }
        }
        out
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries[self.slot(i, j, k)]
    }

    /// Symmetrization of the directional derivatives `d[i] ~ D_i X`.
    pub fn from_directional(d: &[SymMatrix]) -> Self {
        let n = d.len();
        let mut z = ThirdOrderTensor::zeros(n);
        for (pos, (i, j, k)) in Self::triples(n).into_iter().enumerate() {
            z.entries[pos] = (d[i].get(j, k) + d[j].get(i, k) + d[k].get(i, j)) / 3.0;
        }
        z
    }

    /// Symmetrized central differences `D_i X_jk` of a Hessian field at `node`.
    pub fn from_hessian_field(grid: &Grid, hess: &[SymMatrix], node: usize) -> Option<Self> {
        let n = grid.dim();
        let mut d = vec![SymMatrix::zeros(n); n];
        for (axis, di) in d.iter_mut().enumerate() {
            let (lo, hi) = axis_neighbors(grid, node, axis)?;
            let h2 = 2.0 * grid.spacing(axis);
            *di = hess[hi].lerp(1.0 / h2, &hess[lo], -1.0 / h2);
        }
        Some(Self::from_directional(&d))
    }

    /// Largest entry in absolute value.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Entrywise max distance.
    pub fn distance(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `a * self + b * other`.
    pub fn lerp(&self, a: f64, other: &Self, b: f64) -> Self {
        ThirdOrderTensor {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    /// `sum_jk A_jk Z_ijk`.
    pub fn contract(&self, a: &SymMatrix) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..self.n {
                    for k in 0..self.n {
                        s += a.get(j, k) * self.get(i, j, k);
                    }
                }
                s
            })
            .collect()
    }
}

fn axis_neighbors(grid: &Grid, node: usize, axis: usize) -> Option<(usize, usize)> {
    let mut idx = grid.multi_index(node);
    let i = idx[axis];
    if i == 0 || i + 1 >= grid.count(axis) {
        return None;
    }
    idx[axis] = i - 1;
    let lo = grid.index(&idx);
    idx[axis] = i + 1;
    Some((lo, grid.index(&idx)))
}

/// `H(J^2 u)` at every node. Uses `eval`, so non-smooth points are fine.
pub fn hessian_energy_field(h: &dyn Supremand, u: &DiscreteFunction) -> Result<Vec<f64>> {
    energy_field(h, u)
}

/// The inner vector `H_x + H_eta p + H_p X + H_X : Z` of the expanded operator.
pub fn inner_field(g: &SupremandGradient, jet: &Jet2, z: &ThirdOrderTensor) -> Vec<f64> {
    let hz = z.contract(&g.d_hess);
    let xp = jet.hess.apply(&g.d_p);
    (0..jet.dim())
        .map(|i| g.d_x.get(i).copied().unwrap_or(0.0) + g.d_eta * jet.p[i] + xp[i] + hz[i])
        .collect()
}

/// `H_X : v (x) v`.
pub fn contract_square(g: &SupremandGradient, v: &[f64]) -> f64 {
    g.d_hess.quad_form(v)
}

/// Expanded operator `A(J^2u, Z)` at a single jet.
pub fn expanded_operator(h: &dyn Supremand, jet: &Jet2, z: &ThirdOrderTensor) -> Result<f64> {
    let g = partials(h, jet)?;
    Ok(contract_square(&g, &inner_field(&g, jet, z)))
}

/// One residual evaluator's output.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeResidual {
    /// Residual per node, `NaN` where masked.
    pub values: Vec<f64>,
    /// `true` where the residual is meaningful.
    pub valid: Vec<bool>,
    /// Nodes dropped because the supremand was not differentiable there.
    pub failed: Vec<usize>,
}

/// Both residuals together with `|D(H(J^2u))|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    pub contracted: Vec<f64>,
    pub expanded: Vec<f64>,
    pub grad_h: Vec<f64>,
    pub valid: Vec<bool>,
    pub failed: Vec<usize>,
    pub jumps: Vec<usize>,
}

/// Nodes whose Hessian differs from a grid neighbor by more than ten times
/// the median neighbor difference (with a small absolute floor).
pub fn detect_jumps(u: &DiscreteFunction) -> Result<Vec<usize>> {
    let grid = u.grid();
    let hess: Vec<SymMatrix> = jet_field(u)?.into_iter().map(|(_, j)| j.hess).collect();
    let scale = hess.iter().map(|x| x.frobenius_norm()).fold(0.0, f64::max);
    let mut edges = Vec::new();
    for k in 0..grid.len() {
        let idx = grid.multi_index(k);
        for axis in 0..grid.dim() {
            if idx[axis] + 1 < grid.count(axis) {
                let mut nb = idx.clone();
                nb[axis] += 1;
                let l = grid.index(&nb);
                edges.push((k, l, hess[l].lerp(1.0, &hess[k], -1.0).frobenius_norm()));
            }
        }
    }
    if edges.is_empty() {
        return Ok(Vec::new());
    }
    let mut diffs: Vec<f64> = edges.iter().map(|e| e.2).collect();
    diffs.sort_by(f64::total_cmp);
    let median = diffs[diffs.len() / 2];
    let threshold = (10.0 * median).max(1e-8 * (1.0 + scale));
    let mut flagged = vec![false; grid.len()];
    for (a, b, d) in edges {
        if d > threshold {
            flagged[a] = true;
            flagged[b] = true;
        }
    }
    Ok((0..grid.len()).filter(|&k| flagged[k]).collect())
}

/// Masking radius around detected Hessian jumps.
pub const JUMP_RADIUS: usize = 2;

/// Nodes where third-order quantities are evaluated: at least two steps from
/// the boundary and more than [`JUMP_RADIUS`] steps from any jump.
pub fn residual_mask(u: &DiscreteFunction) -> Result<Vec<bool>> {
    let grid = u.grid();
    let jumps = detect_jumps(u)?;
    let mut valid: Vec<bool> = (0..grid.len())
        .map(|k| {
            grid.multi_index(k)
                .iter()
                .enumerate()
                .all(|(ax, &i)| i >= 2 && i + 2 < grid.count(ax))
        })
        .collect();
    for &j in &jumps {
        let c = grid.multi_index(j);
        for (k, v) in valid.iter_mut().enumerate() {
            if *v {
                let idx = grid.multi_index(k);
                if idx
                    .iter()
                    .zip(&c)
                    .all(|(a, b)| a.abs_diff(*b) <= JUMP_RADIUS)
                {
                    *v = false;
                }
            }
        }
    }
    Ok(valid)
}

fn gradient_of_field(grid: &Grid, field: &[f64], node: usize) -> Option<Vec<f64>> {
    (0..grid.dim())
        .map(|axis| {
            let (lo, hi) = axis_neighbors(grid, node, axis)?;
            Some((field[hi] - field[lo]) / (2.0 * grid.spacing(axis)))
        })
        .collect()
}

/// `H_X : D(H) (x) D(H)` with `D(H)` by central differences of the scalar
/// field `H(J^2 u)`.
pub fn contracted_residual(h: &dyn Supremand, u: &DiscreteFunction) -> Result<NodeResidual> {
    Ok(split(residual_field(h, u)?, true))
}

/// `H_X : (H_x + H_eta p + H_p X + H_X : Z)^2` with `Z` by central
/// differences of the Hessian field.
pub fn expanded_residual(h: &dyn Supremand, u: &DiscreteFunction) -> Result<NodeResidual> {
    Ok(split(residual_field(h, u)?, false))
}

fn split(r: ResidualField, contracted: bool) -> NodeResidual {
    NodeResidual {
        values: if contracted { r.contracted } else { r.expanded },
        valid: r.valid,
        failed: r.failed,
    }
}

pub fn residual_field(h: &dyn Supremand, u: &DiscreteFunction) -> Result<ResidualField> {
    if h.dimension() != u.grid().dim() {
        return Err(Error::DimensionMismatch {
            expected: u.grid().dim(),
            got: h.dimension(),
        });
    }
    let grid = u.grid();
    let jets: Vec<Jet2> = jet_field(u)?.into_iter().map(|(_, j)| j).collect();
    let field: Vec<f64> = jets.iter().map(|j| eval(h, j)).collect::<Result<_>>()?;
    let hess: Vec<SymMatrix> = jets.iter().map(|j| j.hess.clone()).collect();
    let mut valid = residual_mask(u)?;
    let n = grid.len();
    let mut out = ResidualField {
        contracted: vec![f64::NAN; n],
        expanded: vec![f64::NAN; n],
        grad_h: vec![f64::NAN; n],
        valid: vec![false; n],
        failed: Vec::new(),
        jumps: detect_jumps(u)?,
    };
    for k in 0..n {
        if let Some(dh) = gradient_of_field(grid, &field, k) {
            out.grad_h[k] = dh.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        if !valid[k] {
            continue;
        }
        let g = match partials(h, &jets[k]) {
            Ok(g) => g,
            Err(e) => {
                log::debug!("node {k} masked: {e}");
                out.failed.push(k);
                valid[k] = false;
                continue;
            }
        };
        let (Some(dh), Some(z)) = (
            gradient_of_field(grid, &field, k),
            ThirdOrderTensor::from_hessian_field(grid, &hess, k),
        ) else {
            valid[k] = false;
            continue;
        };
        out.contracted[k] = contract_square(&g, &dh);
        out.expanded[k] = contract_square(&g, &inner_field(&g, &jets[k], &z));
    }
    out.valid = valid;
    Ok(out)
}

impl ResidualField {
    /// Largest `|contracted - expanded|` over valid nodes.
    pub fn max_discrepancy(&self) -> f64 {
        (0..self.valid.len())
            .filter(|&k| self.valid[k])
            .map(|k| (self.contracted[k] - self.expanded[k]).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv_string(&self, grid: &Grid) -> String {
        let mut s = String::new();
        s.push_str(if grid.dim() == 1 { "x," } else { "x,y," });
        s.push_str("contracted,expanded,gradH,masked\n");
        for k in 0..grid.len() {
            for c in grid.point(k) {
                write!(s, "{c},").unwrap();
            }
            writeln!(
                s,
                "{},{},{},{}",
                self.contracted[k],
                self.expanded[k],
                self.grad_h[k],
                u8::from(!self.valid[k])
            )
            .unwrap();
        }
        s
    }

    pub fn write_csv(&self, grid: &Grid, path: &Path) -> Result<()> {
        crate::function_space::write_text(path, &self.to_csv_string(grid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::BoundaryData;
    use crate::oracle_1d::absolute_minimizer_pure;
    use crate::supremand::{PureHessianNorm, SmoothedHessianNorm, SquaredHessian};

    fn cube(m: usize) -> DiscreteFunction {
        let g = Grid::new_1d(0.0, 1.0, m).unwrap();
        DiscreteFunction::sample(g, |x| x[0].powi(3), |x| vec![3.0 * x[0] * x[0]]).unwrap()
    }

    #[test]
    fn cubic_field_and_residual() {
        let u = cube(801);
        let f = hessian_energy_field(&SquaredHessian::new(1), &u).unwrap();
        for (k, v) in f.iter().enumerate().skip(1).take(799) {
            let x = u.grid().coord(0, k);
            assert!((v - 36.0 * x * x).abs() < 1e-6, "{k}");
        }
        let r = residual_field(&SquaredHessian::new(1), &u).unwrap();
        let mid = 400;
        assert!((r.contracted[mid] - 7776.0).abs() < 0.02 * 7776.0);
        assert!((r.expanded[mid] - 7776.0).abs() < 1e-3);
        assert!(r.max_discrepancy() < 1e-3);
    }

    #[test]
    fn quadratic_residual_vanishes() {
        let g = Grid::new_2d((0.0, 1.0), (0.0, 1.0), (9, 11)).unwrap();
        let u = DiscreteFunction::sample(
            g,
            |x| x[0] * x[0] + 0.5 * x[0] * x[1] - x[1] * x[1],
            |x| vec![2.0 * x[0] + 0.5 * x[1], 0.5 * x[0] - 2.0 * x[1]],
        )
        .unwrap();
        let r = residual_field(&SquaredHessian::new(2), &u).unwrap();
        assert!(r.valid.iter().any(|&v| v));
        for k in 0..u.len() {
            if r.valid[k] {
                assert!(r.contracted[k].abs() < 1e-12 && r.expanded[k].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jump_is_masked() {
        let g = Grid::new_1d(0.0, 1.0, 101).unwrap();
        let u = absolute_minimizer_pure(0.0, 1.0, 0.0, 0.0, 1.0, 0.0)
            .unwrap()
            .solution
            .sample(&g)
            .unwrap();
        let r = residual_field(&PureHessianNorm::new(1), &u).unwrap();
        assert!(!r.jumps.is_empty());
        assert!(!r.valid[50] && !r.valid[48] && !r.valid[52]);
        let ok: Vec<usize> = (0..101).filter(|&k| r.valid[k]).collect();
        assert!(ok.len() > 80);
        for k in ok {
            assert!(r.contracted[k].abs() < 1e-8, "{k}: {}", r.contracted[k]);
        }
    }

    #[test]
    fn smooth_fixture_refines() {
        let d = |m: usize| {
            let g = Grid::new_1d(0.0, 1.0, m).unwrap();
            let u = DiscreteFunction::sample(g, |x| x[0].sin(), |x| vec![x[0].cos()]).unwrap();
            residual_field(&SmoothedHessianNorm::new(1, 0.1), &u)
                .unwrap()
                .max_discrepancy()
        };
        let (a, b) = (d(51), d(101));
        assert!(b < 0.65 * a, "{a} {b}");
    }

    #[test]
    fn csv_header() {
        let u = DiscreteFunction::from_fn(
            Grid::new_1d(0.0, 1.0, 7).unwrap(),
            BoundaryData::zero(&Grid::new_1d(0.0, 1.0, 7).unwrap()),
            |_| 0.0,
        )
        .unwrap();
        let r = residual_field(&SquaredHessian::new(1), &u).unwrap();
        let s = r.to_csv_string(u.grid());
        assert!(s.starts_with("x,contracted,expanded,gradH,masked\n"));
        assert_eq!(s.lines().count(), 8);
    }
}
