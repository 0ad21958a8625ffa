//! Uniform grids on intervals and rectangles, clamped boundary data, nodal
//! functions and their second-order jets.
//!
//! Clamped data enters through a ghost layer one spacing outside the grid:
//! the ghost value is the mirror node plus `2h` times the outward normal
//! slope, so central differences at boundary nodes see the prescribed slope
//! and reproduce quadratics exactly. Energies are taken over every node with
//! trapezoid weights.

mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::supremand::{eval, Jet2, Supremand, SupremandGradient, SymMatrix};

pub use io::{
    boundary_sidecar_path, load, read_csv, save, to_csv_string, write_csv, write_text,
    BoundarySidecar,
};

/// Tensor-product uniform grid in one or two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    counts: Vec<usize>,
}

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let n = counts.len();
        if !(1..=2).contains(&n) || lower.len() != n || upper.len() != n {
            return Err(Error::InvalidGrid(format!(
                "grids must be 1D or 2D with matching extents, got {n} axes"
            )));
        }
        for k in 0..n {
            if !(lower[k].is_finite() && upper[k].is_finite() && lower[k] < upper[k]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: need a < b, got [{}, {}]",
                    lower[k], upper[k]
                )));
            }
            if counts[k] < 5 {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: need at least 5 nodes, got {}",
                    counts[k]
                )));
            }
        }
        Ok(Grid {
            lower,
            upper,
            counts,
        })
    }

    pub fn new_1d(a: f64, b: f64, m: usize) -> Result<Self> {
        Self::new(vec![a], vec![b], vec![m])
    }

    pub fn new_2d(x: (f64, f64), y: (f64, f64), counts: (usize, usize)) -> Result<Self> {
        Self::new(vec![x.0, y.0], vec![x.1, y.1], vec![counts.0, counts.1])
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, axis: usize) -> usize {
        self.counts[axis]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.lower[axis]
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.upper[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.counts[axis] - 1) as f64
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index `i` along `axis`; the last node is exactly `b`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.counts[axis] {
            self.upper[axis]
        } else {
            self.lower[axis] + i as f64 * self.spacing(axis)
        }
    }

    /// Nodes are ordered with the x index running fastest.
    pub fn index(&self, idx: &[usize]) -> usize {
        match idx {
            [i] => *i,
            [i, j] => j * self.counts[0] + i,
            _ => panic!("index arity does not match grid dimension"),
        }
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        match self.dim() {
            1 => vec![node],
            _ => vec![node % self.counts[0], node / self.counts[0]],
        }
    }

    pub fn point(&self, node: usize) -> Vec<f64> {
        self.multi_index(node)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.coord(k, i))
            .collect()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.multi_index(node)
            .iter()
            .enumerate()
            .any(|(k, &i)| i == 0 || i + 1 == self.counts[k])
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.is_boundary(k)).collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.is_boundary(k)).collect()
    }

    /// Tensor-product trapezoid weights normalized to sum to one.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let axis_w = |k: usize| -> Vec<f64> {
            let m = self.counts[k];
            let mut w = vec![1.0 / (m - 1) as f64; m];
            w[0] *= 0.5;
            w[m - 1] *= 0.5;
            w
        };
        match self.dim() {
            1 => axis_w(0),
            _ => {
                let (wx, wy) = (axis_w(0), axis_w(1));
                let mut out = Vec::with_capacity(self.len());
                for &b in &wy {
                    for &a in &wx {
                        out.push(a * b);
                    }
                }
                out
            }
        }
    }

    /// Nodes whose grid distance (in index units, max over axes) to `center`
    /// is strictly less than `radius`.
    pub fn neighborhood(&self, center: usize, radius: usize) -> Vec<usize> {
        let c = self.multi_index(center);
        (0..self.len())
            .filter(|&k| {
                self.multi_index(k)
                    .iter()
                    .zip(&c)
                    .all(|(a, b)| a.abs_diff(*b) < radius)
            })
            .collect()
    }
}

/// Clamped first-order data, per face.
///
/// Faces are ordered left, right (1D and 2D), then bottom, top (2D). Face
/// arrays run along the free coordinate. `normal_slope` is the derivative
/// along the outward normal, so the left slope in 1D is `-g'(a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub trace: Vec<Vec<f64>>,
    pub normal_slope: Vec<Vec<f64>>,
}

impl BoundaryData {
    /// 1D data `g(a) = A`, `g'(a) = A'`, `g(b) = B`, `g'(b) = B'`.
    pub fn clamped_1d(a_val: f64, a_slope: f64, b_val: f64, b_slope: f64) -> Self {
        BoundaryData {
            trace: vec![vec![a_val], vec![b_val]],
            normal_slope: vec![vec![-a_slope], vec![b_slope]],
        }
    }

    pub fn zero(grid: &Grid) -> Self {
        let lens = Self::face_lengths(grid);
        BoundaryData {
            trace: lens.iter().map(|&l| vec![0.0; l]).collect(),
            normal_slope: lens.iter().map(|&l| vec![0.0; l]).collect(),
        }
    }

    /// Samples `g` and its gradient on every face.
    pub fn from_fn(
        grid: &Grid,
        g: impl Fn(&[f64]) -> f64,
        grad: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Self {
        match grid.dim() {
            1 => {
                let (a, b) = (grid.lower(0), grid.upper(0));
                Self::clamped_1d(g(&[a]), grad(&[a])[0], g(&[b]), grad(&[b])[0])
            }
            _ => {
                let (mx, my) = (grid.count(0), grid.count(1));
                let (xa, xb) = (grid.lower(0), grid.upper(0));
                let (ya, yb) = (grid.lower(1), grid.upper(1));
                let ys: Vec<f64> = (0..my).map(|j| grid.coord(1, j)).collect();
                let xs: Vec<f64> = (0..mx).map(|i| grid.coord(0, i)).collect();
                let face = |pts: Vec<[f64; 2]>, normal: [f64; 2]| -> (Vec<f64>, Vec<f64>) {
                    pts.iter()
                        .map(|q| {
                            let d = grad(q);
                            (g(q), d[0] * normal[0] + d[1] * normal[1])
                        })
                        .unzip()
                };
                let (lt, ls) = face(ys.iter().map(|&y| [xa, y]).collect(), [-1.0, 0.0]);
                let (rt, rs) = face(ys.iter().map(|&y| [xb, y]).collect(), [1.0, 0.0]);
                let (bt, bs) = face(xs.iter().map(|&x| [x, ya]).collect(), [0.0, -1.0]);
                let (tt, ts) = face(xs.iter().map(|&x| [x, yb]).collect(), [0.0, 1.0]);
                BoundaryData {
                    trace: vec![lt, rt, bt, tt],
                    normal_slope: vec![ls, rs, bs, ts],
                }
            }
        }
    }

    /// `(A, A', B, B')` for 1D data.
    pub fn as_1d(&self) -> Option<(f64, f64, f64, f64)> {
        if self.trace.len() != 2 || self.trace[0].len() != 1 {
            return None;
        }
        Some((
            self.trace[0][0],
            -self.normal_slope[0][0],
            self.trace[1][0],
            self.normal_slope[1][0],
        ))
    }

    fn face_lengths(grid: &Grid) -> Vec<usize> {
        match grid.dim() {
            1 => vec![1, 1],
            _ => vec![grid.count(1), grid.count(1), grid.count(0), grid.count(0)],
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let lens = Self::face_lengths(grid);
        if self.trace.len() != lens.len() || self.normal_slope.len() != lens.len() {
            return Err(Error::InvalidBoundary(format!(
                "expected {} faces, got {} traces and {} slopes",
                lens.len(),
                self.trace.len(),
                self.normal_slope.len()
            )));
        }
        for (f, &l) in lens.iter().enumerate() {
            if self.trace[f].len() != l || self.normal_slope[f].len() != l {
                return Err(Error::InvalidBoundary(format!(
                    "face {f}: expected {l} values"
                )));
            }
            if self.trace[f]
                .iter()
                .chain(&self.normal_slope[f])
                .any(|v| !v.is_finite())
            {
                return Err(Error::InvalidBoundary(format!("face {f}: non-finite data")));
            }
        }
        if grid.dim() == 2 {
            let (mx, my) = (grid.count(0), grid.count(1));
            let corners = [
                (self.trace[0][0], self.trace[2][0]),
                (self.trace[1][0], self.trace[2][mx - 1]),
                (self.trace[0][my - 1], self.trace[3][0]),
                (self.trace[1][my - 1], self.trace[3][mx - 1]),
            ];
            for (k, (a, b)) in corners.iter().enumerate() {
                if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidBoundary(format!(
                        "corner {k}: face traces disagree ({a} vs {b})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Trace value at a boundary node.
    pub fn trace_at(&self, grid: &Grid, node: usize) -> Option<f64> {
        let idx = grid.multi_index(node);
        match idx.as_slice() {
            [i] => {
                if *i == 0 {
                    Some(self.trace[0][0])
                } else if i + 1 == grid.count(0) {
                    Some(self.trace[1][0])
                } else {
                    None
                }
            }
            [i, j] => {
                let (mx, my) = (grid.count(0), grid.count(1));
                if *i == 0 {
                    Some(self.trace[0][*j])
                } else if i + 1 == mx {
                    Some(self.trace[1][*j])
                } else if *j == 0 {
                    Some(self.trace[2][*i])
                } else if j + 1 == my {
                    Some(self.trace[3][*i])
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

/// Nodal values on a grid together with their clamped boundary data.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunction {
    grid: Grid,
    values: Vec<f64>,
    boundary: BoundaryData,
}

impl DiscreteFunction {
    /// Boundary values must match the trace to rounding; they are then set
    /// to the trace exactly.
    pub fn new(grid: Grid, mut values: Vec<f64>, boundary: BoundaryData) -> Result<Self> {
        boundary.validate(&grid)?;
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        for node in grid.boundary_nodes() {
            let g = boundary.trace_at(&grid, node).unwrap();
            if (values[node] - g).abs() > 1e-9 * (1.0 + g.abs()) {
                return Err(Error::InvalidBoundary(format!(
                    "node {node}: value {} differs from trace {g}",
                    values[node]
                )));
            }
            values[node] = g;
        }
        Ok(DiscreteFunction {
            grid,
            values,
            boundary,
        })
    }

    /// Samples `f` at interior nodes and the trace on the boundary.
    pub fn from_fn(grid: Grid, boundary: BoundaryData, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        boundary.validate(&grid)?;
        let values = (0..grid.len())
            .map(|k| {
                boundary
                    .trace_at(&grid, k)
                    .unwrap_or_else(|| f(&grid.point(k)))
            })
            .collect();
        Self::new(grid, values, boundary)
    }

    /// Samples a smooth `f` with gradient `grad` together with its own data.
    pub fn sample(
        grid: Grid,
        f: impl Fn(&[f64]) -> f64,
        grad: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Result<Self> {
        let boundary = BoundaryData::from_fn(&grid, &f, grad);
        Self::from_fn(grid, boundary, f)
    }

    /// 1D function with boundary slopes estimated by second-order one-sided
    /// differences; used when only nodal values are available.
    pub fn with_estimated_slopes(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::InvalidArgument(
                "slope estimation is only implemented in 1D".into(),
            ));
        }
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let h = grid.spacing(0);
        let m = values.len();
        let da = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
        let db = (3.0 * values[m - 1] - 4.0 * values[m - 2] + values[m - 3]) / (2.0 * h);
        let bd = BoundaryData::clamped_1d(values[0], da, values[m - 1], db);
        Self::new(grid, values, bd)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Replaces the nodal values, keeping grid and data.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.boundary.clone())
    }

    /// Pointwise sum `self + phi`; the boundary data of `self` is kept, so
    /// `phi` must vanish with its slope on the boundary.
    pub fn add(&self, phi: &[f64]) -> Result<Self> {
        let values = self.values.iter().zip(phi).map(|(a, b)| a + b).collect();
        self.with_values(values)
    }
}

/// `sum_j w_j u[node_j] + constant`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    fn node(k: usize) -> Self {
        Affine {
            terms: vec![(k, 1.0)],
            constant: 0.0,
        }
    }

    fn shifted(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    fn combine(parts: &[(f64, &Affine)]) -> Self {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        let mut constant = 0.0;
        for (c, a) in parts {
            constant += c * a.constant;
            for &(k, w) in &a.terms {
                terms.push((k, c * w));
            }
        }
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (k, w) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == k => last.1 += w,
                _ => merged.push((k, w)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        Affine {
            terms: merged,
            constant,
        }
    }

    pub fn apply(&self, u: &[f64]) -> f64 {
        self.terms.iter().map(|&(k, w)| w * u[k]).sum::<f64>() + self.constant
    }
}

/// Difference stencils producing the jet at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStencil {
    pub eta: Affine,
    pub p: Vec<Affine>,
    /// Upper-triangle storage order of [`SymMatrix`].
    pub hess: Vec<Affine>,
}

/// Affine map from nodal values to the jet field, ghosts folded in.
#[derive(Debug, Clone)]
pub struct JetOperator {
    grid: Grid,
    points: Vec<Vec<f64>>,
    stencils: Vec<NodeStencil>,
}

impl JetOperator {
    pub fn new(grid: &Grid, boundary: &BoundaryData) -> Result<Self> {
        boundary.validate(grid)?;
        let stencils = match grid.dim() {
            1 => Self::stencils_1d(grid, boundary),
            _ => Self::stencils_2d(grid, boundary),
        };
        Ok(JetOperator {
            grid: grid.clone(),
            points: (0..grid.len()).map(|k| grid.point(k)).collect(),
            stencils,
        })
    }

    fn stencils_1d(grid: &Grid, bd: &BoundaryData) -> Vec<NodeStencil> {
        let m = grid.count(0) as isize;
        let h = grid.spacing(0);
        let ext = |i: isize| -> Affine {
            if i < 0 {
                Affine::node(1).shifted(2.0 * h * bd.normal_slope[0][0])
            } else if i >= m {
                Affine::node((m - 2) as usize).shifted(2.0 * h * bd.normal_slope[1][0])
            } else {
                Affine::node(i as usize)
            }
        };
        (0..m)
            .map(|i| {
                let (l, c, r) = (ext(i - 1), ext(i), ext(i + 1));
                NodeStencil {
                    eta: c.clone(),
                    p: vec![Affine::combine(&[(0.5 / h, &r), (-0.5 / h, &l)])],
                    hess: vec![Affine::combine(&[
                        (1.0 / (h * h), &l),
                        (-2.0 / (h * h), &c),
                        (1.0 / (h * h), &r),
                    ])],
                }
            })
            .collect()
    }

    fn stencils_2d(grid: &Grid, bd: &BoundaryData) -> Vec<NodeStencil> {
        let (mx, my) = (grid.count(0) as isize, grid.count(1) as isize);
        let (hx, hy) = (grid.spacing(0), grid.spacing(1));
        // outward slope along a face, linearly extrapolated one step past its ends
        let slope = |face: usize, k: isize, len: isize| -> f64 {
            let s = &bd.normal_slope[face];
            if k < 0 {
                2.0 * s[0] - s[1]
            } else if k >= len {
                let l = len as usize;
                2.0 * s[l - 1] - s[l - 2]
            } else {
                s[k as usize]
            }
        };
        fn ext(
            i: isize,
            j: isize,
            dims: (isize, isize, f64, f64),
            slope: &dyn Fn(usize, isize, isize) -> f64,
        ) -> Affine {
            let (mx, my, hx, hy) = dims;
            if i < 0 {
                ext(1, j, dims, slope).shifted(2.0 * hx * slope(0, j, my))
            } else if i >= mx {
                ext(mx - 2, j, dims, slope).shifted(2.0 * hx * slope(1, j, my))
            } else if j < 0 {
                ext(i, 1, dims, slope).shifted(2.0 * hy * slope(2, i, mx))
            } else if j >= my {
                ext(i, my - 2, dims, slope).shifted(2.0 * hy * slope(3, i, mx))
            } else {
                Affine::node((j * mx + i) as usize)
            }
        }
        let dims = (mx, my, hx, hy);
        let e = |i: isize, j: isize| ext(i, j, dims, &slope);
        let mut out = Vec::with_capacity((mx * my) as usize);
        for j in 0..my {
            for i in 0..mx {
                let c = e(i, j);
                let (l, r, d, u) = (e(i - 1, j), e(i + 1, j), e(i, j - 1), e(i, j + 1));
                let (ru, rd, lu, ld) = (
                    e(i + 1, j + 1),
                    e(i + 1, j - 1),
                    e(i - 1, j + 1),
                    e(i - 1, j - 1),
                );
                let px = Affine::combine(&[(0.5 / hx, &r), (-0.5 / hx, &l)]);
                let py = Affine::combine(&[(0.5 / hy, &u), (-0.5 / hy, &d)]);
                let ix2 = 1.0 / (hx * hx);
                let iy2 = 1.0 / (hy * hy);
                let xx = Affine::combine(&[(ix2, &l), (-2.0 * ix2, &c), (ix2, &r)]);
                let yy = Affine::combine(&[(iy2, &d), (-2.0 * iy2, &c), (iy2, &u)]);
                let q = 0.25 / (hx * hy);
                let xy = Affine::combine(&[(q, &ru), (-q, &rd), (-q, &lu), (q, &ld)]);
                out.push(NodeStencil {
                    eta: c,
                    p: vec![px, py],
                    hess: vec![xx, xy, yy],
                });
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.stencils.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stencils.is_empty()
    }

    pub fn stencil(&self, node: usize) -> &NodeStencil {
        &self.stencils[node]
    }

    pub fn jet(&self, node: usize, u: &[f64]) -> Jet2 {
        let s = &self.stencils[node];
        let n = self.grid.dim();
        Jet2 {
            x: self.points[node].clone(),
            eta: s.eta.apply(u),
            p: s.p.iter().map(|a| a.apply(u)).collect(),
            hess: SymMatrix::from_upper(n, s.hess.iter().map(|a| a.apply(u)).collect()),
        }
    }

    pub fn jets(&self, u: &[f64]) -> Vec<Jet2> {
        (0..self.stencils.len()).map(|k| self.jet(k, u)).collect()
    }

    /// `out[k] += scale * d H(jet(node)) / d u[k]` given the partials at the
    /// node's jet.
    pub fn accumulate_transpose(
        &self,
        node: usize,
        g: &SupremandGradient,
        scale: f64,
        out: &mut [f64],
    ) {
        let s = &self.stencils[node];
        let n = self.grid.dim();
        let mut add = |a: &Affine, c: f64| {
            if c != 0.0 {
                let c = c * scale;
                for &(k, w) in &a.terms {
                    out[k] += c * w;
                }
            }
        };
        add(&s.eta, g.d_eta);
        for (a, c) in s.p.iter().zip(&g.d_p) {
            add(a, *c);
        }
        for (idx, (i, j)) in SymMatrix::entry_indices(n).into_iter().enumerate() {
            let w = if i == j { 1.0 } else { 2.0 };
            add(&s.hess[idx], w * g.d_hess.get(i, j));
        }
    }
}

/// Jets at every node.
pub fn jet_field(u: &DiscreteFunction) -> Result<Vec<(usize, Jet2)>> {
    let op = JetOperator::new(&u.grid, &u.boundary)?;
    Ok(op.jets(&u.values).into_iter().enumerate().collect())
}

/// `H(J^2 u)` at every node.
pub fn energy_field(h: &dyn Supremand, u: &DiscreteFunction) -> Result<Vec<f64>> {
    jet_field(u)?.iter().map(|(_, jet)| eval(h, jet)).collect()
}

/// Discrete `E_inf(u)`: the max of `H(J^2 u)` over all nodes.
pub fn sup_energy(h: &dyn Supremand, u: &DiscreteFunction) -> Result<f64> {
    Ok(energy_field(h, u)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Max of `H(J^2 u)` over the given nodes.
pub fn sup_energy_on(h: &dyn Supremand, u: &DiscreteFunction, nodes: &[usize]) -> Result<f64> {
    let f = energy_field(h, u)?;
    Ok(nodes
        .iter()
        .map(|&k| f[k])
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Discrete `E_p(u) = (mean_w (M + H)^p)^{1/p} - M` with trapezoid weights.
pub fn lp_energy(h: &dyn Supremand, u: &DiscreteFunction, p: f64, shift: f64) -> Result<f64> {
    let field = energy_field(h, u)?;
    power_mean(&field, &u.grid.trapezoid_weights(), p, shift)
}

/// Shifted weighted power mean `(sum_k w_k (M + f_k)^p)^{1/p} - M`, with
/// weights summing to one. `p = inf` gives the max.
pub fn power_mean(field: &[f64], weights: &[f64], p: f64, shift: f64) -> Result<f64> {
    if field.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: field.len(),
            got: weights.len(),
        });
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "power mean needs p >= 1, got {p}"
        )));
    }
    let mut top = 0.0_f64;
    for (k, f) in field.iter().enumerate() {
        let s = shift + f;
        if !(s > 0.0) {
            return Err(Error::ShiftViolation { node: k, value: s });
        }
        top = top.max(s);
    }
    if p.is_infinite() {
        return Ok(top - shift);
    }
    let mean: f64 = field
        .iter()
        .zip(weights)
        .map(|(f, w)| w * ((shift + f) / top).powf(p))
        .sum();
    Ok(top * mean.powf(1.0 / p) - shift)
}

/// Interior nodes minus an exclusion set.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorMask {
    pub nodes: Vec<usize>,
    /// Set when nothing survives the exclusion.
    pub empty: bool,
}

pub fn interior_mask(u: &DiscreteFunction, exclusion: &[usize]) -> InteriorMask {
    let mut excluded = vec![false; u.grid.len()];
    for &k in exclusion {
        if k < excluded.len() {
            excluded[k] = true;
        }
    }
    let nodes: Vec<usize> = u
        .grid
        .interior_nodes()
        .into_iter()
        .filter(|&k| !excluded[k])
        .collect();
    InteriorMask {
        empty: nodes.is_empty(),
        nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::supremand::{PureHessianNorm, SquaredHessian};

    fn quad_1d(m: usize) -> DiscreteFunction {
        DiscreteFunction::sample(
            Grid::new_1d(0.0, 1.0, m).unwrap(),
            |x| x[0] * x[0],
            |x| vec![2.0 * x[0]],
        )
        .unwrap()
    }

    #[test]
    fn quadratic_hessian_is_exact_everywhere() {
        for m in [5, 11, 64] {
            for (_, jet) in jet_field(&quad_1d(m)).unwrap() {
                assert!((jet.hess.get(0, 0) - 2.0).abs() < 1e-9 * (m * m) as f64);
                assert!((jet.p[0] - 2.0 * jet.x[0]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn quadratic_2d_including_corners() {
        let grid = Grid::new_2d((0.0, 1.0), (-1.0, 0.5), (7, 9)).unwrap();
        let f = |x: &[f64]| {
            1.5 * x[0] * x[0] - 0.7 * x[0] * x[1] + 0.25 * x[1] * x[1] + x[0] - 2.0 * x[1]
        };
        let g = |x: &[f64]| {
            vec![
                3.0 * x[0] - 0.7 * x[1] + 1.0,
                -0.7 * x[0] + 0.5 * x[1] - 2.0,
            ]
        };
        let u = DiscreteFunction::sample(grid, f, g).unwrap();
        for (_, jet) in jet_field(&u).unwrap() {
            assert!((jet.hess.get(0, 0) - 3.0).abs() < 1e-9);
            assert!((jet.hess.get(0, 1) + 0.7).abs() < 1e-9);
            assert!((jet.hess.get(1, 1) - 0.5).abs() < 1e-9);
            let d = g(&jet.x);
            assert!((jet.p[0] - d[0]).abs() < 1e-10 && (jet.p[1] - d[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_function_has_zero_jets() {
        let grid = Grid::new_1d(0.0, 1.0, 9).unwrap();
        let u =
            DiscreteFunction::from_fn(grid.clone(), BoundaryData::zero(&grid), |_| 0.0).unwrap();
        for (_, jet) in jet_field(&u).unwrap() {
            assert_eq!((jet.eta, jet.p[0], jet.hess.get(0, 0)), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn sine_curvature_at_midpoint() {
        let pi = std::f64::consts::PI;
        let u = DiscreteFunction::sample(
            Grid::new_1d(0.0, 1.0, 101).unwrap(),
            |x| (pi * x[0]).sin(),
            |x| vec![pi * (pi * x[0]).cos()],
        )
        .unwrap();
        let jets = jet_field(&u).unwrap();
        assert!((jets[50].1.hess.get(0, 0) + pi * pi).abs() < 1e-3);
    }

    #[test]
    fn energies_on_quadratic() {
        let u = quad_1d(21);
        let h = PureHessianNorm::new(1);
        assert!((sup_energy(&h, &u).unwrap() - 2.0).abs() < 1e-9);
        for p in [1.0, 7.0, 300.0] {
            assert!((lp_energy(&h, &u, p, 1.0).unwrap() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn power_mean_arithmetic() {
        let w = [0.5, 0.5];
        assert!((power_mean(&[0.0, 2.0], &w, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let v = power_mean(&[0.0, 2.0], &w, 10.0, 1.0).unwrap();
        assert!((v - 1.799_103_714_872_99).abs() < 1e-12, "{v}");
        assert!(matches!(
            power_mean(&[0.0, -2.0], &w, 2.0, 1.0),
            Err(Error::ShiftViolation { node: 1, .. })
        ));
    }

    #[test]
    fn interior_mask_counts() {
        let grid = Grid::new_1d(0.0, 1.0, 11).unwrap();
        let u =
            DiscreteFunction::from_fn(grid.clone(), BoundaryData::zero(&grid), |_| 0.0).unwrap();
        assert_eq!(interior_mask(&u, &[]).nodes.len(), 9);
        let all: Vec<usize> = (0..11).collect();
        assert!(interior_mask(&u, &all).empty);
        assert_eq!(interior_mask(&u, &grid.neighborhood(5, 2)).nodes.len(), 6);
    }

    #[test]
    fn transpose_matches_finite_differences() {
        let grid = Grid::new_2d((0.0, 1.0), (0.0, 1.0), (6, 5)).unwrap();
        let u = DiscreteFunction::sample(
            grid.clone(),
            |x| (x[0] * 2.0).sin() * x[1],
            |x| vec![2.0 * (x[0] * 2.0).cos() * x[1], (x[0] * 2.0).sin()],
        )
        .unwrap();
        let op = JetOperator::new(&grid, u.boundary()).unwrap();
        let h = SquaredHessian::new(2);
        let node = 7;
        let g = crate::supremand::partials(&h, &op.jet(node, u.values())).unwrap();
        let mut grad = vec![0.0; grid.len()];
        op.accumulate_transpose(node, &g, 1.0, &mut grad);
        let mut v = u.values().to_vec();
        for k in 0..grid.len() {
            let e = 1e-6;
            v[k] += e;
            let a = eval(&h, &op.jet(node, &v)).unwrap();
            v[k] -= 2.0 * e;
            let b = eval(&h, &op.jet(node, &v)).unwrap();
            v[k] += e;
            let fd = (a - b) / (2.0 * e);
            assert!(
                (fd - grad[k]).abs() < 1e-4 * (1.0 + fd.abs()),
                "{k}: {fd} vs {}",
                grad[k]
            );
        }
    }
}
