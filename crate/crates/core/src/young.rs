//! Empirical diffuse third derivatives from difference quotients of the
//! Hessian field, and the support test for the expanded Aronsson operator.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aronsson::{inner_field, ThirdOrderTensor};
use crate::error::{Error, Result};
use crate::function_space::{jet_field, DiscreteFunction, Grid};
use crate::supremand::{partials, Jet2, Supremand, SymMatrix};

/// Default step multiples `8h, 4h, 2h, h`.
pub const DEFAULT_STEPS: [usize; 4] = [8, 4, 2, 1];

/// When a quotient counts as mass escaping to infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EscapeRule {
    /// `|Z| > threshold`.
    Absolute(f64),
    /// `|Z| * step > fraction * max |X|`: the Hessian field jumps by a fixed
    /// share of its size across the stencil.
    Relative(f64),
}

impl Default for EscapeRule {
    fn default() -> Self {
        EscapeRule::Relative(0.5)
    }
}

impl EscapeRule {
    /// The spacing-based absolute rule `|Z| > 1/(2h)`.
    pub fn inverse_spacing(grid: &Grid) -> Self {
        let h = (0..grid.dim())
            .map(|a| grid.spacing(a))
            .fold(f64::INFINITY, f64::min);
        EscapeRule::Absolute(0.5 / h)
    }

    fn escapes(&self, z: &ThirdOrderTensor, step: f64, hess_scale: f64) -> bool {
        match *self {
            EscapeRule::Absolute(t) => z.max_abs() > t,
            EscapeRule::Relative(f) => z.max_abs() * step > f * hess_scale,
        }
    }
}

struct HessField {
    jets: Vec<Jet2>,
    hess: Vec<SymMatrix>,
    scale: f64,
}

fn hess_field(u: &DiscreteFunction) -> Result<HessField> {
    let jets: Vec<Jet2> = jet_field(u)?.into_iter().map(|(_, j)| j).collect();
    let hess: Vec<SymMatrix> = jets.iter().map(|j| j.hess.clone()).collect();
    let scale = hess.iter().map(|x| x.max_abs()).fold(0.0, f64::max);
    Ok(HessField { jets, hess, scale })
}

fn quotients_from(
    grid: &Grid,
    hess: &[SymMatrix],
    node: usize,
    steps: &[usize],
) -> Result<Vec<(usize, ThirdOrderTensor)>> {
    if node >= grid.len() {
        return Err(Error::InvalidArgument(format!(
            "node {node} is outside the grid"
        )));
    }
    let idx = grid.multi_index(node);
    let bad: Vec<usize> = steps
        .iter()
        .copied()
        .filter(|&m| m == 0 || (0..grid.dim()).any(|a| idx[a] + m >= grid.count(a)))
        .collect();
    if !bad.is_empty() {
        return Err(Error::StencilOutOfDomain { steps: bad });
    }
    Ok(steps
        .iter()
        .map(|&m| {
            let d: Vec<SymMatrix> = (0..grid.dim())
                .map(|a| {
                    let mut j = idx.clone();
                    j[a] += m;
                    let t = m as f64 * grid.spacing(a);
                    hess[grid.index(&j)].lerp(1.0 / t, &hess[node], -1.0 / t)
                })
                .collect();
            (m, ThirdOrderTensor::from_directional(&d))
        })
        .collect())
}

/// Forward quotients `(D^2u(x + m h e_i) - D^2u(x)) / (m h)` for each step
/// multiple `m`, symmetrized over the three indices.
pub fn difference_quotients(
    u: &DiscreteFunction,
    node: usize,
    steps: &[usize],
) -> Result<Vec<ThirdOrderTensor>> {
    let f = hess_field(u)?;
    Ok(quotients_from(u.grid(), &f.hess, node, steps)?
        .into_iter()
        .map(|(_, z)| z)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub z: ThirdOrderTensor,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub atoms: Vec<Atom>,
    pub escaped_mass: f64,
}

impl EmpiricalMeasure {
    pub fn finite_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }
}

fn cluster(
    samples: &[(usize, ThirdOrderTensor)],
    rule: EscapeRule,
    spacing: f64,
    hess_scale: f64,
) -> EmpiricalMeasure {
    let w = 1.0 / samples.len().max(1) as f64;
    let mut atoms: Vec<Atom> = Vec::new();
    let mut escaped = 0usize;
    for (m, z) in samples {
        if rule.escapes(z, *m as f64 * spacing, hess_scale) {
            escaped += 1;
            continue;
        }
        match atoms
            .iter_mut()
            .find(|a| a.z.distance(z) <= 1e-3 * (1.0 + a.z.max_abs()))
        {
            Some(a) => {
                let total = a.weight + w;
                a.z = a.z.lerp(a.weight / total, z, w / total);
                a.weight = total;
            }
            None => atoms.push(Atom {
                z: z.clone(),
                weight: w,
            }),
        }
    }
    // exact complement so the masses add to one
    let finite: f64 = atoms.iter().map(|a| a.weight).sum();
    EmpiricalMeasure {
        atoms,
        escaped_mass: if escaped == samples.len() {
            1.0
        } else {
            1.0 - finite
        },
    }
}

fn min_spacing(grid: &Grid) -> f64 {
    (0..grid.dim())
        .map(|a| grid.spacing(a))
        .fold(f64::INFINITY, f64::min)
}

/// Clusters the quotients at `node` into atoms (merge radius
/// `1e-3 (1 + |Z|)`), moving escaping samples to the point at infinity.
pub fn empirical_diffuse(
    u: &DiscreteFunction,
    node: usize,
    steps: &[usize],
    rule: EscapeRule,
) -> Result<EmpiricalMeasure> {
    let f = hess_field(u)?;
    let q = quotients_from(u.grid(), &f.hess, node, steps)?;
    Ok(cluster(&q, rule, min_spacing(u.grid()), f.scale))
}

/// Per-node outcome of the support test.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub tol: f64,
    /// Nodes where the stencil fits and the supremand is differentiable.
    pub nodes: Vec<usize>,
    /// Sup of `|A(J^2u, Z)|` over finite atoms; 0 when all mass escaped.
    pub sup_finite: Vec<f64>,
    pub escaped_mass: Vec<f64>,
    pub pass: Vec<bool>,
    /// Sup over finite atoms of `|H_X(J^2u) - A / L^2|`-type defects of the
    /// factorization `A = H_X : L (x) L`.
    pub factorization_defect: f64,
    /// Sup over finite atoms of `|L(J^2u, Z)|`.
    pub lscr: Vec<f64>,
    /// Interior nodes dropped because the supremand was not differentiable.
    pub failed: Vec<usize>,
}

impl CriterionReport {
    pub fn pass_fraction(&self) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        self.pass.iter().filter(|&&p| p).count() as f64 / self.nodes.len() as f64
    }

    pub fn failing_nodes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .zip(&self.pass)
            .filter(|(_, &p)| !p)
            .map(|(&k, _)| k)
            .collect()
    }

    pub fn to_csv_string(&self, grid: &Grid) -> String {
        let mut s = String::from(if grid.dim() == 1 { "x," } else { "x,y," });
        s.push_str("sup_finite,escaped_mass,pass\n");
        for (i, &k) in self.nodes.iter().enumerate() {
            for c in grid.point(k) {
                write!(s, "{c},").unwrap();
            }
            writeln!(
                s,
                "{},{},{}",
                self.sup_finite[i],
                self.escaped_mass[i],
                u8::from(self.pass[i])
            )
            .unwrap();
        }
        s
    }

    pub fn write_csv(&self, grid: &Grid, path: &Path) -> Result<()> {
        crate::function_space::write_text(path, &self.to_csv_string(grid))
    }
}

/// Interior nodes whose forward stencils fit for every step multiple.
pub fn admissible_nodes(grid: &Grid, steps: &[usize]) -> Vec<usize> {
    let reach = steps.iter().copied().max().unwrap_or(0);
    grid.interior_nodes()
        .into_iter()
        .filter(|&k| {
            grid.multi_index(k)
                .iter()
                .enumerate()
                .all(|(a, &i)| i + reach < grid.count(a))
        })
        .collect()
}

/// Evaluates the expanded operator over the finite atoms of the empirical
/// measure at every admissible node. Escaped mass is reported but does not
/// fail a node.
pub fn dsolution_criterion(
    h: &dyn Supremand,
    u: &DiscreteFunction,
    steps: &[usize],
    rule: EscapeRule,
    tol: f64,
) -> Result<CriterionReport> {
    if h.dimension() != u.grid().dim() {
        return Err(Error::DimensionMismatch {
            expected: u.grid().dim(),
            got: h.dimension(),
        });
    }
    let grid = u.grid();
    let f = hess_field(u)?;
    let spacing = min_spacing(grid);
    let mut rep = CriterionReport {
        tol,
        nodes: Vec::new(),
        sup_finite: Vec::new(),
        escaped_mass: Vec::new(),
        pass: Vec::new(),
        factorization_defect: 0.0,
        lscr: Vec::new(),
        failed: Vec::new(),
    };
    for k in admissible_nodes(grid, steps) {
        let jet = &f.jets[k];
        let g = match partials(h, jet) {
            Ok(g) => g,
            Err(e) => {
                log::debug!("node {k} skipped: {e}");
                rep.failed.push(k);
                continue;
            }
        };
        let measure = cluster(
            &quotients_from(grid, &f.hess, k, steps)?,
            rule,
            spacing,
            f.scale,
        );
        let (mut sup, mut lsup) = (0.0_f64, 0.0_f64);
        for atom in &measure.atoms {
            let l = inner_field(&g, jet, &atom.z);
            // full double sum, independent of the quadratic-form helper
            let mut a = 0.0;
            for i in 0..l.len() {
                for j in 0..l.len() {
                    a += g.d_hess.get(i, j) * l[i] * l[j];
                }
            }
            let lnorm = l.iter().map(|v| v * v).sum::<f64>().sqrt();
            let defect = if l.len() == 1 {
                (a - g.d_hess.get(0, 0) * l[0] * l[0]).abs() / (1.0 + a.abs())
            } else {
                let bound = g.d_hess.frobenius_norm() * lnorm * lnorm;
                (a.abs() - bound).max(0.0) / (1.0 + a.abs())
            };
            rep.factorization_defect = rep.factorization_defect.max(defect);
            sup = sup.max(a.abs());
            lsup = lsup.max(lnorm);
        }
        rep.nodes.push(k);
        rep.pass.push(sup <= tol);
        rep.sup_finite.push(sup);
        rep.escaped_mass.push(measure.escaped_mass);
        rep.lscr.push(lsup);
    }
    Ok(rep)
}

/// Per admissible node, the sup over finite atoms of the inner vector
/// `|H_x + H_eta Du + H_p D^2u + H_X : Z|`.
pub fn lscr_residual(
    h: &dyn Supremand,
    u: &DiscreteFunction,
    steps: &[usize],
    rule: EscapeRule,
) -> Result<Vec<(usize, f64)>> {
    let rep = dsolution_criterion(h, u, steps, rule, f64::INFINITY)?;
    Ok(rep.nodes.into_iter().zip(rep.lscr).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::supremand::SquaredHessian;

    fn sampled(m: usize, f: fn(f64) -> f64, df: fn(f64) -> f64) -> DiscreteFunction {
        let g = Grid::new_1d(0.0, 1.0, m).unwrap();
        DiscreteFunction::sample(g, move |x| f(x[0]), move |x| vec![df(x[0])]).unwrap()
    }

    #[test]
    fn polynomial_quotients() {
        let q = sampled(41, |x| x * x, |x| 2.0 * x);
        for z in difference_quotients(&q, 10, &DEFAULT_STEPS).unwrap() {
            assert!(z.max_abs() < 1e-9);
        }
        let c = sampled(41, |x| x.powi(3), |x| 3.0 * x * x);
        for z in difference_quotients(&c, 10, &DEFAULT_STEPS).unwrap() {
            assert!((z.get(0, 0, 0) - 6.0).abs() < 1e-8);
        }
        let m = empirical_diffuse(&c, 10, &DEFAULT_STEPS, EscapeRule::default()).unwrap();
        assert_eq!(m.atoms.len(), 1);
        assert!((m.atoms[0].z.get(0, 0, 0) - 6.0).abs() < 1e-8 && m.escaped_mass == 0.0);
        assert!(matches!(
            difference_quotients(&c, 35, &DEFAULT_STEPS),
            Err(Error::StencilOutOfDomain { steps }) if steps == vec![8]
        ));
    }

    #[test]
    fn step_hessian_escapes() {
        let zig = |m: usize| {
            let g = Grid::new_1d(0.0, 1.0, m).unwrap();
            let f = |x: f64| {
                if x < 0.5 {
                    0.5 * x * x
                } else {
                    0.125 + 0.5 * (x - 0.5) - 0.5 * (x - 0.5).powi(2)
                }
            };
            let v = (0..m).map(|i| f(g.coord(0, i))).collect();
            DiscreteFunction::with_estimated_slopes(g, v).unwrap()
        };
        let u = zig(101);
        let q = difference_quotients(&u, 49, &[1]).unwrap();
        assert!((q[0].get(0, 0, 0) * 0.01 + 1.0).abs() < 0.2);
        let mut last = 0.0;
        for t in [1e6, 1e3, 300.0, 100.0, 10.0] {
            let m = empirical_diffuse(&u, 45, &DEFAULT_STEPS, EscapeRule::Absolute(t)).unwrap();
            assert!(m.escaped_mass >= last);
            assert!((m.finite_mass() + m.escaped_mass - 1.0).abs() < 1e-12);
            last = m.escaped_mass;
        }
        let mut last = 0.0;
        for m in [1601, 3201, 6401, 12801] {
            let e = empirical_diffuse(&zig(m), m / 2, &DEFAULT_STEPS, EscapeRule::Absolute(1e3))
                .unwrap()
                .escaped_mass;
            assert!(e >= last, "{m}: {e}");
            last = e;
        }
        assert_eq!(last, 1.0);
    }

    #[test]
    fn quadratic_passes_cubic_fails() {
        let q = sampled(41, |x| x * x - x, |x| 2.0 * x - 1.0);
        let r = dsolution_criterion(
            &SquaredHessian::new(1),
            &q,
            &DEFAULT_STEPS,
            EscapeRule::default(),
            1e-6,
        )
        .unwrap();
        assert_eq!(r.pass_fraction(), 1.0);
        assert!(r.sup_finite.iter().all(|&s| s < 1e-12));
        let c = sampled(41, |x| x.powi(3), |x| 3.0 * x * x);
        let r = dsolution_criterion(
            &SquaredHessian::new(1),
            &c,
            &DEFAULT_STEPS,
            EscapeRule::default(),
            1e-6,
        )
        .unwrap();
        assert!(r.pass_fraction() < 0.1);
        assert!(r.factorization_defect < 1e-12);
        assert!(r.lscr.iter().skip(2).all(|&l| l > 1e-3));
        let csv = r.to_csv_string(c.grid());
        assert!(csv.starts_with("x,sup_finite,escaped_mass,pass\n"));
    }
}
