//! JSON experiment files for `solve`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use linfvar_core::function_space::{BoundaryData, Grid};
use linfvar_core::lp_solver::{default_schedule, SolverOptions};
use linfvar_core::supremand::SupremandSpec;
use linfvar_core::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lower: vec![0.0],
            upper: vec![1.0],
            counts: vec![101],
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.lower.clone(), self.upper.clone(), self.counts.clone())
    }
}

/// Boundary data for the run. Polynomial terms are `[coefficient, power of
/// x, power of y]`; the data is the trace and normal slope of that
/// polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundarySpec {
    Zero,
    Clamped { values: [f64; 4] },
    Polynomial { terms: Vec<[f64; 3]> },
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec::Clamped {
            values: [0.0, 0.0, 1.0, 0.0],
        }
    }
}

fn monomial(c: f64, px: f64, py: f64, x: f64, y: f64) -> f64 {
    c * x.powf(px) * y.powf(py)
}

impl BoundarySpec {
    pub fn build(&self, grid: &Grid) -> Result<BoundaryData> {
        let bd = match self {
            BoundarySpec::Zero => BoundaryData::zero(grid),
            BoundarySpec::Clamped {
                values: [va, sa, vb, sb],
            } => BoundaryData::clamped_1d(*va, *sa, *vb, *sb),
            BoundarySpec::Polynomial { terms } => {
                let terms = terms.clone();
                let t2 = terms.clone();
                let at = |q: &[f64]| (q[0], q.get(1).copied().unwrap_or(1.0));
                BoundaryData::from_fn(
                    grid,
                    move |q| {
                        let (x, y) = at(q);
                        terms
                            .iter()
                            .map(|&[c, px, py]| monomial(c, px, py, x, y))
                            .sum()
                    },
                    move |q| {
                        let (x, y) = at(q);
                        let dx = t2
                            .iter()
                            .filter(|t| t[1] != 0.0)
                            .map(|&[c, px, py]| monomial(c * px, px - 1.0, py, x, y))
                            .sum();
                        let dy = t2
                            .iter()
                            .filter(|t| t[2] != 0.0)
                            .map(|&[c, px, py]| monomial(c * py, px, py - 1.0, x, y))
                            .sum();
                        vec![dx, dy]
                    },
                )
            }
        };
        bd.validate(grid)?;
        Ok(bd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub supremand: String,
    pub grid: GridSpec,
    pub boundary: BoundarySpec,
    pub solver: SolverOptions,
    /// Increasing exponents; the default doubles from 4 to 1024.
    pub schedule: Option<Vec<f64>>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            supremand: "smoothed-hessian-norm:eps=0.001".into(),
            grid: GridSpec::default(),
            boundary: BoundarySpec::default(),
            solver: SolverOptions::default(),
            schedule: None,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Reads and validates a config. Errors name the file, and the line and
    /// column or the offending field.
    pub fn load(path: &Path) -> std::result::Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.validate()
            .map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        self.supremand
            .parse::<SupremandSpec>()
            .and_then(|s| s.build(self.grid.counts.len().max(1)))
            .map_err(|e| format!("field `supremand`: {e}"))?;
        let grid = self
            .grid
            .build()
            .map_err(|e| format!("field `grid`: {e}"))?;
        self.boundary
            .build(&grid)
            .map_err(|e| format!("field `boundary`: {e}"))?;
        if let Some(s) = &self.schedule {
            if s.is_empty() || s.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(format!(
                    "field `schedule`: must be nonempty and increasing, got {s:?}"
                ));
            }
        }
        Ok(())
    }

    pub fn schedule(&self) -> Vec<f64> {
        self.schedule.clone().unwrap_or_else(default_schedule)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_named() {
        let e = serde_json::from_str::<ExperimentConfig>(
            r#"{"supremand": "squared-hessian", "gird": {}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("gird"));
    }

    #[test]
    fn polynomial_boundary_matches_clamped() {
        let grid = GridSpec::default().build().unwrap();
        let poly = BoundarySpec::Polynomial {
            terms: vec![[1.0, 2.0, 0.0], [0.5, 0.0, 0.0]],
        };
        let bd = poly.build(&grid).unwrap();
        assert_eq!(bd.as_1d(), Some((0.5, 0.0, 1.5, 2.0)));
    }

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }
}
