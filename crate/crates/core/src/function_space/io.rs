//! CSV export of nodal values (`x[,y],u`, x fastest) with a JSON sidecar for
//! the boundary data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BoundaryData, DiscreteFunction, Grid};
use crate::error::{Error, Result};

/// Sidecar contents: the grid and the clamped data, per face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySidecar {
    pub grid: Grid,
    pub trace: Vec<Vec<f64>>,
    pub normal_slope: Vec<Vec<f64>>,
}

pub fn to_csv_string(u: &DiscreteFunction) -> String {
    let grid = u.grid();
    let mut out = String::new();
    out.push_str(if grid.dim() == 1 { "x,u\n" } else { "x,y,u\n" });
    for (k, v) in u.values().iter().enumerate() {
        for c in grid.point(k) {
            let _ = write!(out, "{c},");
        }
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn write_csv(u: &DiscreteFunction, path: &Path) -> Result<()> {
    write_text(path, &to_csv_string(u))
}

/// Writes `contents`, creating missing parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Reads a solution CSV, recovering the grid from the node coordinates.
pub fn read_csv(path: &Path) -> Result<(Grid, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text).map_err(|reason| Error::Parse {
        input: path.display().to_string(),
        reason,
    })
}

fn parse_csv(text: &str) -> std::result::Result<(Grid, Vec<f64>), String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty file")?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let dim = match cols.as_slice() {
        ["x", "u"] => 1,
        ["x", "y", "u"] => 2,
        _ => return Err(format!("unexpected header `{header}`")),
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in lines.enumerate() {
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| format!("line {}: {e}", ln + 2))?;
        if row.len() != dim + 1 {
            return Err(format!("line {}: expected {} fields", ln + 2, dim + 1));
        }
        rows.push(row);
    }
    let axis = |k: usize| -> Vec<f64> {
        let mut v: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let axes: Vec<Vec<f64>> = (0..dim).map(axis).collect();
    let grid = Grid::new(
        axes.iter().map(|a| a[0]).collect(),
        axes.iter().map(|a| *a.last().unwrap()).collect(),
        axes.iter().map(|a| a.len()).collect(),
    )
    .map_err(|e| e.to_string())?;
    if rows.len() != grid.len() {
        return Err(format!(
            "{} rows for a {:?} grid",
            rows.len(),
            grid.counts()
        ));
    }
    let mut values = vec![0.0; grid.len()];
    for (k, row) in rows.iter().enumerate() {
        let p = grid.point(k);
        let tol = 1e-9 * grid.spacing(0);
        if p.iter().zip(row).any(|(a, b)| (a - b).abs() > tol) {
            return Err(format!(
                "row {} is not the expected uniform grid node",
                k + 2
            ));
        }
        values[k] = row[dim];
    }
    Ok((grid, values))
}

/// `foo.csv` maps to `foo.boundary.json`.
pub fn boundary_sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("boundary.json")
}

/// Writes the CSV and its boundary sidecar.
pub fn save(u: &DiscreteFunction, csv: &Path) -> Result<()> {
    write_csv(u, csv)?;
    let side = BoundarySidecar {
        grid: u.grid().clone(),
        trace: u.boundary().trace.clone(),
        normal_slope: u.boundary().normal_slope.clone(),
    };
    write_text(
        &boundary_sidecar_path(csv),
        &serde_json::to_string_pretty(&side)?,
    )?;
    Ok(())
}

/// Loads a CSV; uses the sidecar when present, otherwise estimates 1D slopes.
pub fn load(csv: &Path) -> Result<DiscreteFunction> {
    let (grid, values) = read_csv(csv)?;
    let side_path = boundary_sidecar_path(csv);
    if side_path.exists() {
        let side: BoundarySidecar = serde_json::from_str(&fs::read_to_string(&side_path)?)?;
        if side.grid != grid {
            return Err(Error::InvalidBoundary(format!(
                "sidecar grid {:?} does not match CSV grid {:?}",
                side.grid.counts(),
                grid.counts()
            )));
        }
        let bd = BoundaryData {
            trace: side.trace,
            normal_slope: side.normal_slope,
        };
        DiscreteFunction::new(grid, values, bd)
    } else {
        DiscreteFunction::with_estimated_slopes(grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join(format!("linfvar-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let grid = Grid::new_2d((0.0, 1.0), (0.0, 0.3), (6, 5)).unwrap();
        let u = DiscreteFunction::sample(
            grid,
            |x| (x[0] * 3.1).sin() + x[1] / 7.0,
            |x| vec![3.1 * (x[0] * 3.1).cos(), 1.0 / 7.0],
        )
        .unwrap();
        let path = dir.join("u.csv");
        save(&u, &path).unwrap();
        let back = load(&path).unwrap();
        assert_eq!(back, u);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_bad_header() {
        assert!(parse_csv("a,b\n0,1\n").is_err());
    }
}
