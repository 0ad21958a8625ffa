use crate::error::{Error, Result};
use crate::function_space::{BoundaryData, DiscreteFunction, Grid};

/// Monomial coefficients of `zeta(t) = t^3 (1 - t)^2 / 2`, degree 0 to 5.
///
/// The unique quintic with `zeta(0) = zeta'(0) = zeta''(0) = 0`,
/// `zeta(1) = zeta'(1) = 0` and `zeta''(1) = 1`.
pub const ZETA: [f64; 6] = [0.0, 0.0, 0.0, 0.5, -1.0, 0.5];

/// `(zeta, zeta', zeta'')` at `t`.
pub fn zeta(t: f64) -> (f64, f64, f64) {
    let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
    let mut pow = 1.0;
    for k in 0..ZETA.len() {
        // pow = t^k
        v += ZETA[k] * pow;
        if k + 1 < ZETA.len() {
            d1 += (k + 1) as f64 * ZETA[k + 1] * pow;
        }
        if k + 2 < ZETA.len() {
            d2 += ((k + 2) * (k + 1)) as f64 * ZETA[k + 2] * pow;
        }
        pow *= t;
    }
    (v, d1, d2)
}

/// `phi(y) = rho^2 zeta(|y - x0| / rho)` inside the ball, zero outside.
pub fn radial_bump(center: &[f64], radius: f64, grid: &Grid) -> Result<DiscreteFunction> {
    if center.len() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: center.len(),
        });
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius must be > 0, got {radius}"
        )));
    }
    for (k, &c) in center.iter().enumerate() {
        if c - radius < grid.lower(k) || c + radius > grid.upper(k) {
            return Err(Error::InvalidArgument(format!(
                "ball of radius {radius} around {center:?} leaves the domain along axis {k}"
            )));
        }
    }
    let values = (0..grid.len())
        .map(|node| {
            let y = grid.point(node);
            let r = y
                .iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if r < radius {
                radius * radius * zeta(r / radius).0
            } else {
                0.0
            }
        })
        .collect();
    DiscreteFunction::new(grid.clone(), values, BoundaryData::zero(grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_conditions() {
        let (v0, d0, dd0) = zeta(0.0);
        let (v1, d1, dd1) = zeta(1.0);
        for x in [v0, d0, dd0, v1, d1] {
            assert!(x.abs() < 1e-12);
        }
        assert!((dd1 - 1.0).abs() < 1e-12);
        let (v, d, dd) = zeta(0.3);
        let t: f64 = 0.3;
        assert!((v - 0.5 * t.powi(3) * (1.0 - t).powi(2)).abs() < 1e-15);
        assert!((d - (1.5 * t * t - 4.0 * t.powi(3) + 2.5 * t.powi(4))).abs() < 1e-14);
        assert!((dd - (3.0 * t - 12.0 * t * t + 10.0 * t.powi(3))).abs() < 1e-14);
    }

    #[test]
    fn bump_leaves_domain() {
        let g = Grid::new_1d(0.0, 1.0, 11).unwrap();
        assert!(radial_bump(&[0.1], 0.2, &g).is_err());
        assert!(radial_bump(&[0.5], 0.2, &g).is_ok());
    }
}
