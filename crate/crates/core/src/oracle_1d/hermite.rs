use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_space::{BoundaryData, DiscreteFunction, Grid};

/// `Q(x) = c0 + c1 (x - a) + c2 (x - a)^2 + c3 (x - a)^3` on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicPolynomial {
    pub a: f64,
    pub b: f64,
    pub coeffs: [f64; 4],
}

impl CubicPolynomial {
    pub fn value(&self, x: f64) -> f64 {
        let t = x - self.a;
        let c = &self.coeffs;
        c[0] + t * (c[1] + t * (c[2] + t * c[3]))
    }

    pub fn slope(&self, x: f64) -> f64 {
        let t = x - self.a;
        let c = &self.coeffs;
        c[1] + t * (2.0 * c[2] + t * 3.0 * c[3])
    }

    pub fn curvature(&self, x: f64) -> f64 {
        let t = x - self.a;
        2.0 * self.coeffs[2] + 6.0 * self.coeffs[3] * t
    }

    /// `max |Q''|` on `[a, b]`.
    pub fn sup_curvature(&self) -> f64 {
        self.curvature(self.a)
            .abs()
            .max(self.curvature(self.b).abs())
    }

    /// Samples on `grid`, carrying its own clamped data.
    pub fn sample(&self, grid: &Grid) -> Result<DiscreteFunction> {
        sample_1d(grid, |x| self.value(x), |x| self.slope(x))
    }
}

pub(crate) fn sample_1d(
    grid: &Grid,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> Result<DiscreteFunction> {
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid("expected a 1D grid".into()));
    }
    let (a, b) = (grid.lower(0), grid.upper(0));
    let bd = BoundaryData::clamped_1d(f(a), df(a), f(b), df(b));
    let values = (0..grid.len()).map(|i| f(grid.coord(0, i))).collect();
    DiscreteFunction::new(grid.clone(), values, bd)
}

/// The unique cubic with `Q(a) = A`, `Q'(a) = A'`, `Q(b) = B`, `Q'(b) = B'`.
pub fn cubic_hermite(
    a: f64,
    b: f64,
    va: f64,
    sa: f64,
    vb: f64,
    sb: f64,
) -> Result<CubicPolynomial> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::DegenerateInterval { a, b });
    }
    let l = b - a;
    let d0 = vb - va - sa * l;
    let d1 = sb - sa;
    Ok(CubicPolynomial {
        a,
        b,
        coeffs: [
            va,
            sa,
            (3.0 * d0 - d1 * l) / (l * l),
            (d1 * l - 2.0 * d0) / (l * l * l),
        ],
    })
}

/// One piece `u'' = curvature` on `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticPiece {
    pub start: f64,
    pub end: f64,
    pub curvature: f64,
}

/// C^1 function with piecewise constant second derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseQuadratic1D {
    /// `a = t0 < t1 < ... < tk = b`.
    pub breakpoints: Vec<f64>,
    pub curvatures: Vec<f64>,
    pub value0: f64,
    pub slope0: f64,
}

impl PiecewiseQuadratic1D {
    pub fn new(
        breakpoints: Vec<f64>,
        curvatures: Vec<f64>,
        value0: f64,
        slope0: f64,
    ) -> Result<Self> {
        if breakpoints.len() != curvatures.len() + 1 || curvatures.is_empty() {
            return Err(Error::InvalidArgument(
                "need one more breakpoint than pieces".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("breakpoints must increase".into()));
        }
        Ok(PiecewiseQuadratic1D {
            breakpoints,
            curvatures,
            value0,
            slope0,
        })
    }

    pub fn a(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn b(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn pieces(&self) -> Vec<QuadraticPiece> {
        self.breakpoints
            .windows(2)
            .zip(&self.curvatures)
            .map(|(w, &k)| QuadraticPiece {
                start: w[0],
                end: w[1],
                curvature: k,
            })
            .collect()
    }

    /// `(u, u', u'')` at `x`; at a breakpoint the curvature of the right piece.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let (mut u, mut du) = (self.value0, self.slope0);
        let last = self.curvatures.len() - 1;
        for (j, &k) in self.curvatures.iter().enumerate() {
            let (s, e) = (self.breakpoints[j], self.breakpoints[j + 1]);
            if x < e || j == last {
                let t = x - s;
                return (u + du * t + 0.5 * k * t * t, du + k * t, k);
            }
            let t = e - s;
            u += du * t + 0.5 * k * t * t;
            du += k * t;
        }
        unreachable!()
    }

    pub fn sup_curvature(&self) -> f64 {
        self.curvatures.iter().fold(0.0_f64, |m, k| m.max(k.abs()))
    }

    pub fn sample(&self, grid: &Grid) -> Result<DiscreteFunction> {
        sample_1d(grid, |x| self.eval(x).0, |x| self.eval(x).1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_data_gives_quadratic() {
        let q = cubic_hermite(0.0, 1.0, 0.0, 0.0, 1.0, 2.0).unwrap();
        assert_eq!(q.coeffs, [0.0, 0.0, 1.0, 0.0]);
        let l = cubic_hermite(0.0, 1.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(l.coeffs, [0.0, 1.0, 0.0, 0.0]);
        assert!(cubic_hermite(1.0, 1.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn piecewise_is_c1() {
        let u = PiecewiseQuadratic1D::new(vec![0.0, 0.5, 1.0], vec![4.0, -4.0], 0.0, 0.0).unwrap();
        let (v, d, _) = u.eval(1.0);
        assert!((v - 1.0).abs() < 1e-15 && d.abs() < 1e-15);
        let l = u.eval(0.5 - 1e-12);
        let r = u.eval(0.5);
        assert!((l.0 - r.0).abs() < 1e-11 && (l.1 - r.1).abs() < 1e-11);
        assert_eq!(u.sup_curvature(), 4.0);
    }
}
