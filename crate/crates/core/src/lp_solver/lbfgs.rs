//! Preconditioned L-BFGS with Armijo backtracking.

use std::collections::VecDeque;

use crate::error::Error;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub memory: usize,
    pub max_iter: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stop {
    Converged,
    MaxIter,
    LineSearch,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
    pub iterations: usize,
    pub stop: Stop,
}

/// An evaluation error together with the last accepted iterate.
#[derive(Debug)]
pub(crate) struct Failure {
    pub error: Error,
    pub x: Vec<f64>,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn minimize<F, P, C>(
    x0: Vec<f64>,
    mut fg: F,
    precond: P,
    converged: C,
    s: Settings,
) -> Result<Outcome, Failure>
where
    F: FnMut(&[f64]) -> crate::error::Result<(f64, Vec<f64>)>,
    P: Fn(&mut [f64]),
    C: Fn(f64, &[f64]) -> bool,
{
    let n = x0.len();
    let mut x = x0;
    let (mut f, mut g) = match fg(&x) {
        Ok(v) => v,
        Err(error) => {
            return Err(Failure {
                error,
                x,
                iterations: 0,
            })
        }
    };
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(s.memory);
    let mut iterations = 0;
    let mut stop = Stop::MaxIter;
    let mut fresh_restart = false;
    let mut stalled = 0;
    while iterations < s.max_iter {
        if n == 0 || converged(f, &g) {
            stop = Stop::Converged;
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (sv, yv, rho) in hist.iter().rev() {
            let a = rho * dot(sv, &q);
            for (qi, yi) in q.iter_mut().zip(yv) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        precond(&mut q);
        if let Some((sv, yv, _)) = hist.back() {
            let mut py = yv.clone();
            precond(&mut py);
            let gamma = dot(sv, yv) / dot(yv, &py);
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        }
        for ((sv, yv, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(yv, &q);
            for (qi, si) in q.iter_mut().zip(sv) {
                *qi += si * (a - b);
            }
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hist.clear();
            d = g.clone();
            precond(&mut d);
            d.iter_mut().for_each(|v| *v = -*v);
            slope = dot(&g, &d);
            if !(slope < 0.0) {
                stop = Stop::LineSearch;
                break;
            }
        }
        let mut step = 1.0;
        let mut accepted = None;
        let mut approx = false;
        for _ in 0..s.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            match fg(&trial) {
                Ok((ft, gt)) if ft.is_finite() && ft <= f + s.armijo * step * slope => {
                    accepted = Some((trial, ft, gt));
                    break;
                }
                // near the optimum `f` stops resolving the decrease; fall back
                // on the directional derivative
                Ok((ft, gt))
                    if ft <= f + 1e-12 * f.abs() && dot(&gt, &d).abs() <= 0.9 * slope.abs() =>
                {
                    approx = true;
                    accepted = Some((trial, ft, gt));
                    break;
                }
                Ok(_) => step *= s.backtrack,
                Err(error) => {
                    return Err(Failure {
                        error,
                        x,
                        iterations,
                    })
                }
            }
        }
        if hist.is_empty() && step == 1.0 {
            // no curvature pairs yet: expand while the decrease keeps improving
            if let Some((_, mut fa, _)) = accepted.as_ref().map(|a| (0, a.1, 0)) {
                let mut big = 2.0;
                for _ in 0..30 {
                    let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + big * b).collect();
                    match fg(&trial) {
                        Ok((ft, gt))
                            if ft.is_finite() && ft < fa && ft <= f + s.armijo * big * slope =>
                        {
                            fa = ft;
                            accepted = Some((trial, ft, gt));
                            big *= 2.0;
                        }
                        _ => break,
                    }
                }
            }
        }
        iterations += 1;
        match accepted {
            Some((xn, fnew, gnew)) => {
                let sv: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let yv: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&sv, &yv);
                let scale = dot(&sv, &sv).sqrt() * dot(&yv, &yv).sqrt();
                if sy > 1e-10 * scale && sy > 0.0 {
                    if hist.len() == s.memory {
                        hist.pop_front();
                    }
                    hist.push_back((sv, yv, 1.0 / sy));
                }
                let progressed = fnew < f || approx;
                x = xn;
                f = fnew;
                g = gnew;
                if progressed {
                    stalled = 0;
                    fresh_restart = false;
                } else {
                    // rounding floor: accepted without decrease
                    stalled += 1;
                    if stalled >= 5 {
                        if hist.is_empty() {
                            stop = Stop::LineSearch;
                            break;
                        }
                        hist.clear();
                        stalled = 0;
                    }
                }
            }
            None => {
                if fresh_restart || hist.is_empty() {
                    stop = Stop::LineSearch;
                    break;
                }
                hist.clear();
                fresh_restart = true;
            }
        }
    }
    if stop == Stop::MaxIter && converged(f, &g) {
        stop = Stop::Converged;
    }
    Ok(Outcome {
        x,
        f,
        g,
        iterations,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let fg = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            Ok((f, g))
        };
        let out = minimize(
            vec![-1.2, 1.0],
            fg,
            |_| {},
            |_, g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-10,
            Settings {
                memory: 10,
                max_iter: 1000,
                armijo: 1e-4,
                backtrack: 0.5,
                max_backtracks: 60,
            },
        )
        .unwrap();
        assert_eq!(out.stop, Stop::Converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8);
    }
}
