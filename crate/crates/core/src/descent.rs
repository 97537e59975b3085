//! Local minimization of a C¹ function on the sphere: BFGS in the chart of
//! record with Armijo backtracking, re-charting whenever the iterate drifts
//! toward another pole axis.

use nalgebra::{DMatrix, DVector};

use crate::linalg::norm;
use crate::sphere::{chart_from_plane, chart_gradient_from_tangent, chart_to_plane, ChartCoords, Direction};

#[derive(Clone, Copy, Debug)]
pub struct DescentOptions {
    /// Stop once the tangent gradient norm drops to this level.
    pub gtol: f64,
    pub max_iters: usize,
    /// Largest chart step per iteration.
    pub max_step: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            gtol: 1e-11,
            max_iters: 200,
            max_step: 0.25,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LocalMin {
    pub direction: Direction,
    pub value: f64,
    /// Tangent gradient at `direction`.
    pub gradient: Vec<f64>,
    pub iterations: usize,
}

/// Minimizes `eval` (returning value and tangent gradient) starting from `start`.
pub fn local_minimize<F>(eval: F, start: &Direction, opts: &DescentOptions) -> LocalMin
where
    F: Fn(&Direction) -> (f64, Vec<f64>),
{
    let mut v = start.clone();
    let (mut f, mut g) = eval(&v);
    let mut iters = 0;
    'charts: while iters < opts.max_iters {
        let axis = v.chart_axis();
        let Ok(mut c) = chart_to_plane(&v, axis) else {
            break;
        };
        let m = c.y.len();
        let mut gy = DVector::from_vec(chart_gradient_from_tangent(&c, &g));
        let mut h = DMatrix::<f64>::identity(m, m);
        let mut first = true;
        while iters < opts.max_iters {
            if norm(&g) <= opts.gtol {
                break 'charts;
            }
            iters += 1;
            let mut d = -(&h * &gy);
            let mut slope = d.dot(&gy);
            if !(slope < 0.0) {
                h = DMatrix::identity(m, m);
                d = -gy.clone();
                slope = d.dot(&gy);
            }
            let len = d.norm();
            if len > opts.max_step {
                d *= opts.max_step / len;
                slope *= opts.max_step / len;
            }

            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..50 {
                let trial = ChartCoords {
                    axis,
                    sign: c.sign,
                    y: c.y.iter().zip(d.iter()).map(|(a, b)| a + t * b).collect(),
                };
                let u = chart_from_plane(&trial);
                let (ft, gt) = eval(&u);
                // below rounding the values cannot rank steps; the gradient still can
                let flat = (ft - f).abs() <= 1e-14 * f.abs().max(1.0);
                if ft <= f + 1e-4 * t * slope || (flat && norm(&gt) < norm(&g)) {
                    accepted = Some((trial, u, ft, gt));
                    break;
                }
                t *= 0.5;
            }
            let Some((trial, u, ft, gt)) = accepted else {
                break 'charts;
            };
            let s = DVector::from_iterator(m, trial.y.iter().zip(&c.y).map(|(a, b)| a - b));
            let gy_new = DVector::from_vec(chart_gradient_from_tangent(&trial, &gt));
            let yk = &gy_new - &gy;
            let sy = s.dot(&yk);
            let stalled = s.norm() < 1e-15 || (f - ft).abs() <= 1e-16 * f.abs().max(1.0) && t < 1e-6;
            v = u;
            f = ft;
            g = gt;
            c = trial;
            gy = gy_new;
            if stalled {
                break 'charts;
            }
            if sy > 1e-300 {
                if first {
                    // Shanno scaling of the initial inverse Hessian
                    h *= sy / yk.dot(&yk);
                    first = false;
                }
                let rho = 1.0 / sy;
                let hy = &h * &yk;
                let yhy = yk.dot(&hy);
                h += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            }
            if v.chart_axis() != axis {
                continue 'charts;
            }
        }
        break;
    }
    LocalMin {
        direction: v,
        value: f,
        gradient: g,
        iterations: iters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use crate::sphere::tangent_residual;

    #[test]
    fn minimizes_linear_function() {
        // f(v) = <a, v> has its minimum at -a/|a|
        let a = vec![0.3, -1.0, 2.0];
        let target: Vec<f64> = crate::linalg::scale(&a, -1.0 / norm(&a));
        let eval = |v: &Direction| (dot(&a, v.as_slice()), tangent_residual(v, &a));
        let start = Direction::new(vec![1.0, 1.0, 1.0]).unwrap();
        let r = local_minimize(eval, &start, &DescentOptions::default());
        assert!(crate::linalg::dist(r.direction.as_slice(), &target) < 1e-9);
        assert!((r.value + norm(&a)).abs() < 1e-12);
    }
}
