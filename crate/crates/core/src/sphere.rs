//! Charts and sampling on the unit sphere S^{n-1}.
//!
//! The hemisphere chart with pole axis `j` sends `u` (with `u_j != 0`) to
//! `y = -û / u_j`, where `û` drops coordinate `j`. Its inverse is
//! `u = sign · (-y, 1) / sqrt(1 + |y|²)` with the `1` placed at index `j`
//! and `-y` filling the other slots; within a chart, `u` and `y` describe the
//! same hyperplane through the base point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, scale, OrthoBasis};

/// Pole cutoff: charts refuse directions with `|u_j| <= POLE_EPS`.
pub const POLE_EPS: f64 = 1e-6;

/// A unit vector in R^n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Normalizes `v`; fails on zero or non-finite input.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let n = norm(&v);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParams("direction must be a nonzero finite vector".into()));
        }
        Ok(Direction(scale(&v, 1.0 / n)))
    }

    pub fn axis(dim: usize, axis: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        Direction(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn neg(&self) -> Direction {
        Direction(self.0.iter().map(|x| -x).collect())
    }

    /// Geodesic distance.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        geodesic_distance(&self.0, &other.0)
    }

    /// Distance between the hyperplanes `h_v` and `h_w` (antipodes identified).
    pub fn line_angle_to(&self, other: &Direction) -> f64 {
        let a = self.angle_to(other);
        a.min(std::f64::consts::PI - a)
    }

    /// Moves along the great circle with initial velocity `t` (tangent at `self`).
    pub fn exp(&self, t: &[f64]) -> Direction {
        let len = norm(t);
        if len == 0.0 {
            return self.clone();
        }
        let (s, c) = len.sin_cos();
        let v: Vec<f64> = self
            .0
            .iter()
            .zip(t)
            .map(|(x, ti)| c * x + s * ti / len)
            .collect();
        let n = norm(&v);
        Direction(scale(&v, 1.0 / n))
    }

    /// Chart of record: pole axis with the largest |u_j|, so `|u_j| >= 1/sqrt(n)`.
    pub fn chart_axis(&self) -> usize {
        let mut best = 0;
        for (i, x) in self.0.iter().enumerate() {
            if x.abs() > self.0[best].abs() {
                best = i;
            }
        }
        best
    }
}

/// Robust angle between unit vectors (atan2 form, accurate near 0 and π).
pub fn geodesic_distance(a: &[f64], b: &[f64]) -> f64 {
    let (mut d2, mut s2) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        d2 += (x - y) * (x - y);
        s2 += (x + y) * (x + y);
    }
    2.0 * d2.sqrt().atan2(s2.sqrt())
}

/// Hemisphere chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartCoords {
    pub axis: usize,
    /// `+1.0` or `-1.0`: sign of `u_axis`.
    pub sign: f64,
    pub y: Vec<f64>,
}

pub fn chart_to_plane(u: &Direction, axis: usize) -> Result<ChartCoords> {
    let uj = u.0[axis];
    if uj.abs() <= POLE_EPS {
        return Err(Error::PoleTooClose {
            axis,
            component: uj,
        });
    }
    let y = u
        .0
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != axis)
        .map(|(_, x)| -x / uj)
        .collect();
    Ok(ChartCoords {
        axis,
        sign: uj.signum(),
        y,
    })
}

pub fn chart_from_plane(c: &ChartCoords) -> Direction {
    let r2: f64 = c.y.iter().map(|x| x * x).sum();
    let uj = c.sign / (1.0 + r2).sqrt();
    let mut v = Vec::with_capacity(c.y.len() + 1);
    let mut it = c.y.iter();
    for i in 0..=c.y.len() {
        if i == c.axis {
            v.push(uj);
        } else {
            v.push(-uj * it.next().expect("chart dimension"));
        }
    }
    // one extra normalization pass absorbs the rounding of sqrt
    let n = norm(&v);
    Direction(scale(&v, 1.0 / n))
}

/// Columns of the chart Jacobian `du/dy` at `c`, one per chart coordinate.
pub fn chart_jacobian(c: &ChartCoords) -> Vec<Vec<f64>> {
    let u = chart_from_plane(c);
    let uj = u.0[c.axis];
    let m = c.y.len();
    // u = uj * w with w = (-y; 1); du/dy_k = uj * (-e_k) - uj^2 * y_k * u  (using duj/dy_k = -uj^3 y_k)
    (0..m)
        .map(|k| {
            let slot = if k < c.axis { k } else { k + 1 };
            let mut col: Vec<f64> = u.0.iter().map(|x| -uj * uj * c.y[k] * x).collect();
            col[slot] -= uj;
            col
        })
        .collect()
}

/// Pulls a tangent (sphere) gradient back to chart coordinates: `J^T g`.
pub fn chart_gradient_from_tangent(c: &ChartCoords, g: &[f64]) -> Vec<f64> {
    chart_jacobian(c).iter().map(|col| dot(col, g)).collect()
}

/// `g - <g, v> v`.
pub fn tangent_residual(v: &Direction, g: &[f64]) -> Vec<f64> {
    let c = dot(g, &v.0);
    g.iter().zip(&v.0).map(|(gi, vi)| gi - c * vi).collect()
}

/// Orthonormal basis of the tangent space at `v`.
pub fn tangent_basis(v: &Direction) -> Vec<Vec<f64>> {
    crate::geometry::hyperplane_basis(&v.0)
}

/// Deterministic quasi-uniform direction set, closed under negation.
///
/// Returns `2 * ceil(count / 2)` directions: a half-set followed by its
/// antipodes. n = 2 uses equally spaced angles, n = 3 a Fibonacci spiral,
/// higher dimensions a normalized Gaussian image of an additive-recurrence
/// low-discrepancy sequence.
pub fn sample_directions(count: usize, dim: usize) -> Vec<Direction> {
    assert!(count >= 1 && dim >= 1, "need count >= 1 and dim >= 1");
    let half = count.div_ceil(2);
    let base: Vec<Vec<f64>> = match dim {
        1 => vec![vec![1.0]; half],
        2 => {
            let total = 2 * half;
            (0..half)
                .map(|k| {
                    let a = std::f64::consts::TAU * (k as f64 + 0.5) / total as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect()
        }
        3 => {
            let total = (2 * half) as f64;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..half)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / total;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * k as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => gaussian_low_discrepancy(half, dim),
    };
    let mut out: Vec<Direction> = base
        .into_iter()
        .map(|v| Direction::new(v).expect("nonzero sample"))
        .collect();
    let negs: Vec<Direction> = out.iter().map(Direction::neg).collect();
    out.extend(negs);
    out
}

fn gaussian_low_discrepancy(count: usize, dim: usize) -> Vec<Vec<f64>> {
    // Roberts' R_d sequence in [0,1)^{2*ceil(d/2)}, Box–Muller pairs to normals
    let pairs = dim.div_ceil(2);
    let d = 2 * pairs;
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=d).map(|i| (1.0 / phi.powi(i as i32)).fract()).collect();
    (0..count)
        .map(|k| {
            let mut v = Vec::with_capacity(d);
            for p in 0..pairs {
                let u1 = (0.5 + alpha[2 * p] * (k + 1) as f64).fract().max(1e-12);
                let u2 = (0.5 + alpha[2 * p + 1] * (k + 1) as f64).fract();
                let r = (-2.0 * u1.ln()).sqrt();
                let t = std::f64::consts::TAU * u2;
                v.push(r * t.cos());
                v.push(r * t.sin());
            }
            v.truncate(dim);
            if norm(&v) == 0.0 {
                v[0] = 1.0;
            }
            v
        })
        .collect()
}

/// Small-circle/spoke directions in the tangent space at `v`, as unit tangent vectors.
pub fn tangent_spokes(v: &Direction, count: usize) -> Vec<Vec<f64>> {
    let basis = tangent_basis(v);
    let m = basis.len();
    if m == 0 {
        return Vec::new();
    }
    sample_directions(count, m)
        .into_iter()
        .map(|d| {
            let mut t = vec![0.0; v.dim()];
            for (c, b) in d.as_slice().iter().zip(&basis) {
                t.iter_mut().zip(b).for_each(|(ti, bi)| *ti += c * bi);
            }
            t
        })
        .collect()
}

/// Points along the great-circle arc from `a` to `b` (excluding endpoints).
pub fn geodesic_interior(a: &Direction, b: &Direction, samples: usize) -> Vec<Direction> {
    let theta = a.angle_to(b);
    if theta < 1e-15 {
        return vec![a.clone(); samples];
    }
    let t = log_map(a, b);
    (1..=samples)
        .map(|i| {
            let f = i as f64 / (samples + 1) as f64;
            a.exp(&scale(&t, f))
        })
        .collect()
}

/// Tangent vector at `a` pointing to `b` with length equal to their geodesic distance.
/// For antipodal inputs a deterministic perpendicular is used.
pub fn log_map(a: &Direction, b: &Direction) -> Vec<f64> {
    let theta = a.angle_to(b);
    let mut t = tangent_residual(a, &b.0);
    let mut n = norm(&t);
    if n < 1e-12 {
        if theta < 1.0 {
            return vec![0.0; a.dim()];
        }
        let mut basis = OrthoBasis::new();
        basis.push(&a.0, 0.0);
        t = crate::linalg::orthogonal_complement_vector(a.dim(), &basis)
            .unwrap_or_else(|| vec![0.0; a.dim()]);
        n = norm(&t);
        if n == 0.0 {
            return t;
        }
    }
    scale(&t, theta / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pole_maps_to_origin() {
        let u = Direction::axis(3, 2);
        let c = chart_to_plane(&u, 2).unwrap();
        assert_eq!(c.y, vec![0.0, 0.0]);
        let back = chart_from_plane(&c);
        assert_eq!(back, u);
    }

    #[test]
    fn substitution_example() {
        let s = 0.5f64.sqrt();
        let u = Direction::new(vec![0.0, s, s]).unwrap();
        let c = chart_to_plane(&u, 2).unwrap();
        assert!((c.y[0]).abs() < 1e-15 && (c.y[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn equator_is_rejected() {
        let u = Direction::axis(3, 0);
        assert!(matches!(chart_to_plane(&u, 2), Err(Error::PoleTooClose { .. })));
    }

    #[test]
    fn huge_chart_coordinates_stay_unit() {
        let c = ChartCoords {
            axis: 2,
            sign: -1.0,
            y: vec![3e7, -4e7],
        };
        let u = chart_from_plane(&c);
        assert!((norm(u.as_slice()) - 1.0).abs() < 1e-12);
        // normalization identity: u = sign * (-y, 1) / sqrt(1 + |y|^2)
        let r = (1.0 + 25e14f64).sqrt();
        assert!((u.as_slice()[0] - (-1.0) * (-3e7) / r).abs() < 1e-12);
        assert!((u.as_slice()[2] - (-1.0) / r).abs() < 1e-15);
    }

    #[test]
    fn two_samples_are_antipodal() {
        let s = sample_directions(2, 3);
        assert_eq!(s.len(), 2);
        assert_eq!(s[1], s[0].neg());
    }

    #[test]
    fn circle_samples_equally_spaced() {
        let s = sample_directions(12, 2);
        let mut angles: Vec<f64> = s
            .iter()
            .map(|d| d.as_slice()[1].atan2(d.as_slice()[0]))
            .collect();
        angles.sort_by(f64::total_cmp);
        for w in angles.windows(2) {
            assert!((w[1] - w[0] - std::f64::consts::TAU / 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tangent_residual_cases() {
        let v = Direction::new(vec![1.0, 2.0, 2.0]).unwrap();
        let r = tangent_residual(&v, &scale(v.as_slice(), 3.0));
        assert!(norm(&r) < 1e-15);
        let g = vec![2.0, -1.0, 0.0];
        assert!(crate::linalg::dist(&tangent_residual(&v, &g), &g) < 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let c = ChartCoords {
            axis: 1,
            sign: -1.0,
            y: vec![0.3, -0.7],
        };
        let j = chart_jacobian(&c);
        let h = 1e-6;
        for k in 0..2 {
            let mut p = c.clone();
            let mut m = c.clone();
            p.y[k] += h;
            m.y[k] -= h;
            let up = chart_from_plane(&p);
            let um = chart_from_plane(&m);
            for i in 0..3 {
                let fd = (up.as_slice()[i] - um.as_slice()[i]) / (2.0 * h);
                assert!((fd - j[k][i]).abs() < 1e-8);
            }
        }
    }
}
