//! Small dense-vector helpers shared by the geometry and sphere code.
//!
//! Points are plain `Vec<f64>` / `&[f64]`; dimensions here are tiny (n <= 4),
//! so allocation-free loops beat pulling in a matrix type on the hot path.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(scale(a, 1.0 / n))
    } else {
        None
    }
}

pub fn mean<'a, I>(dim: usize, points: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = vec![0.0; dim];
    let mut count = 0usize;
    for p in points {
        for (a, x) in acc.iter_mut().zip(p) {
            *a += x;
        }
        count += 1;
    }
    if count > 0 {
        let inv = 1.0 / count as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
    }
    acc
}

/// Incremental modified Gram–Schmidt basis.
#[derive(Clone, Debug, Default)]
pub struct OrthoBasis {
    vectors: Vec<Vec<f64>>,
}

impl OrthoBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Component of `v` orthogonal to the current span.
    pub fn residual(&self, v: &[f64]) -> Vec<f64> {
        let mut r = v.to_vec();
        // two passes keep the result orthogonal to ~1e-16 even for nearly dependent input
        for _ in 0..2 {
            for b in &self.vectors {
                let c = dot(&r, b);
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        r
    }

    /// Adds `v` if its orthogonal residual exceeds `tol`; returns whether it was added.
    pub fn push(&mut self, v: &[f64], tol: f64) -> bool {
        let r = self.residual(v);
        let n = norm(&r);
        if n > tol {
            self.vectors.push(scale(&r, 1.0 / n));
            true
        } else {
            false
        }
    }
}

/// Orthonormal basis of the affine hull of `points` (directions relative to the first point).
///
/// Gram–Schmidt with pivoting: the direction with the largest residual goes
/// in first, so a tiny difference vector (two nearly coincident points) never
/// fixes a basis direction and tilts the span by its rounding error.
pub fn affine_basis<'a, I>(points: I, tol: f64) -> (Option<Vec<f64>>, OrthoBasis)
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut it = points.into_iter();
    let Some(origin) = it.next() else {
        return (None, OrthoBasis::new());
    };
    let mut rest: Vec<Vec<f64>> = it.map(|p| sub(p, origin)).collect();
    let mut basis = OrthoBasis::new();
    while !rest.is_empty() {
        let (i, len) = rest
            .iter()
            .enumerate()
            .map(|(i, d)| (i, norm(&basis.residual(d))))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        if len <= tol || !basis.push(&rest.swap_remove(i), tol) {
            break;
        }
    }
    (Some(origin.to_vec()), basis)
}

/// Unit vector orthogonal to every vector of `basis`, chosen deterministically.
pub fn orthogonal_complement_vector(dim: usize, basis: &OrthoBasis) -> Option<Vec<f64>> {
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for axis in 0..dim {
        let mut e = vec![0.0; dim];
        e[axis] = 1.0;
        let r = basis.residual(&e);
        let n = norm(&r);
        if n > best_norm + 1e-12 {
            best_norm = n;
            best = Some(r);
        }
    }
    best.filter(|_| best_norm > 1e-8)
        .map(|r| scale(&r, 1.0 / best_norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_schmidt_detects_dependence() {
        let mut b = OrthoBasis::new();
        assert!(b.push(&[1.0, 1.0, 0.0], 1e-12));
        assert!(b.push(&[1.0, 0.0, 0.0], 1e-12));
        assert!(!b.push(&[3.0, -2.0, 0.0], 1e-12));
        assert_eq!(b.rank(), 2);
        let n = orthogonal_complement_vector(3, &b).unwrap();
        assert!((n[2].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn affine_hull_of_collinear_points() {
        let pts = [vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        let (_, b) = affine_basis(pts.iter().map(|p| p.as_slice()), 1e-12);
        assert_eq!(b.rank(), 1);
    }

    #[test]
    fn near_coincident_points_do_not_tilt_the_hull() {
        // a 1e-9 pair first in line used to fix a direction with 1e-8 angular error
        let pts = [
            vec![0.0, 0.5, 0.0],
            vec![1e-9, 0.5, 1e-9],
            vec![1.0, -0.3, 1.0],
            vec![-0.7, 0.1, -0.7],
        ];
        let (_, b) = affine_basis(pts.iter().map(|p| p.as_slice()), 1e-12);
        assert_eq!(b.rank(), 2);
    }
}
