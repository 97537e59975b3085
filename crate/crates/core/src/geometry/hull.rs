use crate::error::{Error, Result};
use crate::linalg::{affine_basis, dist, dot, orthogonal_complement_vector, OrthoBasis};

use super::{Halfspace, Polytope, GEOM_EPS};

/// Convex hull by brute-force facet enumeration over all `dim`-subsets.
///
/// Intended for desk-scale inputs (tens of points, `dim <= 4`).
pub fn hull_from_points(dim: usize, points: &[Vec<f64>]) -> Result<Polytope> {
    if dim == 0 {
        return Err(Error::InvalidParams("dimension must be at least 1".into()));
    }
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParams("non-finite coordinate".into()));
    }
    if points.len() < dim + 1 {
        return Err(Error::TooFewPoints {
            dim,
            needed: dim + 1,
            got: points.len(),
        });
    }

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if pts.iter().all(|q| dist(p, q) > GEOM_EPS) {
            pts.push(p.clone());
        }
    }
    let (_, span) = affine_basis(pts.iter().map(|p| p.as_slice()), GEOM_EPS);
    if span.rank() < dim {
        return Err(Error::NotFullDimensional {
            dim,
            rank: span.rank(),
        });
    }

    let facets = if dim == 1 {
        let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        vec![
            Halfspace {
                normal: vec![-1.0],
                offset: -lo,
            },
            Halfspace {
                normal: vec![1.0],
                offset: hi,
            },
        ]
    } else {
        enumerate_facets(dim, &pts)
    };

    let mut vertices = Vec::new();
    let mut incidence = Vec::new();
    for p in &pts {
        let tight: Vec<u32> = facets
            .iter()
            .enumerate()
            .filter(|(_, f)| f.slack(p).abs() <= GEOM_EPS)
            .map(|(i, _)| i as u32)
            .collect();
        let mut rank = OrthoBasis::new();
        for &f in &tight {
            rank.push(&facets[f as usize].normal, 1e-9);
        }
        if rank.rank() == dim {
            vertices.push(p.clone());
            incidence.push(tight);
        }
    }
    Ok(Polytope::assemble(dim, vertices, facets, incidence))
}

fn enumerate_facets(dim: usize, pts: &[Vec<f64>]) -> Vec<Halfspace> {
    let mut facets: Vec<Halfspace> = Vec::new();
    for combo in Combinations::new(pts.len(), dim) {
        let base = &pts[combo[0]];
        // already covered by a facet found earlier
        if facets.iter().any(|f| {
            combo
                .iter()
                .all(|&i| f.slack(&pts[i]).abs() <= GEOM_EPS)
        }) {
            continue;
        }
        let mut basis = OrthoBasis::new();
        for &i in &combo[1..] {
            let d: Vec<f64> = pts[i].iter().zip(base).map(|(a, b)| a - b).collect();
            basis.push(&d, GEOM_EPS);
        }
        if basis.rank() != dim - 1 {
            continue;
        }
        let Some(normal) = orthogonal_complement_vector(dim, &basis) else {
            continue;
        };
        let offset = dot(&normal, base);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in pts {
            let s = dot(&normal, p) - offset;
            lo = lo.min(s);
            hi = hi.max(s);
        }
        let candidate = if hi <= GEOM_EPS {
            Halfspace { normal, offset }
        } else if lo >= -GEOM_EPS {
            Halfspace {
                normal: normal.iter().map(|x| -x).collect(),
                offset: -offset,
            }
        } else {
            continue;
        };
        let duplicate = facets.iter().any(|f| {
            (f.offset - candidate.offset).abs() <= GEOM_EPS
                && dist(&f.normal, &candidate.normal) <= 1e-9
        });
        if !duplicate {
            facets.push(candidate);
        }
    }
    facets
}

/// Lexicographic k-subsets of `0..n`.
struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}
