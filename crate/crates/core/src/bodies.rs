//! Catalog of test bodies: the equilateral triangle, the prism T × [-h, h],
//! the regular triangular bipyramid, and a few standard/random polytopes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hull_from_points, hyperplane_basis, Polytope};
use crate::linalg::{dot, norm, scale};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    Triangle,
    Prism,
    Bipyramid,
    Cube,
    Simplex,
    CrossPolytope,
    Random,
}

impl BodyKind {
    pub fn name(self) -> &'static str {
        match self {
            BodyKind::Triangle => "triangle",
            BodyKind::Prism => "prism",
            BodyKind::Bipyramid => "bipyramid",
            BodyKind::Cube => "cube",
            BodyKind::Simplex => "simplex",
            BodyKind::CrossPolytope => "cross_polytope",
            BodyKind::Random => "random",
        }
    }
}

impl std::str::FromStr for BodyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "triangle" => BodyKind::Triangle,
            "prism" => BodyKind::Prism,
            "bipyramid" => BodyKind::Bipyramid,
            "cube" => BodyKind::Cube,
            "simplex" => BodyKind::Simplex,
            "cross_polytope" => BodyKind::CrossPolytope,
            "random" => BodyKind::Random,
            other => return Err(Error::InvalidParams(format!("unknown body kind {other:?}"))),
        })
    }
}

/// Parameters for [`make_body`].
///
/// `size` is the side length for triangle/prism/bipyramid, the half-side for
/// the cube, and the circumradius for simplex/cross-polytope/random bodies.
/// `dim` only applies to cube, simplex, cross-polytope and random bodies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub kind: BodyKind,
    pub size: f64,
    pub dim: usize,
    /// Prism half-height (the interval is `[-h, h]`).
    pub half_height: f64,
    /// Bipyramid apex height; `None` means all edges equal.
    pub apex_height: Option<f64>,
    /// Random bodies: number of points drawn on the sphere.
    pub count: usize,
    pub seed: u64,
}

impl BodySpec {
    pub fn new(kind: BodyKind) -> Self {
        Self {
            kind,
            size: 1.0,
            dim: 3,
            half_height: 1.0,
            apex_height: None,
            count: 20,
            seed: 42,
        }
    }

    pub fn random(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            ..Self::new(BodyKind::Random)
        }
    }
}

pub fn make_body(spec: &BodySpec) -> Result<Polytope> {
    if !(spec.size > 0.0 && spec.size.is_finite()) {
        return Err(Error::InvalidParams(format!("size must be positive, got {}", spec.size)));
    }
    match spec.kind {
        BodyKind::Triangle => hull_from_points(2, &triangle_vertices(spec.size)),
        BodyKind::Prism => {
            let h = spec.half_height;
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidParams(format!("half_height must be positive, got {h}")));
            }
            let pts: Vec<Vec<f64>> = triangle_vertices(spec.size)
                .into_iter()
                .flat_map(|t| [vec![t[0], t[1], -h], vec![t[0], t[1], h]])
                .collect();
            hull_from_points(3, &pts)
        }
        BodyKind::Bipyramid => {
            let h = spec.apex_height.unwrap_or(spec.size * (2.0f64 / 3.0).sqrt());
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidParams(format!("apex_height must be positive, got {h}")));
            }
            let mut pts: Vec<Vec<f64>> = triangle_vertices(spec.size)
                .into_iter()
                .map(|t| vec![t[0], t[1], 0.0])
                .collect();
            pts.push(vec![0.0, 0.0, h]);
            pts.push(vec![0.0, 0.0, -h]);
            hull_from_points(3, &pts)
        }
        BodyKind::Cube => {
            let n = check_dim(spec.dim, 1)?;
            let pts: Vec<Vec<f64>> = (0..1usize << n)
                .map(|mask| {
                    (0..n)
                        .map(|k| if mask >> k & 1 == 1 { spec.size } else { -spec.size })
                        .collect()
                })
                .collect();
            hull_from_points(n, &pts)
        }
        BodyKind::Simplex => {
            let n = check_dim(spec.dim, 1)?;
            hull_from_points(n, &simplex_vertices(n, spec.size))
        }
        BodyKind::CrossPolytope => {
            let n = check_dim(spec.dim, 1)?;
            let mut pts = Vec::with_capacity(2 * n);
            for k in 0..n {
                for s in [spec.size, -spec.size] {
                    let mut x = vec![0.0; n];
                    x[k] = s;
                    pts.push(x);
                }
            }
            hull_from_points(n, &pts)
        }
        BodyKind::Random => {
            let n = check_dim(spec.dim, 2)?;
            if spec.count < n + 1 {
                return Err(Error::InvalidParams(format!(
                    "random body in dimension {n} needs at least {} points",
                    n + 1
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let pts: Vec<Vec<f64>> = (0..spec.count)
                .map(|_| loop {
                    let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let len = norm(&g);
                    if len > 1e-6 {
                        break scale(&g, spec.size / len);
                    }
                })
                .collect();
            hull_from_points(n, &pts).map_err(|e| Error::InvalidParams(format!("random body: {e}")))
        }
    }
}

fn check_dim(dim: usize, min: usize) -> Result<usize> {
    if dim < min || dim > 6 {
        return Err(Error::InvalidParams(format!("dimension {dim} outside {min}..=6")));
    }
    Ok(dim)
}

/// Equilateral triangle with centroid at the origin, one vertex on the positive y axis.
pub fn triangle_vertices(side: f64) -> Vec<Vec<f64>> {
    let r = side / 3f64.sqrt();
    (0..3)
        .map(|k| {
            let a = std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::TAU / 3.0;
            vec![r * a.cos(), r * a.sin()]
        })
        .collect()
}

/// Inward unit normals of the triangle's sides (side k is opposite vertex k).
pub fn triangle_inward_normals() -> Vec<Vec<f64>> {
    triangle_vertices(1.0)
        .into_iter()
        .map(|v| scale(&v, 1.0 / norm(&v)))
        .collect()
}

fn simplex_vertices(n: usize, radius: f64) -> Vec<Vec<f64>> {
    // standard basis of R^{n+1}, centered and written in a frame of the sum-zero hyperplane
    let m = n + 1;
    let diag = vec![1.0 / (m as f64).sqrt(); m];
    let frame = hyperplane_basis(&diag);
    (0..m)
        .map(|i| {
            let mut e: Vec<f64> = vec![-1.0 / m as f64; m];
            e[i] += 1.0;
            let local: Vec<f64> = frame.iter().map(|b| dot(b, &e)).collect();
            scale(&local, radius / norm(&local))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prism_counts() {
        let p = make_body(&BodySpec::new(BodyKind::Prism)).unwrap();
        assert_eq!(p.vertices().len(), 6);
        assert_eq!(p.facets().len(), 5);
        let (v, c) = p.volume_and_barycenter();
        assert!((v - 2.0 * 3f64.sqrt() / 4.0).abs() < 1e-14);
        assert!(norm(&c) < 1e-12);
    }

    #[test]
    fn bipyramid_is_regular() {
        let p = make_body(&BodySpec::new(BodyKind::Bipyramid)).unwrap();
        assert_eq!(p.vertices().len(), 5);
        assert_eq!(p.facets().len(), 6);
        assert_eq!(p.edges().len(), 9);
        for &(a, b) in p.edges() {
            let d = crate::linalg::dist(&p.vertices()[a as usize], &p.vertices()[b as usize]);
            assert!((d - 1.0).abs() < 1e-12);
        }
        assert!(norm(&p.volume_and_barycenter().1) < 1e-12);
    }

    #[test]
    fn triangle_centroid_at_origin() {
        let p = make_body(&BodySpec::new(BodyKind::Triangle)).unwrap();
        let (a, c) = p.volume_and_barycenter();
        assert!((a - 3f64.sqrt() / 4.0).abs() < 1e-14);
        assert!(norm(&c) < 1e-12);
    }

    #[test]
    fn regular_simplex_edges() {
        for n in 2..=4 {
            let mut spec = BodySpec::new(BodyKind::Simplex);
            spec.dim = n;
            let p = make_body(&spec).unwrap();
            assert_eq!(p.vertices().len(), n + 1);
            let d0 = crate::linalg::dist(&p.vertices()[0], &p.vertices()[1]);
            for &(a, b) in p.edges() {
                let d = crate::linalg::dist(&p.vertices()[a as usize], &p.vertices()[b as usize]);
                assert!((d - d0).abs() < 1e-12);
            }
            assert!(norm(&p.volume_and_barycenter().1) < 1e-12);
        }
    }

    #[test]
    fn random_body_is_reproducible() {
        let a = make_body(&BodySpec::random(20, 42)).unwrap();
        let b = make_body(&BodySpec::random(20, 42)).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        let c = make_body(&BodySpec::random(20, 43)).unwrap();
        assert_ne!(a.vertices(), c.vertices());
    }

    #[test]
    fn bad_params() {
        let mut spec = BodySpec::new(BodyKind::Triangle);
        spec.size = -1.0;
        assert!(matches!(make_body(&spec), Err(Error::InvalidParams(_))));
        assert!("dodecahedron".parse::<BodyKind>().is_err());
        assert_eq!("cross-polytope".parse::<BodyKind>().unwrap(), BodyKind::CrossPolytope);
    }
}
