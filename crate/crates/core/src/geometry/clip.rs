use crate::linalg::{affine_basis, dist, dot, norm};

use super::measure::{face_measure, RANK_TOL};
use super::{sorted_intersection, sorted_union, Halfspace, Polytope, GEOM_EPS};

/// A polytope split by the hyperplane `<normal, x> = offset`, keeping the
/// `<= offset` side.
///
/// Holds the kept vertex set with propagated incidence (the cutting plane gets
/// facet id `facets.len()` of the source), from which both the kept piece and
/// the section can be measured without rebuilding a full [`Polytope`].
#[derive(Clone, Debug)]
pub struct Cut {
    dim: usize,
    points: Vec<Vec<f64>>,
    incidence: Vec<Vec<u32>>,
    section: Vec<usize>,
    kept_strict: bool,
    removed_strict: bool,
    normal: Vec<f64>,
    offset: f64,
    rank_tol: f64,
}

/// Classification tolerance of [`Cut::precise`].
pub const PRECISE_EPS: f64 = 1e-13;
/// Sub-face rank tolerance of [`Cut::precise`]; combinatorics there are exact,
/// so only faces that are lower-dimensional up to rounding get dropped.
const PRECISE_RANK_TOL: f64 = 1e-12;

impl Cut {
    /// Vertices within [`GEOM_EPS`] of the plane count as lying on it, and
    /// new points closer than that to an existing one are merged into it.
    pub fn new(poly: &Polytope, normal: &[f64], offset: f64) -> Cut {
        Self::with_tolerance(poly, normal, offset, GEOM_EPS, true)
    }

    /// Cut for measurement only: vertices count as on the plane only within
    /// [`PRECISE_EPS`] and nothing is merged. Near-duplicate points are
    /// harmless for the measure recursion (their faces are rank-deficient and
    /// drop out), and avoiding the snap keeps measures smooth in the plane.
    pub fn precise(poly: &Polytope, normal: &[f64], offset: f64) -> Cut {
        Self::with_tolerance(poly, normal, offset, PRECISE_EPS, false)
    }

    fn with_tolerance(poly: &Polytope, normal: &[f64], offset: f64, eps: f64, merge: bool) -> Cut {
        let dim = poly.dim();
        let new_facet = poly.facets().len() as u32;
        let slack: Vec<f64> = poly
            .vertices()
            .iter()
            .map(|v| dot(normal, v) - offset)
            .collect();

        let mut points = Vec::with_capacity(poly.vertices().len() + 8);
        let mut incidence = Vec::with_capacity(poly.vertices().len() + 8);
        let mut kept_strict = false;
        let mut removed_strict = false;
        for ((v, inc), &s) in poly.vertices().iter().zip(poly.incidence()).zip(&slack) {
            if s > eps {
                removed_strict = true;
                continue;
            }
            if s < -eps {
                kept_strict = true;
                incidence.push(inc.clone());
            } else {
                let mut inc = inc.clone();
                inc.push(new_facet);
                inc.sort_unstable();
                incidence.push(inc);
            }
            points.push(v.clone());
        }

        if kept_strict && removed_strict {
            for &(a, b) in poly.edges() {
                let (a, b) = (a as usize, b as usize);
                let (sa, sb) = (slack[a], slack[b]);
                let crosses = (sa < -eps && sb > eps) || (sa > eps && sb < -eps);
                if !crosses {
                    continue;
                }
                let t = sa / (sa - sb);
                let (va, vb) = (&poly.vertices()[a], &poly.vertices()[b]);
                let x: Vec<f64> = va.iter().zip(vb).map(|(p, q)| p + t * (q - p)).collect();
                let mut inc = sorted_intersection(&poly.incidence()[a], &poly.incidence()[b]);
                inc.push(new_facet);
                inc.sort_unstable();
                let near = if merge {
                    points.iter().position(|p| dist(p, &x) <= GEOM_EPS)
                } else {
                    None
                };
                match near {
                    Some(i) => incidence[i] = sorted_union(&incidence[i], &inc),
                    None => {
                        points.push(x);
                        incidence.push(inc);
                    }
                }
            }
        }

        let section = incidence
            .iter()
            .enumerate()
            .filter(|(_, inc)| inc.binary_search(&new_facet).is_ok())
            .map(|(i, _)| i)
            .collect();
        Cut {
            dim,
            points,
            incidence,
            section,
            kept_strict,
            removed_strict,
            normal: normal.to_vec(),
            offset,
            rank_tol: if merge { RANK_TOL } else { PRECISE_RANK_TOL },
        }
    }

    /// Both sides of the plane contain vertices strictly.
    pub fn is_proper(&self) -> bool {
        self.kept_strict && self.removed_strict
    }

    pub fn kept_is_empty(&self) -> bool {
        !self.kept_strict
    }

    /// Measure and barycenter of the kept piece (zero measure when it has no interior).
    pub fn kept_measure(&self) -> (f64, Vec<f64>) {
        if !self.kept_strict {
            return (0.0, vec![0.0; self.dim]);
        }
        let ids: Vec<usize> = (0..self.points.len()).collect();
        face_measure(&self.points, &self.incidence, &ids, self.dim, self.rank_tol)
    }

    /// `(n-1)`-measure and barycenter of the section, when the plane crosses the interior.
    pub fn section_measure(&self) -> Option<(f64, Vec<f64>)> {
        if !self.is_proper() {
            return None;
        }
        Some(face_measure(
            &self.points,
            &self.incidence,
            &self.section,
            self.dim - 1,
            self.rank_tol,
        ))
    }

    /// Vertices of the section in ambient coordinates.
    pub fn section_points(&self) -> Vec<Vec<f64>> {
        self.section.iter().map(|&i| self.points[i].clone()).collect()
    }

    pub(crate) fn into_polytope(self, source: &Polytope) -> Option<Polytope> {
        if !self.kept_strict {
            return None;
        }
        if !self.removed_strict {
            return Some(source.clone());
        }
        let dim = self.dim;
        let n_old = source.facets().len();
        let scale = norm(&self.normal);
        let mut all_facets: Vec<Halfspace> = source.facets().to_vec();
        all_facets.push(Halfspace {
            normal: self.normal.iter().map(|x| x / scale).collect(),
            offset: self.offset / scale,
        });

        let mut remap: Vec<Option<u32>> = vec![None; n_old + 1];
        let mut facets = Vec::new();
        for (f, facet) in all_facets.into_iter().enumerate() {
            let members: Vec<&[f64]> = self
                .incidence
                .iter()
                .zip(&self.points)
                .filter(|(inc, _)| inc.binary_search(&(f as u32)).is_ok())
                .map(|(_, p)| p.as_slice())
                .collect();
            if members.len() < dim {
                continue;
            }
            let (_, basis) = affine_basis(members, RANK_TOL);
            if basis.rank() == dim - 1 {
                remap[f] = Some(facets.len() as u32);
                facets.push(facet);
            }
        }
        let incidence = self
            .incidence
            .iter()
            .map(|inc| {
                let mut out: Vec<u32> = inc.iter().filter_map(|&f| remap[f as usize]).collect();
                out.sort_unstable();
                out
            })
            .collect();
        Some(Polytope::assemble(dim, self.points, facets, incidence))
    }
}
