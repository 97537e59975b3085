//! Convex polytope kernel: hulls, halfspace clipping, volumes, barycenters,
//! hyperplane sections and coordinate projections.
//!
//! A [`Polytope`] carries both representations at once (vertex list and facet
//! inequalities) together with the vertex/facet incidence, which is what the
//! clipping and measure routines actually consume.

mod clip;
mod hull;
pub(crate) mod measure;
mod section;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, OrthoBasis};

pub use clip::Cut;
pub use hull::hull_from_points;
pub use section::{drop_coordinate, hyperplane_basis, project_drop_coordinate, section, EmbeddedSection};

/// Geometric tolerance on bodies normalized to O(1) diameter.
pub const GEOM_EPS: f64 = 1e-9;

/// `{x : <normal, x> <= offset}` with a unit normal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn slack(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }
}

#[derive(Clone, Debug)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    facets: Vec<Halfspace>,
    /// Sorted facet ids each vertex is tight on.
    incidence: Vec<Vec<u32>>,
    edges: Vec<(u32, u32)>,
}

impl Polytope {
    pub(crate) fn assemble(
        dim: usize,
        vertices: Vec<Vec<f64>>,
        facets: Vec<Halfspace>,
        incidence: Vec<Vec<u32>>,
    ) -> Self {
        let edges = compute_edges(dim, &facets, &incidence);
        Self {
            dim,
            vertices,
            facets,
            incidence,
            edges,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Halfspace] {
        &self.facets
    }

    pub fn incidence(&self) -> &[Vec<u32>] {
        &self.incidence
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// `(volume, barycenter)` by cone decomposition over the facets.
    pub fn volume_and_barycenter(&self) -> (f64, Vec<f64>) {
        let ids: Vec<usize> = (0..self.vertices.len()).collect();
        measure::face_measure(&self.vertices, &self.incidence, &ids, self.dim, measure::RANK_TOL)
    }

    pub fn volume(&self) -> f64 {
        self.volume_and_barycenter().0
    }

    pub fn contains_point(&self, x: &[f64], strict: bool) -> bool {
        self.facets.iter().all(|f| {
            let s = f.slack(x);
            if strict {
                s < -GEOM_EPS
            } else {
                s <= GEOM_EPS
            }
        })
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(crate::linalg::dist(a, b));
            }
        }
        d
    }

    /// Keeps `{x in P : <normal, x> <= offset}`; `None` when that set has no interior.
    pub fn clip_halfspace(&self, normal: &[f64], offset: f64) -> Option<Polytope> {
        Cut::new(self, normal, offset).into_polytope(self)
    }

    /// Rebuilds the polytope from an affine image of its vertices.
    pub fn map_vertices<F>(&self, f: F) -> Result<Polytope>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let pts: Vec<Vec<f64>> = self.vertices.iter().map(|v| f(v)).collect();
        hull_from_points(self.dim, &pts)
    }

    pub fn to_json(&self) -> PolytopeJson {
        PolytopeJson {
            dim: self.dim,
            vertices: self.vertices.clone(),
            facets: Some(self.facets.clone()),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("polytope serializes")
    }

    /// Parses `{"dim": n, "vertices": [...]}`; any `facets` field is ignored and rederived.
    pub fn from_json_str(s: &str) -> Result<Polytope> {
        let raw: PolytopeJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        raw.into_polytope()
    }
}

/// On-disk polytope format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolytopeJson {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facets: Option<Vec<Halfspace>>,
}

impl PolytopeJson {
    pub fn into_polytope(self) -> Result<Polytope> {
        hull_from_points(self.dim, &self.vertices)
    }
}

/// Combines disjoint pieces: `(sum of volumes, volume-weighted barycenter)`.
pub fn compose_barycenters(parts: &[(f64, Vec<f64>)]) -> Result<(f64, Vec<f64>)> {
    let Some(first) = parts.first() else {
        return Err(Error::EmptyList);
    };
    let dim = first.1.len();
    let mut total = 0.0;
    let mut moment = vec![0.0; dim];
    for (vol, c) in parts {
        if !(*vol > 0.0) {
            return Err(Error::PreconditionViolated(format!(
                "part volume must be positive, got {vol}"
            )));
        }
        if c.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.len(),
            });
        }
        total += vol;
        moment.iter_mut().zip(c).for_each(|(m, x)| *m += vol * x);
    }
    moment.iter_mut().for_each(|m| *m /= total);
    Ok((total, moment))
}

fn compute_edges(dim: usize, facets: &[Halfspace], incidence: &[Vec<u32>]) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    let need = dim.saturating_sub(1);
    for i in 0..incidence.len() {
        for j in i + 1..incidence.len() {
            let common = sorted_intersection(&incidence[i], &incidence[j]);
            if common.len() < need {
                continue;
            }
            let mut basis = OrthoBasis::new();
            for &f in &common {
                basis.push(&facets[f as usize].normal, 1e-9);
                if basis.rank() == need {
                    break;
                }
            }
            if basis.rank() == need {
                edges.push((i as u32, j as u32));
            }
        }
    }
    edges
}

pub(crate) fn sorted_intersection(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

pub(crate) fn sorted_union(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}
