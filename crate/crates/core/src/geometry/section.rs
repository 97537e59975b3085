use crate::error::{Error, Result};
use crate::linalg::{dot, norm, OrthoBasis};

use super::{hull_from_points, Cut, Polytope, GEOM_EPS};

/// `P ∩ h` for a hyperplane `h`, as an (n-1)-polytope in an orthonormal frame of `h`.
#[derive(Clone, Debug)]
pub struct EmbeddedSection {
    pub ambient_dim: usize,
    /// Unit normal of the hyperplane.
    pub normal: Vec<f64>,
    /// `n - 1` orthonormal vectors spanning the hyperplane's direction space.
    pub basis: Vec<Vec<f64>>,
    pub origin_point: Vec<f64>,
    /// Section vertices in ambient coordinates.
    pub ambient_vertices: Vec<Vec<f64>>,
    /// The section in basis coordinates.
    pub body: Polytope,
}

impl EmbeddedSection {
    pub fn to_ambient(&self, coords: &[f64]) -> Vec<f64> {
        let mut x = self.origin_point.clone();
        for (c, b) in coords.iter().zip(&self.basis) {
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += c * bi);
        }
        x
    }

    pub fn to_local(&self, x: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = x.iter().zip(&self.origin_point).map(|(a, o)| a - o).collect();
        self.basis.iter().map(|b| dot(b, &d)).collect()
    }

    /// `(n-1)`-measure and barycenter (ambient coordinates).
    pub fn measure_and_barycenter(&self) -> (f64, Vec<f64>) {
        let (m, c) = self.body.volume_and_barycenter();
        (m, self.to_ambient(&c))
    }
}

/// Orthonormal frame of the hyperplane with the given unit normal, built
/// deterministically from the coordinate axes.
pub fn hyperplane_basis(normal: &[f64]) -> Vec<Vec<f64>> {
    let dim = normal.len();
    let mut basis = OrthoBasis::new();
    basis.push(normal, 0.0);
    // axes in order of least alignment with the normal keep the frame well conditioned
    let mut axes: Vec<usize> = (0..dim).collect();
    axes.sort_by(|&a, &b| normal[a].abs().total_cmp(&normal[b].abs()));
    for axis in axes {
        let mut e = vec![0.0; dim];
        e[axis] = 1.0;
        basis.push(&e, 1e-6);
        if basis.rank() == dim {
            break;
        }
    }
    basis.vectors()[1..].to_vec()
}

/// Section of `poly` by the hyperplane through `point` orthogonal to `normal`.
pub fn section(poly: &Polytope, normal: &[f64], point: &[f64]) -> Result<EmbeddedSection> {
    let dim = poly.dim();
    if normal.len() != dim || point.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: normal.len().min(point.len()),
        });
    }
    if dim < 2 {
        return Err(Error::InvalidParams("sections need dimension >= 2".into()));
    }
    let len = norm(normal);
    if (len - 1.0).abs() > 1e-12 {
        return Err(Error::PreconditionViolated(format!(
            "section normal must be unit, has norm {len}"
        )));
    }
    let cut = Cut::new(poly, normal, dot(normal, point));
    if !cut.is_proper() {
        return Err(Error::EmptySection);
    }
    let ambient_vertices = cut.section_points();
    let basis = hyperplane_basis(normal);
    let local: Vec<Vec<f64>> = ambient_vertices
        .iter()
        .map(|x| {
            let d: Vec<f64> = x.iter().zip(point).map(|(a, o)| a - o).collect();
            basis.iter().map(|b| dot(b, &d)).collect()
        })
        .collect();
    let body = hull_from_points(dim - 1, &local).map_err(|_| Error::EmptySection)?;
    Ok(EmbeddedSection {
        ambient_dim: dim,
        normal: normal.to_vec(),
        basis,
        origin_point: point.to_vec(),
        ambient_vertices,
        body,
    })
}

/// Orthogonal projection of a section onto the coordinate hyperplane `x_axis = 0`
/// (the dropped coordinate is removed).
pub fn project_drop_coordinate(sec: &EmbeddedSection, axis: usize) -> Result<Polytope> {
    let n = sec.ambient_dim;
    if axis >= n {
        return Err(Error::InvalidParams(format!("axis {axis} out of range for dim {n}")));
    }
    let component = sec.normal[axis];
    if component.abs() < GEOM_EPS {
        return Err(Error::DegenerateProjection { axis, component });
    }
    let image: Vec<Vec<f64>> = sec
        .ambient_vertices
        .iter()
        .map(|x| drop_coordinate(x, axis))
        .collect();
    hull_from_points(n - 1, &image)
}

pub fn drop_coordinate(x: &[f64], axis: usize) -> Vec<f64> {
    x.iter()
        .enumerate()
        .filter(|&(i, _)| i != axis)
        .map(|(_, v)| *v)
        .collect()
}
