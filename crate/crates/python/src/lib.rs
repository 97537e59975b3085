//! Python bindings for the barycut core crate.

use barycut::bodies::{make_body as core_make_body, BodyKind, BodySpec};
use barycut::critical::{find_critical_directions, mountain_pass as core_mountain_pass, FindOptions, MountainPassOptions};
use barycut::depth::{self, DepthField, DepthOptions, MedianOptions};
use barycut::geometry::{hull_from_points, Polytope as CorePolytope};
use barycut::recipes::{self, BodySource, Command, RunConfig};
use barycut::sphere::Direction;
use barycut::synthetic::{self, SplitPoint, SyntheticField, SyntheticVariant};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::io::Write;

fn err(e: barycut::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn direction(v: Vec<f64>) -> PyResult<Direction> {
    Direction::new(v).map_err(err)
}

/// A convex polytope given by its vertices.
#[pyclass(frozen, module = "barycut")]
struct Polytope {
    inner: CorePolytope,
}

#[pymethods]
impl Polytope {
    /// Convex hull of `points` (each a list of `dim` floats).
    #[new]
    fn new(points: Vec<Vec<f64>>) -> PyResult<Self> {
        let dim = points.first().map_or(0, |p| p.len());
        Ok(Self {
            inner: hull_from_points(dim, &points).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CorePolytope::from_json_str(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn vertices(&self) -> Vec<Vec<f64>> {
        self.inner.vertices().to_vec()
    }

    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    fn barycenter(&self) -> Vec<f64> {
        self.inner.volume_and_barycenter().1
    }

    fn contains(&self, x: Vec<f64>) -> bool {
        self.inner.contains_point(&x, false)
    }

    /// Fraction of the volume in `{<v, x - p> >= 0}`.
    fn depth_value(&self, p: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
        depth::depth_value(&self.inner, &p, &direction(v)?).map_err(err)
    }

    /// Chart gradient of the depth field at `v` and the section barycenter residual.
    fn depth_gradient(&self, p: Vec<f64>, v: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let e = depth::depth_gradient(&self.inner, &p, &direction(v)?).map_err(err)?;
        Ok((e.chart_gradient, e.residual))
    }

    /// Tukey depth of `p`: `(value, argmin directions, degenerate)`.
    fn point_depth(&self, p: Vec<f64>) -> PyResult<(f64, Vec<Vec<f64>>, bool)> {
        let r = depth::point_depth(&self.inner, &p, &DepthOptions::default()).map_err(err)?;
        let dirs = r.argmin_set.iter().map(|d| d.as_slice().to_vec()).collect();
        Ok((r.value, dirs, r.degenerate_flag))
    }

    /// Point of maximal depth: `(point, depth, argmin directions, certified)`.
    fn median(&self) -> PyResult<(Vec<f64>, f64, Vec<Vec<f64>>, bool)> {
        let m = depth::max_depth_point(&self.inner, &MedianOptions::default()).map_err(err)?;
        let dirs = m.result.argmin_set.iter().map(|d| d.as_slice().to_vec()).collect();
        Ok((m.point, m.result.value, dirs, m.certified))
    }

    /// Critical directions of the depth field at `p` as `(direction, value, kind)` triples.
    #[pyo3(signature = (p, seeds=2000, screen=true))]
    fn critical_directions(&self, p: Vec<f64>, seeds: usize, screen: bool) -> PyResult<Vec<(Vec<f64>, f64, String)>> {
        let field = DepthField::new(&self.inner, &p).map_err(err)?;
        let search = find_critical_directions(
            &field,
            &FindOptions {
                seeds,
                screen,
                ..Default::default()
            },
        );
        Ok(search
            .points
            .iter()
            .map(|c| (c.direction.as_slice().to_vec(), c.value, format!("{:?}", c.kind)))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("Polytope(dim={}, vertices={})", self.inner.dim(), self.inner.vertices().len())
    }
}

/// Catalog body by name; keyword arguments override the defaults.
#[pyfunction]
#[pyo3(signature = (kind, **params))]
fn make_body(kind: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Polytope> {
    let mut spec = BodySpec::new(kind.parse::<BodyKind>().map_err(err)?);
    if let Some(params) = params {
        for (key, value) in params.iter() {
            let key: String = key.extract()?;
            match key.as_str() {
                "size" => spec.size = value.extract()?,
                "dim" => spec.dim = value.extract()?,
                "half_height" => spec.half_height = value.extract()?,
                "apex_height" => spec.apex_height = value.extract()?,
                "count" => spec.count = value.extract()?,
                "seed" => spec.seed = value.extract()?,
                other => return Err(PyValueError::new_err(format!("unknown body parameter {other:?}"))),
            }
        }
    }
    Ok(Polytope {
        inner: core_make_body(&spec).map_err(err)?,
    })
}

/// δ'' at a unit vector `(y..., z1, z2)`.
#[pyfunction]
fn delta_pp(x: Vec<f64>) -> PyResult<f64> {
    Ok(synthetic::delta_pp(&SplitPoint::from_slice(&x).map_err(err)?))
}

#[pyfunction]
fn delta_p(x: Vec<f64>) -> PyResult<f64> {
    synthetic::delta_p(&SplitPoint::from_slice(&x).map_err(err)?).map_err(err)
}

#[pyfunction]
fn grad_delta_pp(x: Vec<f64>) -> PyResult<Vec<f64>> {
    synthetic::grad_delta_pp(&SplitPoint::from_slice(&x).map_err(err)?).map_err(err)
}

/// Closed-form critical points of δ'' on S^{n-1} as `(point, value, kind)` triples.
#[pyfunction]
fn known_critical_set(n: usize) -> PyResult<Vec<(Vec<f64>, f64, String)>> {
    Ok(synthetic::known_critical_set(n)
        .map_err(err)?
        .into_iter()
        .map(|k| (k.point.to_vec(), k.value, format!("{:?}", k.kind)))
        .collect())
}

/// Mountain pass of δ'' between two maxima: `(s, pass point)`.
#[pyfunction]
#[pyo3(signature = (a, b, nodes=64))]
fn mountain_pass(a: Vec<f64>, b: Vec<f64>, nodes: usize) -> PyResult<(f64, Vec<f64>)> {
    let field = SyntheticField::new(a.len(), SyntheticVariant::DeltaPP).map_err(err)?;
    let mp = core_mountain_pass(
        &field,
        &direction(a)?,
        &direction(b)?,
        &MountainPassOptions {
            nodes,
            ..Default::default()
        },
    )
    .map_err(err)?;
    Ok((mp.s, mp.pass_point.direction.as_slice().to_vec()))
}

/// Runs a named recipe and returns its JSON report.
#[pyfunction]
#[pyo3(signature = (command, body=None, seeds=None, seed=None))]
fn run_recipe(command: &str, body: Option<&Polytope>, seeds: Option<usize>, seed: Option<u64>) -> PyResult<String> {
    let all = [
        Command::Depth,
        Command::Median,
        Command::Cuts,
        Command::PrismCheck,
        Command::BipyramidCheck,
        Command::SyntheticVerify,
        Command::MountainPass,
    ];
    let cmd = all
        .into_iter()
        .find(|c| c.name() == command)
        .ok_or_else(|| PyValueError::new_err(format!("unknown recipe {command:?}")))?;
    let mut config = RunConfig::new(cmd);
    // recipes read custom bodies from disk, as the CLI does
    let file = match body {
        Some(b) => {
            let mut f = tempfile::NamedTempFile::new()?;
            f.write_all(b.inner.to_json_string().as_bytes())?;
            config.body = Some(BodySource::File(f.path().to_string_lossy().into_owned()));
            Some(f)
        }
        None => None,
    };
    if let Some(s) = seeds {
        config.seeds = s;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    let report = recipes::run(&config).map_err(err)?;
    drop(file);
    Ok(report.to_json_string())
}

#[pymodule(name = "barycut")]
fn barycut_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Polytope>()?;
    m.add_function(wrap_pyfunction!(make_body, m)?)?;
    m.add_function(wrap_pyfunction!(delta_pp, m)?)?;
    m.add_function(wrap_pyfunction!(delta_p, m)?)?;
    m.add_function(wrap_pyfunction!(grad_delta_pp, m)?)?;
    m.add_function(wrap_pyfunction!(known_critical_set, m)?)?;
    m.add_function(wrap_pyfunction!(mountain_pass, m)?)?;
    m.add_function(wrap_pyfunction!(run_recipe, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
