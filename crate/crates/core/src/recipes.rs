//! Named experiments behind the command-line tool. Each recipe returns its
//! measured values together with the expectations they were checked against,
//! so a report always shows what was expected next to what was found.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bodies::{make_body, triangle_inward_normals, BodyKind, BodySpec};
use crate::critical::{
    find_critical_directions, group_hyperplanes, mountain_pass, CriticalKind, CriticalPoint, FindOptions,
    MountainPassOptions, RefineOptions, SphereField,
};
use crate::depth::{
    field_csv, hull_distance_to_origin, max_depth_point, origin_in_hull, DepthField, DepthOptions, MedianOptions,
    MedianResult,
};
use crate::error::{Error, Result};
use crate::geometry::Polytope;
use crate::linalg::dist;
use crate::sphere::{geodesic_distance, sample_directions, Direction};
use crate::synthetic::{
    delta_pp, delta_pp_piecewise, gradient_contract_error, known_critical_set, random_directions, verify_variant,
    SplitPoint, SyntheticField, SyntheticVariant, VerifyOptions,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Depth,
    Median,
    Cuts,
    PrismCheck,
    BipyramidCheck,
    SyntheticVerify,
    MountainPass,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Depth => "depth",
            Command::Median => "median",
            Command::Cuts => "cuts",
            Command::PrismCheck => "prism-check",
            Command::BipyramidCheck => "bipyramid-check",
            Command::SyntheticVerify => "synthetic-verify",
            Command::MountainPass => "mountain-pass",
        }
    }
}

/// Where the body comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodySource {
    Catalog(BodySpec),
    File(String),
}

impl BodySource {
    pub fn load(&self) -> Result<Polytope> {
        match self {
            BodySource::Catalog(spec) => make_body(spec),
            BodySource::File(path) => Polytope::from_json_str(&std::fs::read_to_string(path)?),
        }
    }
}

/// Which field `mountain-pass` runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassField {
    Synthetic,
    Depth,
}

/// Fully resolved run configuration, embedded verbatim in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub body: Option<BodySource>,
    /// Base point; `None` means the recipe's default (barycenter or median).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    pub seeds: usize,
    pub tol_crit: f64,
    pub seed: u64,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<PassField>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    pub csv: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Defaults for `command`, before any flag overrides.
    pub fn new(command: Command) -> Self {
        let (body, seeds, field, from, to, nodes) = match command {
            Command::Depth | Command::Median | Command::Cuts => {
                (Some(BodySource::Catalog(BodySpec::new(BodyKind::Prism))), 0, None, None, None, None)
            }
            Command::PrismCheck => (Some(BodySource::Catalog(BodySpec::new(BodyKind::Prism))), 0, None, None, None, None),
            Command::BipyramidCheck => {
                (Some(BodySource::Catalog(BodySpec::new(BodyKind::Bipyramid))), 0, None, None, None, None)
            }
            Command::SyntheticVerify => (None, 0, None, None, None, None),
            Command::MountainPass => (None, 0, Some(PassField::Synthetic), Some(0), Some(1), Some(64)),
        };
        let mut cfg = Self {
            command,
            body,
            point: None,
            seeds,
            tol_crit: RefineOptions::default().tol,
            seed: 7,
            dim: 3,
            field,
            from,
            to,
            nodes,
            csv: false,
            out: None,
            threads: None,
        };
        cfg.seeds = cfg.default_seeds();
        cfg
    }

    /// Seed count used when `--seeds` is not given.
    pub fn default_seeds(&self) -> usize {
        match self.command {
            Command::Depth | Command::Median => DepthOptions::default().seeds,
            Command::BipyramidCheck => 10_000,
            _ => FindOptions::default().seeds,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|measured - expected| <= tolerance`
    Within,
    /// `measured <= expected`
    AtMost,
    /// `measured >= expected`
    AtLeast,
    /// `measured > expected`
    Above,
}

/// One recipe expectation with the value actually measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub name: String,
    pub comparison: Comparison,
    pub expected: f64,
    pub tolerance: f64,
    pub measured: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub detail: String,
}

impl Expectation {
    pub fn within(name: &str, expected: f64, tolerance: f64, measured: f64) -> Self {
        Self::make(name, Comparison::Within, expected, tolerance, measured, (measured - expected).abs() <= tolerance)
    }

    pub fn at_most(name: &str, bound: f64, measured: f64) -> Self {
        Self::make(name, Comparison::AtMost, bound, 0.0, measured, measured <= bound)
    }

    pub fn at_least(name: &str, bound: f64, measured: f64) -> Self {
        Self::make(name, Comparison::AtLeast, bound, 0.0, measured, measured >= bound)
    }

    pub fn above(name: &str, bound: f64, measured: f64) -> Self {
        Self::make(name, Comparison::Above, bound, 0.0, measured, measured > bound)
    }

    /// A yes/no expectation, recorded as 1 expected vs 0/1 measured.
    pub fn holds(name: &str, ok: bool) -> Self {
        Self::make(name, Comparison::Within, 1.0, 0.0, if ok { 1.0 } else { 0.0 }, ok)
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    fn make(name: &str, comparison: Comparison, expected: f64, tolerance: f64, measured: f64, passed: bool) -> Self {
        // JSON has no NaN or inf: infinities clamp to the largest float, NaN fails
        let passed = passed && !measured.is_nan();
        let measured = if measured.is_finite() { measured } else { f64::MAX.copysign(measured) };
        Self {
            name: name.into(),
            comparison,
            expected,
            tolerance,
            measured,
            passed,
            detail: String::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    RecipeFailed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub status: Status,
    pub expectations: Vec<Expectation>,
    /// Expectations that failed, by name (empty on success).
    pub failures: Vec<String>,
    pub result: Value,
    /// CSV field dump, when requested; written next to the report.
    #[serde(skip)]
    pub csv: Option<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.status == Status::Ok
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

struct Outcome {
    expectations: Vec<Expectation>,
    result: Value,
    csv: Option<String>,
}

/// Runs one command. Errors are input problems; recipe failures come back as
/// a report with status `recipe_failed`.
pub fn run(config: &RunConfig) -> Result<Report> {
    if config.seeds < 2 {
        return Err(Error::InvalidParams(format!("seeds must be at least 2, got {}", config.seeds)));
    }
    if !(config.tol_crit > 0.0 && config.tol_crit.is_finite()) {
        return Err(Error::InvalidParams(format!("tol-crit must be positive, got {}", config.tol_crit)));
    }
    let outcome = match config.command {
        Command::Depth => depth_recipe(config)?,
        Command::Median => median_recipe(config)?,
        Command::Cuts => cuts_recipe(config)?,
        Command::PrismCheck => prism_recipe(config)?,
        Command::BipyramidCheck => bipyramid_recipe(config)?,
        Command::SyntheticVerify => synthetic_recipe(config)?,
        Command::MountainPass => pass_recipe(config)?,
    };
    let failures: Vec<String> = outcome
        .expectations
        .iter()
        .filter(|e| !e.passed)
        .map(|e| e.name.clone())
        .collect();
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool: "barycut".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        status: if failures.is_empty() { Status::Ok } else { Status::RecipeFailed },
        expectations: outcome.expectations,
        failures,
        result: outcome.result,
        csv: outcome.csv,
    })
}

fn load_body(config: &RunConfig) -> Result<Polytope> {
    config
        .body
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("this command needs a body".into()))?
        .load()
}

fn depth_options(config: &RunConfig) -> DepthOptions {
    DepthOptions {
        seeds: config.seeds,
        ..Default::default()
    }
}

fn find_options(config: &RunConfig, screen: bool) -> FindOptions {
    FindOptions {
        seeds: config.seeds,
        refine: RefineOptions {
            tol: config.tol_crit,
            ..Default::default()
        },
        screen,
        ..Default::default()
    }
}

fn body_summary(body: &Polytope) -> Value {
    let (volume, barycenter) = body.volume_and_barycenter();
    json!({
        "dim": body.dim(),
        "vertices": body.vertices().len(),
        "facets": body.facets().len(),
        "volume": volume,
        "barycenter": barycenter,
    })
}

/// Median search at default settings, or the explicit `--point`.
fn base_point(body: &Polytope, config: &RunConfig) -> Result<(Vec<f64>, Option<MedianResult>)> {
    match &config.point {
        Some(p) => {
            if p.len() != body.dim() {
                return Err(Error::DimensionMismatch {
                    expected: body.dim(),
                    got: p.len(),
                });
            }
            Ok((p.clone(), None))
        }
        None => {
            let m = max_depth_point(body, &MedianOptions::default())?;
            Ok((m.point.clone(), Some(m)))
        }
    }
}

fn median_json(m: &MedianResult) -> Value {
    json!({
        "point": m.point,
        "depth": m.result.value,
        "last_step": m.last_step,
        "stationarity": m.stationarity,
        "kkt_residual": m.kkt_residual,
        "certified": m.certified,
        "symmetric_shortcut": m.symmetric_shortcut,
        "evaluations": m.evaluations,
    })
}

/// Dupin's property and the inverse-ray-basis property for an argmin set.
fn argmin_expectations(field: &DepthField, argmin: &[Direction], degenerate: bool) -> Result<(Vec<Expectation>, Value)> {
    let residuals: Vec<f64> = argmin.iter().map(|v| field.residual_norm(v)).collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    let mut ex = vec![Expectation::at_most("depth_realizing_are_barycentric", 1e-6, worst)
        .with_detail("largest |cen(K ∩ h_v) - p| over the argmin set")];
    let mut info = json!({ "residuals": residuals });
    if !degenerate {
        let d = hull_distance_to_origin(argmin)?;
        ex.push(Expectation::holds("origin_in_hull_of_argmin", origin_in_hull(argmin)?)
            .with_detail(format!("distance from the origin to conv U: {d:.3e}")));
        ex.push(Expectation::at_least("argmin_size", 3.0, argmin.len() as f64));
        info["hull_distance"] = json!(d);
    }
    Ok((ex, info))
}

fn depth_recipe(config: &RunConfig) -> Result<Outcome> {
    let body = load_body(config)?;
    let point = match &config.point {
        Some(p) => p.clone(),
        None => body.volume_and_barycenter().1,
    };
    let field = DepthField::new(&body, &point)?;
    let r = crate::depth::minimize_field(&field, &depth_options(config));
    let (expectations, argmin_info) = argmin_expectations(&field, &r.argmin_set, r.degenerate_flag)?;
    let csv = if config.csv {
        Some(field_csv(&field, &sample_directions(config.seeds, body.dim()))?)
    } else {
        None
    };
    Ok(Outcome {
        expectations,
        result: json!({
            "body": body_summary(&body),
            "point": point,
            "depth": r.value,
            "argmin_set": r.argmin_set,
            "degenerate": r.degenerate_flag,
            "local_minima": r.local_minima.iter().map(|(d, f)| json!({"direction": d, "value": f})).collect::<Vec<_>>(),
            "argmin": argmin_info,
        }),
        csv,
    })
}

fn median_recipe(config: &RunConfig) -> Result<Outcome> {
    let body = load_body(config)?;
    let opts = MedianOptions {
        depth: depth_options(config),
        ..Default::default()
    };
    let m = max_depth_point(&body, &opts)?;
    let field = DepthField::new(&body, &m.point)?;
    let (expectations, argmin_info) = argmin_expectations(&field, &m.result.argmin_set, m.result.degenerate_flag)?;
    let csv = if config.csv {
        Some(field_csv(&field, &sample_directions(config.seeds, body.dim()))?)
    } else {
        None
    };
    let mut result = median_json(&m);
    result["body"] = body_summary(&body);
    result["argmin_set"] = json!(m.result.argmin_set);
    result["degenerate"] = json!(m.result.degenerate_flag);
    result["argmin"] = argmin_info;
    Ok(Outcome {
        expectations,
        result,
        csv,
    })
}

fn point_json(p: &CriticalPoint) -> Value {
    json!({
        "direction": p.direction,
        "value": p.value,
        "residual": p.residual_norm,
        "kind": p.kind,
        "family_id": p.family_id,
    })
}

fn cuts_recipe(config: &RunConfig) -> Result<Outcome> {
    let body = load_body(config)?;
    let n = body.dim();
    let (point, median) = base_point(&body, config)?;
    let field = DepthField::new(&body, &point)?;
    let opts = find_options(config, true);
    let search = find_critical_directions(&field, &opts);
    let groups = group_hyperplanes(&search.points, opts.dedup);
    let isolated = groups.classes.iter().filter(|c| !c.is_family).count();
    let continuum = search.globally_degenerate || groups.families > 0;

    let mut expectations = Vec::new();
    let floor = if n == 3 { 4.0 } else { 3.0 };
    if n >= 2 {
        let measured = if continuum { f64::MAX } else { isolated as f64 };
        let detail = if continuum {
            "a continuum of barycentric hyperplanes was detected".to_string()
        } else {
            format!("{isolated} isolated hyperplane classes")
        };
        expectations.push(Expectation::at_least("distinct_barycentric_hyperplanes", floor, measured).with_detail(detail));
    }
    let csv = if config.csv {
        Some(field_csv(&field, &sample_directions(config.seeds, n))?)
    } else {
        None
    };
    Ok(Outcome {
        expectations,
        result: json!({
            "body": body_summary(&body),
            "point": point,
            "median": median.as_ref().map(median_json),
            "points": search.points.iter().map(point_json).collect::<Vec<_>>(),
            "families": search.families,
            "classes": groups.classes.iter().map(|c| json!({
                "representative": c.representative,
                "members": c.members.len(),
                "is_family": c.is_family,
                "diameter": c.diameter,
            })).collect::<Vec<_>>(),
            "summary": {
                "distinct_hyperplanes": groups.distinct_hyperplanes,
                "isolated_hyperplanes": isolated,
                "families": groups.families,
                "globally_degenerate": search.globally_degenerate,
                "gamma_floor": search.gamma_floor,
                "seeds": search.seeds,
                "refined": search.refined,
                "unconverged": search.unconverged,
            },
        }),
        csv,
    })
}

/// Heights at which the plane `<v, x - p> = 0` meets the prism's vertical edges.
fn edge_heights(v: &[f64], p: &[f64], base: &[Vec<f64>]) -> Vec<f64> {
    base.iter()
        .map(|t| p[2] - (v[0] * (t[0] - p[0]) + v[1] * (t[1] - p[1])) / v[2])
        .collect()
}

fn prism_recipe(config: &RunConfig) -> Result<Outcome> {
    let spec = match &config.body {
        Some(BodySource::Catalog(s)) if s.kind == BodyKind::Prism => s.clone(),
        _ => return Err(Error::InvalidParams("prism-check runs on the catalog prism".into())),
    };
    let body = make_body(&spec)?;
    let h = spec.half_height;
    let base = crate::bodies::triangle_vertices(spec.size);
    let (volume, center) = body.volume_and_barycenter();
    let m = max_depth_point(&body, &MedianOptions::default())?;
    let p0 = m.point.clone();
    let field = DepthField::with_volume(&body, &p0, volume)?;
    let mut ex = vec![
        Expectation::at_most("median_at_barycenter", 1e-6, dist(&p0, &center)),
        Expectation::within("depth", 4.0 / 9.0, 1e-6, m.result.value),
    ];

    let realizing = group_hyperplanes(
        &m.result
            .argmin_set
            .iter()
            .map(|d| CriticalPoint {
                direction: d.clone(),
                value: m.result.value,
                residual_norm: field.residual_norm(d),
                kind: CriticalKind::Minimum,
                family_id: None,
            })
            .collect::<Vec<_>>(),
        1e-4,
    );
    ex.push(
        Expectation::within("depth_realizing_classes", 3.0, 0.0, realizing.distinct_hyperplanes as f64)
            .with_detail(format!("argmin set of {} directions", m.result.argmin_set.len())),
    );
    let (argmin_ex, _) = argmin_expectations(&field, &m.result.argmin_set, m.result.degenerate_flag)?;
    ex.extend(argmin_ex.into_iter().filter(|e| e.name == "depth_realizing_are_barycentric"));

    let search = find_critical_directions(&field, &find_options(config, true));
    let groups = group_hyperplanes(&search.points, 1e-4);
    ex.push(
        Expectation::at_least("barycentric_families", 1.0, groups.families as f64)
            .with_detail(format!("{} hyperplane classes in total", groups.distinct_hyperplanes)),
    );

    // planes through p0 meeting all three vertical edges strictly inside
    let pool = random_directions(20_000, 3, config.seed);
    let type_ii: Vec<&Direction> = pool
        .iter()
        .filter(|v| {
            let w = v.as_slice();
            w[2].abs() > 1e-3 && edge_heights(w, &p0, &base).iter().all(|z| z.abs() <= 0.95 * h)
        })
        .take(200)
        .collect();
    let worst_half = type_ii
        .iter()
        .map(|v| (field.depth(v) - 0.5).abs())
        .fold(0.0, f64::max);
    ex.push(
        Expectation::at_most("type_ii_planes_halve_volume", 1e-10, worst_half)
            .with_detail(format!("max |δ - 1/2| over {} sampled planes", type_ii.len())),
    );
    ex.push(Expectation::at_least("type_ii_samples", 200.0, type_ii.len() as f64));

    // planes missing some vertical edge, kept clear of the vertical planes
    // and of the type-(ii) boundary, where residuals go to zero continuously
    let type_iii: Vec<&Direction> = pool
        .iter()
        .filter(|v| {
            let w = v.as_slice();
            w[2].abs() >= 0.05 && edge_heights(w, &p0, &base).iter().any(|z| z.abs() >= 1.1 * h)
        })
        .take(50)
        .collect();
    let least_residual = type_iii
        .iter()
        .map(|v| field.residual_norm(v))
        .fold(f64::INFINITY, f64::min);
    ex.push(
        Expectation::above("type_iii_planes_not_barycentric", 1e-4, least_residual)
            .with_detail(format!("min residual over {} sampled planes", type_iii.len())),
    );
    ex.push(Expectation::at_least("type_iii_samples", 50.0, type_iii.len() as f64));

    Ok(Outcome {
        expectations: ex,
        result: json!({
            "body": body_summary(&body),
            "median": median_json(&m),
            "argmin_set": m.result.argmin_set,
            "depth_realizing_classes": realizing.classes.iter().map(|c| &c.representative).collect::<Vec<_>>(),
            "families": search.families,
            "isolated": search.isolated().map(point_json).collect::<Vec<_>>(),
            "summary": {
                "distinct_hyperplanes": groups.distinct_hyperplanes,
                "families": groups.families,
                "gamma_floor": search.gamma_floor,
            },
            "type_ii": {"samples": type_ii.len(), "max_volume_error": worst_half},
            "type_iii": {"samples": type_iii.len(), "min_residual": least_residual},
        }),
        csv: None,
    })
}

fn bipyramid_recipe(config: &RunConfig) -> Result<Outcome> {
    let spec = match &config.body {
        Some(BodySource::Catalog(s)) if s.kind == BodyKind::Bipyramid => s.clone(),
        _ => return Err(Error::InvalidParams("bipyramid-check runs on the catalog bipyramid".into())),
    };
    let body = make_body(&spec)?;
    let (volume, center) = body.volume_and_barycenter();
    let m = max_depth_point(&body, &MedianOptions::default())?;
    let p0 = m.point.clone();
    let field = DepthField::with_volume(&body, &p0, volume)?;

    let mut planes: Vec<(String, Direction)> = triangle_inward_normals()
        .into_iter()
        .enumerate()
        .map(|(k, t)| (format!("vertical_{k}"), Direction::new(vec![t[0], t[1], 0.0]).expect("unit")))
        .collect();
    planes.push(("base_plane".into(), Direction::axis(3, 2)));

    let mut ex = vec![Expectation::at_most("median_at_barycenter", 1e-6, dist(&p0, &center))];
    let mut plane_info = Vec::new();
    for (name, v) in &planes {
        let r = field.residual_norm(v);
        let value = field.depth(v).min(field.depth(&v.neg()));
        ex.push(Expectation::at_most(&format!("{name}_barycentric"), 1e-8, r));
        plane_info.push(json!({
            "name": name,
            "normal": v,
            "residual": r,
            "value": value,
            "depth_realizing": (value - m.result.value).abs() <= 1e-6,
        }));
    }

    let resolution = 1e-3;
    let search = find_critical_directions(&field, &find_options(config, true));
    let groups = group_hyperplanes(&search.points, resolution);
    let extra: Vec<Value> = groups
        .classes
        .iter()
        .filter(|c| c.is_family || planes.iter().all(|(_, v)| c.representative.line_angle_to(v) > resolution))
        .map(|c| json!({"representative": c.representative, "is_family": c.is_family, "members": c.members.len()}))
        .collect();
    let status = if extra.is_empty() && !search.globally_degenerate {
        "consistent-at-resolution"
    } else {
        "inconsistent-at-resolution"
    };

    Ok(Outcome {
        expectations: ex,
        result: json!({
            "body": body_summary(&body),
            "apex_height": spec.apex_height.unwrap_or(spec.size * (2.0f64 / 3.0).sqrt()),
            "median": median_json(&m),
            "conjectured_planes": plane_info,
            "sweep": {
                "seeds": search.seeds,
                "resolution": resolution,
                "classes": groups.distinct_hyperplanes,
                "unexplained_classes": extra,
                "unconverged": search.unconverged,
                "gamma_floor": search.gamma_floor,
            },
            "conjecture_status": status,
        }),
        csv: None,
    })
}

fn synthetic_recipe(config: &RunConfig) -> Result<Outcome> {
    let n = config.dim;
    let opts = VerifyOptions {
        find: find_options(config, false),
        seed: config.seed,
        ..Default::default()
    };
    // the structural properties of δ'
    let prime = verify_variant(n, SyntheticVariant::DeltaP, &opts)?;
    let mut ex: Vec<Expectation> = prime
        .properties
        .iter()
        .map(|p| Expectation {
            name: p.name.clone(),
            comparison: if p.name == "three_minima" || p.name == "one_extra_antipodal_pair" {
                Comparison::Within
            } else {
                Comparison::AtMost
            },
            expected: p.threshold,
            tolerance: 0.0,
            measured: if p.measured.is_finite() { p.measured } else { f64::MAX },
            passed: p.passed,
            detail: p.detail.clone(),
        })
        .collect();

    // critical structure and formulas of δ'' itself
    let field = SyntheticField::new(n, SyntheticVariant::DeltaPP)?;
    let known = known_critical_set(n)?;
    let search = find_critical_directions(&field, &opts.find);
    ex.push(Expectation::within("delta_pp_clusters", known.len() as f64, 0.0, search.points.len() as f64));
    let mut worst_value: f64 = 0.0;
    let mut matched = Vec::new();
    for p in &search.points {
        let (k, d) = known
            .iter()
            .map(|k| (k, geodesic_distance(p.direction.as_slice(), &k.point.to_vec())))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("known set is nonempty");
        worst_value = worst_value.max((p.value - k.value).abs());
        matched.push(json!({"point": point_json(p), "known_value": k.value, "distance_to_known": d}));
    }
    ex.push(
        Expectation::at_most("delta_pp_values", 1e-8, worst_value)
            .with_detail("max |value - known value| over clusters matched to the nearest known point"),
    );

    let sample = random_directions(opts.antipodal_samples, n, config.seed.wrapping_add(2));
    let odd = sample
        .iter()
        .map(|v| (field.value(v) + field.value(&v.neg())).abs())
        .fold(0.0, f64::max);
    ex.push(Expectation::at_most("delta_pp_odd", 1e-12, odd));
    let mut agree: f64 = 0.0;
    for v in &sample {
        let x = SplitPoint::from_slice(v.as_slice())?;
        agree = agree.max((delta_pp(&x) - delta_pp_piecewise(&x)?).abs());
    }
    ex.push(Expectation::at_most("delta_pp_formulas_agree", 1e-12, agree));
    let fd = gradient_contract_error(&field, &sample[..opts.contract_samples.min(sample.len())], 1e-5);
    ex.push(Expectation::at_most("delta_pp_gradient_vs_differences", 1e-6, fd));
    ex.push(Expectation::above("delta_pp_gamma_floor", 0.0, search.gamma_floor.unwrap_or(0.0)));

    let csv = if config.csv {
        Some(field_csv(&field, &sample_directions(config.seeds, n))?)
    } else {
        None
    };
    Ok(Outcome {
        expectations: ex,
        result: json!({
            "dim": n,
            "delta_prime": prime,
            "delta_pp": {
                "clusters": matched,
                "gamma_floor": search.gamma_floor,
                "unconverged": search.unconverged,
                "oddness": odd,
                "formula_gap": agree,
                "gradient_error": fd,
            },
        }),
        csv,
    })
}

/// Named extrema: maxima listed by decreasing value, ties broken by coordinates.
fn ordered_maxima(points: impl Iterator<Item = (Direction, f64)>) -> Vec<(Direction, f64)> {
    let mut out: Vec<(Direction, f64)> = points.collect();
    out.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| a.0.as_slice().partial_cmp(b.0.as_slice()).unwrap_or(std::cmp::Ordering::Equal))
    });
    out
}

fn pass_recipe(config: &RunConfig) -> Result<Outcome> {
    let nodes = config.nodes.unwrap_or(64);
    if nodes < 8 {
        return Err(Error::InvalidParams(format!("nodes must be at least 8, got {nodes}")));
    }
    let from = config.from.unwrap_or(0);
    let to = config.to.unwrap_or(1);
    let refine = RefineOptions {
        tol: config.tol_crit,
        ..Default::default()
    };
    match config.field.unwrap_or(PassField::Synthetic) {
        PassField::Synthetic => {
            let n = config.dim;
            let field = SyntheticField::new(n, SyntheticVariant::DeltaPP)?;
            let known = known_critical_set(n)?;
            let maxima = ordered_maxima(
                known
                    .iter()
                    .filter(|k| k.kind == CriticalKind::Maximum)
                    .map(|k| (Direction::new(k.point.to_vec()).expect("unit"), k.value)),
            );
            let saddles: Vec<(Vec<f64>, f64)> = known
                .iter()
                .filter(|k| k.kind == CriticalKind::SaddleOrOther)
                .map(|k| (k.point.to_vec(), k.value))
                .collect();
            let expected_s = saddles.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
            let (mut ex, mut result) = run_pass(&field, &maxima, from, to, nodes, refine)?;
            let pass_dir = result["pass_point"]["direction"].clone();
            let pass: Vec<f64> = serde_json::from_value(pass_dir).map_err(|e| Error::Parse(e.to_string()))?;
            let off = saddles
                .iter()
                .filter(|s| s.1 == expected_s)
                .map(|s| geodesic_distance(&pass, &s.0))
                .fold(f64::INFINITY, f64::min);
            ex.insert(0, Expectation::within("pass_value", expected_s, 1e-3, result["s"].as_f64().unwrap_or(f64::NAN)));
            ex.insert(1, Expectation::at_most("pass_point_at_known_saddle", 1e-2, off));
            result["expected_s"] = json!(expected_s);
            Ok(Outcome {
                expectations: ex,
                result,
                csv: None,
            })
        }
        PassField::Depth => {
            let body = load_body(config)?;
            let (point, median) = base_point(&body, config)?;
            let field = DepthField::new(&body, &point)?;
            let search = find_critical_directions(&field, &find_options(config, true));
            let maxima = ordered_maxima(
                search
                    .isolated()
                    .filter(|p| p.kind == CriticalKind::Maximum)
                    .map(|p| (p.direction.clone(), p.value)),
            );
            let (ex, mut result) = run_pass(&field, &maxima, from, to, nodes, refine)?;
            result["point"] = json!(point);
            result["median"] = json!(median.as_ref().map(median_json));
            Ok(Outcome {
                expectations: ex,
                result,
                csv: None,
            })
        }
    }
}

fn run_pass<F: SphereField>(
    field: &F,
    maxima: &[(Direction, f64)],
    from: usize,
    to: usize,
    nodes: usize,
    refine: RefineOptions,
) -> Result<(Vec<Expectation>, Value)> {
    let pick = |i: usize| {
        maxima.get(i).cloned().ok_or_else(|| {
            Error::InvalidParams(format!("extremum index {i} out of range ({} maxima found)", maxima.len()))
        })
    };
    let (a, fa) = pick(from)?;
    let (b, fb) = pick(to)?;
    let opts = MountainPassOptions {
        nodes,
        refine,
        ..Default::default()
    };
    let coarse = mountain_pass(field, &a, &b, &opts)?;
    let fine = mountain_pass(
        field,
        &a,
        &b,
        &MountainPassOptions {
            nodes: 2 * nodes,
            ..opts.clone()
        },
    )?;
    let monotone = coarse.history.windows(2).all(|w| w[1] >= w[0]) && fine.history.windows(2).all(|w| w[1] >= w[0]);
    let slack = 10.0 * field.noise_floor();
    let ex = vec![
        Expectation::at_most("resolution_stability", 2e-3, (coarse.s - fine.s).abs())
            .with_detail(format!("s at {nodes} vs {} path nodes", 2 * nodes)),
        Expectation::holds("best_so_far_monotone", monotone),
        Expectation::at_most("pass_below_endpoints", fa.min(fb) + slack, coarse.s),
    ];
    let result = json!({
        "maxima": maxima.iter().map(|(d, f)| json!({"direction": d, "value": f})).collect::<Vec<_>>(),
        "from": {"index": from, "direction": a, "value": fa},
        "to": {"index": to, "direction": b, "value": fb},
        "s": coarse.s,
        "pass_point": point_json(&coarse.pass_point),
        "pass_converged": coarse.pass_converged,
        "iterations": coarse.iterations,
        "converged": coarse.converged,
        "stalled": coarse.stalled,
        "path": coarse.path,
        "doubled": {
            "nodes": 2 * nodes,
            "s": fine.s,
            "pass_point": point_json(&fine.pass_point),
            "converged": fine.converged,
            "stalled": fine.stalled,
        },
    });
    Ok((ex, result))
}
