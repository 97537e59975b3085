//! Critical points of C¹ scalar fields on S^{n-1}: global search, refinement,
//! classification, hyperplane grouping and a string-method mountain pass.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, scale, OrthoBasis};
use crate::sphere::{
    geodesic_interior, log_map, sample_directions, tangent_basis, tangent_residual, tangent_spokes, Direction,
};

/// A C¹ scalar field on the unit sphere of R^n.
pub trait SphereField: Sync {
    fn dim(&self) -> usize;

    fn value(&self, v: &Direction) -> f64;

    /// Tangent gradient at `v` (orthogonal to `v`).
    fn gradient(&self, v: &Direction) -> Vec<f64>;

    fn value_and_gradient(&self, v: &Direction) -> (f64, Vec<f64>) {
        (self.value(v), self.gradient(v))
    }

    /// Value differences below this are treated as evaluation noise.
    fn noise_floor(&self) -> f64 {
        1e-13
    }

    /// Norm of the quantity whose vanishing defines criticality; the gradient by default.
    fn residual_norm(&self, v: &Direction) -> f64 {
        norm(&self.gradient(v))
    }
}

impl<F: SphereField + ?Sized> SphereField for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, v: &Direction) -> f64 {
        (**self).value(v)
    }
    fn gradient(&self, v: &Direction) -> Vec<f64> {
        (**self).gradient(v)
    }
    fn value_and_gradient(&self, v: &Direction) -> (f64, Vec<f64>) {
        (**self).value_and_gradient(v)
    }
    fn noise_floor(&self) -> f64 {
        (**self).noise_floor()
    }
    fn residual_norm(&self, v: &Direction) -> f64 {
        (**self).residual_norm(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Minimum,
    Maximum,
    SaddleOrOther,
    Degenerate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub direction: Direction,
    pub value: f64,
    pub residual_norm: f64,
    pub kind: CriticalKind,
    pub family_id: Option<usize>,
}

#[derive(Clone, Copy, Debug)]
pub struct RefineOptions {
    pub max_iters: usize,
    /// Success threshold on the tangent gradient norm.
    pub tol: f64,
    /// Extra iterations spent polishing after the threshold is met.
    pub polish_iters: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-8,
            polish_iters: 60,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ClassifyOptions {
    pub spokes: usize,
    pub radius: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            spokes: 16,
            radius: 1e-3,
        }
    }
}

/// Result of a local zero-gradient solve.
#[derive(Clone, Debug)]
pub struct Refined {
    pub direction: Direction,
    pub value: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Levenberg–Marquardt on the tangent gradient with a finite-difference
/// Jacobian and great-circle retraction. Returns the last iterate either way;
/// `Ok` iff its gradient norm is within `opts.tol`.
pub fn refine_raw<F: SphereField + ?Sized>(
    field: &F,
    v0: &Direction,
    opts: &RefineOptions,
) -> std::result::Result<Refined, Refined> {
    let mut v = v0.clone();
    let mut g = field.gradient(&v);
    let mut r = norm(&g);
    let mut iters = 0;
    if r <= opts.tol {
        return Ok(Refined {
            value: field.value(&v),
            direction: v,
            residual_norm: r,
            iterations: 0,
        });
    }
    let mut mu = 1e-4;
    let mut h = 1e-6;
    let mut polish_left: Option<usize> = None;
    while iters < opts.max_iters {
        if let Some(0) = polish_left {
            break;
        }
        iters += 1;
        let basis = tangent_basis(&v);
        let m = basis.len();
        let rv = DVector::from_iterator(m, basis.iter().map(|b| dot(b, &g)));
        let mut jac = DMatrix::<f64>::zeros(m, m);
        for (k, b) in basis.iter().enumerate() {
            let gp = field.gradient(&v.exp(&scale(b, h)));
            let gm = field.gradient(&v.exp(&scale(b, -h)));
            for (i, bi) in basis.iter().enumerate() {
                jac[(i, k)] = (dot(bi, &gp) - dot(bi, &gm)) / (2.0 * h);
            }
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &rv;
        let scale_ref = jtj.diagonal().max().max(1e-300);
        let mut accepted = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for i in 0..m {
                a[(i, i)] += mu * scale_ref;
            }
            let Some(delta) = a.cholesky().map(|ch| ch.solve(&(-&jtr))) else {
                mu *= 10.0;
                continue;
            };
            let mut t = vec![0.0; v.dim()];
            for (c, b) in delta.iter().zip(&basis) {
                t.iter_mut().zip(b).for_each(|(ti, bi)| *ti += c * bi);
            }
            let len = norm(&t);
            if len > 0.2 {
                t = scale(&t, 0.2 / len);
            }
            let w = v.exp(&t);
            let gw = field.gradient(&w);
            let rw = norm(&gw);
            if rw < r {
                let step = v.angle_to(&w);
                v = w;
                g = gw;
                r = rw;
                mu = (mu / 4.0).max(1e-12);
                h = (0.1 * step).clamp(1e-8, 1e-6);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
        polish_left = match polish_left {
            Some(k) => Some(k - 1),
            None if r <= opts.tol => Some(opts.polish_iters),
            None => None,
        };
    }
    let out = Refined {
        value: field.value(&v),
        direction: v,
        residual_norm: r,
        iterations: iters,
    };
    if out.residual_norm <= opts.tol {
        Ok(out)
    } else {
        Err(out)
    }
}

/// Refines `v0` to a zero of the tangent gradient and classifies the result.
pub fn refine_critical<F: SphereField + ?Sized>(
    field: &F,
    v0: &Direction,
    opts: &RefineOptions,
) -> Result<CriticalPoint> {
    match refine_raw(field, v0, opts) {
        Ok(r) => {
            let kind = classify_critical(field, &r.direction, &ClassifyOptions::default())
                .unwrap_or(CriticalKind::Degenerate);
            Ok(CriticalPoint {
                direction: r.direction,
                value: r.value,
                residual_norm: r.residual_norm,
                kind,
                family_id: None,
            })
        }
        Err(r) => Err(Error::NoConvergence {
            last: r.direction,
            residual: r.residual_norm,
        }),
    }
}

/// Sampled second-difference classification on a geodesic star around `v`.
pub fn classify_critical<F: SphereField + ?Sized>(
    field: &F,
    v: &Direction,
    opts: &ClassifyOptions,
) -> Result<CriticalKind> {
    let r = norm(&field.gradient(v));
    if r > 1e-6 {
        return Err(Error::PreconditionViolated(format!(
            "classification needs a critical point, gradient norm is {r:e}"
        )));
    }
    let f0 = field.value(v);
    let floor = field.noise_floor();
    let (mut higher, mut lower, mut flat) = (0, 0, 0);
    for t in tangent_spokes(v, opts.spokes) {
        let d = field.value(&v.exp(&scale(&t, opts.radius))) - f0;
        if d > floor {
            higher += 1;
        } else if d < -floor {
            lower += 1;
        } else {
            flat += 1;
        }
    }
    Ok(match (higher, lower, flat) {
        (_, 0, 0) if higher > 0 => CriticalKind::Minimum,
        (0, _, 0) if lower > 0 => CriticalKind::Maximum,
        (h, l, _) if h > 0 && l > 0 => CriticalKind::SaddleOrOther,
        _ => CriticalKind::Degenerate,
    })
}

#[derive(Clone, Debug)]
pub struct FindOptions {
    pub seeds: usize,
    /// Angular deduplication tolerance.
    pub dedup: f64,
    pub refine: RefineOptions,
    pub classify: ClassifyOptions,
    /// Refine only seeds that look promising (gradient-norm local minima on the
    /// seed graph, plus seeds that are already critical). Meant for expensive fields.
    pub screen: bool,
    /// Clusters wider than `family_factor * dedup` are reported as continuous families.
    pub family_factor: f64,
    /// Radius of the caps excluded around critical points when measuring `gamma_floor`.
    pub exclusion_radius: f64,
    /// Value range below which the field counts as constant.
    pub constant_tol: f64,
}

impl Default for FindOptions {
    fn default() -> Self {
        Self {
            seeds: 5000,
            dedup: 1e-4,
            refine: RefineOptions::default(),
            classify: ClassifyOptions::default(),
            screen: false,
            family_factor: 10.0,
            exclusion_radius: 0.05,
            constant_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyInfo {
    pub id: usize,
    pub members: usize,
    /// Largest geodesic distance between two members.
    pub diameter: f64,
    pub min_value: f64,
    pub max_value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    pub families: Vec<FamilyInfo>,
    /// The field is constant at resolution; every direction is critical.
    pub globally_degenerate: bool,
    pub seeds: usize,
    pub refined: usize,
    pub unconverged: usize,
    /// Smallest gradient norm on the seed mesh outside the exclusion caps.
    pub gamma_floor: Option<f64>,
    pub value_range: (f64, f64),
}

impl CriticalSearch {
    /// Points not belonging to a continuous family.
    pub fn isolated(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.points.iter().filter(|p| p.family_id.is_none())
    }
}

pub fn find_critical_directions<F: SphereField + ?Sized>(field: &F, opts: &FindOptions) -> CriticalSearch {
    let n = field.dim();
    let seeds = sample_directions(opts.seeds.max(2), n);
    let evals: Vec<(f64, Vec<f64>)> = seeds.par_iter().map(|v| field.value_and_gradient(v)).collect();
    let lo = evals.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let hi = evals.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
    let gnorm: Vec<f64> = evals.iter().map(|e| norm(&e.1)).collect();
    let mut out = CriticalSearch {
        points: Vec::new(),
        families: Vec::new(),
        globally_degenerate: false,
        seeds: seeds.len(),
        refined: 0,
        unconverged: 0,
        gamma_floor: None,
        value_range: (lo, hi),
    };
    if hi - lo < opts.constant_tol {
        out.globally_degenerate = true;
        return out;
    }

    let candidates: Vec<usize> = if opts.screen {
        let nbrs = knn_graph(&seeds, 2 * n + 4);
        (0..seeds.len())
            .filter(|&i| gnorm[i] <= opts.refine.tol || nbrs[i].iter().all(|&j| gnorm[i] <= gnorm[j]))
            .collect()
    } else {
        (0..seeds.len()).collect()
    };
    out.refined = candidates.len();
    let results: Vec<std::result::Result<Refined, Refined>> = candidates
        .par_iter()
        .map(|&i| refine_raw(field, &seeds[i], &opts.refine))
        .collect();
    let mut converged = Vec::new();
    for r in results {
        match r {
            Ok(r) => converged.push(r),
            Err(_) => out.unconverged += 1,
        }
    }

    // dedup at the angular tolerance, keeping the smallest residual as representative
    converged.sort_by(|a, b| a.residual_norm.total_cmp(&b.residual_norm));
    let mut reps: Vec<Refined> = Vec::new();
    for r in converged {
        if reps.iter().all(|q| q.direction.angle_to(&r.direction) > opts.dedup) {
            reps.push(r);
        }
    }

    // link representatives joined by a critical geodesic; small components are
    // one smeared point, wide ones a continuous family
    let link_radius = 2.5 * seed_spacing(n, seeds.len());
    let link_tol = opts.refine.tol.max(100.0 * field.noise_floor());
    let mut uf = UnionFind::new(reps.len());
    let pairs: Vec<(usize, usize)> = (0..reps.len())
        .flat_map(|i| (i + 1..reps.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| reps[i].direction.angle_to(&reps[j].direction) <= link_radius)
        .collect();
    let linked: Vec<bool> = pairs
        .par_iter()
        .map(|&(i, j)| {
            geodesic_interior(&reps[i].direction, &reps[j].direction, 3)
                .iter()
                .all(|w| norm(&field.gradient(w)) <= link_tol)
        })
        .collect();
    for (&(i, j), ok) in pairs.iter().zip(linked) {
        if ok {
            uf.union(i, j);
        }
    }
    let family_width = opts.family_factor * opts.dedup;
    let mut comps: Vec<Vec<usize>> = uf.components();
    comps.sort_by_key(|c| c[0]);
    let mut next_family = 0;
    for comp in comps {
        let diameter = comp
            .iter()
            .flat_map(|&i| comp.iter().map(move |&j| (i, j)))
            .filter(|(i, j)| i < j)
            .map(|(i, j)| reps[i].direction.angle_to(&reps[j].direction))
            .fold(0.0, f64::max);
        if diameter > family_width {
            let id = next_family;
            next_family += 1;
            let vals: Vec<f64> = comp.iter().map(|&i| reps[i].value).collect();
            out.families.push(FamilyInfo {
                id,
                members: comp.len(),
                diameter,
                min_value: vals.iter().cloned().fold(f64::INFINITY, f64::min),
                max_value: vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            });
            for &i in &comp {
                out.points.push(CriticalPoint {
                    direction: reps[i].direction.clone(),
                    value: reps[i].value,
                    residual_norm: reps[i].residual_norm,
                    kind: CriticalKind::Degenerate,
                    family_id: Some(id),
                });
            }
        } else {
            // comp is sorted by residual through the representative order
            let best = comp[0];
            let r = &reps[best];
            let kind = classify_critical(field, &r.direction, &opts.classify).unwrap_or(CriticalKind::Degenerate);
            out.points.push(CriticalPoint {
                direction: r.direction.clone(),
                value: r.value,
                residual_norm: r.residual_norm,
                kind,
                family_id: None,
            });
        }
    }

    let floor = seeds
        .iter()
        .zip(&gnorm)
        .filter(|(s, _)| {
            out.points
                .iter()
                .all(|p| p.direction.angle_to(s) > opts.exclusion_radius)
        })
        .map(|(_, g)| *g)
        .fold(f64::INFINITY, f64::min);
    out.gamma_floor = floor.is_finite().then_some(floor);
    out
}

/// Typical nearest-neighbor spacing of `count` quasi-uniform points on S^{n-1}.
pub fn seed_spacing(n: usize, count: usize) -> f64 {
    // area of S^{k}: A_0 = 2, A_1 = 2π, A_k = 2π A_{k-2} / (k - 1)
    let k = n.saturating_sub(1);
    let mut area = [2.0, std::f64::consts::TAU];
    for j in 2..=k {
        area[j % 2] = std::f64::consts::TAU * area[j % 2] / (j as f64 - 1.0);
    }
    let a = area[k % 2];
    (a / count as f64).powf(1.0 / k.max(1) as f64)
}

/// Indices of the `k` nearest neighbors of every direction.
pub fn knn_graph(dirs: &[Direction], k: usize) -> Vec<Vec<usize>> {
    dirs.par_iter()
        .enumerate()
        .map(|(i, a)| {
            let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
            for (j, b) in dirs.iter().enumerate() {
                if i == j {
                    continue;
                }
                let s = dot(a.as_slice(), b.as_slice());
                if best.len() < k || s > best[best.len() - 1].0 {
                    let pos = best.partition_point(|e| e.0 >= s);
                    best.insert(pos, (s, j));
                    best.truncate(k);
                }
            }
            best.into_iter().map(|e| e.1).collect()
        })
        .collect()
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut i = i;
        while self.parent[i] != r {
            let next = self.parent[i];
            self.parent[i] = r;
            i = next;
        }
        r
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Components as sorted index lists.
    pub(crate) fn components(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut map: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let r = self.find(i);
            map.entry(r).or_default().push(i);
        }
        map.into_values().collect()
    }
}

/// One hyperplane class: directions identified up to sign and angular tolerance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperplaneClass {
    pub representative: Direction,
    pub members: Vec<usize>,
    pub is_family: bool,
    /// Largest line angle between two members.
    pub diameter: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperplaneGroups {
    pub classes: Vec<HyperplaneClass>,
    pub distinct_hyperplanes: usize,
    pub families: usize,
}

/// Groups directions into hyperplane classes (`v ~ -v`), single-linkage at
/// `tol_angle`; points sharing a `family_id` are always grouped together.
pub fn group_hyperplanes(points: &[CriticalPoint], tol_angle: f64) -> HyperplaneGroups {
    let mut uf = UnionFind::new(points.len());
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let same_family = points[i].family_id.is_some() && points[i].family_id == points[j].family_id;
            if same_family || points[i].direction.line_angle_to(&points[j].direction) <= tol_angle {
                uf.union(i, j);
            }
        }
    }
    let classes: Vec<HyperplaneClass> = uf
        .components()
        .into_iter()
        .map(|members| {
            let mut diameter: f64 = 0.0;
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    diameter = diameter.max(points[i].direction.line_angle_to(&points[j].direction));
                }
            }
            HyperplaneClass {
                representative: points[members[0]].direction.clone(),
                is_family: diameter > 10.0 * tol_angle,
                members,
                diameter,
            }
        })
        .collect();
    HyperplaneGroups {
        distinct_hyperplanes: classes.len(),
        families: classes.iter().filter(|c| c.is_family).count(),
        classes,
    }
}

#[derive(Clone, Debug)]
pub struct MountainPassOptions {
    /// Nodes on the path, endpoints included.
    pub nodes: usize,
    pub max_iters: usize,
    pub step: f64,
    /// Converged once every interior node's path-normal gradient is below this.
    pub tol: f64,
    pub stall_iters: usize,
    pub stall_tol: f64,
    /// Size of the deterministic off-circle bump applied to the initial path.
    pub bump: f64,
    pub refine: RefineOptions,
}

impl Default for MountainPassOptions {
    fn default() -> Self {
        Self {
            nodes: 64,
            max_iters: 3000,
            step: 0.05,
            tol: 1e-7,
            stall_iters: 50,
            stall_tol: 1e-12,
            bump: 0.05,
            refine: RefineOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MountainPass {
    /// Best path bottleneck value; never decreases over the iterations.
    pub s: f64,
    pub pass_point: CriticalPoint,
    /// Whether `pass_point` met the refinement tolerance.
    pub pass_converged: bool,
    pub iterations: usize,
    pub converged: bool,
    pub stalled: bool,
    #[serde(skip)]
    pub path: Vec<Direction>,
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Numerical mountain pass between two local maxima `a` and `b`: a string of
/// nodes is pushed uphill along the path-normal gradient and kept equally
/// spaced; the bottleneck node of the best path is refined to a critical point.
pub fn mountain_pass<F: SphereField + ?Sized>(
    field: &F,
    a: &Direction,
    b: &Direction,
    opts: &MountainPassOptions,
) -> Result<MountainPass> {
    let n = field.dim();
    if n < 3 {
        return Err(Error::DimensionTooSmall(n));
    }
    if a.dim() != n || b.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.dim().min(b.dim()),
        });
    }
    if opts.nodes < 3 {
        return Err(Error::InvalidParams("mountain pass needs at least 3 nodes".into()));
    }
    for m in [a, b] {
        match classify_critical(field, m, &ClassifyOptions::default()) {
            Ok(CriticalKind::Maximum) => {}
            _ => return Err(Error::NotLocalMaxima),
        }
    }
    if a.angle_to(b) < 1e-12 {
        let value = field.value(a);
        return Ok(MountainPass {
            s: value,
            pass_point: CriticalPoint {
                direction: a.clone(),
                value,
                residual_norm: norm(&field.gradient(a)),
                kind: CriticalKind::Maximum,
                family_id: None,
            },
            pass_converged: true,
            iterations: 0,
            converged: true,
            stalled: false,
            path: vec![a.clone()],
            history: vec![value],
        });
    }

    // off-circle direction for the initial bump; both signs are tried
    let mut span = OrthoBasis::new();
    span.push(a.as_slice(), 0.0);
    span.push(b.as_slice(), 1e-12);
    if span.rank() < 2 {
        span.push(&log_map(a, b), 0.0);
    }
    let normal = crate::linalg::orthogonal_complement_vector(n, &span).expect("n >= 3 leaves room");

    let mut best: Option<StringRun> = None;
    for sign in [1.0, -1.0] {
        let run = run_string(field, a, b, &scale(&normal, sign), opts);
        if best.as_ref().is_none_or(|r| run.s > r.s) {
            best = Some(run);
        }
    }
    let run = best.expect("two runs");
    let bottleneck = run
        .path
        .iter()
        .map(|v| field.value(v))
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(i, _)| i)
        .expect("nonempty path");
    let (pass, pass_converged) = match refine_raw(field, &run.path[bottleneck], &opts.refine) {
        Ok(r) => (r, true),
        Err(r) => (r, false),
    };
    let kind = if pass_converged {
        classify_critical(field, &pass.direction, &ClassifyOptions::default()).unwrap_or(CriticalKind::Degenerate)
    } else {
        CriticalKind::Degenerate
    };
    Ok(MountainPass {
        s: run.s,
        pass_point: CriticalPoint {
            direction: pass.direction,
            value: pass.value,
            residual_norm: pass.residual_norm,
            kind,
            family_id: None,
        },
        pass_converged,
        iterations: run.iterations,
        converged: run.converged,
        stalled: run.stalled,
        path: run.path,
        history: run.history,
    })
}

struct StringRun {
    s: f64,
    path: Vec<Direction>,
    iterations: usize,
    converged: bool,
    stalled: bool,
    history: Vec<f64>,
}

fn run_string<F: SphereField + ?Sized>(
    field: &F,
    a: &Direction,
    b: &Direction,
    bump_dir: &[f64],
    opts: &MountainPassOptions,
) -> StringRun {
    let m = opts.nodes;
    let t_ab = log_map(a, b);
    let mut path: Vec<Direction> = (0..m)
        .map(|i| {
            if i == 0 {
                return a.clone();
            }
            if i == m - 1 {
                return b.clone();
            }
            let f = i as f64 / (m - 1) as f64;
            let base = a.exp(&scale(&t_ab, f));
            let amp = opts.bump * (std::f64::consts::PI * f).sin();
            base.exp(&scale(&tangent_residual(&base, bump_dir), amp))
        })
        .collect();
    reparametrize(&mut path);

    let mut history = Vec::new();
    let mut best_s = f64::NEG_INFINITY;
    let mut best_path = path.clone();
    let mut last_improve = 0;
    let mut converged = false;
    let mut stalled = false;
    let mut iters = 0;
    while iters < opts.max_iters {
        let evals: Vec<(f64, Vec<f64>)> = path.par_iter().map(|v| field.value_and_gradient(v)).collect();
        let s_now = evals.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
        if s_now > best_s + opts.stall_tol {
            last_improve = iters;
        }
        if s_now > best_s {
            best_s = s_now;
            best_path = path.clone();
        }
        history.push(best_s);

        let spacing = path_length(&path) / (m - 1) as f64;
        let mut max_perp: f64 = 0.0;
        let mut next = path.clone();
        for i in 1..m - 1 {
            let chord: Vec<f64> = path[i + 1]
                .as_slice()
                .iter()
                .zip(path[i - 1].as_slice())
                .map(|(p, q)| p - q)
                .collect();
            let tau = tangent_residual(&path[i], &chord);
            let tl = norm(&tau);
            let g = &evals[i].1;
            let perp = if tl > 0.0 {
                let c = dot(g, &tau) / (tl * tl);
                g.iter().zip(&tau).map(|(gi, ti)| gi - c * ti).collect()
            } else {
                g.clone()
            };
            let pl = norm(&perp);
            max_perp = max_perp.max(pl);
            let mut step = scale(&perp, opts.step);
            let sl = opts.step * pl;
            if sl > 0.5 * spacing {
                step = scale(&step, 0.5 * spacing / sl);
            }
            next[i] = path[i].exp(&step);
        }
        iters += 1;
        if max_perp <= opts.tol {
            converged = true;
            break;
        }
        if iters - last_improve >= opts.stall_iters && iters > opts.stall_iters {
            stalled = true;
            break;
        }
        path = next;
        reparametrize(&mut path);
    }
    StringRun {
        s: best_s,
        path: best_path,
        iterations: iters,
        converged,
        stalled,
        history,
    }
}

fn path_length(path: &[Direction]) -> f64 {
    path.windows(2).map(|w| w[0].angle_to(&w[1])).sum()
}

/// Redistributes interior nodes to equal geodesic spacing along the polyline.
fn reparametrize(path: &mut [Direction]) {
    let m = path.len();
    let cum: Vec<f64> = std::iter::once(0.0)
        .chain(path.windows(2).scan(0.0, |acc, w| {
            *acc += w[0].angle_to(&w[1]);
            Some(*acc)
        }))
        .collect();
    let total = cum[m - 1];
    if total <= 0.0 {
        return;
    }
    let old = path.to_vec();
    let mut seg = 0;
    for (i, slot) in path.iter_mut().enumerate().take(m - 1).skip(1) {
        let target = total * i as f64 / (m - 1) as f64;
        while seg < m - 2 && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let f = if len > 0.0 { (target - cum[seg]) / len } else { 0.0 };
        let t = log_map(&old[seg], &old[seg + 1]);
        *slot = old[seg].exp(&scale(&t, f));
    }
}
