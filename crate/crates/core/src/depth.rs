//! The depth field δ^p(v) = λ({x ∈ K : <v, x - p> >= 0}) / λ(K) on S^{n-1},
//! its gradient, the depth dep(p, K) = min_v δ^p(v), and the point of maximal depth.
//!
//! Moving `v` by a tangent vector `t` rotates the cutting hyperplane about `p`;
//! the kept volume changes at rate `∫_{K ∩ h_v} <t, x - p> dx`, so the tangent
//! gradient is `A (c - p) / λ(K)` with `A` the section measure and `c` its
//! barycenter. It vanishes exactly when `h_v` is barycentric at `p`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::{knn_graph, seed_spacing, SphereField, UnionFind};
use crate::descent::{local_minimize, DescentOptions};
use crate::error::{Error, Result};
use crate::geometry::{project_drop_coordinate, section, Cut, Polytope};
use crate::linalg::{dot, norm, scale, sub};
use crate::sphere::{chart_gradient_from_tangent, chart_to_plane, geodesic_interior, sample_directions, Direction};

/// Everything known about the field at one direction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DepthEval {
    pub direction: Direction,
    pub value: f64,
    /// Pole axis of the chart the gradient is expressed in.
    pub chart_axis: usize,
    pub chart_gradient: Vec<f64>,
    pub tangent_gradient: Vec<f64>,
    /// Section barycenter minus `p`.
    pub residual: Vec<f64>,
    pub section_measure: f64,
}

/// δ^p for a fixed body and interior point.
#[derive(Clone, Debug)]
pub struct DepthField<'a> {
    body: &'a Polytope,
    point: Vec<f64>,
    volume: f64,
}

impl<'a> DepthField<'a> {
    pub fn new(body: &'a Polytope, point: &[f64]) -> Result<Self> {
        let volume = body.volume();
        Self::with_volume(body, point, volume)
    }

    /// Like [`DepthField::new`] with the body volume already known.
    pub fn with_volume(body: &'a Polytope, point: &[f64], volume: f64) -> Result<Self> {
        if point.len() != body.dim() {
            return Err(Error::DimensionMismatch {
                expected: body.dim(),
                got: point.len(),
            });
        }
        if !body.contains_point(point, true) {
            return Err(Error::NotInterior);
        }
        Ok(Self {
            body,
            point: point.to_vec(),
            volume,
        })
    }

    pub fn body(&self) -> &Polytope {
        self.body
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    fn cut(&self, v: &Direction) -> Cut {
        let minus: Vec<f64> = v.as_slice().iter().map(|x| -x).collect();
        Cut::precise(self.body, &minus, -dot(v.as_slice(), &self.point))
    }

    pub fn depth(&self, v: &Direction) -> f64 {
        (self.cut(v).kept_measure().0 / self.volume).clamp(0.0, 1.0)
    }

    pub fn eval(&self, v: &Direction) -> DepthEval {
        let n = self.body.dim();
        let cut = self.cut(v);
        let value = (cut.kept_measure().0 / self.volume).clamp(0.0, 1.0);
        let (area, residual) = match cut.section_measure() {
            Some((a, c)) => (a, sub(&c, &self.point)),
            None => (0.0, vec![0.0; n]),
        };
        // the exact residual is orthogonal to v; strip rounding along v
        let along = dot(&residual, v.as_slice());
        let residual: Vec<f64> = residual.iter().zip(v.as_slice()).map(|(r, x)| r - along * x).collect();
        let tangent_gradient = scale(&residual, area / self.volume);
        let chart_axis = v.chart_axis();
        let chart = chart_to_plane(v, chart_axis).expect("chart of record is admissible");
        DepthEval {
            direction: v.clone(),
            value,
            chart_axis,
            chart_gradient: chart_gradient_from_tangent(&chart, &tangent_gradient),
            tangent_gradient,
            residual,
            section_measure: area,
        }
    }
}

impl SphereField for DepthField<'_> {
    fn dim(&self) -> usize {
        self.body.dim()
    }

    fn value(&self, v: &Direction) -> f64 {
        self.depth(v)
    }

    fn gradient(&self, v: &Direction) -> Vec<f64> {
        self.eval(v).tangent_gradient
    }

    fn value_and_gradient(&self, v: &Direction) -> (f64, Vec<f64>) {
        let e = self.eval(v);
        (e.value, e.tangent_gradient)
    }

    fn noise_floor(&self) -> f64 {
        1e-13
    }

    fn residual_norm(&self, v: &Direction) -> f64 {
        norm(&self.eval(v).residual)
    }
}

pub fn depth_value(body: &Polytope, p: &[f64], v: &Direction) -> Result<f64> {
    Ok(DepthField::new(body, p)?.depth(v))
}

pub fn depth_gradient(body: &Polytope, p: &[f64], v: &Direction) -> Result<DepthEval> {
    Ok(DepthField::new(body, p)?.eval(v))
}

pub fn barycentric_residual(body: &Polytope, p: &[f64], v: &Direction) -> Result<Vec<f64>> {
    Ok(DepthField::new(body, p)?.eval(v).residual)
}

/// Chart gradient assembled from the projected section: with `p` moved to the
/// origin and coordinate `j` dropped, `-sign(u_j) · measure(π S) · cen(π S) / λ(K)`.
pub fn projected_chart_gradient(body: &Polytope, p: &[f64], v: &Direction) -> Result<Vec<f64>> {
    let field = DepthField::new(body, p)?;
    let j = v.chart_axis();
    let sec = section(body, v.as_slice(), p)?;
    let shifted = crate::geometry::EmbeddedSection {
        origin_point: vec![0.0; p.len()],
        ambient_vertices: sec.ambient_vertices.iter().map(|x| sub(x, p)).collect(),
        ..sec
    };
    let proj = project_drop_coordinate(&shifted, j)?;
    let (m, c) = proj.volume_and_barycenter();
    let sign = v.as_slice()[j].signum();
    Ok(c.iter().map(|x| -sign * m * x / field.volume()).collect())
}

#[derive(Clone, Debug)]
pub struct DepthOptions {
    pub seeds: usize,
    /// Directions within this of the best value belong to the argmin set.
    pub tol_u: f64,
    /// Angular deduplication tolerance.
    pub dedup: f64,
    pub descent: DescentOptions,
}

impl Default for DepthOptions {
    fn default() -> Self {
        Self {
            seeds: 2000,
            tol_u: 1e-7,
            dedup: 1e-4,
            descent: DescentOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DepthResult {
    pub value: f64,
    pub argmin_set: Vec<Direction>,
    /// Minimizers appear to form a continuum rather than isolated points.
    pub degenerate_flag: bool,
    /// All distinct local minima found, sorted by value.
    pub local_minima: Vec<(Direction, f64)>,
}

pub fn point_depth(body: &Polytope, p: &[f64], opts: &DepthOptions) -> Result<DepthResult> {
    let field = DepthField::new(body, p)?;
    Ok(minimize_field(&field, opts))
}

/// Global minimization of a sphere field: seeded sampling, descent from the
/// seeds that are local minima of the seed graph, then argmin collection.
pub fn minimize_field<F: SphereField + ?Sized>(field: &F, opts: &DepthOptions) -> DepthResult {
    let n = field.dim();
    let seeds = sample_directions(opts.seeds.max(2), n);
    let values: Vec<f64> = seeds.par_iter().map(|v| field.value(v)).collect();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-10 {
        let argmin_set = dedup_directions(seeds.iter(), opts.dedup);
        return DepthResult {
            value: lo,
            local_minima: argmin_set.iter().map(|d| (d.clone(), lo)).collect(),
            argmin_set,
            degenerate_flag: true,
        };
    }

    let nbrs = knn_graph(&seeds, 2 * n + 2);
    let starts: Vec<usize> = (0..seeds.len())
        .filter(|&i| nbrs[i].iter().all(|&j| values[i] <= values[j]))
        .collect();
    let mut minima: Vec<(Direction, f64)> = starts
        .par_iter()
        .map(|&i| {
            let r = local_minimize(|v| field.value_and_gradient(v), &seeds[i], &opts.descent);
            (r.direction, r.value)
        })
        .collect();
    minima.sort_by(|a, b| a.1.total_cmp(&b.1));
    let best = minima[0].1.min(lo);

    let mut local_minima: Vec<(Direction, f64)> = Vec::new();
    for (d, f) in &minima {
        if local_minima.iter().all(|(e, _)| e.angle_to(d) > opts.dedup) {
            local_minima.push((d.clone(), *f));
        }
    }

    // candidates: refined minima and raw seeds that already attain the minimum
    let mut cands: Vec<Direction> = local_minima
        .iter()
        .filter(|(_, f)| *f <= best + opts.tol_u)
        .map(|(d, _)| d.clone())
        .collect();
    let n_refined = cands.len();
    cands.extend(
        seeds
            .iter()
            .zip(&values)
            .filter(|(_, f)| **f <= best + opts.tol_u)
            .map(|(d, _)| d.clone()),
    );

    let link_radius = 2.5 * seed_spacing(n, seeds.len());
    let pairs: Vec<(usize, usize)> = (0..cands.len())
        .flat_map(|i| (i + 1..cands.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| cands[i].angle_to(&cands[j]) <= link_radius)
        .collect();
    let linked: Vec<bool> = pairs
        .par_iter()
        .map(|&(i, j)| {
            geodesic_interior(&cands[i], &cands[j], 1)
                .iter()
                .all(|w| field.value(w) <= best + opts.tol_u)
        })
        .collect();
    let mut uf = UnionFind::new(cands.len());
    for (&(i, j), ok) in pairs.iter().zip(linked) {
        if ok {
            uf.union(i, j);
        }
    }
    let degenerate_flag = uf.components().iter().any(|comp| {
        comp.iter()
            .flat_map(|&i| comp.iter().map(move |&j| (i, j)))
            .any(|(i, j)| cands[i].angle_to(&cands[j]) > 10.0 * opts.dedup)
    });

    let mut argmin_set = dedup_directions(cands[..n_refined].iter(), opts.dedup);
    if degenerate_flag {
        for d in &cands[n_refined..] {
            if argmin_set.iter().all(|e| e.angle_to(d) > opts.dedup) {
                argmin_set.push(d.clone());
            }
        }
    }
    DepthResult {
        value: best,
        argmin_set,
        degenerate_flag,
        local_minima,
    }
}

fn dedup_directions<'a, I: Iterator<Item = &'a Direction>>(dirs: I, tol: f64) -> Vec<Direction> {
    let mut out: Vec<Direction> = Vec::new();
    for d in dirs {
        if out.iter().all(|e| e.angle_to(d) > tol) {
            out.push(d.clone());
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct MedianOptions {
    pub depth: DepthOptions,
    /// The ascent stops once its steps are below this, relative to the body diameter.
    pub tol: f64,
    /// Interior starting points (the barycenter is always the first).
    pub starts: usize,
    /// How many of the best starts get a full ascent.
    pub ascent_runs: usize,
    /// Iteration cap for one ascent.
    pub max_iters: usize,
    /// Only local minima within this of the best value are tracked as branches
    /// during the search; the final global check adds any that were missed.
    pub branch_margin: f64,
}

impl Default for MedianOptions {
    fn default() -> Self {
        Self {
            depth: DepthOptions::default(),
            tol: 1e-12,
            starts: 9,
            ascent_runs: 3,
            max_iters: 200,
            branch_margin: 0.02,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MedianResult {
    pub point: Vec<f64>,
    pub result: DepthResult,
    /// Length of the last ascent step.
    pub last_step: f64,
    /// `|Σ w_i ∇g_i|` for the best convex combination of tracked branch
    /// gradients at the final point; zero at an exact maximin point.
    pub stationarity: f64,
    /// Set when the optimality conditions were solved to this residual.
    pub kkt_residual: Option<f64>,
    pub certified: bool,
    /// The barycenter already has depth 1/2, the largest possible value.
    pub symmetric_shortcut: bool,
    pub evaluations: usize,
}

/// Point of maximal depth.
///
/// `dep(·, K)` is the lower envelope of branches `g_i(p)`, each a local minimum
/// of `δ^p` followed as `p` moves, with gradient `-A_i v_i / λ(K)`. The search
/// runs a proximal bundle ascent on the tracked branches from the best few of
/// several interior starts, then solves the optimality conditions by Newton's
/// method. The final point is re-checked with a full global minimization and
/// the search is resumed if that finds a lower branch. Certification is
/// heuristic: it means the ascent stalled at a stationary point or the
/// optimality conditions were solved, and the global check agreed.
pub fn max_depth_point(body: &Polytope, opts: &MedianOptions) -> Result<MedianResult> {
    let n = body.dim();
    let (volume, center) = body.volume_and_barycenter();
    let field = DepthField::with_volume(body, &center, volume)?;
    let full = minimize_field(&field, &opts.depth);
    if full.value >= 0.5 - 1e-12 {
        return Ok(MedianResult {
            point: center,
            result: full,
            last_step: 0.0,
            stationarity: 0.0,
            certified: true,
            kkt_residual: None,
            symmetric_shortcut: true,
            evaluations: 1,
        });
    }

    let diam = body.diameter();
    let mut evals = 1usize;

    let support_dirs = sample_directions(opts.starts.saturating_sub(1).max(2), n);
    let mut starts = vec![center.clone()];
    for d in support_dirs.iter().take(opts.starts.saturating_sub(1)) {
        let far = body
            .vertices()
            .iter()
            .max_by(|a, b| dot(a, d.as_slice()).total_cmp(&dot(b, d.as_slice())))
            .expect("vertices");
        starts.push(center.iter().zip(far).map(|(c, x)| c + 0.3 * (x - c)).collect());
    }

    let mut last = None;
    for _round in 0..4 {
        let mut scored: Vec<(f64, Vec<f64>)> = starts
            .iter()
            .filter_map(|s| {
                let field = DepthField::with_volume(body, s, volume).ok()?;
                Some((minimize_field(&field, &opts.depth).value, s.clone()))
            })
            .collect();
        evals += starts.len();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut best: Option<Ascent> = None;
        for (_, s) in scored.iter().take(opts.ascent_runs.max(1)) {
            let Some(a) = bundle_ascent(body, volume, s, opts, diam) else { continue };
            evals += a.evals;
            if best.as_ref().is_none_or(|b| a.value > b.value) {
                best = Some(a);
            }
        }
        let Some(mut best) = best else {
            return Err(Error::NotInterior);
        };
        let branches = best.branches.clone();

        let mut kkt = None;
        if let Some(k) = kkt_polish(body, volume, &best.point, &branches, &opts.depth.descent, diam) {
            let value = tracked_depth(body, volume, &k.point, &branches, &opts.depth.descent);
            evals += 1;
            if value >= best.value - 1e-13 {
                best.point = k.point;
                best.value = value;
                kkt = Some(k.residual);
            }
        }

        let check_field = DepthField::with_volume(body, &best.point, volume)?;
        let check = minimize_field(&check_field, &opts.depth);
        evals += 1;
        if check.value >= best.value - 1e-10 {
            return Ok(MedianResult {
                point: best.point,
                result: check,
                last_step: best.last_step,
                stationarity: best.stationarity,
                certified: best.converged || kkt.is_some(),
                kkt_residual: kkt,
                symmetric_shortcut: false,
                evaluations: evals,
            });
        }
        // the global check found a lower branch: search again from here
        starts = vec![best.point.clone()];
        last = Some((best, check));
    }
    let (best, check) = last.expect("at least one round");
    Ok(MedianResult {
        point: best.point,
        result: check,
        last_step: best.last_step,
        stationarity: best.stationarity,
        certified: false,
        kkt_residual: None,
        symmetric_shortcut: false,
        evaluations: evals,
    })
}

/// `dep(p)` from local descents started at the tracked branch directions;
/// points outside the interior score minus their facet violation.
fn tracked_depth(body: &Polytope, volume: f64, p: &[f64], branches: &[Direction], descent: &DescentOptions) -> f64 {
    let Ok(field) = DepthField::with_volume(body, p, volume) else {
        let worst = body
            .facets()
            .iter()
            .map(|f| f.slack(p))
            .fold(f64::NEG_INFINITY, f64::max);
        return -worst.max(0.0) - 1e-12;
    };
    branches
        .par_iter()
        .map(|b| local_minimize(|v| field.value_and_gradient(v), b, descent).value)
        .reduce(|| f64::INFINITY, f64::min)
}

/// One tracked branch of `dep(·, K)`: a local minimum of `δ^p` followed as
/// `p` moves. By the envelope theorem its gradient in `p` is `-A v / λ(K)`.
struct BranchEval {
    direction: Direction,
    value: f64,
    grad: Vec<f64>,
}

fn branch_at(field: &DepthField, start: &Direction, descent: &DescentOptions) -> BranchEval {
    let m = local_minimize(|v| field.value_and_gradient(v), start, descent);
    let area = field.eval(&m.direction).section_measure;
    BranchEval {
        grad: scale(m.direction.as_slice(), -area / field.volume()),
        value: m.value,
        direction: m.direction,
    }
}

/// All tracked branches at `p`, with descents that landed on the same local
/// minimum merged. `None` outside the interior.
fn branches_at(
    body: &Polytope,
    volume: f64,
    p: &[f64],
    dirs: &[Direction],
    descent: &DescentOptions,
    dedup: f64,
) -> Option<Vec<BranchEval>> {
    let field = DepthField::with_volume(body, p, volume).ok()?;
    let all: Vec<BranchEval> = dirs.par_iter().map(|d| branch_at(&field, d, descent)).collect();
    let mut out: Vec<BranchEval> = Vec::with_capacity(all.len());
    for e in all {
        if out.iter().all(|o| o.direction.angle_to(&e.direction) > dedup) {
            out.push(e);
        }
    }
    Some(out)
}

struct Ascent {
    point: Vec<f64>,
    value: f64,
    branches: Vec<Direction>,
    last_step: f64,
    stationarity: f64,
    converged: bool,
    evals: usize,
}

/// Global minimization of `δ^p` with its low local minima as branches.
fn global_branches(body: &Polytope, volume: f64, p: &[f64], opts: &MedianOptions) -> Option<(f64, Vec<BranchEval>)> {
    let field = DepthField::with_volume(body, p, volume).ok()?;
    let full = minimize_field(&field, &opts.depth);
    let dirs: Vec<Direction> = full
        .local_minima
        .iter()
        .filter(|(_, f)| *f <= full.value + opts.branch_margin)
        .map(|(d, _)| d.clone())
        .collect();
    let evals = branches_at(body, volume, p, &dirs, &opts.depth.descent, opts.depth.dedup)?;
    Some((full.value, evals))
}

fn merge_branches(into: &mut Vec<BranchEval>, more: Vec<BranchEval>, dedup: f64) {
    for e in more {
        if into.iter().all(|o| o.direction.angle_to(&e.direction) > dedup) {
            into.push(e);
        }
    }
}

/// Proximal bundle ascent on `min_i g_i`: each step maximizes the linearized
/// envelope minus `|d|² / 2ρ`, and `ρ` is adjusted from the ratio of actual to
/// predicted gain. Trial points are scored on the tracked branches first and
/// then by a global minimization, whose new branches join the model.
fn bundle_ascent(body: &Polytope, volume: f64, start: &[f64], opts: &MedianOptions, diam: f64) -> Option<Ascent> {
    let descent = &opts.depth.descent;
    let dedup = opts.depth.dedup;
    let n = start.len();
    let lowest = |e: &[BranchEval]| e.iter().map(|b| b.value).fold(f64::INFINITY, f64::min);
    let (_, mut cur) = global_branches(body, volume, start, opts)?;
    let mut evals = 1;
    let mut p = start.to_vec();
    let gmax = |e: &[BranchEval]| e.iter().map(|b| norm(&b.grad)).fold(0.0, f64::max).max(1e-300);
    let mut rho = 0.05 * diam / gmax(&cur);
    let mut last_step = f64::INFINITY;
    let mut stationarity = f64::INFINITY;
    let mut converged = false;

    for _ in 0..opts.max_iters {
        let f = lowest(&cur);
        let g = gmax(&cur);
        // branches that cannot reach the minimum within one step are left out
        let reach = f + 2.0 * g * g * rho + 1e-12;
        let mut near: Vec<&BranchEval> = cur.iter().filter(|e| e.value <= reach).collect();
        near.sort_by(|a, b| a.value.total_cmp(&b.value));
        near.truncate(10.max(n + 1));
        let Some(step) = proximal_step(&near, rho) else {
            rho *= 0.25;
            continue;
        };
        stationarity = step.stationarity;
        let len = norm(&step.d);
        let pred = step.model - f;
        if len <= opts.tol * diam || pred <= 1e-15 || g * rho <= opts.tol * diam {
            last_step = len;
            converged = true;
            break;
        }
        let trial: Vec<f64> = p.iter().zip(&step.d).map(|(x, d)| x + d).collect();
        evals += 1;
        let dirs: Vec<Direction> = cur.iter().map(|e| e.direction.clone()).collect();
        let Some(mut next) = branches_at(body, volume, &trial, &dirs, descent, dedup) else {
            rho *= 0.25;
            continue;
        };
        let mut ratio = (lowest(&next) - f) / pred;
        if ratio > 0.1 {
            evals += 1;
            if let Some((_, found)) = global_branches(body, volume, &trial, opts) {
                let fresh: Vec<Direction> = found
                    .iter()
                    .filter(|e| cur.iter().all(|o| o.direction.angle_to(&e.direction) > dedup))
                    .map(|e| e.direction.clone())
                    .collect();
                merge_branches(&mut next, found, dedup);
                ratio = (lowest(&next) - f) / pred;
                if ratio <= 0.1 && !fresh.is_empty() {
                    // the model at p missed these branches
                    if let Some(extra) = branches_at(body, volume, &p, &fresh, descent, dedup) {
                        merge_branches(&mut cur, extra, dedup);
                    }
                }
            }
        }
        if ratio > 0.1 {
            p = trial;
            cur = next;
            last_step = len;
        }
        if ratio > 0.75 {
            rho = (2.0 * rho).min(0.2 * diam / g);
        } else if ratio < 0.25 {
            rho *= 0.25;
        }
    }
    Some(Ascent {
        value: lowest(&cur),
        branches: cur.iter().map(|e| e.direction.clone()).collect(),
        point: p,
        last_step,
        stationarity,
        converged,
        evals,
    })
}

struct ProximalStep {
    d: Vec<f64>,
    /// Value of the linearized envelope at `d`.
    model: f64,
    /// `|Σ w_i ∇g_i|` for the optimal weights.
    stationarity: f64,
}

/// Maximizer of `min_i (v_i + <∇g_i, d>) - |d|² / 2ρ`, through its dual
/// `min_{w ∈ simplex} ρ/2 |Σ w_i ∇g_i|² + Σ w_i v_i` with `d = ρ Σ w_i ∇g_i`.
/// The dual is solved exactly by enumerating supports of size at most `n + 1`.
fn proximal_step(branches: &[&BranchEval], rho: f64) -> Option<ProximalStep> {
    let m = branches.len();
    if m == 0 {
        return None;
    }
    let n = branches[0].grad.len();
    let gram = DMatrix::<f64>::from_fn(m, m, |i, j| dot(&branches[i].grad, &branches[j].grad));
    let v: Vec<f64> = branches.iter().map(|e| e.value).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in 1..=m.min(n + 1) {
        for_each_subset(m, s, &mut |support: &[usize]| {
            let mut a = DMatrix::<f64>::zeros(s + 1, s + 1);
            let mut rhs = DVector::<f64>::zeros(s + 1);
            for (r, &i) in support.iter().enumerate() {
                for (c, &j) in support.iter().enumerate() {
                    a[(r, c)] = rho * gram[(i, j)];
                }
                a[(r, s)] = -1.0;
                a[(s, r)] = 1.0;
                rhs[r] = -v[i];
            }
            rhs[s] = 1.0;
            let Some(x) = a.lu().solve(&rhs) else { return };
            if (0..s).any(|r| !x[r].is_finite() || x[r] < -1e-12) {
                return;
            }
            let mut w = vec![0.0; m];
            for (r, &i) in support.iter().enumerate() {
                w[i] = x[r].max(0.0);
            }
            let lambda = x[s];
            let gw = &gram * DVector::from_column_slice(&w);
            // optimality off the support: no other branch has a smaller reduced cost
            if (0..m).any(|j| !support.contains(&j) && rho * gw[j] + v[j] < lambda - 1e-12) {
                return;
            }
            let obj = 0.5 * rho * w.iter().zip(gw.iter()).map(|(a, b)| a * b).sum::<f64>() + dot(&w, &v);
            if best.as_ref().is_none_or(|b| obj < b.0) {
                best = Some((obj, w));
            }
        });
    }
    let (_, w) = best?;
    let mut combo = vec![0.0; n];
    for (wi, e) in w.iter().zip(branches) {
        for (c, g) in combo.iter_mut().zip(&e.grad) {
            *c += wi * g;
        }
    }
    let d = scale(&combo, rho);
    let model = branches
        .iter()
        .map(|e| e.value + dot(&e.grad, &d))
        .fold(f64::INFINITY, f64::min);
    Some(ProximalStep {
        stationarity: norm(&combo),
        d,
        model,
    })
}

/// Calls `f` on every increasing `k`-subset of `0..m`.
fn for_each_subset(m: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == 0 || k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == m - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

struct KktPoint {
    point: Vec<f64>,
    residual: f64,
}

/// Newton's method on the optimality conditions of `max_p min_i g_i(p)`:
/// `g_i(p) = t` on the active set, `Σ w_i ∇g_i = 0`, `Σ w_i = 1`, with branch
/// Hessians from central differences of the exact branch gradients. The
/// active set starts from the branches near the minimum and is corrected by
/// dropping negative weights and adding branches that dip below `t`.
///
/// A value-only search pins the position down only to the square root of the
/// value noise along directions where `dep` is flat to second order; solving
/// the optimality conditions directly does not have that limit.
fn kkt_polish(
    body: &Polytope,
    volume: f64,
    start: &[f64],
    branches: &[Direction],
    descent: &DescentOptions,
    diam: f64,
) -> Option<KktPoint> {
    let n = start.len();
    let field_at = |p: &[f64]| DepthField::with_volume(body, p, volume).ok();
    let mut p = start.to_vec();
    let mut dirs: Vec<Direction> = branches.to_vec();
    let field = field_at(&p)?;
    let evals: Vec<BranchEval> = dirs.iter().map(|d| branch_at(&field, d, descent)).collect();
    for (d, e) in dirs.iter_mut().zip(&evals) {
        *d = e.direction.clone();
    }
    let lowest = evals.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let mut active: Vec<usize> = (0..dirs.len()).filter(|&i| evals[i].value <= lowest + 1e-4).collect();
    let h = 1e-5 * diam;

    for _round in 0..8 {
        if active.is_empty() {
            return None;
        }
        let k = active.len();
        let field = field_at(&p)?;
        let cur: Vec<BranchEval> = active.iter().map(|&i| branch_at(&field, &dirs[i], descent)).collect();
        let grads: Vec<&[f64]> = cur.iter().map(|e| e.grad.as_slice()).collect();
        let mut w: Vec<f64> = affine_min_norm(&grads, &(0..k).collect::<Vec<_>>())
            .into_iter()
            .map(|x| x.max(0.0))
            .collect();
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            w = vec![1.0 / k as f64; k];
        } else {
            w.iter_mut().for_each(|x| *x /= total);
        }
        let mut t = cur.iter().map(|e| e.value).sum::<f64>() / k as f64;

        let kkt = |p: &[f64], t: f64, w: &[f64], dirs: &mut Vec<Direction>| -> Option<(Vec<f64>, Vec<BranchEval>)> {
            let field = field_at(p)?;
            let cur: Vec<BranchEval> = active.iter().map(|&i| branch_at(&field, &dirs[i], descent)).collect();
            for (&i, e) in active.iter().zip(&cur) {
                dirs[i] = e.direction.clone();
            }
            let mut f: Vec<f64> = cur.iter().map(|e| e.value - t).collect();
            for c in 0..n {
                f.push(cur.iter().zip(w).map(|(e, wi)| wi * e.grad[c]).sum());
            }
            f.push(w.iter().sum::<f64>() - 1.0);
            Some((f, cur))
        };

        let (mut f, mut cur) = kkt(&p, t, &w, &mut dirs)?;
        for _ in 0..40 {
            // Hessian of Σ w_i g_i by central differences of the branch gradients
            let mut hess = DMatrix::<f64>::zeros(n, n);
            for c in 0..n {
                let mut plus = p.clone();
                plus[c] += h;
                let mut minus = p.clone();
                minus[c] -= h;
                let fp = field_at(&plus)?;
                let fm = field_at(&minus)?;
                for (j, &i) in active.iter().enumerate() {
                    let gp = branch_at(&fp, &dirs[i], descent).grad;
                    let gm = branch_at(&fm, &dirs[i], descent).grad;
                    for r in 0..n {
                        hess[(r, c)] += w[j] * (gp[r] - gm[r]) / (2.0 * h);
                    }
                }
            }
            let hess = (&hess + hess.transpose()) * 0.5;

            let size = n + 1 + k;
            let mut jac = DMatrix::<f64>::zeros(size, size);
            for (j, e) in cur.iter().enumerate() {
                for c in 0..n {
                    jac[(j, c)] = e.grad[c];
                }
                jac[(j, n)] = -1.0;
            }
            for r in 0..n {
                for c in 0..n {
                    jac[(k + r, c)] = hess[(r, c)];
                }
                for (j, e) in cur.iter().enumerate() {
                    jac[(k + r, n + 1 + j)] = e.grad[r];
                }
            }
            for j in 0..k {
                jac[(k + n, n + 1 + j)] = 1.0;
            }
            let rhs = DVector::from_iterator(size, f.iter().map(|x| -x));
            let step = jac.svd(true, true).solve(&rhs, 1e-14).ok()?;
            let dp: Vec<f64> = (0..n).map(|c| step[c]).collect();
            let cap = 0.02 * diam;
            let shrink = if norm(&dp) > cap { cap / norm(&dp) } else { 1.0 };

            let f_norm = norm(&f);
            let mut accepted = false;
            let mut a = shrink;
            for _ in 0..20 {
                let p_new: Vec<f64> = p.iter().zip(&dp).map(|(x, d)| x + a * d).collect();
                let t_new = t + a * step[n];
                let w_new: Vec<f64> = w.iter().enumerate().map(|(j, x)| x + a * step[n + 1 + j]).collect();
                let mut trial_dirs = dirs.clone();
                if let Some((f_new, cur_new)) = kkt(&p_new, t_new, &w_new, &mut trial_dirs) {
                    if norm(&f_new) < f_norm || norm(&f_new) <= 1e-14 {
                        p = p_new;
                        t = t_new;
                        w = w_new;
                        f = f_new;
                        cur = cur_new;
                        dirs = trial_dirs;
                        accepted = true;
                        break;
                    }
                }
                a *= 0.5;
            }
            if !accepted || a * norm(&dp) <= 1e-15 * diam {
                break;
            }
        }

        // active-set corrections
        if let Some((j, _)) = w
            .iter()
            .enumerate()
            .filter(|(_, x)| **x < -1e-10)
            .min_by(|a, b| a.1.total_cmp(b.1))
        {
            active.remove(j);
            continue;
        }
        let field = field_at(&p)?;
        let all: Vec<BranchEval> = dirs.iter().map(|d| branch_at(&field, d, descent)).collect();
        let violated: Vec<usize> = (0..dirs.len())
            .filter(|i| !active.contains(i) && all[*i].value < t - 1e-12)
            .filter(|&i| active.iter().all(|&a| all[a].direction.angle_to(&all[i].direction) > 1e-4))
            .collect();
        if let Some(&i) = violated.iter().min_by(|a, b| all[**a].value.total_cmp(&all[**b].value)) {
            active.push(i);
            continue;
        }
        let residual = norm(&f);
        return (residual <= 1e-10).then_some(KktPoint { point: p, residual });
    }
    None
}

/// Whether the origin lies in the convex hull of `dirs` (distance ≤ 1e-8),
/// via Wolfe's minimum-norm-point algorithm.
pub fn origin_in_hull(dirs: &[Direction]) -> Result<bool> {
    Ok(hull_distance_to_origin(dirs)? <= 1e-8)
}

/// Distance from the origin to the convex hull of the given points.
pub fn hull_distance_to_origin(dirs: &[Direction]) -> Result<f64> {
    let pts: Vec<&[f64]> = dirs.iter().map(|d| d.as_slice()).collect();
    if pts.is_empty() {
        return Err(Error::EmptyList);
    }
    let eps = 1e-14;
    let mut set: Vec<usize> = vec![0];
    let mut lambda: Vec<f64> = vec![1.0];
    let combo = |set: &[usize], lam: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; pts[0].len()];
        for (&i, &l) in set.iter().zip(lam) {
            x.iter_mut().zip(pts[i]).for_each(|(xi, pi)| *xi += l * pi);
        }
        x
    };
    let mut x = combo(&set, &lambda);
    for _ in 0..1000 {
        let xx = dot(&x, &x);
        let (j, xj) = (0..pts.len())
            .map(|i| (i, dot(&x, pts[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if xx - xj <= eps || set.contains(&j) {
            break;
        }
        set.push(j);
        lambda.push(0.0);
        loop {
            let mu = affine_min_norm(&pts, &set);
            if mu.iter().all(|&m| m > eps) {
                lambda = mu;
                break;
            }
            let mut theta: f64 = 1.0;
            for (l, m) in lambda.iter().zip(&mu) {
                if *m <= eps {
                    theta = theta.min(l / (l - m));
                }
            }
            lambda = lambda.iter().zip(&mu).map(|(l, m)| l + theta * (m - l)).collect();
            let keep: Vec<bool> = lambda.iter().map(|&l| l > eps).collect();
            set = set.iter().zip(&keep).filter(|(_, k)| **k).map(|(s, _)| *s).collect();
            lambda = lambda.iter().zip(&keep).filter(|(_, k)| **k).map(|(l, _)| *l).collect();
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
        }
        x = combo(&set, &lambda);
    }
    Ok(norm(&x))
}

/// Affine combination of `pts[set]` closest to the origin.
fn affine_min_norm(pts: &[&[f64]], set: &[usize]) -> Vec<f64> {
    let k = set.len();
    let mut a = DMatrix::<f64>::zeros(k + 1, k + 1);
    for (r, &i) in set.iter().enumerate() {
        for (c, &j) in set.iter().enumerate() {
            a[(r, c)] = dot(pts[i], pts[j]);
        }
        a[(r, k)] = 1.0;
        a[(k, r)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .expect("svd solve");
    (0..k).map(|i| sol[i]).collect()
}

/// CSV dump of a sphere field: `v1..vn, value, grad_norm, residual_norm`.
pub fn field_csv<F: SphereField + ?Sized>(field: &F, dirs: &[Direction]) -> Result<String> {
    let n = field.dim();
    let rows: Vec<(f64, f64, f64)> = dirs
        .par_iter()
        .map(|v| {
            let (f, g) = field.value_and_gradient(v);
            (f, norm(&g), field.residual_norm(v))
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
    header.extend(["value", "grad_norm", "residual_norm"].map(String::from));
    w.write_record(&header).map_err(|e| Error::Parse(e.to_string()))?;
    for (v, (f, g, r)) in dirs.iter().zip(rows) {
        let mut rec: Vec<String> = v.as_slice().iter().map(|x| format!("{x:.17e}")).collect();
        rec.extend([f, g, r].map(|x| format!("{x:.17e}")));
        w.write_record(&rec).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii csv"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist;
    use crate::bodies::{make_body, BodyKind, BodySpec};

    #[test]
    fn cube_axis_depth_is_half() {
        let cube = make_body(&BodySpec::new(BodyKind::Cube)).unwrap();
        let f = DepthField::new(&cube, &[0.0; 3]).unwrap();
        let e = f.eval(&Direction::axis(3, 0));
        assert!((e.value - 0.5).abs() < 1e-14);
        assert!(norm(&e.residual) < 1e-14 && norm(&e.chart_gradient) < 1e-14);
        assert!((e.section_measure - 4.0).abs() < 1e-13);
    }

    #[test]
    fn triangle_side_parallel_cut_is_four_ninths() {
        let tri = make_body(&BodySpec::new(BodyKind::Triangle)).unwrap();
        for n in crate::bodies::triangle_inward_normals() {
            let v = Direction::new(n).unwrap();
            let d = depth_value(&tri, &[0.0, 0.0], &v).unwrap();
            assert!((d - 4.0 / 9.0).abs() < 1e-14, "{d}");
            assert!((depth_value(&tri, &[0.0, 0.0], &v.neg()).unwrap() - 5.0 / 9.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exterior_point_rejected() {
        let cube = make_body(&BodySpec::new(BodyKind::Cube)).unwrap();
        let v = Direction::axis(3, 0);
        assert!(matches!(depth_value(&cube, &[1.0, 0.0, 0.0], &v), Err(Error::NotInterior)));
        assert!(matches!(depth_value(&cube, &[3.0, 0.0, 0.0], &v), Err(Error::NotInterior)));
    }

    #[test]
    fn hull_membership_cases() {
        let tri: Vec<Direction> = crate::bodies::triangle_inward_normals()
            .into_iter()
            .map(|n| Direction::new(n).unwrap())
            .collect();
        assert!(origin_in_hull(&tri).unwrap());
        let u = Direction::new(vec![0.3, 0.4, 0.5]).unwrap();
        assert!(origin_in_hull(&[u.clone(), u.neg()]).unwrap());
        assert!(!origin_in_hull(std::slice::from_ref(&u)).unwrap());
        let two = [Direction::axis(3, 0), Direction::axis(3, 1)];
        assert!((hull_distance_to_origin(&two).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(matches!(origin_in_hull(&[]), Err(Error::EmptyList)));
    }

    #[test]
    fn proximal_step_balances_two_branches() {
        let mk = |value: f64, grad: Vec<f64>| BranchEval {
            direction: Direction::axis(2, 0),
            value,
            grad,
        };
        let a = mk(0.0, vec![1.0, 0.0]);
        let b = mk(0.1, vec![-1.0, 0.0]);
        let s = proximal_step(&[&a, &b], 1.0).unwrap();
        assert!(dist(&s.d, &[0.05, 0.0]) < 1e-14);
        assert!((s.model - 0.05).abs() < 1e-14);
        // a third branch far above the others does not enter the step
        let c = mk(5.0, vec![0.0, 1.0]);
        let t = proximal_step(&[&a, &b, &c], 1.0).unwrap();
        assert!(dist(&t.d, &s.d) < 1e-14);
    }
}
