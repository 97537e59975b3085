//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use barycut::bodies::{make_body, triangle_inward_normals, triangle_vertices, BodyKind, BodySpec};
use barycut::critical::{
    find_critical_directions, group_hyperplanes, mountain_pass, CriticalKind, FindOptions, MountainPassOptions,
};
use barycut::depth::{max_depth_point, origin_in_hull, DepthField, MedianOptions, MedianResult};
use barycut::geometry::{section, Polytope};
use barycut::linalg::{dist, norm};
use barycut::recipes::{self, RunConfig};
use barycut::sphere::{chart_from_plane, chart_to_plane, ChartCoords, Direction};
use barycut::synthetic::{
    delta_pp, delta_pp_piecewise, grad_delta_pp, random_directions, SplitPoint, SyntheticField, SyntheticVariant,
};

mod common;

use common::widest_path_value;

struct Case {
    name: String,
    body: Polytope,
    median: MedianResult,
}

struct Verdict {
    passed: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            passed: true,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, note: impl Into<String>) {
        if !ok {
            self.passed = false;
            self.notes.push(format!("FAILED {}", note.into()));
        }
    }

    fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }
}

fn median_case(name: &str, spec: &BodySpec) -> Result<Case, String> {
    let body = make_body(spec).map_err(|e| format!("{name}: {e}"))?;
    let median = max_depth_point(&body, &MedianOptions::default()).map_err(|e| format!("{name}: {e}"))?;
    Ok(Case {
        name: name.to_string(),
        body,
        median,
    })
}

fn random_spec(seed: u64) -> BodySpec {
    BodySpec::random(20, seed)
}

/// Distance from `p` to the barycenter of the section through `p` normal to `v`,
/// computed from the section polytope rather than the depth field.
fn section_offset(body: &Polytope, p: &[f64], v: &Direction) -> f64 {
    match section(body, v.as_slice(), p) {
        Ok(sec) => dist(&sec.measure_and_barycenter().1, p),
        Err(_) => f64::INFINITY,
    }
}

/// Up to sign, the smallest angle between two hyperplane normals.
fn plane_angle(a: &Direction, b: &Direction) -> f64 {
    a.angle_to(b).min(a.angle_to(&b.neg()))
}

fn criterion_1(cases: &mut Vec<Case>) -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let case = match median_case("triangle", &BodySpec::new(BodyKind::Triangle)) {
        Ok(c) => c,
        Err(e) => {
            v.check(false, e);
            return v;
        }
    };
    let elapsed = t.elapsed();
    let r = &case.median.result;
    v.check((r.value - 4.0 / 9.0).abs() <= 1e-6, format!("depth {}", r.value));
    v.check(r.argmin_set.len() == 3, format!("argmin size {}", r.argmin_set.len()));
    let mut worst = 0.0f64;
    for (i, a) in r.argmin_set.iter().enumerate() {
        for b in &r.argmin_set[i + 1..] {
            worst = worst.max((a.angle_to(b) - 2.0 * PI / 3.0).abs());
        }
    }
    v.check(worst <= 1e-4, format!("pairwise angle error {worst:.2e}"));
    v.check(elapsed < Duration::from_secs(5), format!("took {elapsed:.2?}"));
    v.note(format!("dep {:.12}, angle err {worst:.1e}, {elapsed:.2?}", r.value));
    cases.push(case);
    v
}

fn criterion_2(cases: &mut Vec<Case>) -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let spec = BodySpec::new(BodyKind::Prism);
    let case = match median_case("prism", &spec) {
        Ok(c) => c,
        Err(e) => {
            v.check(false, e);
            return v;
        }
    };
    let p0 = case.median.point.clone();
    let r = &case.median.result;
    v.check(norm(&p0) <= 1e-6, format!("|p0| {:.2e}", norm(&p0)));
    v.check((r.value - 4.0 / 9.0).abs() <= 1e-6, format!("depth {}", r.value));

    // depth-realizing classes: argmin directions grouped by the plane they define
    let mut classes: Vec<&Direction> = Vec::new();
    for d in &r.argmin_set {
        if classes.iter().all(|c| plane_angle(c, d) > 1e-4) {
            classes.push(d);
        }
    }
    v.check(classes.len() == 3, format!("{} depth-realizing classes", classes.len()));

    let field = match DepthField::new(&case.body, &p0) {
        Ok(f) => f,
        Err(e) => {
            v.check(false, e.to_string());
            return v;
        }
    };
    let h = spec.half_height;
    let base = triangle_vertices(spec.size);
    // height at which the plane {<w, x - p0> = 0} crosses each vertical edge
    let heights = |w: &[f64]| -> Vec<f64> {
        base.iter()
            .map(|b| p0[2] - (w[0] * (b[0] - p0[0]) + w[1] * (b[1] - p0[1])) / w[2])
            .collect()
    };
    let pool = random_directions(20_000, 3, 2024);
    let type_ii: Vec<&Direction> = pool
        .iter()
        .filter(|d| {
            let w = d.as_slice();
            w[2].abs() > 1e-3 && heights(w).iter().all(|z| z.abs() <= 0.95 * h)
        })
        .take(200)
        .collect();
    let worst_half = type_ii
        .iter()
        .map(|d| (field.depth(d) - 0.5).abs())
        .fold(0.0, f64::max);
    v.check(!type_ii.is_empty(), "no type-(ii) samples");
    v.check(worst_half <= 1e-10, format!("type (ii) max |δ - 1/2| {worst_half:.2e}"));

    let type_iii: Vec<&Direction> = pool
        .iter()
        .filter(|d| {
            let w = d.as_slice();
            w[2].abs() >= 0.05 && heights(w).iter().any(|z| z.abs() >= 1.1 * h)
        })
        .take(50)
        .collect();
    let least = type_iii
        .iter()
        .map(|d| section_offset(&case.body, &p0, d))
        .fold(f64::INFINITY, f64::min);
    v.check(type_iii.len() == 50, format!("{} type-(iii) samples", type_iii.len()));
    v.check(least > 1e-4, format!("type (iii) min residual {least:.2e}"));

    let elapsed = t.elapsed();
    v.check(elapsed < Duration::from_secs(60), format!("took {elapsed:.2?}"));
    v.note(format!(
        "|p0| {:.1e}, dep {:.12}, {} classes, {} type-(ii) max {worst_half:.1e}, type-(iii) min {least:.2e}, {elapsed:.2?}",
        norm(&p0),
        r.value,
        classes.len(),
        type_ii.len()
    ));
    cases.push(case);
    v
}

fn criterion_3(cases: &[Case]) -> Verdict {
    let mut v = Verdict::new();
    let mut worst = 0.0f64;
    for c in cases {
        for d in &c.median.result.argmin_set {
            let off = section_offset(&c.body, &c.median.point, d);
            worst = worst.max(off);
            v.check(off <= 1e-6, format!("{}: |cen - p0| {off:.2e}", c.name));
        }
    }
    v.note(format!("{} bodies, worst |cen - p0| {worst:.2e}", cases.len()));
    v
}

/// Central differences of the depth in the chart of record at `d`.
fn fd_chart_gradient(field: &DepthField, d: &Direction, h: f64) -> Vec<f64> {
    let c = chart_to_plane(d, d.chart_axis()).unwrap();
    (0..c.y.len())
        .map(|k| {
            let at = |s: f64| {
                let mut y = c.y.clone();
                y[k] += s;
                field.depth(&chart_from_plane(&ChartCoords { y, ..c.clone() }))
            };
            (at(h) - at(-h)) / (2.0 * h)
        })
        .collect()
}

fn criterion_4() -> Verdict {
    let mut v = Verdict::new();
    let mut worst_rel = 0.0f64;
    let mut checked = 0;
    for seed in 0..20u64 {
        let body = match make_body(&BodySpec::random(20, 1000 + seed)) {
            Ok(b) => b,
            Err(e) => {
                v.check(false, e.to_string());
                continue;
            }
        };
        let p = body.volume_and_barycenter().1;
        let field = DepthField::new(&body, &p).unwrap();
        for d in random_directions(20, 3, 500 + seed) {
            let analytic = field.eval(&d).chart_gradient;
            let fd = fd_chart_gradient(&field, &d, 1e-5);
            let err = dist(&analytic, &fd);
            let scale = norm(&fd);
            let ok = err <= 1e-5 * scale || err <= 1e-8;
            if scale > 0.0 {
                worst_rel = worst_rel.max(err / scale);
            }
            checked += 1;
            v.check(ok, format!("body {seed}: err {err:.2e} vs |fd| {scale:.2e}"));
        }
    }
    v.note(format!("{checked} directions, worst relative error {worst_rel:.2e}"));
    v
}

fn criterion_5(cases: &[Case]) -> Verdict {
    let mut v = Verdict::new();
    let mut sizes = Vec::new();
    for c in cases {
        let r = &c.median.result;
        let inside = origin_in_hull(&r.argmin_set).unwrap_or(false);
        v.check(inside, format!("{}: origin outside hull of argmin", c.name));
        if !r.degenerate_flag {
            v.check(r.argmin_set.len() >= 3, format!("{}: |U| = {}", c.name, r.argmin_set.len()));
        }
        sizes.push(r.argmin_set.len());
    }
    v.note(format!("|U| per body {sizes:?}"));
    v
}

fn criterion_6(cases: &[Case]) -> Verdict {
    let mut v = Verdict::new();
    let mut summary = Vec::new();
    for c in cases.iter().filter(|c| c.body.dim() == 3) {
        let field = DepthField::new(&c.body, &c.median.point).unwrap();
        let search = find_critical_directions(
            &field,
            &FindOptions {
                seeds: 3000,
                screen: true,
                ..Default::default()
            },
        );
        let groups = group_hyperplanes(&search.points, 1e-4);
        let isolated = groups.classes.iter().filter(|k| !k.is_family).count();
        if groups.families > 0 {
            summary.push(format!("{}: continuum", c.name));
        } else {
            v.check(isolated >= 4, format!("{}: {isolated} classes", c.name));
            summary.push(format!("{}: {isolated}", c.name));
        }
    }
    v.note(summary.join(", "));
    v
}

fn split(x: &[f64]) -> SplitPoint {
    SplitPoint::from_slice(x).unwrap()
}

fn criterion_7() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let field = SyntheticField::new(3, SyntheticVariant::DeltaPP).unwrap();
    let search = find_critical_directions(
        &field,
        &FindOptions {
            seeds: 5000,
            ..Default::default()
        },
    );
    // coordinates (y₁, z): δ'' = cos(3θ)/2 on the z-circle, y₁/10 at y₁ = ±1
    let mut expected: Vec<(Vec<f64>, f64, CriticalKind)> = (0..6)
        .map(|k| {
            let a = k as f64 * PI / 3.0;
            let kind = if k % 2 == 0 {
                CriticalKind::Maximum
            } else {
                CriticalKind::Minimum
            };
            (vec![0.0, a.cos(), a.sin()], 0.5 * (3.0 * a).cos(), kind)
        })
        .collect();
    expected.push((vec![1.0, 0.0, 0.0], 0.1, CriticalKind::SaddleOrOther));
    expected.push((vec![-1.0, 0.0, 0.0], -0.1, CriticalKind::SaddleOrOther));

    v.check(search.points.len() == 8, format!("{} clusters", search.points.len()));
    v.check(search.families.is_empty(), "unexpected families");
    let mut worst_value = 0.0f64;
    for (x, value, kind) in &expected {
        let target = Direction::new(x.clone()).unwrap();
        match search.points.iter().find(|p| p.direction.angle_to(&target) < 1e-6) {
            Some(p) => {
                worst_value = worst_value.max((p.value - value).abs());
                v.check((p.value - value).abs() <= 1e-8, format!("value at {x:?}: {}", p.value));
                v.check(p.kind == *kind, format!("kind at {x:?}: {:?}", p.kind));
            }
            None => v.check(false, format!("no critical point at {x:?}")),
        }
    }

    let samples = random_directions(10_000, 3, 77);
    let mut odd = 0.0f64;
    let mut agree = 0.0f64;
    for d in &samples {
        let x = split(d.as_slice());
        odd = odd.max((delta_pp(&x) + delta_pp(&split(d.neg().as_slice()))).abs());
        agree = agree.max((delta_pp(&x) - delta_pp_piecewise(&x).unwrap()).abs());
    }
    v.check(odd <= 1e-12, format!("oddness {odd:.2e}"));
    v.check(agree <= 1e-12, format!("formula gap {agree:.2e}"));

    let h = 1e-6;
    let mut fd_err = 0.0f64;
    for d in samples.iter().take(500) {
        let x = d.as_slice().to_vec();
        let g = grad_delta_pp(&split(&x)).unwrap();
        for k in 0..3 {
            let mut a = x.clone();
            a[k] += h;
            let mut b = x.clone();
            b[k] -= h;
            let fd = (delta_pp(&split(&a)) - delta_pp(&split(&b))) / (2.0 * h);
            fd_err = fd_err.max((fd - g[k]).abs());
        }
    }
    v.check(fd_err <= 1e-6, format!("gradient FD error {fd_err:.2e}"));
    let gamma = search.gamma_floor.unwrap_or(0.0);
    v.check(gamma > 0.0, format!("γ_floor {gamma}"));
    let elapsed = t.elapsed();
    v.check(elapsed < Duration::from_secs(30), format!("took {elapsed:.2?}"));
    v.note(format!(
        "{} clusters, value err {worst_value:.1e}, odd {odd:.1e}, formulas {agree:.1e}, fd {fd_err:.1e}, γ_floor {gamma:.3e}, {elapsed:.2?}",
        search.points.len()
    ));
    v
}

fn criterion_8() -> Verdict {
    let mut v = Verdict::new();
    let field = SyntheticField::new(3, SyntheticVariant::DeltaPP).unwrap();
    // adjacent maxima of δ'' on the z-circle, 120° apart
    let a = Direction::new(vec![0.0, 1.0, 0.0]).unwrap();
    let b = Direction::new(vec![0.0, -0.5, 3f64.sqrt() / 2.0]).unwrap();
    let base = MountainPassOptions::default();
    let coarse = match mountain_pass(&field, &a, &b, &base) {
        Ok(m) => m,
        Err(e) => {
            v.check(false, e.to_string());
            return v;
        }
    };
    let fine = mountain_pass(
        &field,
        &a,
        &b,
        &MountainPassOptions {
            nodes: 2 * base.nodes,
            ..base.clone()
        },
    );
    let oracle = widest_path_value(&field, &a, &b, 1.0);
    let e1 = Direction::axis(3, 0);
    let angle = plane_angle(&coarse.pass_point.direction, &e1);
    v.check((coarse.s - 0.1).abs() <= 1e-3, format!("s {}", coarse.s));
    v.check(angle <= 1e-2, format!("pass point {angle:.2e} rad from ±e1"));
    v.check((coarse.s - oracle).abs() <= 1e-3, format!("s {} vs grid {oracle}", coarse.s));
    v.check(
        coarse.history.windows(2).all(|w| w[1] >= w[0]),
        "non-monotone history",
    );
    match fine {
        Ok(f) => {
            v.check((f.s - coarse.s).abs() <= 2e-3, format!("refined s {} vs {}", f.s, coarse.s));
            v.note(format!(
                "s {:.6} (grid {oracle:.6}, doubled {:.6}), pass {angle:.1e} rad from e1",
                coarse.s, f.s
            ));
        }
        Err(e) => v.check(false, format!("refined run: {e}")),
    }
    v
}

fn criterion_9(cases: &[Case]) -> Verdict {
    let mut v = Verdict::new();
    let Some(case) = cases.iter().find(|c| c.name == "bipyramid") else {
        v.check(false, "bipyramid median unavailable");
        return v;
    };
    let field = DepthField::new(&case.body, &case.median.point).unwrap();
    let mut planes: Vec<Direction> = triangle_inward_normals()
        .into_iter()
        .map(|n| Direction::new(vec![n[0], n[1], 0.0]).unwrap())
        .collect();
    planes.push(Direction::axis(3, 2));
    let worst = planes
        .iter()
        .map(|d| section_offset(&case.body, &case.median.point, d))
        .fold(0.0, f64::max);
    v.check(worst <= 1e-8, format!("conjectured plane residual {worst:.2e}"));

    let search = find_critical_directions(
        &field,
        &FindOptions {
            seeds: 10_000,
            screen: true,
            ..Default::default()
        },
    );
    let groups = group_hyperplanes(&search.points, 1e-3);
    let extra: Vec<_> = groups
        .classes
        .iter()
        .filter(|k| k.is_family || planes.iter().all(|p| plane_angle(p, &k.representative) > 1e-3))
        .collect();
    v.check(extra.is_empty(), format!("{} extra classes", extra.len()));

    let label = recipes::run(&RunConfig::new(recipes::Command::BipyramidCheck))
        .map(|r| r.result["conjecture_status"].as_str().unwrap_or_default().to_string());
    match label {
        Ok(l) => {
            v.check(l == "consistent-at-resolution", format!("label {l:?}"));
            v.note(format!(
                "residual {worst:.1e}, {} classes from 10⁴ seeds, label {l}",
                groups.distinct_hyperplanes
            ));
        }
        Err(e) => v.check(false, format!("bipyramid-check: {e}")),
    }
    v
}

fn criterion_10() -> Verdict {
    let mut v = Verdict::new();
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 7] = [
        &["depth", "--body", "prism", "--point", "0,0,0"],
        &["median", "--body", "prism"],
        &["cuts", "--body", "prism"],
        &["prism-check"],
        &["bipyramid-check"],
        &["synthetic-verify", "--dim", "3"],
        &["mountain-pass", "--field", "synthetic"],
    ];
    let start = Instant::now();
    for args in runs {
        let t = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_barycut"))
            .args(args)
            .arg("--out")
            .arg(dir.path().join(format!("{}.json", args[0])))
            .output();
        match out {
            Ok(o) => {
                let code = o.status.code();
                v.check(code == Some(0), format!("{} exited {code:?}", args[0]));
                v.note(format!("{} {:.1?}", args[0], t.elapsed()));
            }
            Err(e) => v.check(false, format!("{}: {e}", args[0])),
        }
    }
    let total = start.elapsed();
    v.check(total < Duration::from_secs(300), format!("total {total:.2?}"));
    v.note(format!("total {total:.1?}"));
    v
}

fn main() {
    let mut cases = Vec::new();
    let mut verdicts: Vec<(usize, Verdict)> = Vec::new();
    verdicts.push((1, criterion_1(&mut cases)));
    verdicts.push((2, criterion_2(&mut cases)));

    let mut shared = vec![("bipyramid".to_string(), BodySpec::new(BodyKind::Bipyramid))];
    shared.extend((0..10).map(|s| (format!("random-{s}"), random_spec(s))));
    let mut setup = Verdict::new();
    for (name, spec) in &shared {
        match median_case(name, spec) {
            Ok(c) => cases.push(c),
            Err(e) => setup.check(false, e),
        }
    }

    let with_setup = |mut v: Verdict| {
        if !setup.passed {
            v.passed = false;
            v.notes.extend(setup.notes.iter().cloned());
        }
        v
    };
    verdicts.push((3, with_setup(criterion_3(&cases))));
    verdicts.push((4, criterion_4()));
    verdicts.push((5, with_setup(criterion_5(&cases))));
    verdicts.push((6, with_setup(criterion_6(&cases))));
    verdicts.push((7, criterion_7()));
    verdicts.push((8, criterion_8()));
    verdicts.push((9, criterion_9(&cases)));
    verdicts.push((10, criterion_10()));

    verdicts.sort_by_key(|(id, _)| *id);
    let mut failed = 0;
    for (id, v) in &verdicts {
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id}: {}", v.notes.join("; "));
        if !v.passed {
            failed += 1;
        }
    }
    println!("{}/{} criteria passed", verdicts.len() - failed, verdicts.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
