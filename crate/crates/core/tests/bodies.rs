use barycut::bodies::{make_body, triangle_vertices, BodyKind, BodySpec};
use barycut::critical::SphereField;
use barycut::depth::DepthField;
use barycut::linalg::{dist, norm};
use barycut::synthetic::random_directions;

fn spec(kind: BodyKind) -> BodySpec {
    BodySpec::new(kind)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[test]
fn catalog_volumes_match_closed_forms() {
    let tri_area = 3f64.sqrt() / 4.0;
    let cases: Vec<(BodySpec, f64)> = vec![
        (spec(BodyKind::Triangle), tri_area),
        (BodySpec { half_height: 0.7, ..spec(BodyKind::Prism) }, tri_area * 1.4),
        (spec(BodyKind::Bipyramid), 2.0 / 3.0 * tri_area * (2.0f64 / 3.0).sqrt()),
        (BodySpec { apex_height: Some(2.0), ..spec(BodyKind::Bipyramid) }, 4.0 / 3.0 * tri_area),
        (BodySpec { dim: 4, size: 0.5, ..spec(BodyKind::Cube) }, 1.0),
        (BodySpec { dim: 4, ..spec(BodyKind::CrossPolytope) }, 16.0 / factorial(4)),
    ];
    for (s, expected) in cases {
        let v = make_body(&s).unwrap().volume();
        assert!((v - expected).abs() < 1e-14 * expected.max(1.0), "{s:?}: {v} vs {expected}");
    }
    // regular simplex of circumradius 1: (n+1)^{(n+1)/2} / (n! n^{n/2})
    for n in 2..=5usize {
        let expected = ((n + 1) as f64).powf((n + 1) as f64 / 2.0) / (factorial(n) * (n as f64).powf(n as f64 / 2.0));
        let v = make_body(&BodySpec { dim: n, ..spec(BodyKind::Simplex) }).unwrap().volume();
        assert!((v - expected).abs() < 1e-13, "n = {n}: {v} vs {expected}");
    }
}

#[test]
fn catalog_bodies_are_centered() {
    for kind in [
        BodyKind::Triangle,
        BodyKind::Prism,
        BodyKind::Bipyramid,
        BodyKind::Cube,
        BodyKind::Simplex,
        BodyKind::CrossPolytope,
    ] {
        let c = make_body(&spec(kind)).unwrap().volume_and_barycenter().1;
        assert!(norm(&c) < 1e-14, "{kind:?}: {c:?}");
    }
}

#[test]
fn default_bipyramid_has_equal_edges() {
    let body = make_body(&spec(BodyKind::Bipyramid)).unwrap();
    let v = body.vertices();
    let mut lengths: Vec<f64> = Vec::new();
    for (i, a) in v.iter().enumerate() {
        for b in &v[i + 1..] {
            lengths.push(dist(a, b));
        }
    }
    // nine edges of length 1, and the apex-to-apex diagonal
    let edges = lengths.iter().filter(|l| (**l - 1.0).abs() < 1e-14).count();
    assert_eq!(edges, 9);
    assert_eq!(body.facets().len(), 6);
}

/// The twelve symmetries of T × [-h, h]: rotations by multiples of 120°,
/// the mirror x -> -x, and the flip z -> -z.
fn prism_symmetries() -> Vec<[[f64; 3]; 3]> {
    let mut out = Vec::new();
    for k in 0..3 {
        let a = k as f64 * std::f64::consts::TAU / 3.0;
        let (c, s) = (a.cos(), a.sin());
        for mirror in [1.0, -1.0] {
            for flip in [1.0, -1.0] {
                out.push([[c * mirror, -s, 0.0], [s * mirror, c, 0.0], [0.0, 0.0, flip]]);
            }
        }
    }
    out
}

fn apply(m: &[[f64; 3]; 3], x: &[f64]) -> Vec<f64> {
    (0..3).map(|i| (0..3).map(|j| m[i][j] * x[j]).sum()).collect()
}

#[test]
fn prism_has_order_twelve_symmetry() {
    let body = make_body(&spec(BodyKind::Prism)).unwrap();
    let group = prism_symmetries();
    for (i, g) in group.iter().enumerate() {
        for h in &group[i + 1..] {
            let differ = (0..3).any(|r| (0..3).any(|c| (g[r][c] - h[r][c]).abs() > 1e-12));
            assert!(differ);
        }
    }
    let field = DepthField::new(&body, &[0.0; 3]).unwrap();
    let dirs = random_directions(50, 3, 5);
    for g in &group {
        for x in body.vertices() {
            let y = apply(g, x);
            assert!(body.vertices().iter().any(|v| dist(v, &y) < 1e-12));
        }
        for v in &dirs {
            let w = barycut::sphere::Direction::new(apply(g, v.as_slice())).unwrap();
            assert!((field.value(v) - field.value(&w)).abs() < 1e-13);
        }
    }
}

#[test]
fn random_bodies_are_reproducible_and_inscribed() {
    let a = make_body(&BodySpec::random(30, 9)).unwrap();
    let b = make_body(&BodySpec::random(30, 9)).unwrap();
    let c = make_body(&BodySpec::random(30, 10)).unwrap();
    assert_eq!(a.vertices(), b.vertices());
    assert_ne!(a.vertices(), c.vertices());
    assert!(a.vertices().iter().all(|v| (norm(v) - 1.0).abs() < 1e-14));
    let four = make_body(&BodySpec { dim: 4, ..BodySpec::random(15, 1) }).unwrap();
    assert_eq!(four.dim(), 4);
}

#[test]
fn triangle_has_unit_sides() {
    let t = triangle_vertices(2.0);
    for i in 0..3 {
        assert!((dist(&t[i], &t[(i + 1) % 3]) - 2.0).abs() < 1e-14);
    }
}

#[test]
fn names_and_bad_parameters() {
    for kind in [BodyKind::Prism, BodyKind::CrossPolytope, BodyKind::Random] {
        assert_eq!(kind.name().parse::<BodyKind>().unwrap(), kind);
    }
    assert_eq!("cross-polytope".parse::<BodyKind>().unwrap(), BodyKind::CrossPolytope);
    assert!("dodecahedron".parse::<BodyKind>().is_err());
    assert!(make_body(&BodySpec { size: -1.0, ..spec(BodyKind::Cube) }).is_err());
    assert!(make_body(&BodySpec { half_height: 0.0, ..spec(BodyKind::Prism) }).is_err());
    assert!(make_body(&BodySpec { dim: 9, ..spec(BodyKind::Simplex) }).is_err());
    assert!(make_body(&BodySpec { count: 3, ..BodySpec::random(3, 0) }).is_err());
}
