//! A synthetic odd field on S^{n-1} with fully known critical structure.
//!
//! Split R^n = R^{n-2} × R² as x = (y, z) and set
//!
//! δ''(y, z) = (1/10)(2|y| - |y|³) y₁ + (1/2)|z| Re(z³).
//!
//! On the sphere it is the convex combination with weights (1 - |z|⁴, |z|⁴)
//! of (1/10) y₁/|y| and (1/2) Re((z/|z|)³). Its critical points are three
//! minima (0, e^{i(2k+1)π/3}) at -1/2, three maxima (0, e^{i2kπ/3}) at 1/2
//! and the pair (±e₁, 0) at ±1/10. δ' = δ''/2 + 1/2 satisfies δ'(v) = 1 - δ'(-v).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::critical::{find_critical_directions, CriticalKind, CriticalSearch, FindOptions, SphereField};
use crate::depth::origin_in_hull;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::sphere::{tangent_basis, tangent_residual, Direction};

/// A point of R^{n-2} × R².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPoint {
    pub y: Vec<f64>,
    pub z: [f64; 2],
}

impl SplitPoint {
    /// Splits `x` into its first `n - 2` and last two coordinates.
    pub fn from_slice(x: &[f64]) -> Result<Self> {
        if x.len() < 3 {
            return Err(Error::DimensionTooSmall(x.len()));
        }
        let k = x.len() - 2;
        Ok(Self {
            y: x[..k].to_vec(),
            z: [x[k], x[k + 1]],
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.y.clone();
        v.extend(self.z);
        v
    }

    pub fn dim(&self) -> usize {
        self.y.len() + 2
    }
}

fn split(x: &[f64]) -> (&[f64], f64, f64) {
    let k = x.len() - 2;
    (&x[..k], x[k], x[k + 1])
}

fn re_cube(z1: f64, z2: f64) -> f64 {
    z1 * z1 * z1 - z1 * z2 * z2 - 2.0 * z1 * z2 * z2
}

fn eval_pp(x: &[f64]) -> f64 {
    let (y, z1, z2) = split(x);
    let r = norm(y);
    let rho = z1.hypot(z2);
    0.1 * (2.0 * r - r * r * r) * y[0] + 0.5 * rho * re_cube(z1, z2)
}

fn grad_pp(x: &[f64]) -> Vec<f64> {
    let (y, z1, z2) = split(x);
    let r = norm(y);
    let rho = z1.hypot(z2);
    let mut g = vec![0.0; x.len()];
    // d/dy_k [(2r - r³) y₁] = (2 - 3r²)(y_k / r) y₁ + (2r - r³)[k = 1]; both terms vanish as r -> 0
    if r > 0.0 {
        for (k, yk) in y.iter().enumerate() {
            g[k] = 0.1 * (2.0 - 3.0 * r * r) * (yk / r) * y[0];
        }
        g[0] += 0.1 * (2.0 * r - r * r * r);
    }
    if rho > 0.0 {
        let re = re_cube(z1, z2);
        let k = y.len();
        g[k] = 0.5 * ((z1 / rho) * re + rho * (3.0 * z1 * z1 - 3.0 * z2 * z2));
        g[k + 1] = 0.5 * ((z2 / rho) * re - rho * 6.0 * z1 * z2);
    }
    g
}

pub fn delta_pp(x: &SplitPoint) -> f64 {
    eval_pp(&x.to_vec())
}

fn check_on_sphere(x: &[f64]) -> Result<()> {
    let len = norm(x);
    if (len - 1.0).abs() > 1e-12 {
        return Err(Error::OffSphere(len));
    }
    Ok(())
}

/// Branchwise evaluation on the sphere as a convex combination of the two slice values.
pub fn delta_pp_piecewise(x: &SplitPoint) -> Result<f64> {
    let v = x.to_vec();
    check_on_sphere(&v)?;
    let r = norm(&x.y);
    let [z1, z2] = x.z;
    let rho = z1.hypot(z2);
    if r == 0.0 {
        return Ok(0.5 * re_cube(z1 / rho, z2 / rho));
    }
    if rho == 0.0 {
        return Ok(0.1 * x.y[0] / r);
    }
    let w = rho.powi(4);
    Ok((1.0 - w) * 0.1 * x.y[0] / r + w * 0.5 * re_cube(z1 / rho, z2 / rho))
}

pub fn delta_p(x: &SplitPoint) -> Result<f64> {
    check_on_sphere(&x.to_vec())?;
    Ok(0.5 * delta_pp(x) + 0.5)
}

/// Ambient gradient of δ'' on R^n \ {0}.
pub fn grad_delta_pp(x: &SplitPoint) -> Result<Vec<f64>> {
    let v = x.to_vec();
    if norm(&v) == 0.0 {
        return Err(Error::OriginUndefined);
    }
    Ok(grad_pp(&v))
}

/// Sphere-tangential gradient of δ'' at a unit vector.
pub fn tangent_grad_delta_pp(v: &Direction) -> Vec<f64> {
    tangent_residual(v, &grad_pp(v.as_slice()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KnownCritical {
    pub point: SplitPoint,
    pub value: f64,
    pub kind: CriticalKind,
}

pub fn known_critical_set(n: usize) -> Result<Vec<KnownCritical>> {
    if n < 3 {
        return Err(Error::DimensionTooSmall(n));
    }
    let mut out = Vec::with_capacity(8);
    for k in 0..3 {
        for (odd, value, kind) in [(1.0, -0.5, CriticalKind::Minimum), (0.0, 0.5, CriticalKind::Maximum)] {
            let a = (2.0 * k as f64 + odd) * std::f64::consts::PI / 3.0;
            out.push(KnownCritical {
                point: SplitPoint {
                    y: vec![0.0; n - 2],
                    z: [a.cos(), a.sin()],
                },
                value,
                kind,
            });
        }
    }
    for s in [1.0, -1.0] {
        let mut y = vec![0.0; n - 2];
        y[0] = s;
        out.push(KnownCritical {
            point: SplitPoint { y, z: [0.0, 0.0] },
            value: 0.1 * s,
            kind: CriticalKind::SaddleOrOther,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "shift")]
pub enum SyntheticVariant {
    /// δ''.
    DeltaPP,
    /// δ' = δ''/2 + 1/2.
    DeltaP,
    /// δ'' + c·y₁, a deliberately wrong field for negative controls.
    Shifted(f64),
}

/// The synthetic fields restricted to S^{n-1}.
#[derive(Clone, Copy, Debug)]
pub struct SyntheticField {
    pub dim: usize,
    pub variant: SyntheticVariant,
}

impl SyntheticField {
    pub fn new(dim: usize, variant: SyntheticVariant) -> Result<Self> {
        if dim < 3 {
            return Err(Error::DimensionTooSmall(dim));
        }
        Ok(Self { dim, variant })
    }

    fn ambient_value(&self, x: &[f64]) -> f64 {
        match self.variant {
            SyntheticVariant::DeltaPP => eval_pp(x),
            SyntheticVariant::DeltaP => 0.5 * eval_pp(x) + 0.5,
            SyntheticVariant::Shifted(c) => eval_pp(x) + c * x[0],
        }
    }

    fn ambient_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = grad_pp(x);
        match self.variant {
            SyntheticVariant::DeltaPP => {}
            SyntheticVariant::DeltaP => g.iter_mut().for_each(|gi| *gi *= 0.5),
            SyntheticVariant::Shifted(c) => g[0] += c,
        }
        g
    }
}

impl SphereField for SyntheticField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, v: &Direction) -> f64 {
        self.ambient_value(v.as_slice())
    }

    fn gradient(&self, v: &Direction) -> Vec<f64> {
        tangent_residual(v, &self.ambient_gradient(v.as_slice()))
    }

    fn noise_floor(&self) -> f64 {
        1e-15
    }
}

/// Central-difference check of a field's gradient along great circles.
/// Returns the worst error relative to the gradient norm.
pub fn gradient_contract_error<F: SphereField + ?Sized>(field: &F, dirs: &[Direction], step: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for v in dirs {
        let g = field.gradient(v);
        let scale = norm(&g).max(1e-6);
        for t in tangent_basis(v) {
            let fp = field.value(&v.exp(&t.iter().map(|x| step * x).collect::<Vec<_>>()));
            let fm = field.value(&v.exp(&t.iter().map(|x| -step * x).collect::<Vec<_>>()));
            let fd = (fp - fm) / (2.0 * step);
            worst = worst.max((fd - dot(&g, &t)).abs() / scale);
        }
    }
    worst
}

/// Seeded random directions (Gaussian, normalized).
pub fn random_directions(count: usize, dim: usize, seed: u64) -> Vec<Direction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        if let Ok(d) = Direction::new(g) {
            out.push(d);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticReport {
    pub dim: usize,
    pub variant: SyntheticVariant,
    pub properties: Vec<PropertyCheck>,
    pub clusters: usize,
    pub minima: usize,
    pub maxima: usize,
    pub others: usize,
    pub unconverged: usize,
    pub gamma_floor: Option<f64>,
    pub all_passed: bool,
    #[serde(skip)]
    pub search: Option<CriticalSearch>,
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub find: FindOptions,
    pub antipodal_samples: usize,
    pub contract_samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            find: FindOptions::default(),
            antipodal_samples: 10_000,
            contract_samples: 200,
            seed: 7,
        }
    }
}

/// Checks properties (i)–(v) for δ' in dimension `n`.
pub fn verify_synthetic_properties(n: usize) -> Result<SyntheticReport> {
    verify_variant(n, SyntheticVariant::DeltaP, &VerifyOptions::default())
}

/// Property harness for any synthetic variant; critical structure is read
/// off the variant itself, the antipodal identity off its δ'-style rescaling.
///
/// (i) f'(v) + f'(-v) = 1 with f' = f/2 + 1/2; (ii) the origin lies in the hull
/// of the global minima; (iii) exactly three global minima, matching the known
/// ones; (iv) the gradient passes the finite-difference contract; (v) beyond
/// the global minima and maxima there is exactly one antipodal pair of critical points.
pub fn verify_variant(n: usize, variant: SyntheticVariant, opts: &VerifyOptions) -> Result<SyntheticReport> {
    let field = SyntheticField::new(n, variant)?;
    let known = known_critical_set(n)?;
    let mut props = Vec::new();

    let sample = random_directions(opts.antipodal_samples, n, opts.seed);
    let as_prime = |v: &Direction| match variant {
        SyntheticVariant::DeltaP => field.value(v),
        _ => 0.5 * field.value(v) + 0.5,
    };
    let anti = sample
        .iter()
        .map(|v| (as_prime(v) + as_prime(&v.neg()) - 1.0).abs())
        .fold(0.0, f64::max);
    props.push(PropertyCheck {
        name: "antipodal_identity".into(),
        passed: anti <= 1e-12,
        measured: anti,
        threshold: 1e-12,
        detail: format!("max |f'(v) + f'(-v) - 1| over {} random directions", sample.len()),
    });

    let search = find_critical_directions(&field, &opts.find);
    let lo = search.isolated().map(|p| p.value).fold(f64::INFINITY, f64::min);
    let hi = search.isolated().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max);
    let minima: Vec<&crate::critical::CriticalPoint> = search
        .isolated()
        .filter(|p| p.kind == CriticalKind::Minimum && p.value <= lo + 1e-8)
        .collect();
    let maxima: Vec<&crate::critical::CriticalPoint> = search
        .isolated()
        .filter(|p| p.kind == CriticalKind::Maximum && p.value >= hi - 1e-8)
        .collect();
    let others: Vec<&crate::critical::CriticalPoint> = search
        .points
        .iter()
        .filter(|p| !minima.iter().chain(&maxima).any(|q| std::ptr::eq(*q, *p)))
        .collect();

    let min_dirs: Vec<Direction> = minima.iter().map(|p| p.direction.clone()).collect();
    let in_hull = !min_dirs.is_empty() && origin_in_hull(&min_dirs)?;
    props.push(PropertyCheck {
        name: "origin_in_hull_of_minima".into(),
        passed: in_hull,
        measured: if min_dirs.is_empty() {
            f64::INFINITY
        } else {
            crate::depth::hull_distance_to_origin(&min_dirs)?
        },
        threshold: 1e-8,
        detail: format!("{} global minima", min_dirs.len()),
    });

    let known_min: Vec<Vec<f64>> = known
        .iter()
        .filter(|k| k.kind == CriticalKind::Minimum)
        .map(|k| k.point.to_vec())
        .collect();
    let worst_match = minima
        .iter()
        .map(|p| {
            known_min
                .iter()
                .map(|k| crate::sphere::geodesic_distance(p.direction.as_slice(), k))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let three = minima.len() == 3 && worst_match <= 1e-6 && !search.globally_degenerate;
    props.push(PropertyCheck {
        name: "three_minima".into(),
        passed: three,
        measured: minima.len() as f64,
        threshold: 3.0,
        detail: format!("largest angle to a known minimum {worst_match:.3e}"),
    });

    let contract_dirs = random_directions(opts.contract_samples, n, opts.seed + 1);
    let contract = gradient_contract_error(&field, &contract_dirs, 1e-5);
    props.push(PropertyCheck {
        name: "gradient_contract".into(),
        passed: contract <= 1e-4,
        measured: contract,
        threshold: 1e-4,
        detail: "central differences along great circles, step 1e-5".into(),
    });

    let pair = others.len() == 2
        && others.iter().all(|p| p.family_id.is_none())
        && others[0].direction.angle_to(&others[1].direction.neg()) <= 1e-3;
    props.push(PropertyCheck {
        name: "one_extra_antipodal_pair".into(),
        passed: pair && search.families.is_empty(),
        measured: others.len() as f64,
        threshold: 2.0,
        detail: format!("{} critical points beyond global extrema", others.len()),
    });

    Ok(SyntheticReport {
        dim: n,
        variant,
        all_passed: props.iter().all(|p| p.passed),
        properties: props,
        clusters: search.points.len(),
        minima: minima.len(),
        maxima: maxima.len(),
        others: others.len(),
        unconverged: search.unconverged,
        gamma_floor: search.gamma_floor,
        search: Some(search),
    })
}
