//! The zonoid with support function `h(x) = E|<x, z>| / 2` and the lower
//! bound on its volume obtained from an explicit inscribed body.
//!
//! The support function depends on `x` only through
//! `rho = (|(x1, x2)|, |(x3, x4)|, |x5|)` in the lower bounds used here, so
//! everything below lives in the nonnegative octant of `rho`-space.

mod hull;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

pub use hull::{integrate_rho1rho2_tets, integrate_tet, tet_volume, Plane, Polytope3, P3};

use crate::distributions::{sample_z, ZVector};
use crate::error::{Error, Result};
use crate::montecarlo::{estimate_abs_det, StreamStats};
use crate::rng::{domain, sample_rng};

/// A direction `x` in R^5 together with its reduced coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportQuery {
    pub x: [f64; 5],
}

impl SupportQuery {
    pub fn rho(&self) -> [f64; 3] {
        let x = &self.x;
        [x[0].hypot(x[1]), x[2].hypot(x[3]), x[4].abs()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// A fixed batch of z-vectors, so that support estimates at different `x`
/// share their random numbers.
#[derive(Debug, Clone)]
pub struct ZSample {
    z: Vec<ZVector>,
}

impl ZSample {
    pub fn new(n: u64, seed: u64) -> Self {
        let z = (0..n).map(|i| sample_z(&mut sample_rng(seed, domain::ZONOID, i))).collect();
        ZSample { z }
    }

    /// Mean of `|<x, z>| / 2` with its standard error.
    pub fn support(&self, x: &[f64; 5]) -> SupportEstimate {
        let s: StreamStats = self
            .z
            .iter()
            .map(|z| 0.5 * (0..5).map(|k| x[k] * z.0[k]).sum::<f64>().abs())
            .collect();
        SupportEstimate { value: s.mean, std_error: s.std_error() }
    }
}

/// Monte Carlo estimate of the support function at `x`.
pub fn support_estimate(x: &[f64; 5], n: u64, seed: u64) -> Result<SupportEstimate> {
    if n == 0 {
        return Err(Error::InvalidValue("n must be at least 1".into()));
    }
    Ok(ZSample::new(n, seed).support(x))
}

/// Complete elliptic integral of the second kind, `int_0^{pi/2} sqrt(1 - m sin^2 t) dt`,
/// by the arithmetic-geometric mean.
#[allow(non_snake_case)]
pub fn elliptic_E(m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::DomainError(format!("elliptic parameter {m} outside [0, 1]")));
    }
    if m == 1.0 {
        return Ok(1.0);
    }
    let mut a = 1.0f64;
    let mut b = (1.0 - m).sqrt();
    let mut c = m.sqrt();
    let mut pow = 0.5;
    let mut sum = pow * c * c;
    for _ in 0..64 {
        if c.abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = 0.5 * (a - b);
        a = an;
        b = bn;
        pow *= 2.0;
        sum += pow * c * c;
    }
    Ok(FRAC_PI_2 / a * (1.0 - sum))
}

/// `(2 / pi^2) sqrt(x^2 + y^2) E(x^2 / (x^2 + y^2))`, a lower bound for the
/// support function in terms of two reduced coordinates.
#[allow(non_snake_case)]
pub fn F_bound(x: f64, y: f64) -> Result<f64> {
    if !(x >= 0.0 && y >= 0.0) {
        return Err(Error::DomainError(format!("F needs nonnegative arguments, got ({x}, {y})")));
    }
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return Err(Error::DomainError("F is undefined at (0, 0)".into()));
    }
    Ok(2.0 / (PI * PI) * r2.sqrt() * elliptic_E((x * x / r2).min(1.0))?)
}

/// Support function of the inscribed body at reduced coordinates `rho >= 0`.
pub fn hl_support(rho: &[f64; 3]) -> f64 {
    let f = |a: f64, b: f64| if a == 0.0 && b == 0.0 { 0.0 } else { F_bound(a, b).unwrap_or(0.0) };
    let c = 2.0 / (PI * PI);
    [0.0, c * rho[0], c * rho[1], rho[2] / PI, f(rho[0], rho[2]), f(rho[1], rho[2])]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Scale from the normalized coordinates of the polytope to `rho`-space.
pub const AXIS_SCALE: [f64; 3] = [2.0 / (PI * PI), 2.0 / (PI * PI), 1.0 / PI];

/// Points of the octant grid obtained by subdividing the octahedron face
/// `k` times and projecting to the sphere.
pub fn octant_grid(k: usize) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity((k + 1) * (k + 2) / 2);
    for i in 0..=k {
        for j in 0..=(k - i) {
            let l = k - i - j;
            let v = [i as f64, j as f64, l as f64];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            out.push([v[0] / n, v[1] / n, v[2] / n]);
        }
    }
    out
}

pub const DEFAULT_GRID: usize = 140;
pub const DEFAULT_REFINE_ITERS: usize = 60;
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub passed: bool,
    /// `min over unit rho >= 0 of h(rho) - <q, rho>`.
    pub margin: f64,
    pub worst_direction: [f64; 3],
}

fn margin_at(q: &[f64; 3], rho: &[f64; 3]) -> f64 {
    hl_support(rho) - (q[0] * rho[0] + q[1] * rho[1] + q[2] * rho[2])
}

fn direction(alpha: f64, beta: f64) -> [f64; 3] {
    let a = alpha.clamp(0.0, FRAC_PI_2);
    let b = beta.clamp(0.0, FRAC_PI_2);
    [b.sin() * a.cos(), b.sin() * a.sin(), b.cos()]
}

fn angles(d: &[f64; 3]) -> (f64, f64) {
    (d[1].atan2(d[0]), d[2].clamp(-1.0, 1.0).acos())
}

/// Certifies `<q, rho> <= h(rho)` on the unit octant by a grid search and a
/// compass-search refinement from the worst grid points.
pub fn membership_check(q: &[f64; 3], grid: usize, refine_iters: usize) -> Membership {
    let mut scored: Vec<(f64, [f64; 3])> = octant_grid(grid.max(1)).into_iter().map(|d| (margin_at(q, &d), d)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut best, mut best_dir) = scored[0];
    let step0 = FRAC_PI_2 / grid.max(1) as f64;
    for (_, start) in scored.iter().take(8) {
        let (mut a, mut b) = angles(start);
        let mut m = margin_at(q, &direction(a, b));
        let mut step = step0;
        for _ in 0..refine_iters {
            let mut moved = false;
            for (da, db) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                let (na, nb) = ((a + da).clamp(0.0, FRAC_PI_2), (b + db).clamp(0.0, FRAC_PI_2));
                let nm = margin_at(q, &direction(na, nb));
                if nm < m {
                    a = na;
                    b = nb;
                    m = nm;
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
                if step < 1e-14 {
                    break;
                }
            }
        }
        if m < best {
            best = m;
            best_dir = direction(a, b);
        }
    }
    Membership { passed: best >= -MEMBERSHIP_TOL, margin: best, worst_direction: best_dir }
}

/// Scales of the generator points of the inscribed polytope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambdas(pub [f64; 5]);

impl Default for Lambdas {
    fn default() -> Self {
        Lambdas([0.73, 0.86, 0.85, 0.966, 0.957])
    }
}

/// A named generator point in normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub label: &'static str,
    pub point: [f64; 3],
}

fn unit(i: usize) -> [f64; 3] {
    let mut e = [0.0; 3];
    e[i] = 1.0;
    e
}

/// The ten scaled points together with the three unit axis points.
pub fn generators(l: &Lambdas) -> Vec<Generator> {
    let [l1, l2, l3, l4, l5] = l.0;
    let mut g = vec![
        Generator { label: "axis1", point: unit(0) },
        Generator { label: "axis2", point: unit(1) },
        Generator { label: "axis3", point: unit(2) },
    ];
    let names = [
        ["l1_i1", "l2_i1", "l3_i1", "l4_i1", "l5_i1"],
        ["l1_i2", "l2_i2", "l3_i2", "l4_i2", "l5_i2"],
    ];
    for (side, labels) in names.iter().enumerate() {
        let p = |a: f64, c: f64| {
            let mut v = [0.0; 3];
            v[side] = a;
            v[2] = c;
            v
        };
        let pts = [
            p(l1, l1),
            p(l2, l2 * 2.0 / 3.0),
            p(l3 * 2.0 / 3.0, l3),
            p(l4, l4 / 3.0),
            p(l5 / 3.0, l5),
        ];
        for (label, point) in labels.iter().zip(pts) {
            g.push(Generator { label, point });
        }
    }
    g
}

/// Generator points of the polytope: origin, axis points and scaled points.
/// The literal set lacks the scaled point on the `(e2 + e3)` diagonal.
pub fn polytope_points(l: &Lambdas, symmetric: bool) -> Vec<[f64; 3]> {
    let mut pts = vec![[0.0; 3]];
    for g in generators(l) {
        if !symmetric && g.label == "l1_i2" {
            continue;
        }
        pts.push(g.point);
    }
    pts
}

pub fn build_polytope(l: &Lambdas, symmetric: bool) -> Result<Polytope3> {
    Polytope3::hull(&polytope_points(l, symmetric))
}

pub fn integrate_rho1rho2(p: &Polytope3) -> f64 {
    integrate_rho1rho2_tets(&p.tetrahedra)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipEntry {
    pub label: String,
    /// Normalized coordinates.
    pub point: [f64; 3],
    /// Coordinates in `rho`-space.
    pub scaled: [f64; 3],
    pub passed: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorChain {
    /// `2 (2 pi)^2` from integrating out the two circle angles and the sign of `x5`.
    pub cylinder: f64,
    /// `(2/pi^2)^4 / pi`: Jacobian of the normalized coordinates times `rho_1 rho_2` scaling.
    pub jacobian: f64,
    /// `5! pi^3 / 4`: expected count per unit zonoid volume.
    pub volume_to_count: f64,
    /// Product of the three.
    pub total: f64,
}

impl Default for FactorChain {
    fn default() -> Self {
        let cylinder = 2.0 * (2.0 * PI).powi(2);
        let jacobian = (2.0 / (PI * PI)).powi(4) / PI;
        let volume_to_count = 120.0 * PI.powi(3) / 4.0;
        FactorChain { cylinder, jacobian, volume_to_count, total: cylinder * jacobian * volume_to_count }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonoidBoundReport {
    pub lambdas: Lambdas,
    pub grid: usize,
    pub memberships: Vec<MembershipEntry>,
    pub all_members: bool,
    /// Integral of `rho_1 rho_2` over the symmetric polytope (headline).
    pub integral_symmetric: f64,
    pub integral_literal: f64,
    pub volume_symmetric: f64,
    pub volume_literal: f64,
    pub factors: FactorChain,
    /// Lower bound on the zonoid volume.
    pub volume_lower_bound: f64,
    /// Lower bound on the expected number of real solutions.
    pub final_bound: f64,
    pub final_bound_literal: f64,
}

/// Full lower-bound pipeline.
pub fn zonoid_lower_bound(l: &Lambdas, grid: usize) -> Result<ZonoidBoundReport> {
    let memberships: Vec<MembershipEntry> = generators(l)
        .into_iter()
        .map(|g| {
            let scaled = [g.point[0] * AXIS_SCALE[0], g.point[1] * AXIS_SCALE[1], g.point[2] * AXIS_SCALE[2]];
            let m = membership_check(&scaled, grid, DEFAULT_REFINE_ITERS);
            MembershipEntry { label: g.label.to_string(), point: g.point, scaled, passed: m.passed, margin: m.margin }
        })
        .collect();
    let all_members = memberships.iter().all(|m| m.passed);
    let sym = build_polytope(l, true)?;
    let lit = build_polytope(l, false)?;
    let integral_symmetric = integrate_rho1rho2(&sym);
    let integral_literal = integrate_rho1rho2(&lit);
    let factors = FactorChain::default();
    let volume_lower_bound = factors.cylinder * factors.jacobian * integral_symmetric;
    Ok(ZonoidBoundReport {
        lambdas: *l,
        grid,
        memberships,
        all_members,
        integral_symmetric,
        integral_literal,
        volume_symmetric: sym.volume(),
        volume_literal: lit.volume(),
        volume_lower_bound,
        final_bound: factors.total * integral_symmetric,
        final_bound_literal: factors.total * integral_literal,
        factors,
    })
}

/// `E|det Z| / 5!`.
pub fn vol_k_estimate(n: u64, seed: u64, workers: usize) -> Result<SupportEstimate> {
    let d = estimate_abs_det(n, seed, workers)?;
    Ok(SupportEstimate { value: d.mean_abs_det / 120.0, std_error: d.se_abs_det / 120.0 })
}
