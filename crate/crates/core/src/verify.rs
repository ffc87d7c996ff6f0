//! Numerical certification of the differential-geometric constants: normal
//! Jacobians of the parametrizations of the essential variety, the volume of
//! the variety, and two determinant identities.
//!
//! Matrices are handled in half-trace-isometric coordinates `vec(M) / sqrt(2)`
//! so that Euclidean geometry of the coordinates is the half-trace geometry.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::{sample_quadric, sample_rotation, sample_unit_vec3, z_matrix, Mat5, QuadricPoint};
use crate::error::{Error, Result};
use crate::geometry::{cross_matrix, e0, so3_generators, tangent_basis_e0, Mat3, Rotation, UnitVec3, Vec3};
use crate::montecarlo::StreamStats;
use crate::rng::{domain, sample_rng};

pub const DEFAULT_STEP: f64 = 1e-5;

/// Orthonormal tangent vectors at a point of a submanifold of `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    base: DVector<f64>,
    vectors: Vec<DVector<f64>>,
}

impl TangentFrame {
    pub fn new(base: DVector<f64>, vectors: Vec<DVector<f64>>) -> Result<Self> {
        if vectors.iter().any(|v| v.len() != base.len()) {
            return Err(Error::DegenerateInput("frame vectors must live in the ambient space of the base point".into()));
        }
        let frame = TangentFrame { base, vectors };
        let err = frame.gram_error();
        if err > 1e-10 {
            return Err(Error::DegenerateInput(format!("frame is not orthonormal (Gram error {err:.3e})")));
        }
        Ok(frame)
    }

    /// The standard basis of `R^n` at `base`.
    pub fn standard(base: DVector<f64>) -> Self {
        let n = base.len();
        let vectors = (0..n).map(|i| DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })).collect();
        TangentFrame { base, vectors }
    }

    pub fn base(&self) -> &DVector<f64> {
        &self.base
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// `max |G - 1|` for the Gram matrix `G`.
    pub fn gram_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - target).abs());
            }
        }
        worst
    }
}

/// Central-difference Jacobian of `map` in the given frames, reduced to the
/// product of its `min(rows, cols)` singular values. `retract(base, d)` moves
/// from the base point along the tangent vector `d`. Without an output frame
/// the Jacobian is taken in the ambient coordinates of the image.
pub fn finite_diff_normal_jacobian<M, R>(
    map: M,
    retract: R,
    frame_in: &TangentFrame,
    frame_out: Option<&TangentFrame>,
    h: f64,
) -> Result<f64>
where
    M: Fn(&DVector<f64>) -> DVector<f64>,
    R: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
{
    if !(1e-7..=1e-4).contains(&h) {
        return Err(Error::InvalidValue(format!("step {h} outside [1e-7, 1e-4]")));
    }
    let cols: Vec<DVector<f64>> = frame_in
        .vectors
        .iter()
        .map(|v| {
            let plus = map(&retract(&frame_in.base, &(v * h)));
            let minus = map(&retract(&frame_in.base, &(v * -h)));
            (plus - minus) / (2.0 * h)
        })
        .collect();
    let ambient = DMatrix::from_columns(&cols);
    let j = match frame_out {
        Some(out) => DMatrix::from_fn(out.dim(), ambient.ncols(), |r, c| out.vectors[r].dot(&ambient.column(c))),
        None => ambient,
    };
    let k = j.nrows().min(j.ncols());
    let sv = j.svd(false, false).singular_values;
    Ok(sv.iter().take(k).product())
}

/// Half-trace-isometric coordinates of a matrix, row-major.
pub fn mat_coords(m: &Mat3) -> [f64; 9] {
    std::array::from_fn(|k| m[(k / 3, k % 3)] / SQRT_2)
}

pub fn coords_mat(c: &[f64]) -> Mat3 {
    Mat3::from_fn(|i, j| c[3 * i + j] * SQRT_2)
}

fn push_mat(v: &mut Vec<f64>, m: &Mat3) {
    v.extend_from_slice(&mat_coords(m));
}

/// Moves a rotation along the ambient tangent vector `d = A R`.
fn retract_rotation(r: &Mat3, d: &Mat3) -> Mat3 {
    let a = d * r.transpose();
    let skew = (a - a.transpose()) * 0.5;
    skew.exp() * r
}

fn sphere_complement(t: &Vec3) -> [Vec3; 2] {
    let helper = if t.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let w1 = t.cross(&helper).normalize();
    [w1, t.cross(&w1)]
}

/// Point of `SO(3) x S^2` in ambient coordinates.
pub fn pose_point(r: &Rotation, t: &UnitVec3) -> DVector<f64> {
    let mut v = Vec::with_capacity(12);
    push_mat(&mut v, r.matrix());
    v.extend_from_slice(t.vector().as_slice());
    DVector::from_vec(v)
}

/// The frame `{(F R, 0)} u {(0, w)}` at a pose.
pub fn pose_frame(r: &Rotation, t: &UnitVec3) -> TangentFrame {
    let base = pose_point(r, t);
    let mut vectors = Vec::with_capacity(5);
    for f in so3_generators() {
        let mut v = Vec::with_capacity(12);
        push_mat(&mut v, &(f * r.matrix()));
        v.extend_from_slice(&[0.0; 3]);
        vectors.push(DVector::from_vec(v));
    }
    for w in sphere_complement(t.vector()) {
        let mut v = vec![0.0; 9];
        v.extend_from_slice(w.as_slice());
        vectors.push(DVector::from_vec(v));
    }
    TangentFrame { base, vectors }
}

pub fn pose_retract(base: &DVector<f64>, d: &DVector<f64>) -> DVector<f64> {
    let r = retract_rotation(&coords_mat(&base.as_slice()[..9]), &coords_mat(&d.as_slice()[..9]));
    let t = (Vec3::from_column_slice(&base.as_slice()[9..]) + Vec3::from_column_slice(&d.as_slice()[9..])).normalize();
    let mut v = Vec::with_capacity(12);
    push_mat(&mut v, &r);
    v.extend_from_slice(t.as_slice());
    DVector::from_vec(v)
}

/// `(R, t) -> [t]x R` in half-trace coordinates.
pub fn essential_map(x: &DVector<f64>) -> DVector<f64> {
    let r = coords_mat(&x.as_slice()[..9]);
    let t = Vec3::from_column_slice(&x.as_slice()[9..]);
    DVector::from_row_slice(&mat_coords(&(cross_matrix(&t) * r)))
}

pub fn nj_essential_at(r: &Rotation, t: &UnitVec3) -> Result<f64> {
    finite_diff_normal_jacobian(essential_map, pose_retract, &pose_frame(r, t), None, DEFAULT_STEP)
}

/// Point of `SO(3) x SO(3)` in ambient coordinates.
pub fn rotation_pair_point(u: &Rotation, v: &Rotation) -> DVector<f64> {
    let mut x = Vec::with_capacity(18);
    push_mat(&mut x, u.matrix());
    push_mat(&mut x, v.matrix());
    DVector::from_vec(x)
}

pub fn rotation_pair_frame(u: &Rotation, v: &Rotation) -> TangentFrame {
    let base = rotation_pair_point(u, v);
    let mut vectors = Vec::with_capacity(6);
    for (k, m) in [u.matrix(), v.matrix()].into_iter().enumerate() {
        for f in so3_generators() {
            let mut x = vec![0.0; 18];
            x[9 * k..9 * k + 9].copy_from_slice(&mat_coords(&(f * m)));
            vectors.push(DVector::from_vec(x));
        }
    }
    TangentFrame { base, vectors }
}

pub fn rotation_pair_retract(base: &DVector<f64>, d: &DVector<f64>) -> DVector<f64> {
    let (b, d) = (base.as_slice(), d.as_slice());
    let u = retract_rotation(&coords_mat(&b[..9]), &coords_mat(&d[..9]));
    let v = retract_rotation(&coords_mat(&b[9..]), &coords_mat(&d[9..]));
    let mut x = Vec::with_capacity(18);
    push_mat(&mut x, &u);
    push_mat(&mut x, &v);
    DVector::from_vec(x)
}

/// `(U, V) -> U E_0 V^T` in half-trace coordinates.
pub fn gamma_map(x: &DVector<f64>) -> DVector<f64> {
    let u = coords_mat(&x.as_slice()[..9]);
    let v = coords_mat(&x.as_slice()[9..]);
    DVector::from_row_slice(&mat_coords(&(u * e0().matrix() * v.transpose())))
}

/// The transported tangent basis `U B_j V^T` at `U E_0 V^T`.
pub fn essential_tangent_frame(u: &Rotation, v: &Rotation) -> TangentFrame {
    let e = u.matrix() * e0().matrix() * v.matrix().transpose();
    let vectors = tangent_basis_e0()
        .iter()
        .map(|b| DVector::from_row_slice(&mat_coords(&(u.matrix() * b * v.matrix().transpose()))))
        .collect();
    TangentFrame { base: DVector::from_row_slice(&mat_coords(&e)), vectors }
}

pub fn nj_gamma_at(u: &Rotation, v: &Rotation) -> Result<f64> {
    finite_diff_normal_jacobian(
        gamma_map,
        rotation_pair_retract,
        &rotation_pair_frame(u, v),
        Some(&essential_tangent_frame(u, v)),
        DEFAULT_STEP,
    )
}

/// `(a, b, r, s, theta) -> (u, v)` for the quadric at `E_0`.
pub fn quadric_map(x: &DVector<f64>) -> DVector<f64> {
    let q = QuadricPoint { a: x[0], b: x[1], r: x[2], s: x[3], theta: x[4] };
    let (u, v) = q.correspondence();
    DVector::from_row_slice(&[u.x, u.y, u.z, v.x, v.y, v.z])
}

pub fn nj_quadric_at(q: &QuadricPoint) -> Result<f64> {
    let base = DVector::from_row_slice(&[q.a, q.b, q.r, q.s, q.theta]);
    finite_diff_normal_jacobian(quadric_map, |b, d| b + d, &TangentFrame::standard(base), None, DEFAULT_STEP)
}

/// Block-diagonal Jacobian of the five equations `u_i^T E v_i = 0` with respect
/// to the points, for points ordered `u_1, v_1, ...`.
pub fn incidence_jacobian(points: &[Vec3; 10]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(5, 30);
    for i in 0..5 {
        let (u, v) = (points[2 * i], points[2 * i + 1]);
        let row = [0.0, -v.z, v.y, 0.0, u.z, -u.y];
        for (k, x) in row.into_iter().enumerate() {
            a[(i, 6 * i + k)] = x;
        }
    }
    a
}

pub fn incidence_factor(points: &[Vec3; 10]) -> f64 {
    (0..5)
        .map(|i| {
            let (u, v) = (points[2 * i], points[2 * i + 1]);
            u.y * u.y + u.z * u.z + v.y * v.y + v.z * v.z
        })
        .product()
}

/// The matrix `(u_i^T B_j v_i)` of the five quadric correspondences against the
/// tangent basis at `E_0`.
pub fn tangent_evaluation_matrix(q: &[QuadricPoint; 5]) -> Mat5 {
    let basis = tangent_basis_e0();
    Mat5::from_fn(|i, j| {
        let (u, v) = q[i].correspondence();
        u.dot(&(basis[j] * v))
    })
}

/// Outcome of one numerical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub expected: f64,
    pub worst_deviation: f64,
    pub tolerance: f64,
    pub samples: u64,
}

impl Check {
    fn new(name: &str, value: f64, expected: f64, worst_deviation: f64, tolerance: f64, samples: u64) -> Self {
        Check {
            name: name.to_string(),
            passed: worst_deviation <= tolerance,
            value,
            expected,
            worst_deviation,
            tolerance,
            samples,
        }
    }

    /// Turns a failed check into an error.
    pub fn ensure(self) -> Result<Self> {
        if self.passed {
            Ok(self)
        } else {
            Err(Error::AssertionFailure { check: self.name, worst: self.worst_deviation })
        }
    }
}

/// Normal Jacobian of `(R, t) -> [t]x R` at the identity pose and at `samples`
/// Haar points; all should equal `1/4`.
pub fn verify_nj_e(samples: u64, seed: u64) -> Result<Check> {
    if samples == 0 {
        return Err(Error::InvalidValue("samples must be at least 1".into()));
    }
    let e1 = UnitVec3::new(Vec3::x())?;
    let mut worst = (nj_essential_at(&Rotation::identity(), &e1)? - 0.25).abs();
    let mut stats = StreamStats::default();
    for i in 0..samples {
        let mut rng = sample_rng(seed, domain::VERIFY, i);
        let nj = nj_essential_at(&sample_rotation(&mut rng), &sample_unit_vec3(&mut rng))?;
        stats.push(nj);
        worst = worst.max((nj - 0.25).abs());
    }
    Ok(Check::new("nj_essential", stats.mean, 0.25, worst, 1e-6, samples + 1))
}

/// Normal Jacobian of `(U, V) -> U E_0 V^T` at the identity; should be `1/sqrt(8)`.
pub fn verify_nj_gamma() -> Result<Check> {
    let nj = nj_gamma_at(&Rotation::identity(), &Rotation::identity())?;
    let expected = 1.0 / 8f64.sqrt();
    Ok(Check::new("nj_gamma", nj, expected, (nj - expected).abs(), 1e-5, 1))
}

/// The same normal Jacobian at random `(U, V)` agrees with the identity value.
pub fn verify_nj_gamma_equivariance(samples: u64, seed: u64) -> Result<Check> {
    let at_id = nj_gamma_at(&Rotation::identity(), &Rotation::identity())?;
    let mut worst = 0.0f64;
    for i in 0..samples {
        let mut rng = sample_rng(seed, domain::VERIFY, 1 << 32 | i);
        let nj = nj_gamma_at(&sample_rotation(&mut rng), &sample_rotation(&mut rng))?;
        worst = worst.max((nj - at_id).abs());
    }
    Ok(Check::new("nj_gamma_equivariance", at_id, 1.0 / 8f64.sqrt(), worst, 1e-6, samples))
}

/// Negative control: measuring the image in raw matrix entries instead of the
/// tangent frame must not reproduce `1/sqrt(8)`.
pub fn gamma_standard_frame_value() -> Result<f64> {
    let id = Rotation::identity();
    let raw = |x: &DVector<f64>| gamma_map(x) * SQRT_2;
    let out = TangentFrame::standard(DVector::zeros(9));
    finite_diff_normal_jacobian(raw, rotation_pair_retract, &rotation_pair_frame(&id, &id), Some(&out), DEFAULT_STEP)
}

pub fn verify_gamma_negative_control() -> Result<Check> {
    let value = gamma_standard_frame_value()?;
    let expected = 1.0 / 8f64.sqrt();
    // Passes when the value is clearly different.
    let separation = (value - expected).abs();
    let mut c = Check::new("nj_gamma_standard_frame_differs", value, expected, separation, f64::INFINITY, 1);
    c.passed = separation > 1e-3;
    Ok(c)
}

/// Normal Jacobian of the quadric parametrization against `sqrt(r^2 + s^2)`.
pub fn verify_quadric_param_nj(samples: u64, seed: u64) -> Result<Check> {
    let mut worst = 0.0f64;
    let mut stats = StreamStats::default();
    for i in 0..samples {
        let q = QuadricPoint::sample(&mut sample_rng(seed, domain::VERIFY, 2 << 32 | i));
        let nj = nj_quadric_at(&q)?;
        let expected = q.r.hypot(q.s);
        stats.push(nj / expected);
        worst = worst.max((nj - expected).abs());
    }
    Ok(Check::new("nj_quadric_parametrization", stats.mean, 1.0, worst, 1e-6, samples))
}

/// `det(A A^T)` against the product of the incidence factors, relative error.
pub fn verify_detaat_identity(samples: u64, seed: u64) -> Result<Check> {
    let mut worst = 0.0f64;
    for i in 0..samples {
        let mut rng = sample_rng(seed, domain::VERIFY, 3 << 32 | i);
        let points: [Vec3; 10] = std::array::from_fn(|_| {
            Vec3::from_fn(|_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng))
        });
        let a = incidence_jacobian(&points);
        let lhs = (&a * a.transpose()).determinant();
        let rhs = incidence_factor(&points);
        worst = worst.max((lhs - rhs).abs() / rhs.abs());
    }
    Ok(Check::new("det_aat_factorization", 0.0, 0.0, worst, 1e-10, samples))
}

/// `|det B| = 4 |det Z|` pointwise, and the two means from independent
/// draws agreeing within three combined standard errors.
pub fn verify_det_b_identity(samples: u64, seed: u64) -> Result<[Check; 2]> {
    let mut worst = 0.0f64;
    let mut b_stats = StreamStats::default();
    let mut z_stats = StreamStats::default();
    for i in 0..samples {
        let q = sample_quadric(&mut sample_rng(seed, domain::VERIFY, 4 << 32 | i));
        let db = tangent_evaluation_matrix(&q).determinant().abs();
        let dz = z_matrix(&q).determinant().abs();
        worst = worst.max((db - 4.0 * dz).abs() / (4.0 * dz).max(f64::MIN_POSITIVE));
        b_stats.push(db);
        let q2 = sample_quadric(&mut sample_rng(seed, domain::VERIFY, 5 << 32 | i));
        z_stats.push(4.0 * z_matrix(&q2).determinant().abs());
    }
    let pointwise = Check::new("det_b_equals_4_det_z", 4.0, 4.0, worst, 1e-9, samples);
    let gap = (b_stats.mean - z_stats.mean).abs();
    let tol = 3.0 * (b_stats.std_error() + z_stats.std_error());
    let dist = Check::new("det_b_mean_matches_4_det_z_mean", b_stats.mean, z_stats.mean, gap, tol, samples);
    Ok([pointwise, dist])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VolumeReport {
    pub n: u64,
    pub mean_nj: f64,
    /// Volume of the double cover by poses, `16 pi^3 * mean NJ`.
    pub vol_double_cover: f64,
    pub vol_essential: f64,
    /// `vol_essential / vol(RP^5)`.
    pub ratio: f64,
    pub rel_error: f64,
}

/// Monte Carlo integral of the normal Jacobian over Haar poses.
pub fn mc_volume_essential(n: u64, seed: u64) -> Result<VolumeReport> {
    if n == 0 {
        return Err(Error::InvalidValue("n must be at least 1".into()));
    }
    let mut stats = StreamStats::default();
    for i in 0..n {
        let mut rng = sample_rng(seed, domain::VERIFY, 6 << 32 | i);
        stats.push(nj_essential_at(&sample_rotation(&mut rng), &sample_unit_vec3(&mut rng))?);
    }
    let vol_double_cover = 16.0 * PI.powi(3) * stats.mean;
    let vol_essential = vol_double_cover / 2.0;
    let exact = 2.0 * PI.powi(3);
    Ok(VolumeReport {
        n,
        mean_nj: stats.mean,
        vol_double_cover,
        vol_essential,
        ratio: vol_essential / (PI.powi(3) / 2.0),
        rel_error: (vol_essential - exact).abs() / exact,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Nj,
    Volumes,
    Identities,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Suite::All),
            "nj" => Ok(Suite::Nj),
            "volumes" => Ok(Suite::Volumes),
            "identities" => Ok(Suite::Identities),
            other => Err(Error::InvalidValue(format!("unknown suite '{other}'"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::All => "all",
            Suite::Nj => "nj",
            Suite::Volumes => "volumes",
            Suite::Identities => "identities",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub volume: Option<VolumeReport>,
    pub all_passed: bool,
}

pub fn run_verify(suite: Suite, seed: u64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let mut volume = None;
    if matches!(suite, Suite::All | Suite::Nj) {
        checks.push(verify_nj_e(100, seed)?);
        checks.push(verify_nj_gamma()?);
        checks.push(verify_nj_gamma_equivariance(20, seed)?);
        checks.push(verify_gamma_negative_control()?);
        checks.push(verify_quadric_param_nj(100, seed)?);
    }
    if matches!(suite, Suite::All | Suite::Volumes) {
        let v = mc_volume_essential(10_000, seed)?;
        checks.push(Check::new("volume_essential", v.vol_essential, 2.0 * PI.powi(3), v.rel_error, 0.01, v.n));
        checks.push(Check::new("volume_ratio", v.ratio, 4.0, (v.ratio - 4.0).abs(), 0.04, v.n));
        volume = Some(v);
    }
    if matches!(suite, Suite::All | Suite::Identities) {
        checks.push(verify_detaat_identity(1000, seed)?);
        checks.extend(verify_det_b_identity(20_000, seed)?);
    }
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { suite, seed, checks, volume, all_passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_linear_maps() {
        let base = DVector::zeros(2);
        let frame = TangentFrame::standard(base);
        let id = finite_diff_normal_jacobian(|x: &DVector<f64>| x.clone(), |b, d| b + d, &frame, None, 1e-5).unwrap();
        assert!((id - 1.0).abs() < 1e-10);
        // Rotated diag(2, 3): singular values 2 and 3.
        let c = 0.6f64;
        let s = 0.8f64;
        let m = DMatrix::from_row_slice(2, 2, &[2.0 * c, -3.0 * s, 2.0 * s, 3.0 * c]);
        let lin = finite_diff_normal_jacobian(|x: &DVector<f64>| &m * x, |b, d| b + d, &frame, None, 1e-5).unwrap();
        assert!((lin - 6.0).abs() < 1e-8);
    }

    #[test]
    fn step_and_frame_validation() {
        let frame = TangentFrame::standard(DVector::zeros(2));
        assert!(finite_diff_normal_jacobian(|x: &DVector<f64>| x.clone(), |b, d| b + d, &frame, None, 1e-3).is_err());
        let bad = vec![DVector::from_row_slice(&[1.0, 0.0]), DVector::from_row_slice(&[1.0, 1.0])];
        assert!(TangentFrame::new(DVector::zeros(2), bad).is_err());
        let e1 = UnitVec3::new(Vec3::x()).unwrap();
        let f = pose_frame(&Rotation::identity(), &e1);
        assert!(f.gram_error() < 1e-12);
        assert!(rotation_pair_frame(&Rotation::identity(), &Rotation::identity()).gram_error() < 1e-12);
        assert!(essential_tangent_frame(&Rotation::identity(), &Rotation::identity()).gram_error() < 1e-12);
    }

    #[test]
    fn non_unit_translation_is_rejected() {
        assert!(UnitVec3::new(Vec3::new(1.0, 1e-3, 0.0)).is_err());
    }

    #[test]
    fn nj_essential_at_identity() {
        let e1 = UnitVec3::new(Vec3::x()).unwrap();
        let nj = nj_essential_at(&Rotation::identity(), &e1).unwrap();
        assert!((nj - 0.25).abs() < 1e-6);
    }

    #[test]
    fn nj_essential_is_constant() {
        let c = verify_nj_e(100, 7).unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn nj_gamma_value_and_equivariance() {
        assert!(verify_nj_gamma().unwrap().passed);
        assert!(verify_nj_gamma_equivariance(10, 3).unwrap().passed);
        let neg = verify_gamma_negative_control().unwrap();
        assert!(neg.passed);
        assert!((neg.value - 1.0 / 8f64.sqrt()).abs() > 1e-3);
    }

    #[test]
    fn quadric_nj_examples() {
        let q = |a, b, r, s, theta| QuadricPoint { a, b, r, s, theta };
        assert!((nj_quadric_at(&q(0.0, 0.0, 1.0, 0.0, 0.4)).unwrap() - 1.0).abs() < 1e-6);
        assert!((nj_quadric_at(&q(0.3, -1.2, 3.0, 4.0, 2.0)).unwrap() - 5.0).abs() < 1e-6);
        assert!(nj_quadric_at(&q(0.3, -1.2, 0.0, 0.0, 2.0)).unwrap().abs() < 1e-8);
        assert!(verify_quadric_param_nj(50, 1).unwrap().passed);
    }

    #[test]
    fn detaat_examples() {
        let mut rng = sample_rng(5, domain::TEST, 0);
        let mut points: [Vec3; 10] =
            std::array::from_fn(|_| Vec3::from_fn(|_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)));
        let det = |p: &[Vec3; 10]| {
            let a = incidence_jacobian(p);
            (&a * a.transpose()).determinant()
        };
        let base = det(&points);
        assert!((base - incidence_factor(&points)).abs() <= 1e-10 * base);
        // Each diagonal entry of A A^T is quadratic in its pair.
        points[4] *= 2.0;
        points[5] *= 2.0;
        assert!((det(&points) - 4.0 * base).abs() <= 1e-10 * 4.0 * base);
        points[0] = Vec3::x();
        points[1] = Vec3::x();
        assert_eq!(det(&points), 0.0);
        assert!(verify_detaat_identity(200, 2).unwrap().passed);
    }

    #[test]
    fn det_b_identity() {
        let [pointwise, dist] = verify_det_b_identity(5000, 9).unwrap();
        assert!(pointwise.passed, "{pointwise:?}");
        assert!(dist.passed, "{dist:?}");
    }

    #[test]
    fn volume_estimate() {
        let v = mc_volume_essential(500, 4).unwrap();
        assert!(v.rel_error < 0.01);
        assert!((v.vol_double_cover - 4.0 * PI.powi(3)).abs() < 0.01 * 4.0 * PI.powi(3));
        assert!((v.ratio - 4.0).abs() < 0.04);
    }

    #[test]
    fn suite_parsing() {
        assert_eq!("nj".parse::<Suite>().unwrap(), Suite::Nj);
        assert!("bogus".parse::<Suite>().is_err());
        assert_eq!(Suite::Identities.to_string(), "identities");
    }
}
