//! Essential matrices, poses and the metric conventions used throughout.
//!
//! Matrix norms and inner products are the half-trace ones:
//! `<A, B> = tr(A B^T) / 2`. Under this metric every `[t]_x R` with unit `t`
//! has norm one.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;

/// Tolerance for identities that hold by construction.
pub const TOL_CONSTRUCTION: f64 = 1e-12;
/// Tolerance for type invariants.
pub const TOL_INVARIANT: f64 = 1e-9;
/// Tolerance for classification decisions (is this essential? is this real?).
pub const TOL_CLASSIFY: f64 = 1e-6;

/// `tr(A B^T) / 2`.
pub fn half_trace_inner(a: &Mat3, b: &Mat3) -> f64 {
    0.5 * a.component_mul(b).sum()
}

pub fn half_trace_norm(a: &Mat3) -> f64 {
    half_trace_inner(a, a).sqrt()
}

/// Distance between the projective classes of `a` and `b` after scaling both
/// to unit half-trace norm.
pub fn projective_distance(a: &Mat3, b: &Mat3) -> f64 {
    let a = a / half_trace_norm(a);
    let b = b / half_trace_norm(b);
    half_trace_norm(&(a - b)).min(half_trace_norm(&(a + b)))
}

/// The matrix of `x -> t x x`.
pub fn cross_matrix(t: &Vec3) -> Mat3 {
    Mat3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
}

/// A rotation matrix, orthogonal with determinant one to `1e-12`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Mat3", into = "Mat3")]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn new(m: Mat3) -> Result<Self> {
        let orth = (m * m.transpose() - Mat3::identity()).abs().max();
        let det = m.determinant();
        if !m.iter().all(|v| v.is_finite())
            || orth > TOL_CONSTRUCTION
            || (det - 1.0).abs() > TOL_CONSTRUCTION
        {
            return Err(Error::InvalidValue(format!(
                "not a rotation: |RR^T - 1| = {orth:.3e}, det = {det}"
            )));
        }
        Ok(Rotation(m))
    }

    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    pub(crate) fn new_unchecked(m: Mat3) -> Self {
        Rotation(m)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }
}

impl TryFrom<Mat3> for Rotation {
    type Error = Error;
    fn try_from(m: Mat3) -> Result<Self> {
        Rotation::new(m)
    }
}

impl From<Rotation> for Mat3 {
    fn from(r: Rotation) -> Mat3 {
        r.0
    }
}

/// A point of the unit sphere S^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec3", into = "Vec3")]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    pub fn new(v: Vec3) -> Result<Self> {
        if !v.iter().all(|x| x.is_finite()) || (v.norm() - 1.0).abs() > TOL_CONSTRUCTION {
            return Err(Error::InvalidValue(format!(
                "not a unit vector: norm {}",
                v.norm()
            )));
        }
        Ok(UnitVec3(v))
    }

    /// Normalizes `v`; fails on the zero vector.
    pub fn normalize(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateInput("cannot normalize zero vector".into()));
        }
        Ok(UnitVec3(v / n))
    }

    pub(crate) fn new_unchecked(v: Vec3) -> Self {
        UnitVec3(v)
    }

    pub fn vector(&self) -> &Vec3 {
        &self.0
    }
}

impl TryFrom<Vec3> for UnitVec3 {
    type Error = Error;
    fn try_from(v: Vec3) -> Result<Self> {
        UnitVec3::new(v)
    }
}

impl From<UnitVec3> for Vec3 {
    fn from(v: UnitVec3) -> Vec3 {
        v.0
    }
}

/// A point of RP^2 stored as a unit representative. Comparisons ignore sign.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "Vec3", into = "Vec3")]
pub struct ProjectivePoint2(Vec3);

impl ProjectivePoint2 {
    /// Normalizes any nonzero representative.
    pub fn new(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateInput("zero vector is not a projective point".into()));
        }
        Ok(ProjectivePoint2(v / n))
    }

    pub fn vector(&self) -> &Vec3 {
        &self.0
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.0 - other.0).norm().min((self.0 + other.0).norm())
    }

    pub fn rotated(&self, r: &Rotation) -> Self {
        ProjectivePoint2(r.matrix() * self.0)
    }
}

impl PartialEq for ProjectivePoint2 {
    fn eq(&self, other: &Self) -> bool {
        self.distance(other) <= TOL_CONSTRUCTION
    }
}

impl TryFrom<Vec3> for ProjectivePoint2 {
    type Error = Error;
    fn try_from(v: Vec3) -> Result<Self> {
        ProjectivePoint2::new(v)
    }
}

impl From<ProjectivePoint2> for Vec3 {
    fn from(p: ProjectivePoint2) -> Vec3 {
        p.0
    }
}

/// An essential matrix of unit half-trace norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Mat3", into = "Mat3")]
pub struct EssentialMatrix(Mat3);

impl EssentialMatrix {
    pub fn new(m: Mat3) -> Result<Self> {
        let norm = half_trace_norm(&m);
        let worst = max_abs(&demazure_residuals(&m));
        if !norm.is_finite() || (norm - 1.0).abs() > TOL_INVARIANT || worst > TOL_INVARIANT {
            return Err(Error::DegenerateInput(format!(
                "not a unit essential matrix: norm {norm}, Demazure residual {worst:.3e}"
            )));
        }
        Ok(EssentialMatrix(m))
    }

    pub(crate) fn new_unchecked(m: Mat3) -> Self {
        EssentialMatrix(m)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// The two poses mapping to this matrix.
    pub fn poses(&self) -> [(Rotation, UnitVec3); 2] {
        recover_poses(&self.0).expect("invariants guarantee an essential matrix")
    }
}

impl TryFrom<Mat3> for EssentialMatrix {
    type Error = Error;
    fn try_from(m: Mat3) -> Result<Self> {
        EssentialMatrix::new(m)
    }
}

impl From<EssentialMatrix> for Mat3 {
    fn from(e: EssentialMatrix) -> Mat3 {
        e.0
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `E(R, t) = [t]_x R`.
pub fn essential_from_pose(r: &Rotation, t: &UnitVec3) -> EssentialMatrix {
    EssentialMatrix(cross_matrix(t.vector()) * r.matrix())
}

/// `E_0 = E(1, e_1)`.
pub fn e0() -> EssentialMatrix {
    essential_from_pose(&Rotation::identity(), &UnitVec3(Vec3::x()))
}

/// `det(E)` followed by the entries of `2 E E^T E - tr(E E^T) E` in row-major order.
pub fn demazure_residuals(e: &Mat3) -> [f64; 10] {
    let eet = e * e.transpose();
    let cubic = 2.0 * eet * e - eet.trace() * e;
    let mut out = [0.0; 10];
    out[0] = e.determinant();
    for i in 0..3 {
        for j in 0..3 {
            out[1 + 3 * i + j] = cubic[(i, j)];
        }
    }
    out
}

/// The second preimage `(M R, -t)` with `M = 2 t t^T - 1`.
pub fn twisted_pair(r: &Rotation, t: &UnitVec3) -> (Rotation, UnitVec3) {
    let tv = t.vector();
    let m = 2.0 * tv * tv.transpose() - Mat3::identity();
    (Rotation(m * r.matrix()), UnitVec3(-tv))
}

/// Both poses `(R, t)` with `[t]_x R = E`.
///
/// `t` spans the left kernel of `E`, signed so that its first nonzero
/// component is positive. `R` is the rotation closest to `[t]_x^T E`, which
/// equals `(1 - t t^T) R`. The second pose is the twisted pair of the first.
pub fn recover_poses(e: &Mat3) -> Result<[(Rotation, UnitVec3); 2]> {
    let norm = half_trace_norm(e);
    let worst = max_abs(&demazure_residuals(e));
    if !norm.is_finite() || (norm - 1.0).abs() > TOL_CLASSIFY || worst > TOL_CLASSIFY {
        return Err(Error::DegenerateInput(format!(
            "not an essential matrix: norm {norm}, Demazure residual {worst:.3e}"
        )));
    }

    // Left kernel of E = kernel of E^T = right singular vector of E^T for the
    // smallest singular value.
    let svd = e.transpose().svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::DegenerateInput("svd failed".into()))?;
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("three singular values");
    let mut t: Vec3 = v_t.row(imin).transpose();
    t.normalize_mut();
    if let Some(first) = t.iter().find(|c| c.abs() > TOL_CONSTRUCTION) {
        if *first < 0.0 {
            t = -t;
        }
    }

    let target = cross_matrix(&t).transpose() * e;
    let r = nearest_rotation(&target)?;
    let t = UnitVec3(t);
    let first = (r, t);
    let second = twisted_pair(&r, &t);
    Ok([first, second])
}

/// Orthogonal Procrustes: the rotation maximizing `tr(R^T M)`.
fn nearest_rotation(m: &Mat3) -> Result<Rotation> {
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateInput("svd failed".into())),
    };
    let d = (u * v_t).determinant().signum();
    let mut s = Mat3::identity();
    // nalgebra sorts singular values in decreasing order; flip the smallest.
    s[(2, 2)] = d;
    Ok(Rotation(u * s * v_t))
}

/// Orthonormal basis of the tangent space of the essential variety at `E_0`.
pub fn tangent_basis_e0() -> [Mat3; 5] {
    let s = std::f64::consts::SQRT_2;
    [
        Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, s, 0.0, 0.0),
        Mat3::new(0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, 0.0, 0.0),
        Mat3::new(0.0, 0.0, s, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        Mat3::new(0.0, s, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        Mat3::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
    ]
}

/// `F_ij = e_i e_j^T - e_j e_i^T`; unit length in the half-trace metric.
pub fn so3_generator(i: usize, j: usize) -> Mat3 {
    let mut f = Mat3::zeros();
    f[(i, j)] = 1.0;
    f[(j, i)] = -1.0;
    f
}

/// The generators `F_12, F_13, F_23` in that order.
pub fn so3_generators() -> [Mat3; 3] {
    [so3_generator(0, 1), so3_generator(0, 2), so3_generator(1, 2)]
}

/// The six matrices `E_0 F^T` and `F E_0` spanning the tangent space at `E_0`.
pub fn tangent_spanning_set_e0() -> [Mat3; 6] {
    let e = *e0().matrix();
    let [f12, f13, f23] = so3_generators();
    [
        e * f12.transpose(),
        e * f13.transpose(),
        e * f23.transpose(),
        f12 * e,
        f13 * e,
        f23 * e,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample_rotation, sample_unit_vec3};
    use crate::rng::{domain, sample_rng};
    use nalgebra::{DMatrix, DVector};

    fn random_pose(i: u64) -> (Rotation, UnitVec3) {
        let mut rng = sample_rng(3, domain::TEST, i);
        (sample_rotation(&mut rng), sample_unit_vec3(&mut rng))
    }

    #[test]
    fn cross_matrix_examples() {
        let m = cross_matrix(&Vec3::x());
        assert_eq!(m, Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0));
        assert_eq!(cross_matrix(&Vec3::zeros()), Mat3::zeros());
        let t = Vec3::new(1.0, 2.0, 3.0);
        let x = Vec3::new(4.0, 5.0, 6.0);
        let direct = Vec3::new(
            t.y * x.z - t.z * x.y,
            t.z * x.x - t.x * x.z,
            t.x * x.y - t.y * x.x,
        );
        assert_eq!(direct, Vec3::new(-3.0, 6.0, -3.0));
        assert_eq!(cross_matrix(&t) * x, direct);
    }

    #[test]
    fn e0_matches_closed_form() {
        let e = e0();
        assert_eq!(*e.matrix(), Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0));
        assert_eq!(half_trace_inner(e.matrix(), e.matrix()), 1.0);
        assert!(demazure_residuals(e.matrix()).iter().all(|&r| r == 0.0));
    }

    #[test]
    fn half_trace_examples() {
        let i = Mat3::identity();
        assert_eq!(half_trace_inner(&i, &i), 1.5);
        let mut a = Mat3::zeros();
        a[(0, 1)] = 1.0;
        let b = a.transpose();
        assert_eq!(half_trace_inner(&a, &b), 0.0);
    }

    #[test]
    fn demazure_of_identity() {
        let r = demazure_residuals(&Mat3::identity());
        assert_eq!(r[0], 1.0);
        let expected = [-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0];
        assert_eq!(&r[1..], &expected);
    }

    #[test]
    fn random_poses_give_unit_essential_matrices() {
        for i in 0..100 {
            let (r, t) = random_pose(i);
            let e = essential_from_pose(&r, &t);
            assert!((half_trace_norm(e.matrix()) - 1.0).abs() <= TOL_CONSTRUCTION);
            assert!(max_abs(&demazure_residuals(e.matrix())) <= TOL_CONSTRUCTION);
            assert!(EssentialMatrix::new(*e.matrix()).is_ok());
        }
    }

    #[test]
    fn twisted_pair_of_e0() {
        let (m, t) = twisted_pair(&Rotation::identity(), &UnitVec3(Vec3::x()));
        assert_eq!(*m.matrix(), Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0)));
        assert_eq!(*t.vector(), -Vec3::x());
        assert_eq!(essential_from_pose(&m, &t), e0());
    }

    #[test]
    fn twisted_pair_is_an_involution_preserving_e() {
        for i in 0..100 {
            let (r, t) = random_pose(i);
            let (r2, t2) = twisted_pair(&r, &t);
            let diff = essential_from_pose(&r, &t).matrix() - essential_from_pose(&r2, &t2).matrix();
            assert!(diff.abs().max() <= TOL_CONSTRUCTION);
            let (r3, t3) = twisted_pair(&r2, &t2);
            assert!((r3.matrix() - r.matrix()).abs().max() <= TOL_CONSTRUCTION);
            assert!((t3.vector() - t.vector()).abs().max() <= TOL_CONSTRUCTION);
            assert!(Rotation::new(*r2.matrix()).is_ok());
        }
    }

    #[test]
    fn recover_poses_of_e0() {
        let [(r1, t1), (r2, t2)] = recover_poses(e0().matrix()).unwrap();
        assert!((r1.matrix() - Mat3::identity()).abs().max() < 1e-12);
        assert!((t1.vector() - Vec3::x()).abs().max() < 1e-12);
        let m = Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0));
        assert!((r2.matrix() - m).abs().max() < 1e-12);
        assert!((t2.vector() + Vec3::x()).abs().max() < 1e-12);
    }

    #[test]
    fn recover_poses_round_trip() {
        for i in 0..100 {
            let (r, t) = random_pose(i);
            let e = essential_from_pose(&r, &t);
            let poses = recover_poses(e.matrix()).unwrap();
            let hit = poses.iter().any(|(rr, tt)| {
                (rr.matrix() - r.matrix()).abs().max() <= 1e-8
                    && (tt.vector() - t.vector()).abs().max() <= 1e-8
            });
            assert!(hit, "pose {i} not recovered");
            for (rr, tt) in &poses {
                let back = essential_from_pose(rr, tt);
                assert!((back.matrix() - e.matrix()).abs().max() <= 1e-8);
            }
            let (tr, tt) = twisted_pair(&poses[0].0, &poses[0].1);
            assert!((tr.matrix() - poses[1].0.matrix()).abs().max() <= 1e-12);
            assert!((tt.vector() - poses[1].1.vector()).abs().max() <= 1e-12);
        }
    }

    #[test]
    fn recover_poses_rejects_identity() {
        assert!(matches!(
            recover_poses(&Mat3::identity()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let b = tangent_basis_e0();
        for i in 0..5 {
            for j in 0..5 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((half_trace_inner(&b[i], &b[j]) - expected).abs() <= 1e-15);
            }
        }
        assert_eq!(half_trace_inner(&b[4], &b[4]), 1.0);
    }

    #[test]
    fn tangent_basis_lies_in_span_of_group_derivatives() {
        let span = tangent_spanning_set_e0();
        let a = DMatrix::from_fn(9, 6, |r, c| span[c][(r / 3, r % 3)]);
        let svd = a.clone().svd(true, true);
        for b in tangent_basis_e0() {
            let rhs = DVector::from_fn(9, |r, _| b[(r / 3, r % 3)]);
            let coeffs = svd.solve(&rhs, 1e-12).unwrap();
            let resid = (&a * coeffs - rhs).amax();
            assert!(resid <= TOL_CONSTRUCTION);
        }
    }

    #[test]
    fn projective_point_equality_ignores_sign() {
        let p = ProjectivePoint2::new(Vec3::new(1.0, 2.0, 2.0)).unwrap();
        let q = ProjectivePoint2::new(Vec3::new(-3.0, -6.0, -6.0)).unwrap();
        assert_eq!(p, q);
        assert!((p.vector().norm() - 1.0).abs() < 1e-15);
        assert!(ProjectivePoint2::new(Vec3::zeros()).is_err());
    }
}
