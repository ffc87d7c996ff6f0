//! Random generators: Haar rotations, points of RP^2, the three linear-space
//! distributions, the quadric parametrization behind the determinant
//! estimator, and the box density with its Metropolis-Hastings sampler.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, SMatrix, Vector5};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    e0, EssentialMatrix, Mat3, ProjectivePoint2, Rotation, UnitVec3, Vec3,
};
use crate::solver::LinearSpace;

/// A 5x5 real matrix.
pub type Mat5 = SMatrix<f64, 5, 5>;

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn gaussian_vec3<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    Vec3::new(normal(rng), normal(rng), normal(rng))
}

/// Haar-distributed rotation: orthogonal factor of a Gaussian matrix with
/// the sign ambiguity of QR removed, then multiplied by its determinant.
pub fn sample_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    loop {
        let g = Matrix3::from_fn(|_, _| normal(rng));
        let qr = g.qr();
        let r = qr.r();
        if (0..3).any(|i| r[(i, i)].abs() < 1e-12) {
            continue;
        }
        let mut q = qr.q();
        for j in 0..3 {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        let q = q * q.determinant().signum();
        return Rotation::new_unchecked(q);
    }
}

/// Uniform point of the unit sphere.
pub fn sample_unit_vec3<R: Rng + ?Sized>(rng: &mut R) -> UnitVec3 {
    loop {
        let v = gaussian_vec3(rng);
        let n = v.norm();
        if n > 1e-12 {
            return UnitVec3::new_unchecked(v / n);
        }
    }
}

/// Uniform point of RP^2, represented with non-negative third coordinate.
pub fn sample_rp2<R: Rng + ?Sized>(rng: &mut R) -> ProjectivePoint2 {
    let v = *sample_unit_vec3(rng).vector();
    let v = if v.z < 0.0 { -v } else { v };
    ProjectivePoint2::new(v).expect("unit vector")
}

/// A linear space with i.i.d. standard Gaussian rows, distributed as Unif(G).
#[allow(non_snake_case)]
pub fn sample_unifG<R: Rng + ?Sized>(rng: &mut R) -> LinearSpace {
    loop {
        let mut rows = [[0.0; 9]; 5];
        for row in rows.iter_mut() {
            for x in row.iter_mut() {
                *x = normal(rng);
            }
        }
        if let Ok(l) = LinearSpace::new(rows) {
            return l;
        }
    }
}

/// Five point pairs `(u_i, v_i)`; equation `i` reads `u_i^T E v_i = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondences5 {
    pub pairs: [(ProjectivePoint2, ProjectivePoint2); 5],
}

impl Correspondences5 {
    pub fn from_vectors(u: &[Vec3; 5], v: &[Vec3; 5]) -> Result<Self> {
        let mut pairs = [(ProjectivePoint2::new(Vec3::z())?, ProjectivePoint2::new(Vec3::z())?); 5];
        for i in 0..5 {
            pairs[i] = (ProjectivePoint2::new(u[i])?, ProjectivePoint2::new(v[i])?);
        }
        Ok(Correspondences5 { pairs })
    }

    /// All ten points in the order `u_1, v_1, ..., u_5, v_5`.
    pub fn points(&self) -> [Vec3; 10] {
        let mut out = [Vec3::zeros(); 10];
        for (i, (u, v)) in self.pairs.iter().enumerate() {
            out[2 * i] = *u.vector();
            out[2 * i + 1] = *v.vector();
        }
        out
    }
}

/// Row `i` is `vec(u_i v_i^T)` in row-major order, so `row . vec(E) = u_i^T E v_i`.
pub fn linear_space_from_correspondences(c: &Correspondences5) -> Result<LinearSpace> {
    let mut rows = [[0.0; 9]; 5];
    for (row, (u, v)) in rows.iter_mut().zip(c.pairs.iter()) {
        let (u, v) = (u.vector(), v.vector());
        for a in 0..3 {
            for b in 0..3 {
                row[3 * a + b] = u[a] * v[b];
            }
        }
    }
    LinearSpace::new(rows)
}

/// Ten i.i.d. uniform points of RP^2 and the linear space they define.
pub fn sample_psi<R: Rng + ?Sized>(rng: &mut R) -> (Correspondences5, LinearSpace) {
    loop {
        let pairs = std::array::from_fn(|_| (sample_rp2(rng), sample_rp2(rng)));
        let c = Correspondences5 { pairs };
        if let Ok(l) = linear_space_from_correspondences(&c) {
            return (c, l);
        }
    }
}

/// A rectangle `[a, b] x [c, d]` in the affine chart `u_3 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoxSpec {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl BoxSpec {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if !(a < b && c < d) || ![a, b, c, d].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidBox { a, b, c, d });
        }
        Ok(BoxSpec { a, b, c, d })
    }

    /// The square `[-h, h]^2`.
    pub fn centered(h: f64) -> Result<Self> {
        BoxSpec::new(-h, h, -h, h)
    }

    pub fn bounds(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn area(&self) -> f64 {
        (self.b - self.a) * (self.d - self.c)
    }

    /// Whether the projective point `[p]` has chart coordinates in the box.
    pub fn contains(&self, p: &Vec3) -> bool {
        if p.z == 0.0 {
            return false;
        }
        let (y1, y2) = (p.x / p.z, p.y / p.z);
        self.a <= y1 && y1 <= self.b && self.c <= y2 && y2 <= self.d
    }
}

impl TryFrom<[f64; 4]> for BoxSpec {
    type Error = Error;
    fn try_from(v: [f64; 4]) -> Result<Self> {
        BoxSpec::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BoxSpec> for [f64; 4] {
    fn from(b: BoxSpec) -> [f64; 4] {
        b.bounds()
    }
}

/// Ten boxes, one per point, ordered `u_1, v_1, ..., u_5, v_5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxConfig {
    pub boxes: [BoxSpec; 10],
}

impl BoxConfig {
    pub fn uniform(spec: BoxSpec) -> Self {
        BoxConfig { boxes: [spec; 10] }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Box weight relative to the product of uniform measures on RP^2.
    ///
    /// Each factor is `2 pi g(p) / area` inside the box and zero outside, where
    /// `2 pi` is the area of RP^2. The product is a probability density
    /// with respect to ten i.i.d. uniform points.
    pub fn density(&self, points: &[Vec3; 10]) -> f64 {
        let mut w = 1.0;
        for (b, p) in self.boxes.iter().zip(points.iter()) {
            if !b.contains(p) {
                return 0.0;
            }
            w *= TAU * chart_factor(p) / b.area();
        }
        w
    }
}

/// Samples affine points uniformly in their boxes and embeds them as unit
/// representatives of `[y_1 : y_2 : 1]`.
pub fn sample_box<R: Rng + ?Sized>(
    rng: &mut R,
    boxes: &BoxConfig,
) -> Result<(Correspondences5, LinearSpace)> {
    let mut pts = [Vec3::zeros(); 10];
    for (p, b) in pts.iter_mut().zip(boxes.boxes.iter()) {
        let y1 = Uniform::new_inclusive(b.a, b.b).expect("valid box").sample(rng);
        let y2 = Uniform::new_inclusive(b.c, b.d).expect("valid box").sample(rng);
        *p = Vec3::new(y1, y2, 1.0).normalize();
    }
    let u: [Vec3; 5] = std::array::from_fn(|i| pts[2 * i]);
    let v: [Vec3; 5] = std::array::from_fn(|i| pts[2 * i + 1]);
    let c = Correspondences5::from_vectors(&u, &v)?;
    let l = linear_space_from_correspondences(&c)?;
    Ok((c, l))
}

fn chart_factor(p: &Vec3) -> f64 {
    let q = p.norm() / p.z.abs();
    q * q * q
}

/// Density of the chart pushforward relative to the sphere area:
/// `(|u|^2 / u_3^2) / cos(alpha)` with `cos(alpha) = |u_3| / |u|`.
pub fn density_g(u: &ProjectivePoint2) -> Result<f64> {
    let v = u.vector();
    if v.z.abs() <= 1e-12 * v.norm() {
        return Err(Error::ChartSingularity(v.z.abs()));
    }
    Ok(chart_factor(v))
}

/// One point of the parametrization `(a, b, r, s, theta)` of the incidence
/// quadric at `E_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadricPoint {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub s: f64,
    pub theta: f64,
}

impl QuadricPoint {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        QuadricPoint {
            a: normal(rng),
            b: normal(rng),
            r: normal(rng),
            s: normal(rng),
            theta: rng.random_range(0.0..TAU),
        }
    }

    /// `u = (a, r cos theta, r sin theta)` and `v = (b, s cos theta, s sin theta)`;
    /// every such pair satisfies `u^T E_0 v = 0`.
    pub fn correspondence(&self) -> (Vec3, Vec3) {
        let (sn, cs) = self.theta.sin_cos();
        (
            Vec3::new(self.a, self.r * cs, self.r * sn),
            Vec3::new(self.b, self.s * cs, self.s * sn),
        )
    }

    pub fn z(&self) -> ZVector {
        let (sn, cs) = self.theta.sin_cos();
        let (a, b, r, s) = (self.a, self.b, self.r, self.s);
        ZVector(Vector5::new(b * r * sn, b * r * cs, a * s * sn, a * s * cs, r * s))
    }
}

/// The random 5-vector `(br sin t, br cos t, as sin t, as cos t, rs)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZVector(pub Vector5<f64>);

pub fn sample_z<R: Rng + ?Sized>(rng: &mut R) -> ZVector {
    QuadricPoint::sample(rng).z()
}

/// Five quadric points: one base draw of the determinant estimator.
pub type QuadricSample = [QuadricPoint; 5];

pub fn sample_quadric<R: Rng + ?Sized>(rng: &mut R) -> QuadricSample {
    std::array::from_fn(|_| QuadricPoint::sample(rng))
}

/// The matrix with columns `z_1, ..., z_5`.
pub fn z_matrix(q: &QuadricSample) -> Mat5 {
    Mat5::from_fn(|i, j| q[j].z().0[i])
}

/// The rotated correspondences `(U u_i, V v_i)` as ten points `u_1, v_1, ...`.
pub fn rotated_points(q: &QuadricSample, u: &Rotation, v: &Rotation) -> [Vec3; 10] {
    let mut out = [Vec3::zeros(); 10];
    for (i, p) in q.iter().enumerate() {
        let (a, b) = p.correspondence();
        out[2 * i] = u.matrix() * a;
        out[2 * i + 1] = v.matrix() * b;
    }
    out
}

/// Uniform essential matrix `U E_0 V^T` with Haar `(U, V)`.
pub fn sample_essential_uniform<R: Rng + ?Sized>(rng: &mut R) -> (EssentialMatrix, Rotation, Rotation) {
    let u = sample_rotation(rng);
    let v = sample_rotation(rng);
    let m: Mat3 = u.matrix() * e0().matrix() * v.matrix().transpose();
    (EssentialMatrix::new_unchecked(m), u, v)
}

/// State of the box sampler: a uniform essential matrix and a base draw.
#[derive(Debug, Clone, Copy)]
pub struct MhProposal {
    pub essential: EssentialMatrix,
    pub u: Rotation,
    pub v: Rotation,
    pub base: QuadricSample,
}

impl MhProposal {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let (essential, u, v) = sample_essential_uniform(rng);
        MhProposal { essential, u, v, base: sample_quadric(rng) }
    }

    pub fn abs_det(&self) -> f64 {
        z_matrix(&self.base).determinant().abs()
    }
}

/// A run of identical chain states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainRun {
    pub essential: Mat3,
    pub abs_det: f64,
    pub weight: f64,
    pub multiplicity: u64,
}

/// A Metropolis-Hastings chain stored as runs of repeated states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MhChain {
    pub steps: u64,
    /// Accepted moves, counting the initial state.
    pub accepted: u64,
    pub runs: Vec<ChainRun>,
}

impl MhChain {
    /// `pi^3/4` times the chain average of `|det Z|`.
    pub fn mean_estimate(&self) -> f64 {
        let total: f64 = self.runs.iter().map(|r| r.abs_det * r.multiplicity as f64).sum();
        PI.powi(3) / 4.0 * total / self.steps as f64
    }
}

/// Independence Metropolis-Hastings: propose from the base measure, accept
/// with probability `min(1, w(new) / w(old))`. A state of weight zero is
/// always left.
pub fn mh_chain<R, W>(rng: &mut R, n: u64, weight: W) -> Result<MhChain>
where
    R: Rng + ?Sized,
    W: Fn(&MhProposal) -> f64,
{
    if n == 0 {
        return Err(Error::InvalidValue("chain length must be at least 1".into()));
    }
    let mut current = MhProposal::sample(rng);
    let mut w_cur = weight(&current);
    let mut runs = vec![run_of(&current, w_cur)];
    let mut accepted = 1;
    for _ in 1..n {
        let prop = MhProposal::sample(rng);
        let w_new = weight(&prop);
        let accept = if w_cur <= 0.0 {
            true
        } else {
            let ratio = w_new / w_cur;
            ratio >= 1.0 || rng.random::<f64>() < ratio
        };
        if accept {
            current = prop;
            w_cur = w_new;
            accepted += 1;
            runs.push(run_of(&current, w_cur));
        } else {
            runs.last_mut().expect("non-empty").multiplicity += 1;
        }
    }
    Ok(MhChain { steps: n, accepted, runs })
}

fn run_of(p: &MhProposal, w: f64) -> ChainRun {
    ChainRun { essential: *p.essential.matrix(), abs_det: p.abs_det(), weight: w, multiplicity: 1 }
}

/// The chain targeting the box density of the rotated correspondences.
pub fn mh_box_chain<R: Rng + ?Sized>(rng: &mut R, n: u64, boxes: &BoxConfig) -> Result<MhChain> {
    mh_chain(rng, n, |p| boxes.density(&rotated_points(&p.base, &p.u, &p.v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{demazure_residuals, half_trace_norm, max_abs};
    use crate::rng::{domain, sample_rng};
    use crate::solver::LinearSpace;

    fn rng(i: u64) -> crate::rng::SampleRng {
        sample_rng(11, domain::TEST, i)
    }

    /// Haar rotation from a uniform unit quaternion.
    fn quaternion_rotation(r: &mut crate::rng::SampleRng) -> Mat3 {
        let q = nalgebra::Vector4::from_fn(|_, _| normal(r)).normalize();
        let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
        Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    #[test]
    fn rotations_pass_invariants() {
        let mut r = rng(0);
        for _ in 0..1000 {
            let q = sample_rotation(&mut r);
            assert!(Rotation::new(*q.matrix()).is_ok());
        }
    }

    #[test]
    fn rotation_moments_match_quaternion_oracle() {
        let n = 1_000_000;
        let mut r = rng(1);
        let mut oracle = rng(2);
        let mut entries = Mat3::zeros();
        let (mut tr, mut tr2, mut otr, mut otr2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let m = *sample_rotation(&mut r).matrix();
            entries += m;
            let t = m.trace();
            tr += t;
            tr2 += t * t;
            let o = quaternion_rotation(&mut oracle).trace();
            otr += o;
            otr2 += o * o;
        }
        let n = n as f64;
        assert!((entries / n).abs().max() < 3e-3);
        // Haar moments of the trace are E tr = 0 and E tr^2 = 1.
        assert!((tr / n).abs() < 0.01, "E tr = {}", tr / n);
        assert!((tr2 / n - 1.0).abs() < 0.01, "E tr^2 = {}", tr2 / n);
        assert!((otr / n).abs() < 0.01);
        assert!((otr2 / n - 1.0).abs() < 0.01);
    }

    #[test]
    fn rp2_points() {
        let mut r = rng(3);
        let n = 1_000_000;
        let fixed = quaternion_rotation(&mut rng(4));
        let (mut m3, mut m3_rot) = (0.0, 0.0);
        for _ in 0..n {
            let p = sample_rp2(&mut r);
            let v = p.vector();
            assert!((v.norm() - 1.0).abs() < 1e-12);
            assert!(v.z >= 0.0);
            m3 += v.z * v.z;
            let w = fixed * v;
            m3_rot += w.z * w.z;
        }
        let n = n as f64;
        assert!((m3 / n - 1.0 / 3.0).abs() < 0.002);
        assert!((m3_rot / n - 1.0 / 3.0).abs() < 0.002);
    }

    #[test]
    fn unif_g_spaces_have_full_rank() {
        let mut r = rng(5);
        for _ in 0..100 {
            let l = sample_unifG(&mut r);
            assert!(LinearSpace::new(*l.rows()).is_ok());
        }
    }

    #[test]
    fn correspondence_rows() {
        let e1 = ProjectivePoint2::new(Vec3::x()).unwrap();
        let mut r = rng(6);
        let mut pairs = std::array::from_fn(|_| (sample_rp2(&mut r), sample_rp2(&mut r)));
        pairs[0] = (e1, e1);
        let c = Correspondences5 { pairs };
        let l = linear_space_from_correspondences(&c).unwrap();
        assert_eq!(l.rows()[0], [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        for _ in 0..20 {
            let e = Mat3::from_fn(|_, _| normal(&mut r));
            for (row, (u, v)) in l.rows().iter().zip(c.pairs.iter()) {
                let lhs: f64 = (0..9).map(|k| row[k] * e[(k / 3, k % 3)]).sum();
                let rhs = (u.vector().transpose() * e * v.vector())[(0, 0)];
                assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + rhs.abs()));
            }
        }
        for row in l.rows() {
            let m = Mat3::from_fn(|i, j| row[3 * i + j]);
            let s = m.singular_values();
            assert!(s[1] < 1e-14 * s[0] && s[2] < 1e-14 * s[0]);
        }
    }

    #[test]
    fn density_g_examples() {
        assert_eq!(density_g(&ProjectivePoint2::new(Vec3::z()).unwrap()).unwrap(), 1.0);
        let p = ProjectivePoint2::new(Vec3::new(1.0, 1.0, 1.0)).unwrap();
        assert!((density_g(&p).unwrap() - 3.0 * 3f64.sqrt()).abs() < 1e-12);
        let q = ProjectivePoint2::new(Vec3::new(1.0, 1.0, 0.0)).unwrap();
        assert!(matches!(density_g(&q), Err(Error::ChartSingularity(_))));
    }

    #[test]
    fn box_weight_is_a_probability_density() {
        // Under uniform points the single-point factor has mean one.
        let b = BoxConfig::uniform(BoxSpec::centered(5.0).unwrap());
        let mut r = rng(7);
        let n = 400_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let p = *sample_rp2(&mut r).vector();
            let w = if b.boxes[0].contains(&p) { TAU * chart_factor(&p) / b.boxes[0].area() } else { 0.0 };
            sum += w;
            sum2 += w * w;
        }
        let n = n as f64;
        let mean = sum / n;
        let se = ((sum2 / n - mean * mean) / n).sqrt();
        assert!((mean - 1.0).abs() < 4.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn box_samples_live_in_chart() {
        let boxes = BoxConfig::uniform(BoxSpec::centered(5.0).unwrap());
        let mut r = rng(8);
        for _ in 0..1000 {
            let (c, _) = sample_box(&mut r, &boxes).unwrap();
            for p in c.points() {
                assert!(p.z > 0.0);
                assert!(boxes.boxes[0].contains(&p));
            }
        }
    }

    #[test]
    fn tiny_boxes_are_rank_deficient() {
        let boxes = BoxConfig::uniform(BoxSpec::new(1.0, 1.0 + 1e-13, 2.0, 2.0 + 1e-13).unwrap());
        let res = sample_box(&mut rng(9), &boxes);
        assert!(matches!(res, Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn invalid_boxes_rejected() {
        assert!(BoxSpec::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(BoxSpec::new(0.0, 1.0, 2.0, -1.0).is_err());
        let json = r#"{"boxes":[[-5,5,-5,5],[-5,5,-5,5],[-5,5,-5,5],[-5,5,-5,5],[-5,5,-5,5],
            [-5,5,-5,5],[-5,5,-5,5],[-5,5,-5,5],[-5,5,-5,5],[-5,5,-5,5]]}"#;
        assert!(BoxConfig::from_json(json).is_ok());
        assert!(BoxConfig::from_json(&json.replace("[-5,5,-5,5]]}", "[5,-5,-5,5]]}")).is_err());
        assert!(BoxConfig::from_json(r#"{"boxes":[[-5,5,-5,5]]}"#).is_err());
    }

    #[test]
    fn z_moments() {
        let mut r = rng(10);
        let n = 1_000_000;
        let mut mean = Vector5::zeros();
        let mut second = Mat5::zeros();
        for _ in 0..n {
            let z = sample_z(&mut r).0;
            mean += z;
            second += z * z.transpose();
        }
        let n = n as f64;
        assert!((mean / n).amax() < 0.005);
        let target = Mat5::from_diagonal(&Vector5::new(0.5, 0.5, 0.5, 0.5, 1.0));
        assert!((second / n - target).amax() < 0.01);
    }

    #[test]
    fn z_is_symmetric_in_distribution() {
        // Two-sample Kolmogorov-Smirnov on each coordinate of z against -z.
        let n = 20_000;
        let mut r = rng(11);
        let mut s = rng(12);
        for k in 0..5 {
            let mut a: Vec<f64> = (0..n).map(|_| sample_z(&mut r).0[k]).collect();
            let mut b: Vec<f64> = (0..n).map(|_| -sample_z(&mut s).0[k]).collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            let (mut i, mut j, mut d) = (0, 0, 0.0f64);
            while i < n && j < n {
                if a[i] <= b[j] {
                    i += 1;
                } else {
                    j += 1;
                }
                d = d.max((i as f64 - j as f64).abs() / n as f64);
            }
            // Critical value at level 0.001.
            let crit = 1.95 * (2.0 / n as f64).sqrt();
            assert!(d < crit, "coordinate {k}: D = {d}");
        }
    }

    #[test]
    fn quadric_points_solve_e0() {
        let mut r = rng(13);
        for _ in 0..100 {
            let (u, v) = QuadricPoint::sample(&mut r).correspondence();
            let val = (u.transpose() * e0().matrix() * v)[(0, 0)];
            assert!(val.abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_essential_matrices() {
        let mut r = rng(14);
        let n = 1_000_000;
        let fixed = quaternion_rotation(&mut rng(15));
        let mut mean = Mat3::zeros();
        let mut sq = Mat3::zeros();
        let mut sq_rot = Mat3::zeros();
        for i in 0..n {
            let (e, u, v) = sample_essential_uniform(&mut r);
            let m = *e.matrix();
            if i < 1000 {
                assert!(EssentialMatrix::new(m).is_ok());
                let back = u.matrix() * e0().matrix() * v.matrix().transpose();
                assert!((back - m).amax() < 1e-15);
                assert!((half_trace_norm(&m) - 1.0).abs() < 1e-12);
                assert!(max_abs(&demazure_residuals(&m)) < 1e-12);
            }
            mean += m;
            sq += m.component_mul(&m);
            let w = fixed * m * fixed.transpose();
            sq_rot += w.component_mul(&w);
        }
        let n = n as f64;
        assert!((mean / n).amax() < 0.005);
        // Invariance forces E m_ij^2 = 2/9 and the same after a fixed rotation.
        assert!((sq / n).map(|x| x - 2.0 / 9.0).amax() < 0.005);
        assert!((sq_rot / n).map(|x| x - 2.0 / 9.0).amax() < 0.005);
    }

    #[test]
    fn unit_target_accepts_everything() {
        let chain = mh_chain(&mut rng(16), 500, |_| 1.0).unwrap();
        assert_eq!(chain.accepted, 500);
        assert_eq!(chain.runs.len(), 500);
        assert!(mh_chain(&mut rng(16), 0, |_| 1.0).is_err());
    }

    #[test]
    fn box_chain_rarely_moves() {
        let boxes = BoxConfig::uniform(BoxSpec::centered(5.0).unwrap());
        let chain = mh_box_chain(&mut rng(17), 20_000, &boxes).unwrap();
        let total: u64 = chain.runs.iter().map(|r| r.multiplicity).sum();
        assert_eq!(total, 20_000);
        assert!(chain.accepted < 2_000, "accepted {}", chain.accepted);
        assert!(chain.mean_estimate().is_finite());
    }
}
