//! Real points of the essential variety on a codimension-5 linear space.
//!
//! The linear equations are solved by an orthonormal nullspace basis
//! `E1..E4`, so candidates are `x E1 + y E2 + z E3 + E4`. The ten cubics in
//! `(x, y, z)` are reduced by Gauss-Jordan elimination, and the solutions are
//! read off the eigenvectors of the multiplication-by-`x` matrix on the
//! quotient basis `[x^2, xy, xz, y^2, yz, z^2, x, y, z, 1]`.

mod eigen;
mod pencil;
mod poly;
mod refine;

use nalgebra::{DMatrix, Matrix4, SMatrix, SVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use eigen::{eigen_decomposition, eigenvalues, Eigenpair, C64};
pub use pencil::{count_real_cubic_pencil, pencil_coefficients};
pub use poly::{build_constraint_matrix, monomial_vector, ConstraintMatrix, CUBIC_MONOMIALS};
pub use refine::residuals;

use crate::distributions::{linear_space_from_correspondences, sample_rotation, sample_unit_vec3, Correspondences5};
use crate::error::{Error, Result};
use crate::geometry::{essential_from_pose, projective_distance, EssentialMatrix, Mat3, Vec3};
use crate::rng::{domain, sample_rng};

/// Relative threshold on the smallest singular value of a linear space.
pub const RANK_TOL: f64 = 1e-10;
/// Candidates with a larger imaginary part are discarded as complex.
pub const IMAG_TOL: f64 = 1e-6;
/// Maximum residual of an accepted solution.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Solutions closer than this in RP^8 are the same point.
pub const DEDUP_TOL: f64 = 1e-6;
/// Smallest admissible pivot relative to the largest entry.
pub const PIVOT_TOL: f64 = 1e-12;

/// Five linear functionals on 3x3 matrices, in row-major vectorization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 9]; 5]", into = "[[f64; 9]; 5]")]
pub struct LinearSpace {
    rows: [[f64; 9]; 5],
}

impl LinearSpace {
    pub fn new(rows: [[f64; 9]; 5]) -> Result<Self> {
        if !rows.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::InvalidValue("non-finite entry in linear space".into()));
        }
        let sv = to_matrix(&rows).singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
        if !(ratio >= RANK_TOL) {
            return Err(Error::RankDeficient { ratio });
        }
        Ok(LinearSpace { rows })
    }

    pub fn rows(&self) -> &[[f64; 9]; 5] {
        &self.rows
    }

    /// Copy with every row scaled to unit Euclidean norm.
    pub fn normalized_rows(&self) -> [[f64; 9]; 5] {
        self.rows.map(|r| {
            let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            r.map(|v| v / n)
        })
    }

    /// `rows . vec(E)`.
    pub fn apply(&self, e: &Mat3) -> [f64; 5] {
        self.rows.map(|r| (0..9).map(|c| r[c] * e[(c / 3, c % 3)]).sum())
    }
}

impl TryFrom<[[f64; 9]; 5]> for LinearSpace {
    type Error = Error;
    fn try_from(rows: [[f64; 9]; 5]) -> Result<Self> {
        LinearSpace::new(rows)
    }
}

impl From<LinearSpace> for [[f64; 9]; 5] {
    fn from(l: LinearSpace) -> Self {
        l.rows
    }
}

fn to_matrix(rows: &[[f64; 9]; 5]) -> SMatrix<f64, 5, 9> {
    SMatrix::<f64, 5, 9>::from_fn(|i, j| rows[i][j])
}

/// Orthonormal basis of the kernel of `l`, from the full orthogonal factor
/// of `l^T`.
pub fn nullspace_basis(l: &LinearSpace) -> [[f64; 9]; 4] {
    let qr = to_matrix(&l.normalized_rows()).transpose().qr();
    let mut qt = SMatrix::<f64, 9, 9>::identity();
    qr.q_tr_mul(&mut qt);
    std::array::from_fn(|k| std::array::from_fn(|c| qt[(5 + k, c)]))
}

/// Gauss-Jordan reduction to `[1 | B]` followed by assembly of the
/// multiplication-by-`x` matrix on the quotient basis.
pub fn action_matrix(m: &ConstraintMatrix) -> Result<SMatrix<f64, 10, 10>> {
    let mut a = *m;
    let scale = a.fixed_view::<10, 10>(0, 0).amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::EliminationFailed { pivot_ratio: 0.0 });
    }
    for k in 0..10 {
        let (piv, val) = (k..10)
            .map(|i| (i, a[(i, k)].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty");
        if !(val / scale >= PIVOT_TOL) {
            return Err(Error::EliminationFailed { pivot_ratio: val / scale });
        }
        a.swap_rows(k, piv);
        let p = a[(k, k)];
        for c in k..20 {
            a[(k, c)] /= p;
        }
        for i in 0..10 {
            if i != k {
                let f = a[(i, k)];
                if f != 0.0 {
                    for c in k..20 {
                        a[(i, c)] -= f * a[(k, c)];
                    }
                }
            }
        }
    }
    let mut t = SMatrix::<f64, 10, 10>::zeros();
    for i in 0..6 {
        for j in 0..10 {
            t[(i, j)] = -a[(i, 10 + j)];
        }
    }
    t[(6, 0)] = 1.0;
    t[(7, 1)] = 1.0;
    t[(8, 2)] = 1.0;
    t[(9, 6)] = 1.0;
    Ok(t)
}

/// A complex candidate `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub x: C64,
    pub y: C64,
    pub z: C64,
}

impl Candidate {
    pub fn max_imag(&self) -> f64 {
        self.x.im.abs().max(self.y.im.abs()).max(self.z.im.abs())
    }
}

/// Eigenvector coordinates of `x, y, z` divided by the coordinate of `1`.
pub fn eigen_candidates(t: &SMatrix<f64, 10, 10>) -> Result<Vec<Candidate>> {
    let d = DMatrix::from_fn(10, 10, |i, j| t[(i, j)]);
    let pairs = eigen_decomposition(&d)?;
    Ok(pairs
        .iter()
        .map(|p| {
            let w = p.vector[9];
            Candidate { x: p.vector[6] / w, y: p.vector[7] / w, z: p.vector[8] / w }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail")]
pub enum SolveStatus {
    Ok,
    Retried(u32),
    Failed(String),
}

impl SolveStatus {
    pub fn is_failed(&self) -> bool {
        matches!(self, SolveStatus::Failed(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub real_count: usize,
    pub solutions: Vec<EssentialMatrix>,
    pub status: SolveStatus,
    pub residual_max: f64,
}

/// Keeps the real candidates, polishes them, and removes duplicates.
/// The returned status is `Ok` or `Failed("parity")`.
pub fn validate_and_count(
    candidates: &[Candidate],
    l: &LinearSpace,
    basis: &[[f64; 9]; 4],
) -> CountResult {
    let rows = l.normalized_rows();
    let mut solutions: Vec<Mat3> = Vec::new();
    let mut residual_max = 0.0f64;
    for c in candidates {
        if !(c.max_imag() <= IMAG_TOL) || !c.x.re.is_finite() || !c.y.re.is_finite() || !c.z.re.is_finite() {
            continue;
        }
        let coef = [c.x.re, c.y.re, c.z.re, 1.0];
        let e = Mat3::from_fn(|i, j| (0..4).map(|k| coef[k] * basis[k][3 * i + j]).sum());
        let (e, res) = refine::gauss_newton(&rows, e, RESIDUAL_TOL);
        if !(res <= RESIDUAL_TOL) {
            continue;
        }
        if solutions.iter().any(|s| projective_distance(s, &e) <= DEDUP_TOL) {
            continue;
        }
        residual_max = residual_max.max(res);
        solutions.push(canonical_sign(e));
    }
    let real_count = solutions.len();
    let status = if real_count % 2 == 0 { SolveStatus::Ok } else { SolveStatus::Failed("parity".into()) };
    CountResult {
        real_count,
        solutions: solutions.into_iter().map(EssentialMatrix::new_unchecked).collect(),
        status,
        residual_max,
    }
}

/// Sign representative with positive largest-magnitude entry.
fn canonical_sign(e: Mat3) -> Mat3 {
    let (mut best, mut val) = (0.0f64, 0.0);
    for v in e.iter() {
        if v.abs() > best {
            best = v.abs();
            val = *v;
        }
    }
    if val < 0.0 {
        -e
    } else {
        e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Re-randomizations allowed after an elimination or eigen failure.
    pub retries: u32,
    /// Seed of the re-randomization stream.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { retries: 5, seed: 0 }
    }
}

/// Random orthogonal 4x4 matrix from the QR factor of a Gaussian matrix.
fn random_mixing(seed: u64, attempt: u64) -> Matrix4<f64> {
    let mut rng = sample_rng(seed, domain::SOLVER, attempt);
    let g = Matrix4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

fn mix(basis: &[[f64; 9]; 4], q: &Matrix4<f64>) -> [[f64; 9]; 4] {
    std::array::from_fn(|k| std::array::from_fn(|c| (0..4).map(|j| q[(j, k)] * basis[j][c]).sum()))
}

fn attempt(l: &LinearSpace, basis: &[[f64; 9]; 4]) -> Result<CountResult> {
    let m = build_constraint_matrix(basis);
    let t = action_matrix(&m)?;
    let cands = eigen_candidates(&t)?;
    Ok(validate_and_count(&cands, l, basis))
}

/// Counts and returns the real points of the essential variety on `l`.
///
/// Elimination or eigen failures re-randomize the nullspace basis up to
/// `retries` times; an odd count gets one re-randomized second attempt.
pub fn solve_five_point(l: &LinearSpace, opts: &SolveOptions) -> CountResult {
    let base = nullspace_basis(l);
    let mut basis = base;
    let mut used = 0u32;
    let mut parity_retry_used = false;
    loop {
        match attempt(l, &basis) {
            Ok(res) if !res.status.is_failed() => {
                let status = if used == 0 { SolveStatus::Ok } else { SolveStatus::Retried(used) };
                return CountResult { status, ..res };
            }
            Ok(res) => {
                if parity_retry_used {
                    return res;
                }
                parity_retry_used = true;
            }
            Err(e) => {
                if used >= opts.retries {
                    return CountResult {
                        real_count: 0,
                        solutions: Vec::new(),
                        status: SolveStatus::Failed(e.to_string()),
                        residual_max: 0.0,
                    };
                }
            }
        }
        used += 1;
        basis = mix(&base, &random_mixing(opts.seed, used as u64));
    }
}

/// A linear space built from a known pose and five world points seen by the
/// cameras `[1 | 0]` and `[R | t]`.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub space: LinearSpace,
    pub correspondences: Correspondences5,
    pub essential: EssentialMatrix,
}

/// `u_i` is the image in the second camera and `v_i` in the first, so that
/// `u_i^T E(R, t) v_i = 0`.
pub fn planted_instance<R: Rng + ?Sized>(rng: &mut R) -> PlantedInstance {
    loop {
        let r = sample_rotation(rng);
        let t = sample_unit_vec3(rng);
        let mut u = [Vec3::zeros(); 5];
        let mut v = [Vec3::zeros(); 5];
        for i in 0..5 {
            let x = Vec3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal)) + Vec3::new(0.0, 0.0, 3.0);
            v[i] = x;
            u[i] = r.matrix() * x + t.vector();
        }
        let Ok(c) = Correspondences5::from_vectors(&u, &v) else { continue };
        let Ok(space) = linear_space_from_correspondences(&c) else { continue };
        return PlantedInstance { space, correspondences: c, essential: essential_from_pose(&r, &t) };
    }
}

/// The nullspace coordinates `(x, y, z)` of `e` in the chart `w = 1`.
pub fn chart_coordinates(e: &Mat3, basis: &[[f64; 9]; 4]) -> Option<[f64; 3]> {
    let v = SVector::<f64, 9>::from_fn(|c, _| e[(c / 3, c % 3)]);
    let coords: [f64; 4] = std::array::from_fn(|k| (0..9).map(|c| basis[k][c] * v[c]).sum());
    if coords[3].abs() < 1e-12 {
        return None;
    }
    Some([coords[0] / coords[3], coords[1] / coords[3], coords[2] / coords[3]])
}
