//! Gauss-Newton polishing of a candidate essential matrix against the five
//! linear equations and the ten Demazure cubics.

use nalgebra::{SMatrix, SVector};

use crate::geometry::{demazure_residuals, half_trace_norm, Mat3};

pub type Residuals = SVector<f64, 15>;
type Jacobian = SMatrix<f64, 15, 9>;

pub const MAX_ITERS: usize = 10;

fn mat(e: &SVector<f64, 9>) -> Mat3 {
    Mat3::from_fn(|i, j| e[3 * i + j])
}

/// Residual vector: `rows . vec(E)` then the Demazure cubics.
pub fn residuals(rows: &[[f64; 9]; 5], e: &Mat3) -> Residuals {
    let mut out = Residuals::zeros();
    for (k, row) in rows.iter().enumerate() {
        out[k] = (0..9).map(|c| row[c] * e[(c / 3, c % 3)]).sum();
    }
    for (k, v) in demazure_residuals(e).iter().enumerate() {
        out[5 + k] = *v;
    }
    out
}

fn jacobian(rows: &[[f64; 9]; 5], e: &Mat3) -> Jacobian {
    let mut j = Jacobian::zeros();
    for (k, row) in rows.iter().enumerate() {
        for c in 0..9 {
            j[(k, c)] = row[c];
        }
    }
    let cof = e.transpose().try_inverse().map(|inv| inv * e.determinant());
    let et = e.transpose();
    let eet = e * et;
    let ete = et * e;
    let tr = eet.trace();
    for c in 0..9 {
        let (a, b) = (c / 3, c % 3);
        // d det / d e_ab is the (a, b) cofactor.
        j[(5, c)] = match cof {
            Some(m) => m[(a, b)],
            None => cofactor(e, a, b),
        };
        let mut d = Mat3::zeros();
        d[(a, b)] = 1.0;
        let dc = 2.0 * (d * ete + e * d.transpose() * e + eet * d) - 2.0 * e[(a, b)] * e - tr * d;
        for i in 0..3 {
            for k in 0..3 {
                j[(6 + 3 * i + k, c)] = dc[(i, k)];
            }
        }
    }
    j
}

fn cofactor(e: &Mat3, a: usize, b: usize) -> f64 {
    let r: Vec<usize> = (0..3).filter(|&i| i != a).collect();
    let c: Vec<usize> = (0..3).filter(|&i| i != b).collect();
    let minor = e[(r[0], c[0])] * e[(r[1], c[1])] - e[(r[0], c[1])] * e[(r[1], c[0])];
    if (a + b) % 2 == 0 {
        minor
    } else {
        -minor
    }
}

fn normalize(e: Mat3) -> Mat3 {
    e / half_trace_norm(&e)
}

/// Refines `e` and returns it with half-trace norm one and the final max residual.
pub fn gauss_newton(rows: &[[f64; 9]; 5], e: Mat3, tol: f64) -> (Mat3, f64) {
    let mut e = normalize(e);
    let mut res = residuals(rows, &e).amax();
    for _ in 0..MAX_ITERS {
        if res <= tol * 1e-3 {
            break;
        }
        let r = residuals(rows, &e);
        let jac = jacobian(rows, &e);
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let step = match svd.solve(&r, 1e-10 * smax) {
            Ok(s) => s,
            Err(_) => break,
        };
        let v = SVector::<f64, 9>::from_fn(|c, _| e[(c / 3, c % 3)]) - step;
        let cand = normalize(mat(&v));
        let cand_res = residuals(rows, &cand).amax();
        if !(cand_res < res) {
            break;
        }
        e = cand;
        res = cand_res;
    }
    (e, res)
}
