//! Real roots of the binary cubic `det(sA + tB)`.

use crate::error::{Error, Result};
use crate::geometry::Mat3;

/// Coefficients `(c0, c1, c2, c3)` of `det(sA + tB) = c0 s^3 + c1 s^2 t + c2 s t^2 + c3 t^3`.
pub fn pencil_coefficients(a: &Mat3, b: &Mat3) -> [f64; 4] {
    let mixed = |x: &Mat3, y: &Mat3| -> f64 {
        // Sum of determinants with one column of x replaced by y.
        (0..3)
            .map(|j| {
                let mut m = *x;
                m.set_column(j, &y.column(j));
                m.determinant()
            })
            .sum()
    };
    [a.determinant(), mixed(a, b), mixed(b, a), b.determinant()]
}

/// Number of distinct real projective roots `[s : t]` of `det(sA + tB)`.
pub fn count_real_cubic_pencil(a: &Mat3, b: &Mat3) -> Result<u8> {
    let c = pencil_coefficients(a, b);
    let scale = (a.norm() + b.norm()).powi(3);
    let cmax = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(cmax > 1e-14 * scale) {
        return Err(Error::DegeneratePencil);
    }
    let [p, q, r, s] = c.map(|v| v / cmax);
    let disc = 18.0 * p * q * r * s - 4.0 * q.powi(3) * s + q * q * r * r - 4.0 * p * r.powi(3) - 27.0 * p * p * s * s;
    const TOL: f64 = 1e-10;
    if disc > TOL {
        Ok(3)
    } else if disc < -TOL {
        Ok(1)
    } else {
        // Repeated root; a triple root makes the Hessian covariant vanish.
        let h = [q * q - 3.0 * p * r, q * r - 9.0 * p * s, r * r - 3.0 * q * s];
        if h.iter().all(|v| v.abs() <= TOL.sqrt()) {
            Ok(1)
        } else {
            Ok(2)
        }
    }
}
