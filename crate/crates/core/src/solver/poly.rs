//! The ten Demazure cubics of `E(x, y, z) = x E1 + y E2 + z E3 + E4`.
//!
//! Polynomials in `(x, y, z)` are dense arrays over fixed monomial lists.
//! Linear forms use `[x, y, z, 1]`, quadrics `[x^2, xy, xz, y^2, yz, z^2, x, y, z, 1]`
//! and cubics the 20 monomials of [`CUBIC_MONOMIALS`].

use nalgebra::SMatrix;

/// 10x20 coefficient matrix: row `k` is the `k`-th cubic.
pub type ConstraintMatrix = SMatrix<f64, 10, 20>;

type Exp = (u8, u8, u8);

const LINEAR_MONOMIALS: [Exp; 4] = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, 0)];

pub(crate) const QUADRIC_MONOMIALS: [Exp; 10] = [
    (2, 0, 0),
    (1, 1, 0),
    (1, 0, 1),
    (0, 2, 0),
    (0, 1, 1),
    (0, 0, 2),
    (1, 0, 0),
    (0, 1, 0),
    (0, 0, 1),
    (0, 0, 0),
];

/// `x^3, x^2y, x^2z, xy^2, xyz, xz^2, y^3, y^2z, yz^2, z^3`, then the ten
/// quotient-basis monomials of degree at most two.
pub const CUBIC_MONOMIALS: [Exp; 20] = [
    (3, 0, 0),
    (2, 1, 0),
    (2, 0, 1),
    (1, 2, 0),
    (1, 1, 1),
    (1, 0, 2),
    (0, 3, 0),
    (0, 2, 1),
    (0, 1, 2),
    (0, 0, 3),
    (2, 0, 0),
    (1, 1, 0),
    (1, 0, 1),
    (0, 2, 0),
    (0, 1, 1),
    (0, 0, 2),
    (1, 0, 0),
    (0, 1, 0),
    (0, 0, 1),
    (0, 0, 0),
];

const fn find<const N: usize>(list: &[Exp; N], e: Exp) -> usize {
    let mut i = 0;
    while i < N {
        if list[i].0 == e.0 && list[i].1 == e.1 && list[i].2 == e.2 {
            return i;
        }
        i += 1;
    }
    panic!("monomial not in list");
}

const fn add(a: Exp, b: Exp) -> Exp {
    (a.0 + b.0, a.1 + b.1, a.2 + b.2)
}

const LIN_LIN: [[usize; 4]; 4] = {
    let mut t = [[0; 4]; 4];
    let mut i = 0;
    while i < 4 {
        let mut j = 0;
        while j < 4 {
            t[i][j] = find(&QUADRIC_MONOMIALS, add(LINEAR_MONOMIALS[i], LINEAR_MONOMIALS[j]));
            j += 1;
        }
        i += 1;
    }
    t
};

const QUAD_LIN: [[usize; 4]; 10] = {
    let mut t = [[0; 4]; 10];
    let mut i = 0;
    while i < 10 {
        let mut j = 0;
        while j < 4 {
            t[i][j] = find(&CUBIC_MONOMIALS, add(QUADRIC_MONOMIALS[i], LINEAR_MONOMIALS[j]));
            j += 1;
        }
        i += 1;
    }
    t
};

type Lin = [f64; 4];
type Quad = [f64; 10];
type Cubic = [f64; 20];

fn mul_ll(a: &Lin, b: &Lin, out: &mut Quad) {
    for i in 0..4 {
        for j in 0..4 {
            out[LIN_LIN[i][j]] += a[i] * b[j];
        }
    }
}

fn mul_ql(a: &Quad, b: &Lin, out: &mut Cubic, scale: f64) {
    for i in 0..10 {
        let ai = a[i] * scale;
        for j in 0..4 {
            out[QUAD_LIN[i][j]] += ai * b[j];
        }
    }
}

/// Coefficients of the ten cubics over [`CUBIC_MONOMIALS`].
pub fn build_constraint_matrix(basis: &[[f64; 9]; 4]) -> ConstraintMatrix {
    // e[i][j] is the linear form of entry (i, j).
    let mut e = [[[0.0; 4]; 3]; 3];
    for (k, b) in basis.iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                e[i][j][k] = b[3 * i + j];
            }
        }
    }

    // P = E E^T, symmetric.
    let mut p = [[[0.0; 10]; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let mut q = [0.0; 10];
            for k in 0..3 {
                mul_ll(&e[i][k], &e[j][k], &mut q);
            }
            p[i][j] = q;
            p[j][i] = q;
        }
    }
    let mut half_trace = [0.0; 10];
    for i in 0..3 {
        for m in 0..10 {
            half_trace[m] += 0.5 * p[i][i][m];
        }
    }

    let mut m = ConstraintMatrix::zeros();

    // det E = e00 (e11 e22 - e12 e21) - e01 (e10 e22 - e12 e20) + e02 (e10 e21 - e11 e20)
    let mut det = [0.0; 20];
    let minors = [((1, 1), (2, 2), (1, 2), (2, 1)), ((1, 0), (2, 2), (1, 2), (2, 0)), ((1, 0), (2, 1), (1, 1), (2, 0))];
    for (col, &(a, b, c, d)) in minors.iter().enumerate() {
        let mut q = [0.0; 10];
        mul_ll(&e[a.0][a.1], &e[b.0][b.1], &mut q);
        let mut q2 = [0.0; 10];
        mul_ll(&e[c.0][c.1], &e[d.0][d.1], &mut q2);
        for k in 0..10 {
            q[k] -= q2[k];
        }
        let sign = if col == 1 { -1.0 } else { 1.0 };
        mul_ql(&q, &e[0][col], &mut det, sign);
    }
    for k in 0..20 {
        m[(0, k)] = det[k];
    }

    // 2 P E - tr(P) E = 2 (P E - (tr P / 2) E)
    for i in 0..3 {
        for j in 0..3 {
            let mut c = [0.0; 20];
            for k in 0..3 {
                mul_ql(&p[i][k], &e[k][j], &mut c, 2.0);
            }
            mul_ql(&half_trace, &e[i][j], &mut c, -2.0);
            for k in 0..20 {
                m[(1 + 3 * i + j, k)] = c[k];
            }
        }
    }
    m
}

/// Values of the 20 monomials at `(x, y, z)`.
pub fn monomial_vector(x: f64, y: f64, z: f64) -> [f64; 20] {
    CUBIC_MONOMIALS.map(|(a, b, c)| x.powi(a as i32) * y.powi(b as i32) * z.powi(c as i32))
}
