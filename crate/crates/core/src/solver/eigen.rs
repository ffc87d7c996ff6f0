//! Dense real nonsymmetric eigenproblem: balancing, Hessenberg reduction,
//! Francis double-shift QR for the eigenvalues, complex inverse iteration
//! for the eigenvectors.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: C64,
    pub vector: Vec<C64>,
}

/// Eigenvalues of a square matrix, in no particular order.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<C64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix required");
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut b = a.clone();
    balance(&mut b);
    let h = b.hessenberg().h();
    hqr(h)
}

/// All eigenpairs. Eigenvectors are normalized to unit Euclidean length;
/// the vector of `conj(lambda)` is the conjugate of the vector of `lambda`.
pub fn eigen_decomposition(a: &DMatrix<f64>) -> Result<Vec<Eigenpair>> {
    let values = eigenvalues(a)?;
    let mut out = Vec::with_capacity(values.len());
    let mut i = 0;
    while i < values.len() {
        let lambda = values[i];
        if lambda.im != 0.0 && i + 1 < values.len() && values[i + 1] == lambda.conj() {
            let lambda = if lambda.im > 0.0 { lambda } else { lambda.conj() };
            let v = inverse_iteration(a, lambda);
            let w: Vec<C64> = v.iter().map(|c| c.conj()).collect();
            out.push(Eigenpair { value: lambda, vector: v });
            out.push(Eigenpair { value: lambda.conj(), vector: w });
            i += 2;
        } else {
            let v = inverse_iteration(a, lambda);
            out.push(Eigenpair { value: lambda, vector: v });
            i += 1;
        }
    }
    Ok(out)
}

/// Diagonal similarity by powers of two making row and column norms comparable.
fn balance(a: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let n = a.nrows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix by the Francis double-shift QR
/// iteration. Indices below are one-based on a padded copy.
fn hqr(h: DMatrix<f64>) -> Result<Vec<C64>> {
    let n = h.nrows();
    let mut a = vec![vec![0.0f64; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = h[(i, j)];
        }
    }
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }

    let budget = 30 * n;
    let mut sweeps = 0usize;
    let mut nn = n as isize;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let lu = l as usize;
                let mut s = a[lu - 1][lu - 1].abs() + a[lu][lu].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[lu][lu - 1].abs() + s == s {
                    a[lu][lu - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let nu = nn as usize;
            x = a[nu][nu];
            if l == nn {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
            } else {
                y = a[nu - 1][nu - 1];
                w = a[nu][nu - 1] * a[nu - 1][nu];
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        wr[nu - 1] = x + z;
                        wr[nu] = x + z;
                        if z != 0.0 {
                            wr[nu] = x - w / z;
                        }
                        wi[nu - 1] = 0.0;
                        wi[nu] = 0.0;
                    } else {
                        wr[nu - 1] = x + p;
                        wr[nu] = x + p;
                        wi[nu - 1] = -z;
                        wi[nu] = z;
                    }
                    nn -= 2;
                } else {
                    if sweeps >= budget {
                        return Err(Error::EigenNoConvergence { sweeps });
                    }
                    if its > 0 && its % 10 == 0 {
                        // Exceptional shift.
                        t += x;
                        for i in 1..=nu {
                            a[i][i] -= x;
                        }
                        let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    sweeps += 1;
                    let lu = l as usize;
                    let mut m = nu - 2;
                    loop {
                        z = a[m][m];
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s;
                        r = a[m + 2][m + 1];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == lu {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in (m + 2)..=nu {
                        a[i][i - 2] = 0.0;
                        if i != m + 2 {
                            a[i][i - 3] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k + 1 <= nu {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = 0.0;
                            if k != nu - 1 {
                                r = a[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s != 0.0 {
                            if k == m {
                                if lu != m {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nu {
                                let mut pp = a[k][j] + q * a[k + 1][j];
                                if k != nu - 1 {
                                    pp += r * a[k + 2][j];
                                    a[k + 2][j] -= pp * z;
                                }
                                a[k + 1][j] -= pp * y;
                                a[k][j] -= pp * x;
                            }
                            let mmin = nu.min(k + 3);
                            for i in lu..=mmin {
                                let mut pp = x * a[i][k] + y * a[i][k + 1];
                                if k != nu - 1 {
                                    pp += z * a[i][k + 2];
                                    a[i][k + 2] -= pp * r;
                                }
                                a[i][k + 1] -= pp * q;
                                a[i][k] -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l >= nn - 1 {
                break;
            }
        }
    }

    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        out.push(C64::new(wr[i], wi[i]));
    }
    // hqr emits conjugate pairs as (lambda, conj(lambda)) with negative imaginary part first.
    Ok(out)
}

/// Two steps of inverse iteration for the eigenvalue `lambda`.
fn inverse_iteration(a: &DMatrix<f64>, lambda: C64) -> Vec<C64> {
    let n = a.nrows();
    let norm = a.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut m: Vec<Vec<C64>> = (0..n)
        .map(|i| (0..n).map(|j| C64::new(a[(i, j)], 0.0) - if i == j { lambda } else { C64::new(0.0, 0.0) }).collect())
        .collect();
    let perm = lu_in_place(&mut m, f64::EPSILON * norm);
    let mut v: Vec<C64> = (0..n).map(|i| C64::new(1.0 + 0.1 * (i as f64).sin(), 0.0)).collect();
    for _ in 0..3 {
        v = lu_solve(&m, &perm, &v);
        let s = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(s.is_finite() && s > 0.0) {
            break;
        }
        for c in v.iter_mut() {
            *c /= s;
        }
    }
    v
}

/// LU with partial pivoting; tiny pivots are replaced by `floor`.
fn lu_in_place(m: &mut [Vec<C64>], floor: f64) -> Vec<usize> {
    let n = m.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (piv, _) = (k..n)
            .map(|i| (i, m[i][k].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        m.swap(k, piv);
        perm.swap(k, piv);
        if m[k][k].norm() < floor {
            m[k][k] = C64::new(floor, 0.0);
        }
        let d = m[k][k];
        for i in (k + 1)..n {
            let f = m[i][k] / d;
            m[i][k] = f;
            for j in (k + 1)..n {
                let t = m[k][j];
                m[i][j] -= f * t;
            }
        }
    }
    perm
}

fn lu_solve(m: &[Vec<C64>], perm: &[usize], b: &[C64]) -> Vec<C64> {
    let n = m.len();
    let mut y: Vec<C64> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for j in 0..i {
            let t = m[i][j] * y[j];
            y[i] -= t;
        }
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            let t = m[i][j] * y[j];
            y[i] -= t;
        }
        y[i] /= m[i][i];
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{domain, sample_rng};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn sorted_re(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn diagonal_spectrum() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(10, |i, _| (i + 1) as f64));
        let ev = sorted_re(eigenvalues(&a).unwrap());
        for (i, e) in ev.iter().enumerate() {
            assert!((e.re - (i + 1) as f64).abs() < 1e-12);
            assert_eq!(e.im, 0.0);
        }
    }

    #[test]
    fn rotation_block_gives_conjugate_pair() {
        let th = 0.7f64;
        let mut a = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(5, |i, _| 2.0 + i as f64));
        a[(0, 0)] = th.cos();
        a[(0, 1)] = -th.sin();
        a[(1, 0)] = th.sin();
        a[(1, 1)] = th.cos();
        let pairs = eigen_decomposition(&a).unwrap();
        let complex: Vec<_> = pairs.iter().filter(|p| p.value.im.abs() > 1e-12).collect();
        assert_eq!(complex.len(), 2);
        for p in complex {
            assert!((p.value.im.abs() - th.sin()).abs() < 1e-12);
            assert!((p.value.re - th.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn random_matrices_eigenpairs() {
        let mut r = sample_rng(5, domain::TEST, 0);
        for _ in 0..200 {
            let a = DMatrix::from_fn(10, 10, |_, _| r.sample::<f64, _>(StandardNormal));
            let pairs = eigen_decomposition(&a).unwrap();
            assert_eq!(pairs.len(), 10);
            let ac = a.map(|v| C64::new(v, 0.0));
            for p in &pairs {
                let v = nalgebra::DVector::from_vec(p.vector.clone());
                let res = (&ac * &v - &v * p.value).norm();
                assert!(res < 1e-9 * (1.0 + p.value.norm()), "residual {res}");
            }
            // Closed under conjugation.
            for p in &pairs {
                let found = pairs.iter().any(|q| {
                    (q.value - p.value.conj()).norm() <= 1e-8
                        && q.vector.iter().zip(&p.vector).all(|(a, b)| (a - b.conj()).norm() <= 1e-8)
                });
                assert!(found);
            }
            let trace: f64 = (0..10).map(|i| a[(i, i)]).sum();
            let sum: C64 = pairs.iter().map(|p| p.value).sum();
            assert!((sum.re - trace).abs() < 1e-9 * (1.0 + trace.abs()));
            assert!(sum.im.abs() < 1e-9);
        }
    }
}
