//! Convex hulls of small point sets in R^3 and integration over them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type P3 = [f64; 3];

fn sub(a: &P3, b: &P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &P3, b: &P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &P3, b: &P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: &P3) -> f64 {
    dot(a, a).sqrt()
}

/// Signed volume of the tetrahedron `(a, b, c, d)`.
pub fn tet_volume(t: &[P3; 4]) -> f64 {
    dot(&sub(&t[1], &t[0]), &cross(&sub(&t[2], &t[0]), &sub(&t[3], &t[0]))) / 6.0
}

/// A supporting plane `n . x = offset` with unit outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: P3,
    pub offset: f64,
}

/// Convex polytope with its triangulated boundary and a decomposition into
/// tetrahedra sharing an interior apex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope3 {
    /// Extreme points of the hull.
    pub vertices: Vec<P3>,
    /// Outward-oriented boundary triangles, as vertex indices.
    pub facets: Vec<[usize; 3]>,
    pub planes: Vec<Plane>,
    pub tetrahedra: Vec<[P3; 4]>,
}

const EPS: f64 = 1e-12;

impl Polytope3 {
    /// Hull of `points` by enumeration of supporting planes; `O(n^4)`, meant
    /// for a few dozen points.
    pub fn hull(points: &[P3]) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::DegenerateInput("hull needs at least four points".into()));
        }
        let scale = points.iter().map(norm).fold(0.0, f64::max).max(1.0);
        let tol = EPS * scale;
        let mut planes: Vec<Plane> = Vec::new();
        let n = points.len();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let c = cross(&sub(&points[j], &points[i]), &sub(&points[k], &points[i]));
                    let len = norm(&c);
                    if len <= tol * scale {
                        continue;
                    }
                    let nrm = [c[0] / len, c[1] / len, c[2] / len];
                    let off = dot(&nrm, &points[i]);
                    let side: Vec<f64> = points.iter().map(|p| dot(&nrm, p) - off).collect();
                    let (lo, hi) = side.iter().fold((0.0f64, 0.0f64), |(lo, hi), s| (lo.min(*s), hi.max(*s)));
                    let plane = if hi <= tol {
                        Plane { normal: nrm, offset: off }
                    } else if lo >= -tol {
                        Plane { normal: [-nrm[0], -nrm[1], -nrm[2]], offset: -off }
                    } else {
                        continue;
                    };
                    let dup = planes.iter().any(|p| {
                        norm(&sub(&p.normal, &plane.normal)) <= 1e-9 && (p.offset - plane.offset).abs() <= 1e-9 * scale
                    });
                    if !dup {
                        planes.push(plane);
                    }
                }
            }
        }
        if planes.len() < 4 {
            return Err(Error::DegenerateInput("points are coplanar".into()));
        }

        // Faces: extreme points of each supporting plane, in counterclockwise order.
        let mut vertices: Vec<P3> = Vec::new();
        let index_of = |p: &P3, vertices: &mut Vec<P3>| -> usize {
            if let Some(i) = vertices.iter().position(|v| norm(&sub(v, p)) <= tol) {
                i
            } else {
                vertices.push(*p);
                vertices.len() - 1
            }
        };
        let mut faces: Vec<Vec<usize>> = Vec::new();
        for plane in &planes {
            let on: Vec<P3> = points.iter().filter(|p| (dot(&plane.normal, p) - plane.offset).abs() <= tol).copied().collect();
            let ring = planar_hull(&on, &plane.normal);
            faces.push(ring.iter().map(|p| index_of(p, &mut vertices)).collect());
        }

        let mut facets = Vec::new();
        for face in &faces {
            for t in 1..face.len() - 1 {
                facets.push([face[0], face[t], face[t + 1]]);
            }
        }
        let apex = {
            let mut c = [0.0; 3];
            for v in &vertices {
                for d in 0..3 {
                    c[d] += v[d] / vertices.len() as f64;
                }
            }
            c
        };
        let tetrahedra = facets
            .iter()
            .map(|f| [apex, vertices[f[0]], vertices[f[1]], vertices[f[2]]])
            .collect();
        Ok(Polytope3 { vertices, facets, planes, tetrahedra })
    }

    pub fn volume(&self) -> f64 {
        self.tetrahedra.iter().map(tet_volume).sum()
    }

    /// `max_plane (n . p - offset)`; non-positive inside.
    pub fn excess(&self, p: &P3) -> f64 {
        self.planes.iter().map(|pl| dot(&pl.normal, p) - pl.offset).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, p: &P3, tol: f64) -> bool {
        self.excess(p) <= tol
    }
}

/// Convex hull of coplanar points, counterclockwise seen from `normal`.
fn planar_hull(points: &[P3], normal: &P3) -> Vec<P3> {
    // Orthonormal frame (e1, e2) of the plane with e1 x e2 = normal.
    let helper = if normal[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = {
        let c = cross(normal, &helper);
        let l = norm(&c);
        [c[0] / l, c[1] / l, c[2] / l]
    };
    let e2 = cross(normal, &e1);
    let mut pts: Vec<(f64, f64, P3)> = points.iter().map(|p| (dot(p, &e1), dot(p, &e2), *p)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|a, b| (a.0 - b.0).abs() <= EPS && (a.1 - b.1).abs() <= EPS);
    if pts.len() < 3 {
        return pts.into_iter().map(|p| p.2).collect();
    }
    let turn = |o: &(f64, f64, P3), a: &(f64, f64, P3), b: &(f64, f64, P3)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64, P3)> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && turn(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= EPS {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<(f64, f64, P3)> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && turn(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= EPS {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower.into_iter().map(|p| p.2).collect()
}

/// Barycentric weights of the four-point rule, exact for quadratics.
const QUAD_A: f64 = 0.585_410_196_624_968_5;
const QUAD_B: f64 = 0.138_196_601_125_010_5;

/// Integral of `f` over a tetrahedron by the degree-2 four-point rule.
pub fn integrate_tet<F: Fn(&P3) -> f64>(t: &[P3; 4], f: &F) -> f64 {
    let vol = tet_volume(t).abs();
    let mut acc = 0.0;
    for k in 0..4 {
        let mut p = [0.0; 3];
        for (j, v) in t.iter().enumerate() {
            let w = if j == k { QUAD_A } else { QUAD_B };
            for d in 0..3 {
                p[d] += w * v[d];
            }
        }
        acc += f(&p);
    }
    vol * acc / 4.0
}

/// Integral of `rho_1 rho_2` over a union of tetrahedra.
pub fn integrate_rho1rho2_tets(tets: &[[P3; 4]]) -> f64 {
    tets.iter().map(|t| integrate_tet(t, &|p: &P3| p[0] * p[1])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_tets() -> Vec<[P3; 4]> {
        // The five-tetrahedron split of the unit cube.
        let c = |x: f64, y: f64, z: f64| [x, y, z];
        vec![
            [c(0., 0., 0.), c(1., 0., 0.), c(0., 1., 0.), c(0., 0., 1.)],
            [c(1., 1., 0.), c(1., 0., 0.), c(0., 1., 0.), c(1., 1., 1.)],
            [c(1., 0., 1.), c(1., 0., 0.), c(0., 0., 1.), c(1., 1., 1.)],
            [c(0., 1., 1.), c(0., 1., 0.), c(0., 0., 1.), c(1., 1., 1.)],
            [c(1., 0., 0.), c(0., 1., 0.), c(0., 0., 1.), c(1., 1., 1.)],
        ]
    }

    #[test]
    fn cube_integral() {
        let tets = cube_tets();
        let vol: f64 = tets.iter().map(|t| tet_volume(t).abs()).sum();
        assert!((vol - 1.0).abs() < 1e-14);
        assert!((integrate_rho1rho2_tets(&tets) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn simplex_integral() {
        let t = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!((integrate_rho1rho2_tets(&[t]) - 1.0 / 120.0).abs() < 1e-15);
    }

    #[test]
    fn cube_hull() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push([(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        pts.push([0.5, 0.5, 0.5]);
        pts.push([0.5, 0.5, 1.0]);
        let h = Polytope3::hull(&pts).unwrap();
        assert_eq!(h.vertices.len(), 8);
        assert_eq!(h.planes.len(), 6);
        assert!((h.volume() - 1.0).abs() < 1e-13);
        assert!((integrate_rho1rho2_tets(&h.tetrahedra) - 0.25).abs() < 1e-13);
        assert!(h.tetrahedra.iter().all(|t| tet_volume(t) >= 0.0));
        for p in &pts {
            assert!(h.contains(p, 1e-12));
        }
        assert!(!h.contains(&[1.1, 0.5, 0.5], 1e-12));
    }

    #[test]
    fn coplanar_points_rejected() {
        let pts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        assert!(Polytope3::hull(&pts).is_err());
    }
}
