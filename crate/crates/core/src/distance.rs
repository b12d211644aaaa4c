//! Unsigned distance kernels between simplex primitives with first and
//! second derivatives w.r.t. the stacked endpoint coordinates.
//!
//! Each kernel classifies the closest-point configuration with plain
//! floating-point barycentric sign tests, then evaluates the matching smooth
//! closed-form branch on [`Dual2`] inputs. Configurations within `1e-12` of a
//! region boundary resolve to the lower-dimensional branch, so derivative
//! sequences stay continuous across region transitions.
//!
//! Gradient/Hessian layouts stack the primitive points in argument order:
//! point-edge is `[x, a, b]`, point-triangle `[x, a, b, c]`, edge-edge
//! `[p1, q1, p2, q2]`.

use crate::autodiff::{
    dual_cross3, dual_dot, dual_norm, dual_point, dual_scale_vec, dual_vec_add, dual_vec_sub,
    Dual2, DualVec,
};
use crate::mesh::HalfSpaceObstacle;
use crate::{Result, SimError};
use nalgebra::{DMatrix, DVector};

/// Barycentric tolerance for region classification.
const REGION_TOL: f64 = 1e-12;

/// Distance value with derivatives w.r.t. stacked primitive coordinates.
#[derive(Clone, Debug)]
pub struct DistanceResult {
    pub d: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
    /// Barycentric parameters of the closest point on each primitive
    /// (empty for point-point, `[s]` for point-edge, `[u, v, w]` for
    /// point-triangle, `[s, t]` for edge-edge).
    pub closest: Vec<f64>,
}

fn check_positive(d: f64, what: &str) -> Result<()> {
    if d == 0.0 || !d.is_finite() {
        return Err(SimError::DegenerateDistance(format!("{what} distance is {d}")));
    }
    Ok(())
}

fn from_dual<const N: usize>(d: Dual2<N>, closest: Vec<f64>) -> DistanceResult {
    let grad = DVector::from_fn(N, |i, _| d.grad[i]);
    let hess = DMatrix::from_fn(N, N, |i, j| d.hess[i][j]);
    DistanceResult { d: d.val, grad, hess, closest }
}

fn sub3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot_d(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_d(a: &[f64]) -> f64 {
    dot_d(a, a).sqrt()
}

// ---------------------------------------------------------------------------
// Point - point
// ---------------------------------------------------------------------------

fn pp_dual<const N: usize, const D: usize>(x1: DualVec<N, D>, x2: DualVec<N, D>) -> Dual2<N> {
    dual_norm(&dual_vec_sub(&x1, &x2))
}

fn pp_impl<const N: usize, const D: usize>(x1: &[f64], x2: &[f64]) -> Result<DistanceResult> {
    let a = dual_point::<N, D>(x1, 0);
    let b = dual_point::<N, D>(x2, D);
    let d = pp_dual(a, b);
    check_positive(d.val, "point-point")?;
    Ok(from_dual(d, vec![]))
}

/// Euclidean distance between two points (2D or 3D).
pub fn dist_point_point(dim: usize, x1: &[f64], x2: &[f64]) -> Result<DistanceResult> {
    match dim {
        2 => pp_impl::<4, 2>(x1, x2),
        3 => pp_impl::<6, 3>(x1, x2),
        _ => Err(SimError::Config(format!("dist_point_point: unsupported dim {dim}"))),
    }
}

/// Distance value only (no derivatives).
pub fn vd_point_point(x1: &[f64], x2: &[f64]) -> f64 {
    x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Point - edge
// ---------------------------------------------------------------------------

/// Closest-point parameter of `x` on segment `(a, b)`, clamped to [0, 1].
pub fn closest_param_point_edge(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let dim = x.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..dim {
        let e = b[k] - a[k];
        num += (x[k] - a[k]) * e;
        den += e * e;
    }
    if den == 0.0 {
        return 0.0;
    }
    (num / den).clamp(0.0, 1.0)
}

pub fn vd_point_edge(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let s = closest_param_point_edge(x, a, b);
    let dim = x.len();
    (0..dim)
        .map(|k| {
            let c = a[k] + s * (b[k] - a[k]);
            (x[k] - c) * (x[k] - c)
        })
        .sum::<f64>()
        .sqrt()
}

/// Interior branch: closest point from the (smooth) unclamped projection.
fn pe_interior_dual<const N: usize, const D: usize>(
    x: DualVec<N, D>,
    a: DualVec<N, D>,
    b: DualVec<N, D>,
) -> Dual2<N> {
    let e = dual_vec_sub(&b, &a);
    let xa = dual_vec_sub(&x, &a);
    let t = dual_dot(&xa, &e) / dual_dot(&e, &e);
    let c = dual_vec_add(&a, &dual_scale_vec(&e, t));
    dual_norm(&dual_vec_sub(&x, &c))
}

fn pe_impl<const N: usize, const D: usize>(x: &[f64], a: &[f64], b: &[f64]) -> Result<DistanceResult> {
    let len = vd_point_point(a, b);
    if len <= 0.0 {
        return Err(SimError::DegeneratePrimitive("zero-length edge in point-edge".into()));
    }
    let s = closest_param_point_edge(x, a, b);
    let xd = dual_point::<N, D>(x, 0);
    let ad = dual_point::<N, D>(a, D);
    let bd = dual_point::<N, D>(b, 2 * D);
    let d = if s <= REGION_TOL {
        pp_dual(xd, ad)
    } else if s >= 1.0 - REGION_TOL {
        pp_dual(xd, bd)
    } else {
        pe_interior_dual(xd, ad, bd)
    };
    check_positive(d.val, "point-edge")?;
    Ok(from_dual(d, vec![s]))
}

/// Distance from a point to a segment, derivatives stacked as `[x, a, b]`.
pub fn dist_point_edge(dim: usize, x: &[f64], a: &[f64], b: &[f64]) -> Result<DistanceResult> {
    match dim {
        2 => pe_impl::<6, 2>(x, a, b),
        3 => pe_impl::<9, 3>(x, a, b),
        _ => Err(SimError::Config(format!("dist_point_edge: unsupported dim {dim}"))),
    }
}

// ---------------------------------------------------------------------------
// Point - triangle (3D)
// ---------------------------------------------------------------------------

/// Barycentric coordinates of the closest point of `x` on triangle `(a,b,c)`.
pub fn closest_bary_point_triangle(x: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> [f64; 3] {
    let ab = sub3(b, a);
    let ac = sub3(c, a);
    let ap = sub3(x, a);
    let d1 = dot_d(&ab, &ap);
    let d2 = dot_d(&ac, &ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let bp = sub3(x, b);
    let d3 = dot_d(&ab, &bp);
    let d4 = dot_d(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return [0.0, 1.0, 0.0];
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return [1.0 - v, v, 0.0];
    }
    let cp = sub3(x, c);
    let d5 = dot_d(&ab, &cp);
    let d6 = dot_d(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return [0.0, 0.0, 1.0];
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return [1.0 - w, 0.0, w];
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [0.0, 1.0 - w, w];
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    [1.0 - v - w, v, w]
}

pub fn vd_point_triangle(x: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let bar = closest_bary_point_triangle(x, a, b, c);
    let mut q = 0.0;
    for k in 0..3 {
        let p = bar[0] * a[k] + bar[1] * b[k] + bar[2] * c[k];
        q += (x[k] - p) * (x[k] - p);
    }
    q.sqrt()
}

/// Face-interior branch: signed plane distance times a fixed sign.
fn pt_face_dual(
    x: DualVec<12, 3>,
    a: DualVec<12, 3>,
    b: DualVec<12, 3>,
    c: DualVec<12, 3>,
    sign: f64,
) -> Dual2<12> {
    let n = dual_cross3(&dual_vec_sub(&b, &a), &dual_vec_sub(&c, &a));
    let xa = dual_vec_sub(&x, &a);
    (dual_dot(&xa, &n) / dual_norm(&n)).scale(sign)
}

/// Distance from a point to a triangle with derivatives stacked `[x, a, b, c]`.
pub fn dist_point_triangle(x: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> Result<DistanceResult> {
    let n = {
        let ab = sub3(b, a);
        let ac = sub3(c, a);
        [
            ab[1] * ac[2] - ab[2] * ac[1],
            ab[2] * ac[0] - ab[0] * ac[2],
            ab[0] * ac[1] - ab[1] * ac[0],
        ]
    };
    if norm_d(&n) == 0.0 {
        return Err(SimError::DegeneratePrimitive("zero-area triangle in point-triangle".into()));
    }
    let bar = closest_bary_point_triangle(x, a, b, c);
    let xd = dual_point::<12, 3>(x, 0);
    let ad = dual_point::<12, 3>(a, 3);
    let bd = dual_point::<12, 3>(b, 6);
    let cd = dual_point::<12, 3>(c, 9);
    let near0 = bar[0] <= REGION_TOL;
    let near1 = bar[1] <= REGION_TOL;
    let near2 = bar[2] <= REGION_TOL;
    let d = match (near0, near1, near2) {
        (false, true, true) => pp_dual(xd, ad),
        (true, false, true) => pp_dual(xd, bd),
        (true, true, false) => pp_dual(xd, cd),
        (false, false, true) => pe_interior_dual(xd, ad, bd),
        (true, false, false) => pe_interior_dual(xd, bd, cd),
        (false, true, false) => pe_interior_dual(xd, ad, cd),
        (false, false, false) => {
            let s = dot_d(&sub3(x, a), &n).signum();
            pt_face_dual(xd, ad, bd, cd, s)
        }
        (true, true, true) => {
            return Err(SimError::DegeneratePrimitive("degenerate barycentrics".into()))
        }
    };
    check_positive(d.val, "point-triangle")?;
    Ok(from_dual(d, bar.to_vec()))
}

// ---------------------------------------------------------------------------
// Edge - edge (3D)
// ---------------------------------------------------------------------------

/// Closest-point parameters `(s, t)` between segments `(p1,q1)` and `(p2,q2)`.
/// Parallel configurations resolve by picking, among the endpoint-projection
/// candidates of minimal distance, the pair minimizing `s + t`.
pub fn closest_params_edge_edge(p1: &[f64], q1: &[f64], p2: &[f64], q2: &[f64]) -> (f64, f64) {
    let d1 = sub3(q1, p1);
    let d2 = sub3(q2, p2);
    let r = sub3(p1, p2);
    let a = dot_d(&d1, &d1);
    let e = dot_d(&d2, &d2);
    let f = dot_d(&d2, &r);
    let c = dot_d(&d1, &r);
    let b = dot_d(&d1, &d2);
    let denom = a * e - b * b;

    if denom > 1e-12 * a * e {
        let mut s = ((b * f - c * e) / denom).clamp(0.0, 1.0);
        let mut t = (b * s + f) / e;
        if t < 0.0 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else if t > 1.0 {
            t = 1.0;
            s = ((b - c) / a).clamp(0.0, 1.0);
        }
        (s, t)
    } else {
        // Parallel: scan the four endpoint projections; deterministic
        // tie-break on minimal s + t.
        let cands = [
            (0.0, (f / e).clamp(0.0, 1.0)),
            (1.0, ((b + f) / e).clamp(0.0, 1.0)),
            ((-c / a).clamp(0.0, 1.0), 0.0),
            (((b - c) / a).clamp(0.0, 1.0), 1.0),
        ];
        let dist = |s: f64, t: f64| {
            (0..3)
                .map(|k| {
                    let u = p1[k] + s * d1[k] - p2[k] - t * d2[k];
                    u * u
                })
                .sum::<f64>()
        };
        let mut best = cands[0];
        let mut best_d = dist(best.0, best.1);
        for &(s, t) in &cands[1..] {
            let dd = dist(s, t);
            if dd < best_d - 1e-14 * (1.0 + best_d)
                || ((dd - best_d).abs() <= 1e-14 * (1.0 + best_d) && s + t < best.0 + best.1)
            {
                best = (s, t);
                best_d = dd;
            }
        }
        best
    }
}

pub fn vd_edge_edge(p1: &[f64], q1: &[f64], p2: &[f64], q2: &[f64]) -> f64 {
    let (s, t) = closest_params_edge_edge(p1, q1, p2, q2);
    (0..3)
        .map(|k| {
            let u = p1[k] + s * (q1[k] - p1[k]) - p2[k] - t * (q2[k] - p2[k]);
            u * u
        })
        .sum::<f64>()
        .sqrt()
}

/// Interior-interior branch: unconstrained stationary pair via Cramer.
fn ee_interior_dual(
    p1: DualVec<12, 3>,
    q1: DualVec<12, 3>,
    p2: DualVec<12, 3>,
    q2: DualVec<12, 3>,
) -> Dual2<12> {
    let d1 = dual_vec_sub(&q1, &p1);
    let d2 = dual_vec_sub(&q2, &p2);
    let r = dual_vec_sub(&p1, &p2);
    let a = dual_dot(&d1, &d1);
    let e = dual_dot(&d2, &d2);
    let b = dual_dot(&d1, &d2);
    let c = dual_dot(&d1, &r);
    let f = dual_dot(&d2, &r);
    let denom = a * e - b * b;
    let s = (b * f - c * e) / denom;
    let t = (a * f - b * c) / denom;
    let c1 = dual_vec_add(&p1, &dual_scale_vec(&d1, s));
    let c2 = dual_vec_add(&p2, &dual_scale_vec(&d2, t));
    dual_norm(&dual_vec_sub(&c1, &c2))
}

/// Distance between two segments, derivatives stacked `[p1, q1, p2, q2]`.
pub fn dist_edge_edge(p1: &[f64], q1: &[f64], p2: &[f64], q2: &[f64]) -> Result<DistanceResult> {
    if vd_point_point(p1, q1) <= 0.0 || vd_point_point(p2, q2) <= 0.0 {
        return Err(SimError::DegeneratePrimitive("zero-length edge in edge-edge".into()));
    }
    let (s, t) = closest_params_edge_edge(p1, q1, p2, q2);
    let p1d = dual_point::<12, 3>(p1, 0);
    let q1d = dual_point::<12, 3>(q1, 3);
    let p2d = dual_point::<12, 3>(p2, 6);
    let q2d = dual_point::<12, 3>(q2, 9);
    let s_lo = s <= REGION_TOL;
    let s_hi = s >= 1.0 - REGION_TOL;
    let t_lo = t <= REGION_TOL;
    let t_hi = t >= 1.0 - REGION_TOL;
    let d = match (s_lo, s_hi, t_lo, t_hi) {
        (true, false, true, false) => pp_dual(p1d, p2d),
        (true, false, false, true) => pp_dual(p1d, q2d),
        (false, true, true, false) => pp_dual(q1d, p2d),
        (false, true, false, true) => pp_dual(q1d, q2d),
        (true, false, false, false) => pe_interior_dual(p1d, p2d, q2d),
        (false, true, false, false) => pe_interior_dual(q1d, p2d, q2d),
        (false, false, true, false) => pe_interior_dual(p2d, p1d, q1d),
        (false, false, false, true) => pe_interior_dual(q2d, p1d, q1d),
        (false, false, false, false) => ee_interior_dual(p1d, q1d, p2d, q2d),
        _ => return Err(SimError::DegeneratePrimitive("edge-edge parameter anomaly".into())),
    };
    check_positive(d.val, "edge-edge")?;
    Ok(from_dual(d, vec![s, t]))
}

// ---------------------------------------------------------------------------
// Point - half-space
// ---------------------------------------------------------------------------

pub fn vd_point_halfspace(x: &[f64], obs: &HalfSpaceObstacle) -> f64 {
    x.iter()
        .zip(&obs.point)
        .zip(&obs.normal)
        .map(|((xi, pi), ni)| (xi - pi) * ni)
        .sum()
}

/// Signed distance of a point above a half-space: `d = (x - p) . n`.
/// Gradient is the unit normal, Hessian zero. Errors on `d <= 0`.
pub fn dist_point_halfspace(x: &[f64], obs: &HalfSpaceObstacle) -> Result<DistanceResult> {
    let d = vd_point_halfspace(x, obs);
    if d <= 0.0 || !d.is_finite() {
        return Err(SimError::DegenerateDistance(format!("point at half-space distance {d}")));
    }
    let dim = x.len();
    Ok(DistanceResult {
        d,
        grad: DVector::from_column_slice(&obs.normal[..dim]),
        hess: DMatrix::zeros(dim, dim),
        closest: vec![],
    })
}
