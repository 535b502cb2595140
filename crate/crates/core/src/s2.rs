//! The unit sphere S² ⊂ ℝ³ with the metric inherited from the ambient space.
//!
//! Points are unit 3-vectors and the tangent space at `n` is identified with
//! `{ξ ∈ ℝ³ : ξ·n = 0}`. The typed API ([`SpherePoint`], [`TangentVector`])
//! is what callers should reach for; the raw `*_vec` functions operate on
//! plain vectors and are used in the per-edge hot loops.

use crate::{Error, Result, Vec3};

/// Pairs with `n·m ≤ -1 + ANTIPODAL_EPS` are rejected by log and transport.
pub const ANTIPODAL_EPS: f64 = 1e-10;
/// Tangent vectors shorter than this are treated as zero by the exponential map.
pub const EXP_EPS: f64 = 1e-14;

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint(Vec3);

impl SpherePoint {
    /// Normalizes `v`. Returns `None` for the zero vector.
    pub fn new(v: Vec3) -> Option<Self> {
        let norm = v.norm();
        (norm > 0.0 && norm.is_finite()).then(|| Self(v / norm))
    }

    /// Wraps a vector that the caller guarantees to be of unit length.
    pub fn from_unit(v: Vec3) -> Self {
        debug_assert!((v.norm() - 1.0).abs() < 1e-12, "not a unit vector: {v:?}");
        Self(v)
    }

    pub fn coords(&self) -> &Vec3 {
        &self.0
    }
}

impl std::ops::Neg for SpherePoint {
    type Output = SpherePoint;
    fn neg(self) -> SpherePoint {
        SpherePoint(-self.0)
    }
}

/// A tangent vector together with its base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub base: SpherePoint,
    pub vec: Vec3,
}

impl TangentVector {
    /// Projects `v` onto the tangent plane at `base`.
    pub fn project(base: SpherePoint, v: Vec3) -> Self {
        let n = base.0;
        Self { base, vec: v - n * n.dot(&v) }
    }

    pub fn zero(base: SpherePoint) -> Self {
        Self { base, vec: Vec3::zeros() }
    }

    pub fn norm(&self) -> f64 {
        self.vec.norm()
    }

    /// `|ξ·n|`, the deviation from the tangent plane.
    pub fn tangency_error(&self) -> f64 {
        self.vec.dot(&self.base.0).abs()
    }
}

/// Geodesic distance, i.e. the angle between `n` and `m`, in `[0, π]`.
pub fn geodesic_distance(n: &SpherePoint, m: &SpherePoint) -> f64 {
    distance_vec(&n.0, &m.0)
}

/// Exponential map `exp_n(ξ)`.
pub fn exp_map(xi: &TangentVector) -> SpherePoint {
    SpherePoint(exp_vec(&xi.base.0, &xi.vec))
}

/// Logarithmic map `log_n(m) ∈ T_n S²`.
pub fn log_map(n: &SpherePoint, m: &SpherePoint) -> Result<TangentVector> {
    Ok(TangentVector { base: *n, vec: log_vec(&n.0, &m.0)? })
}

/// Parallel transport of `xi ∈ T_n S²` to `T_m S²` along the shortest geodesic.
pub fn parallel_transport(n: &SpherePoint, m: &SpherePoint, xi: &TangentVector) -> Result<TangentVector> {
    debug_assert!(xi.base == *n, "tangent vector not based at the transport origin");
    Ok(TangentVector { base: *m, vec: transport_vec(&n.0, &m.0, &xi.vec)? })
}

/// Point on the geodesic `t ↦ exp_n(t ξ)`.
pub fn geodesic(xi: &TangentVector, t: f64) -> SpherePoint {
    SpherePoint(exp_vec(&xi.base.0, &(xi.vec * t)))
}

/// Angle between two unit vectors.
///
/// Evaluated as `atan2(|n × m|, n·m)`, which agrees with `arccos(n·m)` but
/// keeps full relative accuracy near 0 and π.
#[inline]
pub fn distance_vec(n: &Vec3, m: &Vec3) -> f64 {
    n.cross(m).norm().atan2(n.dot(m))
}

#[inline]
pub fn exp_vec(n: &Vec3, xi: &Vec3) -> Vec3 {
    let t = xi.norm();
    if t < EXP_EPS {
        return *n;
    }
    n * t.cos() + xi * (t.sin() / t)
}

#[inline]
pub fn log_vec(n: &Vec3, m: &Vec3) -> Result<Vec3> {
    let c = n.dot(m);
    if c <= -1.0 + ANTIPODAL_EPS {
        return Err(Error::Antipodal { context: format!("log map from {n:?} to {m:?}") });
    }
    let w = m - n * c;
    let s = w.norm();
    if s == 0.0 {
        return Ok(Vec3::zeros());
    }
    let theta = s.atan2(c);
    Ok(w * (theta / s))
}

/// Transport in rotation form
/// `ξ + (cos|v|·u − u − sin|v|·n)(u·ξ)` with `v = log_n(m)`, `u = v/|v|`.
///
/// Every correction coefficient vanishes with `|v|`, so rounding noise in the
/// direction `u` of a tiny `v` does not reach the result.
#[inline]
pub fn transport_vec(n: &Vec3, m: &Vec3, xi: &Vec3) -> Result<Vec3> {
    let v = log_vec(n, m)?;
    let d = v.norm();
    if d == 0.0 {
        return Ok(*xi);
    }
    let u = v / d;
    Ok(xi + (u * (d.cos() - 1.0) - n * d.sin()) * u.dot(xi))
}
