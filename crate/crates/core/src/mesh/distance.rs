//! Point-to-surface and sampled Hausdorff distances.

use super::SurfaceMesh;
use crate::Vec3;

/// Closest point to `p` on the triangle `(a, b, c)`.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Distance from `p` to the surface, by brute force over triangles.
pub fn point_surface_distance(p: &Vec3, mesh: &SurfaceMesh) -> f64 {
    (0..mesh.triangle_count())
        .map(|t| {
            let [a, b, c] = mesh.triangle_points(t);
            (p - closest_point_on_triangle(p, &a, &b, &c)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Points on a regular barycentric grid with `k` subdivisions per triangle
/// edge, vertices included.
pub fn surface_samples(mesh: &SurfaceMesh, k: usize) -> Vec<Vec3> {
    let k = k.max(1);
    let mut out: Vec<Vec3> = mesh.vertices().to_vec();
    for t in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.triangle_points(t);
        for i in 0..=k {
            for j in 0..=(k - i) {
                let l = k - i - j;
                if i == k || j == k || l == k {
                    continue;
                }
                out.push((a * i as f64 + b * j as f64 + c * l as f64) / k as f64);
            }
        }
    }
    out
}

/// Symmetric Hausdorff distance, each direction sampled with
/// [`surface_samples`].
pub fn hausdorff_distance(a: &SurfaceMesh, b: &SurfaceMesh, k: usize) -> f64 {
    let one_sided = |from: &SurfaceMesh, to: &SurfaceMesh| {
        surface_samples(from, k).iter().map(|p| point_surface_distance(p, to)).fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}
