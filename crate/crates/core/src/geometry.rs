//! Convex half-space geometry.
//!
//! Obstacles are rectangular cuboids kept in general `A x <= B` half-space
//! form so rotated convex polyhedra work unchanged. The spherical
//! sensing/jamming volume is inner-approximated by a regular dodecahedron
//! with the same circumradius; its 12 face half-spaces are what the
//! controllers consume.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("dodecahedron face enumeration found {found} faces (expected 12)")]
    FaceEnumeration { found: usize },
}

/// A convex polyhedral obstacle as `A x <= B`, plus box diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cuboid {
    /// Outward unit face normals.
    pub normals: Vec<[f64; 3]>,
    /// Face plane offsets; a point `x` is inside iff `n_i . x <= b_i` for all i.
    pub offsets: Vec<f64>,
    /// Box center (diagnostics / scenario round-trip).
    pub center: [f64; 3],
    /// Box edge half-lengths.
    pub half_extents: [f64; 3],
}

impl Cuboid {
    pub fn faces(&self) -> impl Iterator<Item = (Vector3<f64>, f64)> + '_ {
        self.normals
            .iter()
            .zip(self.offsets.iter())
            .map(|(n, &b)| (Vector3::new(n[0], n[1], n[2]), b))
    }

    /// Half-space containment: inside or on the boundary.
    pub fn contains(&self, point: &Vector3<f64>) -> bool {
        self.faces().all(|(n, b)| n.dot(point) <= b)
    }
}

/// Axis-aligned cuboid from center and half-extents.
pub fn cuboid_from_box(
    center: Vector3<f64>,
    half_extents: Vector3<f64>,
) -> Result<Cuboid, GeometryError> {
    for (i, &h) in half_extents.iter().enumerate() {
        if !(h > 0.0) {
            return Err(GeometryError::NonPositive {
                name: ["half_extent_x", "half_extent_y", "half_extent_z"][i],
                value: h,
            });
        }
    }
    let mut normals = Vec::with_capacity(6);
    let mut offsets = Vec::with_capacity(6);
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let mut n = Vector3::zeros();
            n[axis] = sign;
            normals.push([n.x, n.y, n.z]);
            offsets.push(sign * center[axis] + half_extents[axis]);
        }
    }
    Ok(Cuboid {
        normals,
        offsets,
        center: [center.x, center.y, center.z],
        half_extents: [half_extents.x, half_extents.y, half_extents.z],
    })
}

/// True when `point` is strictly inside the obstacle: no face separates it.
/// Points exactly on a face count as avoided.
pub fn avoidance_violated(c: &Cuboid, point: &Vector3<f64>) -> bool {
    c.faces().all(|(n, b)| n.dot(point) < b)
}

/// The goal region the target steers to: a cuboid and its centroid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoalRegion {
    pub centroid: [f64; 3],
    pub extent: Cuboid,
}

impl GoalRegion {
    pub fn centroid_vec(&self) -> Vector3<f64> {
        Vector3::new(self.centroid[0], self.centroid[1], self.centroid[2])
    }

    pub fn contains(&self, point: &Vector3<f64>) -> bool {
        self.extent.contains(point)
    }
}

/// Regular dodecahedron centered at the origin, inscribed in the sphere of
/// radius `circumradius`. `face_normals` rows are unit outward normals; a
/// point `x` is inside iff `D x <= C` row-wise.
#[derive(Debug, Clone)]
pub struct Dodecahedron {
    pub face_normals: Vec<Vector3<f64>>,
    pub face_offsets: Vec<f64>,
    pub circumradius: f64,
    /// The 20 vertices of the construction.
    pub vertices: Vec<Vector3<f64>>,
    /// Vertex indices of each pentagonal face.
    pub faces: Vec<Vec<usize>>,
}

/// Golden ratio.
pub const PHI: f64 = 1.618_033_988_749_894_8;

/// The 20 vertices: a cube plus three golden rectangles, all scaled to
/// circumradius `r`.
pub fn dodecahedron_vertices(r: f64) -> Vec<Vector3<f64>> {
    let s3 = 3.0_f64.sqrt();
    let a = r / s3;
    let b = r * PHI / s3;
    let c = r / (PHI * s3);
    let mut v = Vec::with_capacity(20);
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                v.push(Vector3::new(sx * a, sy * a, sz * a));
            }
        }
    }
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            v.push(Vector3::new(0.0, s1 * b, s2 * c)); // yz rectangle
            v.push(Vector3::new(s1 * c, 0.0, s2 * b)); // xz rectangle
            v.push(Vector3::new(s1 * b, s2 * c, 0.0)); // xy rectangle
        }
    }
    v
}

/// Builds the dodecahedron for the given circumradius.
///
/// Faces are recovered from the vertex set by supporting-plane enumeration
/// rather than hand-transcribed normals: every plane through three vertices
/// that keeps all twenty on one side is a face plane. The twelve surviving
/// planes are deduplicated and their vertex pentagons cached.
pub fn make_dodecahedron(circumradius: f64) -> Result<Dodecahedron, GeometryError> {
    if !(circumradius > 0.0 && circumradius.is_finite()) {
        return Err(GeometryError::NonPositive { name: "circumradius", value: circumradius });
    }
    let verts = dodecahedron_vertices(circumradius);
    let tol = 1e-9 * circumradius;

    let mut face_normals: Vec<Vector3<f64>> = Vec::new();
    let mut face_offsets: Vec<f64> = Vec::new();
    let mut faces: Vec<Vec<usize>> = Vec::new();

    let n = verts.len();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let mut normal = (verts[j] - verts[i]).cross(&(verts[k] - verts[i]));
                let len = normal.norm();
                if len < tol {
                    continue; // collinear triple
                }
                normal /= len;
                let mut offset = normal.dot(&verts[i]);
                if offset < 0.0 {
                    normal = -normal;
                    offset = -offset;
                }
                // supporting plane: all vertices on the inner side
                if verts.iter().any(|v| normal.dot(v) > offset + tol) {
                    continue;
                }
                if face_normals.iter().any(|fnrm| fnrm.dot(&normal) > 1.0 - 1e-9) {
                    continue; // already recorded
                }
                let on_face: Vec<usize> = (0..n)
                    .filter(|&v| (normal.dot(&verts[v]) - offset).abs() <= tol)
                    .collect();
                face_normals.push(normal);
                face_offsets.push(offset);
                faces.push(on_face);
            }
        }
    }

    if face_normals.len() != 12 || faces.iter().any(|f| f.len() != 5) {
        return Err(GeometryError::FaceEnumeration { found: face_normals.len() });
    }

    Ok(Dodecahedron {
        face_normals,
        face_offsets,
        circumradius,
        vertices: verts,
        faces,
    })
}

impl Dodecahedron {
    /// Distance from the center to each face plane (they are all equal for a
    /// regular solid; exposed for diagnostics and invariants).
    pub fn inradius(&self) -> f64 {
        self.face_offsets.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Containment test for the solid translated to `center`.
    pub fn contains(&self, center: &Vector3<f64>, point: &Vector3<f64>) -> bool {
        let d = point - center;
        self.face_normals
            .iter()
            .zip(self.face_offsets.iter())
            .all(|(n, &c)| n.dot(&d) <= c)
    }
}
