//! Triangle meshes and the line-oriented ASCII mesh format.
//!
//! ```text
//! # comment
//! v x y z
//! f i j k [r g b]
//! ```
//!
//! Indices are 0-based. Faces without a colour get [`DEFAULT_FACE_COLOR`].

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::{Aabb, Vec3};

pub const DEFAULT_FACE_COLOR: [u8; 3] = [180, 180, 180];

/// Twice-area below which a triangle is treated as degenerate.
const DEGENERATE_AREA2: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub face_colors: Vec<[u8; 3]>,
}

impl TriMesh {
    /// Validates indices and drops zero-area triangles. Returns the mesh and
    /// the number of triangles dropped.
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
        face_colors: Vec<[u8; 3]>,
    ) -> Result<(Self, usize)> {
        assert_eq!(triangles.len(), face_colors.len());
        let n = vertices.len() as u32;
        let mut kept_tris = Vec::with_capacity(triangles.len());
        let mut kept_colors = Vec::with_capacity(triangles.len());
        let mut dropped = 0;
        for (t, c) in triangles.into_iter().zip(face_colors) {
            if let Some(&bad) = t.iter().find(|&&i| i >= n) {
                return Err(Error::InfeasibleSpec(format!(
                    "triangle index {bad} out of range ({n} vertices)"
                )));
            }
            let [a, b, cc] = t.map(|i| vertices[i as usize]);
            if (b - a).cross(cc - a).norm() <= DEGENERATE_AREA2 {
                dropped += 1;
                continue;
            }
            kept_tris.push(t);
            kept_colors.push(c);
        }
        if kept_tris.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let mesh = TriMesh {
            vertices,
            triangles: kept_tris,
            face_colors: kept_colors,
        };
        Ok((mesh, dropped))
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, tri: usize) -> [Vec3; 3] {
        self.triangles[tri].map(|i| self.vertices[i as usize])
    }

    /// Unit normal following the counter-clockwise winding.
    pub fn normal(&self, tri: usize) -> Vec3 {
        let [a, b, c] = self.corners(tri);
        (b - a).cross(c - a).normalize()
    }

    pub fn area(&self, tri: usize) -> f64 {
        let [a, b, c] = self.corners(tri);
        0.5 * (b - a).cross(c - a).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangle_count()).map(|t| self.area(t)).sum()
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(
            self.triangles
                .iter()
                .flatten()
                .map(|&i| self.vertices[i as usize]),
        )
    }

    pub fn parse(text: &str, path: &Path) -> Result<(Self, usize)> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut colors = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: path.to_owned(),
                line: lineno + 1,
                msg,
            };
            let mut fields = line.split_whitespace();
            let tag = fields.next().unwrap_or_default();
            let rest: Vec<&str> = fields.collect();
            match tag {
                "v" => {
                    if rest.len() != 3 {
                        return Err(err(format!(
                            "vertex needs 3 coordinates, got {}",
                            rest.len()
                        )));
                    }
                    let mut xyz = [0.0; 3];
                    for (slot, s) in xyz.iter_mut().zip(&rest) {
                        *slot = s
                            .parse::<f64>()
                            .map_err(|e| err(format!("bad coordinate `{s}`: {e}")))?;
                        if !slot.is_finite() {
                            return Err(err(format!("non-finite coordinate `{s}`")));
                        }
                    }
                    vertices.push(Vec3::from_array(xyz));
                }
                "f" => {
                    if rest.len() != 3 && rest.len() != 6 {
                        return Err(err(format!(
                            "face needs 3 indices and optional rgb, got {} fields",
                            rest.len()
                        )));
                    }
                    let mut idx = [0u32; 3];
                    for (slot, s) in idx.iter_mut().zip(&rest[..3]) {
                        *slot = s
                            .parse()
                            .map_err(|e| err(format!("bad index `{s}`: {e}")))?;
                        if *slot as usize >= vertices.len() {
                            return Err(err(format!(
                                "index {slot} refers to a vertex not yet defined ({} so far)",
                                vertices.len()
                            )));
                        }
                    }
                    let mut rgb = DEFAULT_FACE_COLOR;
                    if rest.len() == 6 {
                        for (slot, s) in rgb.iter_mut().zip(&rest[3..]) {
                            *slot = s
                                .parse()
                                .map_err(|e| err(format!("bad colour `{s}`: {e}")))?;
                        }
                    }
                    triangles.push(idx);
                    colors.push(rgb);
                }
                other => return Err(err(format!("unknown record `{other}`"))),
            }
        }
        TriMesh::new(vertices, triangles, colors)
    }

    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
        }
        for (t, c) in self.triangles.iter().zip(&self.face_colors) {
            writeln!(
                out,
                "f {} {} {} {} {} {}",
                t[0], t[1], t[2], c[0], c[1], c[2]
            )
            .unwrap();
        }
        out
    }
}

/// Reads a mesh file, returning the cleaned mesh and the number of
/// degenerate triangles that were dropped.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<(TriMesh, usize)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TriMesh::parse(&text, path)
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mesh.to_ascii()).map_err(|e| Error::io(path, e))
}
