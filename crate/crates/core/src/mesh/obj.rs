//! ASCII OBJ reading and writing (positions and triangles only).

use std::fmt::Write as _;

use super::{Face, TriangleMesh};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vector::Vec3;

const HEADER: &str = "# anchor-mesh OBJ\n";

/// Parses `v` and `f` records. Texture/normal references after `/` are dropped and
/// `vt`, `vn`, groups, materials and comments are ignored.
pub fn load_mesh<T: Real>(text: &str) -> Result<TriangleMesh<T>> {
    let mut vertices = Vec::new();
    let mut faces: Vec<(usize, Face)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [T::zero(); 3];
                for c in coords.iter_mut() {
                    let tok = tokens.next().ok_or_else(|| Error::Parse {
                        line,
                        message: "vertex record needs three coordinates".into(),
                    })?;
                    *c = tok.parse::<T>().map_err(|_| Error::Parse {
                        line,
                        message: format!("invalid coordinate `{tok}`"),
                    })?;
                }
                // optional w or vertex colors are ignored
                vertices.push(Vec3(coords));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(Error::Parse {
                        line,
                        message: format!("expected a triangle, found {} vertices", refs.len()),
                    });
                }
                let mut face = [0usize; 3];
                for (slot, r) in face.iter_mut().zip(&refs) {
                    *slot = parse_index(r, vertices.len(), line)?;
                }
                faces.push((line, face));
            }
            _ => {}
        }
    }

    let n = vertices.len();
    for &(line, f) in &faces {
        if let Some(&bad) = f.iter().find(|&&i| i >= n) {
            return Err(Error::Parse {
                line,
                message: format!("vertex index {} out of range ({n} vertices)", bad + 1),
            });
        }
    }
    TriangleMesh::new(vertices, faces.into_iter().map(|(_, f)| f).collect())
}

fn parse_index(token: &str, seen: usize, line: usize) -> Result<usize> {
    let head = token.split('/').next().unwrap_or("");
    let raw: i64 = head.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid face index `{token}`"),
    })?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        // relative to the vertices read so far
        seen as i64 + raw
    } else {
        -1
    };
    if idx < 0 {
        return Err(Error::Parse {
            line,
            message: format!("face index `{token}` out of range"),
        });
    }
    Ok(idx as usize)
}

/// Writes positions with shortest round-trip formatting, so parsing the output
/// reproduces every coordinate bit-for-bit.
pub fn save_mesh<T: Real>(mesh: &TriangleMesh<T>) -> String {
    let mut out = String::with_capacity(HEADER.len() + mesh.vertex_count() * 40);
    out.push_str(HEADER);
    for p in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", p.x(), p.y(), p.z());
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}
