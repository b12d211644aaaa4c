//! Mesh ingestion: OBJ triangle meshes and a JSON descriptor.

use super::SimplicialMesh;
use crate::{Result, SimError};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// JSON mesh descriptor: `{"dim": 2, "nodes": [[x,y],...], "elements": [[a,b,c],...]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct MeshDescriptor {
    pub dim: usize,
    pub nodes: Vec<Vec<f64>>,
    pub elements: Vec<Vec<usize>>,
}

pub fn read_json(path: &Path) -> Result<SimplicialMesh> {
    let text = std::fs::read_to_string(path)?;
    let desc: MeshDescriptor = serde_json::from_str(&text)?;
    from_descriptor(desc)
}

pub fn from_descriptor(desc: MeshDescriptor) -> Result<SimplicialMesh> {
    let mut rest = Vec::with_capacity(desc.dim * desc.nodes.len());
    for (i, n) in desc.nodes.iter().enumerate() {
        if n.len() != desc.dim {
            return Err(SimError::InvalidMesh(format!(
                "node {i} has {} coordinates, expected {}",
                n.len(),
                desc.dim
            )));
        }
        rest.extend_from_slice(n);
    }
    SimplicialMesh::new(desc.dim, rest, desc.elements)
}

/// Reads an OBJ file of `v`/`f` records as a 2D triangle mesh. All vertices
/// must lie in the z = 0 plane; faces must be triangles. Indices may be
/// negative (relative) per the OBJ convention.
pub fn read_obj_2d(path: &Path) -> Result<SimplicialMesh> {
    let text = std::fs::read_to_string(path)?;
    let mut verts: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<Vec<usize>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut c = [0.0f64; 3];
                for k in 0..3 {
                    c[k] = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| SimError::InvalidMesh(format!("bad v record, line {}", ln + 1)))?;
                }
                verts.push(c);
            }
            Some("f") => {
                let mut f = Vec::new();
                for tok in it {
                    let idx_str = tok.split('/').next().unwrap_or("");
                    let idx: i64 = idx_str
                        .parse()
                        .map_err(|_| SimError::InvalidMesh(format!("bad f record, line {}", ln + 1)))?;
                    let resolved = if idx > 0 {
                        idx as usize - 1
                    } else {
                        (verts.len() as i64 + idx) as usize
                    };
                    f.push(resolved);
                }
                if f.len() != 3 {
                    return Err(SimError::InvalidMesh(format!(
                        "face with {} vertices at line {}; only triangles supported",
                        f.len(),
                        ln + 1
                    )));
                }
                faces.push(f);
            }
            _ => {}
        }
    }
    let mut rest = Vec::with_capacity(2 * verts.len());
    for (i, v) in verts.iter().enumerate() {
        if v[2].abs() > 1e-12 {
            return Err(SimError::InvalidMesh(format!(
                "vertex {i} has z = {} != 0; 2D OBJ meshes must be planar",
                v[2]
            )));
        }
        rest.push(v[0]);
        rest.push(v[1]);
    }
    SimplicialMesh::new(2, rest, faces)
}
