//! Structured mesh generators for the benchmark geometries.

use super::SimplicialMesh;
use crate::{Result, SimError};

/// Uniform 1D bar of `length` with spacing `dx`, node 0 at `base`, growing
/// upward (+x is "height" in the 1D convention).
pub fn bar_1d(length: f64, dx: f64, base: f64) -> Result<SimplicialMesh> {
    let n = (length / dx).round() as usize;
    if n == 0 {
        return Err(SimError::Config("bar_1d: dx larger than length".into()));
    }
    let dx = length / n as f64;
    let rest: Vec<f64> = (0..=n).map(|i| base + i as f64 * dx).collect();
    let elements = (0..n).map(|i| vec![i, i + 1]).collect();
    SimplicialMesh::new(1, rest, elements)
}

/// Uniform symmetric triangulation of a `width` x `height` rectangle with
/// spacing `dx`. Each cell splits into two triangles; the diagonal alternates
/// per cell so the tessellation is mirror-symmetric.
pub fn square_grid_2d(width: f64, height: f64, dx: f64, origin: [f64; 2]) -> Result<SimplicialMesh> {
    let nx = (width / dx).round().max(1.0) as usize;
    let ny = (height / dx).round().max(1.0) as usize;
    let hx = width / nx as f64;
    let hy = height / ny as f64;
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut rest = Vec::with_capacity(2 * (nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            rest.push(origin[0] + i as f64 * hx);
            rest.push(origin[1] + j as f64 * hy);
        }
    }
    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            if (i + j) % 2 == 0 {
                elements.push(vec![v00, v10, v11]);
                elements.push(vec![v00, v11, v01]);
            } else {
                elements.push(vec![v00, v10, v01]);
                elements.push(vec![v10, v11, v01]);
            }
        }
    }
    SimplicialMesh::new(2, rest, elements)
}

/// Uniform tetrahedralization of a `wx` x `wy` x `wz` box with spacing `dx`,
/// six tetrahedra per cell (Kuhn split along the main diagonal).
pub fn box_grid_3d(wx: f64, wy: f64, wz: f64, dx: f64, origin: [f64; 3]) -> Result<SimplicialMesh> {
    let nx = (wx / dx).round().max(1.0) as usize;
    let ny = (wy / dx).round().max(1.0) as usize;
    let nz = (wz / dx).round().max(1.0) as usize;
    let (hx, hy, hz) = (wx / nx as f64, wy / ny as f64, wz / nz as f64);
    let id = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut rest = Vec::with_capacity(3 * (nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                rest.push(origin[0] + i as f64 * hx);
                rest.push(origin[1] + j as f64 * hy);
                rest.push(origin[2] + k as f64 * hz);
            }
        }
    }
    // Kuhn split: six tets sharing the cell diagonal (0,0,0)-(1,1,1).
    const TETS: [[usize; 4]; 6] = [
        [0, 1, 3, 7],
        [0, 3, 2, 7],
        [0, 2, 6, 7],
        [0, 6, 4, 7],
        [0, 4, 5, 7],
        [0, 5, 1, 7],
    ];
    let mut elements = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let corners = [
                    id(i, j, k),
                    id(i + 1, j, k),
                    id(i, j + 1, k),
                    id(i + 1, j + 1, k),
                    id(i, j, k + 1),
                    id(i + 1, j, k + 1),
                    id(i, j + 1, k + 1),
                    id(i + 1, j + 1, k + 1),
                ];
                for t in TETS {
                    elements.push(vec![corners[t[0]], corners[t[1]], corners[t[2]], corners[t[3]]]);
                }
            }
        }
    }
    let mut mesh = SimplicialMesh { dim: 3, rest_positions: rest, elements };
    // Fix any negatively oriented tets from the table convention.
    for e in 0..mesh.elements.len() {
        if mesh.element_measure(e, &mesh.rest_positions.clone()) < 0.0 {
            mesh.elements[e].swap(2, 3);
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bar_has_exact_spacing() {
        let mesh = bar_1d(10.0, 0.1, 5.0).unwrap();
        assert_eq!(mesh.num_nodes(), 101);
        assert_relative_eq!(mesh.total_measure(), 10.0, max_relative = 1e-12);
        assert_relative_eq!(mesh.rest_node(0)[0], 5.0);
        assert_relative_eq!(mesh.rest_node(100)[0], 15.0);
    }

    #[test]
    fn square_measure_and_symmetry() {
        let mesh = square_grid_2d(2.0, 2.0, 0.1, [0.0, 0.0]).unwrap();
        assert_eq!(mesh.elements.len(), 2 * 20 * 20);
        assert_relative_eq!(mesh.total_measure(), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn unit_cube_six_tets() {
        let mesh = box_grid_3d(1.0, 1.0, 1.0, 1.0, [0.0; 3]).unwrap();
        assert_eq!(mesh.num_nodes(), 8);
        assert_eq!(mesh.elements.len(), 6);
        assert_relative_eq!(mesh.total_measure(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn refined_cube_volume() {
        let mesh = box_grid_3d(1.0, 1.0, 1.0, 0.5, [0.0; 3]).unwrap();
        assert_relative_eq!(mesh.total_measure(), 1.0, max_relative = 1e-12);
        let bc = crate::mesh::boundary_with_weights(&mesh).unwrap();
        let sum_w: f64 = bc.vertex_weights.iter().sum();
        assert_relative_eq!(sum_w, 6.0, max_relative = 1e-12);
    }
}
