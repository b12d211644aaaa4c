//! Simplicial meshes, boundary complexes, quadrature weights, and analytic
//! obstacles.
//!
//! Meshes are segment (1D), triangle (2D), or tetrahedron (3D) complexes.
//! The boundary complex carries everything the contact potentials need:
//! boundary vertices/edges/triangles, the interior subsets used by the
//! smooth-max correction terms, per-vertex valence, and material-space
//! quadrature weights.

pub mod generate;
pub mod io;

use crate::{Result, SimError};
use nalgebra::DVector;
use std::collections::BTreeMap;

/// Simplicial mesh in dimension 1, 2, or 3.
#[derive(Clone, Debug)]
pub struct SimplicialMesh {
    /// Spatial dimension (1, 2, or 3). Elements are (dim+1)-node simplices.
    pub dim: usize,
    /// Flat rest (material) positions, `dim * num_nodes` entries.
    pub rest_positions: Vec<f64>,
    /// Node index tuples, each of length `dim + 1`.
    pub elements: Vec<Vec<usize>>,
}

impl SimplicialMesh {
    pub fn new(dim: usize, rest_positions: Vec<f64>, elements: Vec<Vec<usize>>) -> Result<Self> {
        let mesh = Self { dim, rest_positions, elements };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn num_nodes(&self) -> usize {
        self.rest_positions.len() / self.dim
    }

    pub fn num_dofs(&self) -> usize {
        self.rest_positions.len()
    }

    pub fn rest_node(&self, i: usize) -> &[f64] {
        &self.rest_positions[i * self.dim..(i + 1) * self.dim]
    }

    /// Signed measure (length / area / volume) of element `e` under the given
    /// flat position vector.
    pub fn element_measure(&self, e: usize, positions: &[f64]) -> f64 {
        let el = &self.elements[e];
        let node = |i: usize| &positions[el[i] * self.dim..(el[i] + 1) * self.dim];
        match self.dim {
            1 => node(1)[0] - node(0)[0],
            2 => {
                let (a, b, c) = (node(0), node(1), node(2));
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
            }
            3 => {
                let (a, b, c, d) = (node(0), node(1), node(2), node(3));
                let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
                let w = [d[0] - a[0], d[1] - a[1], d[2] - a[2]];
                (u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
                    + u[2] * (v[0] * w[1] - v[1] * w[0]))
                    / 6.0
            }
            _ => unreachable!("dim is validated"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(SimError::InvalidMesh(format!("dim must be 1..3, got {}", self.dim)));
        }
        if self.rest_positions.len() % self.dim != 0 {
            return Err(SimError::InvalidMesh("position buffer not a multiple of dim".into()));
        }
        let n = self.num_nodes();
        for (e, el) in self.elements.iter().enumerate() {
            if el.len() != self.dim + 1 {
                return Err(SimError::InvalidMesh(format!(
                    "element {e} has {} nodes, expected {}",
                    el.len(),
                    self.dim + 1
                )));
            }
            for &v in el {
                if v >= n {
                    return Err(SimError::InvalidMesh(format!(
                        "element {e} references node {v} out of {n}"
                    )));
                }
            }
            let m = self.element_measure(e, &self.rest_positions);
            if m <= 0.0 {
                return Err(SimError::InvalidMesh(format!(
                    "element {e} has non-positive rest measure {m} (check orientation)"
                )));
            }
        }
        for &p in &self.rest_positions {
            if !p.is_finite() {
                return Err(SimError::InvalidMesh("non-finite rest position".into()));
            }
        }
        Ok(())
    }

    /// Total rest measure of the element complex.
    pub fn total_measure(&self) -> f64 {
        (0..self.elements.len())
            .map(|e| self.element_measure(e, &self.rest_positions))
            .sum()
    }
}

/// Discrete boundary of a simplicial mesh, with quadrature weights.
#[derive(Clone, Debug, Default)]
pub struct BoundaryComplex {
    /// Boundary vertex node ids, sorted.
    pub vertices: Vec<usize>,
    /// Boundary edges as node-id pairs. In 2D these are the boundary facets
    /// (oriented as in their owning triangle); in 3D the edges of the
    /// boundary triangles.
    pub edges: Vec<[usize; 2]>,
    /// Boundary triangles (3D only), outward-oriented.
    pub triangles: Vec<[usize; 3]>,
    /// `interior_vertices[i]` is true when `vertices[i]` is internal to the
    /// boundary curve/surface (full valence-two curve link, closed surface
    /// fan). These are the vertices eligible for subtraction terms.
    pub interior_vertices: Vec<bool>,
    /// `interior_edges[i]`: edge `i` is shared by exactly two boundary
    /// triangles (3D).
    pub interior_edges: Vec<bool>,
    /// Nodal quadrature weight per boundary vertex (m in 2D, m^2 in 3D,
    /// counting measure 1 in 1D).
    pub vertex_weights: Vec<f64>,
    /// Edge quadrature weight per boundary edge (m^2, 3D only).
    pub edge_weights: Vec<f64>,
    /// Valence: number of incident boundary edges per boundary vertex.
    pub valence: Vec<usize>,
    /// Maps node id to its index into `vertices` (and aligned arrays).
    pub vertex_index: BTreeMap<usize, usize>,
}

impl BoundaryComplex {
    pub fn vertex_pos(&self, node: usize) -> Option<usize> {
        self.vertex_index.get(&node).copied()
    }

    pub fn is_interior_vertex(&self, node: usize) -> bool {
        self.vertex_pos(node).map(|i| self.interior_vertices[i]).unwrap_or(false)
    }

    pub fn weight_of(&self, node: usize) -> f64 {
        self.vertex_pos(node).map(|i| self.vertex_weights[i]).unwrap_or(0.0)
    }
}

/// Fixed analytic half-space `{ y : (y - point) . normal >= 0 }`.
#[derive(Clone, Debug)]
pub struct HalfSpaceObstacle {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
    pub friction_mu: f64,
}

impl HalfSpaceObstacle {
    pub fn new(point: Vec<f64>, normal: Vec<f64>, friction_mu: f64) -> Result<Self> {
        let n2: f64 = normal.iter().map(|v| v * v).sum();
        if n2 <= 0.0 || !n2.is_finite() {
            return Err(SimError::Config("half-space normal must be nonzero".into()));
        }
        let inv = 1.0 / n2.sqrt();
        let normal = normal.iter().map(|v| v * inv).collect();
        Ok(Self { point, normal, friction_mu })
    }

    /// Axis-aligned ground `y = height` (2D) or `z = height` (3D), `x = height` in 1D.
    pub fn ground(dim: usize, height: f64) -> Self {
        let mut point = vec![0.0; dim];
        let mut normal = vec![0.0; dim];
        point[dim - 1] = height;
        normal[dim - 1] = 1.0;
        Self { point, normal, friction_mu: 0.0 }
    }
}

/// Deformed nodal positions and velocities at time `t`.
#[derive(Clone, Debug)]
pub struct SystemState {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
    pub t: f64,
}

impl SystemState {
    pub fn at_rest(mesh: &SimplicialMesh) -> Self {
        Self {
            x: DVector::from_column_slice(&mesh.rest_positions),
            v: DVector::zeros(mesh.num_dofs()),
            t: 0.0,
        }
    }
}

fn sorted2(a: usize, b: usize) -> [usize; 2] {
    if a <= b { [a, b] } else { [b, a] }
}

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

/// Extracts the boundary complex of `mesh`. Quadrature weights are *not*
/// computed here; call [`compute_quadrature_weights`] afterwards.
///
/// Fails on non-manifold input: a facet shared by more than two elements, a
/// 2D boundary vertex whose valence is not two, or a 3D boundary edge not
/// shared by exactly two boundary triangles.
pub fn extract_boundary(mesh: &SimplicialMesh) -> Result<BoundaryComplex> {
    match mesh.dim {
        1 => extract_boundary_1d(mesh),
        2 => extract_boundary_2d(mesh),
        3 => extract_boundary_3d(mesh),
        _ => unreachable!(),
    }
}

fn extract_boundary_1d(mesh: &SimplicialMesh) -> Result<BoundaryComplex> {
    let mut count: BTreeMap<usize, usize> = BTreeMap::new();
    for el in &mesh.elements {
        for &v in el {
            *count.entry(v).or_insert(0) += 1;
        }
    }
    let mut bc = BoundaryComplex::default();
    for (&v, &c) in &count {
        if c == 1 {
            bc.vertex_index.insert(v, bc.vertices.len());
            bc.vertices.push(v);
            // 0-dimensional boundary: counting measure.
            bc.vertex_weights.push(1.0);
            bc.valence.push(0);
            bc.interior_vertices.push(false);
        } else if c > 2 {
            return Err(SimError::NonManifold(format!("1D node {v} used by {c} segments")));
        }
    }
    Ok(bc)
}

fn extract_boundary_2d(mesh: &SimplicialMesh) -> Result<BoundaryComplex> {
    // Count element edges; boundary facets appear exactly once.
    let mut facets: BTreeMap<[usize; 2], (usize, [usize; 2])> = BTreeMap::new();
    for el in &mesh.elements {
        let tri = [el[0], el[1], el[2]];
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let entry = facets.entry(sorted2(a, b)).or_insert((0, [a, b]));
            entry.0 += 1;
        }
    }
    let mut bc = BoundaryComplex::default();
    for (key, (c, oriented)) in &facets {
        if *c > 2 {
            return Err(SimError::NonManifold(format!(
                "edge ({}, {}) shared by {c} triangles",
                key[0], key[1]
            )));
        }
        if *c == 1 {
            bc.edges.push(*oriented);
        }
    }
    let mut valence: BTreeMap<usize, usize> = BTreeMap::new();
    for e in &bc.edges {
        for &v in e {
            *valence.entry(v).or_insert(0) += 1;
        }
    }
    for (&v, &val) in &valence {
        if val != 2 {
            return Err(SimError::NonManifold(format!(
                "boundary vertex {v} has valence {val}, expected 2"
            )));
        }
        bc.vertex_index.insert(v, bc.vertices.len());
        bc.vertices.push(v);
        bc.valence.push(val);
        // A 2D solid's boundary is a set of closed loops, so every boundary
        // vertex with valence two is internal to the curve.
        bc.interior_vertices.push(true);
    }
    Ok(bc)
}

fn extract_boundary_3d(mesh: &SimplicialMesh) -> Result<BoundaryComplex> {
    // Faces of a positively oriented tet (a,b,c,d), outward normals.
    const FACES: [[usize; 3]; 4] = [[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]];
    let mut faces: BTreeMap<[usize; 3], (usize, [usize; 3])> = BTreeMap::new();
    for el in &mesh.elements {
        for f in FACES {
            let tri = [el[f[0]], el[f[1]], el[f[2]]];
            let entry = faces.entry(sorted3(tri)).or_insert((0, tri));
            entry.0 += 1;
        }
    }
    let mut bc = BoundaryComplex::default();
    for (key, (c, oriented)) in &faces {
        if *c > 2 {
            return Err(SimError::NonManifold(format!(
                "face {key:?} shared by {c} tetrahedra"
            )));
        }
        if *c == 1 {
            bc.triangles.push(*oriented);
        }
    }

    let mut edge_tris: BTreeMap<[usize; 2], usize> = BTreeMap::new();
    for t in &bc.triangles {
        for k in 0..3 {
            *edge_tris.entry(sorted2(t[k], t[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    for (e, c) in &edge_tris {
        if *c != 2 {
            return Err(SimError::NonManifold(format!(
                "boundary edge {e:?} incident to {c} boundary triangles, expected 2"
            )));
        }
        bc.edges.push(*e);
        bc.interior_edges.push(true);
    }

    let mut vert_edges: BTreeMap<usize, usize> = BTreeMap::new();
    let mut vert_tris: BTreeMap<usize, usize> = BTreeMap::new();
    for e in &bc.edges {
        for &v in e {
            *vert_edges.entry(v).or_insert(0) += 1;
        }
    }
    for t in &bc.triangles {
        for &v in t {
            *vert_tris.entry(v).or_insert(0) += 1;
        }
    }
    for (&v, &ne) in &vert_edges {
        let nt = vert_tris.get(&v).copied().unwrap_or(0);
        bc.vertex_index.insert(v, bc.vertices.len());
        bc.vertices.push(v);
        bc.valence.push(ne);
        // Closed fan around the vertex: as many boundary edges as triangles.
        bc.interior_vertices.push(ne == nt);
    }
    Ok(bc)
}

/// Fills in the material-space quadrature weights of a boundary complex:
/// half the incident boundary-edge lengths per vertex in 2D, one third of the
/// incident boundary-triangle areas per vertex (and per edge) in 3D.
pub fn compute_quadrature_weights(bc: &mut BoundaryComplex, mesh: &SimplicialMesh) -> Result<()> {
    let pos = &mesh.rest_positions;
    let dim = mesh.dim;
    let node = |i: usize| &pos[i * dim..(i + 1) * dim];
    match dim {
        1 => {
            // Counting measure, already set by extraction.
        }
        2 => {
            let mut w = vec![0.0; bc.vertices.len()];
            for e in &bc.edges {
                let (a, b) = (node(e[0]), node(e[1]));
                let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                if len <= 0.0 {
                    return Err(SimError::DegeneratePrimitive(format!(
                        "zero-length boundary edge {e:?}"
                    )));
                }
                for &v in e {
                    w[bc.vertex_index[&v]] += 0.5 * len;
                }
            }
            bc.vertex_weights = w;
        }
        3 => {
            let mut wv = vec![0.0; bc.vertices.len()];
            let mut we = vec![0.0; bc.edges.len()];
            let edge_index: BTreeMap<[usize; 2], usize> =
                bc.edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
            for t in &bc.triangles {
                let (a, b, c) = (node(t[0]), node(t[1]), node(t[2]));
                let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
                let cx = u[1] * v[2] - u[2] * v[1];
                let cy = u[2] * v[0] - u[0] * v[2];
                let cz = u[0] * v[1] - u[1] * v[0];
                let area = 0.5 * (cx * cx + cy * cy + cz * cz).sqrt();
                if area <= 0.0 {
                    return Err(SimError::DegeneratePrimitive(format!(
                        "zero-area boundary triangle {t:?}"
                    )));
                }
                for &vid in t {
                    wv[bc.vertex_index[&vid]] += area / 3.0;
                }
                for k in 0..3 {
                    let key = sorted2(t[k], t[(k + 1) % 3]);
                    we[edge_index[&key]] += area / 3.0;
                }
            }
            bc.vertex_weights = wv;
            bc.edge_weights = we;
        }
        _ => unreachable!(),
    }
    Ok(())
}

/// Convenience: extract the boundary and compute its weights in one call.
pub fn boundary_with_weights(mesh: &SimplicialMesh) -> Result<BoundaryComplex> {
    let mut bc = extract_boundary(mesh)?;
    compute_quadrature_weights(&mut bc, mesh)?;
    Ok(bc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_triangle() -> SimplicialMesh {
        SimplicialMesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            vec![vec![0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn boundary_of_unit_triangle() {
        let mesh = unit_triangle();
        let bc = boundary_with_weights(&mesh).unwrap();
        assert_eq!(bc.edges.len(), 3);
        assert_eq!(bc.vertices.len(), 3);
        assert!(bc.valence.iter().all(|&v| v == 2));
        assert!(bc.interior_vertices.iter().all(|&b| b));
        let perimeter = 1.0 + 1.0 + 2.0_f64.sqrt();
        let total: f64 = bc.vertex_weights.iter().sum();
        assert_relative_eq!(total, perimeter, max_relative = 1e-12);
    }

    #[test]
    fn boundary_of_1d_chain() {
        let mesh = SimplicialMesh::new(1, vec![0.0, 1.0, 2.0], vec![vec![0, 1], vec![1, 2]])
            .unwrap();
        let bc = extract_boundary(&mesh).unwrap();
        assert_eq!(bc.vertices, vec![0, 2]);
    }

    #[test]
    fn boundary_of_single_tet_is_closed() {
        let mesh = SimplicialMesh::new(
            3,
            vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap();
        let bc = boundary_with_weights(&mesh).unwrap();
        assert_eq!(bc.triangles.len(), 4);
        assert_eq!(bc.edges.len(), 6);
        assert!(bc.interior_edges.iter().all(|&b| b));
        assert!(bc.interior_vertices.iter().all(|&b| b));
        // Partition of unity: nodal weights sum to the surface area.
        let area_total: f64 = 3.0 * 0.5 + 0.5 * 3.0_f64.sqrt();
        let sum_v: f64 = bc.vertex_weights.iter().sum();
        let sum_e: f64 = bc.edge_weights.iter().sum();
        assert_relative_eq!(sum_v, area_total, max_relative = 1e-12);
        assert_relative_eq!(sum_e, area_total, max_relative = 1e-12);
    }

    #[test]
    fn rejects_edge_shared_by_three_triangles() {
        // Three triangles sharing edge (0,1).
        let mesh = SimplicialMesh {
            dim: 2,
            rest_positions: vec![0.0, 0.0, 1.0, 0.0, 0.5, 1.0, 0.5, -1.0, 1.5, 0.5],
            elements: vec![vec![0, 1, 2], vec![0, 3, 1], vec![0, 1, 4]],
        };
        assert!(matches!(extract_boundary(&mesh), Err(SimError::NonManifold(_))));
    }

    #[test]
    fn rejects_inverted_element() {
        let r = SimplicialMesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            vec![vec![0, 2, 1]],
        );
        assert!(matches!(r, Err(SimError::InvalidMesh(_))));
    }

    #[test]
    fn valence_recount_matches() {
        let mesh = generate::square_grid_2d(2.0, 2.0, 0.5, [0.0, 0.0]).unwrap();
        let bc = boundary_with_weights(&mesh).unwrap();
        for (i, &v) in bc.vertices.iter().enumerate() {
            let recount = bc.edges.iter().filter(|e| e.contains(&v)).count();
            assert_eq!(bc.valence[i], recount);
        }
        // Perimeter of the square.
        let total: f64 = bc.vertex_weights.iter().sum();
        assert_relative_eq!(total, 8.0, max_relative = 1e-12);
    }

    #[test]
    fn uniform_closed_polyline_weights() {
        // Square boundary tessellated uniformly: every w_x equals dx.
        let mesh = generate::square_grid_2d(1.0, 1.0, 0.25, [0.0, 0.0]).unwrap();
        let bc = boundary_with_weights(&mesh).unwrap();
        for &w in &bc.vertex_weights {
            assert_relative_eq!(w, 0.25, max_relative = 1e-12);
        }
    }
}
