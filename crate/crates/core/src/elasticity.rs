//! Internal elastic energy, mass matrices, and external (gravity) forces.
//!
//! Linear elasticity and a log-barrier neo-Hookean model; both provide exact
//! gradients and per-element Hessians assembled through the constant
//! deformation-gradient map of linear simplices. Plane strain in 2D.

use crate::assembly::{LocalStencil, PotentialEval};
use crate::linsolve::SpdSolver;
use crate::mesh::SimplicialMesh;
use crate::{Result, SimError};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaterialModel {
    LinearElastic,
    NeoHookean,
}

/// Homogeneous material. Units follow the per-dimension convention: `youngs`
/// is N in 1D, N/m in 2D, Pa in 3D; `density` is kg/m^dim.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Material {
    pub model: MaterialModel,
    pub youngs: f64,
    pub poisson: f64,
    pub density: f64,
}

impl Material {
    pub fn validate(&self) -> Result<()> {
        if self.youngs <= 0.0 || self.density <= 0.0 {
            return Err(SimError::Config("material: E and rho must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.poisson) {
            return Err(SimError::Config(format!(
                "material: poisson {} outside [0, 0.5)",
                self.poisson
            )));
        }
        Ok(())
    }

    /// Lame parameters (mu, lambda); plane strain in 2D.
    pub fn lame(&self) -> (f64, f64) {
        let mu = self.youngs / (2.0 * (1.0 + self.poisson));
        let lambda =
            self.youngs * self.poisson / ((1.0 + self.poisson) * (1.0 - 2.0 * self.poisson));
        (mu, lambda)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MassKind {
    Consistent,
    Lumped,
}

/// Finite element mass matrix stored as node-pair coefficients (each scalar
/// multiplies the d x d identity at the DOF level).
pub struct MassMatrix {
    pub kind: MassKind,
    pub dim: usize,
    num_nodes: usize,
    /// Symmetric node-level triplets (both (i,j) and (j,i) present).
    pub node_triplets: Vec<(usize, usize, f64)>,
    /// Node-level row sums; equals the nodal mass for either kind.
    pub row_sums: Vec<f64>,
    factor: Option<SpdSolver>,
}

impl MassMatrix {
    pub fn total_mass(&self) -> f64 {
        self.row_sums.iter().sum()
    }

    /// DOF-level triplets (node coefficients times identity blocks).
    pub fn dof_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.node_triplets.len() * self.dim);
        for &(i, j, v) in &self.node_triplets {
            for k in 0..self.dim {
                t.push((i * self.dim + k, j * self.dim + k, v));
            }
        }
        t
    }

    /// y = M x at the DOF level.
    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(x.len());
        match self.kind {
            MassKind::Lumped => {
                for i in 0..self.num_nodes {
                    for k in 0..self.dim {
                        y[i * self.dim + k] = self.row_sums[i] * x[i * self.dim + k];
                    }
                }
            }
            MassKind::Consistent => {
                for &(i, j, v) in &self.node_triplets {
                    for k in 0..self.dim {
                        y[i * self.dim + k] += v * x[j * self.dim + k];
                    }
                }
            }
        }
        y
    }

    /// x = M^{-1} b. Factors lazily for consistent mass.
    pub fn solve(&mut self, b: &DVector<f64>) -> Result<DVector<f64>> {
        match self.kind {
            MassKind::Lumped => {
                let mut x = b.clone();
                for i in 0..self.num_nodes {
                    for k in 0..self.dim {
                        x[i * self.dim + k] /= self.row_sums[i];
                    }
                }
                Ok(x)
            }
            MassKind::Consistent => {
                if self.factor.is_none() {
                    let t = self.dof_triplets();
                    self.factor = Some(SpdSolver::factor(self.num_nodes * self.dim, &t)?);
                }
                Ok(self.factor.as_ref().unwrap().solve(b))
            }
        }
    }

    /// Kinetic energy (1/2) v^T M v.
    pub fn kinetic_energy(&self, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&self.mul_vec(v))
    }
}

/// Builds the mass matrix of the rest mesh.
pub fn mass_matrix(mesh: &SimplicialMesh, material: &Material, kind: MassKind) -> MassMatrix {
    let dim = mesh.dim;
    let n = mesh.num_nodes();
    let nen = dim + 1;
    // Consistent simplex mass: rho * vol * (1 + delta_ij) / ((d+1)(d+2)).
    let denom = ((nen) * (nen + 1)) as f64;
    let mut node_triplets = Vec::new();
    let mut row_sums = vec![0.0; n];
    for e in 0..mesh.elements.len() {
        let vol = mesh.element_measure(e, &mesh.rest_positions);
        let m_el = material.density * vol;
        let el = &mesh.elements[e];
        match kind {
            MassKind::Consistent => {
                for a in 0..nen {
                    for b in 0..nen {
                        let c = m_el * if a == b { 2.0 } else { 1.0 } / denom;
                        node_triplets.push((el[a], el[b], c));
                        row_sums[el[a]] += c;
                    }
                }
            }
            MassKind::Lumped => {
                for a in 0..nen {
                    let c = m_el / nen as f64;
                    node_triplets.push((el[a], el[a], c));
                    row_sums[el[a]] += c;
                }
            }
        }
    }
    MassMatrix { kind, dim, num_nodes: n, node_triplets, row_sums, factor: None }
}

/// External force vector for a uniform acceleration field: f = M g.
pub fn external_force(mass: &MassMatrix, gravity: &[f64]) -> DVector<f64> {
    let n = mass.num_nodes;
    let mut g = DVector::zeros(n * mass.dim);
    for i in 0..n {
        for k in 0..mass.dim {
            g[i * mass.dim + k] = gravity[k];
        }
    }
    mass.mul_vec(&g)
}

/// Deformation gradient of element `e` at positions `x` (column-major d x d),
/// together with the rest-shape inverse used by the chain rule.
fn deformation_gradient(
    mesh: &SimplicialMesh,
    e: usize,
    x: &[f64],
) -> (DMatrix<f64>, DMatrix<f64>, f64) {
    let d = mesh.dim;
    let el = &mesh.elements[e];
    let rest = |i: usize| mesh.rest_node(el[i]);
    let cur = |i: usize| &x[el[i] * d..(el[i] + 1) * d];
    let mut dm = DMatrix::zeros(d, d);
    let mut ds = DMatrix::zeros(d, d);
    for c in 0..d {
        for r in 0..d {
            dm[(r, c)] = rest(c + 1)[r] - rest(0)[r];
            ds[(r, c)] = cur(c + 1)[r] - cur(0)[r];
        }
    }
    let dm_inv = dm.clone().try_inverse().expect("validated rest element");
    let f = &ds * &dm_inv;
    let vol = mesh.element_measure(e, &mesh.rest_positions);
    (f, dm_inv, vol)
}

/// Energy density and its first/second derivatives w.r.t. F (flattened
/// column-major).
fn density_derivatives(
    material: &Material,
    dim: usize,
    f: &DMatrix<f64>,
    elem: usize,
) -> Result<(f64, DMatrix<f64>, DMatrix<f64>)> {
    let (mu, lambda) = material.lame();
    match material.model {
        MaterialModel::LinearElastic => {
            // Small strain: eps = (F + F^T)/2 - I.
            let mut eps = DMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    eps[(i, j)] = 0.5 * (f[(i, j)] + f[(j, i)]) - if i == j { 1.0 } else { 0.0 };
                }
            }
            let tr = eps.trace();
            let psi = mu * eps.iter().map(|v| v * v).sum::<f64>() + 0.5 * lambda * tr * tr;
            let mut p = DMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    p[(i, j)] = 2.0 * mu * eps[(i, j)] + if i == j { lambda * tr } else { 0.0 };
                }
            }
            // Constant Hessian: dP/dF.
            let n2 = dim * dim;
            let mut hf = DMatrix::zeros(n2, n2);
            for i in 0..dim {
                for j in 0..dim {
                    let col = i + dim * j;
                    // dEps = (e_ij + e_ji)/2; dP = 2 mu dEps + lambda tr(dEps) I
                    for a in 0..dim {
                        for b in 0..dim {
                            let row = a + dim * b;
                            let mut v = 0.0;
                            if a == i && b == j {
                                v += mu;
                            }
                            if a == j && b == i {
                                v += mu;
                            }
                            if i == j && a == b {
                                v += lambda;
                            }
                            hf[(row, col)] = v;
                        }
                    }
                }
            }
            Ok((psi, p, hf))
        }
        MaterialModel::NeoHookean => {
            if dim == 1 {
                return Err(SimError::Config("neo-Hookean requires dim >= 2".into()));
            }
            let jdet = f.determinant();
            if jdet <= 0.0 {
                return Err(SimError::ElementInverted(elem));
            }
            let logj = jdet.ln();
            let ic = f.iter().map(|v| v * v).sum::<f64>();
            let psi = 0.5 * mu * (ic - dim as f64) - mu * logj + 0.5 * lambda * logj * logj;
            let f_inv = f.clone().try_inverse().expect("det > 0");
            let f_inv_t = f_inv.transpose();
            let p = f * mu + &f_inv_t * (lambda * logj - mu);
            // dP(dF) = mu dF + (mu - lambda logJ) F^-T dF^T F^-T
            //          + lambda tr(F^-1 dF) F^-T
            let n2 = dim * dim;
            let mut hf = DMatrix::zeros(n2, n2);
            let coeff = mu - lambda * logj;
            for i in 0..dim {
                for j in 0..dim {
                    let col = i + dim * j;
                    let mut df = DMatrix::zeros(dim, dim);
                    df[(i, j)] = 1.0;
                    let term2 = &f_inv_t * df.transpose() * &f_inv_t * coeff;
                    let tr_finv_df = f_inv.row(j)[i]; // tr(F^-1 e_i e_j^T) = (F^-1)_{ji}
                    let dp = &df * mu + term2 + &f_inv_t * (lambda * tr_finv_df);
                    for a in 0..dim {
                        for b in 0..dim {
                            hf[(a + dim * b, col)] = dp[(a, b)];
                        }
                    }
                }
            }
            Ok((psi, p, hf))
        }
    }
}

/// Linear map G from stacked nodal coordinates to vec(F).
fn shape_gradient(dim: usize, dm_inv: &DMatrix<f64>) -> DMatrix<f64> {
    let n2 = dim * dim;
    let ndof = dim * (dim + 1);
    let mut g = DMatrix::zeros(n2, ndof);
    for c in 0..dim {
        // node c+1, coordinate k contributes dm_inv[(c, j)] to F_{k j}.
        for j in 0..dim {
            for k in 0..dim {
                g[(k + dim * j, (c + 1) * dim + k)] += dm_inv[(c, j)];
                g[(k + dim * j, k)] -= dm_inv[(c, j)];
            }
        }
    }
    g
}

/// Total elastic energy with gradient and per-element Hessian stencils.
pub fn elastic_potential(
    mesh: &SimplicialMesh,
    material: &Material,
    x: &[f64],
) -> Result<PotentialEval> {
    let dim = mesh.dim;
    let mut out = PotentialEval::zero(mesh.num_dofs());
    for e in 0..mesh.elements.len() {
        let (f, dm_inv, vol) = deformation_gradient(mesh, e, x);
        let (psi, p, hf) = density_derivatives(material, dim, &f, e)?;
        let g = shape_gradient(dim, &dm_inv);
        out.energy += vol * psi;
        // Nodal gradient: vol * G^T vec(P).
        let pvec = DVector::from_fn(dim * dim, |r, _| p[(r % dim, r / dim)]);
        let grad_local = g.transpose() * pvec * vol;
        let hess_local = g.transpose() * hf * g * vol;
        let el = &mesh.elements[e];
        let dofs: Vec<usize> =
            el.iter().flat_map(|&v| (0..dim).map(move |k| v * dim + k)).collect();
        for (k, &dof) in dofs.iter().enumerate() {
            out.grad[dof] += grad_local[k];
        }
        out.stencils.push(LocalStencil { dofs, hess: hess_local });
    }
    Ok(out)
}

/// Elastic energy value only (line-search path).
pub fn elastic_energy_value(mesh: &SimplicialMesh, material: &Material, x: &[f64]) -> Result<f64> {
    let dim = mesh.dim;
    let mut acc = 0.0;
    for e in 0..mesh.elements.len() {
        let (f, _, vol) = deformation_gradient(mesh, e, x);
        let (mu, lambda) = material.lame();
        let psi = match material.model {
            MaterialModel::LinearElastic => {
                let mut eps2 = 0.0;
                let mut tr = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        let eij =
                            0.5 * (f[(i, j)] + f[(j, i)]) - if i == j { 1.0 } else { 0.0 };
                        eps2 += eij * eij;
                        if i == j {
                            tr += eij;
                        }
                    }
                }
                mu * eps2 + 0.5 * lambda * tr * tr
            }
            MaterialModel::NeoHookean => {
                let jdet = f.determinant();
                if jdet <= 0.0 {
                    return Err(SimError::ElementInverted(e));
                }
                let logj = jdet.ln();
                let ic = f.iter().map(|v| v * v).sum::<f64>();
                0.5 * mu * (ic - dim as f64) - mu * logj + 0.5 * lambda * logj * logj
            }
        };
        acc += vol * psi;
    }
    Ok(acc)
}

/// Smallest det F over elements (inversion check; +inf for empty meshes).
pub fn min_det_f(mesh: &SimplicialMesh, x: &[f64]) -> f64 {
    let mut min_det = f64::INFINITY;
    for e in 0..mesh.elements.len() {
        let (f, _, _) = deformation_gradient(mesh, e, x);
        min_det = min_det.min(f.determinant());
    }
    min_det
}
